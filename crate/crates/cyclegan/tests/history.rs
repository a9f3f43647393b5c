use proptest::prelude::*;
use ringforge_autodiff::Tensor;
use ringforge_cyclegan::HistoryBuffer;

fn tagged(k: usize) -> Tensor {
    Tensor::full([1, 1, 2, 2], k as f32)
}

fn tag(t: &Tensor) -> usize {
    t.data()[0] as usize
}

proptest! {
    #[test]
    fn pool_never_loses_or_invents_images(capacity in 0usize..8, n in 0usize..40, seed in any::<u64>()) {
        let mut pool = HistoryBuffer::new(capacity, seed);
        // Every image offered is, at any time, either held or already returned.
        let mut returned = Vec::new();
        for k in 0..n {
            let out = tag(&pool.query(tagged(k)));
            prop_assert!(pool.len() <= capacity);
            if k < capacity {
                prop_assert_eq!(out, k, "images are passed through while the pool fills");
            }
            returned.push(out);
            let mut seen: Vec<usize> = returned.iter().copied().chain(pool.images().iter().map(tag)).collect();
            // Pass-through during filling both stores and returns an image.
            seen.sort_unstable();
            seen.dedup();
            prop_assert_eq!(seen, (0..=k).collect::<Vec<_>>());
        }
    }

    #[test]
    fn restored_pool_continues_identically(capacity in 1usize..6, warmup in 0usize..20, seed in any::<u64>()) {
        let mut pool = HistoryBuffer::new(capacity, seed);
        for k in 0..warmup {
            pool.query(tagged(k));
        }
        let mut copy = HistoryBuffer::restore(capacity, pool.images().to_vec(), pool.sampler_state());
        for k in warmup..warmup + 20 {
            prop_assert_eq!(tag(&pool.query(tagged(k))), tag(&copy.query(tagged(k))));
        }
    }
}
