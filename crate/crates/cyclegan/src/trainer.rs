use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ringforge_autodiff::checkpoint::Checkpoint;
use ringforge_autodiff::{adam_step, AdamConfig, AdamState, Graph, Tensor, TensorError, Var};
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::discriminator::Discriminator;
use crate::generator::Generator;
use crate::history::{HistoryBuffer, SamplerState};
use crate::layers::Binding;
use crate::losses::{cycle_loss, discriminator_loss, generator_adversarial, identity_loss, total_generator_loss};
use crate::{CycleGanError, Result};

pub(crate) const CHECKPOINT_KIND: &str = "ringforge-cyclegan";

/// Learning rate for `epoch`: the base rate through phase one, then the
/// base rate divided by `lr_divisor` through phase two.
pub fn lr_schedule(epoch: u32, cfg: &TrainConfig) -> Result<f64> {
    if epoch < cfg.epochs_phase1 {
        Ok(cfg.lr)
    } else if epoch < cfg.total_epochs() {
        Ok(cfg.lr / cfg.lr_divisor)
    } else {
        Err(CycleGanError::EpochOutOfRange {
            epoch,
            total: cfg.total_epochs(),
        })
    }
}

/// Both translation directions and their discriminators. Domain A holds
/// sketches, domain B renders.
#[derive(Debug, Clone)]
pub struct CycleGan {
    pub g_ab: Generator,
    pub g_ba: Generator,
    pub d_a: Discriminator,
    pub d_b: Discriminator,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl CycleGan {
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        Ok(CycleGan {
            g_ab: Generator::new(cfg.generator.clone(), &mut stream_rng(cfg.seed, 0))?,
            g_ba: Generator::new(cfg.generator.clone(), &mut stream_rng(cfg.seed, 1))?,
            d_a: Discriminator::new(cfg.discriminator.clone(), &mut stream_rng(cfg.seed, 2))?,
            d_b: Discriminator::new(cfg.discriminator.clone(), &mut stream_rng(cfg.seed, 3))?,
        })
    }

    pub(crate) fn export(&self, ckpt: &mut Checkpoint) {
        self.g_ab.params().export("g_ab", ckpt);
        self.g_ba.params().export("g_ba", ckpt);
        self.d_a.params().export("d_a", ckpt);
        self.d_b.params().export("d_b", ckpt);
    }

    pub(crate) fn import(&mut self, ckpt: &Checkpoint) -> Result<()> {
        import_params(self.g_ab.params_mut(), "g_ab", ckpt)?;
        import_params(self.g_ba.params_mut(), "g_ba", ckpt)?;
        import_params(self.d_a.params_mut(), "d_a", ckpt)?;
        import_params(self.d_b.params_mut(), "d_b", ckpt)
    }
}

pub(crate) fn import_params(p: &mut ringforge_autodiff::ParamSet, prefix: &str, ckpt: &Checkpoint) -> Result<()> {
    p.import(prefix, ckpt).map_err(|e| match e {
        TensorError::Checkpoint(m) => CycleGanError::CheckpointMismatch(m),
        other => other.into(),
    })
}

/// Scalars recorded for one training step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub epoch: u32,
    pub step: u64,
    pub lr: f64,
    pub gan_ab: f64,
    pub gan_ba: f64,
    pub cycle: f64,
    pub identity: f64,
    pub g_total: f64,
    pub d_a: f64,
    pub d_b: f64,
}

#[derive(Debug, Clone)]
struct Optimizers {
    g_ab: AdamState,
    g_ba: AdamState,
    d_a: AdamState,
    d_b: AdamState,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainerMeta {
    kind: String,
    config: TrainConfig,
    epoch: u32,
    step: u64,
    history_a: (usize, SamplerState),
    history_b: (usize, SamplerState),
    noise: SamplerState,
}

/// Owns the networks, optimizer moments and fake-image pools of one
/// training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainConfig,
    model: CycleGan,
    opt: Optimizers,
    adam: AdamConfig,
    history_a: HistoryBuffer,
    history_b: HistoryBuffer,
    noise: ChaCha8Rng,
    epoch: u32,
    step: u64,
}

fn noise_for(on: bool, rng: &mut ChaCha8Rng, g: &mut Graph, x: Var) -> Option<Var> {
    if !on {
        return None;
    }
    let s = g.shape(x).to_vec();
    let t = Tensor::randn([s[0], 1, s[2], s[3]], 0.0, 1.0, rng);
    Some(g.constant(t))
}

fn finite(term: &'static str, v: f64, step: u64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CycleGanError::NonFinite { term, step })
    }
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let model = CycleGan::new(&config)?;
        let opt = Optimizers {
            g_ab: AdamState::new(model.g_ab.params()),
            g_ba: AdamState::new(model.g_ba.params()),
            d_a: AdamState::new(model.d_a.params()),
            d_b: AdamState::new(model.d_b.params()),
        };
        Ok(Trainer {
            history_a: HistoryBuffer::new(config.history_buffer_size, config.seed.wrapping_add(4)),
            history_b: HistoryBuffer::new(config.history_buffer_size, config.seed.wrapping_add(5)),
            noise: stream_rng(config.seed, 6),
            adam: AdamConfig::default(),
            config,
            model,
            opt,
            epoch: 0,
            step: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn model(&self) -> &CycleGan {
        &self.model
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn history_len(&self) -> (usize, usize) {
        (self.history_a.len(), self.history_b.len())
    }

    /// Marks the current epoch finished.
    pub fn advance_epoch(&mut self) {
        self.epoch += 1;
    }

    pub fn is_finished(&self) -> bool {
        self.epoch >= self.config.total_epochs()
    }

    pub fn current_lr(&self) -> Result<f64> {
        lr_schedule(self.epoch, &self.config)
    }

    /// One alternating update on a batch of sketches `x` and renders `y`
    /// (`[N, 3, S, S]` in `[-1, 1]`): first both generators on the full
    /// objective with the discriminators held fixed, then each
    /// discriminator on its scaled adversarial loss against pooled fakes.
    /// No parameter changes if any loss is non-finite.
    pub fn train_step(&mut self, x: &Tensor, y: &Tensor) -> Result<StepMetrics> {
        let lr = self.current_lr()?;
        let step = self.step + 1;
        let kind = self.config.adversarial_loss;
        let noisy = self.config.generator.noise_channel;
        let m = &self.model;

        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let yv = g.constant(y.clone());
        let n = noise_for(noisy, &mut self.noise, &mut g, xv);
        let fake_b = m.g_ab.forward_with_noise(&mut g, xv, n, Binding::Trainable)?;
        let n = noise_for(noisy, &mut self.noise, &mut g, xv);
        let rec_a = m.g_ba.forward_with_noise(&mut g, fake_b, n, Binding::Trainable)?;
        let n = noise_for(noisy, &mut self.noise, &mut g, xv);
        let fake_a = m.g_ba.forward_with_noise(&mut g, yv, n, Binding::Trainable)?;
        let n = noise_for(noisy, &mut self.noise, &mut g, xv);
        let rec_b = m.g_ab.forward_with_noise(&mut g, fake_a, n, Binding::Trainable)?;
        let n = noise_for(noisy, &mut self.noise, &mut g, xv);
        let id_b = m.g_ab.forward_with_noise(&mut g, yv, n, Binding::Trainable)?;
        let n = noise_for(noisy, &mut self.noise, &mut g, xv);
        let id_a = m.g_ba.forward_with_noise(&mut g, xv, n, Binding::Trainable)?;

        let score_b = m.d_b.forward(&mut g, fake_b, Binding::Frozen)?;
        let score_a = m.d_a.forward(&mut g, fake_a, Binding::Frozen)?;
        let gan_ab = generator_adversarial(&mut g, kind, score_b)?;
        let gan_ba = generator_adversarial(&mut g, kind, score_a)?;
        let cyc = cycle_loss(&mut g, xv, rec_a, yv, rec_b)?;
        let ident = identity_loss(&mut g, xv, id_a, yv, id_b)?;
        let total = total_generator_loss(&mut g, gan_ab, gan_ba, cyc, ident, &self.config.weights)?;

        let scalar = |v: Var| g.value(v).item() as f64;
        let gan_ab_v = finite("gan_ab", scalar(gan_ab), step)?;
        let gan_ba_v = finite("gan_ba", scalar(gan_ba), step)?;
        let cycle_v = finite("cycle", scalar(cyc), step)?;
        let ident_v = finite("identity", scalar(ident), step)?;
        let total_v = finite("g_total", scalar(total), step)?;
        g.backward(total)?;
        let grads_ab = m.g_ab.params().grads(&g);
        let grads_ba = m.g_ba.params().grads(&g);
        let fake_a_t = g.value(fake_a).clone();
        let fake_b_t = g.value(fake_b).clone();
        drop(g);

        // Discriminator gradients depend only on their own parameters and the
        // detached fakes, so they can be taken before any update is applied.
        let pooled_a = self.history_a.query(fake_a_t);
        let pooled_b = self.history_b.query(fake_b_t);
        let (d_a_v, grads_da) = self.discriminator_pass(&self.model.d_a, x, &pooled_a, "d_a", step)?;
        let (d_b_v, grads_db) = self.discriminator_pass(&self.model.d_b, y, &pooled_b, "d_b", step)?;

        let m = &mut self.model;
        adam_step(m.g_ab.params_mut(), &grads_ab, &mut self.opt.g_ab, &self.adam, lr)?;
        adam_step(m.g_ba.params_mut(), &grads_ba, &mut self.opt.g_ba, &self.adam, lr)?;
        adam_step(m.d_a.params_mut(), &grads_da, &mut self.opt.d_a, &self.adam, lr)?;
        adam_step(m.d_b.params_mut(), &grads_db, &mut self.opt.d_b, &self.adam, lr)?;

        self.step = step;
        Ok(StepMetrics {
            epoch: self.epoch,
            step,
            lr,
            gan_ab: gan_ab_v,
            gan_ba: gan_ba_v,
            cycle: cycle_v,
            identity: ident_v,
            g_total: total_v,
            d_a: d_a_v,
            d_b: d_b_v,
        })
    }

    fn discriminator_pass(
        &self,
        d: &Discriminator,
        real: &Tensor,
        fake: &Tensor,
        term: &'static str,
        step: u64,
    ) -> Result<(f64, Vec<Option<Vec<f32>>>)> {
        let mut g = Graph::new();
        let rv = g.constant(real.clone());
        let fv = g.constant(fake.clone());
        let rs = d.forward(&mut g, rv, Binding::Trainable)?;
        let fs = d.forward(&mut g, fv, Binding::Trainable)?;
        let loss = discriminator_loss(&mut g, self.config.adversarial_loss, rs, fs, self.config.d_loss_scale)?;
        let v = finite(term, g.value(loss).item() as f64, step)?;
        g.backward(loss)?;
        Ok((v, d.params().grads(&g)))
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let meta = TrainerMeta {
            kind: CHECKPOINT_KIND.into(),
            config: self.config.clone(),
            epoch: self.epoch,
            step: self.step,
            history_a: (self.history_a.len(), self.history_a.sampler_state()),
            history_b: (self.history_b.len(), self.history_b.sampler_state()),
            noise: SamplerState {
                seed: self.noise.get_seed(),
                stream: self.noise.get_stream(),
                word_pos: self.noise.get_word_pos(),
            },
        };
        let mut ckpt = Checkpoint::new(serde_json::to_value(&meta)?);
        self.model.export(&mut ckpt);
        self.opt.g_ab.export("adam.g_ab", &mut ckpt);
        self.opt.g_ba.export("adam.g_ba", &mut ckpt);
        self.opt.d_a.export("adam.d_a", &mut ckpt);
        self.opt.d_b.export("adam.d_b", &mut ckpt);
        for (name, h) in [("history_a", &self.history_a), ("history_b", &self.history_b)] {
            for (i, t) in h.images().iter().enumerate() {
                ckpt.insert(format!("{name}.{i}"), t.clone());
            }
        }
        Ok(ckpt)
    }

    /// Restores a run exactly as it was when the checkpoint was written.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let meta: TrainerMeta = serde_json::from_value(ckpt.metadata.clone())?;
        if meta.kind != CHECKPOINT_KIND {
            return Err(CycleGanError::CheckpointMismatch(format!("unexpected kind {:?}", meta.kind)));
        }
        let mut t = Trainer::new(meta.config)?;
        t.model.import(ckpt)?;
        let adam = |state: &mut AdamState, prefix: &str| {
            state.import(prefix, ckpt).map_err(|e| CycleGanError::CheckpointMismatch(e.to_string()))
        };
        adam(&mut t.opt.g_ab, "adam.g_ab")?;
        adam(&mut t.opt.g_ba, "adam.g_ba")?;
        adam(&mut t.opt.d_a, "adam.d_a")?;
        adam(&mut t.opt.d_b, "adam.d_b")?;
        let restore = |name: &str, (len, state): (usize, SamplerState), cap: usize| -> Result<HistoryBuffer> {
            let images = (0..len)
                .map(|i| {
                    ckpt.get(&format!("{name}.{i}"))
                        .cloned()
                        .ok_or_else(|| CycleGanError::CheckpointMismatch(format!("missing {name}.{i}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(HistoryBuffer::restore(cap, images, state))
        };
        let cap = t.config.history_buffer_size;
        t.history_a = restore("history_a", meta.history_a, cap)?;
        t.history_b = restore("history_b", meta.history_b, cap)?;
        let mut noise = ChaCha8Rng::from_seed(meta.noise.seed);
        noise.set_stream(meta.noise.stream);
        noise.set_word_pos(meta.noise.word_pos);
        t.noise = noise;
        t.epoch = meta.epoch;
        t.step = meta.step;
        Ok(t)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(self.to_checkpoint()?.save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
