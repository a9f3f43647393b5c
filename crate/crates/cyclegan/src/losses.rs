//! The training objective, built on a graph from already-computed network
//! outputs so each term can be inspected on its own.

use ringforge_autodiff::{Graph, Scalar, Tensor, Var};

use crate::config::{AdversarialLoss, LossWeights};
use crate::Result;

/// `mean|x_rec - x| + mean|y_rec - y|`, where `x_rec = G_BA(G_AB(x))` and
/// `y_rec = G_AB(G_BA(y))`.
pub fn cycle_loss<T: Scalar>(g: &mut Graph<T>, x: Var, x_rec: Var, y: Var, y_rec: Var) -> Result<Var> {
    let a = g.l1(x_rec, x)?;
    let b = g.l1(y_rec, y)?;
    Ok(g.add(a, b)?)
}

/// `mean|G_AB(y) - y| + mean|G_BA(x) - x|`.
pub fn identity_loss<T: Scalar>(g: &mut Graph<T>, x: Var, g_ba_x: Var, y: Var, g_ab_y: Var) -> Result<Var> {
    let a = g.l1(g_ab_y, y)?;
    let b = g.l1(g_ba_x, x)?;
    Ok(g.add(a, b)?)
}

/// Distance of a score map to the all-real (`1`) or all-fake (`0`) target.
pub fn adversarial_term<T: Scalar>(g: &mut Graph<T>, kind: AdversarialLoss, scores: Var, real: bool) -> Result<Var> {
    let target = Tensor::full(g.shape(scores).to_vec(), if real { T::one() } else { T::zero() });
    let t = g.constant(target);
    Ok(match kind {
        AdversarialLoss::Bce => g.bce(scores, t)?,
        AdversarialLoss::LeastSquares => g.mse(scores, t)?,
    })
}

/// Generator side of the adversarial game: fakes should score as real.
pub fn generator_adversarial<T: Scalar>(g: &mut Graph<T>, kind: AdversarialLoss, fake_scores: Var) -> Result<Var> {
    adversarial_term(g, kind, fake_scores, true)
}

/// `scale * (loss(D(real), 1) + loss(D(fake), 0))`; with `scale = 0.5` the
/// discriminator learns at half the rate of an unscaled objective.
pub fn discriminator_loss<T: Scalar>(
    g: &mut Graph<T>,
    kind: AdversarialLoss,
    real_scores: Var,
    fake_scores: Var,
    scale: f64,
) -> Result<Var> {
    let r = adversarial_term(g, kind, real_scores, true)?;
    let f = adversarial_term(g, kind, fake_scores, false)?;
    let s = g.add(r, f)?;
    Ok(g.scale(s, scale))
}

/// `gan_ab + gan_ba + lambda_cyc * cycle + lambda_ident * identity`.
pub fn total_generator_loss<T: Scalar>(
    g: &mut Graph<T>,
    gan_ab: Var,
    gan_ba: Var,
    cycle: Var,
    identity: Var,
    weights: &LossWeights,
) -> Result<Var> {
    let gan = g.add(gan_ab, gan_ba)?;
    let c = g.scale(cycle, weights.lambda_cyc);
    let i = g.scale(identity, weights.lambda_ident);
    let t = g.add(gan, c)?;
    Ok(g.add(t, i)?)
}

/// Plain-number version of [`total_generator_loss`].
pub fn weighted_total(gan_ab: f64, gan_ba: f64, cycle: f64, identity: f64, weights: &LossWeights) -> f64 {
    gan_ab + gan_ba + weights.lambda_cyc * cycle + weights.lambda_ident * identity
}
