//! Gumbel-Sigmoid relaxation: differentiable approximate Bernoulli sampling
//! over mask logits.

use crate::rng::SeedStream;

/// Clamp constant applied inside both logarithms of the noise transform and
/// inside the entropy term.
pub const CLAMP_EPS: f64 = 1e-10;

/// Sampled masks are kept strictly inside (0, 1) even when the sigmoid
/// saturates in floating point.
pub const MASK_FLOOR: f64 = 1e-12;

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Standard Gumbel noise from a uniform draw:
/// g = -ln(-ln(u + eps) + eps).
pub fn gumbel_noise(u: f64) -> f64 {
    // -ln(u + eps) + eps is mathematically >= eps^2/2, but for u within
    // ~1e-9 of 1 the subtraction cancels below rounding error and can turn
    // negative; the floor keeps the outer log in its domain.
    let inner = (-(u + CLAMP_EPS).ln() + CLAMP_EPS).max(CLAMP_EPS * CLAMP_EPS / 2.0);
    -inner.ln()
}

/// One relaxed Bernoulli draw: sigmoid((logit + g) / tau). The derivative
/// with respect to the logit is z(1-z)/tau.
pub fn gumbel_sample(logit: f64, tau: f64, u: f64) -> f64 {
    debug_assert!(tau > 0.0);
    let z = sigmoid((logit + gumbel_noise(u)) / tau);
    z.clamp(MASK_FLOOR, 1.0 - MASK_FLOOR)
}

/// Fixed uniform draws for one sampling pass over a graph's elements.
#[derive(Debug, Clone)]
pub struct NoiseDraws {
    pub node_u: Vec<f64>,
    pub edge_u: Vec<f64>,
}

impl NoiseDraws {
    pub fn draw(stream: &mut SeedStream, n_nodes: usize, n_edges: usize) -> Self {
        NoiseDraws {
            node_u: (0..n_nodes).map(|_| stream.uniform()).collect(),
            edge_u: (0..n_edges).map(|_| stream.uniform()).collect(),
        }
    }
}
