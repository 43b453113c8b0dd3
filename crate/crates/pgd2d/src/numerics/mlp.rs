//! The fixed 3-layer MLP epsilon predictor and its exact reverse-mode
//! gradients.
//!
//! The architecture never changes: `[x, time_embedding(t)] -> tanh ->
//! tanh -> linear`, so forward and backward are written out by hand
//! instead of going through a graph.

use crate::error::{Error, Result};

use super::params::{Architecture, ModelParams, Vec2, DATA_DIM};

/// Sinusoidal features of the normalized step `t / total` at
/// geometrically spaced frequencies. Deterministic in `t`.
#[derive(Debug, Clone, Copy)]
pub struct TimeEmbedding {
    pub dim: usize,
}

impl TimeEmbedding {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 2 && dim % 2 == 0, "embedding dim must be even");
        Self { dim }
    }

    /// Frequencies span 1..=1000 geometrically over `dim / 2` slots.
    pub fn embed(&self, t: usize, total: usize) -> Vec<f64> {
        let tau = t as f64 / total as f64;
        let half = self.dim / 2;
        let mut out = Vec::with_capacity(self.dim);
        for i in 0..half {
            let expo = if half > 1 {
                i as f64 / (half - 1) as f64
            } else {
                0.0
            };
            let freq = 1000f64.powf(expo);
            let angle = std::f64::consts::TAU * freq * tau;
            out.push(angle.sin());
            out.push(angle.cos());
        }
        out
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub output: Vec2,
}

/// Forward pass without validation; callers on hot paths check state
/// finiteness themselves.
pub fn forward_cached(params: &ModelParams, x: Vec2, t: usize, total: usize) -> ForwardCache {
    let arch = params.arch;
    let emb = TimeEmbedding::new(arch.embed_dim).embed(t, total);
    let mut input = Vec::with_capacity(arch.input_dim());
    input.extend_from_slice(&x);
    input.extend_from_slice(&emb);

    let h = arch.hidden_dim;
    let mut h1 = vec![0.0; h];
    matvec_bias(&params.w1, &input, &params.b1, &mut h1);
    for v in h1.iter_mut() {
        *v = v.tanh();
    }
    let mut h2 = vec![0.0; h];
    matvec_bias(&params.w2, &h1, &params.b2, &mut h2);
    for v in h2.iter_mut() {
        *v = v.tanh();
    }
    let mut out = [0.0; DATA_DIM];
    matvec_bias(&params.w3, &h2, &params.b3, &mut out);

    ForwardCache {
        input,
        h1,
        h2,
        output: out,
    }
}

/// Evaluate the noise prediction at `(x, t)`.
///
/// `t` is 1-based and must lie in `1..=total`; non-finite inputs are
/// rejected with a diagnostic.
pub fn mlp_forward(params: &ModelParams, x: Vec2, t: usize, total: usize) -> Result<Vec2> {
    if !(x[0].is_finite() && x[1].is_finite()) {
        return Err(Error::NonFinite {
            what: "mlp input",
            value: x.to_vec(),
        });
    }
    if t < 1 || t > total {
        return Err(Error::StepOutOfRange { t, max: total });
    }
    Ok(forward_cached(params, x, t, total).output)
}

/// Gradients of `upstream . eps(x, t)` with respect to the parameters
/// and the point `x`.
pub fn mlp_backward(
    params: &ModelParams,
    x: Vec2,
    t: usize,
    total: usize,
    upstream: Vec2,
) -> Result<(ModelParams, Vec2)> {
    if !(upstream[0].is_finite() && upstream[1].is_finite()) {
        return Err(Error::NonFinite {
            what: "upstream gradient",
            value: upstream.to_vec(),
        });
    }
    if !(x[0].is_finite() && x[1].is_finite()) {
        return Err(Error::NonFinite {
            what: "mlp input",
            value: x.to_vec(),
        });
    }
    if t < 1 || t > total {
        return Err(Error::StepOutOfRange { t, max: total });
    }
    let cache = forward_cached(params, x, t, total);
    let mut grads = ModelParams::zeros(params.arch);
    let dx = backward_from_cache(params, &cache, upstream, &mut grads);
    Ok((grads, dx))
}

/// Accumulate gradients of `upstream . output` into `grads` and return
/// the gradient with respect to the 2D input point.
pub fn backward_from_cache(
    params: &ModelParams,
    cache: &ForwardCache,
    upstream: Vec2,
    grads: &mut ModelParams,
) -> Vec2 {
    let arch = params.arch;
    let h = arch.hidden_dim;

    // Output layer: out = w3 h2 + b3.
    let mut d_h2 = vec![0.0; h];
    for r in 0..DATA_DIM {
        let g = upstream[r];
        grads.b3[r] += g;
        let row = &params.w3[r * h..(r + 1) * h];
        let grow = &mut grads.w3[r * h..(r + 1) * h];
        for c in 0..h {
            grow[c] += g * cache.h2[c];
            d_h2[c] += g * row[c];
        }
    }

    // h2 = tanh(w2 h1 + b2).
    let mut d_h1 = vec![0.0; h];
    for r in 0..h {
        let dz = d_h2[r] * (1.0 - cache.h2[r] * cache.h2[r]);
        grads.b2[r] += dz;
        let row = &params.w2[r * h..(r + 1) * h];
        let grow = &mut grads.w2[r * h..(r + 1) * h];
        for c in 0..h {
            grow[c] += dz * cache.h1[c];
            d_h1[c] += dz * row[c];
        }
    }

    // h1 = tanh(w1 input + b1).
    let input_dim = arch.input_dim();
    let mut d_input = [0.0; DATA_DIM];
    for r in 0..h {
        let dz = d_h1[r] * (1.0 - cache.h1[r] * cache.h1[r]);
        grads.b1[r] += dz;
        let row = &params.w1[r * input_dim..(r + 1) * input_dim];
        let grow = &mut grads.w1[r * input_dim..(r + 1) * input_dim];
        for c in 0..input_dim {
            grow[c] += dz * cache.input[c];
        }
        // Only the point coordinates feed back; the embedding is a
        // function of t alone.
        d_input[0] += dz * row[0];
        d_input[1] += dz * row[1];
    }

    d_input
}

fn matvec_bias(w: &[f64], x: &[f64], b: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = b[r];
        for (wi, xi) in row.iter().zip(x.iter()) {
            acc += wi * xi;
        }
        *o = acc;
    }
}

/// Convenience used by tests and the architecture registry: shapes that
/// keep finite-difference sweeps cheap.
pub fn tiny_arch() -> Architecture {
    Architecture {
        embed_dim: 4,
        hidden_dim: 8,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fd::numerical_gradient;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn zero_network_outputs_zero() {
        let p = ModelParams::zeros(tiny_arch());
        let out = mlp_forward(&p, [0.3, -1.2], 5, 100).unwrap();
        assert_eq!(out, [0.0, 0.0]);
    }

    #[test]
    fn constant_head_ignores_input() {
        let mut p = ModelParams::init(tiny_arch(), &mut StdRng::seed_from_u64(1));
        p.w3.iter_mut().for_each(|v| *v = 0.0);
        p.b3 = vec![1.0, -1.0];
        for (x, t) in [([0.0, 0.0], 1), ([5.0, -3.0], 50), ([-0.1, 0.7], 100)] {
            assert_eq!(mlp_forward(&p, x, t, 100).unwrap(), [1.0, -1.0]);
        }
    }

    /// Straight-line reimplementation of the forward pass used as an
    /// independent oracle. Written with explicit index arithmetic and no
    /// shared helpers.
    fn forward_oracle(p: &ModelParams, x: Vec2, t: usize, total: usize) -> Vec2 {
        let half = p.arch.embed_dim / 2;
        let tau = t as f64 / total as f64;
        let mut input = vec![x[0], x[1]];
        for i in 0..half {
            let e = if half > 1 {
                i as f64 / (half as f64 - 1.0)
            } else {
                0.0
            };
            let ang = 2.0 * std::f64::consts::PI * 1000f64.powf(e) * tau;
            input.push(ang.sin());
            input.push(ang.cos());
        }
        let nin = input.len();
        let h = p.arch.hidden_dim;
        let mut a1 = vec![0.0; h];
        for r in 0..h {
            let mut s = p.b1[r];
            for c in 0..nin {
                s += p.w1[r * nin + c] * input[c];
            }
            a1[r] = s.tanh();
        }
        let mut a2 = vec![0.0; h];
        for r in 0..h {
            let mut s = p.b2[r];
            for c in 0..h {
                s += p.w2[r * h + c] * a1[c];
            }
            a2[r] = s.tanh();
        }
        let mut out = [0.0; 2];
        for r in 0..2 {
            let mut s = p.b3[r];
            for c in 0..h {
                s += p.w3[r * h + c] * a2[c];
            }
            out[r] = s;
        }
        out
    }

    #[test]
    fn forward_matches_independent_reimplementation() {
        let p = ModelParams::init(
            Architecture {
                embed_dim: 32,
                hidden_dim: 128,
            },
            &mut StdRng::seed_from_u64(42),
        );
        let got = mlp_forward(&p, [0.5, -0.5], 10, 100).unwrap();
        let want = forward_oracle(&p, [0.5, -0.5], 10, 100);
        assert_eq!(got, want, "forward disagrees with straight-line oracle");
    }

    #[test]
    fn forward_is_pure() {
        let p = ModelParams::init(tiny_arch(), &mut StdRng::seed_from_u64(9));
        let a = mlp_forward(&p, [1.0, 2.0], 7, 100).unwrap();
        let b = mlp_forward(&p, [1.0, 2.0], 7, 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_finite_and_out_of_range() {
        let p = ModelParams::zeros(tiny_arch());
        assert!(mlp_forward(&p, [f64::NAN, 0.0], 1, 100).is_err());
        assert!(mlp_forward(&p, [0.0, 0.0], 0, 100).is_err());
        assert!(mlp_forward(&p, [0.0, 0.0], 101, 100).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let p = ModelParams::init(tiny_arch(), &mut StdRng::seed_from_u64(11));
        let (g, dx) = mlp_backward(&p, [0.4, 0.2], 3, 100, [0.0, 0.0]).unwrap();
        assert_eq!(g.norm(), 0.0);
        assert_eq!(dx, [0.0, 0.0]);
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let p = ModelParams::init(tiny_arch(), &mut StdRng::seed_from_u64(12));
        let u = [0.7, -0.3];
        let (g1, dx1) = mlp_backward(&p, [0.4, 0.2], 3, 100, u).unwrap();
        let (g2, dx2) = mlp_backward(&p, [0.4, 0.2], 3, 100, [2.0 * u[0], 2.0 * u[1]]).unwrap();
        for i in 0..g1.len() {
            assert!((g2.entry(i) - 2.0 * g1.entry(i)).abs() < 1e-12);
        }
        assert!((dx2[0] - 2.0 * dx1[0]).abs() < 1e-12);
        assert!((dx2[1] - 2.0 * dx1[1]).abs() < 1e-12);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(13);
        for trial in 0..5 {
            let p = ModelParams::init(tiny_arch(), &mut rng);
            let x = [0.3 + 0.1 * trial as f64, -0.2];
            let u = [0.9, -1.1];
            let (g, _) = mlp_backward(&p, x, 4, 100, u).unwrap();
            let num = numerical_gradient(
                &|q: &ModelParams| {
                    let o = forward_cached(q, x, 4, 100).output;
                    u[0] * o[0] + u[1] * o[1]
                },
                &p,
                1e-6,
            );
            let mut worst = 0.0f64;
            for i in 0..p.len() {
                let a = g.entry(i);
                let n = num.entry(i);
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
                worst = worst.max(rel);
            }
            assert!(worst < 1e-5, "relative error {worst}");
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let p = ModelParams::init(tiny_arch(), &mut StdRng::seed_from_u64(14));
        let u = [0.5, 1.5];
        let x = [0.25, -0.75];
        let (_, dx) = mlp_backward(&p, x, 6, 100, u).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let op = forward_cached(&p, xp, 6, 100).output;
            let om = forward_cached(&p, xm, 6, 100).output;
            let num =
                (u[0] * (op[0] - om[0]) + u[1] * (op[1] - om[1])) / (2.0 * h);
            assert!((dx[k] - num).abs() < 1e-6, "coord {k}: {} vs {num}", dx[k]);
        }
    }

    #[test]
    fn embedding_has_declared_length_and_is_deterministic() {
        let emb = TimeEmbedding::new(32);
        let a = emb.embed(10, 100);
        let b = emb.embed(10, 100);
        assert_eq!(a.len(), 32);
        assert_eq!(a, b);
        assert_ne!(a, emb.embed(11, 100));
    }
}
