//! Parameter container for the fixed 3-layer MLP noise predictor.
//!
//! `ModelParams` owns every weight and bias as flat row-major `f64`
//! buffers and supports exact vector-space arithmetic (add, sub, scale),
//! which the merging and optimizer code builds on.

use rand::Rng;

use crate::error::{Error, Result};

/// A point or noise vector in the 2D data space.
pub type Vec2 = [f64; 2];

/// Dimension of the data space. The whole crate works on 2D points.
pub const DATA_DIM: usize = 2;

/// Network shape: input is the 2D point concatenated with a sinusoidal
/// time embedding, two tanh hidden layers of equal width, linear output
/// back to 2D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Architecture {
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl Architecture {
    pub const fn input_dim(&self) -> usize {
        DATA_DIM + self.embed_dim
    }

    pub const fn output_dim(&self) -> usize {
        DATA_DIM
    }
}

impl Default for Architecture {
    /// Toy default: width 128, embedding 32.
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden_dim: 128,
        }
    }
}

/// Weights and biases of the epsilon predictor, all `f64`.
///
/// Layout: `w1` is `hidden x input`, `w2` is `hidden x hidden`, `w3` is
/// `output x hidden`, each stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

impl ModelParams {
    /// All-zero parameters for the given shape.
    pub fn zeros(arch: Architecture) -> Self {
        let input = arch.input_dim();
        let h = arch.hidden_dim;
        let out = arch.output_dim();
        Self {
            arch,
            w1: vec![0.0; h * input],
            b1: vec![0.0; h],
            w2: vec![0.0; h * h],
            b2: vec![0.0; h],
            w3: vec![0.0; out * h],
            b3: vec![0.0; out],
        }
    }

    /// Seeded uniform init in +-1/sqrt(fan_in) per layer.
    pub fn init<R: Rng>(arch: Architecture, rng: &mut R) -> Self {
        let mut p = Self::zeros(arch);
        let input = arch.input_dim();
        let h = arch.hidden_dim;
        fill_uniform(&mut p.w1, input, rng);
        fill_uniform(&mut p.b1, input, rng);
        fill_uniform(&mut p.w2, h, rng);
        fill_uniform(&mut p.b2, h, rng);
        fill_uniform(&mut p.w3, h, rng);
        fill_uniform(&mut p.b3, h, rng);
        p
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.arch == other.arch
    }

    /// Errors with a diagnostic when two parameter sets cannot be
    /// combined arithmetically.
    pub fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                left: format!("{:?}", self.arch),
                right: format!("{:?}", other.arch),
            })
        }
    }

    /// Number of scalar parameters.
    pub fn len(&self) -> usize {
        self.w1.len()
            + self.b1.len()
            + self.w2.len()
            + self.b2.len()
            + self.w3.len()
            + self.b3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn buffers(&self) -> [&Vec<f64>; 6] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    fn buffers_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ]
    }

    /// Read one entry by flat index in the canonical order
    /// `w1, b1, w2, b2, w3, b3`.
    pub fn entry(&self, idx: usize) -> f64 {
        let mut i = idx;
        for buf in self.buffers() {
            if i < buf.len() {
                return buf[i];
            }
            i -= buf.len();
        }
        panic!("entry index {idx} out of bounds for {} params", self.len());
    }

    pub fn entry_mut(&mut self, idx: usize) -> &mut f64 {
        let total = self.len();
        let mut i = idx;
        for buf in self.buffers_mut() {
            if i < buf.len() {
                return &mut buf[i];
            }
            i -= buf.len();
        }
        panic!("entry index {idx} out of bounds for {total} params");
    }

    /// Apply `f` to every entry of `self` paired with the matching entry
    /// of `other`. Shapes must match (caller bug otherwise).
    pub fn zip_apply(&mut self, other: &Self, mut f: impl FnMut(&mut f64, f64)) {
        assert!(self.same_shape(other), "zip_apply: parameter shape mismatch");
        let o = other.buffers();
        for (buf, ob) in self.buffers_mut().into_iter().zip(o) {
            for (x, &y) in buf.iter_mut().zip(ob.iter()) {
                f(x, y);
            }
        }
    }

    pub fn for_each(&self, mut f: impl FnMut(f64)) {
        for buf in self.buffers() {
            for &x in buf.iter() {
                f(x);
            }
        }
    }

    pub fn map_in_place(&mut self, mut f: impl FnMut(&mut f64)) {
        for buf in self.buffers_mut() {
            for x in buf.iter_mut() {
                f(x);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.zip_apply(other, |x, y| *x += y);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.zip_apply(other, |x, y| *x -= y);
        out
    }

    /// Scalar multiple. `scale(1.0)` returns the params bit-for-bit.
    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        if c == 1.0 {
            return out;
        }
        out.map_in_place(|x| *x *= c);
        out
    }

    /// self += c * other, accumulated in place.
    pub fn add_scaled(&mut self, other: &Self, c: f64) {
        self.zip_apply(other, |x, y| *x += c * y);
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.for_each(|x| ok &= x.is_finite());
        ok
    }

    /// Euclidean norm over all entries.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        self.for_each(|x| s += x * x);
        s.sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        self.for_each(|x| m = m.max(x.abs()));
        m
    }
}

fn fill_uniform<R: Rng>(buf: &mut [f64], fan_in: usize, rng: &mut R) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for x in buf.iter_mut() {
        *x = rng.gen_range(-bound..bound);
    }
}
