//! Parameter collections: a common trait over named tensors, Glorot-uniform
//! initialization, the gradient reversal layer and a finite-difference
//! gradient checker.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::Mat;

/// A parameter (or gradient, or velocity) collection: an ordered set of
/// named matrices. Gradients and optimizer buffers reuse the same concrete
/// type as the parameters they mirror, so shapes agree by construction.
pub trait Tensors: Clone {
    fn tensors(&self) -> Vec<(String, &Mat)>;
    fn tensors_mut(&mut self) -> Vec<(String, &mut Mat)>;

    fn param_count(&self) -> usize {
        self.tensors()
            .iter()
            .map(|(_, t)| t.rows() * t.cols())
            .sum()
    }

    /// Same shapes, all zeros.
    fn zeroed(&self) -> Self {
        let mut c = self.clone();
        for (_, t) in c.tensors_mut() {
            t.fill(0.0);
        }
        c
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.all_finite())
    }

    /// self += s * other.
    fn add_scaled(&mut self, other: &Self, s: f64) {
        let others = other.tensors();
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(others) {
            a.add_scaled(b, s);
        }
    }

    fn scale(&mut self, s: f64) {
        for (_, t) in self.tensors_mut() {
            t.scale(s);
        }
    }

    fn l2_norm(&self) -> f64 {
        libm::sqrt(self.tensors().iter().map(|(_, t)| t.frob_sq()).sum())
    }

    fn get_flat(&self, mut idx: usize) -> f64 {
        for (_, t) in self.tensors() {
            let n = t.rows() * t.cols();
            if idx < n {
                return t.as_slice()[idx];
            }
            idx -= n;
        }
        panic!("flat index out of range");
    }

    fn set_flat(&mut self, mut idx: usize, v: f64) {
        for (_, t) in self.tensors_mut() {
            let n = t.rows() * t.cols();
            if idx < n {
                t.as_mut_slice()[idx] = v;
                return;
            }
            idx -= n;
        }
        panic!("flat index out of range");
    }

    /// Elementwise maximum absolute difference; shapes must agree.
    fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for ((_, a), (_, b)) in self.tensors().into_iter().zip(other.tensors()) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                m = m.max((x - y).abs());
            }
        }
        m
    }
}

/// Fill a weight matrix with uniform(-r, r), r = sqrt(6 / (fan_in + fan_out)),
/// where fan_in = cols and fan_out = rows.
pub fn glorot_uniform(w: &mut Mat, rng: &mut ChaCha8Rng) {
    let r = libm::sqrt(6.0 / (w.rows() + w.cols()) as f64);
    for v in w.as_mut_slice() {
        *v = rng.random_range(-r..r);
    }
}

/// Gradient reversal layer, backward side: the forward pass of a GRL is the
/// identity, so only the gradient transform needs code. Returns
/// -lambda * grad.
pub fn grl(grad: &Mat, lambda: f64) -> Mat {
    assert!(lambda >= 0.0, "grl strength must be nonnegative");
    let mut out = grad.clone();
    out.scale(-lambda);
    out
}

/// Central-difference gradient check. `analytic` is compared against
/// (loss(p + eps e_i) - loss(p - eps e_i)) / (2 eps) for every parameter, or
/// for a random subset of at least `sample` indices when the collection is
/// larger. Returns the maximum relative error
/// |a - n| / max(|a|, |n|, 1e-8).
pub fn grad_check<P: Tensors>(
    params: &P,
    analytic: &P,
    mut loss: impl FnMut(&P) -> f64,
    eps: f64,
    sample: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let n = params.param_count();
    let indices: Vec<usize> = match sample {
        Some(k) if k < n => {
            let mut idx: Vec<usize> = (0..n).collect();
            // partial Fisher-Yates for the first k picks
            for i in 0..k {
                let j = rng.random_range(i..n);
                idx.swap(i, j);
            }
            idx.truncate(k);
            idx
        }
        _ => (0..n).collect(),
    };

    let mut probe = params.clone();
    let mut max_rel: f64 = 0.0;
    for i in indices {
        let orig = params.get_flat(i);
        probe.set_flat(i, orig + eps);
        let lp = loss(&probe);
        probe.set_flat(i, orig - eps);
        let lm = loss(&probe);
        probe.set_flat(i, orig);
        if !lp.is_finite() || !lm.is_finite() {
            return Err(Error::Numeric("non-finite loss during gradient check".into()));
        }
        let numeric = (lp - lm) / (2.0 * eps);
        let a = analytic.get_flat(i);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}
