//! Frame-level discriminators: two 512-unit ReLU layers and a single
//! sigmoid output giving the posterior that a frame belongs to the real
//! (noisy or clean) set.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::params::{glorot_uniform, sigmoid, Tensors};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscSpec {
    pub input_dim: usize,
    pub hidden: usize,
}

impl DiscSpec {
    /// `D_U`, judging 87-dim noisy-stream frames.
    pub fn noisy() -> Self {
        DiscSpec { input_dim: 87, hidden: 512 }
    }

    /// `D_V`, judging 29-dim clean-stream frames.
    pub fn clean() -> Self {
        DiscSpec { input_dim: 29, hidden: 512 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscParams {
    pub w1: Mat,
    pub b1: Mat,
    pub w2: Mat,
    pub b2: Mat,
    /// 1 x H
    pub w3: Mat,
    /// 1 x 1
    pub b3: Mat,
}

impl Tensors for DiscParams {
    fn tensors(&self) -> Vec<(String, &Mat)> {
        vec![
            ("w1".into(), &self.w1),
            ("b1".into(), &self.b1),
            ("w2".into(), &self.w2),
            ("b2".into(), &self.b2),
            ("w3".into(), &self.w3),
            ("b3".into(), &self.b3),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Mat)> {
        vec![
            ("w1".into(), &mut self.w1),
            ("b1".into(), &mut self.b1),
            ("w2".into(), &mut self.w2),
            ("b2".into(), &mut self.b2),
            ("w3".into(), &mut self.w3),
            ("b3".into(), &mut self.b3),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Discriminator {
    pub spec: DiscSpec,
    pub params: DiscParams,
}

pub struct DiscCache {
    inputs: Mat,
    /// post-ReLU activations
    a1: Mat,
    a2: Mat,
    /// sigmoid outputs
    p: Vec<f64>,
}

impl Discriminator {
    pub fn zeros(spec: DiscSpec) -> Result<Self> {
        if spec.input_dim == 0 || spec.hidden == 0 {
            return Err(Error::Config("discriminator dims must be positive".into()));
        }
        Ok(Discriminator {
            spec,
            params: DiscParams {
                w1: Mat::zeros(spec.hidden, spec.input_dim),
                b1: Mat::zeros(1, spec.hidden),
                w2: Mat::zeros(spec.hidden, spec.hidden),
                b2: Mat::zeros(1, spec.hidden),
                w3: Mat::zeros(1, spec.hidden),
                b3: Mat::zeros(1, 1),
            },
        })
    }

    pub fn init(spec: DiscSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut d = Self::zeros(spec)?;
        glorot_uniform(&mut d.params.w1, rng);
        glorot_uniform(&mut d.params.w2, rng);
        glorot_uniform(&mut d.params.w3, rng);
        Ok(d)
    }

    /// Posterior per frame of a T x input_dim batch; every value is strictly
    /// inside (0, 1).
    pub fn forward(&self, frames: &Mat) -> Result<(Vec<f64>, DiscCache)> {
        if frames.rows() == 0 {
            return Err(Error::Batch("empty frame batch".into()));
        }
        if frames.cols() != self.spec.input_dim {
            return Err(Error::Dim(format!(
                "frame dim {} vs discriminator input {}",
                frames.cols(),
                self.spec.input_dim
            )));
        }
        let t_len = frames.rows();
        let h = self.spec.hidden;
        let mut a1 = Mat::zeros(t_len, h);
        let mut a2 = Mat::zeros(t_len, h);
        let mut p = vec![0.0; t_len];
        for t in 0..t_len {
            {
                let row = a1.row_mut(t);
                row.copy_from_slice(self.params.b1.row(0));
                self.params.w1.mul_vec_add(frames.row(t), row);
                row.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            {
                let row = a2.row_mut(t);
                row.copy_from_slice(self.params.b2.row(0));
                self.params.w2.mul_vec_add(a1.row(t), row);
                row.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            let mut z = self.params.b3[(0, 0)];
            for (w, a) in self.params.w3.row(0).iter().zip(a2.row(t)) {
                z += w * a;
            }
            p[t] = sigmoid(z);
        }
        Ok((
            p.clone(),
            DiscCache {
                inputs: frames.clone(),
                a1,
                a2,
                p,
            },
        ))
    }

    /// Backprop from per-frame dLoss/dPosterior. Returns parameter gradients
    /// and dLoss/dInput.
    pub fn backward(&self, cache: &DiscCache, dp: &[f64]) -> Result<(DiscParams, Mat)> {
        let t_len = cache.inputs.rows();
        if dp.len() != t_len {
            return Err(Error::State(format!(
                "dp length {} vs cached batch {t_len}",
                dp.len()
            )));
        }
        let h = self.spec.hidden;
        let mut grads = self.params.zeroed();
        let mut dinput = Mat::zeros(t_len, self.spec.input_dim);
        let mut da2 = vec![0.0; h];
        let mut da1 = vec![0.0; h];
        for t in 0..t_len {
            let p = cache.p[t];
            let dz = dp[t] * p * (1.0 - p);
            grads.b3[(0, 0)] += dz;
            for (g, a) in grads.w3.row_mut(0).iter_mut().zip(cache.a2.row(t)) {
                *g += dz * a;
            }
            da2.fill(0.0);
            for (d, w) in da2.iter_mut().zip(self.params.w3.row(0)) {
                *d = dz * w;
            }
            // ReLU gate from the stored post-activation
            for (d, a) in da2.iter_mut().zip(cache.a2.row(t)) {
                if *a <= 0.0 {
                    *d = 0.0;
                }
            }
            grads.w2.add_outer(&da2, cache.a1.row(t));
            for (b, d) in grads.b2.row_mut(0).iter_mut().zip(&da2) {
                *b += d;
            }
            da1.fill(0.0);
            self.params.w2.mul_tvec_add(&da2, &mut da1);
            for (d, a) in da1.iter_mut().zip(cache.a1.row(t)) {
                if *a <= 0.0 {
                    *d = 0.0;
                }
            }
            grads.w1.add_outer(&da1, cache.inputs.row(t));
            for (b, d) in grads.b1.row_mut(0).iter_mut().zip(&da1) {
                *b += d;
            }
            self.params.w1.mul_tvec_add(&da1, dinput.row_mut(t));
        }
        Ok((grads, dinput))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::grad_check;
    use rand::{Rng, SeedableRng};

    fn tiny() -> DiscSpec {
        DiscSpec { input_dim: 5, hidden: 16 }
    }

    #[test]
    fn zero_net_outputs_half() {
        let d = Discriminator::zeros(tiny()).unwrap();
        let (p, _) = d.forward(&Mat::from_fn(3, 5, |t, c| (t + c) as f64)).unwrap();
        assert!(p.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn outputs_in_open_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = Discriminator::init(tiny(), &mut rng).unwrap();
        let frames = Mat::from_fn(20, 5, |_, _| rng.random_range(-10.0..10.0));
        let (p, _) = d.forward(&frames).unwrap();
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn dim_and_batch_errors() {
        let d = Discriminator::zeros(tiny()).unwrap();
        assert!(matches!(d.forward(&Mat::zeros(0, 5)), Err(Error::Batch(_))));
        assert!(matches!(d.forward(&Mat::zeros(2, 4)), Err(Error::Dim(_))));
    }

    #[test]
    fn matches_naive_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Discriminator::init(tiny(), &mut rng).unwrap();
        let frames = Mat::from_fn(6, 5, |_, _| rng.random_range(-2.0..2.0));
        let (p, _) = d.forward(&frames).unwrap();
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        for t in 0..6 {
            let x = frames.row(t);
            let mut a1 = vec![0.0; 16];
            for j in 0..16 {
                let mut acc = d.params.b1[(0, j)];
                for (k, xv) in x.iter().enumerate() {
                    acc += d.params.w1[(j, k)] * xv;
                }
                a1[j] = acc.max(0.0);
            }
            let mut a2 = vec![0.0; 16];
            for j in 0..16 {
                let mut acc = d.params.b2[(0, j)];
                for (k, av) in a1.iter().enumerate() {
                    acc += d.params.w2[(j, k)] * av;
                }
                a2[j] = acc.max(0.0);
            }
            let mut z = d.params.b3[(0, 0)];
            for (k, av) in a2.iter().enumerate() {
                z += d.params.w3[(0, k)] * av;
            }
            assert!((p[t] - sig(z)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = Discriminator::init(tiny(), &mut rng).unwrap();
        let frames = Mat::from_fn(3, 5, |_, _| rng.random_range(-1.0..1.0));
        let (_, cache) = d.forward(&frames).unwrap();
        let (grads, dinput) = d.backward(&cache, &[0.0; 3]).unwrap();
        assert!(grads.tensors().iter().all(|(_, t)| t.as_slice().iter().all(|&x| x == 0.0)));
        assert_eq!(dinput.rows(), 3);
        assert_eq!(dinput.cols(), 5);
        assert!(dinput.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn backward_matches_finite_differences() {
        // cross-entropy probe: -mean log p (treat all frames as positives)
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = Discriminator::init(tiny(), &mut rng).unwrap();
        let frames = Mat::from_fn(4, 5, |_, _| rng.random_range(-1.5..1.5));
        let loss_of = |params: &DiscParams| {
            let probe = Discriminator {
                spec: d.spec,
                params: params.clone(),
            };
            let (p, _) = probe.forward(&frames).unwrap();
            -p.iter().map(|v| v.ln()).sum::<f64>() / 4.0
        };
        let (p, cache) = d.forward(&frames).unwrap();
        let dp: Vec<f64> = p.iter().map(|v| -1.0 / (4.0 * v)).collect();
        let (grads, _) = d.backward(&cache, &dp).unwrap();
        let mut check_rng = ChaCha8Rng::seed_from_u64(0);
        let err = grad_check(&d.params, &grads, loss_of, 1e-5, None, &mut check_rng).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }
}
