//! SGD with classical momentum: v <- m*v - lr*g; p <- p + v.

use alloc::format;

use crate::error::{Error, Result};
use crate::params::Tensors;

#[derive(Debug, Clone)]
pub struct Sgd<P: Tensors> {
    pub learning_rate: f64,
    pub momentum: f64,
    pub velocity: P,
}

impl<P: Tensors> Sgd<P> {
    pub fn new(learning_rate: f64, momentum: f64, params: &P) -> Result<Self> {
        if !(learning_rate.is_finite() && learning_rate >= 0.0) {
            return Err(Error::Config("learning rate must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Config(format!(
                "momentum must be in [0, 1), got {momentum}"
            )));
        }
        Ok(Sgd {
            learning_rate,
            momentum,
            velocity: params.zeroed(),
        })
    }

    /// One update. With `clip` set, gradients are rescaled when their global
    /// L2 norm exceeds it. Aborts (params untouched) on non-finite gradients.
    pub fn step(&mut self, params: &mut P, grads: &P, clip: Option<f64>) -> Result<()> {
        if !grads.all_finite() {
            return Err(Error::Numeric("non-finite gradient; step aborted".into()));
        }
        let mut scale = 1.0;
        if let Some(max_norm) = clip {
            let norm = grads.l2_norm();
            if norm > max_norm {
                scale = max_norm / norm;
            }
        }
        self.velocity.scale(self.momentum);
        self.velocity.add_scaled(grads, -self.learning_rate * scale);
        params.add_scaled(&self.velocity, 1.0);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::Mat;
    use alloc::string::String;
    use alloc::vec::Vec;

    #[derive(Clone)]
    struct One(Mat);

    impl Tensors for One {
        fn tensors(&self) -> Vec<(String, &Mat)> {
            alloc::vec![("w".into(), &self.0)]
        }
        fn tensors_mut(&mut self) -> Vec<(String, &mut Mat)> {
            alloc::vec![("w".into(), &mut self.0)]
        }
    }

    #[test]
    fn zero_grads_leave_params_unchanged() {
        let mut p = One(Mat::from_rows(&[vec![1.0, -2.0]]));
        let g = p.zeroed();
        let mut opt = Sgd::new(0.1, 0.5, &p).unwrap();
        opt.step(&mut p, &g, None).unwrap();
        assert_eq!(p.0.as_slice(), &[1.0, -2.0]);
    }

    #[test]
    fn momentum_zero_is_vanilla_sgd() {
        let mut p = One(Mat::from_rows(&[vec![1.0]]));
        let g = One(Mat::from_rows(&[vec![0.5]]));
        let mut opt = Sgd::new(0.2, 0.0, &p).unwrap();
        opt.step(&mut p, &g, None).unwrap();
        assert!((p.0[(0, 0)] - (1.0 - 0.2 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn two_steps_with_momentum_half() {
        // constant gradient g, momentum 0.5, lr 1:
        // v1 = -g, v2 = -1.5 g, total displacement -2.5 g
        let mut p = One(Mat::from_rows(&[vec![0.0]]));
        let g = One(Mat::from_rows(&[vec![1.0]]));
        let mut opt = Sgd::new(1.0, 0.5, &p).unwrap();
        opt.step(&mut p, &g, None).unwrap();
        opt.step(&mut p, &g, None).unwrap();
        assert!((p.0[(0, 0)] - (-2.5)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = One(Mat::from_rows(&[vec![1.0]]));
        let g = One(Mat::from_rows(&[vec![f64::NAN]]));
        let mut opt = Sgd::new(0.1, 0.0, &p).unwrap();
        assert!(matches!(opt.step(&mut p, &g, None), Err(Error::Numeric(_))));
        assert_eq!(p.0[(0, 0)], 1.0);
    }

    #[test]
    fn clip_rescales_large_gradients() {
        let mut p = One(Mat::from_rows(&[vec![0.0, 0.0]]));
        let g = One(Mat::from_rows(&[vec![3.0, 4.0]])); // norm 5
        let mut opt = Sgd::new(1.0, 0.0, &p).unwrap();
        opt.step(&mut p, &g, Some(1.0)).unwrap();
        let norm = (p.0[(0, 0)].powi(2) + p.0[(0, 1)].powi(2)).sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
