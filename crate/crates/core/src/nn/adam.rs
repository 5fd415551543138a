use alloc::vec;
use alloc::vec::Vec;

use super::{Gradients, Network};
use crate::{math, Error, Result};

/// Adam moment accumulators, one pair per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    /// Fresh state for tensors of the given lengths, with the usual
    /// `beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`.
    pub fn new(lr: f64, tensor_lengths: &[usize]) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: tensor_lengths.iter().map(|&l| vec![0.0; l]).collect(),
            v: tensor_lengths.iter().map(|&l| vec![0.0; l]).collect(),
        }
    }

    pub fn for_network(net: &Network, lr: f64) -> Self {
        Self::new(lr, &net.config().tensor_lengths())
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update applied in place.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[Vec<f64>]) -> Result<()> {
        let shapes_match = params.len() == self.m.len()
            && grads.len() == self.m.len()
            && params
                .iter()
                .zip(grads)
                .zip(&self.m)
                .all(|((p, g), m)| p.len() == m.len() && g.len() == m.len());
        if !shapes_match {
            return Err(Error::Usage(
                "Adam step: parameter/gradient shapes differ from state".into(),
            ));
        }
        self.t += 1;
        let c1 = 1.0 - math::powi(self.beta1, self.t);
        let c2 = 1.0 - math::powi(self.beta2, self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.lr * m_hat / (math::sqrt(v_hat) + self.eps);
            }
        }
        Ok(())
    }

    /// Applies one update to every tensor of `net`.
    pub fn step_network(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        let mut params = net.tensors_mut();
        self.step(&mut params, &grads.tensors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let lr = 1e-4;
        let mut state = AdamState::new(lr, &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let g = vec![0.3, -7.0, 1e-3];
        let before = p.clone();
        state.step(&mut [&mut p[..]], core::slice::from_ref(&g)).unwrap();
        for i in 0..3 {
            let moved = (before[i] - p[i]).abs();
            let want = lr * g[i].abs() / (g[i].abs() + 1e-8);
            assert!((moved - want).abs() <= 1e-9 * want, "{moved} vs {want}");
        }
    }

    #[test]
    fn zero_gradient_is_noop() {
        let mut state = AdamState::new(0.1, &[2]);
        let mut p = vec![1.0, 2.0];
        for _ in 0..10 {
            state.step(&mut [&mut p[..]], &[vec![0.0, 0.0]]).unwrap();
        }
        assert_eq!(p, vec![1.0, 2.0]);
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut state = AdamState::new(0.0, &[2]);
        let mut p = vec![1.0, 2.0];
        state.step(&mut [&mut p[..]], &[vec![5.0, -1.0]]).unwrap();
        assert_eq!(p, vec![1.0, 2.0]);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut state = AdamState::new(1e-3, &[2, 1]);
            let mut a = vec![0.1, 0.2];
            let mut b = vec![0.3];
            for k in 0..5 {
                let g = vec![vec![f64::from(k), -1.0], vec![0.5]];
                state.step(&mut [&mut a[..], &mut b[..]], &g).unwrap();
            }
            (a, b, state)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_is_usage_error() {
        let mut state = AdamState::new(0.1, &[2]);
        let mut p = [1.0];
        assert!(matches!(
            state.step(&mut [&mut p[..]], &[vec![0.0]]),
            Err(Error::Usage(_))
        ));
    }
}
