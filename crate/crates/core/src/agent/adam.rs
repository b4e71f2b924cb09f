//! Adaptive moment estimation over a flat parameter buffer.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Adam<F> {
    m: Vec<F>,
    v: Vec<F>,
    t: u64,
    pub lr: F,
    pub beta1: F,
    pub beta2: F,
    pub eps: F,
}

impl<F: Real> Adam<F> {
    pub fn new(param_count: usize, lr: F) -> Self {
        Adam {
            m: vec![F::zero(); param_count],
            v: vec![F::zero(); param_count],
            t: 0,
            lr,
            beta1: F::of(0.9),
            beta2: F::of(0.999),
            eps: F::of(1e-8),
        }
    }

    /// Reset moments and the step counter (used when transferring a model).
    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = F::zero());
        self.v.iter_mut().for_each(|x| *x = F::zero());
        self.t = 0;
    }

    pub fn step(&mut self, params: &mut [F], grads: &[F]) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let one = F::one();
        let bc1 = one - self.beta1.powi(self.t as i32);
        let bc2 = one - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (one - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (one - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] = params[i] - self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_untouched() {
        let mut opt = Adam::<f64>::new(3, 0.01);
        let mut params = vec![1.0, -2.0, 0.5];
        let before = params.clone();
        opt.step(&mut params, &[0.0, 0.0, 0.0]);
        assert_eq!(params, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With bias correction, the very first update is lr * sign(g) up to
        // the epsilon term.
        let mut opt = Adam::<f64>::new(1, 0.1);
        let mut params = vec![0.0];
        opt.step(&mut params, &[2.5]);
        assert!((params[0] + 0.1).abs() < 1e-6);
    }

    #[test]
    fn descends_a_quadratic() {
        let mut opt = Adam::<f64>::new(1, 0.05);
        let mut params = vec![3.0];
        for _ in 0..500 {
            let g = 2.0 * params[0];
            opt.step(&mut params, &[g]);
        }
        assert!(params[0].abs() < 0.05);
    }
}
