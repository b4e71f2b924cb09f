//! Dueling MLP: shared rectified trunk feeding a scalar value head and an
//! action advantage head, combined with the identifiable aggregation
//! `Q(s, a) = V(s) + (A(s, a) - mean_a A(s, a))`.
//!
//! Parameters live in one flat buffer addressed through a [`Layout`]; this
//! keeps the optimizer, checkpointing and finite-difference checks trivial.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Architecture description: widths only, dimensions derive from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub input_dim: usize,
    /// Hidden widths of the shared trunk (ReLU after each).
    pub trunk: Vec<usize>,
    /// Hidden widths of each head (ReLU after each, linear output layer).
    pub head_hidden: Vec<usize>,
    /// Advantage outputs; the value head always emits one scalar.
    pub actions: usize,
}

impl NetShape {
    /// Default desk-scale architecture for a given feature length.
    pub fn default_for(input_dim: usize) -> Self {
        NetShape { input_dim, trunk: vec![128, 128], head_hidden: vec![64], actions: 4 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.actions == 0 {
            return Err(Error::Config("network input and action dimensions must be positive".into()));
        }
        if self.trunk.iter().chain(&self.head_hidden).any(|&w| w == 0) {
            return Err(Error::Config("network layer widths must be positive".into()));
        }
        Ok(())
    }
}

/// One dense layer inside the flat parameter buffer. Weights are row-major
/// `out_dim x in_dim` at `w_off`, biases at `b_off`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w_off: usize,
    pub b_off: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub layers: Vec<LayerSpec>,
    pub trunk_count: usize,
    pub value_count: usize,
    pub adv_count: usize,
    pub total_params: usize,
}

impl Layout {
    pub fn from_shape(shape: &NetShape) -> Layout {
        let mut layers = Vec::new();
        let mut off = 0usize;
        let mut push = |in_dim: usize, out_dim: usize| {
            let w_off = off;
            let b_off = off + in_dim * out_dim;
            off = b_off + out_dim;
            layers.push(LayerSpec { in_dim, out_dim, w_off, b_off });
        };
        let mut prev = shape.input_dim;
        for &w in &shape.trunk {
            push(prev, w);
            prev = w;
        }
        let trunk_out = prev;
        let trunk_count = shape.trunk.len();

        let mut prev = trunk_out;
        for &w in &shape.head_hidden {
            push(prev, w);
            prev = w;
        }
        push(prev, 1);
        let value_count = shape.head_hidden.len() + 1;

        let mut prev = trunk_out;
        for &w in &shape.head_hidden {
            push(prev, w);
            prev = w;
        }
        push(prev, shape.actions);
        let adv_count = shape.head_hidden.len() + 1;

        Layout { layers, trunk_count, value_count, adv_count, total_params: off }
    }

    pub fn trunk_range(&self) -> std::ops::Range<usize> {
        0..self.trunk_count
    }

    pub fn value_range(&self) -> std::ops::Range<usize> {
        self.trunk_count..self.trunk_count + self.value_count
    }

    pub fn adv_range(&self) -> std::ops::Range<usize> {
        let start = self.trunk_count + self.value_count;
        start..start + self.adv_count
    }

    /// Human-readable name of layer `idx`, for checkpoint diagnostics.
    pub fn layer_name(&self, idx: usize) -> String {
        if self.trunk_range().contains(&idx) {
            format!("trunk[{idx}]")
        } else if self.value_range().contains(&idx) {
            format!("value[{}]", idx - self.trunk_count)
        } else {
            format!("advantage[{}]", idx - self.trunk_count - self.value_count)
        }
    }
}

/// Activations recorded during a forward pass, consumed by [`DuelingNet::backward`].
pub struct ForwardCache<F> {
    input: Vec<F>,
    trunk_acts: Vec<Vec<F>>,
    value_acts: Vec<Vec<F>>,
    adv_acts: Vec<Vec<F>>,
    pub q: Vec<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuelingNet<F> {
    shape: NetShape,
    layout: Layout,
    params: Vec<F>,
}

impl<F: Real> DuelingNet<F> {
    /// Uniform fan-in initialization: every weight and bias of a layer is
    /// drawn from `U(-1/sqrt(in_dim), 1/sqrt(in_dim))`.
    pub fn init(shape: NetShape, rng: &mut ChaCha8Rng) -> Result<Self> {
        shape.validate()?;
        let layout = Layout::from_shape(&shape);
        let mut params = vec![F::zero(); layout.total_params];
        for layer in &layout.layers {
            let bound = 1.0 / (layer.in_dim as f64).sqrt();
            for w in &mut params[layer.w_off..layer.w_off + layer.in_dim * layer.out_dim] {
                let u: f64 = rng.gen();
                *w = F::of((2.0 * u - 1.0) * bound);
            }
            for b in &mut params[layer.b_off..layer.b_off + layer.out_dim] {
                let u: f64 = rng.gen();
                *b = F::of((2.0 * u - 1.0) * bound);
            }
        }
        Ok(DuelingNet { shape, layout, params })
    }

    pub fn from_parts(shape: NetShape, params: Vec<F>) -> Result<Self> {
        shape.validate()?;
        let layout = Layout::from_shape(&shape);
        if params.len() != layout.total_params {
            return Err(Error::Load(format!(
                "parameter count mismatch: architecture needs {}, found {}",
                layout.total_params,
                params.len()
            )));
        }
        Ok(DuelingNet { shape, layout, params })
    }

    pub fn shape(&self) -> &NetShape {
        &self.shape
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    /// Overwrite parameters with a bit-exact copy of `other`'s.
    pub fn copy_params_from(&mut self, other: &DuelingNet<F>) {
        debug_assert_eq!(self.layout.total_params, other.layout.total_params);
        self.params.copy_from_slice(&other.params);
    }

    fn dense(&self, layer: &LayerSpec, input: &[F], relu: bool) -> Vec<F> {
        let mut out = Vec::with_capacity(layer.out_dim);
        for o in 0..layer.out_dim {
            let mut acc = self.params[layer.b_off + o];
            let row = layer.w_off + o * layer.in_dim;
            for i in 0..layer.in_dim {
                acc = acc + self.params[row + i] * input[i];
            }
            out.push(if relu { acc.max(F::zero()) } else { acc });
        }
        out
    }

    fn section_forward(&self, range: std::ops::Range<usize>, input: &[F], final_linear: bool) -> Vec<Vec<F>> {
        let mut acts: Vec<Vec<F>> = Vec::with_capacity(range.len());
        let last = range.end - 1;
        for idx in range {
            let relu = !(final_linear && idx == last);
            let prev: &[F] = acts.last().map(|a| a.as_slice()).unwrap_or(input);
            acts.push(self.dense(&self.layout.layers[idx], prev, relu));
        }
        acts
    }

    fn aggregate(value: F, adv: &[F]) -> Vec<F> {
        let mut mean = F::zero();
        for &a in adv {
            mean = mean + a;
        }
        mean = mean / F::of(adv.len() as f64);
        adv.iter().map(|&a| value + a - mean).collect()
    }

    /// Q-values for one feature vector.
    pub fn forward(&self, x: &[F]) -> Result<Vec<F>> {
        self.check_input(x)?;
        let trunk_acts = self.section_forward(self.layout.trunk_range(), x, false);
        let trunk_out: &[F] = trunk_acts.last().map(|a| a.as_slice()).unwrap_or(x);
        let value_acts = self.section_forward(self.layout.value_range(), trunk_out, true);
        let adv_acts = self.section_forward(self.layout.adv_range(), trunk_out, true);
        Ok(Self::aggregate(value_acts.last().unwrap()[0], adv_acts.last().unwrap()))
    }

    /// Forward pass retaining activations for [`Self::backward`].
    pub fn forward_cached(&self, x: &[F]) -> Result<ForwardCache<F>> {
        self.check_input(x)?;
        let trunk_acts = self.section_forward(self.layout.trunk_range(), x, false);
        let trunk_out: Vec<F> = trunk_acts.last().cloned().unwrap_or_else(|| x.to_vec());
        let value_acts = self.section_forward(self.layout.value_range(), &trunk_out, true);
        let adv_acts = self.section_forward(self.layout.adv_range(), &trunk_out, true);
        let q = Self::aggregate(value_acts.last().unwrap()[0], adv_acts.last().unwrap());
        Ok(ForwardCache { input: x.to_vec(), trunk_acts, value_acts, adv_acts, q })
    }

    fn check_input(&self, x: &[F]) -> Result<()> {
        if x.len() != self.shape.input_dim {
            return Err(Error::Usage(format!(
                "feature length {} does not match network input {}",
                x.len(),
                self.shape.input_dim
            )));
        }
        Ok(())
    }

    fn section_backward(
        &self,
        range: std::ops::Range<usize>,
        input: &[F],
        acts: &[Vec<F>],
        mut delta: Vec<F>,
        final_linear: bool,
        grads: &mut [F],
    ) -> Vec<F> {
        let n = range.len();
        for local in (0..n).rev() {
            let layer = &self.layout.layers[range.start + local];
            // Through the rectifier, except at a linear output layer.
            if !(final_linear && local == n - 1) {
                for (d, &a) in delta.iter_mut().zip(&acts[local]) {
                    if a <= F::zero() {
                        *d = F::zero();
                    }
                }
            }
            let prev: &[F] = if local == 0 { input } else { &acts[local - 1] };
            let mut d_prev = vec![F::zero(); layer.in_dim];
            for o in 0..layer.out_dim {
                let d = delta[o];
                grads[layer.b_off + o] = grads[layer.b_off + o] + d;
                let row = layer.w_off + o * layer.in_dim;
                for i in 0..layer.in_dim {
                    grads[row + i] = grads[row + i] + d * prev[i];
                    d_prev[i] = d_prev[i] + self.params[row + i] * d;
                }
            }
            delta = d_prev;
        }
        delta
    }

    /// Accumulate `dL/dparams` into `grads` given `dL/dq`.
    pub fn backward(&self, cache: &ForwardCache<F>, dq: &[F], grads: &mut [F]) {
        debug_assert_eq!(dq.len(), self.shape.actions);
        debug_assert_eq!(grads.len(), self.layout.total_params);
        let mut sum = F::zero();
        for &d in dq {
            sum = sum + d;
        }
        // Q_j = V + A_j - mean(A): dV = sum(dQ), dA_i = dQ_i - sum(dQ)/|A|.
        let d_value = vec![sum];
        let inv = sum / F::of(self.shape.actions as f64);
        let d_adv: Vec<F> = dq.iter().map(|&d| d - inv).collect();

        let trunk_out: &[F] = cache
            .trunk_acts
            .last()
            .map(|a| a.as_slice())
            .unwrap_or(&cache.input);
        let d_from_value =
            self.section_backward(self.layout.value_range(), trunk_out, &cache.value_acts, d_value, true, grads);
        let d_from_adv =
            self.section_backward(self.layout.adv_range(), trunk_out, &cache.adv_acts, d_adv, true, grads);
        let d_trunk_out: Vec<F> = d_from_value
            .iter()
            .zip(&d_from_adv)
            .map(|(&a, &b)| a + b)
            .collect();
        if self.layout.trunk_count > 0 {
            self.section_backward(self.layout.trunk_range(), &cache.input, &cache.trunk_acts, d_trunk_out, false, grads);
        }
    }
}

/// Q-values of `params` at `features` (the dueling aggregation applied).
pub fn q_forward<F: Real>(net: &DuelingNet<F>, features: &[F]) -> Result<Vec<F>> {
    net.forward(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn small_shape() -> NetShape {
        NetShape { input_dim: 2, trunk: vec![3], head_hidden: vec![2], actions: 4 }
    }

    fn zeroed_net(shape: NetShape) -> DuelingNet<f64> {
        let layout = Layout::from_shape(&shape);
        DuelingNet::from_parts(shape, vec![0.0; layout.total_params]).unwrap()
    }

    fn set_head_biases(net: &mut DuelingNet<f64>, value_bias: f64, adv_biases: &[f64]) {
        let v_last = net.layout().value_range().end - 1;
        let a_last = net.layout().adv_range().end - 1;
        let v_spec = net.layout().layers[v_last];
        let a_spec = net.layout().layers[a_last];
        net.params_mut()[v_spec.b_off] = value_bias;
        for (i, &b) in adv_biases.iter().enumerate() {
            net.params_mut()[a_spec.b_off + i] = b;
        }
    }

    #[test]
    fn q_zero_mean_advantages() {
        let mut net = zeroed_net(small_shape());
        set_head_biases(&mut net, 2.0, &[1.0, -1.0, 0.0, 0.0]);
        let q = net.forward(&[0.3, -0.4]).unwrap();
        assert_eq!(q, vec![3.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn q_constant_advantage_invariance() {
        for c in [-7.5, 0.0, 3.25] {
            let mut net = zeroed_net(small_shape());
            set_head_biases(&mut net, 5.0, &[c, c, c, c]);
            let q = net.forward(&[1.0, 1.0]).unwrap();
            assert_eq!(q, vec![5.0, 5.0, 5.0, 5.0]);
        }
    }

    #[test]
    fn forward_matches_manual_layer_evaluation() {
        let shape = NetShape { input_dim: 3, trunk: vec![4], head_hidden: vec![3], actions: 4 };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let net = DuelingNet::<f64>::init(shape, &mut rng).unwrap();
        let x = [0.2, -0.7, 1.3];

        // Manual evaluation straight off the flat buffer.
        let p = net.params();
        let l = &net.layout().layers;
        let dense = |spec: &LayerSpec, input: &[f64], relu: bool| -> Vec<f64> {
            (0..spec.out_dim)
                .map(|o| {
                    let mut acc = p[spec.b_off + o];
                    for i in 0..spec.in_dim {
                        acc += p[spec.w_off + o * spec.in_dim + i] * input[i];
                    }
                    if relu {
                        acc.max(0.0)
                    } else {
                        acc
                    }
                })
                .collect()
        };
        let t = dense(&l[0], &x, true);
        let vh = dense(&l[1], &t, true);
        let v = dense(&l[2], &vh, false)[0];
        let ah = dense(&l[3], &t, true);
        let a = dense(&l[4], &ah, false);
        let mean = a.iter().sum::<f64>() / 4.0;
        let expected: Vec<f64> = a.iter().map(|&ai| v + ai - mean).collect();

        let q = net.forward(&x).unwrap();
        for (qi, ei) in q.iter().zip(&expected) {
            assert!((qi - ei).abs() < 1e-6);
        }
    }

    #[test]
    fn advantage_shift_leaves_q_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = DuelingNet::<f64>::init(small_shape(), &mut rng).unwrap();
        let x = [0.9, -0.2];
        let q0 = net.forward(&x).unwrap();
        let mut shifted = net.clone();
        let a_last = shifted.layout().adv_range().end - 1;
        let spec = shifted.layout().layers[a_last];
        for o in 0..spec.out_dim {
            shifted.params_mut()[spec.b_off + o] += 11.75;
        }
        let q1 = shifted.forward(&x).unwrap();
        for (a, b) in q0.iter().zip(&q1) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let net = zeroed_net(small_shape());
        assert!(matches!(net.forward(&[1.0]).unwrap_err(), Error::Usage(_)));
    }

    #[test]
    fn init_is_seed_deterministic_and_bounded() {
        let shape = small_shape();
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a = DuelingNet::<f64>::init(shape.clone(), &mut r1).unwrap();
        let b = DuelingNet::<f64>::init(shape.clone(), &mut r2).unwrap();
        assert_eq!(a.params(), b.params());
        for layer in &a.layout().layers {
            let bound = 1.0 / (layer.in_dim as f64).sqrt();
            for &w in &a.params()[layer.w_off..layer.b_off + layer.out_dim] {
                assert!(w.abs() <= bound);
            }
        }
    }
}
