//! Dense layer stacks with reverse-mode gradients.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    pub fn tag(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::malformed_at(format!("unknown activation '{other}'"))),
        }
    }

    fn apply(&self, x: &mut Array1<f64>) {
        if let Activation::Tanh = self {
            x.mapv_inplace(f64::tanh);
        }
    }

    /// Derivative expressed through the activated output.
    fn derivative_from_output(&self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

/// `y = act(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn out_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.w.ncols()
    }
}

/// A small dense stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer activations retained for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input of each layer.
    inputs: Vec<Array1<f64>>,
    /// Activated output of each layer.
    outputs: Vec<Array1<f64>>,
}

/// Gradients congruent to an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Mlp {
    /// Glorot-uniform initialization with zero biases.
    pub fn init(shape: &[(usize, usize, Activation)], rng: &mut ChaCha8Rng) -> Self {
        let layers = shape
            .iter()
            .map(|&(out, inp, activation)| {
                let limit = (6.0 / (out + inp) as f64).sqrt();
                let w = Array2::from_shape_fn((out, inp), |_| rng.gen_range(-limit..limit));
                DenseLayer {
                    w,
                    b: Array1::zeros(out),
                    activation,
                }
            })
            .collect();
        Mlp { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim())
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim())
    }

    /// Check the shape chain between consecutive layers.
    pub fn validate(&self, name: &str) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidInput(format!("{name} net has no layers")));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.b.len() != l.out_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "{name} layer {i}: bias length {} != rows {}",
                    l.b.len(),
                    l.out_dim()
                )));
            }
            if i > 0 && l.in_dim() != self.layers[i - 1].out_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "{name} layer {i}: input {} != previous output {}",
                    l.in_dim(),
                    self.layers[i - 1].out_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        let mut cur = None;
        for layer in &self.layers {
            let mut y = layer.w.dot(cur.as_ref().unwrap_or(x)) + &layer.b;
            layer.activation.apply(&mut y);
            cur = Some(y);
        }
        cur.expect("mlp has at least one layer")
    }

    pub fn forward_cached(&self, x: &Array1<f64>) -> (Array1<f64>, MlpCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            inputs.push(cur.clone());
            let mut y = layer.w.dot(&cur) + &layer.b;
            layer.activation.apply(&mut y);
            outputs.push(y.clone());
            cur = y;
        }
        (cur, MlpCache { inputs, outputs })
    }

    /// Reverse pass: returns the input adjoint and accumulates parameter
    /// gradients into `grad`.
    pub fn backward(
        &self,
        cache: &MlpCache,
        d_out: &Array1<f64>,
        grad: &mut MlpGrad,
    ) -> Array1<f64> {
        let mut d = d_out.clone();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            // d_pre = d ⊙ act'(output)
            let out = &cache.outputs[i];
            for (dv, &y) in d.iter_mut().zip(out.iter()) {
                *dv *= layer.activation.derivative_from_output(y);
            }
            let (gw, gb) = &mut grad.layers[i];
            add_outer(gw, &d, &cache.inputs[i]);
            *gb += &d;
            d = layer.w.t().dot(&d);
        }
        d
    }
}

impl MlpGrad {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        MlpGrad {
            layers: mlp
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.w.dim()), Array1::zeros(l.b.len())))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &MlpGrad) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            *w += ow;
            *b += ob;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in &mut self.layers {
            *w *= factor;
            *b *= factor;
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|(w, b)| {
                w.iter().map(|v| v * v).sum::<f64>() + b.iter().map(|v| v * v).sum::<f64>()
            })
            .sum()
    }
}

/// `grad += d ⊗ x` without an intermediate allocation.
fn add_outer(grad: &mut Array2<f64>, d: &Array1<f64>, x: &Array1<f64>) {
    let n = x.len();
    let g = grad.as_slice_mut().expect("standard layout");
    let xs = x.as_slice().expect("standard layout");
    for (i, &di) in d.iter().enumerate() {
        if di == 0.0 {
            continue;
        }
        for (gj, &xj) in g[i * n..(i + 1) * n].iter_mut().zip(xs) {
            *gj += di * xj;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::SeedableRng;

    fn tiny_mlp(seed: u64) -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mlp::init(
            &[(4, 3, Activation::Tanh), (2, 4, Activation::Linear)],
            &mut rng,
        )
    }

    #[test]
    fn forward_matches_cached_forward() {
        let mlp = tiny_mlp(1);
        let x = array![0.3, -1.2, 0.8];
        let (y, _) = mlp.forward_cached(&x);
        assert_eq!(mlp.forward(&x), y);
    }

    #[test]
    fn gradients_match_central_differences() {
        let mlp = tiny_mlp(2);
        let x = array![0.5, -0.4, 1.1];
        // Scalar objective: sum of outputs squared.
        let f = |m: &Mlp, x: &Array1<f64>| -> f64 { m.forward(x).iter().map(|v| v * v).sum() };

        let (y, cache) = mlp.forward_cached(&x);
        let d_out = y.mapv(|v| 2.0 * v);
        let mut grad = MlpGrad::zeros_like(&mlp);
        let d_in = mlp.backward(&cache, &d_out, &mut grad);

        let eps = 1e-6;
        // Input gradient.
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += eps;
            xm[i] -= eps;
            let fd = (f(&mlp, &xp) - f(&mlp, &xm)) / (2.0 * eps);
            assert_abs_diff_eq!(d_in[i], fd, epsilon = 1e-6);
        }
        // Weight gradients, spot-checked on every parameter of layer 0.
        for r in 0..4 {
            for c in 0..3 {
                let mut mp = mlp.clone();
                let mut mm = mlp.clone();
                mp.layers[0].w[(r, c)] += eps;
                mm.layers[0].w[(r, c)] -= eps;
                let fd = (f(&mp, &x) - f(&mm, &x)) / (2.0 * eps);
                assert_abs_diff_eq!(grad.layers[0].0[(r, c)], fd, epsilon = 1e-6);
            }
        }
        for r in 0..2 {
            let mut mp = mlp.clone();
            let mut mm = mlp.clone();
            mp.layers[1].b[r] += eps;
            mm.layers[1].b[r] -= eps;
            let fd = (f(&mp, &x) - f(&mm, &x)) / (2.0 * eps);
            assert_abs_diff_eq!(grad.layers[1].1[r], fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn tanh_outputs_stay_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mlp = Mlp::init(&[(8, 5, Activation::Tanh)], &mut rng);
        let x = array![1e6, -1e6, 3.0, -2.0, 0.0];
        assert!(mlp.forward(&x).iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn shape_chain_validation() {
        let mut mlp = tiny_mlp(4);
        mlp.layers[1].w = Array2::zeros((2, 5));
        assert!(mlp.validate("latent").is_err());
    }
}
