//! The recurrent cell: three dense sub-networks for long-term dynamics,
//! control influence, and observable prediction.
//!
//! An encoder step runs only the latent-dynamics part; a decoder step
//! runs the full cell. The latent-dynamics weights are one shared block:
//! encoder and decoder read the same parameters.

use ndarray::Array1;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::Observation;
use crate::window::DelayWindow;

use super::mlp::{Activation, Mlp, MlpCache, MlpGrad};
use super::model::ModelDims;

/// Weights of one cell.
///
/// * `latent` — maps `[h, flat(zu_history)]` to the next latent state.
/// * `control` — maps `flat(u_recent)` to control features.
/// * `output` — maps `[h', control features]` to the predicted observable.
#[derive(Debug, Clone, PartialEq)]
pub struct CellWeights {
    pub latent: Mlp,
    pub control: Mlp,
    pub output: Mlp,
}

impl CellWeights {
    pub fn init(dims: &ModelDims, rng: &mut ChaCha8Rng) -> Self {
        let zu = dims.zu_flat_len();
        let ur = dims.u_recent_len();
        CellWeights {
            latent: Mlp::init(
                &[
                    (dims.hidden_width, dims.latent_dim + zu, Activation::Tanh),
                    (dims.latent_dim, dims.hidden_width, Activation::Tanh),
                ],
                rng,
            ),
            control: Mlp::init(&[(dims.ctrl_features, ur, Activation::Tanh)], rng),
            output: Mlp::init(
                &[
                    (
                        dims.hidden_width,
                        dims.latent_dim + dims.ctrl_features,
                        Activation::Tanh,
                    ),
                    (dims.obs_dim, dims.hidden_width, Activation::Linear),
                ],
                rng,
            ),
        }
    }

    pub fn validate(&self, dims: &ModelDims) -> Result<()> {
        self.latent.validate("latent")?;
        self.control.validate("control")?;
        self.output.validate("output")?;
        let checks = [
            ("latent input", self.latent.in_dim(), dims.latent_dim + dims.zu_flat_len()),
            ("latent output", self.latent.out_dim(), dims.latent_dim),
            ("control input", self.control.in_dim(), dims.u_recent_len()),
            ("control output", self.control.out_dim(), dims.ctrl_features),
            (
                "output input",
                self.output.in_dim(),
                dims.latent_dim + dims.ctrl_features,
            ),
            ("output output", self.output.out_dim(), dims.obs_dim),
        ];
        for (what, got, expect) in checks {
            if got != expect {
                return Err(Error::DimensionMismatch(format!(
                    "{what} is {got}, expected {expect}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        [&self.latent, &self.control, &self.output].iter().all(|net| {
            net.layers
                .iter()
                .all(|l| l.w.iter().all(|v| v.is_finite()) && l.b.iter().all(|v| v.is_finite()))
        })
    }

    pub fn num_params(&self) -> usize {
        [&self.latent, &self.control, &self.output]
            .iter()
            .flat_map(|net| net.layers.iter())
            .map(|l| l.w.len() + l.b.len())
            .sum()
    }
}

/// Gradients congruent to [`CellWeights`].
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrad {
    pub latent: MlpGrad,
    pub control: MlpGrad,
    pub output: MlpGrad,
}

impl CellGrad {
    pub fn zeros_like(w: &CellWeights) -> Self {
        CellGrad {
            latent: MlpGrad::zeros_like(&w.latent),
            control: MlpGrad::zeros_like(&w.control),
            output: MlpGrad::zeros_like(&w.output),
        }
    }

    pub fn add_assign(&mut self, other: &CellGrad) {
        self.latent.add_assign(&other.latent);
        self.control.add_assign(&other.control);
        self.output.add_assign(&other.output);
    }

    pub fn scale(&mut self, factor: f64) {
        self.latent.scale(factor);
        self.control.scale(factor);
        self.output.scale(factor);
    }

    pub fn norm(&self) -> f64 {
        (self.latent.sq_norm() + self.control.sq_norm() + self.output.sq_norm()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [&self.latent, &self.control, &self.output].iter().all(|g| {
            g.layers
                .iter()
                .all(|(w, b)| w.iter().all(|v| v.is_finite()) && b.iter().all(|v| v.is_finite()))
        })
    }
}

/// Forward caches of one decoder cell.
#[derive(Debug, Clone)]
pub struct CellCache {
    pub latent: MlpCache,
    pub control: MlpCache,
    pub output: MlpCache,
}

/// Flatten a delay window into the latent-net feature vector (pairs in
/// time order, `z` before `u` within a pair).
pub fn flatten_zu(window: &DelayWindow) -> Array1<f64> {
    let mut out = Vec::new();
    for (z, u) in &window.zu_history {
        out.extend(z.0.iter().copied());
        out.extend(u.0.iter().copied());
    }
    Array1::from_vec(out)
}

/// Flatten the recent-control suffix in time order.
pub fn flatten_u_recent(window: &DelayWindow) -> Array1<f64> {
    let mut out = Vec::new();
    for u in &window.u_recent {
        out.extend(u.0.iter().copied());
    }
    Array1::from_vec(out)
}

/// One full decoder step on flattened inputs: returns the next latent
/// state and the predicted observable.
pub fn cell_forward_flat(
    weights: &CellWeights,
    h: &Array1<f64>,
    zu_flat: &Array1<f64>,
    u_recent_flat: &Array1<f64>,
) -> (Array1<f64>, Array1<f64>) {
    let mut lat_in = Array1::zeros(h.len() + zu_flat.len());
    lat_in.slice_mut(ndarray::s![..h.len()]).assign(h);
    lat_in.slice_mut(ndarray::s![h.len()..]).assign(zu_flat);
    let h_next = weights.latent.forward(&lat_in);

    let features = weights.control.forward(u_recent_flat);
    let mut out_in = Array1::zeros(h_next.len() + features.len());
    out_in.slice_mut(ndarray::s![..h_next.len()]).assign(&h_next);
    out_in.slice_mut(ndarray::s![h_next.len()..]).assign(&features);
    let z_next = weights.output.forward(&out_in);
    (h_next, z_next)
}

/// Spec-level cell step on a delay window. Inputs are expected in
/// normalized units; the function itself is pure.
pub fn cell_forward(
    weights: &CellWeights,
    h: &Array1<f64>,
    window: &DelayWindow,
) -> Result<(Array1<f64>, Observation)> {
    window.validate()?;
    let zu_flat = flatten_zu(window);
    let u_flat = flatten_u_recent(window);
    if weights.latent.in_dim() != h.len() + zu_flat.len() {
        return Err(Error::DimensionMismatch(format!(
            "latent net expects {} inputs, window provides {}",
            weights.latent.in_dim(),
            h.len() + zu_flat.len()
        )));
    }
    if weights.control.in_dim() != u_flat.len() {
        return Err(Error::DimensionMismatch(format!(
            "control net expects {} inputs, window provides {}",
            weights.control.in_dim(),
            u_flat.len()
        )));
    }
    let (h_next, z_next) = cell_forward_flat(weights, h, &zu_flat, &u_flat);
    Ok((h_next, Observation(z_next)))
}

/// Encoder step: latent-dynamics part only.
pub fn encoder_forward(latent: &Mlp, h: &Array1<f64>, zu_flat: &Array1<f64>) -> Array1<f64> {
    let mut lat_in = Array1::zeros(h.len() + zu_flat.len());
    lat_in.slice_mut(ndarray::s![..h.len()]).assign(h);
    lat_in.slice_mut(ndarray::s![h.len()..]).assign(zu_flat);
    latent.forward(&lat_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ControlVector;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use rand::SeedableRng;

    fn dims() -> ModelDims {
        ModelDims {
            encoder_len: 2,
            horizon: 2,
            delays: 1,
            latent_dim: 3,
            obs_dim: 2,
            ctrl_dim: 1,
            hidden_width: 5,
            ctrl_features: 4,
        }
    }

    fn window(d: usize, p: usize, m: usize, fill: f64) -> DelayWindow {
        let zu_history = (0..2 * d + 2)
            .map(|i| {
                (
                    Observation(Array1::from_elem(p, fill + i as f64 * 0.1)),
                    ControlVector(Array1::from_elem(m, -fill + i as f64 * 0.05)),
                )
            })
            .collect::<Vec<_>>();
        let u_recent = zu_history[d + 1..].iter().map(|(_, u)| u.clone()).collect();
        DelayWindow {
            zu_history,
            u_recent,
            delays: d,
        }
    }

    fn zero_out(mlp: &mut Mlp) {
        for l in &mut mlp.layers {
            l.w = Array2::zeros(l.w.dim());
        }
    }

    #[test]
    fn zero_weights_give_bias_image() {
        let d = dims();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut w = CellWeights::init(&d, &mut rng);
        zero_out(&mut w.latent);
        zero_out(&mut w.control);
        zero_out(&mut w.output);
        w.latent.layers[1].b = array![0.2, -0.3, 0.5];
        w.output.layers[1].b = array![1.5, -2.5];

        let win = window(d.delays, d.obs_dim, d.ctrl_dim, 0.7);
        let h = array![9.0, -9.0, 3.0];
        let (h_next, z_next) = cell_forward(&w, &h, &win).unwrap();
        // Latent output is the bias image of the latent stack.
        assert_abs_diff_eq!(h_next[0], 0.2_f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(h_next[1], (-0.3_f64).tanh(), epsilon = 1e-15);
        // Output head is linear, so the prediction is its bias.
        assert_eq!(z_next.0, array![1.5, -2.5]);
    }

    #[test]
    fn pass_through_output_net_reproduces_latent() {
        // Output net = single linear layer [I | 0]: z' equals h'.
        let d = ModelDims {
            latent_dim: 2,
            obs_dim: 2,
            ..dims()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut w = CellWeights::init(&d, &mut rng);
        let mut eye = Array2::zeros((2, 2 + d.ctrl_features));
        eye[(0, 0)] = 1.0;
        eye[(1, 1)] = 1.0;
        w.output = Mlp {
            layers: vec![super::super::mlp::DenseLayer {
                w: eye,
                b: Array1::zeros(2),
                activation: Activation::Linear,
            }],
        };
        let win = window(d.delays, d.obs_dim, d.ctrl_dim, 0.4);
        let h = array![0.1, -0.2];
        let (h_next, z_next) = cell_forward(&w, &h, &win).unwrap();
        assert_eq!(z_next.0, h_next);
    }

    #[test]
    fn finite_inputs_give_finite_outputs() {
        let d = dims();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = CellWeights::init(&d, &mut rng);
        let win = window(d.delays, d.obs_dim, d.ctrl_dim, 123.0);
        let h = array![500.0, -500.0, 0.0];
        let (h_next, z_next) = cell_forward(&w, &h, &win).unwrap();
        assert!(h_next.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
        assert!(z_next.0.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let d = dims();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = CellWeights::init(&d, &mut rng);
        let win = window(d.delays + 1, d.obs_dim, d.ctrl_dim, 0.1);
        let h = array![0.0, 0.0, 0.0];
        assert!(cell_forward(&w, &h, &win).is_err());
    }

    #[test]
    fn validate_checks_wiring() {
        let d = dims();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = CellWeights::init(&d, &mut rng);
        w.validate(&d).unwrap();
        let bad = ModelDims {
            latent_dim: 7,
            ..dims()
        };
        assert!(w.validate(&bad).is_err());
    }
}
