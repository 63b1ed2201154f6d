//! Forward rollout and backpropagation through time.
//!
//! One rollout runs M encoder cells over the measured history (latent
//! only), then N decoder cells that feed every predicted observable back
//! into the delay windows of the later cells. The backward pass follows
//! the same graph in reverse: adjoints flow through the latent chain,
//! through the prediction-feedback edges, and into the shared cell
//! weights, which accumulate one summed gradient across all time steps.

use ndarray::Array1;
use rayon::prelude::*;

use crate::datagen::{WindowSample, WindowedDataset};
use crate::error::{Error, Result};
use crate::types::{ControlVector, Observation, TimeSeries};

use super::cell::{CellCache, CellGrad};
use super::model::SurrogateModel;

/// Assemble the latent-net input `[h | flat(zu window at k)]`.
fn latent_input(
    h: &Array1<f64>,
    zs: &[Array1<f64>],
    us: &[Array1<f64>],
    k: usize,
    delays: usize,
) -> Array1<f64> {
    let mut buf = Vec::with_capacity(h.len() + (2 * delays + 2) * (zs[0].len() + us[0].len()));
    buf.extend(h.iter().copied());
    for i in k - 2 * delays - 1..=k {
        buf.extend(zs[i].iter().copied());
        buf.extend(us[i].iter().copied());
    }
    Array1::from_vec(buf)
}

/// Assemble the control-net input `flat(u_{k-d..k})`.
fn control_input(us: &[Array1<f64>], k: usize, delays: usize) -> Array1<f64> {
    let mut buf = Vec::with_capacity((delays + 1) * us[0].len());
    for u in &us[k - delays..=k] {
        buf.extend(u.iter().copied());
    }
    Array1::from_vec(buf)
}

/// One forward pass over normalized inputs, optionally retaining the
/// per-cell activations for a backward pass.
pub(crate) struct Rollout {
    /// Normalized observable timeline: history then predictions.
    zs: Vec<Array1<f64>>,
    /// Normalized control timeline: history (last slot = first planned
    /// control) then the remaining planned controls.
    us: Vec<Array1<f64>>,
    anchor: usize,
    n_steps: usize,
    enc_caches: Vec<super::mlp::MlpCache>,
    dec_caches: Vec<CellCache>,
}

impl Rollout {
    /// Normalize a measured history plus planned controls and roll forward.
    ///
    /// The final history control slot is superseded by `controls[0]`.
    pub(crate) fn run(
        model: &SurrogateModel,
        history: &TimeSeries,
        controls: &[ControlVector],
        want_cache: bool,
    ) -> Result<Rollout> {
        let dims = &model.dims;
        if history.len() != dims.history_len() {
            return Err(Error::SeriesTooShort {
                needed: dims.history_len(),
                got: history.len(),
            });
        }
        if history.obs_dim() != dims.obs_dim || history.ctrl_dim() != dims.ctrl_dim {
            return Err(Error::DimensionMismatch(format!(
                "history is (p={}, m={}), model expects (p={}, m={})",
                history.obs_dim(),
                history.ctrl_dim(),
                dims.obs_dim,
                dims.ctrl_dim
            )));
        }
        if controls.is_empty() {
            return Err(Error::InvalidInput("prediction needs at least one control".into()));
        }
        if let Some(bad) = controls.iter().find(|u| u.dim() != dims.ctrl_dim) {
            return Err(Error::DimensionMismatch(format!(
                "planned control has {} channels, model expects {}",
                bad.dim(),
                dims.ctrl_dim
            )));
        }
        let zs: Vec<Array1<f64>> = history
            .samples()
            .iter()
            .map(|s| model.norm.normalize_z(&s.z.0))
            .collect();
        let mut us: Vec<Array1<f64>> = history
            .samples()
            .iter()
            .map(|s| model.norm.normalize_u(&s.u.0))
            .collect();
        let ctrl: Vec<Array1<f64>> = controls
            .iter()
            .map(|u| model.norm.normalize_u(&u.0))
            .collect();
        let last = us.len() - 1;
        us[last] = ctrl[0].clone();
        Self::run_norm(model, zs, us, &ctrl, want_cache)
    }

    /// Roll a pre-normalized training sample forward.
    pub(crate) fn run_sample(
        model: &SurrogateModel,
        sample: &WindowSample,
        n_steps: usize,
        want_cache: bool,
    ) -> Result<Rollout> {
        let zs: Vec<Array1<f64>> = sample
            .history
            .iter()
            .map(|(z, _)| model.norm.normalize_z(z))
            .collect();
        let mut us: Vec<Array1<f64>> = sample
            .history
            .iter()
            .map(|(_, u)| model.norm.normalize_u(u))
            .collect();
        let ctrl: Vec<Array1<f64>> = sample.controls[..n_steps]
            .iter()
            .map(|u| model.norm.normalize_u(u))
            .collect();
        let last = us.len() - 1;
        us[last] = ctrl[0].clone();
        Self::run_norm(model, zs, us, &ctrl, want_cache)
    }

    fn run_norm(
        model: &SurrogateModel,
        mut zs: Vec<Array1<f64>>,
        mut us: Vec<Array1<f64>>,
        ctrl: &[Array1<f64>],
        want_cache: bool,
    ) -> Result<Rollout> {
        let dims = &model.dims;
        let d = dims.delays;
        let anchor = zs.len() - 1;
        let n_steps = ctrl.len();
        let m_enc = dims.encoder_len;

        let mut h = Array1::zeros(dims.latent_dim);
        let mut enc_caches = Vec::with_capacity(if want_cache { m_enc } else { 0 });
        for k in anchor - m_enc..anchor {
            let lat_in = latent_input(&h, &zs, &us, k, d);
            if want_cache {
                let (h_next, cache) = model.cell.latent.forward_cached(&lat_in);
                enc_caches.push(cache);
                h = h_next;
            } else {
                h = model.cell.latent.forward(&lat_in);
            }
        }

        let mut dec_caches = Vec::with_capacity(if want_cache { n_steps } else { 0 });
        for (j, c) in ctrl.iter().enumerate() {
            let k = anchor + j;
            if j > 0 {
                us.push(c.clone());
            }
            let lat_in = latent_input(&h, &zs, &us, k, d);
            let ur_in = control_input(&us, k, d);
            if want_cache {
                let (h_next, lat_cache) = model.cell.latent.forward_cached(&lat_in);
                let (features, ctl_cache) = model.cell.control.forward_cached(&ur_in);
                let mut out_in = Vec::with_capacity(h_next.len() + features.len());
                out_in.extend(h_next.iter().copied());
                out_in.extend(features.iter().copied());
                let (z_next, out_cache) = model
                    .cell
                    .output
                    .forward_cached(&Array1::from_vec(out_in));
                dec_caches.push(CellCache {
                    latent: lat_cache,
                    control: ctl_cache,
                    output: out_cache,
                });
                zs.push(z_next);
                h = h_next;
            } else {
                let h_next = model.cell.latent.forward(&lat_in);
                let features = model.cell.control.forward(&ur_in);
                let mut out_in = Vec::with_capacity(h_next.len() + features.len());
                out_in.extend(h_next.iter().copied());
                out_in.extend(features.iter().copied());
                zs.push(model.cell.output.forward(&Array1::from_vec(out_in)));
                h = h_next;
            }
        }

        Ok(Rollout {
            zs,
            us,
            anchor,
            n_steps,
            enc_caches,
            dec_caches,
        })
    }

    /// Normalized predictions `z_{a+1} .. z_{a+n}`.
    pub(crate) fn predictions_norm(&self) -> &[Array1<f64>] {
        &self.zs[self.anchor + 1..]
    }

    /// Reverse pass. `d_preds[j]` is the loss gradient with respect to
    /// the normalized prediction at step `j`. Returns the accumulated
    /// weight gradient and the adjoints of the normalized planned controls.
    pub(crate) fn backward(
        &self,
        model: &SurrogateModel,
        d_preds: &[Array1<f64>],
    ) -> (CellGrad, Vec<Array1<f64>>) {
        assert_eq!(d_preds.len(), self.n_steps, "one adjoint per prediction");
        assert!(
            !self.dec_caches.is_empty(),
            "backward requires a cached rollout"
        );
        let dims = &model.dims;
        let d = dims.delays;
        let p = dims.obs_dim;
        let m = dims.ctrl_dim;
        let a = self.anchor;

        let mut grad = CellGrad::zeros_like(&model.cell);
        let mut d_zs: Vec<Array1<f64>> = vec![Array1::zeros(p); self.zs.len()];
        let mut d_us: Vec<Array1<f64>> = vec![Array1::zeros(m); self.us.len()];
        let mut d_h = Array1::zeros(dims.latent_dim);

        for j in (0..self.n_steps).rev() {
            let k = a + j;
            let cache = &self.dec_caches[j];
            // Prediction adjoint: external loss term plus feedback into
            // the windows of later cells.
            let g_z = &d_preds[j] + &d_zs[k + 1];

            let d_out_in = model.cell.output.backward(&cache.output, &g_z, &mut grad.output);
            let mut d_h_total = d_out_in.slice(ndarray::s![..dims.latent_dim]).to_owned();
            d_h_total += &d_h;
            let d_features = d_out_in.slice(ndarray::s![dims.latent_dim..]).to_owned();

            let d_ur = model
                .cell
                .control
                .backward(&cache.control, &d_features, &mut grad.control);
            for (idx, i) in (k - d..=k).enumerate() {
                let slice = d_ur.slice(ndarray::s![idx * m..(idx + 1) * m]);
                d_us[i] += &slice;
            }

            let d_lat_in = model
                .cell
                .latent
                .backward(&cache.latent, &d_h_total, &mut grad.latent);
            d_h = d_lat_in.slice(ndarray::s![..dims.latent_dim]).to_owned();
            let pairs = d_lat_in.slice(ndarray::s![dims.latent_dim..]);
            for (idx, i) in (k - 2 * d - 1..=k).enumerate() {
                let base = idx * (p + m);
                d_zs[i] += &pairs.slice(ndarray::s![base..base + p]);
                d_us[i] += &pairs.slice(ndarray::s![base + p..base + p + m]);
            }
        }

        for cache in self.enc_caches.iter().rev() {
            // Encoder windows hold only measured constants; just the
            // latent chain and the weight gradient matter here.
            let d_lat_in = model.cell.latent.backward(cache, &d_h, &mut grad.latent);
            d_h = d_lat_in.slice(ndarray::s![..dims.latent_dim]).to_owned();
        }

        let d_ctrl = (0..self.n_steps).map(|j| d_us[a + j].clone()).collect();
        (grad, d_ctrl)
    }
}

fn check_geometry(model: &SurrogateModel, data: &WindowedDataset, n_steps: usize) -> Result<()> {
    let dims = &model.dims;
    if data.encoder_len != dims.encoder_len
        || data.delays != dims.delays
        || data.obs_dim != dims.obs_dim
        || data.ctrl_dim != dims.ctrl_dim
    {
        return Err(Error::DimensionMismatch(format!(
            "dataset geometry (M={}, d={}, p={}, m={}) does not match model (M={}, d={}, p={}, m={})",
            data.encoder_len,
            data.delays,
            data.obs_dim,
            data.ctrl_dim,
            dims.encoder_len,
            dims.delays,
            dims.obs_dim,
            dims.ctrl_dim
        )));
    }
    if n_steps == 0 || n_steps > data.horizon {
        return Err(Error::InvalidInput(format!(
            "requested {n_steps} prediction steps, dataset holds {}",
            data.horizon
        )));
    }
    if data.is_empty() {
        return Err(Error::InvalidInput("dataset holds no samples".into()));
    }
    Ok(())
}

/// Squared error of one rolled-out sample against its targets, summed
/// over steps and channels (normalized units).
fn sample_sq_error(model: &SurrogateModel, rollout: &Rollout, sample: &WindowSample) -> f64 {
    rollout
        .predictions_norm()
        .iter()
        .zip(&sample.targets)
        .map(|(pred, target)| {
            let t = model.norm.normalize_z(target);
            pred.iter()
                .zip(t.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// Mean squared `n_steps`-step prediction error over samples, steps, and
/// channels, in normalized units.
pub fn loss_n_steps(model: &SurrogateModel, data: &WindowedDataset, n_steps: usize) -> Result<f64> {
    check_geometry(model, data, n_steps)?;
    let total: f64 = data
        .samples
        .par_iter()
        .with_min_len(64)
        .map(|s| {
            let rollout = Rollout::run_sample(model, s, n_steps, false)
                .expect("geometry checked before rollout");
            sample_sq_error(model, &rollout, s)
        })
        .sum();
    let denom = (data.len() * n_steps * model.dims.obs_dim) as f64;
    Ok(total / denom)
}

/// Full-horizon prediction loss.
pub fn loss(model: &SurrogateModel, data: &WindowedDataset) -> Result<f64> {
    loss_n_steps(model, data, model.dims.horizon.min(data.horizon))
}

/// Loss and exact weight gradient over the indexed batch via reverse
/// accumulation through all decoder and encoder cells.
///
/// The per-sample gradients are computed in parallel and summed in index
/// order, so the result is deterministic for a fixed batch.
pub fn grad_weights_batch(
    model: &SurrogateModel,
    data: &WindowedDataset,
    indices: &[usize],
    n_steps: usize,
) -> Result<(f64, CellGrad)> {
    check_geometry(model, data, n_steps)?;
    if indices.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let denom = (indices.len() * n_steps * model.dims.obs_dim) as f64;
    let chunk = indices.len().div_ceil(rayon::current_num_threads().max(1) * 2).max(1);
    let partials: Vec<(f64, CellGrad)> = indices
        .par_chunks(chunk)
        .map(|chunk_indices| {
            let mut sum = 0.0;
            let mut grad = CellGrad::zeros_like(&model.cell);
            for &i in chunk_indices {
                let sample = &data.samples[i];
                let rollout = Rollout::run_sample(model, sample, n_steps, true)
                    .expect("geometry checked before rollout");
                sum += sample_sq_error(model, &rollout, sample);
                let d_preds: Vec<Array1<f64>> = rollout
                    .predictions_norm()
                    .iter()
                    .zip(&sample.targets)
                    .map(|(pred, target)| {
                        let t = model.norm.normalize_z(target);
                        (pred - &t) * (2.0 / denom)
                    })
                    .collect();
                let (g, _) = rollout.backward(model, &d_preds);
                grad.add_assign(&g);
            }
            (sum, grad)
        })
        .collect();

    let mut total = 0.0;
    let mut grad = CellGrad::zeros_like(&model.cell);
    for (s, g) in partials {
        total += s;
        grad.add_assign(&g);
    }
    Ok((total / denom, grad))
}

/// Exact gradient of the full-horizon loss over the whole dataset.
pub fn grad_weights(model: &SurrogateModel, data: &WindowedDataset) -> Result<(f64, CellGrad)> {
    let indices: Vec<usize> = (0..data.len()).collect();
    grad_weights_batch(model, data, &indices, model.dims.horizon.min(data.horizon))
}

/// Predictions plus the gradient of the tracking term
/// `sum_j ||z_tracked(j) - ref(j)||^2` with respect to each planned
/// control, in physical units.
#[derive(Debug, Clone)]
pub struct ControlGradient {
    pub predictions: Vec<Observation>,
    pub tracking_cost: f64,
    pub grads: Vec<ControlVector>,
}

pub fn grad_controls(
    model: &SurrogateModel,
    history: &TimeSeries,
    controls: &[ControlVector],
    mask: &[usize],
    refs: &[Array1<f64>],
) -> Result<ControlGradient> {
    if refs.len() != controls.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} reference steps for {} planned controls",
            refs.len(),
            controls.len()
        )));
    }
    if let Some(bad) = mask.iter().find(|&&c| c >= model.dims.obs_dim) {
        return Err(Error::InvalidInput(format!(
            "tracked component {bad} out of range for p={}",
            model.dims.obs_dim
        )));
    }
    let rollout = Rollout::run(model, history, controls, true)?;

    let mut tracking_cost = 0.0;
    let mut predictions = Vec::with_capacity(controls.len());
    let mut d_preds = Vec::with_capacity(controls.len());
    for (j, pred_norm) in rollout.predictions_norm().iter().enumerate() {
        let pred_phys = model.norm.denormalize_z(pred_norm);
        let mut d_phys = Array1::zeros(model.dims.obs_dim);
        for (c_idx, &c) in mask.iter().enumerate() {
            let diff = pred_phys[c] - refs[j][c_idx];
            tracking_cost += diff * diff;
            d_phys[c] = 2.0 * diff;
        }
        // Chain through denormalization: z_phys = z_norm * std + mean.
        d_preds.push(&d_phys * &model.norm.z_std);
        predictions.push(Observation(pred_phys));
    }

    let (_, d_ctrl_norm) = rollout.backward(model, &d_preds);
    let grads = d_ctrl_norm
        .into_iter()
        .map(|g| ControlVector(&g / &model.norm.u_std))
        .collect();
    Ok(ControlGradient {
        predictions,
        tracking_cost,
        grads,
    })
}
