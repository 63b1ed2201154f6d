//! Training-data generation: excitation signals, trajectory collection,
//! symmetry augmentation, and window slicing.

mod spline;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::plants::{Plant, PlantState};
use crate::types::{ControlSeries, ControlVector, Observation, Sample, TimeSeries};
use crate::window::DelayWindow;

pub use spline::NaturalCubicSpline;

/// Random-anchor excitation protocol: an independent uniform draw per
/// channel every `hold_s` seconds, spline-interpolated onto the lag grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSpec {
    pub hold_s: f64,
    /// Per-channel (min, max) anchor bounds; the channel count is implied.
    pub bounds: Vec<(f64, f64)>,
    /// Lag time of the generated schedule.
    pub dt: f64,
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for ExcitationSpec {
    fn default() -> Self {
        ExcitationSpec {
            hold_s: 0.5,
            bounds: vec![(-2.0, 2.0)],
            dt: 0.1,
            duration_s: 100.0,
            seed: 0,
        }
    }
}

impl ExcitationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("excitation dt must be positive, got {}", self.dt)));
        }
        let ratio = self.hold_s / self.dt;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "hold_s {} must be an integer multiple of dt {}",
                self.hold_s, self.dt
            )));
        }
        if self.duration_s + 1e-12 < self.hold_s {
            return Err(Error::InvalidInput(format!(
                "duration {} s is below one hold interval of {} s",
                self.duration_s, self.hold_s
            )));
        }
        if self.bounds.is_empty() {
            return Err(Error::InvalidInput("excitation needs at least one channel".into()));
        }
        for (i, (lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "channel {i} bounds ({lo}, {hi}) are not an ordered finite pair"
                )));
            }
        }
        Ok(())
    }

    pub fn ctrl_dim(&self) -> usize {
        self.bounds.len()
    }

    fn steps(&self) -> usize {
        (self.duration_s / self.dt).round() as usize
    }
}

/// Draw the per-channel anchor values for `spec`. Exposed so tests can
/// replay the exact stream that `generate_excitation` consumes.
pub fn draw_anchors(spec: &ExcitationSpec, n_anchors: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut anchors = vec![Vec::with_capacity(n_anchors); spec.bounds.len()];
    for _ in 0..n_anchors {
        for (c, (lo, hi)) in spec.bounds.iter().enumerate() {
            anchors[c].push(rng.gen_range(*lo..*hi));
        }
    }
    anchors
}

/// Number of anchors needed to cover the lag grid of `spec`.
pub fn anchor_count(spec: &ExcitationSpec) -> usize {
    let steps = spec.steps();
    if steps <= 1 {
        return 1;
    }
    let hold_steps = (spec.hold_s / spec.dt).round() as usize;
    (steps - 1).div_ceil(hold_steps) + 1
}

/// Generate an excitation schedule: uniform anchors every `hold_s`,
/// natural cubic spline onto the `dt` grid, clamped to the bounds.
/// Deterministic for a fixed seed.
pub fn generate_excitation(spec: &ExcitationSpec) -> Result<ControlSeries> {
    spec.validate()?;
    let steps = spec.steps();
    let n_anchors = anchor_count(spec);
    let anchors = draw_anchors(spec, n_anchors);

    let mut per_channel: Vec<Vec<f64>> = Vec::with_capacity(spec.bounds.len());
    for (c, (lo, hi)) in spec.bounds.iter().enumerate() {
        if n_anchors == 1 {
            per_channel.push(vec![anchors[c][0]; steps]);
            continue;
        }
        let s = NaturalCubicSpline::fit(spec.hold_s, &anchors[c]);
        per_channel.push(
            (0..steps)
                .map(|i| s.eval(i as f64 * spec.dt).clamp(*lo, *hi))
                .collect(),
        );
    }

    let controls = (0..steps)
        .map(|i| {
            ControlVector(Array1::from_iter(
                per_channel.iter().map(|ch| ch[i]),
            ))
        })
        .collect();
    Ok(ControlSeries {
        dt: spec.dt,
        t0: 0.0,
        controls,
    })
}

/// Roll the plant under a zero-order-held control schedule, recording
/// `(observe(y_i), u_i)` per lag step.
pub fn collect_trajectory(
    plant: &dyn Plant,
    excitation: &ControlSeries,
    y0: &PlantState,
) -> Result<TimeSeries> {
    if excitation.is_empty() {
        return Err(Error::InvalidInput("excitation schedule is empty".into()));
    }
    if excitation.ctrl_dim() != plant.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "excitation has {} channels, plant expects {}",
            excitation.ctrl_dim(),
            plant.input_dim()
        )));
    }
    if !y0.is_finite() {
        return Err(Error::InvalidInput("initial state has non-finite components".into()));
    }
    let mut y = y0.clone();
    let mut samples = Vec::with_capacity(excitation.len());
    for (i, u) in excitation.controls.iter().enumerate() {
        let t = excitation.t0 + i as f64 * excitation.dt;
        samples.push(Sample {
            z: plant.observe(&y),
            u: u.clone(),
        });
        y = plant
            .step(&y, u, excitation.dt)
            .map_err(|e| e.offset_time(t))?;
    }
    TimeSeries::new(excitation.dt, excitation.t0, samples)
}

/// Signed permutation: `out[i] = sign[i] * x[index[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPermutation {
    pub index: Vec<usize>,
    pub sign: Vec<f64>,
}

impl SignedPermutation {
    pub fn identity(n: usize) -> Self {
        SignedPermutation {
            index: (0..n).collect(),
            sign: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn apply(&self, x: &Array1<f64>) -> Array1<f64> {
        Array1::from_iter(
            self.index
                .iter()
                .zip(&self.sign)
                .map(|(&j, &s)| s * x[j]),
        )
    }

    fn validate(&self) -> Result<()> {
        let n = self.index.len();
        if self.sign.len() != n {
            return Err(Error::DimensionMismatch(
                "signed permutation index/sign lengths differ".into(),
            ));
        }
        let mut seen = vec![false; n];
        for &j in &self.index {
            if j >= n || seen[j] {
                return Err(Error::InvalidInput("index list is not a permutation".into()));
            }
            seen[j] = true;
        }
        for &s in &self.sign {
            if s != 1.0 && s != -1.0 {
                return Err(Error::InvalidInput(format!("sign {s} must be +1 or -1")));
            }
        }
        // Involution: applying the map twice is the identity.
        for i in 0..n {
            let j = self.index[i];
            if self.index[j] != i || self.sign[i] * self.sign[j] != 1.0 {
                return Err(Error::InvalidInput(
                    "signed permutation is not an involution".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A plant equivariance acting on controls and observations, used to
/// mirror (and double) training data.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryMap {
    pub u_perm: SignedPermutation,
    pub z_perm: SignedPermutation,
}

impl SymmetryMap {
    pub fn new(u_perm: SignedPermutation, z_perm: SignedPermutation) -> Result<Self> {
        u_perm.validate()?;
        z_perm.validate()?;
        Ok(SymmetryMap { u_perm, z_perm })
    }

    pub fn apply_sample(&self, s: &Sample) -> Sample {
        Sample {
            z: Observation(self.z_perm.apply(&s.z.0)),
            u: ControlVector(self.u_perm.apply(&s.u.0)),
        }
    }
}

/// The mirror-oscillator symmetry: `u -> (-u2, -u1)` and
/// `z -> (-z2, -z1, -z3, z5, z4, z6)`.
pub fn mirror_symmetry_map() -> SymmetryMap {
    SymmetryMap::new(
        SignedPermutation {
            index: vec![1, 0],
            sign: vec![-1.0, -1.0],
        },
        SignedPermutation {
            index: vec![1, 0, 2, 4, 3, 5],
            sign: vec![-1.0, -1.0, -1.0, 1.0, 1.0, 1.0],
        },
    )
    .expect("mirror map is a valid involution")
}

/// Mirror a series under `sym`, returning (original, mirrored): together
/// they double the sample count.
pub fn symmetrize(data: &TimeSeries, sym: &SymmetryMap) -> Result<(TimeSeries, TimeSeries)> {
    if sym.z_perm.dim() != data.obs_dim() || sym.u_perm.dim() != data.ctrl_dim() {
        return Err(Error::DimensionMismatch(format!(
            "symmetry map is ({}, {}), series is (p={}, m={})",
            sym.z_perm.dim(),
            sym.u_perm.dim(),
            data.obs_dim(),
            data.ctrl_dim()
        )));
    }
    let mirrored = TimeSeries::new(
        data.dt(),
        data.t0(),
        data.samples().iter().map(|s| sym.apply_sample(s)).collect(),
    )?;
    Ok((data.clone(), mirrored))
}

/// One training sample: the measured history block feeding the encoder
/// and the first decoder cell, the horizon controls, and the targets.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    /// `(z, u)` pairs at indices `a - (M + 2d + 1) ..= a` for anchor `a`.
    pub history: Vec<(Array1<f64>, Array1<f64>)>,
    /// Controls `u_a ..= u_{a+N-1}`; the first equals the last history control.
    pub controls: Vec<Array1<f64>>,
    /// Observations `z_{a+1} ..= z_{a+N}`.
    pub targets: Vec<Array1<f64>>,
}

/// Sliced training windows for a fixed `(M, N, d)` geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub encoder_len: usize,
    pub horizon: usize,
    pub delays: usize,
    pub obs_dim: usize,
    pub ctrl_dim: usize,
    pub samples: Vec<WindowSample>,
}

impl WindowedDataset {
    /// Measured samples required before the first prediction.
    pub fn history_len(encoder_len: usize, delays: usize) -> usize {
        encoder_len + 2 * delays + 2
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Merge another dataset sliced with the same geometry. Episodes stay
    /// separate series; merging happens only at the window level.
    pub fn merge(&mut self, other: WindowedDataset) -> Result<()> {
        if (self.encoder_len, self.horizon, self.delays, self.obs_dim, self.ctrl_dim)
            != (
                other.encoder_len,
                other.horizon,
                other.delays,
                other.obs_dim,
                other.ctrl_dim,
            )
        {
            return Err(Error::DimensionMismatch(
                "window geometries differ between datasets".into(),
            ));
        }
        self.samples.extend(other.samples);
        Ok(())
    }

    /// Keep only the first `fraction` of the samples (temporal prefix).
    pub fn prefix_fraction(&self, fraction: f64) -> WindowedDataset {
        let keep = ((self.samples.len() as f64) * fraction).round() as usize;
        let keep = keep.clamp(1, self.samples.len());
        WindowedDataset {
            samples: self.samples[..keep].to_vec(),
            ..self.clone()
        }
    }

    /// The delay window of encoder position `i` (0-based) of sample `s`,
    /// reassembled from the stored history block.
    pub fn encoder_window(&self, s: &WindowSample, i: usize) -> DelayWindow {
        // Encoder cells sit at local indices 2d+1 .. 2d+M within the block.
        let k = 2 * self.delays + 1 + i;
        let first = k - (2 * self.delays + 1);
        DelayWindow {
            zu_history: s.history[first..=k]
                .iter()
                .map(|(z, u)| (Observation(z.clone()), ControlVector(u.clone())))
                .collect(),
            u_recent: s.history[k - self.delays..=k]
                .iter()
                .map(|(_, u)| ControlVector(u.clone()))
                .collect(),
            delays: self.delays,
        }
    }
}

/// Slice a trajectory into training windows: one sample per admissible
/// anchor. Requires `data.len() >= M + 2d + 2 + N`.
pub fn split_windows(
    data: &TimeSeries,
    encoder_len: usize,
    horizon: usize,
    delays: usize,
) -> Result<WindowedDataset> {
    if encoder_len == 0 || horizon == 0 {
        return Err(Error::InvalidInput("encoder length and horizon must be >= 1".into()));
    }
    let hist = WindowedDataset::history_len(encoder_len, delays);
    let needed = hist + horizon;
    if data.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: data.len(),
        });
    }
    let first_anchor = hist - 1;
    let last_anchor = data.len() - 1 - horizon;
    let mut samples = Vec::with_capacity(last_anchor - first_anchor + 1);
    for a in first_anchor..=last_anchor {
        let history = (a + 1 - hist..=a)
            .map(|i| {
                let s = data.sample(i);
                (s.z.0.clone(), s.u.0.clone())
            })
            .collect();
        let controls = (a..a + horizon)
            .map(|i| data.sample(i).u.0.clone())
            .collect();
        let targets = (a + 1..=a + horizon)
            .map(|i| data.sample(i).z.0.clone())
            .collect();
        samples.push(WindowSample {
            history,
            controls,
            targets,
        });
    }
    Ok(WindowedDataset {
        encoder_len,
        horizon,
        delays,
        obs_dim: data.obs_dim(),
        ctrl_dim: data.ctrl_dim(),
        samples,
    })
}
