//! Shared domain types: observations, controls, time series, references, metrics.

use ndarray::Array1;

use crate::error::{Error, Result};

/// Sensor observation `z` — the control-relevant plant outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Array1<f64>);

impl Observation {
    pub fn checked(values: Array1<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("observation must have p >= 1".into()));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("observation has non-finite component".into()));
        }
        Ok(Observation(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for Observation {
    fn from(v: Vec<f64>) -> Self {
        Observation(Array1::from_vec(v))
    }
}

/// Actuation vector `u`, one component per input channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector(pub Array1<f64>);

impl ControlVector {
    pub fn zeros(m: usize) -> Self {
        ControlVector(Array1::zeros(m))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// True when every component lies in the per-channel box.
    pub fn within_bounds(&self, bounds: &[(f64, f64)]) -> bool {
        self.0.len() == bounds.len()
            && self
                .0
                .iter()
                .zip(bounds)
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

impl From<Vec<f64>> for ControlVector {
    fn from(v: Vec<f64>) -> Self {
        ControlVector(Array1::from_vec(v))
    }
}

/// One aligned record: the observation at a sample time and the control
/// held over the following lag interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub z: Observation,
    pub u: ControlVector,
}

/// Uniformly sampled, aligned (observation, control) record.
///
/// Sample `i` sits at time `t0 + i * dt`; its control is held constant
/// until the next sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dt: f64,
    t0: f64,
    samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn new(dt: f64, t0: f64, samples: Vec<Sample>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        if samples.is_empty() {
            return Err(Error::InvalidInput("time series must hold at least one sample".into()));
        }
        let p = samples[0].z.dim();
        let m = samples[0].u.dim();
        if p == 0 || m == 0 {
            return Err(Error::InvalidInput("sample dimensions must satisfy p >= 1, m >= 1".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.z.dim() != p || s.u.dim() != m {
                return Err(Error::DimensionMismatch(format!(
                    "sample {i} has (p={}, m={}), expected (p={p}, m={m})",
                    s.z.dim(),
                    s.u.dim()
                )));
            }
        }
        Ok(TimeSeries { dt, t0, samples })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: length >= 1
    }

    /// Observation dimension p.
    pub fn obs_dim(&self) -> usize {
        self.samples[0].z.dim()
    }

    /// Control dimension m.
    pub fn ctrl_dim(&self) -> usize {
        self.samples[0].u.dim()
    }

    pub fn sample(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Sub-series over the inclusive index range `[start, end]`.
    pub fn slice(&self, start: usize, end: usize) -> Result<TimeSeries> {
        if start > end || end >= self.samples.len() {
            return Err(Error::InvalidInput(format!(
                "slice [{start}, {end}] out of range for series of length {}",
                self.samples.len()
            )));
        }
        TimeSeries::new(
            self.dt,
            self.time(start),
            self.samples[start..=end].to_vec(),
        )
    }
}

/// Control-only schedule on the lag-time grid, used to excite a plant.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSeries {
    pub dt: f64,
    pub t0: f64,
    pub controls: Vec<ControlVector>,
}

impl ControlSeries {
    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn ctrl_dim(&self) -> usize {
        self.controls.first().map_or(0, |u| u.dim())
    }
}

/// Per-step tracking targets plus the index set of tracked observation
/// components (the mask).
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    dt: f64,
    targets: Vec<Array1<f64>>,
    mask: Vec<usize>,
}

impl ReferenceTrajectory {
    pub fn new(dt: f64, mask: Vec<usize>, targets: Vec<Array1<f64>>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("reference dt must be positive, got {dt}")));
        }
        if mask.is_empty() {
            return Err(Error::InvalidInput("reference mask must select at least one component".into()));
        }
        let mut seen = mask.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != mask.len() {
            return Err(Error::InvalidInput("reference mask has duplicate indices".into()));
        }
        if targets.is_empty() {
            return Err(Error::InvalidInput("reference needs at least one target step".into()));
        }
        let j = mask.len();
        for (i, t) in targets.iter().enumerate() {
            if t.len() != j {
                return Err(Error::DimensionMismatch(format!(
                    "reference target {i} has {} values, mask selects {j}",
                    t.len()
                )));
            }
        }
        Ok(ReferenceTrajectory { dt, mask, targets })
    }

    /// Build from piecewise-constant segments of (values, duration) pairs.
    pub fn piecewise_constant(
        dt: f64,
        mask: Vec<usize>,
        segments: &[(Vec<f64>, f64)],
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidInput("reference needs at least one segment".into()));
        }
        let mut targets = Vec::new();
        for (values, duration_s) in segments {
            if !(duration_s > &0.0) {
                return Err(Error::InvalidInput(format!(
                    "segment duration must be positive, got {duration_s}"
                )));
            }
            let steps = (duration_s / dt).round() as usize;
            if steps == 0 {
                return Err(Error::InvalidInput(format!(
                    "segment duration {duration_s} s is below one step of {dt} s"
                )));
            }
            for _ in 0..steps {
                targets.push(Array1::from_vec(values.clone()));
            }
        }
        ReferenceTrajectory::new(dt, mask, targets)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn mask(&self) -> &[usize] {
        &self.mask
    }

    /// Number of tracked components J.
    pub fn tracked_dim(&self) -> usize {
        self.mask.len()
    }

    pub fn target(&self, i: usize) -> &Array1<f64> {
        &self.targets[i]
    }

    /// Target at step `i`, holding the final value beyond the stored range.
    pub fn target_held(&self, i: usize) -> &Array1<f64> {
        let last = self.targets.len() - 1;
        &self.targets[i.min(last)]
    }

    /// Check the mask against an observation dimension.
    pub fn validate_mask(&self, obs_dim: usize) -> Result<()> {
        if let Some(bad) = self.mask.iter().find(|&&i| i >= obs_dim) {
            return Err(Error::InvalidInput(format!(
                "reference mask index {bad} out of range for p={obs_dim}"
            )));
        }
        Ok(())
    }
}

/// Tracking-error and control-cost summary for one run or interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub e_mean: f64,
    pub e_max: f64,
    pub control_cost: f64,
    pub warmup_s: f64,
    pub horizon_s: f64,
}

impl MetricsReport {
    /// Flat key:value rendering, one field per line.
    pub fn to_text(&self) -> String {
        format!(
            "e_mean: {}\ne_max: {}\ncontrol_cost: {}\nwarmup_s: {}\nhorizon_s: {}\n",
            self.e_mean, self.e_max, self.control_cost, self.warmup_s, self.horizon_s
        )
    }
}
