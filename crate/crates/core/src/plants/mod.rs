//! Plant interface and built-in ODE test plants.
//!
//! A plant exposes the time-T map `step` (classical RK4 over fixed inner
//! substeps, control held constant) and the observation map `observe`.

mod models;
mod rk4;

use std::collections::BTreeMap;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::types::{ControlVector, Observation};

pub use models::{Linear, LorenzControlled, MirrorOscillator, VanDerPol};
pub use rk4::rk4_step;

/// Full plant state `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState(pub Array1<f64>);

impl PlantState {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Built-in plant families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantKind {
    Linear,
    VanDerPol,
    LorenzControlled,
    MirrorOscillator,
}

impl PlantKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(PlantKind::Linear),
            "van_der_pol" => Ok(PlantKind::VanDerPol),
            "lorenz" => Ok(PlantKind::LorenzControlled),
            "mirror" => Ok(PlantKind::MirrorOscillator),
            other => Err(Error::InvalidInput(format!("unknown plant kind '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PlantKind::Linear => "linear",
            PlantKind::VanDerPol => "van_der_pol",
            PlantKind::LorenzControlled => "lorenz",
            PlantKind::MirrorOscillator => "mirror",
        }
    }
}

/// Construction-time plant description.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantConfig {
    pub kind: PlantKind,
    /// Named real parameters; unknown names are rejected per kind.
    pub params: BTreeMap<String, f64>,
    /// Inner integration step. Must divide the lag time of any `step` call.
    pub dt_plant: f64,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl PlantConfig {
    pub fn new(kind: PlantKind, dt_plant: f64) -> Self {
        let (m, p) = default_dims(kind, &BTreeMap::new());
        PlantConfig {
            kind,
            params: BTreeMap::new(),
            dt_plant,
            input_dim: m,
            output_dim: p,
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        let (m, p) = default_dims(self.kind, &self.params);
        self.input_dim = m;
        self.output_dim = p;
        self
    }
}

fn default_dims(kind: PlantKind, params: &BTreeMap<String, f64>) -> (usize, usize) {
    match kind {
        PlantKind::Linear => {
            let dim = params.get("dim").copied().unwrap_or(1.0) as usize;
            (dim.max(1), dim.max(1))
        }
        PlantKind::VanDerPol => (1, 2),
        PlantKind::LorenzControlled => (1, 3),
        PlantKind::MirrorOscillator => (2, 6),
    }
}

/// The time-T map and observation map behind one interface.
pub trait Plant: Send + Sync {
    fn state_dim(&self) -> usize;
    /// Control dimension m.
    fn input_dim(&self) -> usize;
    /// Observation dimension p.
    fn output_dim(&self) -> usize;
    /// Inner integration step.
    fn dt_plant(&self) -> f64;
    /// Right-hand side of the governing ODE under the held control `u`.
    fn rhs(&self, y: &Array1<f64>, u: &Array1<f64>) -> Array1<f64>;
    /// Observation map `f(y) = z`; deterministic and side-effect free.
    fn observe(&self, y: &PlantState) -> Observation;
    /// Default initial condition for data collection and control runs.
    fn initial_state(&self) -> PlantState;

    /// Advance `y` by `dt` with `u` held constant (zero-order hold),
    /// integrating with RK4 over `dt / dt_plant` inner substeps.
    ///
    /// The divergence timestamp is relative to the start of this step.
    fn step(&self, y: &PlantState, u: &ControlVector, dt: f64) -> Result<PlantState> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("step dt must be positive, got {dt}")));
        }
        if u.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "control has {} channels, plant expects {}",
                u.dim(),
                self.input_dim()
            )));
        }
        if y.0.len() != self.state_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} components, plant expects {}",
                y.0.len(),
                self.state_dim()
            )));
        }
        let h = self.dt_plant();
        let n_sub = (dt / h).round();
        if n_sub < 1.0 || (n_sub * h - dt).abs() > 1e-9 * dt {
            return Err(Error::InvalidInput(format!(
                "dt_plant {h} does not divide the lag time {dt}"
            )));
        }
        let n_sub = n_sub as usize;
        let mut state = y.0.clone();
        for i in 0..n_sub {
            state = rk4::rk4_step(|s| self.rhs(s, &u.0), &state, h);
            if !state.iter().all(|v| v.is_finite()) {
                return Err(Error::Divergence {
                    time_s: (i + 1) as f64 * h,
                });
            }
        }
        Ok(PlantState(state))
    }
}

fn take_params(
    kind: PlantKind,
    params: &BTreeMap<String, f64>,
    known: &[(&str, f64)],
) -> Result<BTreeMap<String, f64>> {
    for name in params.keys() {
        if !known.iter().any(|(k, _)| k == name) {
            return Err(Error::InvalidInput(format!(
                "unknown parameter '{name}' for plant '{}'",
                kind.name()
            )));
        }
    }
    let mut out = BTreeMap::new();
    for (k, default) in known {
        let v = params.get(*k).copied().unwrap_or(*default);
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("parameter '{k}' is not finite")));
        }
        out.insert(k.to_string(), v);
    }
    Ok(out)
}

/// Construct a plant from its configuration. Construction is pure.
pub fn make_plant(config: &PlantConfig) -> Result<Box<dyn Plant>> {
    if !(config.dt_plant > 0.0) || !config.dt_plant.is_finite() {
        return Err(Error::InvalidInput(format!(
            "dt_plant must be positive, got {}",
            config.dt_plant
        )));
    }
    let plant: Box<dyn Plant> = match config.kind {
        PlantKind::Linear => {
            let p = take_params(
                config.kind,
                &config.params,
                &[("dim", 1.0), ("a", 1.0), ("b", 1.0)],
            )?;
            let dim = p["dim"];
            if dim < 1.0 || dim.fract() != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "linear plant dim must be a positive integer, got {dim}"
                )));
            }
            Box::new(Linear::new(dim as usize, p["a"], p["b"], config.dt_plant))
        }
        PlantKind::VanDerPol => {
            let p = take_params(config.kind, &config.params, &[("mu", 1.0)])?;
            Box::new(VanDerPol::new(p["mu"], config.dt_plant))
        }
        PlantKind::LorenzControlled => {
            let p = take_params(
                config.kind,
                &config.params,
                &[("sigma", 10.0), ("rho", 28.0), ("beta", 8.0 / 3.0)],
            )?;
            Box::new(LorenzControlled::new(
                p["sigma"],
                p["rho"],
                p["beta"],
                config.dt_plant,
            ))
        }
        PlantKind::MirrorOscillator => {
            let p = take_params(config.kind, &config.params, &[("mu", 1.0), ("kappa", 0.3)])?;
            Box::new(MirrorOscillator::new(p["mu"], p["kappa"], config.dt_plant))
        }
    };
    if config.input_dim != plant.input_dim() || config.output_dim != plant.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "config declares (m={}, p={}), plant '{}' has (m={}, p={})",
            config.input_dim,
            config.output_dim,
            config.kind.name(),
            plant.input_dim(),
            plant.output_dim()
        )));
    }
    Ok(plant)
}
