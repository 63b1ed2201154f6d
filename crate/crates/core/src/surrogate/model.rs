//! The surrogate model: dimensions, normalization, and multi-step prediction.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{ControlVector, Observation, TimeSeries};

use super::bptt::Rollout;
use super::cell::CellWeights;

/// Architecture description. All sizes are configuration-exposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    /// Number of encoder cells (M).
    pub encoder_len: usize,
    /// Number of decoder cells (N), the prediction horizon.
    pub horizon: usize,
    /// Delay count d.
    pub delays: usize,
    /// Latent state width.
    pub latent_dim: usize,
    /// Observation dimension p.
    pub obs_dim: usize,
    /// Control dimension m.
    pub ctrl_dim: usize,
    /// Hidden width of the latent and output stacks.
    pub hidden_width: usize,
    /// Output width of the control feature net.
    pub ctrl_features: usize,
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("encoder_len", self.encoder_len),
            ("horizon", self.horizon),
            ("latent_dim", self.latent_dim),
            ("obs_dim", self.obs_dim),
            ("ctrl_dim", self.ctrl_dim),
            ("hidden_width", self.hidden_width),
            ("ctrl_features", self.ctrl_features),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidInput(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Measured samples needed before the first prediction: M + 2d + 2.
    pub fn history_len(&self) -> usize {
        self.encoder_len + 2 * self.delays + 2
    }

    /// Flattened (z, u) history length per cell.
    pub fn zu_flat_len(&self) -> usize {
        (2 * self.delays + 2) * (self.obs_dim + self.ctrl_dim)
    }

    /// Flattened recent-control length per cell.
    pub fn u_recent_len(&self) -> usize {
        (self.delays + 1) * self.ctrl_dim
    }
}

/// Per-channel affine statistics frozen from training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub z_mean: Array1<f64>,
    pub z_std: Array1<f64>,
    pub u_mean: Array1<f64>,
    pub u_std: Array1<f64>,
}

const STD_FLOOR: f64 = 1e-8;

impl Normalization {
    /// Identity statistics (zero mean, unit scale).
    pub fn identity(obs_dim: usize, ctrl_dim: usize) -> Self {
        Normalization {
            z_mean: Array1::zeros(obs_dim),
            z_std: Array1::ones(obs_dim),
            u_mean: Array1::zeros(ctrl_dim),
            u_std: Array1::ones(ctrl_dim),
        }
    }

    /// Fit zero-mean/unit-variance statistics over the given episodes.
    pub fn fit(episodes: &[&TimeSeries]) -> Result<Self> {
        let first = episodes
            .first()
            .ok_or_else(|| Error::InvalidInput("normalization needs at least one episode".into()))?;
        let p = first.obs_dim();
        let m = first.ctrl_dim();
        let mut z_sum = Array1::<f64>::zeros(p);
        let mut z_sq = Array1::<f64>::zeros(p);
        let mut u_sum = Array1::<f64>::zeros(m);
        let mut u_sq = Array1::<f64>::zeros(m);
        let mut count = 0usize;
        for ep in episodes {
            if ep.obs_dim() != p || ep.ctrl_dim() != m {
                return Err(Error::DimensionMismatch(
                    "episodes disagree on (p, m) during normalization".into(),
                ));
            }
            for s in ep.samples() {
                z_sum += &s.z.0;
                z_sq += &s.z.0.mapv(|v| v * v);
                u_sum += &s.u.0;
                u_sq += &s.u.0.mapv(|v| v * v);
                count += 1;
            }
        }
        let n = count as f64;
        let z_mean = z_sum / n;
        let u_mean = u_sum / n;
        let z_std = (z_sq / n - z_mean.mapv(|v| v * v)).mapv(|v| v.max(0.0).sqrt().max(STD_FLOOR));
        let u_std = (u_sq / n - u_mean.mapv(|v| v * v)).mapv(|v| v.max(0.0).sqrt().max(STD_FLOOR));
        Ok(Normalization {
            z_mean,
            z_std,
            u_mean,
            u_std,
        })
    }

    pub fn normalize_z(&self, z: &Array1<f64>) -> Array1<f64> {
        (z - &self.z_mean) / &self.z_std
    }

    pub fn denormalize_z(&self, z: &Array1<f64>) -> Array1<f64> {
        z * &self.z_std + &self.z_mean
    }

    pub fn normalize_u(&self, u: &Array1<f64>) -> Array1<f64> {
        (u - &self.u_mean) / &self.u_std
    }

    pub fn denormalize_u(&self, u: &Array1<f64>) -> Array1<f64> {
        u * &self.u_std + &self.u_mean
    }
}

/// Recurrent encoder/decoder surrogate of the observable dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub dims: ModelDims,
    /// One shared cell: the encoder runs only its latent-dynamics part.
    pub cell: CellWeights,
    pub norm: Normalization,
}

impl SurrogateModel {
    /// Seeded random initialization.
    pub fn new(dims: ModelDims, norm: Normalization, seed: u64) -> Result<Self> {
        dims.validate()?;
        if norm.z_mean.len() != dims.obs_dim || norm.u_mean.len() != dims.ctrl_dim {
            return Err(Error::DimensionMismatch(
                "normalization statistics disagree with model dimensions".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cell = CellWeights::init(&dims, &mut rng);
        Ok(SurrogateModel { dims, cell, norm })
    }

    /// Initialize with statistics fitted from the given episodes.
    pub fn from_episodes(dims: ModelDims, episodes: &[&TimeSeries], seed: u64) -> Result<Self> {
        let norm = Normalization::fit(episodes)?;
        SurrogateModel::new(dims, norm, seed)
    }

    /// Measured samples needed before the first prediction.
    pub fn history_len(&self) -> usize {
        self.dims.history_len()
    }

    /// Free-running multi-step prediction.
    ///
    /// `history` must hold exactly `history_len()` samples; its final
    /// control slot is superseded by `controls[0]` (the first planned
    /// control of the lag interval that starts at the anchor). Each
    /// predicted observable feeds the next cell's window in place of a
    /// measurement. Any number of steps `>= 1` may be requested.
    pub fn predict(
        &self,
        history: &TimeSeries,
        controls: &[ControlVector],
    ) -> Result<Vec<Observation>> {
        let rollout = Rollout::run(self, history, controls, false)?;
        Ok(rollout
            .predictions_norm()
            .iter()
            .map(|z| Observation(self.norm.denormalize_z(z)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Sample;
    use ndarray::array;
    use proptest::prelude::*;

    fn demo_norm() -> Normalization {
        Normalization {
            z_mean: array![1.0, -2.0],
            z_std: array![0.5, 3.0],
            u_mean: array![0.1],
            u_std: array![1.7],
        }
    }

    #[test]
    fn normalization_round_trip() {
        let n = demo_norm();
        let z = array![0.33, -7.2];
        let back = n.denormalize_z(&n.normalize_z(&z));
        assert!((back[0] - z[0]).abs() < 1e-15);
        assert!((back[1] - z[1]).abs() < 1e-14);
    }

    #[test]
    fn fit_produces_unit_variance() {
        let samples: Vec<Sample> = (0..1000)
            .map(|i| {
                let t = i as f64 * 0.01;
                Sample {
                    z: Observation(array![3.0 + 2.0 * t.sin(), -1.0 + 0.2 * t.cos()]),
                    u: ControlVector(array![1.5 * (3.0 * t).sin()]),
                }
            })
            .collect();
        let ts = TimeSeries::new(0.1, 0.0, samples).unwrap();
        let n = Normalization::fit(&[&ts]).unwrap();
        let mut sum = 0.0;
        let mut sq = 0.0;
        for s in ts.samples() {
            let v = n.normalize_z(&s.z.0)[0];
            sum += v;
            sq += v * v;
        }
        let count = ts.len() as f64;
        assert!((sum / count).abs() < 1e-10);
        assert!((sq / count - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_channel_uses_std_floor() {
        let samples: Vec<Sample> = (0..10)
            .map(|_| Sample {
                z: Observation(array![5.0]),
                u: ControlVector(array![0.0]),
            })
            .collect();
        let ts = TimeSeries::new(0.1, 0.0, samples).unwrap();
        let n = Normalization::fit(&[&ts]).unwrap();
        assert!(n.z_std[0] >= STD_FLOOR);
        assert!(n.normalize_z(&array![5.0])[0].abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn round_trip_is_tight_for_any_stats(
            mean in -10.0f64..10.0,
            std in 0.01f64..10.0,
            v in -100.0f64..100.0,
        ) {
            let n = Normalization {
                z_mean: array![mean],
                z_std: array![std],
                u_mean: array![0.0],
                u_std: array![1.0],
            };
            let back = n.denormalize_z(&n.normalize_z(&array![v]))[0];
            prop_assert!((back - v).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }
}
