//! Delay-coordinate windows: the per-cell input of the recurrent surrogate.

use crate::error::{Error, Result};
use crate::types::{ControlVector, Observation, TimeSeries};

/// Input of one recurrent cell anchored at sample `k`:
/// the (z, u) pairs at indices `k-2d-1 ..= k` and the control suffix
/// at indices `k-d ..= k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayWindow {
    pub zu_history: Vec<(Observation, ControlVector)>,
    pub u_recent: Vec<ControlVector>,
    pub delays: usize,
}

impl DelayWindow {
    /// Length of the (z, u) history: `2d + 2`.
    pub fn zu_len(delays: usize) -> usize {
        2 * delays + 2
    }

    /// Length of the control suffix: `d + 1`.
    pub fn u_len(delays: usize) -> usize {
        delays + 1
    }

    /// Validate lengths and that `u_recent` is the suffix of the history controls.
    pub fn validate(&self) -> Result<()> {
        let d = self.delays;
        if self.zu_history.len() != Self::zu_len(d) {
            return Err(Error::InvalidInput(format!(
                "zu_history has {} pairs, expected {}",
                self.zu_history.len(),
                Self::zu_len(d)
            )));
        }
        if self.u_recent.len() != Self::u_len(d) {
            return Err(Error::InvalidInput(format!(
                "u_recent has {} entries, expected {}",
                self.u_recent.len(),
                Self::u_len(d)
            )));
        }
        let offset = Self::zu_len(d) - Self::u_len(d);
        for (i, u) in self.u_recent.iter().enumerate() {
            if self.zu_history[offset + i].1 != *u {
                return Err(Error::InvalidInput(format!(
                    "u_recent[{i}] disagrees with the history control at the same index"
                )));
            }
        }
        Ok(())
    }
}

/// Build the delay window anchored at sample `k` of `series` with `d` delays.
///
/// Requires `k >= 2d + 1` and `k < series.len()` so every index exists.
pub fn build_delay_window(series: &TimeSeries, k: usize, delays: usize) -> Result<DelayWindow> {
    let first = k as isize - 2 * delays as isize - 1;
    if first < 0 || k >= series.len() {
        return Err(Error::WindowOutOfRange {
            index: k,
            delays,
            first_needed: first,
            len: series.len(),
        });
    }
    let first = first as usize;
    let zu_history: Vec<_> = (first..=k)
        .map(|i| {
            let s = series.sample(i);
            (s.z.clone(), s.u.clone())
        })
        .collect();
    let u_recent: Vec<_> = (k - delays..=k)
        .map(|i| series.sample(i).u.clone())
        .collect();
    Ok(DelayWindow {
        zu_history,
        u_recent,
        delays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Sample;
    use ndarray::array;
    use proptest::prelude::*;

    fn series(n: usize) -> TimeSeries {
        let samples = (0..n)
            .map(|i| Sample {
                z: Observation(array![i as f64]),
                u: ControlVector(array![10.0 + i as f64]),
            })
            .collect();
        TimeSeries::new(0.1, 0.0, samples).unwrap()
    }

    #[test]
    fn smallest_legal_window() {
        // d=0, k=1: pairs at indices 0..=1, controls at index 1 only.
        let ts = series(3);
        let w = build_delay_window(&ts, 1, 0).unwrap();
        assert_eq!(w.zu_history.len(), 2);
        assert_eq!(w.u_recent.len(), 1);
        assert_eq!(w.zu_history[0].0 .0[0], 0.0);
        assert_eq!(w.zu_history[1].0 .0[0], 1.0);
        assert_eq!(w.u_recent[0].0[0], 11.0);
        w.validate().unwrap();
    }

    #[test]
    fn paper_index_ranges() {
        // d=2, k=5: history covers indices 0..=5 (6 pairs), controls 3..=5.
        let ts = series(8);
        let w = build_delay_window(&ts, 5, 2).unwrap();
        assert_eq!(w.zu_history.len(), 6);
        assert_eq!(w.u_recent.len(), 3);
        assert_eq!(w.zu_history[0].0 .0[0], 0.0);
        assert_eq!(w.zu_history[5].0 .0[0], 5.0);
        assert_eq!(w.u_recent[0].0[0], 13.0);
        assert_eq!(w.u_recent[2].0[0], 15.0);
        w.validate().unwrap();
    }

    #[test]
    fn precondition_violation_is_an_error() {
        // d=2, k=4 would need index -1.
        let ts = series(8);
        assert!(matches!(
            build_delay_window(&ts, 4, 2),
            Err(Error::WindowOutOfRange { .. })
        ));
        assert!(build_delay_window(&ts, 8, 0).is_err());
    }

    proptest! {
        #[test]
        fn window_is_pure_and_anchored(len in 2usize..40, d in 0usize..5, k in 0usize..40) {
            let ts = series(len);
            let a = build_delay_window(&ts, k, d);
            let b = build_delay_window(&ts, k, d);
            match (a, b) {
                (Ok(wa), Ok(wb)) => {
                    prop_assert_eq!(&wa, &wb);
                    // The last history pair is sample k itself.
                    prop_assert_eq!(wa.zu_history.last().unwrap().0.clone(), ts.sample(k).z.clone());
                    prop_assert!(wa.validate().is_ok());
                    prop_assert!(k >= 2 * d + 1 && k < len);
                }
                (Err(_), Err(_)) => {
                    prop_assert!(k < 2 * d + 1 || k >= len);
                }
                _ => prop_assert!(false, "purity violated"),
            }
        }
    }
}
