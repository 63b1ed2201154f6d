//! CSV persistence for time series and closed-loop trajectories.
//!
//! Format: header `t,z_1..z_p,u_1..u_m`, one row per step, '.' radix,
//! newline-delimited. Closed-loop files append `ref_1..ref_J` columns.
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::types::{ControlVector, Observation, ReferenceTrajectory, Sample, TimeSeries};

fn header(p: usize, m: usize, tracked: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=p {
        let _ = write!(h, ",z_{i}");
    }
    for i in 1..=m {
        let _ = write!(h, ",u_{i}");
    }
    for i in 1..=tracked {
        let _ = write!(h, ",ref_{i}");
    }
    h
}

/// Render a time series to CSV text.
pub fn time_series_to_csv(series: &TimeSeries) -> String {
    render(series, None)
}

/// Render a closed-loop trajectory with its aligned reference columns.
pub fn closed_loop_to_csv(series: &TimeSeries, reference: &ReferenceTrajectory) -> String {
    render(series, Some(reference))
}

fn render(series: &TimeSeries, reference: Option<&ReferenceTrajectory>) -> String {
    let tracked = reference.map_or(0, |r| r.tracked_dim());
    let mut out = header(series.obs_dim(), series.ctrl_dim(), tracked);
    out.push('\n');
    for i in 0..series.len() {
        let s = series.sample(i);
        let _ = write!(out, "{}", series.time(i));
        for v in s.z.0.iter() {
            let _ = write!(out, ",{v}");
        }
        for v in s.u.0.iter() {
            let _ = write!(out, ",{v}");
        }
        if let Some(r) = reference {
            for v in r.target_held(i).iter() {
                let _ = write!(out, ",{v}");
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_time_series(series: &TimeSeries, path: &Path) -> Result<()> {
    fs::write(path, time_series_to_csv(series))?;
    Ok(())
}

pub fn write_closed_loop(
    series: &TimeSeries,
    reference: &ReferenceTrajectory,
    path: &Path,
) -> Result<()> {
    fs::write(path, closed_loop_to_csv(series, reference))?;
    Ok(())
}

/// A parsed trajectory file: the series plus any `ref_*` columns it carried.
#[derive(Debug, Clone)]
pub struct ParsedTrajectory {
    pub series: TimeSeries,
    /// Per-step reference values, present when the file had ref columns.
    pub refs: Option<Vec<Array1<f64>>>,
}

pub fn read_time_series(path: &Path) -> Result<TimeSeries> {
    Ok(parse_trajectory_csv(&fs::read_to_string(path)?)?.series)
}

pub fn read_trajectory(path: &Path) -> Result<ParsedTrajectory> {
    parse_trajectory_csv(&fs::read_to_string(path)?)
}

/// Parse CSV text in the series format, tolerating trailing ref columns.
pub fn parse_trajectory_csv(text: &str) -> Result<ParsedTrajectory> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines
        .next()
        .ok_or_else(|| Error::malformed_at("empty CSV file"))?;
    let cols: Vec<&str> = head.split(',').collect();
    if cols.first() != Some(&"t") {
        return Err(Error::malformed(1, "first column must be 't'"));
    }
    let p = cols.iter().filter(|c| c.starts_with("z_")).count();
    let m = cols.iter().filter(|c| c.starts_with("u_")).count();
    let j = cols.iter().filter(|c| c.starts_with("ref_")).count();
    if p == 0 || m == 0 || cols.len() != 1 + p + m + j {
        return Err(Error::malformed(1, format!("unrecognized header '{head}'")));
    }

    let mut times = Vec::new();
    let mut samples = Vec::new();
    let mut refs: Vec<Array1<f64>> = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::malformed(
                lineno,
                format!("expected {} fields, found {}", cols.len(), fields.len()),
            ));
        }
        let mut values = Vec::with_capacity(fields.len());
        for f in &fields {
            let v: f64 = f.trim().parse().map_err(|_| {
                Error::malformed(lineno, format!("'{f}' is not a number"))
            })?;
            values.push(v);
        }
        times.push(values[0]);
        samples.push(Sample {
            z: Observation(Array1::from_vec(values[1..1 + p].to_vec())),
            u: ControlVector(Array1::from_vec(values[1 + p..1 + p + m].to_vec())),
        });
        if j > 0 {
            refs.push(Array1::from_vec(values[1 + p + m..].to_vec()));
        }
    }
    if samples.is_empty() {
        return Err(Error::malformed_at("CSV holds no rows"));
    }
    let t0 = times[0];
    let dt = if times.len() > 1 {
        times[1] - times[0]
    } else {
        1.0
    };
    if times.len() > 1 {
        for (i, &t) in times.iter().enumerate() {
            let expect = t0 + i as f64 * dt;
            if (t - expect).abs() > 1e-6 * dt.abs().max(1.0) {
                return Err(Error::malformed(
                    i + 2,
                    format!("non-uniform sampling: t={t}, expected {expect}"),
                ));
            }
        }
    }
    let series = TimeSeries::new(dt, t0, samples)?;
    Ok(ParsedTrajectory {
        series,
        refs: (j > 0).then_some(refs),
    })
}
