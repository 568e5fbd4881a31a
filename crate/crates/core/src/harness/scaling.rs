use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Summary;

use super::experiment::TrialResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    N,
    M,
}

impl Axis {
    fn value(self, r: &TrialResult) -> usize {
        match self {
            Axis::N => r.n,
            Axis::M => r.m,
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(Axis::N),
            "m" => Ok(Axis::M),
            other => Err(Error::invalid(format!("axis must be n or m, got {other:?}"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::N => "n",
            Axis::M => "m",
        })
    }
}

/// Least-squares fit of `ln(mean error)` against `ln(axis value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub axis: Axis,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Groups results by the axis value and fits the log-log slope of the group means.
pub fn fit_scaling(results: &[TrialResult], axis: Axis) -> Result<ScalingReport> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in results {
        groups.entry(axis.value(r)).or_default().push(r.error);
    }
    let points: Vec<(f64, f64)> = groups
        .into_iter()
        .map(|(x, errs)| (x as f64, Summary::of(&errs).mean))
        .collect();
    let (slope, slope_stderr, intercept) = fit_log_log(&points)?;
    Ok(ScalingReport {
        axis,
        slope,
        slope_stderr,
        intercept,
        points: points.len(),
    })
}

/// OLS on `(ln x, ln y)`; returns `(slope, slope stderr, intercept)`.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "scaling fit needs at least 3 distinct axis values, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return Err(Error::invalid("scaling fit needs positive axis values and mean errors"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::invalid("scaling fit needs distinct axis values"));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok((slope, stderr, intercept))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, m: usize, error: f64) -> TrialResult {
        TrialResult {
            n,
            p: 10,
            m,
            replicate: 0,
            error,
            decoupled: None,
            bounds: BTreeMap::new(),
        }
    }

    #[test]
    fn exact_power_law() {
        let rs: Vec<_> = [16usize, 64, 256, 1024]
            .iter()
            .map(|&n| row(n, 3, 2.5 / (n as f64).sqrt()))
            .collect();
        let f = fit_scaling(&rs, Axis::N).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
        assert!((f.intercept - 2.5f64.ln()).abs() < 1e-12);
        assert_eq!(f.points, 4);
    }

    #[test]
    fn constant_errors_have_zero_slope() {
        let rs: Vec<_> = [4usize, 8, 16].iter().map(|&m| row(100, m, 0.3)).collect();
        let f = fit_scaling(&rs, Axis::M).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.slope_stderr, 0.0);
    }

    #[test]
    fn averages_replicates_before_fitting() {
        let mut rs = Vec::new();
        for &n in &[10usize, 100, 1000] {
            let target = 1.0 / n as f64;
            rs.push(row(n, 1, 0.5 * target));
            rs.push(row(n, 1, 1.5 * target));
        }
        let f = fit_scaling(&rs, Axis::N).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let same_axis: Vec<_> = (0..5).map(|_| row(10, 1, 0.1)).collect();
        assert!(fit_scaling(&same_axis, Axis::N).is_err());
        let two: Vec<_> = [10usize, 20].iter().map(|&n| row(n, 1, 0.1)).collect();
        assert!(fit_scaling(&two, Axis::N).is_err());
        let zeros: Vec<_> = [10usize, 20, 40].iter().map(|&n| row(n, 1, 0.0)).collect();
        assert!(fit_scaling(&zeros, Axis::N).is_err());
        assert!("k".parse::<Axis>().is_err());
        assert_eq!("m".parse::<Axis>().unwrap(), Axis::M);
    }
}
