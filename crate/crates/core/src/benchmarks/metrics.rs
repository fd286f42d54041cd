//! Pointwise error measures between surrogate and reference values.

use crate::error::{Error, Result};

/// Below this magnitude a reference value is excluded from relative errors.
pub const RAE_EXCLUSION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorStats {
    pub count: usize,
    pub mse: f64,
    pub mae: f64,
    pub max_ae: f64,
}

impl ErrorStats {
    fn from_errors(ae: impl Iterator<Item = f64>) -> Self {
        let mut s = ErrorStats::default();
        let (mut sq, mut abs) = (0.0, 0.0);
        for e in ae {
            s.count += 1;
            sq += e * e;
            abs += e;
            s.max_ae = s.max_ae.max(e);
        }
        if s.count > 0 {
            s.mse = sq / s.count as f64;
            s.mae = abs / s.count as f64;
        }
        s
    }
}

/// Error report over an evaluation set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub mse: f64,
    pub mae: f64,
    pub max_ae: f64,
    pub mean_rae: f64,
    pub max_rae: f64,
    /// Entries left out of the relative errors because `|y_ref| < 1e-12`.
    pub rae_excluded: usize,
    pub interior: Option<ErrorStats>,
    pub boundary: Option<ErrorStats>,
}

/// AE, RAE and MSE statistics of `y_pce` against `y_ref`.
pub fn metrics(y_pce: &[f64], y_ref: &[f64]) -> Result<MetricReport> {
    if y_pce.len() != y_ref.len() {
        return Err(Error::DimensionMismatch { what: "reference vector", expected: y_pce.len(), found: y_ref.len() });
    }
    let ae: Vec<f64> = y_pce.iter().zip(y_ref).map(|(a, b)| (a - b).abs()).collect();
    let all = ErrorStats::from_errors(ae.iter().copied());
    let mut rae_sum = 0.0;
    let mut rae_n = 0usize;
    let mut max_rae = 0.0f64;
    for (e, r) in ae.iter().zip(y_ref) {
        if r.abs() < RAE_EXCLUSION {
            continue;
        }
        let v = e / r.abs();
        rae_sum += v;
        rae_n += 1;
        max_rae = max_rae.max(v);
    }
    Ok(MetricReport {
        mse: all.mse,
        mae: all.mae,
        max_ae: all.max_ae,
        mean_rae: if rae_n > 0 { rae_sum / rae_n as f64 } else { 0.0 },
        max_rae,
        rae_excluded: y_ref.len() - rae_n,
        interior: None,
        boundary: None,
    })
}

/// As [`metrics`], plus separate statistics for entries flagged as boundary.
pub fn metrics_by_region(y_pce: &[f64], y_ref: &[f64], on_boundary: &[bool]) -> Result<MetricReport> {
    let mut report = metrics(y_pce, y_ref)?;
    if on_boundary.len() != y_ref.len() {
        return Err(Error::DimensionMismatch { what: "region mask", expected: y_ref.len(), found: on_boundary.len() });
    }
    let ae = |want: bool| {
        y_pce
            .iter()
            .zip(y_ref)
            .zip(on_boundary)
            .filter(move |(_, &b)| b == want)
            .map(|((a, r), _)| (a - r).abs())
    };
    report.interior = Some(ErrorStats::from_errors(ae(false)));
    report.boundary = Some(ErrorStats::from_errors(ae(true)));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors() {
        let y = [1.0, -2.0, 3.5];
        let m = metrics(&y, &y).unwrap();
        assert_eq!((m.mse, m.mae, m.max_ae, m.mean_rae, m.max_rae), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_shift() {
        let r = [0.5, 2.0, -1.0, 4.0];
        let p: Vec<f64> = r.iter().map(|v| v + 1.0).collect();
        let m = metrics(&p, &r).unwrap();
        assert!((m.mse - 1.0).abs() < 1e-15);
        assert!((m.max_ae - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_reference_excluded() {
        let m = metrics(&[1.0, 2.0], &[0.0, 1.0]).unwrap();
        assert_eq!(m.rae_excluded, 1);
        assert!((m.mean_rae - 1.0).abs() < 1e-15);
    }

    #[test]
    fn region_split() {
        let m = metrics_by_region(&[1.0, 0.0, 3.0], &[0.0, 0.0, 1.0], &[true, false, false]).unwrap();
        let b = m.boundary.unwrap();
        let i = m.interior.unwrap();
        assert_eq!((b.count, i.count), (1, 2));
        assert!((b.mse - 1.0).abs() < 1e-15 && (i.mse - 2.0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(metrics(&[1.0], &[1.0, 2.0]).is_err());
    }
}
