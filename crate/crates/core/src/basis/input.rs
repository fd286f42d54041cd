use crate::error::{Error, Result};

use super::univariate::Family;

/// Relative slack, in units of the interval width, allowed when mapping a
/// physical value that sits marginally outside its interval.
pub const DEFAULT_SUPPORT_TOLERANCE: f64 = 1e-9;

/// Distribution (or deterministic range) of a single input dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    /// Deterministic coordinate such as space or time.
    Deterministic { lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl Marginal {
    pub fn deterministic(lo: f64, hi: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        Ok(Marginal::Deterministic { lo, hi })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        Ok(Marginal::Uniform { lo, hi })
    }

    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        if !(mean.is_finite() && std.is_finite() && std > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gaussian marginal needs finite mean and std > 0, got ({mean}, {std})"
            )));
        }
        Ok(Marginal::Gaussian { mean, std })
    }

    pub fn family(&self) -> Family {
        match self {
            Marginal::Deterministic { .. } | Marginal::Uniform { .. } => Family::Legendre,
            Marginal::Gaussian { .. } => Family::Hermite,
        }
    }

    pub fn is_random(&self) -> bool {
        !matches!(self, Marginal::Deterministic { .. })
    }

    /// Interval bounds, `None` for unbounded marginals.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Marginal::Deterministic { lo, hi } | Marginal::Uniform { lo, hi } => Some((lo, hi)),
            Marginal::Gaussian { .. } => None,
        }
    }

    /// Scale `dξ/dx` of the affine physical-to-germ map.
    pub fn germ_scale(&self) -> f64 {
        match *self {
            Marginal::Deterministic { lo, hi } | Marginal::Uniform { lo, hi } => 2.0 / (hi - lo),
            Marginal::Gaussian { std, .. } => 1.0 / std,
        }
    }

    /// Germ value of `x` without support checking.
    #[inline]
    pub fn to_germ_unchecked(&self, x: f64) -> f64 {
        match *self {
            Marginal::Deterministic { lo, hi } | Marginal::Uniform { lo, hi } => {
                2.0 * (x - lo) / (hi - lo) - 1.0
            }
            Marginal::Gaussian { mean, std } => (x - mean) / std,
        }
    }

    /// Inverse of the germ map.
    #[inline]
    pub fn from_germ(&self, xi: f64) -> f64 {
        match *self {
            Marginal::Deterministic { lo, hi } | Marginal::Uniform { lo, hi } => {
                lo + 0.5 * (xi + 1.0) * (hi - lo)
            }
            Marginal::Gaussian { mean, std } => mean + std * xi,
        }
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidInput(format!(
            "interval marginal needs finite lo < hi, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Maps a physical value to its germ, returning `(ξ, dξ/dx)`.
///
/// Interval marginals reject values further than `tolerance · (hi - lo)`
/// outside the interval; values inside the slack are clamped.
pub fn germ_map(marginal: &Marginal, x: f64, tolerance: f64) -> Result<(f64, f64)> {
    germ_map_dim(marginal, x, tolerance, 0)
}

pub(crate) fn germ_map_dim(marginal: &Marginal, x: f64, tolerance: f64, dim: usize) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite coordinate {x} in dimension {dim}")));
    }
    let scale = marginal.germ_scale();
    match marginal.bounds() {
        Some((lo, hi)) => {
            let slack = tolerance * (hi - lo);
            if x < lo - slack || x > hi + slack {
                return Err(Error::OutOfSupport { dim, value: x, lo, hi });
            }
            let xi = marginal.to_germ_unchecked(x).clamp(-1.0, 1.0);
            Ok((xi, scale))
        }
        None => Ok((marginal.to_germ_unchecked(x), scale)),
    }
}

/// One named input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDim {
    pub name: String,
    pub marginal: Marginal,
}

/// Ordered list of input dimensions shared by training, constraint assembly
/// and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec {
    dims: Vec<InputDim>,
}

impl InputSpec {
    pub fn new(dims: Vec<InputDim>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidInput("input spec needs at least one dimension".into()));
        }
        Ok(Self { dims })
    }

    /// Builds a spec from `(name, marginal)` pairs.
    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, Marginal)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(name, marginal)| InputDim { name: name.into(), marginal })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dims(&self) -> &[InputDim] {
        &self.dims
    }

    pub fn marginal(&self, dim: usize) -> &Marginal {
        &self.dims[dim].marginal
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    pub fn deterministic_dims(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.dims[i].marginal.is_random()).collect()
    }

    pub fn random_dims(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.dims[i].marginal.is_random()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_endpoints_and_midpoints() {
        let m = Marginal::deterministic(0.0, 1.0).unwrap();
        assert_eq!(germ_map(&m, 0.0, 0.0).unwrap(), (-1.0, 2.0));
        let m = Marginal::deterministic(0.0, 10.0).unwrap();
        assert_eq!(germ_map(&m, 5.0, 0.0).unwrap(), (0.0, 0.2));
    }

    #[test]
    fn standard_gaussian_is_identity() {
        let m = Marginal::gaussian(0.0, 1.0).unwrap();
        assert_eq!(germ_map(&m, 1.7, 0.0).unwrap(), (1.7, 1.0));
    }

    #[test]
    fn outside_interval_is_rejected_beyond_tolerance() {
        let m = Marginal::uniform(1.0, 2.0).unwrap();
        assert!(matches!(germ_map(&m, 2.1, 1e-9), Err(Error::OutOfSupport { .. })));
        let (xi, _) = germ_map(&m, 2.0 + 1e-12, 1e-9).unwrap();
        assert_eq!(xi, 1.0);
    }

    #[test]
    fn invalid_marginals() {
        assert!(Marginal::uniform(2.0, 1.0).is_err());
        assert!(Marginal::deterministic(0.0, f64::INFINITY).is_err());
        assert!(Marginal::gaussian(0.0, 0.0).is_err());
        assert!(InputSpec::new(vec![]).is_err());
    }

    #[test]
    fn germ_round_trip() {
        let m = Marginal::gaussian(3.0, 0.5).unwrap();
        assert!((m.from_germ(m.to_germ_unchecked(2.2)) - 2.2).abs() < 1e-15);
    }
}
