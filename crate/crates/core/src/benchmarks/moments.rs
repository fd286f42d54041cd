//! Closed-form mean and standard deviation over the random inputs.

use std::collections::BTreeMap;

use crate::basis::{BasisSpec, UnivariateTable};
use crate::error::{Error, Result};
use crate::model::Pc2Model;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentFields {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Mean and standard deviation of the surrogate over its random inputs at
/// each point of the deterministic inputs.
///
/// Terms sharing the same random multi-index part collapse into one
/// coefficient per point; orthonormality then gives the mean as the
/// coefficient of the zero random part and the variance as the sum of the
/// squares of the others.
pub fn moment_fields(model: &Pc2Model, points: &[Vec<f64>]) -> Result<MomentFields> {
    let basis = model.basis();
    let det = basis.input().deterministic_dims();
    let rnd = basis.input().random_dims();
    let groups = random_groups(basis, &rnd);
    let beta = model.coefficients();

    let mut mean = Vec::with_capacity(points.len());
    let mut std = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != det.len() {
            return Err(Error::DimensionMismatch { what: "deterministic point", expected: det.len(), found: p.len() });
        }
        let mut tables = Vec::with_capacity(det.len());
        for (k, &d) in det.iter().enumerate() {
            let m = basis.input().marginal(d);
            let (xi, _) = crate::basis::germ_map(m, p[k], crate::basis::DEFAULT_SUPPORT_TOLERANCE)?;
            tables.push(UnivariateTable::new(m.family(), basis.indices().max_degree(d), 0, xi));
        }
        let mut m = 0.0;
        let mut var = 0.0;
        for (key, members) in &groups {
            let mut s = 0.0;
            for &k in members {
                let alpha = basis.indices().get(k).degrees();
                let mut v = beta[k];
                for (t, &d) in det.iter().enumerate() {
                    v *= tables[t].get(alpha[d], 0);
                }
                s += v;
            }
            if key.iter().all(|&a| a == 0) {
                m = s;
            } else {
                var += s * s;
            }
        }
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(MomentFields { mean, std })
}

fn random_groups(basis: &BasisSpec, rnd: &[usize]) -> BTreeMap<Vec<usize>, Vec<usize>> {
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (k, alpha) in basis.indices().iter().enumerate() {
        let key: Vec<usize> = rnd.iter().map(|&d| alpha.degrees()[d]).collect();
        groups.entry(key).or_default().push(k);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{InputSpec, Marginal};

    #[test]
    fn deterministic_only_model() {
        let input = InputSpec::from_pairs([("x", Marginal::deterministic(0.0, 1.0).unwrap())]).unwrap();
        let basis = BasisSpec::new(input, 3, 1.0).unwrap();
        let model = Pc2Model::new(basis, vec![0.3, -1.0, 0.25, 0.7]).unwrap();
        let pts: Vec<Vec<f64>> = vec![vec![0.1], vec![0.77]];
        let mf = moment_fields(&model, &pts).unwrap();
        let pred = model.predict(&pts).unwrap();
        for k in 0..2 {
            assert!((mf.mean[k] - pred[k]).abs() < 1e-14);
            assert_eq!(mf.std[k], 0.0);
        }
    }

    #[test]
    fn linear_in_uniform_germ() {
        // u = a(x) + b(x) ψ1(ξ): mean a, std |b|
        let input = InputSpec::from_pairs([
            ("x", Marginal::deterministic(-1.0, 1.0).unwrap()),
            ("z", Marginal::uniform(-1.0, 1.0).unwrap()),
        ])
        .unwrap();
        let basis = BasisSpec::new(input, 1, 1.0).unwrap();
        // indices: (0,0), (1,0), (0,1)
        let model = Pc2Model::new(basis, vec![2.0, 1.0, -0.5]).unwrap();
        let mf = moment_fields(&model, &[vec![0.5]]).unwrap();
        assert!((mf.mean[0] - (2.0 + 3f64.sqrt() * 0.5)).abs() < 1e-14);
        assert!((mf.std[0] - 0.5).abs() < 1e-14);
    }
}
