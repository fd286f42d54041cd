//! Numerical reference solutions, solved once per random-input realization
//! and cached.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use faer::Mat;
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use super::fd::{fd_beam, fd_heat, BeamSolution, FdHeatSettings, HeatSolution};
use crate::error::Result;
use crate::randomfield::{field_jet, realize, KlField};
use crate::sampling::rng_for;

pub trait ReferenceSolution: Send + Sync {
    fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<f64>>;

    /// Training values taken directly from solution grid nodes, when the
    /// reference is gridded. Returns `None` otherwise.
    fn node_samples(&self, _n: usize, _seed: u64) -> Result<Option<(Vec<Vec<f64>>, Vec<f64>)>> {
        Ok(None)
    }
}

type Key = Vec<u64>;

fn key(values: &[f64]) -> Key {
    values.iter().map(|v| v.to_bits()).collect()
}

/// Groups point indices by their random coordinates, in first-seen order.
fn group(points: &[Vec<f64>], random: std::ops::Range<usize>) -> Vec<(Vec<f64>, Vec<usize>)> {
    let mut order: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    let mut lookup: HashMap<Key, usize> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        let r = p[random.clone()].to_vec();
        let slot = *lookup.entry(key(&r)).or_insert_with(|| {
            order.push((r, Vec::new()));
            order.len() - 1
        });
        order[slot].1.push(i);
    }
    order
}

/// How the heat reference is parameterized by the random inputs.
#[derive(Clone, Debug)]
pub enum HeatParameters {
    /// Random diffusivity in input `dim`, no source.
    Diffusivity { dim: usize },
    /// Fixed diffusivity and a KL source whose germs occupy inputs
    /// `first_germ..first_germ + n_modes`.
    KlSource { diffusivity: f64, field: Arc<KlField>, first_germ: usize },
}

/// Heat equation on the unit square over `(x, y, t)` inputs 0, 1, 2.
pub struct HeatReference {
    settings: FdHeatSettings,
    initial: fn(f64, f64) -> f64,
    params: HeatParameters,
    cache: Mutex<HashMap<Key, Arc<HeatSolution>>>,
}

impl HeatReference {
    pub fn new(settings: FdHeatSettings, initial: fn(f64, f64) -> f64, params: HeatParameters) -> Self {
        Self { settings, initial, params, cache: Mutex::new(HashMap::new()) }
    }

    fn random_range(&self) -> std::ops::Range<usize> {
        match &self.params {
            HeatParameters::Diffusivity { dim } => *dim..dim + 1,
            HeatParameters::KlSource { field, first_germ, .. } => *first_germ..first_germ + field.n_modes(),
        }
    }

    /// Solution for one realization of the random inputs.
    pub fn solution(&self, random: &[f64]) -> Result<Arc<HeatSolution>> {
        let k = key(random);
        if let Some(s) = self.cache.lock().expect("cache lock").get(&k) {
            return Ok(Arc::clone(s));
        }
        let sol = Arc::new(match &self.params {
            HeatParameters::Diffusivity { .. } => fd_heat(&self.settings, random[0], self.initial, None)?,
            HeatParameters::KlSource { diffusivity, field, .. } => {
                let n = self.settings.nodes;
                let coord = |i: usize| i as f64 / (n - 1) as f64;
                let pts: Vec<Vec<f64>> = (0..n * n).map(|k| vec![coord(k % n), coord(k / n)]).collect();
                let vals = realize(field, random, &pts)?;
                let grid = Mat::from_fn(n, n, |i, j| vals[i + n * j]);
                let h = (n - 1) as f64;
                let source = move |x: f64, y: f64| grid[((x * h).round() as usize, (y * h).round() as usize)];
                fd_heat(&self.settings, *diffusivity, self.initial, Some(&source))?
            }
        });
        self.cache.lock().expect("cache lock").insert(k, Arc::clone(&sol));
        Ok(sol)
    }
}

impl ReferenceSolution for HeatReference {
    fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let groups = group(points, self.random_range());
        let solved: Vec<Arc<HeatSolution>> = groups.par_iter().map(|(r, _)| self.solution(r)).collect::<Result<_>>()?;
        let mut out = vec![0.0; points.len()];
        for ((_, idx), sol) in groups.iter().zip(&solved) {
            for &i in idx {
                let p = &points[i];
                out[i] = sol.eval(p[0], p[1], p[2]);
            }
        }
        Ok(out)
    }

    /// Node values from `max(1, n / 100)` seeded realizations, nodes drawn
    /// without replacement within each realization.
    fn node_samples(&self, n: usize, seed: u64) -> Result<Option<(Vec<Vec<f64>>, Vec<f64>)>> {
        let range = self.random_range();
        let realizations = (n / 100).max(1);
        let mut rng = rng_for(seed, 11);
        let draws: Vec<Vec<f64>> = (0..realizations)
            .map(|_| {
                range
                    .clone()
                    .map(|_| match &self.params {
                        HeatParameters::Diffusivity { .. } => 0.001 + 0.099 * rng.random::<f64>(),
                        HeatParameters::KlSource { .. } => rng.sample(rand_distr::StandardNormal),
                    })
                    .collect()
            })
            .collect();
        let mut points = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for (r, random) in draws.iter().enumerate() {
            let sol = self.solution(random)?;
            let take = n / realizations + usize::from(r < n % realizations);
            let nodes = sol.nodes();
            let per_snapshot = nodes * nodes;
            let total = per_snapshot * sol.times().len();
            for flat in index::sample(&mut rng, total, take.min(total)).into_vec() {
                let k = flat / per_snapshot;
                let rest = flat % per_snapshot;
                let (i, j) = (rest % nodes, rest / nodes);
                let mut p = vec![sol.coord(i), sol.coord(j), sol.times()[k]];
                p.extend_from_slice(random);
                points.push(p);
                values.push(sol.snapshot(k)[(i, j)]);
            }
        }
        Ok(Some((points, values)))
    }
}

/// Simply supported beam with KL stiffness; inputs are `x` then the germs.
pub struct BeamReference {
    field: Arc<KlField>,
    length: f64,
    load: f64,
    nodes: usize,
    cache: Mutex<HashMap<Key, Arc<BeamSolution>>>,
}

impl BeamReference {
    pub fn new(field: Arc<KlField>, length: f64, load: f64, nodes: usize) -> Self {
        Self { field, length, load, nodes, cache: Mutex::new(HashMap::new()) }
    }

    pub fn solution(&self, germs: &[f64]) -> Result<Arc<BeamSolution>> {
        let k = key(germs);
        if let Some(s) = self.cache.lock().expect("cache lock").get(&k) {
            return Ok(Arc::clone(s));
        }
        let h = self.length / (self.nodes - 1) as f64;
        let ei: Vec<f64> = (0..self.nodes)
            .map(|i| field_jet(&self.field, germs, (h * i as f64).min(self.length)).map(|j| j[0]))
            .collect::<Result<_>>()?;
        let sol = Arc::new(fd_beam(self.length, self.nodes, self.load, |x| ei[(x / h).round() as usize])?);
        self.cache.lock().expect("cache lock").insert(k, Arc::clone(&sol));
        Ok(sol)
    }
}

impl ReferenceSolution for BeamReference {
    fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let groups = group(points, 1..1 + self.field.n_modes());
        let solved: Vec<Arc<BeamSolution>> = groups.par_iter().map(|(r, _)| self.solution(r)).collect::<Result<_>>()?;
        let mut out = vec![0.0; points.len()];
        for ((_, idx), sol) in groups.iter().zip(&solved) {
            for &i in idx {
                out[i] = sol.eval(points[i][0]);
            }
        }
        Ok(out)
    }
}
