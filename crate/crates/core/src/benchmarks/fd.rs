//! Finite-difference reference solvers.
//!
//! The 2D heat solver takes implicit Euler steps on the 5-point Laplacian.
//! Both boundary treatments make the discrete operator separable with known
//! eigenvectors, so each step is applied exactly in the modal basis.

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeatBoundary {
    /// `u = 0` on the boundary.
    Dirichlet,
    /// Zero normal derivative, imposed with mirrored ghost nodes.
    Neumann,
}

/// Grid and time-step settings on the unit square over `[0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdHeatSettings {
    /// Nodes per spatial axis, including boundary nodes.
    pub nodes: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Store a snapshot every this many steps (the last step is always stored).
    pub save_every: usize,
    pub boundary: HeatBoundary,
}

impl FdHeatSettings {
    /// 101 × 101 nodes, `Δt = 1e-3`, snapshots every 0.01.
    pub fn desk(boundary: HeatBoundary) -> Self {
        Self { nodes: 101, dt: 1e-3, t_end: 1.0, save_every: 10, boundary }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes < 3 || !(self.dt > 0.0) || !(self.t_end > 0.0) || self.save_every == 0 {
            return Err(Error::InvalidInput(format!("invalid finite-difference settings: {self:?}")));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

/// Space–time grid solution with trilinear interpolation.
#[derive(Debug, Clone)]
pub struct HeatSolution {
    nodes: usize,
    times: Vec<f64>,
    /// One `nodes × nodes` field per stored time; entry `(i, j)` is `u(x_i, y_j)`.
    snapshots: Vec<Mat<f64>>,
}

impl HeatSolution {
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshot(&self, k: usize) -> &Mat<f64> {
        &self.snapshots[k]
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 / (self.nodes - 1) as f64
    }

    /// Index of the stored time closest to `t`.
    pub fn nearest_time(&self, t: f64) -> usize {
        let mut best = 0;
        for (k, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = k;
            }
        }
        best
    }

    /// Trilinear interpolation, clamped to the grid hull.
    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        let h = (self.nodes - 1) as f64;
        let cell = |v: f64| {
            let u = (v.clamp(0.0, 1.0)) * h;
            let i = (u.floor() as usize).min(self.nodes - 2);
            (i, u - i as f64)
        };
        let (i, a) = cell(x);
        let (j, b) = cell(y);
        let t = t.clamp(self.times[0], *self.times.last().expect("at least one snapshot"));
        let k = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            p => (p - 1).min(self.times.len().saturating_sub(2)),
        };
        let bilinear = |m: &Mat<f64>| {
            (1.0 - a) * (1.0 - b) * m[(i, j)]
                + a * (1.0 - b) * m[(i + 1, j)]
                + (1.0 - a) * b * m[(i, j + 1)]
                + a * b * m[(i + 1, j + 1)]
        };
        if self.times.len() == 1 {
            return bilinear(&self.snapshots[0]);
        }
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let c = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        (1.0 - c) * bilinear(&self.snapshots[k]) + c * bilinear(&self.snapshots[k + 1])
    }

    /// Trapezoid-rule spatial mean of snapshot `k`.
    pub fn spatial_mean(&self, k: usize) -> f64 {
        let n = self.nodes;
        let w = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let m = &self.snapshots[k];
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                s += w(i) * w(j) * m[(i, j)];
            }
        }
        s / ((n - 1) * (n - 1)) as f64
    }
}

/// Eigen-structure of the 1D second-difference operator on the unknowns.
struct Modes1d {
    /// Columns are eigenvectors at the unknown nodes.
    vectors: Mat<f64>,
    inverse: Mat<f64>,
    eigenvalues: Vec<f64>,
    /// Offset of the first unknown within the full node list.
    offset: usize,
}

fn modes_1d(nodes: usize, boundary: HeatBoundary) -> Result<Modes1d> {
    let n1 = (nodes - 1) as f64;
    let h = 1.0 / n1;
    let mu = |k: usize| -(4.0 / (h * h)) * (k as f64 * PI / (2.0 * n1)).sin().powi(2);
    match boundary {
        HeatBoundary::Dirichlet => {
            let m = nodes - 2;
            let vectors = Mat::from_fn(m, m, |j, k| ((j + 1) as f64 * (k + 1) as f64 * PI / n1).sin());
            let inverse = Mat::from_fn(m, m, |k, j| 2.0 / n1 * vectors[(j, k)]);
            Ok(Modes1d { vectors, inverse, eigenvalues: (1..=m).map(mu).collect(), offset: 1 })
        }
        HeatBoundary::Neumann => {
            let vectors = Mat::from_fn(nodes, nodes, |j, k| (j as f64 * k as f64 * PI / n1).cos());
            let lu = vectors.partial_piv_lu();
            let inverse = lu.solve(Mat::<f64>::identity(nodes, nodes));
            Ok(Modes1d { vectors, inverse, eigenvalues: (0..nodes).map(mu).collect(), offset: 0 })
        }
    }
}

/// Solves `u_t = D (u_xx + u_yy) + f(x, y)` on the unit square from `initial`.
pub fn fd_heat(
    settings: &FdHeatSettings,
    diffusivity: f64,
    initial: impl Fn(f64, f64) -> f64,
    source: Option<&dyn Fn(f64, f64) -> f64>,
) -> Result<HeatSolution> {
    settings.validate()?;
    if !(diffusivity >= 0.0) {
        return Err(Error::InvalidInput(format!("diffusivity must be nonnegative, got {diffusivity}")));
    }
    let n = settings.nodes;
    let modes = modes_1d(n, settings.boundary)?;
    let m = modes.vectors.nrows();
    let off = modes.offset;
    let coord = |i: usize| i as f64 / (n - 1) as f64;

    let to_modal = |field: &Mat<f64>| &modes.inverse * field * modes.inverse.transpose();
    let interior = |f: &dyn Fn(f64, f64) -> f64| Mat::from_fn(m, m, |i, j| f(coord(i + off), coord(j + off)));

    let mut v = to_modal(&interior(&initial));
    let f_hat = source.map(|s| to_modal(&interior(s)));
    let dt = settings.dt;
    let denom = Mat::from_fn(m, m, |k, l| {
        let d = 1.0 - diffusivity * dt * (modes.eigenvalues[k] + modes.eigenvalues[l]);
        debug_assert!(d >= 1.0);
        d
    });

    let expand = |v: &Mat<f64>| {
        let inner = &modes.vectors * v * modes.vectors.transpose();
        let mut full = Mat::<f64>::zeros(n, n);
        for j in 0..m {
            for i in 0..m {
                full[(i + off, j + off)] = inner[(i, j)];
            }
        }
        full
    };

    let steps = settings.steps();
    let mut times = vec![0.0];
    let mut snapshots = vec![expand(&v)];
    for s in 1..=steps {
        for l in 0..m {
            for k in 0..m {
                let rhs = v[(k, l)] + f_hat.as_ref().map_or(0.0, |f| dt * f[(k, l)]);
                v[(k, l)] = rhs / denom[(k, l)];
            }
        }
        if s % settings.save_every == 0 || s == steps {
            times.push(s as f64 * dt);
            snapshots.push(expand(&v));
        }
    }
    Ok(HeatSolution { nodes: n, times, snapshots })
}

/// Simply supported Euler–Bernoulli beam `(EI u'')'' = q` on `[0, length]`
/// with `u = u'' = 0` at both ends, solved as two second-order problems
/// (`M'' = q`, `u'' = M / EI`) on a uniform grid.
#[derive(Debug, Clone)]
pub struct BeamSolution {
    pub length: f64,
    pub deflection: Vec<f64>,
}

impl BeamSolution {
    /// Linear interpolation of the nodal deflection, clamped to the beam.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.deflection.len();
        let u = (x / self.length).clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (u.floor() as usize).min(n - 2);
        let a = u - i as f64;
        (1.0 - a) * self.deflection[i] + a * self.deflection[i + 1]
    }
}

pub fn fd_beam(length: f64, nodes: usize, load: f64, stiffness: impl Fn(f64) -> f64) -> Result<BeamSolution> {
    if nodes < 3 || !(length > 0.0) {
        return Err(Error::InvalidInput(format!("beam grid needs ≥ 3 nodes and positive length, got {nodes}, {length}")));
    }
    let h = length / (nodes - 1) as f64;
    let interior = nodes - 2;
    // M'' = q with M = 0 at the ends
    let moment_inner = dirichlet_poisson(&vec![load; interior], h)?;
    let mut rhs = Vec::with_capacity(interior);
    for (i, m) in moment_inner.iter().enumerate() {
        let ei = stiffness(h * (i + 1) as f64);
        if !(ei > 0.0) {
            return Err(Error::Numerical(format!("nonpositive bending stiffness {ei} at x = {}", h * (i + 1) as f64)));
        }
        rhs.push(m / ei);
    }
    let u_inner = dirichlet_poisson(&rhs, h)?;
    let mut deflection = vec![0.0; nodes];
    deflection[1..nodes - 1].copy_from_slice(&u_inner);
    Ok(BeamSolution { length, deflection })
}

/// Solves `w'' = g` at interior nodes with `w = 0` at both ends (Thomas algorithm).
fn dirichlet_poisson(g: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = g.len();
    let (a, b, c) = (1.0, -2.0, 1.0);
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    for i in 0..n {
        let d = g[i] * h * h;
        let denom = if i == 0 { b } else { b - a * cp[i - 1] };
        if denom == 0.0 {
            return Err(Error::Numerical("singular tridiagonal system".into()));
        }
        cp[i] = c / denom;
        dp[i] = if i == 0 { d / denom } else { (d - a * dp[i - 1]) / denom };
    }
    let mut w = vec![0.0; n];
    for i in (0..n).rev() {
        w[i] = if i + 1 == n { dp[i] } else { dp[i] - cp[i] * w[i + 1] };
    }
    Ok(w)
}
