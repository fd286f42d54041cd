//! Discrete Karhunen–Loève expansion of stationary Gaussian random fields.

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Stationary covariance kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `σ² exp(−‖s − s'‖² / (2 l²))`.
    SquaredExponential { correlation_length: f64, std: f64 },
}

impl Kernel {
    pub fn squared_exponential(correlation_length: f64, std: f64) -> Result<Self> {
        if !(correlation_length > 0.0 && correlation_length.is_finite()) || !(std > 0.0 && std.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "kernel needs positive finite correlation length and std, got l={correlation_length}, σ={std}"
            )));
        }
        Ok(Kernel::SquaredExponential { correlation_length, std })
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Kernel::SquaredExponential { std, .. } => std * std,
        }
    }

    pub fn covariance(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::SquaredExponential { correlation_length: l, std } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                std * std * (-d2 / (2.0 * l * l)).exp()
            }
        }
    }

    /// `∂^order/∂x^order C(x, s)` for scalar arguments.
    fn derivative_1d(&self, x: f64, s: f64, order: usize) -> f64 {
        match *self {
            Kernel::SquaredExponential { correlation_length: l, std } => {
                let r = x - s;
                let l2 = l * l;
                let c = std * std * (-r * r / (2.0 * l2)).exp();
                match order {
                    0 => c,
                    1 => -r / l2 * c,
                    2 => (r * r / (l2 * l2) - 1.0 / l2) * c,
                    _ => unreachable!("checked by callers"),
                }
            }
        }
    }
}

/// One uniformly spaced grid axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl Axis {
    fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes - 1) as f64
    }

    fn coord(&self, i: usize) -> f64 {
        self.lo + self.step() * i as f64
    }

    fn weights(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.nodes).map(|i| if i == 0 || i + 1 == self.nodes { 0.5 * h } else { h }).collect()
    }

    /// Cell index and local coordinate in `[0, 1]`.
    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let slack = 1e-9 * (self.hi - self.lo);
        if !(x >= self.lo - slack && x <= self.hi + slack) {
            return Err(Error::OutOfSupport { dim: 0, value: x, lo: self.lo, hi: self.hi });
        }
        let u = ((x - self.lo) / self.step()).clamp(0.0, (self.nodes - 1) as f64);
        let i = (u.floor() as usize).min(self.nodes - 2);
        Ok((i, u - i as f64))
    }
}

/// Tensor grid of one or two axes; nodes are ordered with the first axis
/// varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidInput(format!("grid must have 1 or 2 axes, got {}", axes.len())));
        }
        for a in &axes {
            if a.nodes < 2 || !(a.lo < a.hi) {
                return Err(Error::InvalidInput(format!(
                    "grid axis needs lo < hi and at least 2 nodes, got [{}, {}] with {}",
                    a.lo, a.hi, a.nodes
                )));
            }
        }
        Ok(Self { axes })
    }

    pub fn line(lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        Self::new(vec![Axis { lo, hi, nodes }])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        Self::new(vec![Axis { lo: x.0, hi: x.1, nodes: nx }, Axis { lo: y.0, hi: y.1, nodes: ny }])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        let mut rest = k;
        self.axes
            .iter()
            .map(|a| {
                let i = rest % a.nodes;
                rest /= a.nodes;
                a.coord(i)
            })
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Trapezoidal quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = self.axes.iter().map(Axis::weights).collect();
        (0..self.len())
            .map(|k| {
                let mut rest = k;
                let mut w = 1.0;
                for (a, aw) in self.axes.iter().zip(&per_axis) {
                    w *= aw[rest % a.nodes];
                    rest /= a.nodes;
                }
                w
            })
            .collect()
    }
}

/// How many modes to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Fewest modes whose cumulative variance reaches this fraction.
    VarianceFraction(f64),
    Modes(usize),
}

/// Truncated Karhunen–Loève representation `mean + Σ √λ_i φ_i(x) ξ_i`.
#[derive(Debug, Clone)]
pub struct KlField {
    kernel: Kernel,
    grid: Grid,
    mean: f64,
    weights: Vec<f64>,
    /// Full discrete spectrum, descending and clipped at zero.
    spectrum: Vec<f64>,
    /// Retained eigenfunctions at the grid nodes (nodes × modes).
    modes: Mat<f64>,
}

impl KlField {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn n_modes(&self) -> usize {
        self.modes.ncols()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum[..self.n_modes()]
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn modes(&self) -> MatRef<'_, f64> {
        self.modes.as_ref()
    }

    /// Share of the total discrete variance carried by the first `n` modes.
    pub fn cumulative_fraction(&self, n: usize) -> f64 {
        let total: f64 = self.spectrum.iter().sum();
        if total == 0.0 {
            return 1.0;
        }
        self.spectrum.iter().take(n).sum::<f64>() / total
    }

    /// Variance of the truncated field at grid node `k`.
    pub fn truncated_variance(&self, k: usize) -> f64 {
        (0..self.n_modes()).map(|i| self.spectrum[i] * self.modes[(k, i)].powi(2)).sum()
    }

    fn check_germs(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.n_modes() {
            return Err(Error::DimensionMismatch { what: "KL germ vector", expected: self.n_modes(), found: xi.len() });
        }
        Ok(())
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.grid.dim() {
            return Err(Error::DimensionMismatch { what: "field query point", expected: self.grid.dim(), found: p.len() });
        }
        Ok(())
    }

    /// Nyström extension of `∂^order φ_i` at `x`, for every retained mode.
    fn extended_modes(&self, x: &[f64], order: usize) -> Vec<f64> {
        let n = self.grid.len();
        let k: Vec<f64> = (0..n)
            .map(|j| {
                let s = self.grid.node(j);
                let c = if order == 0 { self.kernel.covariance(x, &s) } else { self.kernel.derivative_1d(x[0], s[0], order) };
                self.weights[j] * c
            })
            .collect();
        (0..self.n_modes())
            .map(|i| {
                let lam = self.spectrum[i];
                if lam == 0.0 {
                    return 0.0;
                }
                (0..n).map(|j| k[j] * self.modes[(j, i)]).sum::<f64>() / lam
            })
            .collect()
    }
}

/// Decomposes the covariance of `kernel` on `grid` by the Nyström method
/// with trapezoidal weights.
pub fn kl_decompose(kernel: Kernel, grid: &Grid, mean: f64, target: Truncation) -> Result<KlField> {
    match target {
        Truncation::VarianceFraction(f) if !(f > 0.0 && f <= 1.0) => {
            return Err(Error::InvalidInput(format!("variance fraction must lie in (0, 1], got {f}")));
        }
        Truncation::Modes(0) => return Err(Error::InvalidInput("mode count must be at least 1".into())),
        _ => {}
    }
    if grid.dim() == 2 {
        separable_2d(kernel, grid, mean, target)
    } else {
        dense(kernel, grid, mean, target)
    }
}

fn retained(spectrum: &[f64], target: Truncation) -> usize {
    match target {
        Truncation::Modes(n) => n.min(spectrum.len()),
        Truncation::VarianceFraction(f) => {
            let total: f64 = spectrum.iter().sum();
            let mut acc = 0.0;
            for (i, v) in spectrum.iter().enumerate() {
                acc += v;
                if acc >= f * total * (1.0 - 1e-14) {
                    return i + 1;
                }
            }
            spectrum.len()
        }
    }
}

/// Weighted symmetric eigenproblem: returns descending clipped eigenvalues
/// and eigenfunctions at the nodes, normalized in the weighted inner product.
fn weighted_eigen(cov: &Mat<f64>, weights: &[f64]) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = weights.len();
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let b = Mat::from_fn(n, n, |i, j| sw[i] * cov[(i, j)] * sw[j]);
    let evd = b
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("covariance eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let max = s[order[0]];
    let min = s[order[n - 1]];
    if min < -1e-10 * max.abs() {
        return Err(Error::NotPositiveSemidefinite { min_eig: min, max_eig: max });
    }
    let vals: Vec<f64> = order.iter().map(|&k| s[k].max(0.0)).collect();
    let mut phi = Mat::from_fn(n, n, |i, c| u[(i, order[c])] / sw[i]);
    for c in 0..n {
        orient(&mut phi, c);
    }
    Ok((vals, phi))
}

/// Fixes the sign of column `c` so its largest-magnitude entry is positive.
fn orient(m: &mut Mat<f64>, c: usize) {
    let mut best = 0;
    for i in 1..m.nrows() {
        if m[(i, c)].abs() > m[(best, c)].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if m[(best, c)] < 0.0 {
        for i in 0..m.nrows() {
            m[(i, c)] = -m[(i, c)];
        }
    }
}

fn dense(kernel: Kernel, grid: &Grid, mean: f64, target: Truncation) -> Result<KlField> {
    let nodes = grid.nodes();
    let weights = grid.weights();
    let n = nodes.len();
    let cov = Mat::from_fn(n, n, |i, j| kernel.covariance(&nodes[i], &nodes[j]));
    let (spectrum, phi) = weighted_eigen(&cov, &weights)?;
    let keep = retained(&spectrum, target);
    Ok(KlField { kernel, grid: grid.clone(), mean, weights, spectrum, modes: phi.subcols(0, keep).to_owned() })
}

/// The squared-exponential kernel factors over axes, so the 2D eigenpairs
/// are products of the 1D ones.
fn separable_2d(kernel: Kernel, grid: &Grid, mean: f64, target: Truncation) -> Result<KlField> {
    let Kernel::SquaredExponential { correlation_length, std } = kernel;
    let unit = Kernel::SquaredExponential { correlation_length, std: 1.0 };
    let mut factors = Vec::new();
    for a in grid.axes() {
        let g = Grid::new(vec![*a])?;
        let nodes = g.nodes();
        let cov = Mat::from_fn(a.nodes, a.nodes, |i, j| unit.covariance(&nodes[i], &nodes[j]));
        factors.push(weighted_eigen(&cov, &g.weights())?);
    }
    let (vx, px) = &factors[0];
    let (vy, py) = &factors[1];
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(vx.len() * vy.len());
    for (i, a) in vx.iter().enumerate() {
        for (j, b) in vy.iter().enumerate() {
            pairs.push((std * std * a * b, i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1 + a.2).cmp(&(b.1 + b.2))).then(a.1.cmp(&b.1)));
    let spectrum: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let keep = retained(&spectrum, target);
    let nx = grid.axes()[0].nodes;
    let modes = Mat::from_fn(grid.len(), keep, |k, c| {
        let (_, i, j) = pairs[c];
        px[(k % nx, i)] * py[(k / nx, j)]
    });
    Ok(KlField { kernel, grid: grid.clone(), mean, weights: grid.weights(), spectrum, modes })
}

/// Field values at `points`, interpolating the eigenfunctions linearly
/// (bilinearly in 2D) between grid nodes.
pub fn realize(field: &KlField, xi: &[f64], points: &[Vec<f64>]) -> Result<Vec<f64>> {
    field.check_germs(xi)?;
    let coef: Vec<f64> = (0..field.n_modes()).map(|i| field.spectrum[i].sqrt() * xi[i]).collect();
    let nodal = |k: usize| (0..coef.len()).map(|i| coef[i] * field.modes[(k, i)]).sum::<f64>();
    let axes = field.grid.axes();
    points
        .iter()
        .map(|p| {
            field.check_point(p)?;
            let v = match axes.len() {
                1 => {
                    let (i, t) = axes[0].locate(p[0])?;
                    (1.0 - t) * nodal(i) + t * nodal(i + 1)
                }
                _ => {
                    let nx = axes[0].nodes;
                    let (i, t) = axes[0].locate(p[0])?;
                    let (j, u) = axes[1].locate(p[1])?;
                    let at = |a: usize, b: usize| nodal(a + nx * b);
                    (1.0 - t) * (1.0 - u) * at(i, j)
                        + t * (1.0 - u) * at(i + 1, j)
                        + (1.0 - t) * u * at(i, j + 1)
                        + t * u * at(i + 1, j + 1)
                }
            };
            Ok(field.mean + v)
        })
        .collect()
}

/// Field values from the Nyström extension of each mode (smooth in `x`).
pub fn realize_smooth(field: &KlField, xi: &[f64], points: &[Vec<f64>]) -> Result<Vec<f64>> {
    field.check_germs(xi)?;
    points
        .iter()
        .map(|p| {
            field.check_point(p)?;
            Ok(field.mean + combine(field, xi, &field.extended_modes(p, 0)))
        })
        .collect()
}

fn combine(field: &KlField, xi: &[f64], phi: &[f64]) -> f64 {
    phi.iter().enumerate().map(|(i, v)| field.spectrum[i].sqrt() * xi[i] * v).sum()
}

/// First or second spatial derivative of a 1D field realization, from the
/// analytically differentiated Nyström extension.
pub fn field_derivatives(field: &KlField, xi: &[f64], points: &[Vec<f64>], order: usize) -> Result<Vec<f64>> {
    if field.grid.dim() != 1 {
        return Err(Error::InvalidInput("field derivatives are only available for 1D fields".into()));
    }
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidInput(format!("field derivative order must be 1 or 2, got {order}")));
    }
    field.check_germs(xi)?;
    points
        .iter()
        .map(|p| {
            field.check_point(p)?;
            Ok(combine(field, xi, &field.extended_modes(p, order)))
        })
        .collect()
}

/// Value, first and second derivative of a 1D realization at `x`, sharing
/// one pass over the grid.
pub fn field_jet(field: &KlField, xi: &[f64], x: f64) -> Result<[f64; 3]> {
    if field.grid.dim() != 1 {
        return Err(Error::InvalidInput("field derivatives are only available for 1D fields".into()));
    }
    field.check_germs(xi)?;
    let n = field.grid.len();
    let mut acc = [vec![0.0; field.n_modes()], vec![0.0; field.n_modes()], vec![0.0; field.n_modes()]];
    for j in 0..n {
        let s = field.grid.node(j)[0];
        let w = field.weights[j];
        let k = [
            w * field.kernel.derivative_1d(x, s, 0),
            w * field.kernel.derivative_1d(x, s, 1),
            w * field.kernel.derivative_1d(x, s, 2),
        ];
        for i in 0..field.n_modes() {
            let phi = field.modes[(j, i)];
            for d in 0..3 {
                acc[d][i] += k[d] * phi;
            }
        }
    }
    let mut out = [field.mean, 0.0, 0.0];
    for i in 0..field.n_modes() {
        let lam = field.spectrum[i];
        if lam == 0.0 {
            continue;
        }
        let c = xi[i] / lam.sqrt();
        for d in 0..3 {
            out[d] += c * acc[d][i];
        }
    }
    Ok(out)
}
