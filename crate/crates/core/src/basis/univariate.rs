//! Orthonormal univariate polynomials and their derivatives.
//!
//! Both families satisfy the symmetric three-term recurrence
//!
//! ```text
//! ξ ψ_n(ξ) = b_{n+1} ψ_{n+1}(ξ) + b_n ψ_{n-1}(ξ)
//! ```
//!
//! with `b_n = n / sqrt(4n² - 1)` for Legendre (uniform measure on [-1, 1])
//! and `b_n = sqrt(n)` for probabilists' Hermite (standard normal measure).
//! Differentiating `d` times gives
//!
//! ```text
//! b_{n+1} ψ_{n+1}^{(d)} = ξ ψ_n^{(d)} + d ψ_n^{(d-1)} - b_n ψ_{n-1}^{(d)}
//! ```
//!
//! which is what [`UnivariateTable`] evaluates.

/// Polynomial family paired with a germ distribution (Wiener–Askey scheme).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Orthonormal Legendre polynomials, uniform germ on [-1, 1].
    Legendre,
    /// Orthonormal probabilists' Hermite polynomials, standard normal germ.
    Hermite,
}

impl Family {
    #[inline]
    fn recurrence(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Family::Legendre => nf / (4.0 * nf * nf - 1.0).sqrt(),
            Family::Hermite => nf.sqrt(),
        }
    }
}

/// Values of `ψ_n^{(d)}(ξ)` for all `n ≤ max_degree`, `d ≤ max_deriv`.
#[derive(Debug, Clone)]
pub struct UnivariateTable {
    max_degree: usize,
    values: Vec<f64>,
}

impl UnivariateTable {
    pub fn new(family: Family, max_degree: usize, max_deriv: usize, xi: f64) -> Self {
        let width = max_degree + 1;
        let mut values = vec![0.0; width * (max_deriv + 1)];
        for d in 0..=max_deriv {
            let (lower, current) = values.split_at_mut(d * width);
            let row = &mut current[..width];
            let prev_row = if d > 0 { Some(&lower[(d - 1) * width..]) } else { None };
            row[0] = if d == 0 { 1.0 } else { 0.0 };
            for n in 0..max_degree {
                let mut acc = xi * row[n];
                if let Some(prev) = prev_row {
                    acc += d as f64 * prev[n];
                }
                if n > 0 {
                    acc -= family.recurrence(n) * row[n - 1];
                }
                row[n + 1] = acc / family.recurrence(n + 1);
            }
        }
        Self { max_degree, values }
    }

    #[inline]
    pub fn get(&self, degree: usize, deriv: usize) -> f64 {
        self.values[deriv * (self.max_degree + 1) + degree]
    }
}

/// Evaluates the `deriv`-th derivative of the orthonormal polynomial of the
/// given degree at germ value `xi`.
pub fn eval_univariate(family: Family, degree: usize, deriv: usize, xi: f64) -> f64 {
    if deriv > degree {
        return 0.0;
    }
    UnivariateTable::new(family, degree, deriv, xi).get(degree, deriv)
}
