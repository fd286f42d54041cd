use faer::{Mat, Side};
use pc2_core::basis::{binomial, eval_univariate, gen_multi_indices, BasisSpec, Family, InputSpec, Marginal};
use proptest::prelude::*;

/// Gauss nodes and probability weights from the Jacobi matrix of the
/// monic three-term recurrence (Golub-Welsch).
fn gauss_rule(family: Family, n: usize) -> (Vec<f64>, Vec<f64>) {
    let off = |k: usize| -> f64 {
        let k = k as f64;
        match family {
            Family::Legendre => k / (4.0 * k * k - 1.0).sqrt(),
            Family::Hermite => k.sqrt(),
        }
    };
    let j = Mat::from_fn(n, n, |a, b| if a + 1 == b { off(b) } else if b + 1 == a { off(a) } else { 0.0 });
    let evd = j.self_adjoint_eigen(Side::Lower).unwrap();
    let s = evd.S().column_vector();
    let u = evd.U();
    ((0..n).map(|i| s[i]).collect(), (0..n).map(|i| u[(0, i)] * u[(0, i)]).collect())
}

fn check_orthonormal(family: Family) {
    let (x, w) = gauss_rule(family, 32);
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    for n in 0..=12 {
        for m in 0..=12 {
            let ip: f64 = x
                .iter()
                .zip(&w)
                .map(|(&xi, &wi)| wi * eval_univariate(family, n, 0, xi) * eval_univariate(family, m, 0, xi))
                .sum();
            let expected = if n == m { 1.0 } else { 0.0 };
            assert!((ip - expected).abs() < 1e-10, "{family:?} <{n},{m}> = {ip}");
        }
    }
}

#[test]
fn legendre_orthonormal_under_gauss_quadrature() {
    check_orthonormal(Family::Legendre);
}

#[test]
fn hermite_orthonormal_under_gauss_quadrature() {
    check_orthonormal(Family::Hermite);
}

#[test]
fn low_degree_closed_forms() {
    let s3 = 3f64.sqrt();
    let s5 = 5f64.sqrt();
    for &x in &[-0.9, -0.2, 0.0, 0.45, 1.0] {
        assert!((eval_univariate(Family::Legendre, 1, 0, x) - s3 * x).abs() < 1e-14);
        assert!((eval_univariate(Family::Legendre, 2, 0, x) - s5 * 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-14);
        assert!((eval_univariate(Family::Hermite, 2, 0, x) - (x * x - 1.0) / 2f64.sqrt()).abs() < 1e-14);
        assert!((eval_univariate(Family::Hermite, 3, 1, x) - (3.0 * x * x - 3.0) / 6f64.sqrt()).abs() < 1e-13);
    }
}

fn mixed_basis(order: usize) -> BasisSpec {
    let input = InputSpec::from_pairs([
        ("x", Marginal::deterministic(0.0, 2.0).unwrap()),
        ("k", Marginal::uniform(1.0, 4.0).unwrap()),
        ("z", Marginal::gaussian(0.5, 0.2).unwrap()),
    ])
    .unwrap();
    BasisSpec::new(input, order, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn univariate_derivative_matches_finite_difference(
        n in 0usize..=10,
        x in -0.95f64..0.95,
        hermite in any::<bool>(),
    ) {
        let family = if hermite { Family::Hermite } else { Family::Legendre };
        let h = 1e-5;
        for d in 0..3 {
            let fd = (eval_univariate(family, n, d, x + h) - eval_univariate(family, n, d, x - h)) / (2.0 * h);
            let exact = eval_univariate(family, n, d + 1, x);
            prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "n={n} d={d}: {fd} vs {exact}");
        }
    }

    #[test]
    fn design_rows_follow_chain_rule(
        x in 0.05f64..1.95,
        k in 1.05f64..3.95,
        z in -0.5f64..1.5,
    ) {
        let basis = mixed_basis(4);
        let p = [x, k, z];
        let h = 1e-5;
        for dim in 0..3 {
            let mut deriv = vec![0; 3];
            deriv[dim] = 1;
            let exact = basis.row(&p, &deriv).unwrap();
            let mut hi = p;
            let mut lo = p;
            hi[dim] += h;
            lo[dim] -= h;
            let up = basis.row(&hi, &[0, 0, 0]).unwrap();
            let dn = basis.row(&lo, &[0, 0, 0]).unwrap();
            for j in 0..exact.len() {
                let fd = (up[j] - dn[j]) / (2.0 * h);
                prop_assert!((fd - exact[j]).abs() <= 1e-5 * (1.0 + exact[j].abs()));
            }
        }
    }

    #[test]
    fn total_degree_cardinality(d in 1usize..6, p in 0usize..8) {
        let set = gen_multi_indices(d, p, 1.0).unwrap();
        prop_assert_eq!(set.len(), binomial(d + p, p));
    }

    #[test]
    fn hyperbolic_sets_are_nested_in_q(d in 1usize..5, p in 1usize..9, q1 in 0.3f64..1.0, dq in 0.0f64..0.5) {
        let q2 = (q1 + dq).min(1.0);
        let small = gen_multi_indices(d, p, q1).unwrap();
        let large = gen_multi_indices(d, p, q2).unwrap();
        prop_assert!(small.len() <= large.len());
        for alpha in small.iter() {
            prop_assert!(large.contains(alpha));
            prop_assert!(alpha.q_norm(q1) <= p as f64 + 1e-9);
        }
    }
}

#[test]
fn chain_rule_scale_for_affine_germ_map() {
    let input = InputSpec::from_pairs([("x", Marginal::deterministic(2.0, 6.0).unwrap())]).unwrap();
    let basis = BasisSpec::new(input, 5, 1.0).unwrap();
    let x = 3.3;
    let xi = (x - 4.0) / 2.0;
    for (d, scale) in [(1usize, 0.5f64), (2, 0.25)] {
        let row = basis.row(&[x], &[d]).unwrap();
        for (j, alpha) in basis.indices().iter().enumerate() {
            let exact = eval_univariate(Family::Legendre, alpha.degrees()[0], d, xi) * scale;
            assert!((row[j] - exact).abs() < 1e-12);
        }
    }
}

#[test]
fn hyperbolic_cardinalities_of_benchmark_bases() {
    assert_eq!(gen_multi_indices(6, 10, 0.7).unwrap().len(), 887);
    assert_eq!(gen_multi_indices(7, 8, 0.6).unwrap().len(), 302);
    assert_eq!(gen_multi_indices(4, 10, 1.0).unwrap().len(), 1001);
    assert_eq!(gen_multi_indices(4, 14, 1.0).unwrap().len(), 3060);
}
