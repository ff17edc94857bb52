use misgraph::ggm::{glasso_solve, kkt_check, GlassoOptions};
use misgraph::ggm::{correlation_matrix, desparsify, partial_correlations};
use misgraph::glasso_fit;
use misgraph::linalg::spd_inverse;
use misgraph::simulate::generate_gaussian;
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_correlation(p: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Array2::from_shape_fn((p, p + 3), |_| rng.random_range(-1.0..1.0));
    let mut s = a.dot(&a.t()) + Array2::<f64>::eye(p) * 0.1;
    let d: Vec<f64> = s.diag().iter().map(|v| v.sqrt()).collect();
    for i in 0..p {
        for j in 0..p {
            s[[i, j]] /= d[i] * d[j];
        }
        s[[i, i]] = 1.0;
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solutions_satisfy_kkt(p in 2usize..9, seed in any::<u64>(), lam in 0.01f64..0.6) {
        let s = random_correlation(p, seed);
        let sol = glasso_solve(s.view(), lam, &GlassoOptions::for_scalar::<f64>()).unwrap();
        let kkt = kkt_check(s.view(), sol.theta.view(), lam).unwrap();
        prop_assert!(kkt.max_violation() < 1e-6, "{kkt:?}");
        prop_assert!(sol.duality_gap < 1e-6);
        for i in 0..p {
            for j in 0..p {
                prop_assert_eq!(sol.theta[[i, j]], sol.theta[[j, i]]);
            }
        }
    }

    #[test]
    fn components_match_thresholded_covariance(p in 3usize..9, seed in any::<u64>(), lam in 0.05f64..0.8) {
        let s = random_correlation(p, seed);
        let t = glasso_fit(s.view(), lam).unwrap();
        let by_theta = components(p, |i, j| t[[i, j]] != 0.0);
        let by_screen = components(p, |i, j| s[[i, j]].abs() > lam);
        prop_assert_eq!(by_theta, by_screen);
    }

    #[test]
    fn large_penalty_gives_diagonal(p in 2usize..8, seed in any::<u64>()) {
        let s = random_correlation(p, seed);
        let t = glasso_fit(s.view(), 1.0).unwrap();
        prop_assert_eq!(t, Array2::<f64>::eye(p));
    }
}

/// Component label of every vertex, labels being the smallest member.
fn components(p: usize, linked: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut label: Vec<usize> = (0..p).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..p {
            for j in 0..p {
                if i != j && linked(i, j) && label[j] < label[i] {
                    label[i] = label[j];
                    changed = true;
                }
            }
        }
    }
    label
}

#[test]
fn two_by_two_soft_threshold() {
    for &(r, lam) in &[(0.6f64, 0.1), (-0.45, 0.2), (0.3, 0.3), (0.05, 0.4), (0.9, 0.0f64)] {
        let s = array![[1.0, r], [r, 1.0]];
        let t = glasso_fit(s.view(), lam).unwrap();
        let w: f64 = if r > 0.0 { (r - lam).max(0.0) } else { (r + lam).min(0.0) };
        let det = 1.0 - w * w;
        assert!((t[[0, 0]] - 1.0 / det).abs() < 1e-8, "r={r} lam={lam}");
        assert!((t[[0, 1]] + w / det).abs() < 1e-8, "r={r} lam={lam}");
    }
}

#[test]
fn f32_agrees_with_f64() {
    let s = random_correlation(6, 3);
    let t64 = glasso_fit(s.view(), 0.1).unwrap();
    let t32 = glasso_fit(s.mapv(|v| v as f32).view(), 0.1f32).unwrap();
    for (a, b) in t64.iter().zip(t32.iter()) {
        assert!((a - *b as f64).abs() < 1e-3, "{a} vs {b}");
    }
}

/// Correlation of the residuals of columns i and j after least-squares
/// regression on every other column.
fn residual_partial_corr(x: &Array2<f64>, i: usize, j: usize) -> f64 {
    let (n, p) = x.dim();
    let rest: Vec<usize> = (0..p).filter(|&k| k != i && k != j).collect();
    let mut z = Array2::<f64>::ones((n, rest.len() + 1));
    for (c, &k) in rest.iter().enumerate() {
        z.column_mut(c + 1).assign(&x.column(k));
    }
    let ztz_inv = spd_inverse(z.t().dot(&z).view()).unwrap();
    let resid = |col: usize| {
        let y = x.column(col).to_owned();
        let beta = ztz_inv.dot(&z.t().dot(&y));
        y - z.dot(&beta)
    };
    let (ri, rj) = (resid(i), resid(j));
    ri.dot(&rj) / (ri.dot(&ri) * rj.dot(&rj)).sqrt()
}

#[test]
fn partial_correlations_match_regression_residuals() {
    // AR(1) chain with coefficient 0.5: interior neighbours have population
    // partial correlation 0.5/1.25 = 0.4, non-neighbours 0.
    let p = 5;
    let phi: f64 = 0.5;
    let mut prec = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        prec[[i, i]] = if i == 0 || i == p - 1 { 1.0 } else { 1.0 + phi * phi };
        if i + 1 < p {
            prec[[i, i + 1]] = -phi;
            prec[[i + 1, i]] = -phi;
        }
    }
    let x = generate_gaussian(prec.view(), 20_000, 21).unwrap();
    let s = correlation_matrix(x.view()).unwrap();
    let theta = glasso_fit(s.view(), 0.0).unwrap();
    let d = desparsify(theta.view(), s.view(), x.nrows()).unwrap();
    let pc = partial_correlations(d.t_hat.view()).unwrap();
    for i in 0..p {
        for j in (i + 1)..p {
            let oracle = residual_partial_corr(&x, i, j);
            assert!((pc[[i, j]] - oracle).abs() < 1e-9, "({i},{j}): {} vs {oracle}", pc[[i, j]]);
        }
    }
    assert!((pc[[1, 2]] - 0.4).abs() < 0.03);
    assert!((pc[[0, 1]] - 0.5 / 1.25f64.sqrt()).abs() < 0.03);
    assert!(pc[[0, 2]].abs() < 0.03);
}

#[test]
fn desparsified_z_is_standard_normal_under_independence() {
    let (n, p) = (600, 6);
    let mut zs = Vec::new();
    for rep in 0..150 {
        let x = generate_gaussian(Array2::<f64>::eye(p).view(), n, 500 + rep).unwrap();
        let s = correlation_matrix(x.view()).unwrap();
        let theta = glasso_fit(s.view(), 0.05).unwrap();
        let d = desparsify(theta.view(), s.view(), n).unwrap();
        for i in 0..p {
            for j in (i + 1)..p {
                zs.push(d.z[[i, j]]);
            }
        }
    }
    let m = zs.iter().sum::<f64>() / zs.len() as f64;
    let v = zs.iter().map(|z| (z - m).powi(2)).sum::<f64>() / (zs.len() - 1) as f64;
    assert!(m.abs() < 0.1, "mean {m}");
    assert!((v - 1.0).abs() < 0.15, "variance {v}");
}
