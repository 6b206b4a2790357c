#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use spike_core::classifiers::OracleModel;
use spike_core::simgen::{
    asymptotic_error, make_scenario, normal_cdf, replication_rng, Block, Noise, PopulationTruth, ScenarioId,
    ScenarioSpec, StructuredCov,
};
use spike_core::{fit, FitOptions, KChoice};

fn spec(id: ScenarioId, p: usize) -> ScenarioSpec {
    ScenarioSpec {
        id,
        p,
        seed: 7,
        replications: 1,
    }
}

/// Dense `Γ_t = (I + 1 1ᵀ)/2`.
fn dense_gamma(t: usize) -> DMatrix<f64> {
    DMatrix::from_fn(t, t, |i, j| if i == j { 1.0 } else { 0.5 })
}

/// Dense `c · B R B` with `R_ij = ρ^{|i−j|^{1/3}}`, `B_rr² = 0.5 + r/(t+1)` (r from 1).
fn dense_omega(t: usize, rho: f64, c: f64) -> DMatrix<f64> {
    DMatrix::from_fn(t, t, |i, j| {
        let bi = (0.5 + (i + 1) as f64 / (t as f64 + 1.0)).sqrt();
        let bj = (0.5 + (j + 1) as f64 / (t as f64 + 1.0)).sqrt();
        let d = (i as f64 - j as f64).abs();
        c * bi * bj * rho.powf(d.powf(1.0 / 3.0))
    })
}

fn place(out: &mut DMatrix<f64>, at: usize, block: &DMatrix<f64>) {
    out.view_mut((at, at), block.shape()).copy_from(block);
}

/// A mixed-block covariance with a low-rank term and its dense reference.
fn mixed(g: &mut ChaCha8Rng, low_rank: bool) -> (StructuredCov, DMatrix<f64>) {
    let diag: Vec<f64> = (0..9).map(|i| 0.3 + i as f64 * 0.4).collect();
    let p = 5 + 12 + 9;
    let mut dense = DMatrix::zeros(p, p);
    place(&mut dense, 0, &dense_gamma(5));
    place(&mut dense, 5, &dense_omega(12, 0.4, 1.7));
    place(
        &mut dense,
        17,
        &DMatrix::from_diagonal(&DVector::from_vec(diag.clone())),
    );
    let mut cov = StructuredCov::block_diagonal(vec![
        Block::intraclass(5),
        Block::omega(12, 0.4, 1.7),
        Block::Diagonal(diag),
    ])
    .unwrap();
    if low_rank {
        let u = gaussian_matrix(p, 2, g);
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        dense += &u * &c * u.transpose();
        cov = cov.with_low_rank(u, c).unwrap();
    }
    (cov, dense)
}

#[test]
fn intraclass_eigenvalues() {
    for t in 2..=50 {
        let cov = StructuredCov::intraclass(t).unwrap();
        let pairs = cov.top_eigenpairs(2).unwrap();
        assert!((pairs[0].0 - (t as f64 + 1.0) / 2.0).abs() < 1e-12);
        assert!((pairs[1].0 - 0.5).abs() < 1e-12);
        let flat = 1.0 / (t as f64).sqrt();
        assert!(pairs[0].1.iter().all(|&v| (v - flat).abs() < 1e-12));
        let (vals, _) = jacobi_eigen(&dense_gamma(t));
        assert!((vals[0] - pairs[0].0).abs() < 1e-10);
    }
}

#[test]
fn omega_entries_follow_the_definition() {
    let cov = StructuredCov::block_diagonal(vec![Block::omega(30, 0.3, 1.3)]).unwrap();
    let reference = dense_omega(30, 0.3, 1.3);
    for (i, j) in [(0, 0), (0, 1), (3, 11), (29, 0), (17, 17), (28, 29)] {
        assert!((cov.entry(i, j) - reference[(i, j)]).abs() < 1e-14);
    }
    // B_11² = 0.5 + 1/31
    assert!((cov.entry(0, 0) - 1.3 * (0.5 + 1.0 / 31.0)).abs() < 1e-14);
}

#[test]
fn structured_operations_match_dense() {
    let mut g = rng(51);
    for low_rank in [false, true] {
        let (a, da) = mixed(&mut g, low_rank);
        let (b, db) = mixed(&mut g, !low_rank);
        let p = da.nrows();
        assert!((a.dense() - &da).amax() < 1e-12);
        for _ in 0..5 {
            let u = gaussian_vector(p, &mut g);
            let v = gaussian_vector(p, &mut g);
            assert!((a.matvec(&v).unwrap() - &da * &v).amax() < 1e-10);
            assert!(rel_close(a.quad_form(&v).unwrap(), v.dot(&(&da * &v)), 1e-10));
            assert!(rel_close(a.bilinear(&u, &v).unwrap(), u.dot(&(&da * &v)), 1e-10));
        }
        let m = gaussian_matrix(p, 3, &mut g);
        assert!((a.mul_mat(&m).unwrap() - &da * &m).amax() < 1e-10);
        assert!(rel_close(a.trace(), trace(&da), 1e-12));
        assert!(rel_close(a.trace_sq().unwrap(), trace(&(&da * &da)), 1e-8));
        assert!(rel_close(a.cross_trace(&b).unwrap(), trace(&(&da * &db)), 1e-8));
    }
}

#[test]
fn structured_eigenpairs_match_dense() {
    let mut g = rng(52);
    for low_rank in [false, true] {
        let (cov, dense) = mixed(&mut g, low_rank);
        let (vals, vecs) = jacobi_eigen(&dense);
        let pairs = cov.top_eigenpairs(4).unwrap();
        for (r, (l, v)) in pairs.iter().enumerate() {
            assert!(rel_close(*l, vals[r], 1e-8), "r={r} {l} vs {}", vals[r]);
            assert!((v.norm() - 1.0).abs() < 1e-10);
            if (vals[r] - vals[r + 1]).abs() > 1e-3 && (r == 0 || (vals[r - 1] - vals[r]).abs() > 1e-3) {
                assert!((v.dot(&vecs.column(r)).abs() - 1.0).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn gamma_sampling_reproduces_the_covariance() {
    // Sample covariance per entry within 4 standard errors: 15 distinct
    // entries per noise law, so 4 rather than 3 keeps the family-wise error small.
    let t = 5;
    let draws = 100_000;
    let cov = StructuredCov::intraclass(t).unwrap();
    let target = dense_gamma(t);
    for (noise, seed) in [(Noise::Gaussian, 1), (Noise::ChiSquare, 2)] {
        let x = cov.sample_columns(draws, noise, &mut rng(seed)).unwrap();
        for a in 0..t {
            for b in a..t {
                let prods: Vec<f64> = (0..draws).map(|j| x[(a, j)] * x[(b, j)]).collect();
                let mean = prods.iter().sum::<f64>() / draws as f64;
                let var = prods.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
                let se = (var / draws as f64).sqrt();
                assert!(
                    (mean - target[(a, b)]).abs() < 4.0 * se,
                    "{noise:?} ({a},{b}) {mean}"
                );
            }
        }
    }
}

#[test]
fn omega_sampling_reproduces_the_covariance() {
    let cov = StructuredCov::block_diagonal(vec![Block::omega(8, 0.5, 2.0)]).unwrap();
    let draws = 50_000;
    let x = cov.sample_columns(draws, Noise::Gaussian, &mut rng(3)).unwrap();
    let emp = &x * x.transpose() / draws as f64;
    let target = dense_omega(8, 0.5, 2.0);
    assert!((emp - &target).norm() / target.norm() < 0.02);
}

/// Variance quantities straight from their definitions with dense matrices.
struct DenseDeltas {
    delta_oi: [f64; 2],
    delta_i: [f64; 2],
    delta_oi_a: [f64; 2],
    delta_i_a: [f64; 2],
}

fn dense_deltas(truth: &PopulationTruth, n: [usize; 2]) -> DenseDeltas {
    let p = truth.p();
    let s = [truth.sigma[0].dense(), truth.sigma[1].dense()];
    let a = [
        dense_projector(p, &truth.dirs[0]),
        dense_projector(p, &truth.dirs[1]),
    ];
    let a_star = (&a[0] + &a[1]) / 2.0;
    let a12 = &a[0] - &a[1];
    let sa = [&a[0] * &s[0] * &a[0], &a[1] * &s[1] * &a[1]];
    let ss = [&a_star * &s[0] * &a_star, &a_star * &s[1] * &a_star];
    let mu = &truth.mu[0] - &truth.mu[1];
    let mu_a = &a[0] * &truth.mu[0] - &a[1] * &truth.mu[1];
    let nf = [n[0] as f64, n[1] as f64];
    let tail = |m: &[DMatrix<f64>; 2]| {
        (0..2)
            .map(|l| trace(&(&m[l] * &m[l])) / (2.0 * nf[l] * (nf[l] - 1.0)))
            .sum::<f64>()
    };
    let quad = |m: &DMatrix<f64>, v: &DVector<f64>| v.dot(&(m * v));
    let mut out = DenseDeltas {
        delta_oi: [0.0; 2],
        delta_i: [0.0; 2],
        delta_oi_a: [0.0; 2],
        delta_i_a: [0.0; 2],
    };
    for i in 0..2 {
        let o = 1 - i;
        let do2 = trace(&(&s[i] * &s[i])) / nf[i] + trace(&(&s[0] * &s[1])) / nf[o] + tail(&s);
        out.delta_oi[i] = do2.sqrt();
        out.delta_i[i] = (do2 + quad(&s[i], &mu) + quad(&s[o], &mu) / nf[o]).sqrt();
        let doa2 = trace(&(&ss[i] * &sa[i])) / nf[i] + trace(&(&ss[i] * &sa[o])) / nf[o] + tail(&sa);
        out.delta_oi_a[i] = doa2.sqrt();
        let a12mu = &a12 * &truth.mu[i];
        let w = &mu_a - &a12mu / 2.0;
        let da2 =
            doa2 + quad(&ss[i], &mu_a) + quad(&sa[i], &a12mu) / (4.0 * nf[i]) + quad(&sa[o], &w) / nf[o];
        out.delta_i_a[i] = da2.sqrt();
    }
    out
}

fn assert_deltas(truth: &PopulationTruth, n: [usize; 2], tol: f64) {
    let got = truth.oracle_deltas(n[0], n[1]).unwrap();
    let want = dense_deltas(truth, n);
    for i in 0..2 {
        assert!(rel_close(got.delta_oi[i], want.delta_oi[i], tol));
        assert!(rel_close(got.delta_i[i], want.delta_i[i], tol));
        assert!(rel_close(got.delta_oi_a[i], want.delta_oi_a[i], tol));
        assert!(rel_close(got.delta_i_a[i], want.delta_i_a[i], tol));
        assert!(rel_close(
            got.edot[i],
            normal_cdf(-truth.delta / (2.0 * want.delta_i[i])),
            tol
        ));
        assert!(rel_close(
            got.edot_a[i],
            normal_cdf(-truth.delta_a / (2.0 * want.delta_i_a[i])),
            tol
        ));
    }
}

#[test]
fn variance_quantities_match_dense_definitions() {
    let mut g = rng(53);
    let p = 40;
    let sigma = [
        StructuredCov::block_diagonal(vec![
            Block::intraclass(9),
            Block::omega(14, 0.3, 1.0),
            Block::Diagonal((0..17).map(|i| 1.0 + 0.1 * i as f64).collect()),
        ])
        .unwrap(),
        StructuredCov::block_diagonal(vec![
            Block::omega(10, 0.5, 2.0),
            Block::intraclass(12),
            Block::Diagonal(vec![1.5; 18]),
        ])
        .unwrap(),
    ];
    let mu = [gaussian_vector(p, &mut g), gaussian_vector(p, &mut g)];
    for k in [[0, 0], [1, 0], [2, 1], [2, 2]] {
        let truth = PopulationTruth::new(mu.clone(), sigma.clone(), k).unwrap();
        assert_deltas(&truth, [6, 11], 1e-10);
    }
}

#[test]
fn scenario_variance_quantities_match_dense_definitions() {
    for id in ScenarioId::ALL {
        let s = make_scenario(&spec(id, 64)).unwrap();
        assert_deltas(&s.truth, s.n, 1e-9);
    }
}

#[test]
fn shared_projector_variance_simplifies() {
    // Same leading coordinates in both classes, so A₁ = A₂.
    let p = 48;
    let mut d1 = vec![1.0; p];
    let mut d2 = vec![2.0; p];
    d1[0] = 30.0;
    d1[1] = 12.0;
    d2[0] = 50.0;
    d2[1] = 25.0;
    let mut g = rng(54);
    let mu = [gaussian_vector(p, &mut g), gaussian_vector(p, &mut g)];
    let sigma = [
        StructuredCov::diagonal(d1).unwrap(),
        StructuredCov::diagonal(d2).unwrap(),
    ];
    let truth = PopulationTruth::new(mu, sigma, [2, 2]).unwrap();
    let n = [7.0, 13.0];
    let got = truth.oracle_deltas(7, 13).unwrap();
    let a = dense_projector(p, &truth.dirs[0]);
    let s = [truth.sigma[0].dense(), truth.sigma[1].dense()];
    let sa = [&a * &s[0] * &a, &a * &s[1] * &a];
    let mu_a = &a * (&truth.mu[0] - &truth.mu[1]);
    for i in 0..2 {
        let o = 1 - i;
        let mut v = trace(&(&sa[i] * &sa[i])) / n[i] + trace(&(&sa[0] * &sa[1])) / n[o];
        for l in 0..2 {
            v += trace(&(&sa[l] * &sa[l])) / (2.0 * n[l] * (n[l] - 1.0));
        }
        v += mu_a.dot(&(&sa[i] * &mu_a)) + mu_a.dot(&(&sa[o] * &mu_a)) / n[o];
        assert!(rel_close(got.delta_i_a[i].powi(2), v, 1e-10));
    }
}

#[test]
fn no_spikes_means_no_change() {
    for id in ScenarioId::ALL {
        let s = make_scenario(&spec(id, 64)).unwrap();
        let t = PopulationTruth::new(s.truth.mu.clone(), s.truth.sigma.clone(), [0, 0]).unwrap();
        let d = t.oracle_deltas(s.n[0], s.n[1]).unwrap();
        assert_eq!(t.delta_a, t.delta);
        for i in 0..2 {
            assert!(rel_close(d.delta_i_a[i], d.delta_i[i], 1e-12));
            assert!(rel_close(d.delta_oi_a[i], d.delta_oi[i], 1e-12));
        }
    }
}

#[test]
fn block_scenarios_have_intraclass_spikes() {
    for (id, p) in [
        (ScenarioId::S2, 256),
        (ScenarioId::S2, 1024),
        (ScenarioId::S3, 256),
        (ScenarioId::S3, 100),
    ] {
        let s = make_scenario(&spec(id, p)).unwrap();
        // ⌈x⌉, treating values within rounding of an integer as that integer.
        let up = |x: f64| {
            if (x - x.round()).abs() < 1e-9 {
                x.round()
            } else {
                x.ceil()
            }
        };
        let (a, b) = if id == ScenarioId::S2 {
            (up((p as f64).powf(2.0 / 3.0)), up((p as f64).sqrt()))
        } else {
            (up(p as f64 / 3.0), up(p as f64 / 9.0))
        };
        for (i, scale) in [(0usize, 1.0), (1, 2.0)] {
            let l = &s.truth.lambdas[i];
            assert!((l[0] - (scale * a + 1.0) / 2.0).abs() < 1e-9, "{id} p={p} {l:?}");
            assert!((l[1] - (scale * b + 1.0) / 2.0).abs() < 1e-9, "{id} p={p} {l:?}");
        }
    }
}

#[test]
fn mixture_scenario_spikes_match_dense_eigenvalues() {
    for id in [ScenarioId::S4, ScenarioId::S5] {
        let s = make_scenario(&spec(id, 64)).unwrap();
        for i in 0..2 {
            let (vals, _) = jacobi_eigen(&s.truth.sigma[i].dense());
            for r in 0..2 {
                assert!(rel_close(s.truth.lambdas[i][r], vals[r], 1e-8));
            }
        }
    }
}

#[test]
fn mixture_sampler_has_the_stated_moments() {
    let s = make_scenario(&spec(ScenarioId::S4, 32)).unwrap();
    let draws = 40_000;
    for class in [1usize, 2] {
        let x = s
            .sampler
            .sample(class, draws, &mut rng(60 + class as u64))
            .unwrap();
        let mean = column_mean(&x);
        let mu = &s.truth.mu[class - 1];
        let sigma = s.truth.sigma[class - 1].dense();
        for f in 0..32 {
            let se = (sigma[(f, f)] / draws as f64).sqrt();
            // 32 coordinates per class: 4 standard errors.
            assert!((mean[f] - mu[f]).abs() < 4.0 * se, "class {class} feature {f}");
        }
        let mut xc = x.clone();
        for mut c in xc.column_iter_mut() {
            c -= &mean;
        }
        let emp = &xc * xc.transpose() / (draws - 1) as f64;
        assert!((emp - &sigma).norm() / sigma.norm() < 0.03);
    }
}

#[test]
fn sampling_is_reproducible_per_replication() {
    let s = make_scenario(&spec(ScenarioId::S3, 64)).unwrap();
    let a = s.sampler.sample(1, 5, &mut replication_rng(9, 3)).unwrap();
    let b = s.sampler.sample(1, 5, &mut replication_rng(9, 3)).unwrap();
    let c = s.sampler.sample(1, 5, &mut replication_rng(9, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn asymptotic_error_reference_values() {
    assert_eq!(asymptotic_error(0.0, 3.0), 0.5);
    assert!((asymptotic_error(2.0, 1.0) - 0.15865525393145707).abs() < 1e-15);
    assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
}

fn variance(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var)
}

#[test]
fn distance_rule_variance_matches_delta() {
    let s = make_scenario(&spec(ScenarioId::S1, 256)).unwrap();
    let draws = 5000;
    let opts = FitOptions::new(KChoice::Fixed(0, 0), false);
    for class in [1usize, 2] {
        let mut g = rng(70 + class as u64);
        let w: Vec<f64> = (0..draws)
            .map(|_| {
                let x1 = s.sampler.sample_class(1, s.n[0], &mut g).unwrap();
                let x2 = s.sampler.sample_class(2, s.n[1], &mut g).unwrap();
                let x0 = s.sampler.sample_point(class, &mut g).unwrap();
                fit(&x1, &x2, &opts).unwrap().dbda_score(&x0).unwrap().score
            })
            .collect();
        let (_, var) = variance(&w);
        let target = s.deltas.delta_i[class - 1].powi(2);
        assert!(
            (var / target - 1.0).abs() < 0.05,
            "class {class}: {var} vs {target}"
        );
    }
}

#[test]
fn oracle_rule_moments_match_delta_a() {
    // Block scenario with A₁ ≠ A₂, so the A₁,₂ terms matter.
    let s = make_scenario(&spec(ScenarioId::S2, 128)).unwrap();
    let t = &s.truth;
    let basis = t.basis();
    let mu_a = t.mu_a();
    let draws = 5000;
    for class in [1usize, 2] {
        let i = class - 1;
        let mut g = rng(80 + class as u64);
        let w: Vec<f64> = (0..draws)
            .map(|_| {
                let x1 = s.sampler.sample_class(1, s.n[0], &mut g).unwrap();
                let x2 = s.sampler.sample_class(2, s.n[1], &mut g).unwrap();
                let x0 = s.sampler.sample_point(class, &mut g).unwrap();
                OracleModel::fit(&basis, &x1, &x2)
                    .unwrap()
                    .score(&x0)
                    .unwrap()
                    .score
            })
            .collect();
        let (mean, var) = variance(&w);
        let sign = if class == 1 { -1.0 } else { 1.0 };
        let expected_mean = sign * t.delta_a / 2.0 - sign * t.mu[i].dot(&t.a12(&mu_a)) / 2.0;
        let target = s.deltas.delta_i_a[i].powi(2);
        assert!(
            (var / target - 1.0).abs() < 0.05,
            "class {class}: {var} vs {target}"
        );
        assert!((mean - expected_mean).abs() < 4.0 * (var / draws as f64).sqrt());
    }
}
