use ebfir::asymptotics::report::{first_decrease, unit_lambda1_filter};
use ebfir::asymptotics::theorems::{ridge_theorem1, ridge_theorem3};
use ebfir::asymptotics::*;
use ebfir::estimators::kernel::kernel_matrix_unchecked;
use ebfir::estimators::{KernelFamily, KernelSpec, Objective, OptimizerOptions};
use ebfir::linalg::{
    condition_number, rel_diff, rel_diff_scalar, spd_inverse, sym_eigen, Mat, Vector,
};
use ebfir::rng::RandomStream;
use ebfir::signal::{generate_t1, impulse_response, FilterSpec, NoiseSpec};

fn t1_theta(n: usize, seed: u64) -> Vector {
    generate_t1(n, &mut RandomStream::new(seed)).theta0
}

/// `R_u(τ)` by summing the impulse response products directly.
fn series_autocov(h: &[f64], tau: usize) -> f64 {
    if tau >= h.len() {
        return 0.0;
    }
    h.iter().zip(&h[tau..]).map(|(a, b)| a * b).sum()
}

#[test]
fn sigma_white_noise_is_scaled_identity() {
    let f = FilterSpec::second_order(0.0, 1.5)
        .unwrap()
        .with_innovations(2.0, 3.0)
        .unwrap();
    let s = sigma_matrix(&f, 5);
    assert!((s - Mat::identity(5, 5) * 4.5).norm() < 1e-14);
}

#[test]
fn sigma_closed_form_matches_series() {
    for a in [0.3, 0.7, 0.95] {
        let f = FilterSpec::second_order(a, 1.0).unwrap();
        let h = impulse_response(&f, 1e-17);
        let n = 20;
        let oracle = Mat::from_fn(n, n, |i, j| series_autocov(&h, i.abs_diff(j)));
        assert!(rel_diff(&sigma_matrix(&f, n), &oracle) < 1e-8, "a = {a}");
    }
}

#[test]
fn sigma_scaling_keeps_condition_number() {
    let f = FilterSpec::second_order(0.7, 1.0).unwrap();
    let g = FilterSpec::second_order(0.7, 3.0).unwrap();
    let (s1, s3) = (sigma_matrix(&f, 10), sigma_matrix(&g, 10));
    assert!(rel_diff(&s3, &(&s1 * 9.0)) < 1e-12);
    assert!(rel_diff_scalar(condition_number(&s3), condition_number(&s1)) < 1e-12);
}

#[test]
fn c_gamma_closed_form_matches_series_and_is_symmetric() {
    let f = FilterSpec::second_order(0.5, 1.0).unwrap();
    let closed = c_gamma(&f, 3);
    assert_eq!(closed, closed.transpose());
    let h = impulse_response(&f, 1e-17);
    let r = |t: i64| series_autocov(&h, t.unsigned_abs() as usize);
    let oracle = Mat::from_fn(9, 9, |i, j| {
        let k = (i / 3).abs_diff(j / 3) as i64;
        let l = (i % 3).abs_diff(j % 3) as i64;
        (-400..=400)
            .map(|tau| r(tau) * r(tau + k - l) + r(tau + k) * r(tau - l))
            .sum::<f64>()
    });
    assert!(rel_diff(&closed, &oracle) < 1e-8);
}

#[test]
fn eta_star_ridge_is_analytic_and_scales() {
    let theta = t1_theta(20, 3);
    let spec = KernelSpec::new(KernelFamily::Ridge);
    let e1 = eta_star(&spec, &theta, &OptimizerOptions::default()).unwrap();
    assert!(rel_diff_scalar(e1[0], theta.norm_squared() / 20.0) < 1e-15);
    let e2 = eta_star(&spec, &(&theta * 3.0), &OptimizerOptions::default()).unwrap();
    assert!(rel_diff_scalar(e2[0], 9.0 * e1[0]) < 1e-14);
}

#[test]
fn eta_star_tc_beats_grid_and_is_stationary() {
    let theta = t1_theta(20, 11);
    let spec = KernelSpec::new(KernelFamily::Tc);
    let eta = eta_star(&spec, &theta, &OptimizerOptions::default()).unwrap();
    let obj = WbObjective {
        family: KernelFamily::Tc,
        theta0: theta.clone(),
    };
    let (best, grad) = obj.value_grad(&eta).unwrap();
    assert!(grad.iter().map(|g| g * g).sum::<f64>().sqrt() <= 1e-6);
    // 100 x 100 grid in (log c, logit α)
    let mut grid_best = f64::INFINITY;
    for i in 0..100 {
        let c = (-5.0 + 10.0 * i as f64 / 99.0).exp();
        for j in 0..100 {
            let z = -6.0 + 12.0 * j as f64 / 99.0;
            let alpha = 1.0 / (1.0 + (-z).exp());
            if let Some(v) = obj.value(&[c, alpha]) {
                grid_best = grid_best.min(v);
            }
        }
    }
    assert!(best <= grid_best + 1e-9);
}

#[test]
fn ridge_closed_forms_match_generic_pipeline() {
    let spec = KernelSpec::new(KernelFamily::Ridge);
    for a in [0.0, 0.5, 0.9] {
        let f = FilterSpec::second_order(a, 1.0).unwrap();
        let stats = SecondOrderStats::new(&f, 10);
        let noise = NoiseSpec::new(0.8, 3.5 * 0.64).unwrap();
        for seed in 0..20 {
            let theta = t1_theta(10, seed);
            let g = generic_report(
                &spec,
                &theta,
                &stats,
                &noise,
                1000,
                &OptimizerOptions::default(),
            )
            .unwrap();
            let r = ridge_report(&theta, &stats, &noise, 1000).unwrap();
            for (x, y) in [
                (&g.a_b, &r.a_b),
                (&g.b_b, &r.b_b),
                (&g.v_b_h, &r.v_b_h),
                (&g.third.c_b, &r.third.c_b),
                (&g.third.v_b3_11, &r.third.v_b3_11),
                (&g.third.v_b3_12, &r.third.v_b3_12),
                (&g.third.v_b3_13, &r.third.v_b3_13),
                (&g.third.v_b3_2, &r.third.v_b3_2),
                (&g.third.v_b_ar, &r.third.v_b_ar),
            ] {
                assert!(
                    rel_diff(x, y) <= 1e-10,
                    "a = {a}, seed = {seed}: {}",
                    rel_diff(x, y)
                );
            }
            let de = (&g.third.e_b_ar - &r.third.e_b_ar).norm() / r.third.e_b_ar.norm();
            assert!(de <= 1e-10);
        }
    }
}

#[test]
fn ridge_e_b_ar_matches_closed_form() {
    let f = FilterSpec::second_order(0.7, 1.0).unwrap();
    let stats = SecondOrderStats::new(&f, 8);
    let theta = t1_theta(8, 2);
    let noise = NoiseSpec::gaussian(1.3).unwrap();
    let r = ridge_report(&theta, &stats, &noise, 500).unwrap();
    let si = spd_inverse(&stats.sigma, "Sigma").unwrap();
    let expect = -(&si * &theta) * (8.0 * 1.3 / theta.norm_squared()) / 500f64.sqrt();
    assert!((&r.third.e_b_ar - &expect).norm() <= 1e-12 * expect.norm());
}

#[test]
fn a_b_matches_finite_difference_hessian() {
    for family in [KernelFamily::Tc, KernelFamily::Dc, KernelFamily::Ss] {
        let theta = t1_theta(12, 5);
        let spec = KernelSpec::new(family);
        let eta = match family {
            KernelFamily::Dc => vec![2.0, 0.8, 0.3],
            _ => vec![2.0, 0.8],
        };
        let sigma = sigma_matrix(&FilterSpec::second_order(0.3, 1.0).unwrap(), 12);
        let t1 = theorem1(&spec, &theta, &eta, &sigma, 1.0).unwrap();
        let obj = WbObjective {
            family,
            theta0: theta.clone(),
        };
        let p = eta.len();
        let grad = |x: &[f64]| obj.value_grad(x).unwrap().1;
        let mut fd = Mat::zeros(p, p);
        for l in 0..p {
            let h = 1e-5 * eta[l].abs().max(1e-3);
            let mut up = eta.clone();
            let mut dn = eta.clone();
            up[l] += h;
            dn[l] -= h;
            let (gu, gd) = (grad(&up), grad(&dn));
            for k in 0..p {
                fd[(k, l)] = (gu[k] - gd[k]) / (2.0 * h);
            }
        }
        assert!(
            rel_diff(&fd, &t1.a_b) <= 1e-5,
            "{family:?}: {}",
            rel_diff(&fd, &t1.a_b)
        );
    }
}

fn min_max_eig(m: &Mat) -> (f64, f64, f64) {
    let (v, _) = sym_eigen(m);
    (v[v.len() - 1], v[0], m.norm())
}

#[test]
fn covariance_blocks_are_psd() {
    let theta = t1_theta(10, 9);
    for family in [
        KernelFamily::Ridge,
        KernelFamily::Tc,
        KernelFamily::Dc,
        KernelFamily::Ss,
    ] {
        for a in [0.05, 0.7] {
            let stats = SecondOrderStats::new(&FilterSpec::second_order(a, 1.0).unwrap(), 10);
            let noise = NoiseSpec::gaussian(1.0).unwrap();
            let r = generic_report(
                &KernelSpec::new(family),
                &theta,
                &stats,
                &noise,
                1000,
                &OptimizerOptions::default(),
            )
            .unwrap();
            for m in [
                &r.v_b_h,
                &r.v_als_1,
                &r.v_als_2,
                &r.third.v_b3_11,
                &r.third.v_b3_12,
                &r.third.v_b3_13,
                &r.third.v_b_ar,
            ] {
                assert_eq!(m, &m.transpose());
                let (lo, _, norm) = min_max_eig(m);
                assert!(lo >= -1e-10 * norm, "{family:?} a = {a}: {lo}");
            }
            assert!(r.summary.amse1 <= r.summary.amse2);
        }
    }
}

#[test]
fn ridge_cross_block_is_indefinite() {
    // x = Σθ₀ gives xᵀ V_{b3,2} x = nσ⁴ > 0, so the block cannot be NSD.
    let theta = t1_theta(10, 4);
    let stats = SecondOrderStats::new(&FilterSpec::second_order(0.7, 1.0).unwrap(), 10);
    let r = ridge_report(&theta, &stats, &NoiseSpec::gaussian(1.0).unwrap(), 1000).unwrap();
    let x = &stats.sigma * &theta;
    let q = x.dot(&(&r.third.v_b3_2 * &x));
    assert!(rel_diff_scalar(q, 10.0) < 1e-8);
    let (lo, hi, _) = min_max_eig(&r.third.v_b3_2);
    assert!(lo < 0.0 && hi > 0.0);
}

#[test]
fn condition_bounds_bracket_trace() {
    let mut rng = RandomStream::new(17);
    let a = Mat::identity(4, 4) * 2.0 + Mat::from_fn(4, 4, |i, j| (i + 2 * j) as f64 * 0.1);
    let b = condition_bounds(&a, &Mat::identity(4, 4), 1).unwrap();
    assert!(rel_diff_scalar(b.upper, (&a * a.transpose()).trace()) < 1e-14);
    assert!(b.contains_trace());
    for k in 1..=3 {
        let g = Mat::from_fn(5, 5, |_, _| rng.standard_normal());
        let pd = &g * g.transpose() + Mat::identity(5, 5) * 0.1;
        let a = Mat::from_fn(5, 3, |_, _| rng.standard_normal());
        let b = condition_bounds(&a, &pd, k).unwrap();
        assert!(b.contains_trace(), "k = {k}: {b:?}");
        assert!(!b.degenerate);
    }
}

#[test]
fn v_b_h_trace_grows_as_smallest_eigenvalue_shrinks() {
    let theta = t1_theta(6, 1);
    let stats = SecondOrderStats::new(&FilterSpec::second_order(0.5, 1.0).unwrap(), 6);
    let mut last = 0.0;
    for shrink in [1.0, 0.5, 0.2, 0.05, 0.01] {
        let mut vals = stats.eigenvalues.clone();
        vals[5] *= shrink;
        let sigma =
            &stats.eigenvectors * Mat::from_diagonal(&vals) * stats.eigenvectors.transpose();
        let si = spd_inverse(&sigma, "Sigma").unwrap();
        let tr = ridge_theorem1(&theta, &si, 1.0).v_b_h.trace();
        assert!(tr > last);
        last = tr;
    }
}

#[test]
fn ridge_sweep_monotonicity() {
    let systems: Vec<Vector> = (0..5).map(|s| t1_theta(20, 100 + s)).collect();
    let grid: Vec<f64> = (0..100)
        .map(|i| 0.001 + (0.99 - 0.001) * i as f64 / 99.0)
        .collect();
    let rows = sweep(&systems, &grid, &[1000, 100_000], 1.0).unwrap();
    for chunk in rows.chunks(grid.len()) {
        let col = |f: fn(&SweepRow) -> f64| chunk.iter().map(f).collect::<Vec<_>>();
        assert_eq!(first_decrease(&col(|r| r.cond_sigma)), None);
        assert_eq!(first_decrease(&col(|r| r.e_b_ar_norm2)), None);
        assert_eq!(first_decrease(&col(|r| r.trace_v_als)), None);
    }
    for s in 0..systems.len() {
        let turn = |k: usize| {
            let chunk = &rows[(2 * s + k) * grid.len()..(2 * s + k + 1) * grid.len()];
            first_decrease(&chunk.iter().map(|r| r.trace_v_b_ar).collect::<Vec<_>>())
                .unwrap_or(grid.len())
        };
        assert!(turn(1) >= turn(0));
    }
}

#[test]
fn unit_lambda1_normalization() {
    let f = unit_lambda1_filter(0.8, 20).unwrap();
    let (v, _) = sym_eigen(&sigma_matrix(&f, 20));
    assert!((v[0] - 1.0).abs() < 1e-12);
}

#[test]
fn report_round_trips_through_json() {
    let theta = t1_theta(4, 8);
    let stats = SecondOrderStats::new(&FilterSpec::second_order(0.3, 1.0).unwrap(), 4);
    let r = ridge_report(&theta, &stats, &NoiseSpec::gaussian(1.0).unwrap(), 100).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    let back: AsymptoticReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.third.v_b_ar, r.third.v_b_ar);
    assert_eq!(back.summary, r.summary);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["v_als_1"][0].as_array().unwrap().len(), 4);
}

#[test]
fn kernel_sanity_for_ridge_helpers() {
    let theta = t1_theta(5, 6);
    let s = theta.norm_squared();
    let km = kernel_matrix_unchecked(KernelFamily::Ridge, &[s / 5.0], 5);
    let si = Mat::identity(5, 5);
    let t1 = ridge_theorem1(&theta, &si, 1.0);
    assert!(rel_diff(&t1.p_inv, &spd_inverse(&km.p, "P").unwrap()) < 1e-14);
    let stats = SecondOrderStats::new(&FilterSpec::second_order(0.0, 1.0).unwrap(), 5);
    let t2 = theorem2(&stats, 1.0, 100).unwrap();
    let t3 = ridge_theorem3(&theta, &t2, &stats, &NoiseSpec::gaussian(1.0).unwrap(), 100);
    assert!(t3.amse[0] <= t3.amse[1]);
}
