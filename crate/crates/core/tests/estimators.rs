use ebfir::estimators::{
    eb_cost, eb_estimate, kernel_matrix, KernelFamily, KernelSpec, OptimizerOptions,
    RegressionSummary,
};
use ebfir::exec::ExecMode;
use ebfir::linalg::{min_eigenvalue, Mat, Vector};
use ebfir::montecarlo::{Collection, ExperimentConfig, ExperimentPlan, SystemType};
use ebfir::rng::RandomStream;
use ebfir::signal::Dataset;

const FAMILIES: [KernelFamily; 4] = [
    KernelFamily::Ridge,
    KernelFamily::Tc,
    KernelFamily::Dc,
    KernelFamily::Ss,
];

fn dataset(a: f64) -> Dataset {
    plan(a, 1).dataset(0, 0, 0).unwrap()
}

fn plan(a: f64, records: usize) -> ExperimentPlan {
    let mut cfg = ExperimentConfig::new(KernelFamily::Ridge, SystemType::T1);
    cfg.n = 8;
    cfg.samples = 120;
    cfg.records = records;
    cfg.systems = 1;
    cfg.master_seed = 11;
    cfg.collections = vec![Collection { a, cu2: 0.5 }];
    ExperimentPlan::new(cfg, ExecMode::Sequential).unwrap()
}

fn random_eta(family: KernelFamily, rng: &mut RandomStream) -> Vec<f64> {
    let c = 10f64.powf(rng.uniform(-2.0, 2.0));
    let a = rng.uniform(0.05, 0.98);
    match family {
        KernelFamily::Ridge => vec![c],
        KernelFamily::Tc | KernelFamily::Ss => vec![c, a],
        KernelFamily::Dc => vec![c, a, rng.uniform(-0.98, 0.98)],
    }
}

/// `Yᵀ Z⁻¹ Y + log det Z` with `Z = Φ P Φᵀ + σ² I`.
fn marginal_cost(data: &Dataset, p: &Mat, sigma2: f64) -> f64 {
    let samples = data.samples();
    let z = &data.phi * p * data.phi.transpose() + Mat::identity(samples, samples) * sigma2;
    let chol = z.cholesky().unwrap();
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    data.y.dot(&chol.solve(&data.y)) + log_det
}

#[test]
fn kernels_are_positive_definite() {
    let mut rng = RandomStream::new(3);
    for family in FAMILIES {
        let spec = KernelSpec::new(family);
        for _ in 0..250 {
            let eta = random_eta(family, &mut rng);
            let p = kernel_matrix(&spec, &eta, 20).unwrap().p;
            assert!((&p - p.transpose()).norm() == 0.0);
            let floor = -1e-12 * p.norm();
            assert!(min_eigenvalue(&p) > floor, "{family:?} {eta:?}");
        }
    }
}

#[test]
fn reduced_cost_differs_from_marginal_likelihood_by_a_constant() {
    let data = dataset(0.7);
    let summary = RegressionSummary::from_dataset(&data).unwrap();
    let mut rng = RandomStream::new(4);
    for family in FAMILIES {
        let spec = KernelSpec::new(family);
        let mut offsets = Vec::new();
        for _ in 0..6 {
            let eta = random_eta(family, &mut rng);
            let p = kernel_matrix(&spec, &eta, 8).unwrap().p;
            let (reduced, _) = eb_cost(
                &eta,
                &summary.theta_ls,
                &summary.gram,
                summary.sigma2_hat,
                &spec,
            )
            .unwrap();
            offsets.push(marginal_cost(&data, &p, summary.sigma2_hat) - reduced);
        }
        let spread = offsets
            .iter()
            .fold(0f64, |m, x| m.max((x - offsets[0]).abs()));
        assert!(
            spread <= 1e-7 * offsets[0].abs().max(1.0),
            "{family:?} {offsets:?}"
        );
    }
}

#[test]
fn regularized_estimate_matches_normal_equations() {
    let data = dataset(0.3);
    let spec = KernelSpec::new(KernelFamily::Tc);
    let fit = eb_estimate(&data, &spec, &OptimizerOptions::default()).unwrap();
    let p = kernel_matrix(&spec, &fit.eta_hat, 8).unwrap().p;
    let lhs = data.phi.transpose() * &data.phi + p.clone().try_inverse().unwrap() * fit.sigma2_hat;
    let direct = lhs.lu().solve(&(data.phi.transpose() * &data.y)).unwrap();
    assert!((&fit.theta_tr - &direct).norm() <= 1e-8 * direct.norm());
}

#[test]
fn noise_variance_estimate_is_unbiased() {
    let mut cfg = ExperimentConfig::new(KernelFamily::Ridge, SystemType::T1);
    cfg.n = 5;
    cfg.samples = 40;
    cfg.records = 4000;
    cfg.systems = 1;
    cfg.collections = vec![Collection { a: 0.5, cu2: 1.0 }];
    let plan = ExperimentPlan::new(cfg, ExecMode::Sequential).unwrap();
    let values: Vec<f64> = (0..4000)
        .map(|r| {
            RegressionSummary::from_dataset(&plan.dataset(0, 0, r).unwrap())
                .unwrap()
                .sigma2_hat
        })
        .collect();
    let m = values.iter().sum::<f64>() / values.len() as f64;
    // var σ̂² = 2σ⁴/(N − n) for Gaussian noise
    let se = (2.0 / 35.0 / 4000.0f64).sqrt();
    assert!((m - 1.0).abs() < 4.0 * se, "mean {m}");
}

#[test]
fn eb_estimate_beats_least_squares_on_average() {
    let plan = plan(0.95, 30);
    let spec = KernelSpec::new(KernelFamily::Tc);
    let (mut ls_err, mut eb_err) = (0.0, 0.0);
    for r in 0..30 {
        let data = plan.dataset(0, 0, r).unwrap();
        let truth: &Vector = &data.system.theta0;
        let ls = RegressionSummary::from_dataset(&data).unwrap().theta_ls;
        let fit = eb_estimate(&data, &spec, &OptimizerOptions::default()).unwrap();
        ls_err += (&ls - truth).norm_squared();
        eb_err += (&fit.theta_tr - truth).norm_squared();
    }
    assert!(eb_err < ls_err, "EB {eb_err} vs LS {ls_err}");
}
