//! The four subcommands. Each is a pure function of its resolved config.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use ebfir::asymptotics::{
    eta_star, first_decrease, generic_report, ridge_report, sweep, AsymptoticReport,
    SecondOrderStats, SweepRow,
};
use ebfir::estimators::{KernelFamily, KernelSpec, OptimizerOptions};
use ebfir::exec::ExecMode;
use ebfir::montecarlo::{
    run_experiment_with, table1, write_aggregate_json, write_records_csv, ExperimentConfig,
    SystemType, Table1Row,
};
use ebfir::provenance::Provenance;
use ebfir::rng::{RandomStream, StreamKey};
use ebfir::signal::{generate_t1, generate_t2, FilterSpec, FirSystem, NoiseSpec};

use crate::CliError;

fn gaussian() -> NoiseSpec {
    NoiseSpec::gaussian(1.0).expect("unit variance is valid")
}

fn default_order() -> usize {
    20
}

fn draw_system(
    kind: &SystemType,
    n: usize,
    seed: u64,
    index: usize,
) -> Result<FirSystem, CliError> {
    let mut rng = RandomStream::derive(seed, StreamKey::system(index as u32));
    Ok(match kind {
        SystemType::T1 => generate_t1(n, &mut rng),
        SystemType::T2 => generate_t2(n, &mut rng),
        SystemType::Explicit { theta0 } => FirSystem::new(theta0.clone(), "explicit")?,
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Outcome of a command: text for standard output and whether a strict
/// numerical condition was hit.
pub struct Outcome {
    pub stdout: String,
    pub numerical_failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymConfig {
    pub kernel: KernelSpec,
    pub system: SystemType,
    /// Order for generated systems; must match an explicit `theta0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub filter: FilterSpec,
    #[serde(default = "gaussian")]
    pub noise: NoiseSpec,
    #[serde(rename = "N")]
    pub samples: usize,
    #[serde(default)]
    pub optimizer: OptimizerOptions,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Serialize)]
struct AsymDocument<'a> {
    header: &'a Provenance,
    config: &'a AsymConfig,
    theta0: Vec<f64>,
    report: &'a AsymptoticReport,
}

pub fn asym(cfg: AsymConfig, out: &Path, strict: bool) -> Result<Outcome, CliError> {
    cfg.kernel.validate()?;
    cfg.filter.validate()?;
    let n = match (&cfg.system, cfg.n) {
        (SystemType::Explicit { theta0 }, Some(n)) if n != theta0.len() => {
            return Err(CliError::Config(format!(
                "at `n`: {n} does not match system.theta0 length {}",
                theta0.len()
            )))
        }
        (SystemType::Explicit { theta0 }, _) => theta0.len(),
        (_, n) => n.unwrap_or_else(default_order),
    };
    if n == 0 || cfg.samples <= n {
        return Err(CliError::Config(format!(
            "at `N`: need N > n, got N = {}, n = {n}",
            cfg.samples
        )));
    }
    let system = draw_system(&cfg.system, n, cfg.seed, 0)?;
    let theta0 = &system.theta0;
    let stats = SecondOrderStats::new(&cfg.filter, n);
    let report = if cfg.kernel.family == KernelFamily::Ridge {
        eta_star(&cfg.kernel, theta0, &cfg.optimizer)?;
        ridge_report(theta0, &stats, &cfg.noise, cfg.samples)?
    } else {
        generic_report(
            &cfg.kernel,
            theta0,
            &stats,
            &cfg.noise,
            cfg.samples,
            &cfg.optimizer,
        )?
    };
    let header = Provenance::for_config(&cfg, cfg.seed)?;
    let doc = AsymDocument {
        header: &header,
        config: &cfg,
        theta0: theta0.iter().copied().collect(),
        report: &report,
    };
    write_file(out, "asym_report.json", &json_bytes(&doc)?)?;

    let s = &report.summary;
    let mut text = header.comment_lines();
    writeln!(text, "kernel       {}", cfg.kernel.family.name()).unwrap();
    writeln!(text, "eta*         {:?}", report.eta_star).unwrap();
    writeln!(text, "cond(Sigma)  {:.6e}", s.cond_sigma).unwrap();
    writeln!(text, "Tr V_b^H     {:.6e}", s.trace_v_b_h).unwrap();
    writeln!(text, "AMSE1        {:.6e}", s.amse1).unwrap();
    writeln!(text, "AMSE2        {:.6e}", s.amse2).unwrap();
    writeln!(text, "AMSE3        {:.6e}", s.amse3).unwrap();
    if report.singular_a {
        writeln!(text, "warning: A_b is singular; pseudo-inverse applied").unwrap();
    }
    let numerical_failure =
        (strict && report.singular_a).then(|| "A_b is singular (strict mode)".to_string());
    Ok(Outcome {
        stdout: text,
        numerical_failure,
    })
}

pub fn mc(cfg: ExperimentConfig, out: &Path, strict: bool) -> Result<Outcome, CliError> {
    let result = run_experiment_with(cfg, ExecMode::Parallel)?;
    let stem = &result.config.output_stem;
    let mut csv = Vec::new();
    write_records_csv(
        &mut csv,
        &result.header,
        result.config.kernel.dim(),
        &result.records,
    )?;
    write_file(out, &format!("{stem}_records.csv"), &csv)?;
    let mut json = Vec::new();
    write_aggregate_json(&mut json, &result)?;
    write_file(out, &format!("{stem}_aggregate.json"), &json)?;

    let agg = &result.aggregate;
    let mut text = result.header.comment_lines();
    writeln!(
        text,
        "kernel {}  n = {}  N = {}  systems = {}  records/cell = {}",
        agg.kernel.name(),
        agg.n,
        agg.samples,
        agg.systems,
        agg.records_per_cell
    )
    .unwrap();
    writeln!(
        text,
        "{:>6} {:>8} {:>12} {:>12} {:>4} {:>4} {:>4} {:>8} {:>12}",
        "a", "cu2", "cond(Sigma)", "SMSE", "#1", "#2", "#3", "Fit", "cond(PhiTPhi)"
    )
    .unwrap();
    for c in &agg.collections {
        writeln!(
            text,
            "{:>6} {:>8} {:>12.4e} {:>12.4e} {:>4} {:>4} {:>4} {:>8.3} {:>12.4e}",
            c.a,
            c.cu2,
            c.cond_sigma,
            c.smse_g_mean,
            c.counts[0],
            c.counts[1],
            c.counts[2],
            c.fit_g_mean,
            c.cond_phitphi_mean
        )
        .unwrap();
    }
    if let Some(e) = &result.expansion {
        writeln!(
            text,
            "expansion residuals: LS {:.3e}, RLS {:.3e} over {} records",
            e.max_ls_residual, e.max_tr_residual, e.records
        )
        .unwrap();
    }
    writeln!(text, "excluded records: {}", agg.excluded).unwrap();
    let numerical_failure = if agg.excluded > 0 {
        Some(format!("{} records excluded", agg.excluded))
    } else if strict && agg.any_singular_a() {
        Some("A_b is singular for at least one cell (strict mode)".to_string())
    } else {
        None
    };
    Ok(Outcome {
        stdout: text,
        numerical_failure,
    })
}

fn default_table1_a() -> Vec<f64> {
    vec![0.05, 0.7, 0.95]
}

fn default_samples() -> usize {
    1000
}

fn default_table1_records() -> usize {
    500
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Config {
    #[serde(default = "default_table1_a")]
    pub a: Vec<f64>,
    #[serde(default = "default_order")]
    pub n: usize,
    #[serde(rename = "N", default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_table1_records")]
    pub records: usize,
    #[serde(default)]
    pub seed: u64,
}

fn f(x: f64) -> String {
    x.to_string()
}

pub fn cmd_table1(cfg: Table1Config, out: &Path) -> Result<Outcome, CliError> {
    if cfg.records == 0 {
        return Err(CliError::Config("at `records`: must be >= 1".into()));
    }
    let rows: Vec<Table1Row> = table1(
        &cfg.a,
        cfg.n,
        cfg.samples,
        cfg.records,
        cfg.seed,
        ExecMode::Parallel,
    )?;
    let header = Provenance::for_config(&cfg, cfg.seed)?;
    let mut csv = header.comment_lines();
    csv.push_str("a,cond_sigma,cond_phitphi_mean,cond_phitphi_se,records\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            f(r.a),
            f(r.cond_sigma),
            f(r.cond_phitphi_mean),
            f(r.cond_phitphi_se),
            r.records
        )
        .unwrap();
    }
    write_file(out, "table1.csv", csv.as_bytes())?;

    let mut text = header.comment_lines();
    write!(text, "{:<22}", "a").unwrap();
    for r in &rows {
        write!(text, "{:>12}", r.a).unwrap();
    }
    write!(text, "\n{:<22}", "cond(Sigma)").unwrap();
    for r in &rows {
        write!(text, "{:>12.3e}", r.cond_sigma).unwrap();
    }
    write!(text, "\n{:<22}", "mean cond(Phi^T Phi)").unwrap();
    for r in &rows {
        write!(text, "{:>12.3e}", r.cond_phitphi_mean).unwrap();
    }
    writeln!(
        text,
        "\n({} records per column, N = {}, n = {})",
        cfg.records, cfg.samples, cfg.n
    )
    .unwrap();
    Ok(Outcome {
        stdout: text,
        numerical_failure: None,
    })
}

fn default_system_type() -> SystemType {
    SystemType::T1
}

fn one() -> usize {
    1
}

fn default_sweep_samples() -> Vec<usize> {
    vec![1000, 100_000]
}

fn unit() -> f64 {
    1.0
}

/// `a(i) = 10⁻³ i`, `i = 1 … 990`.
pub fn default_a_grid() -> Vec<f64> {
    (1..=990).map(|i| i as f64 / 1000.0).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_system_type")]
    pub system_type: SystemType,
    #[serde(default = "one")]
    pub systems: usize,
    #[serde(default = "default_order")]
    pub n: usize,
    /// Defaults to `10⁻³ i`, `i = 1 … 990`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_grid: Option<Vec<f64>>,
    #[serde(rename = "N", default = "default_sweep_samples")]
    pub samples: Vec<usize>,
    #[serde(default = "unit")]
    pub sigma2: f64,
    #[serde(default)]
    pub seed: u64,
}

fn nondecreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] >= w[0])
}

pub fn cmd_sweep(cfg: SweepConfig, out: &Path) -> Result<Outcome, CliError> {
    if cfg.systems == 0 {
        return Err(CliError::Config("at `systems`: must be >= 1".into()));
    }
    let n = match &cfg.system_type {
        SystemType::Explicit { theta0 } => theta0.len(),
        _ => cfg.n,
    };
    let grid = cfg.a_grid.clone().unwrap_or_else(default_a_grid);
    let systems = (0..cfg.systems)
        .map(|s| draw_system(&cfg.system_type, n, cfg.seed, s).map(|sys| sys.theta0))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<SweepRow> = sweep(&systems, &grid, &cfg.samples, cfg.sigma2)?;
    let header = Provenance::for_config(&cfg, cfg.seed)?;

    let mut csv = header.comment_lines();
    csv.push_str("system,a,cu2,N,cond_sigma,e_b_ar_norm2,trace_v_als,trace_v_b_ar\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.system,
            f(r.a),
            f(r.cu2),
            r.n_samples,
            f(r.cond_sigma),
            f(r.e_b_ar_norm2),
            f(r.trace_v_als),
            f(r.trace_v_b_ar)
        )
        .unwrap();
    }
    write_file(out, "sweep.csv", csv.as_bytes())?;

    let mut text = header.comment_lines();
    writeln!(
        text,
        "{:>6} {:>8} {:>10} {:>10} {:>10} {:>22}",
        "system", "N", "cond up", "|E|^2 up", "TrVALS up", "TrVAR first decrease"
    )
    .unwrap();
    for block in rows.chunks(grid.len()) {
        let col = |g: fn(&SweepRow) -> f64| block.iter().map(g).collect::<Vec<f64>>();
        let turn = match first_decrease(&col(|r| r.trace_v_b_ar)) {
            Some(i) => format!("{i} (a = {})", block[i].a),
            None => "none".to_string(),
        };
        writeln!(
            text,
            "{:>6} {:>8} {:>10} {:>10} {:>10} {:>22}",
            block[0].system,
            block[0].n_samples,
            nondecreasing(&col(|r| r.cond_sigma)),
            nondecreasing(&col(|r| r.e_b_ar_norm2)),
            nondecreasing(&col(|r| r.trace_v_als)),
            turn
        )
        .unwrap();
    }
    Ok(Outcome {
        stdout: text,
        numerical_failure: None,
    })
}
