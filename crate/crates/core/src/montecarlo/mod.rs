//! Seeded Monte Carlo experiments: per-record EB fits over systems and data
//! collections, aggregate statistics and the AMSE comparisons.

mod config;
mod io;
mod stats;
mod table1;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    eta_star, expansion_terms, generic_report_at, ridge_report, AsymptoticReport, SecondOrderStats,
};
use crate::error::{Error, Result};
use crate::estimators::{eb_estimate, KernelFamily};
use crate::exec::{map_indexed, ExecMode};
use crate::provenance::Provenance;
use crate::rng::{RandomStream, StreamKey};
use crate::signal::{build_dataset, generate_input, Dataset, FilterSpec, FirSystem};

pub use config::{
    default_collections, Collection, ExperimentConfig, SystemType, DEFAULT_A, T1_CU2, T2_CU2,
};
pub use io::{read_records_csv, write_aggregate_json, write_records_csv, AggregateDocument};
pub use stats::{bootstrap_se, compare_amse, fit_g, mean, variance};
pub use table1::{table1, Table1Row};

/// Outcome of one EB fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordResult {
    pub record_id: u64,
    pub system_id: usize,
    pub a: f64,
    pub cu2: f64,
    pub eta_hat: Vec<f64>,
    pub sigma2_hat: f64,
    /// `‖θ̂^TR − θ₀‖²`.
    pub mse_g: f64,
    pub fit_g: f64,
    pub cond_phitphi: f64,
    pub cost: f64,
    pub converged: bool,
    pub at_boundary: bool,
    /// Normalized residuals of the LS and RLS expansions, when checked.
    #[serde(skip)]
    pub expansion: Option<(f64, f64)>,
}

/// A record that produced no fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFailure {
    pub record_id: u64,
    pub system_id: usize,
    pub a: f64,
    pub cu2: f64,
    pub reason: String,
}

/// Statistics of one (system, collection) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub system_id: usize,
    pub records: usize,
    pub eta_star: Vec<f64>,
    pub eta_hat_mean: Vec<f64>,
    pub eta_hat_var: Vec<f64>,
    /// `‖mean(η̂) − η*‖²`.
    pub eta_bias_norm2: f64,
    /// `Tr V_b^H(η*) / N`.
    pub trace_v_b_h_over_n: f64,
    pub smse_g: f64,
    pub amse: [f64; 3],
    pub flags: [bool; 3],
    pub fit_g_mean: f64,
    pub cond_phitphi_mean: f64,
    pub singular_a: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionMetrics {
    pub a: f64,
    pub cu2: f64,
    pub cond_sigma: f64,
    /// `#₁ #₂ #₃`: number of systems whose flag is set.
    pub counts: [usize; 3],
    pub smse_g_mean: f64,
    pub fit_g_mean: f64,
    pub cond_phitphi_mean: f64,
    pub systems: Vec<CellMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub kernel: KernelFamily,
    pub n: usize,
    #[serde(rename = "N")]
    pub samples: usize,
    pub records_per_cell: usize,
    pub systems: usize,
    pub excluded: usize,
    pub collections: Vec<CollectionMetrics>,
}

impl AggregateMetrics {
    pub fn any_singular_a(&self) -> bool {
        self.collections
            .iter()
            .flat_map(|c| &c.systems)
            .any(|s| s.singular_a)
    }
}

/// Largest expansion residuals over all checked records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSummary {
    pub records: usize,
    pub max_ls_residual: f64,
    pub max_tr_residual: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub header: Provenance,
    pub config: ExperimentConfig,
    pub records: Vec<RecordResult>,
    pub failures: Vec<RecordFailure>,
    pub aggregate: AggregateMetrics,
    pub expansion: Option<ExpansionSummary>,
}

/// Everything that is fixed before records are drawn: the systems, the
/// second-order statistics of each collection and the asymptotic report of
/// each cell.
pub struct ExperimentPlan {
    pub config: ExperimentConfig,
    pub systems: Vec<FirSystem>,
    pub filters: Vec<FilterSpec>,
    pub stats: Vec<SecondOrderStats>,
    /// Indexed by `collection * systems + system`.
    pub reports: Vec<AsymptoticReport>,
}

impl ExperimentPlan {
    pub fn new(config: ExperimentConfig, mode: ExecMode) -> Result<Self> {
        let config = config.resolved()?;
        let systems = (0..config.systems)
            .map(|s| config.system(s))
            .collect::<Result<Vec<_>>>()?;
        let filters = config
            .collections
            .iter()
            .map(Collection::filter)
            .collect::<Result<Vec<_>>>()?;
        let stats = map_indexed(filters.len(), mode, |c| {
            SecondOrderStats::new(&filters[c], config.n)
        });
        let etas = map_indexed(systems.len(), mode, |s| {
            eta_star(&config.kernel, &systems[s].theta0, &config.optimizer)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let cells = filters.len() * systems.len();
        let reports = map_indexed(cells, mode, |i| {
            let (c, s) = (i / systems.len(), i % systems.len());
            let theta0 = &systems[s].theta0;
            if config.kernel.family == KernelFamily::Ridge {
                ridge_report(theta0, &stats[c], &config.noise, config.samples)
            } else {
                generic_report_at(
                    &config.kernel,
                    theta0,
                    etas[s].clone(),
                    &stats[c],
                    &config.noise,
                    config.samples,
                )
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            systems,
            filters,
            stats,
            reports,
        })
    }

    pub fn report(&self, system: usize, collection: usize) -> &AsymptoticReport {
        &self.reports[collection * self.systems.len() + system]
    }

    pub fn total_records(&self) -> usize {
        self.filters.len() * self.systems.len() * self.config.records
    }

    /// `(collection, system, record)` of a record id.
    pub fn locate(&self, record_id: usize) -> (usize, usize, usize) {
        let per_collection = self.systems.len() * self.config.records;
        let c = record_id / per_collection;
        let rest = record_id % per_collection;
        (c, rest / self.config.records, rest % self.config.records)
    }

    /// Data of one record from its own stream.
    pub fn dataset(&self, system: usize, collection: usize, record: usize) -> Result<Dataset> {
        let key = StreamKey::record(system as u32, collection as u8, record as u32);
        let mut rng = RandomStream::derive(self.config.master_seed, key);
        let u = generate_input(
            &self.filters[collection],
            self.config.n,
            self.config.samples,
            &mut rng,
            self.config.input,
        )?;
        build_dataset(
            &self.systems[system],
            &u,
            self.config.noise,
            &mut rng,
            false,
        )
    }

    fn fit_record(&self, record_id: usize) -> Result<RecordResult> {
        let (c, s, r) = self.locate(record_id);
        let data = self.dataset(s, c, r)?;
        let fit = eb_estimate(&data, &self.config.kernel, &self.config.optimizer)?;
        let theta0 = &data.system.theta0;
        let expansion = if self.config.check_expansion {
            let report = self.report(s, c);
            let terms = expansion_terms(
                &data,
                &fit,
                &self.config.kernel,
                &report.sigma,
                &report.eta_star,
                self.config.noise.sigma2,
            )?;
            Some((terms.ls_residual, terms.tr_residual))
        } else {
            None
        };
        let col = self.config.collections[c];
        Ok(RecordResult {
            record_id: record_id as u64,
            system_id: s,
            a: col.a,
            cu2: col.cu2,
            mse_g: (&fit.theta_tr - theta0).norm_squared(),
            fit_g: fit_g(&fit.theta_tr, theta0)?,
            eta_hat: fit.eta_hat,
            sigma2_hat: fit.sigma2_hat,
            cond_phitphi: data.gram_cond,
            cost: fit.cost,
            converged: fit.optimizer_stats.converged,
            at_boundary: fit.optimizer_stats.at_boundary,
            expansion,
        })
    }

    /// Fits every record; failures are logged and returned separately.
    pub fn run_records(&self, mode: ExecMode) -> (Vec<RecordResult>, Vec<RecordFailure>) {
        let outcomes = map_indexed(self.total_records(), mode, |id| (id, self.fit_record(id)));
        let mut records = Vec::with_capacity(outcomes.len());
        let mut failures = Vec::new();
        for (id, outcome) in outcomes {
            match outcome {
                Ok(r) => records.push(r),
                Err(e) => {
                    let (c, s, _) = self.locate(id);
                    let col = self.config.collections[c];
                    log::warn!(
                        "record {id} (system {s}, a = {}, cu2 = {}) excluded: {e}",
                        col.a,
                        col.cu2
                    );
                    failures.push(RecordFailure {
                        record_id: id as u64,
                        system_id: s,
                        a: col.a,
                        cu2: col.cu2,
                        reason: e.to_string(),
                    });
                }
            }
        }
        (records, failures)
    }

    /// Serial reduction of `records` in record-id order.
    pub fn aggregate(&self, records: &[RecordResult], excluded: usize) -> Result<AggregateMetrics> {
        let ns = self.systems.len();
        let mut cells: Vec<Vec<&RecordResult>> = vec![Vec::new(); self.reports.len()];
        let mut sorted: Vec<&RecordResult> = records.iter().collect();
        sorted.sort_by_key(|r| r.record_id);
        for r in sorted {
            let c = self
                .config
                .collections
                .iter()
                .position(|col| col.a == r.a && col.cu2 == r.cu2)
                .ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "record {} has (a, cu2) = ({}, {}) outside the collection grid",
                        r.record_id, r.a, r.cu2
                    ))
                })?;
            if r.system_id >= ns {
                return Err(Error::InvalidConfig(format!(
                    "record {} has system_id {} >= {ns}",
                    r.record_id, r.system_id
                )));
            }
            cells[c * ns + r.system_id].push(r);
        }
        let p = self.config.kernel.dim();
        let samples = self.config.samples as f64;
        let mut collections = Vec::with_capacity(self.filters.len());
        for (c, col) in self.config.collections.iter().enumerate() {
            let mut systems = Vec::with_capacity(ns);
            let mut counts = [0usize; 3];
            let (mut fit_all, mut cond_all, mut smse_all) = (Vec::new(), Vec::new(), Vec::new());
            for s in 0..ns {
                let rows = &cells[c * ns + s];
                let report = self.report(s, c);
                let mut eta_hat_mean = Vec::with_capacity(p);
                let mut eta_hat_var = Vec::with_capacity(p);
                for k in 0..p {
                    let xs: Vec<f64> = rows.iter().map(|r| r.eta_hat[k]).collect();
                    eta_hat_mean.push(mean(&xs));
                    eta_hat_var.push(variance(&xs));
                }
                let eta_bias_norm2 = eta_hat_mean
                    .iter()
                    .zip(&report.eta_star)
                    .map(|(m, e)| (m - e) * (m - e))
                    .sum();
                let mse: Vec<f64> = rows.iter().map(|r| r.mse_g).collect();
                let fit: Vec<f64> = rows.iter().map(|r| r.fit_g).collect();
                let cond: Vec<f64> = rows.iter().map(|r| r.cond_phitphi).collect();
                let smse_g = mean(&mse);
                let amse = [
                    report.summary.amse1,
                    report.summary.amse2,
                    report.summary.amse3,
                ];
                let flags = compare_amse(smse_g, amse);
                for (count, &flag) in counts.iter_mut().zip(&flags) {
                    *count += flag as usize;
                }
                smse_all.push(smse_g);
                fit_all.extend_from_slice(&fit);
                cond_all.extend_from_slice(&cond);
                systems.push(CellMetrics {
                    system_id: s,
                    records: rows.len(),
                    eta_star: report.eta_star.clone(),
                    eta_hat_mean,
                    eta_hat_var,
                    eta_bias_norm2,
                    trace_v_b_h_over_n: report.summary.trace_v_b_h / samples,
                    smse_g,
                    amse,
                    flags,
                    fit_g_mean: mean(&fit),
                    cond_phitphi_mean: mean(&cond),
                    singular_a: report.singular_a,
                });
            }
            collections.push(CollectionMetrics {
                a: col.a,
                cu2: col.cu2,
                cond_sigma: self.stats[c].cond,
                counts,
                smse_g_mean: mean(&smse_all),
                fit_g_mean: mean(&fit_all),
                cond_phitphi_mean: mean(&cond_all),
                systems,
            });
        }
        Ok(AggregateMetrics {
            kernel: self.config.kernel.family,
            n: self.config.n,
            samples: self.config.samples,
            records_per_cell: self.config.records,
            systems: ns,
            excluded,
            collections,
        })
    }

    pub fn provenance(&self) -> Result<Provenance> {
        Provenance::for_config(&self.config, self.config.master_seed)
    }
}

fn expansion_summary(records: &[RecordResult]) -> Option<ExpansionSummary> {
    let checked: Vec<(f64, f64)> = records.iter().filter_map(|r| r.expansion).collect();
    if checked.is_empty() {
        return None;
    }
    Some(ExpansionSummary {
        records: checked.len(),
        max_ls_residual: checked.iter().map(|x| x.0).fold(0.0, f64::max),
        max_tr_residual: checked.iter().map(|x| x.1).fold(0.0, f64::max),
    })
}

/// Runs the whole experiment with the default scheduling.
pub fn run_experiment(config: ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment_with(config, ExecMode::default())
}

pub fn run_experiment_with(config: ExperimentConfig, mode: ExecMode) -> Result<ExperimentOutput> {
    let plan = ExperimentPlan::new(config, mode)?;
    let (records, failures) = plan.run_records(mode);
    let aggregate = plan.aggregate(&records, failures.len())?;
    Ok(ExperimentOutput {
        header: plan.provenance()?,
        expansion: expansion_summary(&records),
        config: plan.config,
        records,
        failures,
        aggregate,
    })
}
