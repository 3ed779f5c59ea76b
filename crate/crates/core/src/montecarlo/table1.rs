use serde::{Deserialize, Serialize};

use super::stats::{mean, variance};
use crate::asymptotics::SecondOrderStats;
use crate::error::Result;
use crate::exec::{map_indexed, ExecMode};
use crate::linalg::condition_number;
use crate::rng::{RandomStream, StreamDomain, StreamKey};
use crate::signal::{generate_input, regression_matrix, FilterSpec, InputOptions};

/// Condition numbers of `Σ` and of `ΦᵀΦ` for one filter pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub a: f64,
    pub cond_sigma: f64,
    pub cond_phitphi_mean: f64,
    /// Standard error of the mean over records.
    pub cond_phitphi_se: f64,
    pub records: usize,
}

/// Exact `cond(Σ)` and the record average of `cond(ΦᵀΦ)` for each `a`.
///
/// Both are invariant to `c_u`, so the unit-gain filter is used.
pub fn table1(
    a_values: &[f64],
    n: usize,
    samples: usize,
    records: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<Vec<Table1Row>> {
    if a_values.len() > 256 {
        return Err(crate::Error::InvalidConfig(
            "at most 256 values of a".into(),
        ));
    }
    let mut rows = Vec::with_capacity(a_values.len());
    for (i, &a) in a_values.iter().enumerate() {
        let filter = FilterSpec::second_order(a, 1.0)?;
        let cond_sigma = SecondOrderStats::new(&filter, n).cond;
        let conds = map_indexed(records, mode, |r| {
            let key = StreamKey {
                domain: StreamDomain::Misc,
                system: 0,
                collection: i as u8,
                record: r as u32,
            };
            let mut rng = RandomStream::derive(seed, key);
            let u = generate_input(&filter, n, samples, &mut rng, InputOptions::default())?;
            let phi = regression_matrix(&u);
            Ok(condition_number(&(phi.transpose() * &phi)))
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        rows.push(Table1Row {
            a,
            cond_sigma,
            cond_phitphi_mean: mean(&conds),
            cond_phitphi_se: (variance(&conds) / records as f64).sqrt(),
            records,
        });
    }
    Ok(rows)
}
