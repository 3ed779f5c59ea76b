use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{AggregateMetrics, ExpansionSummary, ExperimentOutput, RecordFailure, RecordResult};
use crate::error::{Error, Result};
use crate::provenance::Provenance;

const FIXED_HEAD: [&str; 4] = ["record_id", "system_id", "a", "cu2"];
const FIXED_TAIL: [&str; 7] = [
    "sigma2_hat",
    "mse_g",
    "fit_g",
    "cond_phitphi",
    "cost",
    "converged",
    "at_boundary",
];

fn header_row(p: usize) -> Vec<String> {
    FIXED_HEAD
        .iter()
        .map(|s| s.to_string())
        .chain((1..=p).map(|k| format!("eta_hat_{k}")))
        .chain(FIXED_TAIL.iter().map(|s| s.to_string()))
        .collect()
}

/// Per-record CSV: provenance comment lines, then one row per record.
///
/// Floats use the shortest representation that parses back to the same bits.
pub fn write_records_csv<W: Write>(
    out: W,
    header: &Provenance,
    p: usize,
    records: &[RecordResult],
) -> Result<()> {
    let mut out = BufWriter::new(out);
    out.write_all(header.comment_lines().as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header_row(p))?;
    for r in records {
        if r.eta_hat.len() != p {
            return Err(Error::InvalidConfig(format!(
                "record {} has {} hyper-parameters, expected {p}",
                r.record_id,
                r.eta_hat.len()
            )));
        }
        let mut row = vec![
            r.record_id.to_string(),
            r.system_id.to_string(),
            r.a.to_string(),
            r.cu2.to_string(),
        ];
        row.extend(r.eta_hat.iter().map(f64::to_string));
        row.extend([
            r.sigma2_hat.to_string(),
            r.mse_g.to_string(),
            r.fit_g.to_string(),
            r.cond_phitphi.to_string(),
            r.cost.to_string(),
            r.converged.to_string(),
            r.at_boundary.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(field: Option<&str>, name: &str, line: u64) -> Result<T> {
    field
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Io(format!("line {line}: bad or missing {name}")))
}

/// Reads a file produced by [`write_records_csv`].
pub fn read_records_csv(path: &Path) -> Result<Vec<RecordResult>> {
    let reader = BufReader::new(File::open(path)?);
    read_records(reader)
}

fn read_records<R: BufRead>(reader: R) -> Result<Vec<RecordResult>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let p = headers
        .len()
        .saturating_sub(FIXED_HEAD.len() + FIXED_TAIL.len());
    if headers.iter().collect::<Vec<_>>() != header_row(p) {
        return Err(Error::Io("unexpected CSV header".into()));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |pos| pos.line());
        let f = |i: usize| row.get(i);
        let t = FIXED_HEAD.len() + p;
        out.push(RecordResult {
            record_id: parse(f(0), "record_id", line)?,
            system_id: parse(f(1), "system_id", line)?,
            a: parse(f(2), "a", line)?,
            cu2: parse(f(3), "cu2", line)?,
            eta_hat: (0..p)
                .map(|k| parse(f(4 + k), "eta_hat", line))
                .collect::<Result<_>>()?,
            sigma2_hat: parse(f(t), "sigma2_hat", line)?,
            mse_g: parse(f(t + 1), "mse_g", line)?,
            fit_g: parse(f(t + 2), "fit_g", line)?,
            cond_phitphi: parse(f(t + 3), "cond_phitphi", line)?,
            cost: parse(f(t + 4), "cost", line)?,
            converged: parse(f(t + 5), "converged", line)?,
            at_boundary: parse(f(t + 6), "at_boundary", line)?,
            expansion: None,
        });
    }
    Ok(out)
}

/// JSON form of the aggregate: header block plus the metrics fields.
#[derive(Debug, Serialize)]
pub struct AggregateDocument<'a> {
    pub header: &'a Provenance,
    #[serde(flatten)]
    pub metrics: &'a AggregateMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion: Option<&'a ExpansionSummary>,
    pub failures: &'a [RecordFailure],
}

pub fn write_aggregate_json<W: Write>(out: W, output: &ExperimentOutput) -> Result<()> {
    let doc = AggregateDocument {
        header: &output.header,
        metrics: &output.aggregate,
        expansion: output.expansion.as_ref(),
        failures: &output.failures,
    };
    let mut out = BufWriter::new(out);
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let rec = RecordResult {
            record_id: 7,
            system_id: 2,
            a: 0.7,
            cu2: 0.1,
            eta_hat: vec![1.0 / 3.0, 5.51e-300],
            sigma2_hat: 0.987654321012345,
            mse_g: 1e-17,
            fit_g: -12.5,
            cond_phitphi: 5.98e5,
            cost: -3.0e2,
            converged: true,
            at_boundary: false,
            expansion: None,
        };
        let header = Provenance {
            version: "0".into(),
            config_sha256: "00".into(),
            seed: 1,
        };
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &header, 2, std::slice::from_ref(&rec)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# ebfir 0\n"));
        assert!(text.contains(
            "record_id,system_id,a,cu2,eta_hat_1,eta_hat_2,sigma2_hat,mse_g,fit_g,cond_phitphi,cost,converged,at_boundary"
        ));
        let back = read_records(buf.as_slice()).unwrap();
        assert_eq!(back, vec![rec]);
    }
}
