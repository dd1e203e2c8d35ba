//! Import of externally produced member predictions.
//!
//! Lets paper-grade members (SVR, neural networks, anything) produced by
//! other tooling feed the ensemble: the file must densely cover every
//! (sample, member, lead time) triple.

use std::collections::BTreeMap;
use std::path::Path;

use crate::cube::PredictionCube;
use crate::error::{CsgeError, Result};

fn parse_error(line: usize, message: impl Into<String>) -> CsgeError {
    CsgeError::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a dense prediction cube from a CSV with columns
/// `sample_id, member_id, lead_time, prediction` (any column order).
///
/// Members are ordered by id (lexicographic); samples and lead times must
/// cover `0..N` and `0..T` completely, and duplicate triples are rejected.
pub fn import_external_predictions(path: impl AsRef<Path>) -> Result<PredictionCube> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| parse_error(1, e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let expected = ["sample_id", "member_id", "lead_time", "prediction"];
    let mut columns = [0usize; 4];
    for (k, name) in expected.iter().enumerate() {
        columns[k] = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_error(1, format!("column `{name}` not found in header")))?;
    }
    if headers.len() != expected.len() {
        return Err(parse_error(
            1,
            format!("expected exactly the columns {expected:?}, got {headers:?}"),
        ));
    }

    let mut cells: BTreeMap<(usize, String, usize), f64> = BTreeMap::new();
    let mut max_sample = 0usize;
    let mut max_lead = 0usize;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_error(line, e.to_string()))?;
        let sample: usize = record[columns[0]]
            .parse()
            .map_err(|_| parse_error(line, "sample_id must be a nonnegative integer"))?;
        let member = record[columns[1]].to_string();
        let lead: usize = record[columns[2]]
            .parse()
            .map_err(|_| parse_error(line, "lead_time must be a nonnegative integer"))?;
        let value: f64 = record[columns[3]]
            .parse()
            .map_err(|_| parse_error(line, "prediction must be a number"))?;
        max_sample = max_sample.max(sample);
        max_lead = max_lead.max(lead);
        if cells.insert((sample, member.clone(), lead), value).is_some() {
            return Err(parse_error(
                line,
                format!("duplicate prediction for sample {sample}, member `{member}`, lead time {lead}"),
            ));
        }
    }
    if cells.is_empty() {
        return Err(parse_error(2, "no prediction rows"));
    }

    let mut member_ids: Vec<String> = cells.keys().map(|(_, m, _)| m.clone()).collect();
    member_ids.sort();
    member_ids.dedup();

    let (n, horizon) = (max_sample + 1, max_lead + 1);
    let mut values = vec![0.0; n * member_ids.len() * horizon];
    for sample in 0..n {
        for (j, member) in member_ids.iter().enumerate() {
            for t in 0..horizon {
                match cells.get(&(sample, member.clone(), t)) {
                    Some(&v) => values[(sample * member_ids.len() + j) * horizon + t] = v,
                    None => {
                        return Err(CsgeError::MissingCell {
                            sample,
                            member: member.clone(),
                            lead_time: t,
                        })
                    }
                }
            }
        }
    }
    PredictionCube::new(values, n, horizon, member_ids)
}
