//! CSV ingestion and emission.
//!
//! Floats are written with Rust's shortest round-trip rendering, so a
//! write/load cycle reproduces every finite double bit-exactly.
//!
//! Temporal datasets use long form: one row per (sample, lead time), tied
//! together by a `sample_id` column whose feature values must agree across
//! the sample's rows.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::dataset::{Dataset, Task};
use crate::error::{CsgeError, Result};
use crate::weights::WeightBreakdown;

/// Column roles for [`load_csv`]. Every column that is not the target, the
/// lead time, or the sample id is a feature, in header order.
#[derive(Debug, Clone, Default)]
pub struct CsvSchema {
    pub target: String,
    pub lead_time: Option<String>,
    pub sample_id: Option<String>,
    /// Interpret targets as class indices; the class count is inferred.
    pub classification: bool,
}

impl CsvSchema {
    pub fn regression(target: impl Into<String>) -> Self {
        CsvSchema {
            target: target.into(),
            ..Default::default()
        }
    }

    pub fn classification(target: impl Into<String>) -> Self {
        CsvSchema {
            target: target.into(),
            classification: true,
            ..Default::default()
        }
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> CsgeError {
    CsgeError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(text: &str, line: usize, column: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| parse_error(line, format!("column `{column}`: `{text}` is not a number")))
}

fn parse_index(text: &str, line: usize, column: &str) -> Result<usize> {
    text.trim().parse::<usize>().map_err(|_| {
        parse_error(
            line,
            format!("column `{column}`: `{text}` is not a nonnegative integer"),
        )
    })
}

struct ParsedHeader {
    names: Vec<String>,
    target: usize,
    lead_time: Option<usize>,
    sample_id: Option<usize>,
    feature_cols: Vec<usize>,
}

fn parse_header(headers: &csv::StringRecord, schema: &CsvSchema) -> Result<ParsedHeader> {
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    for (i, a) in names.iter().enumerate() {
        if names[..i].contains(a) {
            return Err(parse_error(1, format!("duplicate header name `{a}`")));
        }
    }
    let find = |wanted: &str| -> Result<usize> {
        names
            .iter()
            .position(|n| n == wanted)
            .ok_or_else(|| parse_error(1, format!("column `{wanted}` not found in header")))
    };
    let target = find(&schema.target)?;
    let lead_time = schema.lead_time.as_deref().map(find).transpose()?;
    let sample_id = schema.sample_id.as_deref().map(find).transpose()?;
    let reserved: Vec<usize> = [Some(target), lead_time, sample_id]
        .into_iter()
        .flatten()
        .collect();
    let feature_cols: Vec<usize> = (0..names.len()).filter(|i| !reserved.contains(i)).collect();
    if feature_cols.is_empty() {
        return Err(parse_error(1, "no feature columns left after the schema columns"));
    }
    Ok(ParsedHeader {
        names,
        target,
        lead_time,
        sample_id,
        feature_cols,
    })
}

/// Loads a dataset from CSV. Row order is preserved for plain tasks; for
/// temporal data rows are grouped by `sample_id` (ascending) and lead time.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| parse_error(1, e.to_string()))?;
    let header = parse_header(reader.headers().map_err(|e| parse_error(1, e.to_string()))?, schema)?;

    if header.lead_time.is_some() && header.sample_id.is_none() {
        return Err(CsgeError::InvalidHyperParams(
            "temporal ingestion needs a sample_id column tying the lead-time rows together".into(),
        ));
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|e| parse_error(line, e.to_string()))?;
        if record.len() != header.names.len() {
            return Err(parse_error(
                line,
                format!("expected {} fields, got {}", header.names.len(), record.len()),
            ));
        }
        let features: Vec<f64> = header
            .feature_cols
            .iter()
            .map(|&c| parse_f64(&record[c], line, &header.names[c]))
            .collect::<Result<_>>()?;
        let target = parse_f64(&record[header.target], line, &header.names[header.target])?;
        let lead = header
            .lead_time
            .map(|c| parse_index(&record[c], line, &header.names[c]))
            .transpose()?;
        let sample = header
            .sample_id
            .map(|c| parse_index(&record[c], line, &header.names[c]))
            .transpose()?;
        rows.push((line, sample, lead, features, target));
    }
    if rows.is_empty() {
        return Err(parse_error(2, "no data rows"));
    }

    let feature_names: Vec<String> = header
        .feature_cols
        .iter()
        .map(|&c| header.names[c].clone())
        .collect();
    let n_features = feature_names.len();

    let (features, targets) = if header.lead_time.is_some() {
        assemble_temporal(rows, n_features)?
    } else {
        let n = rows.len();
        let mut features = DMatrix::zeros(n, n_features);
        let mut targets = DMatrix::zeros(n, 1);
        for (row, (_, _, _, values, target)) in rows.into_iter().enumerate() {
            for (col, v) in values.into_iter().enumerate() {
                features[(row, col)] = v;
            }
            targets[(row, 0)] = target;
        }
        (features, targets)
    };

    let task = if schema.classification {
        let max = targets.iter().cloned().fold(0.0_f64, f64::max);
        Task::Classification {
            n_classes: max as usize + 1,
        }
    } else {
        Task::Regression
    };
    Dataset::new(features, targets, feature_names, task)
}

type CsvRow = (usize, Option<usize>, Option<usize>, Vec<f64>, f64);

fn assemble_temporal(rows: Vec<CsvRow>, n_features: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    struct Sample {
        features: Vec<f64>,
        by_lead: BTreeMap<usize, f64>,
    }
    let mut samples: BTreeMap<usize, Sample> = BTreeMap::new();
    let mut horizon = 0usize;
    for (line, sample, lead, features, target) in rows {
        let id = sample.expect("sample id presence checked by the caller");
        let lead = lead.expect("lead time presence checked by the caller");
        horizon = horizon.max(lead + 1);
        let entry = samples.entry(id).or_insert_with(|| Sample {
            features: features.clone(),
            by_lead: BTreeMap::new(),
        });
        if entry.features != features {
            return Err(parse_error(
                line,
                format!("features of sample {id} differ from its earlier rows"),
            ));
        }
        if entry.by_lead.insert(lead, target).is_some() {
            return Err(parse_error(
                line,
                format!("duplicate lead time {lead} for sample {id}"),
            ));
        }
    }

    let n = samples.len();
    let mut features = DMatrix::zeros(n, n_features);
    let mut targets = DMatrix::zeros(n, horizon);
    for (row, (id, sample)) in samples.into_iter().enumerate() {
        for t in 0..horizon {
            match sample.by_lead.get(&t) {
                Some(&v) => targets[(row, t)] = v,
                None => {
                    return Err(CsgeError::shape(
                        "lead-time coverage",
                        format!("sample {id} with lead times 0..{horizon}"),
                        format!("lead time {t} missing"),
                    ))
                }
            }
        }
        for (col, v) in sample.features.iter().enumerate() {
            features[(row, col)] = *v;
        }
    }
    Ok((features, targets))
}

/// Writes a dataset back to CSV (inverse of [`load_csv`] up to column
/// naming: the target column is called `target`, temporal files gain
/// `sample_id` and `lead_time` columns).
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    let temporal = data.horizon() > 1;
    let mut header: Vec<String> = Vec::new();
    if temporal {
        header.push("sample_id".into());
        header.push("lead_time".into());
    }
    header.extend(data.feature_names().iter().cloned());
    header.push("target".into());
    writeln!(out, "{}", header.join(","))?;
    for row in 0..data.n_samples() {
        let features: Vec<String> = data.feature_row(row).iter().map(|v| format!("{v}")).collect();
        for t in 0..data.horizon() {
            let mut fields: Vec<String> = Vec::new();
            if temporal {
                fields.push(row.to_string());
                fields.push(t.to_string());
            }
            fields.extend(features.iter().cloned());
            fields.push(format!("{}", data.target(row, t)));
            writeln!(out, "{}", fields.join(","))?;
        }
    }
    Ok(())
}

/// Weight breakdown of one fused prediction, ready for export.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakdownEntry {
    pub sample_id: usize,
    pub lead_time: usize,
    pub member_predictions: Vec<f64>,
    pub fused_prediction: f64,
    pub breakdown: WeightBreakdown,
}

/// Writes per-prediction weight breakdowns with one line per
/// (sample, lead time, member).
pub fn write_breakdown_csv(
    path: impl AsRef<Path>,
    member_ids: &[String],
    entries: &[BreakdownEntry],
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(
        out,
        "sample_id,lead_time,member_id,w_global,w_local,w_time,w_final,member_prediction,fused_prediction"
    )?;
    for entry in entries {
        for (j, id) in member_ids.iter().enumerate() {
            let w = &entry.breakdown.members()[j];
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                entry.sample_id,
                entry.lead_time,
                id,
                w.global,
                w.local,
                w.time,
                w.combined,
                entry.member_predictions[j],
                entry.fused_prediction
            )?;
        }
    }
    Ok(())
}

/// Plain two-column XY text, one `x y` pair per line.
pub fn write_xy(path: impl AsRef<Path>, pairs: &[(f64, f64)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    for (x, y) in pairs {
        writeln!(out, "{x} {y}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn well_formed_file_loads() {
        let f = write_temp("a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
        let d = load_csv(f.path(), &CsvSchema::regression("y")).unwrap();
        assert_eq!(d.n_samples(), 3);
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.feature_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.target(2, 0), 9.0);
    }

    #[test]
    fn non_numeric_cell_reports_its_line() {
        let f = write_temp("a,y\n1,2\nfoo,3\n");
        match load_csv(f.path(), &CsvSchema::regression("y")).unwrap_err() {
            CsgeError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn duplicate_headers_are_rejected() {
        let f = write_temp("a,a,y\n1,2,3\n");
        assert!(matches!(
            load_csv(f.path(), &CsvSchema::regression("y")),
            Err(CsgeError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn missing_target_column_is_rejected() {
        let f = write_temp("a,b\n1,2\n");
        assert!(load_csv(f.path(), &CsvSchema::regression("y")).is_err());
    }

    #[test]
    fn temporal_long_form_loads() {
        let f = write_temp(
            "sample_id,lead_time,x,y\n0,0,1.5,10\n0,1,1.5,20\n1,0,2.5,30\n1,1,2.5,40\n",
        );
        let schema = CsvSchema {
            target: "y".into(),
            lead_time: Some("lead_time".into()),
            sample_id: Some("sample_id".into()),
            classification: false,
        };
        let d = load_csv(f.path(), &schema).unwrap();
        assert_eq!(d.n_samples(), 2);
        assert_eq!(d.horizon(), 2);
        assert_eq!(d.target(0, 1), 20.0);
        assert_eq!(d.feature_row(1), vec![2.5]);
    }

    #[test]
    fn temporal_gaps_and_duplicates_are_rejected() {
        let schema = CsvSchema {
            target: "y".into(),
            lead_time: Some("t".into()),
            sample_id: Some("id".into()),
            classification: false,
        };
        let gap = write_temp("id,t,x,y\n0,0,1,1\n0,2,1,2\n");
        assert!(load_csv(gap.path(), &schema).is_err());
        let dup = write_temp("id,t,x,y\n0,0,1,1\n0,0,1,2\n");
        assert!(matches!(
            load_csv(dup.path(), &schema),
            Err(CsgeError::Parse { line: 3, .. })
        ));
        let drift = write_temp("id,t,x,y\n0,0,1,1\n0,1,9,2\n");
        assert!(load_csv(drift.path(), &schema).is_err());
    }

    #[test]
    fn temporal_without_sample_id_is_rejected() {
        let f = write_temp("t,x,y\n0,1,1\n1,1,2\n");
        let schema = CsvSchema {
            target: "y".into(),
            lead_time: Some("t".into()),
            sample_id: None,
            classification: false,
        };
        assert!(load_csv(f.path(), &schema).is_err());
    }

    #[test]
    fn classification_infers_class_count() {
        let f = write_temp("a,y\n1,0\n2,1\n3,2\n4,1\n");
        let d = load_csv(f.path(), &CsvSchema::classification("y")).unwrap();
        assert_eq!(d.task(), Task::Classification { n_classes: 3 });
    }

    #[test]
    fn write_load_round_trips_bit_exactly() {
        let features = DMatrix::from_fn(7, 3, |i, j| {
            ((i * 31 + j * 17) as f64 * 0.123456789).sin() * 1e3_f64.powi(j as i32 - 1)
        });
        let targets: Vec<f64> = (0..7).map(|i| (i as f64 * 1.7).cos() / 3.0).collect();
        let names = vec!["a".into(), "b".into(), "c".into()];
        let data = Dataset::regression(features, targets, names).unwrap();

        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&data, f.path()).unwrap();
        let back = load_csv(f.path(), &CsvSchema::regression("target")).unwrap();
        assert_eq!(back.n_samples(), data.n_samples());
        for i in 0..7 {
            for j in 0..3 {
                assert_eq!(
                    back.features()[(i, j)].to_bits(),
                    data.features()[(i, j)].to_bits()
                );
            }
            assert_eq!(back.target(i, 0).to_bits(), data.target(i, 0).to_bits());
        }
    }

    #[test]
    fn temporal_round_trip() {
        let features = DMatrix::from_column_slice(3, 1, &[0.25, 0.5, 0.75]);
        let targets = DMatrix::from_fn(3, 2, |i, t| (i + t) as f64 / 7.0);
        let data = Dataset::new(features, targets, vec!["x".into()], Task::Regression).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&data, f.path()).unwrap();
        let schema = CsvSchema {
            target: "target".into(),
            lead_time: Some("lead_time".into()),
            sample_id: Some("sample_id".into()),
            classification: false,
        };
        let back = load_csv(f.path(), &schema).unwrap();
        assert_eq!(back.horizon(), 2);
        for i in 0..3 {
            for t in 0..2 {
                assert_eq!(back.target(i, t).to_bits(), data.target(i, t).to_bits());
            }
        }
    }
}
