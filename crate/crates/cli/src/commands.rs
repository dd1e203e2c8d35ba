//! The five subcommands: fit, predict, eval, synthetic, explain.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use csge_core::io::{
    import_external_predictions, load_csv, load_model, save_model, write_breakdown_csv,
    write_xy, BreakdownEntry, CsvSchema,
};
use csge_core::{
    fit, fit_from_cube, generate_synthetic, repeated_cv, CsgeModel, Dataset, EvalReport,
    SyntheticKind,
};

use crate::config::{RunConfig, TaskKind};
use crate::CliError;

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| data_err(format!("cannot create `{}`: {e}", dir.display())))
}

fn schema_from(config: &RunConfig) -> CsvSchema {
    CsvSchema {
        target: config.data.target.clone(),
        lead_time: config.data.lead_time.clone(),
        sample_id: config.data.sample_id.clone(),
        classification: config.task == TaskKind::Classification,
    }
}

fn load_train_data(config: &RunConfig) -> Result<Dataset, CliError> {
    load_csv(&config.data.train, &schema_from(config)).map_err(data_err)
}

fn output_dir(config: &RunConfig) -> PathBuf {
    config.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn write_trace(model: &CsgeModel, path: &Path) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path).map_err(data_err)?);
    writeln!(out, "eta_global,eta_local,eta_time,objective,best").map_err(data_err)?;
    for entry in model.trace() {
        writeln!(
            out,
            "{},{},{},{},{}",
            entry.eta.global, entry.eta.local, entry.eta.time, entry.value, entry.best
        )
        .map_err(data_err)?;
    }
    Ok(())
}

fn print_fit_summary(model: &CsgeModel) -> Result<(), CliError> {
    let eta = model.eta();
    println!(
        "fitted eta: global = {:.4}, local = {:.4}, time = {:.4}",
        eta.global, eta.local, eta.time
    );
    println!("objective: {:.6}", model.objective_value());
    let weights = model.global_weights().map_err(data_err)?;
    for (id, w) in model.member_ids().iter().zip(&weights) {
        println!("global weight {id}: {w:.4}");
    }
    Ok(())
}

pub fn cmd_fit(
    config_path: &Path,
    external: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let data = load_train_data(&config)?;
    let csge_config = config.csge_config()?;
    let model = match external {
        None => fit(&config.members, &data, &csge_config).map_err(data_err)?,
        Some(path) => {
            let cube = import_external_predictions(path).map_err(data_err)?;
            fit_from_cube(&cube, &data, &csge_config).map_err(data_err)?
        }
    };

    let dir = output_dir(&config);
    ensure_dir(&dir)?;
    let model_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join("model.json"));
    save_model(&model, &model_path).map_err(data_err)?;
    write_trace(&model, &dir.join("trace.csv"))?;
    print_fit_summary(&model)?;
    if external.is_some() {
        println!("note: model was fitted from imported predictions; it explains weights but cannot predict new queries");
    }
    println!("model written to {}", model_path.display());
    Ok(())
}

/// Reads the model's feature columns from a CSV, ignoring other columns.
fn read_features(path: &Path, feature_names: &[String]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(format!("cannot read `{}`: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(data_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns = Vec::with_capacity(feature_names.len());
    for name in feature_names {
        let col = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(format!("feature column `{name}` not found in `{}`", path.display())))?;
        columns.push(col);
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| data_err(format!("line {line}: {e}")))?;
        let row: Vec<f64> = columns
            .iter()
            .map(|&c| {
                record[c]
                    .parse::<f64>()
                    .map_err(|_| data_err(format!("line {line}: `{}` is not a number", &record[c])))
            })
            .collect::<Result<_, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(data_err("no data rows"));
    }
    Ok(rows)
}

fn collect_breakdowns(
    model: &CsgeModel,
    rows: &[Vec<f64>],
) -> Result<Vec<BreakdownEntry>, CliError> {
    let mut entries = Vec::with_capacity(rows.len() * model.horizon());
    for (sample_id, x) in rows.iter().enumerate() {
        for t in 0..model.horizon() {
            let (member_predictions, fused, breakdown) =
                model.predict_with_members(x, t).map_err(data_err)?;
            entries.push(BreakdownEntry {
                sample_id,
                lead_time: t,
                member_predictions,
                fused_prediction: fused.scalar(),
                breakdown,
            });
        }
    }
    Ok(entries)
}

pub fn cmd_predict(model_path: &Path, data_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let model = load_model(model_path).map_err(data_err)?;
    if !model.has_members() {
        return Err(data_err(
            "this model was fitted from imported predictions and has no member estimators; use `explain` instead",
        ));
    }
    let rows = read_features(data_path, model.feature_names())?;
    let entries = collect_breakdowns(&model, &rows)?;

    ensure_dir(out_dir)?;
    let predictions_path = out_dir.join("predictions.csv");
    let mut out = BufWriter::new(File::create(&predictions_path).map_err(data_err)?);
    writeln!(out, "sample_id,lead_time,prediction").map_err(data_err)?;
    for entry in &entries {
        writeln!(
            out,
            "{},{},{}",
            entry.sample_id, entry.lead_time, entry.fused_prediction
        )
        .map_err(data_err)?;
    }
    drop(out);

    let breakdown_path = out_dir.join("breakdown.csv");
    write_breakdown_csv(&breakdown_path, model.member_ids(), &entries).map_err(data_err)?;
    println!(
        "wrote {} predictions to {} (breakdown: {})",
        entries.len(),
        predictions_path.display(),
        breakdown_path.display()
    );
    Ok(())
}

fn report_to_csv(report: &EvalReport, path: &Path) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path).map_err(data_err)?);
    writeln!(out, "name,metric,mean,std,min,max").map_err(data_err)?;
    for row in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.name, report.metric, row.mean, row.std, row.min, row.max
        )
        .map_err(data_err)?;
    }
    Ok(())
}

fn report_to_markdown(report: &EvalReport) -> String {
    let mut text = format!(
        "| model | {} mean | std | min | max |\n|---|---|---|---|---|\n",
        report.metric
    );
    for row in &report.rows {
        text.push_str(&format!(
            "| {} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
            row.name, row.mean, row.std, row.min, row.max
        ));
    }
    text
}

pub fn cmd_eval(
    config_path: &Path,
    folds: usize,
    n_seeds: usize,
    out: Option<&Path>,
    markdown: bool,
) -> Result<(), CliError> {
    if folds < 2 || n_seeds == 0 {
        return Err(CliError::Usage(
            "eval needs at least 2 folds and 1 seed".into(),
        ));
    }
    let config = RunConfig::load(config_path)?;
    let data = load_train_data(&config)?;
    let csge_config = config.csge_config()?;
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| config.seed.wrapping_add(i)).collect();
    let report = repeated_cv(&config.members, &data, &csge_config, folds, &seeds)
        .map_err(data_err)?;

    println!(
        "{} over {} repetitions ({} folds x {} seeds)",
        report.metric, report.n_repetitions, folds, n_seeds
    );
    print!("{}", report_to_markdown(&report));
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        if markdown {
            fs::write(path, report_to_markdown(&report)).map_err(data_err)?;
        } else {
            report_to_csv(&report, path)?;
        }
        println!("report written to {}", path.display());
    }
    Ok(())
}

pub fn cmd_synthetic(
    which: &str,
    samples: usize,
    x_range: (f64, f64),
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    let kind: SyntheticKind = which.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
    let setup = generate_synthetic(kind, samples, x_range, seed).map_err(data_err)?;
    let model = fit(&setup.specs, &setup.train, &setup.config).map_err(data_err)?;

    // squared-error summary over the midpoint test grid
    let mut squared = 0.0;
    let mut count = 0usize;
    let mut curves: Vec<(Vec<(f64, f64)>, Vec<(f64, f64)>)> =
        vec![(Vec::new(), Vec::new()); setup.test.horizon()];
    for row in 0..setup.test.n_samples() {
        let x = setup.test.feature_row(row);
        for t in 0..setup.test.horizon() {
            let (prediction, _) = model.predict(&x, t).map_err(data_err)?;
            let truth = setup.test.target(row, t);
            squared += (prediction.scalar() - truth).powi(2);
            count += 1;
            curves[t].0.push((x[0], truth));
            curves[t].1.push((x[0], prediction.scalar()));
        }
    }
    let rmse = (squared / count as f64).sqrt();

    ensure_dir(out_dir)?;
    for (t, (target_curve, predicted_curve)) in curves.iter().enumerate() {
        write_xy(out_dir.join(format!("target_t{t}.xy")), target_curve).map_err(data_err)?;
        write_xy(out_dir.join(format!("prediction_t{t}.xy")), predicted_curve)
            .map_err(data_err)?;
    }

    let report_path = out_dir.join("report.csv");
    let mut out = BufWriter::new(File::create(&report_path).map_err(data_err)?);
    writeln!(out, "key,value").map_err(data_err)?;
    writeln!(out, "experiment,{}", kind.name()).map_err(data_err)?;
    writeln!(out, "samples,{samples}").map_err(data_err)?;
    let eta = model.eta();
    writeln!(out, "eta_global,{}", eta.global).map_err(data_err)?;
    writeln!(out, "eta_local,{}", eta.local).map_err(data_err)?;
    writeln!(out, "eta_time,{}", eta.time).map_err(data_err)?;
    writeln!(out, "rmse,{rmse}").map_err(data_err)?;
    let weights = model.global_weights().map_err(data_err)?;
    for (id, w) in model.member_ids().iter().zip(&weights) {
        writeln!(out, "global_weight_{id},{w}").map_err(data_err)?;
    }
    for t in 0..model.horizon() {
        let weights = model.time_weights_at(t).map_err(data_err)?;
        for (id, w) in model.member_ids().iter().zip(&weights) {
            writeln!(out, "time_weight_t{t}_{id},{w}").map_err(data_err)?;
        }
    }
    drop(out);

    println!(
        "{} experiment: rmse = {rmse:.6}, eta = ({:.4}, {:.4}, {:.4})",
        kind.name(),
        eta.global,
        eta.local,
        eta.time
    );
    println!("report written to {}", report_path.display());
    Ok(())
}

pub fn cmd_explain(model_path: &Path, data_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let model = load_model(model_path).map_err(data_err)?;
    let rows = read_features(data_path, model.feature_names())?;

    if let Some(path) = out {
        if !model.has_members() {
            return Err(data_err(
                "breakdown export needs member predictions, but this model was fitted from imported predictions",
            ));
        }
        let entries = collect_breakdowns(&model, &rows)?;
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        write_breakdown_csv(path, model.member_ids(), &entries).map_err(data_err)?;
        println!("breakdown written to {}", path.display());
    }

    // aggregate weight statistics per member over all queries and lead times
    let j = model.n_members();
    let mut sums = vec![[0.0f64; 4]; j];
    let mut mins = vec![[f64::INFINITY; 4]; j];
    let mut maxs = vec![[f64::NEG_INFINITY; 4]; j];
    let mut count = 0usize;
    for x in &rows {
        for t in 0..model.horizon() {
            let breakdown = model.weights_for(x, t).map_err(data_err)?;
            for (member, w) in breakdown.members().iter().enumerate() {
                let values = [w.global, w.local, w.time, w.combined];
                for (k, v) in values.iter().enumerate() {
                    sums[member][k] += v;
                    mins[member][k] = mins[member][k].min(*v);
                    maxs[member][k] = maxs[member][k].max(*v);
                }
            }
            count += 1;
        }
    }
    println!("weight statistics over {count} queries:");
    println!("| member | aspect | mean | min | max |");
    println!("|---|---|---|---|---|");
    let aspects = ["global", "local", "time", "final"];
    for (member, id) in model.member_ids().iter().enumerate() {
        for (k, aspect) in aspects.iter().enumerate() {
            println!(
                "| {id} | {aspect} | {:.4} | {:.4} | {:.4} |",
                sums[member][k] / count as f64,
                mins[member][k],
                maxs[member][k]
            );
        }
    }
    Ok(())
}
