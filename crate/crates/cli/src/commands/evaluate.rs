use std::fs::File;
use std::io::BufReader;

use copula_impute::copula::export::{read_long_draws, read_summary_points};
use copula_impute::evaluation::{write_tidy_csv, EvaluationInput, MetricsReport};
use copula_impute::simulation::TruthRecord;
use copula_impute::{read_csv, Error, Result, Schema};
use serde::Serialize;

use super::*;
use crate::cli::EvaluateArgs;
use crate::config::{FileConfig, Settings};
use crate::manifest::{now_unix_ms, RunManifest};
use crate::output::{ensure_dir, write_json};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))
}

#[derive(Serialize)]
struct Resolved {
    level: f64,
    error_mode: copula_impute::evaluation::ErrorMode,
}

pub fn evaluate(args: &EvaluateArgs, jobs: Option<usize>, _quiet: bool) -> Result<()> {
    let started = now_unix_ms();
    let file = FileConfig::load(args.chain.config.as_deref())?;
    let settings = Settings::resolve(&file, &args.chain, jobs, 0)?;
    let schema = match &args.schema {
        Some(p) => Schema::from_json_file(p)?,
        None => Schema::from_json_file(args.run.join(SCHEMA_FILE))?,
    };
    let truth = TruthRecord::read_csv_file(&args.truth)?;
    let draws = read_long_draws(open(&args.run.join(DRAWS_DIR).join(DRAWS_FILE))?)?;
    let points = read_summary_points(open(&args.run.join(SUMMARY_FILE))?)?;
    let masked = args
        .input
        .as_ref()
        .map(|p| read_csv(p, &schema, &settings.tokens()))
        .transpose()?;
    let kinds = schema
        .0
        .iter()
        .map(|(name, kind)| (name.clone(), kind.column_kind()))
        .collect();

    let input = EvaluationInput {
        truth: &truth,
        draws: &draws,
        points: &points,
        kinds: &kinds,
        masked: masked.as_ref(),
        level: settings.level,
        error_mode: settings.error_mode,
    };
    let report = MetricsReport::compute("run", &input, 0.0)?;
    let dir = args.chain.out.clone().unwrap_or_else(|| args.run.join("evaluation"));
    ensure_dir(&dir)?;
    write_json(&dir.join(METRICS_FILE), &report)?;
    write_with(&dir.join(METRICS_CSV), |w| write_tidy_csv(std::slice::from_ref(&report), w))?;

    let resolved = Resolved {
        level: settings.level,
        error_mode: settings.error_mode,
    };
    let mut manifest = RunManifest::new("evaluate", settings.seed, &resolved, started)?;
    manifest.inputs.push(args.truth.clone());
    manifest.inputs.push(args.run.clone());
    manifest.inputs.extend(args.input.clone());
    manifest.finish(&dir)?;
    println!("{}", dir.display());
    Ok(())
}
