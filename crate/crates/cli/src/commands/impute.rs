use copula_impute::evaluation::write_tidy_csv;
use copula_impute::simulation::TruthRecord;
use copula_impute::{read_csv, Result, Schema};
use serde::Serialize;

use super::*;
use crate::cli::ImputeArgs;
use crate::config::{resolve_schema, FileConfig, Settings};
use crate::manifest::{now_unix_ms, RunManifest};
use crate::output::{ensure_dir, output_dir, write_json};

#[derive(Serialize)]
struct Resolved<'a> {
    #[serde(flatten)]
    settings: &'a Settings,
    schema: &'a Schema,
}

pub fn impute(args: &ImputeArgs, jobs: Option<usize>, quiet: bool) -> Result<()> {
    let started = now_unix_ms();
    let file = FileConfig::load(args.chain.config.as_deref())?;
    let settings = Settings::resolve(&file, &args.chain, jobs, 0)?;
    let schema = resolve_schema(args.schema.as_deref(), &file)?;
    let table = read_csv(&args.input, &schema, &settings.tokens())?;
    let truth = args.truth.as_ref().map(TruthRecord::read_csv_file).transpose()?;
    let dir = output_dir(args.chain.out.as_deref(), "impute");
    ensure_dir(&dir)?;

    let (chain, summary) = impute_table(&table, &settings, settings.seed, String::new(), quiet)?;
    write_chain_outputs(&dir, &table, &chain, &summary, settings.frames)?;
    write_json(&dir.join(SCHEMA_FILE), &Schema::of(&table))?;
    if let Some(truth) = &truth {
        let report = evaluate_chain("input", truth, &table, &chain, &summary, &settings)?;
        write_json(&dir.join(METRICS_FILE), &report)?;
        write_with(&dir.join(METRICS_CSV), |w| write_tidy_csv(std::slice::from_ref(&report), w))?;
    }

    let resolved = Resolved { settings: &settings, schema: &schema };
    let mut manifest = RunManifest::new("impute", settings.seed, &resolved, started)?;
    manifest.inputs.push(args.input.clone());
    manifest.inputs.extend(args.schema.clone());
    manifest.inputs.extend(args.truth.clone());
    manifest.inputs.extend(args.chain.config.clone());
    manifest.finish(&dir)?;
    println!("{}", dir.display());
    Ok(())
}
