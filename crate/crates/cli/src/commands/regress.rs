use copula_impute::regression::{gibbs_regress, summarize_posterior, write_posterior_summary, RegressionSpec};
use copula_impute::{add_lags, read_csv, Error, Result, Schema};
use serde::Serialize;

use super::*;
use crate::cli::RegressArgs;
use crate::config::{resolve_schema, FileConfig, Settings};
use crate::manifest::{now_unix_ms, RunManifest};
use crate::output::{ensure_dir, output_dir};

pub const POSTERIOR_DRAWS_FILE: &str = "posterior_draws.csv";
pub const POSTERIOR_SUMMARY_FILE: &str = "posterior_summary.csv";

#[derive(Serialize)]
struct Resolved<'a> {
    #[serde(flatten)]
    settings: &'a Settings,
    schema: &'a Schema,
    regression: &'a RegressionSpec,
}

/// Spec from `--spec`, else the config file, with `--outcome` and
/// `--predictors` overriding either.
pub fn resolve_spec(args: &RegressArgs, file: &FileConfig) -> Result<RegressionSpec> {
    let base = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read spec {}: {e}", p.display())))?;
            Some(serde_json::from_str::<RegressionSpec>(&text)?)
        }
        None => file.regression.clone(),
    };
    match (base, &args.outcome, &args.predictors) {
        (Some(mut s), outcome, predictors) => {
            if let Some(o) = outcome {
                s.outcome = o.clone();
            }
            if let Some(p) = predictors {
                s.predictors = p.clone();
            }
            Ok(s)
        }
        (None, Some(o), Some(p)) => {
            let names: Vec<&str> = p.iter().map(String::as_str).collect();
            Ok(RegressionSpec::new(o.clone(), &names))
        }
        _ => Err(Error::Config(
            "regression needs --spec, a `regression` config section, or --outcome with --predictors".into(),
        )),
    }
}

pub fn regress(args: &RegressArgs, jobs: Option<usize>, quiet: bool) -> Result<()> {
    let started = now_unix_ms();
    let file = FileConfig::load(args.chain.config.as_deref())?;
    let settings = Settings::resolve(&file, &args.chain, jobs, 0)?;
    let schema = resolve_schema(args.schema.as_deref(), &file)?;
    let spec = resolve_spec(args, &file)?;
    let table = read_csv(&args.input, &schema, &settings.tokens())?;
    let working = if settings.lags > 0 {
        let exclude: Vec<&str> = settings.lag_exclude.iter().map(String::as_str).collect();
        add_lags(&table, settings.lags, &exclude)?
    } else {
        table
    };
    if !quiet {
        eprintln!("running {} iterations", settings.iterations);
    }
    let draws = gibbs_regress(&working, &spec, &settings.chain(settings.seed, None))?;
    let summary = summarize_posterior(&draws, settings.level)?;

    let dir = output_dir(args.chain.out.as_deref(), "regress");
    ensure_dir(&dir)?;
    write_with(&dir.join(POSTERIOR_DRAWS_FILE), |w| draws.write_csv(w))?;
    write_with(&dir.join(POSTERIOR_SUMMARY_FILE), |w| write_posterior_summary(&summary, w))?;

    let resolved = Resolved {
        settings: &settings,
        schema: &schema,
        regression: &spec,
    };
    let mut manifest = RunManifest::new("regress", settings.seed, &resolved, started)?;
    manifest.inputs.push(args.input.clone());
    manifest.inputs.extend(args.schema.clone());
    manifest.inputs.extend(args.spec.clone());
    manifest.inputs.extend(args.chain.config.clone());
    manifest.finish(&dir)?;
    println!("{}", dir.display());
    Ok(())
}
