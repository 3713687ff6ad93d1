use copula_impute::kernels::substream;
use copula_impute::simulation::{generate_panel, inject_mar, MissingnessConfig, SimulationConfig};
use copula_impute::{Error, Result, Schema};
use rayon::prelude::*;
use serde::Serialize;

use super::*;
use crate::cli::SimulateArgs;
use crate::config::{FileConfig, DEFAULT_SEED};
use crate::manifest::{now_unix_ms, RunManifest};
use crate::output::{ensure_dir, output_dir, reset_dir, write_json};

pub const COMPLETE_FILE: &str = "complete.csv";
pub const MASKED_FILE: &str = "masked.csv";
pub const TRUTH_FILE: &str = "truth.csv";

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSettings {
    pub seed: u64,
    pub replicates: usize,
    pub simulation: SimulationConfig,
    pub missingness: MissingnessConfig,
}

impl SimulateSettings {
    pub fn resolve(file: &FileConfig, args: &SimulateArgs) -> Result<Self> {
        let mut simulation = file.simulation.clone().unwrap_or_default();
        if let Some(u) = args.units {
            simulation.units = u;
        }
        if let Some(t) = args.periods {
            simulation.periods = t;
        }
        if let Some(r) = args.rho {
            simulation.rho = r;
        }
        simulation.validate()?;
        let missingness = match args.missing_rate {
            Some(p) => MissingnessConfig::flat(p),
            None => file.missingness.clone().unwrap_or_else(MissingnessConfig::default_mar),
        };
        missingness.validate()?;
        let replicates = args.replicates.or(file.replicates).unwrap_or(1);
        if replicates == 0 {
            return Err(Error::Config("--replicates must be at least 1".into()));
        }
        Ok(SimulateSettings {
            seed: args.chain.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            replicates,
            simulation,
            missingness,
        })
    }
}

pub fn replicate_dir_name(index: usize) -> String {
    format!("rep_{:04}", index + 1)
}

pub fn simulate(args: &SimulateArgs, jobs: Option<usize>, quiet: bool) -> Result<()> {
    let started = now_unix_ms();
    let file = FileConfig::load(args.chain.config.as_deref())?;
    let settings = SimulateSettings::resolve(&file, args)?;
    let dir = output_dir(args.chain.out.as_deref(), "simulate");
    ensure_dir(&dir)?;

    let results: Vec<Result<Schema>> = with_pool(jobs.or(file.jobs), || {
        (0..settings.replicates)
            .into_par_iter()
            .map(|r| {
                let seed = replicate_seed(settings.seed, r);
                let complete = generate_panel(&settings.simulation, &mut substream(seed, 1))?;
                let (masked, truth) = inject_mar(&complete, &settings.missingness, &mut substream(seed, 2))?;
                let rep = dir.join(replicate_dir_name(r));
                reset_dir(&rep)?;
                complete.write_csv_file(rep.join(COMPLETE_FILE))?;
                masked.write_csv_file(rep.join(MASKED_FILE))?;
                truth.write_csv_file(rep.join(TRUTH_FILE))?;
                if !quiet {
                    eprintln!("replicate {}: {} cells masked", r + 1, truth.len());
                }
                Ok(Schema::of(&complete))
            })
            .collect()
    })?;
    let schemas = results.into_iter().collect::<Result<Vec<_>>>()?;
    write_json(&dir.join(SCHEMA_FILE), &schemas[0])?;

    let mut manifest = RunManifest::new("simulate", settings.seed, &settings, started)?;
    manifest.inputs.extend(args.chain.config.clone());
    manifest.finish(&dir)?;
    println!("{}", dir.display());
    Ok(())
}
