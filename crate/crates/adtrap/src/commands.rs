use std::path::{Path, PathBuf};

use adtrap_core::simulation::{
    expand_grid, run_cell, run_scenario, GridAxis, GridKey, RunTrace, Scenario, SweepError,
    SweepRow, TraceSummary,
};
use adtrap_core::trap::{evaluate, AttackOutcome};
use log::{debug, info};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{
    ensure_dir, file_stem, write_attribution, write_impressions, write_json, write_log,
    write_reports, write_sweep,
};
use crate::error::CliError;
use crate::load::load_scenario;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub users: usize,
    pub websites: usize,
    pub campaigns: usize,
    pub probed_audiences: usize,
}

pub fn cmd_validate(path: &Path) -> Result<ValidationReport, CliError> {
    let s = load_scenario(path)?;
    Ok(ValidationReport {
        users: s.users.len(),
        websites: s.websites.len(),
        campaigns: s.campaigns.len(),
        probed_audiences: s.attack.as_ref().map_or(0, |a| a.audiences_to_probe.len()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOutput {
    pub seed: u64,
    pub trace: TraceSummary,
    /// Present when the scenario has an attack section.
    pub attack: Option<AttackOutcome>,
    /// Serialized as bare file names so the summary does not depend on
    /// where the output directory lives.
    #[serde(serialize_with = "file_names")]
    pub artifacts: Vec<PathBuf>,
    #[serde(skip)]
    pub run: RunTrace,
}

fn file_names<S: serde::Serializer>(paths: &[PathBuf], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(
        paths
            .iter()
            .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())),
    )
}

impl RunOutput {
    /// `exact=.. ambiguous=.. unknown=.. accuracy=..`, or trace counts when
    /// there was no attack.
    pub fn summary_line(&self) -> String {
        match &self.attack {
            Some(a) => a.summary.to_string(),
            None => format!(
                "impressions={} log_entries={} windows={}",
                self.trace.impressions, self.trace.log_entries, self.trace.windows
            ),
        }
    }
}

/// Runs a scenario, attacks it and scores the attack against the run's
/// ground truth. `seed` overrides the scenario's own seed. Artifacts are
/// written only when `out` is given.
pub fn cmd_run(path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<RunOutput, CliError> {
    let mut scenario = load_scenario(path)?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    run_loaded(&scenario, out)
}

pub fn run_loaded(scenario: &Scenario, out: Option<&Path>) -> Result<RunOutput, CliError> {
    info!(
        "running {} users, seed {}",
        scenario.users.len(),
        scenario.seed
    );
    let run = run_scenario(scenario)?;
    let attack = match &scenario.attack {
        Some(config) => {
            let truth = run.truth_by_network();
            let outcome = evaluate(&run.attacker_view(), config, Some(&truth))?;
            debug!("observations: {}", outcome.observations.len());
            Some(outcome)
        }
        None => None,
    };
    let mut output = RunOutput {
        seed: scenario.seed,
        trace: run.summary(),
        attack,
        artifacts: Vec::new(),
        run,
    };
    if let Some(dir) = out {
        output.artifacts = write_run_artifacts(dir, &output)?;
        let summary = dir.join("run_output.json");
        output.artifacts.push(summary.clone());
        write_json(&summary, &output)?;
    }
    Ok(output)
}

fn write_run_artifacts(dir: &Path, output: &RunOutput) -> Result<Vec<PathBuf>, CliError> {
    let dir = ensure_dir(dir)?;
    let mut written = Vec::new();
    let trace = &output.run;

    let p = dir.join("trace.json");
    write_json(&p, trace)?;
    written.push(p);

    let p = dir.join("impressions.csv");
    write_impressions(&p, &trace.impressions)?;
    written.push(p);

    for campaign in trace.spend.keys() {
        let reports: Vec<_> = trace
            .reports
            .iter()
            .filter(|r| &r.campaign == campaign)
            .cloned()
            .collect();
        let p = dir.join(format!("reports_{}.csv", file_stem(campaign.as_str())));
        write_reports(&p, &reports)?;
        written.push(p);
    }
    for (site, log) in &trace.logs {
        let p = dir.join(format!("log_{}.csv", file_stem(site.as_str())));
        write_log(&p, log)?;
        written.push(p);
    }
    if let Some(outcome) = &output.attack {
        let p = dir.join("attribution.csv");
        write_attribution(&p, outcome)?;
        written.push(p);
        let p = dir.join("attribution.json");
        write_json(&p, outcome)?;
        written.push(p);
    }
    info!("wrote {} files to {}", written.len(), dir.display());
    Ok(written)
}

/// `key=v1,v2,...`, one axis per argument.
pub fn parse_grid(specs: &[String]) -> Result<Vec<GridAxis>, CliError> {
    let mut axes: Vec<GridAxis> = Vec::new();
    for spec in specs {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("grid entry `{spec}` is not key=v1,v2,...")))?;
        let key: GridKey = key.trim().parse()?;
        if axes.iter().any(|a| a.key == key) {
            return Err(CliError::Usage(format!("grid key `{key}` given twice")));
        }
        let values = values
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| {
                    CliError::Usage(format!("grid key `{key}`: `{v}` is not a number"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        axes.push(GridAxis { key, values });
    }
    Ok(axes)
}

pub fn parse_seeds(list: &str) -> Result<Vec<u64>, CliError> {
    let seeds = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| CliError::Usage(format!("`{s}` is not a seed")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if seeds.is_empty() {
        return Err(SweepError::NoSeeds.into());
    }
    Ok(seeds)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub artifacts: Vec<PathBuf>,
}

/// Runs every grid cell under every seed, in parallel. Rows come back in
/// cell order whatever the scheduling.
pub fn cmd_sweep(
    path: &Path,
    grid: &[GridAxis],
    seeds: &[u64],
    out: Option<&Path>,
) -> Result<SweepOutput, CliError> {
    let template = load_scenario(path)?;
    let cells = expand_grid(&template, grid, seeds)?;
    info!("sweeping {} cells", cells.len());
    let rows = cells
        .par_iter()
        .map(run_cell)
        .collect::<Result<Vec<_>, _>>()?;
    let mut artifacts = Vec::new();
    if let Some(dir) = out {
        let dir = ensure_dir(dir)?;
        let keys: Vec<GridKey> = grid.iter().map(|a| a.key).collect();
        let p = dir.join("sweep.csv");
        write_sweep(&p, &keys, &rows)?;
        artifacts.push(p);
    }
    Ok(SweepOutput { rows, artifacts })
}
