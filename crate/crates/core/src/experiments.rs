//! Campaign definitions and the sweep runner.
//!
//! A campaign is a cartesian grid of parameter assignments, each repeated for a
//! number of replicates. Every run's seed is derived from
//! `(base_seed, replicate, grid_index)`, so output never depends on worker count
//! or scheduling. Rows are appended to `runs.csv` in batches as they finish; a
//! restarted campaign skips runs already present, and the completed file is
//! rewritten in canonical order.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{self, Aggregate};
use crate::engine::run;
use crate::error::{Error, Result};
use crate::graph::{generate_holme_kim, Graph};
use crate::params::Params;
use crate::records::{self, RunKey, RunRow};
use crate::seed::{derive_seed, GRAPH_STREAM};

/// One swept dimension. Each point assigns one or more keys at once, which
/// lets a single axis carry a whole scenario (β, μ, schedule).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub points: Vec<Vec<(String, String)>>,
}

impl Axis {
    pub fn values(key: &str, values: impl IntoIterator<Item = f64>) -> Axis {
        Axis {
            name: key.to_string(),
            points: values
                .into_iter()
                .map(|v| vec![(key.to_string(), v.to_string())])
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Full,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Profile> {
        match s {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            other => Err(Error::config(
                "profile",
                format!("`{other}` is not one of desk, full"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub name: String,
    pub base: Params,
    pub axes: Vec<Axis>,
    pub replicates: u64,
    pub base_seed: u64,
    /// Reuse one network for every run instead of growing a fresh one per run.
    pub shared_graph: bool,
}

/// A single planned run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub grid_index: u64,
    pub replicate: u64,
    pub params: Params,
}

impl Job {
    pub fn key(&self) -> RunKey {
        self.placeholder_row().run_key()
    }

    fn placeholder_row(&self) -> RunRow {
        let p = &self.params;
        RunRow {
            gamma: p.info.gamma,
            beta: p.epi.beta,
            mu: p.epi.mu,
            epsilon: p.epi.epsilon,
            epi_interval: p.epi_interval,
            seed: p.seed,
            step: p.steps,
            psi: None,
            rho_a: 0.0,
            rho_i: 0.0,
        }
    }
}

impl SweepSpec {
    pub fn grid_size(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    /// Parameter sets of every grid point, last axis varying fastest.
    pub fn grid(&self) -> Result<Vec<Params>> {
        let mut grid = vec![self.base];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(grid.len() * axis.len());
            for p in &grid {
                for point in &axis.points {
                    let mut q = *p;
                    for (k, v) in point {
                        q.set(k, v)?;
                    }
                    next.push(q);
                }
            }
            grid = next;
        }
        for p in &grid {
            p.validate()?;
        }
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size() == 0 || self.replicates == 0 {
            return Err(Error::config(
                "campaign",
                format!("`{}` has an empty grid or zero replicates", self.name),
            ));
        }
        self.grid().map(|_| ())
    }

    pub fn shared_graph_seed(&self) -> u64 {
        derive_seed(self.base_seed, GRAPH_STREAM, 0)
    }

    pub fn jobs(&self) -> Result<Vec<Job>> {
        self.validate()?;
        let grid = self.grid()?;
        let mut jobs = Vec::with_capacity(grid.len() * self.replicates as usize);
        for (g, params) in grid.iter().enumerate() {
            for r in 0..self.replicates {
                let seed = derive_seed(self.base_seed, r, g as u64);
                let mut params = params.with_run_seed(seed);
                if self.shared_graph {
                    params.graph.seed = self.shared_graph_seed();
                }
                jobs.push(Job {
                    grid_index: g as u64,
                    replicate: r,
                    params,
                });
            }
        }
        Ok(jobs)
    }
}

/// Evenly spaced values `start, start + step, …` computed as `i / denom` to
/// keep decimal grid points exact where possible.
fn grid_values(count: usize, numer_start: usize, numer_step: usize, denom: usize) -> Vec<f64> {
    (0..count)
        .map(|i| (numer_start + i * numer_step) as f64 / denom as f64)
        .collect()
}

/// γ ∈ {0, 0.02, …, 1}.
pub fn gamma_grid_fine() -> Vec<f64> {
    grid_values(51, 0, 1, 50)
}

/// γ ∈ {0, 0.1, …, 1}.
pub fn gamma_grid_tenths() -> Vec<f64> {
    grid_values(11, 0, 1, 10)
}

/// γ ∈ {0, 0.2, …, 1}.
pub fn gamma_grid_fifths() -> Vec<f64> {
    grid_values(6, 0, 1, 5)
}

/// β ∈ {0.001, 0.002, …, 0.05}.
pub fn beta_grid_heatmap() -> Vec<f64> {
    grid_values(50, 1, 1, 1000)
}

pub const CAMPAIGNS: [&str; 5] = [
    "gamma-sweep",
    "scenario-mild",
    "scenario-severe",
    "heatmap",
    "epsilon-calibration",
];

fn replicates_for(profile: Profile) -> u64 {
    match profile {
        Profile::Desk => 10,
        Profile::Full => 100,
    }
}

/// Mild scenario: β = 0.005, μ = 0.1, one epidemic step per information step.
pub fn apply_mild(p: &mut Params) {
    p.epi.beta = 0.005;
    p.epi.mu = 0.1;
    p.epi_interval = 1;
}

/// Severe scenario: β = 0.05, μ = 0.01, one epidemic step per ten information
/// steps.
pub fn apply_severe(p: &mut Params) {
    p.epi.beta = 0.05;
    p.epi.mu = 0.01;
    p.epi_interval = 10;
}

pub fn gamma_sweep(base: Params, profile: Profile, base_seed: u64) -> SweepSpec {
    SweepSpec {
        name: "gamma-sweep".into(),
        base,
        axes: vec![Axis::values("info.gamma", gamma_grid_fine())],
        replicates: replicates_for(profile),
        base_seed,
        shared_graph: false,
    }
}

pub fn scenario_mild(base: Params, profile: Profile, base_seed: u64) -> SweepSpec {
    let mut base = base;
    apply_mild(&mut base);
    SweepSpec {
        name: "scenario-mild".into(),
        ..gamma_sweep(base, profile, base_seed)
    }
}

pub fn scenario_severe(base: Params, profile: Profile, base_seed: u64) -> SweepSpec {
    let mut base = base;
    apply_severe(&mut base);
    SweepSpec {
        name: "scenario-severe".into(),
        ..gamma_sweep(base, profile, base_seed)
    }
}

/// Both scenarios over the same γ grid.
pub fn scenarios(base: Params, profile: Profile, base_seed: u64) -> (SweepSpec, SweepSpec) {
    (
        scenario_mild(base, profile, base_seed),
        scenario_severe(base, profile, base_seed),
    )
}

/// 50 β values × 11 γ values, 10 replicates of 5000 steps at μ = 0.1.
pub fn heatmap(base: Params, _profile: Profile, base_seed: u64) -> SweepSpec {
    let mut base = base;
    base.epi.mu = 0.1;
    base.steps = 5000;
    base.epi_interval = 1;
    SweepSpec {
        name: "heatmap".into(),
        base,
        axes: vec![
            Axis::values("epi.beta", beta_grid_heatmap()),
            Axis::values("info.gamma", gamma_grid_tenths()),
        ],
        replicates: 10,
        base_seed,
        shared_graph: false,
    }
}

pub const EPSILON_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub fn scenario_axis() -> Axis {
    let mut mild = Params::default();
    apply_mild(&mut mild);
    let mut severe = Params::default();
    apply_severe(&mut severe);
    let point = |p: &Params| {
        ["epi.beta", "epi.mu", "epi_interval"]
            .iter()
            .map(|k| (k.to_string(), p.get(k).expect("known key")))
            .collect()
    };
    Axis {
        name: "scenario".into(),
        points: vec![point(&mild), point(&severe)],
    }
}

/// ε ∈ {0, 0.25, 0.5, 0.75, 1} × {mild, severe} × γ ∈ {0, 0.2, …, 1}.
pub fn epsilon_calibration(base: Params, profile: Profile, base_seed: u64) -> SweepSpec {
    SweepSpec {
        name: "epsilon-calibration".into(),
        base,
        axes: vec![
            Axis::values("epi.epsilon", EPSILON_GRID),
            scenario_axis(),
            Axis::values("info.gamma", gamma_grid_fifths()),
        ],
        replicates: match profile {
            Profile::Desk => 5,
            Profile::Full => 20,
        },
        base_seed,
        shared_graph: false,
    }
}

/// Looks up a campaign by name. `scenario-mild` and `scenario-severe` are the
/// two halves of the scenario comparison.
pub fn campaign(name: &str, base: Params, profile: Profile, base_seed: u64) -> Result<SweepSpec> {
    Ok(match name {
        "gamma-sweep" => gamma_sweep(base, profile, base_seed),
        "scenario-mild" => scenario_mild(base, profile, base_seed),
        "scenario-severe" => scenario_severe(base, profile, base_seed),
        "heatmap" => heatmap(base, profile, base_seed),
        "epsilon-calibration" => epsilon_calibration(base, profile, base_seed),
        other => {
            return Err(Error::Usage(format!(
                "unknown campaign `{other}`; valid campaigns: {}",
                CAMPAIGNS.join(", ")
            )))
        }
    })
}

/// Runs every job on a pool of `workers` threads, preserving job order in the
/// output.
pub fn execute_jobs(jobs: &[Job], workers: usize, shared: Option<&Graph>) -> Result<Vec<RunRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let record = match shared {
                    Some(g) => run(g, &job.params)?,
                    None => run(&generate_holme_kim(&job.params.graph)?, &job.params)?,
                };
                Ok(record.final_row())
            })
            .collect()
    })
}

/// In-memory execution of a whole campaign, rows in canonical order.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<RunRow>> {
    let jobs = spec.jobs()?;
    let shared = shared_graph(spec)?;
    let mut rows = execute_jobs(&jobs, workers, shared.as_ref())?;
    records::sort_canonical(&mut rows);
    Ok(rows)
}

fn shared_graph(spec: &SweepSpec) -> Result<Option<Graph>> {
    if !spec.shared_graph {
        return Ok(None);
    }
    let mut g = spec.base.graph;
    g.seed = spec.shared_graph_seed();
    generate_holme_kim(&g).map(Some)
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workers: usize,
    /// Jobs per flush to disk.
    pub batch_size: usize,
    /// Stop after this many new runs (simulates an interrupted campaign).
    pub max_new_runs: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            batch_size: 64,
            max_new_runs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub dir: PathBuf,
    pub rows: Vec<RunRow>,
    pub executed: usize,
    pub skipped: usize,
    pub complete: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    campaign: &'a str,
    code_version: &'static str,
    complete: bool,
    runs_planned: usize,
    runs_recorded: usize,
    grid_size: usize,
    replicates: u64,
    base_seed: u64,
    shared_graph: bool,
    seed_rule: &'static str,
    base_params: Vec<(&'static str, String)>,
    base_params_digest: String,
    axes: &'a [Axis],
}

pub const RUNS_FILE: &str = "runs.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const AGGREGATES_FILE: &str = "aggregates.csv";

/// Executes a campaign into `out_root/<name>/`, resuming from any rows already
/// recorded there.
pub fn run_campaign(spec: &SweepSpec, out_root: &Path, opts: &RunOptions) -> Result<CampaignOutcome> {
    let dir = out_root.join(&spec.name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let runs_path = dir.join(RUNS_FILE);

    let jobs = spec.jobs()?;
    let planned: HashSet<RunKey> = jobs.iter().map(Job::key).collect();
    let existing = if runs_path.exists() {
        records::load_rows(&runs_path)?
    } else {
        Vec::new()
    };
    let done: HashSet<RunKey> = existing.iter().map(RunRow::run_key).collect();
    let mut pending: Vec<Job> = jobs
        .iter()
        .filter(|j| !done.contains(&j.key()))
        .copied()
        .collect();
    let skipped = jobs.len() - pending.len();
    if let Some(limit) = opts.max_new_runs {
        pending.truncate(limit);
    }

    let shared = shared_graph(spec)?;
    let mut executed = 0;
    for batch in pending.chunks(opts.batch_size.max(1)) {
        let rows = execute_jobs(batch, opts.workers, shared.as_ref()).map_err(|e| match e {
            Error::Io { .. } => e,
            other => {
                let first = &batch[0];
                Error::config(
                    "campaign",
                    format!(
                        "{} (grid point {}, replicate {})",
                        other, first.grid_index, first.replicate
                    ),
                )
            }
        })?;
        append_rows(&runs_path, &rows)?;
        executed += rows.len();
    }

    let mut rows = if runs_path.exists() {
        records::load_rows(&runs_path)?
    } else {
        Vec::new()
    };
    rows.retain(|r| planned.contains(&r.run_key()));
    records::sort_canonical(&mut rows);
    let complete = rows.len() == jobs.len();
    if complete {
        records::save_rows(&runs_path, &rows)?;
        write_derived(spec, &dir, &rows)?;
    }
    write_manifest(spec, &dir, jobs.len(), rows.len(), complete)?;
    Ok(CampaignOutcome {
        dir,
        rows,
        executed,
        skipped,
        complete,
    })
}

fn append_rows(path: &Path, rows: &[RunRow]) -> Result<()> {
    let fresh = !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    records::write_rows(file, rows, fresh).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_manifest(
    spec: &SweepSpec,
    dir: &Path,
    planned: usize,
    recorded: usize,
    complete: bool,
) -> Result<()> {
    let manifest = Manifest {
        campaign: &spec.name,
        code_version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
        complete,
        runs_planned: planned,
        runs_recorded: recorded,
        grid_size: spec.grid_size(),
        replicates: spec.replicates,
        base_seed: spec.base_seed,
        shared_graph: spec.shared_graph,
        seed_rule: "run seed = derive_seed(base_seed, replicate, grid_index); graph seed = derive_seed(run seed, 2^64-1, 0)",
        base_params: spec.base.entries(),
        base_params_digest: spec.base.digest(),
        axes: &spec.axes,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    write_text(&path, &(text + "\n"))
}

/// Aggregates, plus `cells.csv` for the heatmap and `summary.csv` for the ε
/// calibration.
fn write_derived(spec: &SweepSpec, dir: &Path, rows: &[RunRow]) -> Result<()> {
    let report = analysis::analyze(rows);
    write_text(&dir.join(AGGREGATES_FILE), &report.aggregates_csv())?;
    if spec.name == "heatmap" {
        write_text(&dir.join("cells.csv"), &heatmap_cells_csv(&report.aggregates))?;
    }
    if spec.name == "epsilon-calibration" {
        write_text(&dir.join("summary.csv"), &calibration_summary(rows).to_csv())?;
    }
    Ok(())
}

pub fn heatmap_cells_csv(aggregates: &[Aggregate]) -> String {
    let mut out = String::from("beta,gamma,rho_i_mean,rho_i_sd,runs\n");
    for a in aggregates {
        out.push_str(&format!(
            "{:?},{:?},{:?},{:?},{}\n",
            a.beta, a.gamma, a.rho_i.mean, a.rho_i.sd, a.runs
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub epsilon: f64,
    pub scenario: &'static str,
    /// Pearson r of log mean ψ against log mean ρ^I over the γ grid.
    pub log_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationSummary {
    pub entries: Vec<CalibrationEntry>,
}

impl CalibrationSummary {
    pub fn get(&self, epsilon: f64, scenario: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.epsilon == epsilon && e.scenario == scenario)
            .and_then(|e| e.log_r)
    }

    /// ε values where mild is negative and severe positive.
    pub fn sign_pattern_holds(&self, epsilon: f64, threshold: f64) -> bool {
        matches!(
            (self.get(epsilon, "mild"), self.get(epsilon, "severe")),
            (Some(m), Some(s)) if m <= -threshold && s >= threshold
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,scenario,log_psi_log_rho_i_r,sign\n");
        for e in &self.entries {
            let (r, sign) = match e.log_r {
                Some(r) => (format!("{r:?}"), if r < 0.0 { "negative" } else { "positive" }),
                None => (String::new(), "undefined"),
            };
            out.push_str(&format!("{:?},{},{},{}\n", e.epsilon, e.scenario, r, sign));
        }
        out
    }
}

/// Log-log ψ–ρ^I correlation per (ε, scenario), from per-γ means.
pub fn calibration_summary(rows: &[RunRow]) -> CalibrationSummary {
    let report = analysis::analyze(rows);
    let mut entries = Vec::new();
    for (key, _) in analysis::by_scenario(rows) {
        let scenario = if key.epi_interval() == 1 && key.beta() < 0.01 {
            "mild"
        } else {
            "severe"
        };
        entries.push(CalibrationEntry {
            epsilon: key.epsilon(),
            scenario,
            log_r: report.value(analysis::METRIC_LOG_PSI_RHO_I, &key.label()),
        });
    }
    entries.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon).then(a.scenario.cmp(b.scenario)));
    CalibrationSummary { entries }
}
