//! `polarepi`: run single simulations, execute campaigns, analyse run tables
//! and export networks.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use polarepi::experiments::{self, Profile, RunOptions, CAMPAIGNS};
use polarepi::params::{parse_config_str, KEYS};
use polarepi::seed::graph_seed_for;
use polarepi::{analysis, engine, generate_holme_kim, records, Error, ErrorKind, Params, Result};

#[derive(Parser)]
#[command(
    name = "polarepi",
    version,
    about = "Partisan sorting coupled with SIS epidemics on a Holme-Kim network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and print its sampled metrics as CSV.
    Run(RunArgs),
    /// Execute a named campaign into <out>/<name>/, resuming earlier output.
    Campaign(CampaignArgs),
    /// Correlations and per-γ aggregates over run tables.
    Analyze(AnalyzeArgs),
    /// Write the network a run would use as an edge list.
    ExportGraph(GraphArgs),
}

#[derive(Args)]
struct ParamArgs {
    /// Flat `key = value` config file applied over the defaults
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one parameter, e.g. `--set epi.mu=0.1`; repeatable, wins over --config
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Digital-media influence γ [default: 0.5]
    #[arg(long)]
    gamma: Option<f64>,
    /// Infection rate β [default: 0.05]
    #[arg(long)]
    beta: Option<f64>,
    /// Recovery rate μ [default: 0.01]
    #[arg(long)]
    mu: Option<f64>,
    /// Aware attenuation ε [default: 0]
    #[arg(long)]
    epsilon: Option<f64>,
    /// Information steps per run [default: 50000]
    #[arg(long)]
    steps: Option<u64>,
    /// Information steps per epidemic step [default: 1]
    #[arg(long)]
    epi_interval: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Run seed; a fresh one is generated and printed when absent
    #[arg(long)]
    seed: Option<u64>,
    /// Sampling period in steps, 0 for the final state only [default: 0]
    #[arg(long)]
    record_interval: Option<u64>,
    /// Write the CSV here instead of standard output
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CampaignArgs {
    /// One of gamma-sweep, scenario-mild, scenario-severe, heatmap, epsilon-calibration
    name: String,
    #[command(flatten)]
    params: ParamArgs,
    /// Replicate scale: desk or full [default: desk]
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Base seed for all derived run seeds; generated and printed when absent
    #[arg(long)]
    base_seed: Option<u64>,
    /// Output root; results land in <out>/<name>/ [default: results]
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; 1 runs serially [default: available cores]
    #[arg(long)]
    workers: Option<usize>,
    /// Runs per flush to runs.csv [default: 64]
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    /// Stop after this many new runs; rerun to continue
    #[arg(long)]
    max_runs: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run tables with the engine CSV schema
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Write report.csv and aggregates.csv here instead of printing
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Exit with the undefined-metric code when any correlation is undefined
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Run seed the network is derived from; generated and printed when absent
    #[arg(long)]
    seed: Option<u64>,
    /// Write the edge list here instead of standard output
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Parameter table appended to the help of every command that takes parameters.
fn parameter_help() -> String {
    let defaults = Params::default();
    let mut text = String::from("Parameters (for --config and --set) with defaults:\n");
    for &(key, what) in KEYS {
        let value = match key {
            "seed" | "graph.seed" => "derived".to_string(),
            _ => defaults.get(key).expect("known key"),
        };
        text.push_str(&format!("  {key:<36} {value:<8} {what}\n"));
    }
    text
}

/// Resolves parameters: defaults, then the config file, then `--set`, then
/// dedicated flags. Returns whether a run seed was given.
fn resolve(args: &ParamArgs, seed_flag: Option<u64>, record_interval: Option<u64>) -> Result<(Params, bool)> {
    let mut pairs = Vec::new();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        pairs.extend(parse_config_str(&text)?);
    }
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::config(o.clone(), "expected KEY=VALUE"))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    let flags = [
        ("info.gamma", args.gamma.map(|v| v.to_string())),
        ("epi.beta", args.beta.map(|v| v.to_string())),
        ("epi.mu", args.mu.map(|v| v.to_string())),
        ("epi.epsilon", args.epsilon.map(|v| v.to_string())),
        ("steps", args.steps.map(|v| v.to_string())),
        ("epi_interval", args.epi_interval.map(|v| v.to_string())),
        ("record_interval", record_interval.map(|v| v.to_string())),
        ("seed", seed_flag.map(|v| v.to_string())),
    ];
    pairs.extend(
        flags
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v))),
    );

    let mut p = Params::default();
    for (k, v) in &pairs {
        p.set(k, v)?;
    }
    let seed_given = pairs.iter().any(|(k, _)| k == "seed");
    if !seed_given {
        p.seed = rand::random();
    }
    if !pairs.iter().any(|(k, _)| k == "graph.seed") {
        p.graph.seed = graph_seed_for(p.seed);
    }
    p.validate()?;
    Ok((p, seed_given))
}

fn announce_seed(label: &str, seed: u64, flag: &str) {
    eprintln!("*** {label}: {seed} (replay with {flag} {seed}) ***");
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn out_label(path: Option<&Path>) -> PathBuf {
    path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (p, seed_given) = resolve(&args.params, args.seed, args.record_interval)?;
    if !seed_given {
        announce_seed("generated seed", p.seed, "--seed");
    }
    let record = engine::run_fresh(&p)?;
    let label = out_label(args.out.as_deref());
    let io_err = |e| Error::io(&label, e);
    let mut out = open_out(args.out.as_deref())?;
    writeln!(out, "# params_digest = {}", record.params_digest).map_err(io_err)?;
    for (k, v) in p.entries() {
        writeln!(out, "# {k} = {v}").map_err(io_err)?;
    }
    records::write_rows(&mut out, &record.time_series_rows(), true).map_err(io_err)?;
    let f = &record.final_sample;
    let c = &record.counters;
    let psi = f.psi.map_or_else(|| "undefined".to_string(), |v| v.to_string());
    writeln!(
        out,
        "# final psi = {psi}, rho_a = {}, rho_i = {}; adoptions = {}, infections = {}, recoveries = {}",
        f.rho_a, f.rho_i, c.adoptions, c.infections, c.recoveries
    )
    .map_err(io_err)?;
    out.flush().map_err(io_err)
}

fn cmd_campaign(args: CampaignArgs) -> Result<()> {
    if !CAMPAIGNS.contains(&args.name.as_str()) {
        return Err(Error::Usage(format!(
            "unknown campaign `{}`; valid names: {}",
            args.name,
            CAMPAIGNS.join(", ")
        )));
    }
    let profile: Profile = args.profile.parse()?;
    let (base, _) = resolve(&args.params, Some(0), None)?;
    let base_seed = args.base_seed.unwrap_or_else(|| {
        let s = rand::random();
        announce_seed("generated base seed", s, "--base-seed");
        s
    });
    let spec = experiments::campaign(&args.name, base, profile, base_seed)?;
    let defaults = RunOptions::default();
    let opts = RunOptions {
        workers: args.workers.unwrap_or(defaults.workers).max(1),
        batch_size: args.batch_size,
        max_new_runs: args.max_runs,
    };
    let outcome = experiments::run_campaign(&spec, &args.out, &opts)?;
    let state = if outcome.complete {
        "complete"
    } else {
        "incomplete, rerun to continue"
    };
    println!(
        "{}: {} runs executed, {} already present, {} recorded ({state}) in {}",
        spec.name,
        outcome.executed,
        outcome.skipped,
        outcome.rows.len(),
        outcome.dir.display()
    );
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let mut rows = Vec::new();
    for path in &args.inputs {
        rows.extend(records::load_rows(path)?);
    }
    let report = analysis::analyze(&rows);
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            for (name, text) in [
                ("report.csv", report.to_csv()),
                ("aggregates.csv", report.aggregates_csv()),
            ] {
                let path = dir.join(name);
                fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
            print!("{}", report.summary_text());
        }
        None => print!("{}", report.to_csv()),
    }
    let undefined: Vec<String> = report
        .lines
        .iter()
        .filter(|l| l.value.is_none())
        .map(|l| format!("{} [{}]", l.metric, l.scenario))
        .collect();
    if args.strict && !undefined.is_empty() {
        return Err(Error::UndefinedMetric(undefined.join(", ")));
    }
    Ok(())
}

fn cmd_export_graph(args: GraphArgs) -> Result<()> {
    let (p, seed_given) = resolve(&args.params, args.seed, None)?;
    if !seed_given {
        announce_seed("generated seed", p.seed, "--seed");
    }
    let g = generate_holme_kim(&p.graph)?;
    let label = out_label(args.out.as_deref());
    let mut out = open_out(args.out.as_deref())?;
    g.write_edge_list(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&label, e))
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Io => 3,
        ErrorKind::Metric => 4,
    }
}

fn main() -> ExitCode {
    let table = parameter_help();
    let mut cmd = Cli::command();
    for name in ["run", "campaign", "export-graph"] {
        cmd = cmd.mut_subcommand(name, |c| c.after_help(table.clone()));
    }
    let cli = match Cli::from_arg_matches(&cmd.get_matches()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Campaign(a) => cmd_campaign(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::ExportGraph(a) => cmd_export_graph(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
