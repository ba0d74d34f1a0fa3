//! `pcnc`: command-line driver.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 malformed configuration,
//! 3 numerical failure. Errors are printed to stderr as one JSON object.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pcnc::channel::NetworkRealization;
use pcnc::clustering::{build_zones, ClusterSet};
use pcnc::config::{schema_error, Mode, ScenarioConfig};
use pcnc::error::Error;
use pcnc::experiments::{build_allocation, build_clusters, run_scenario, sweep, sweep_csv, TrialFailure, VERSION};
use pcnc::format::{sig9, to_json};
use pcnc::motivating::{figure1_csv, figure1_sweep, Figure1Config, NormMode};
use pcnc::rates::{StreamAllocation, System};
use pcnc::rng::{substream, Role};
use pcnc::wmmse::{mr_precoder, wmmse_solve};
use pcnc::Precoding;

#[derive(Parser)]
#[command(name = "pcnc", version, about = "Partially coherent cell-free massive MIMO simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one network realization.
    Generate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Cluster the APs of one realization.
    Cluster {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Realization JSON (as written by `generate`) instead of drawing one.
        #[arg(long)]
        realization: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Cluster, allocate and optimize one realization.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        realization: Option<PathBuf>,
        /// Stream allocation JSON (K × Lc integers) to use instead of the configured policy.
        #[arg(long)]
        allocation: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run every trial of the scenario and aggregate.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the sweep described by the config's `sweep` field.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Two-AP motivating example: rate of each strategy over the power grid.
    Example {
        /// Example settings JSON (m, n, alpha, rho_db, norm_mode, trials, seed).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_enum)]
        norm_mode: Option<NormArg>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Trial index for single-realization commands.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Reference distance D in meters.
    #[arg(long)]
    ref_distance: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fc,
    Fnc,
    Pcnc,
    EvenCluster,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fc => Mode::Fc,
            ModeArg::Fnc => Mode::Fnc,
            ModeArg::Pcnc => Mode::Pcnc,
            ModeArg::EvenCluster => Mode::EvenCluster,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Unit,
    Iid,
}

enum Failure {
    /// An error together with the trial it happened in, when known.
    Error { error: Error, trial: Option<u64> },
    /// A trial that failed numerically inside a multi-trial run.
    Recorded(TrialFailure),
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure::Error { error, trial: None }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn in_trial(trial: u64) -> impl Fn(Error) -> Failure {
    move |error| Failure::Error {
        error,
        trial: Some(trial),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| {
        Error::config("config", format!("cannot read {}: {e}", path.display())).into()
    })
}

fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::from_json(&read(&args.config)?)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(mode) = args.mode {
        cfg.mode = mode.into();
    }
    if let Some(d) = args.ref_distance {
        cfg.ref_distance = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_realization(cfg: &ScenarioConfig, path: Option<&Path>, trial: u64) -> Result<NetworkRealization, Failure> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            let net: NetworkRealization = serde_json::from_str(&text).map_err(|e| {
                Error::config("realization", format!("{}: {e}", p.display()))
            })?;
            if net.num_aps() != cfg.num_aps || net.num_ues() != cfg.num_ues {
                return Err(Error::config("realization", "dimensions differ from the scenario config").into());
            }
            Ok(net)
        }
        None => NetworkRealization::generate(cfg, cfg.seed, trial).map_err(in_trial(trial)),
    }
}

fn emit(output: &OutputArgs, text: &str) -> Result<(), Failure> {
    match &output.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn json_text<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = to_json(value).map_err(Error::Json)?;
    s.push('\n');
    Ok(s)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate { scenario, output } => {
            let cfg = load_scenario(&scenario)?;
            let net = load_realization(&cfg, None, scenario.trial)?;
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => json_text(&net)?,
                Format::Csv => {
                    let mut s = String::from("k,l,beta_db\n");
                    for k in 0..net.num_ues() {
                        for l in 0..net.num_aps() {
                            s.push_str(&format!("{k},{l},{}\n", sig9(10.0 * net.beta[(k, l)].log10())));
                        }
                    }
                    s
                }
            };
            emit(&output, &text)
        }
        Command::Cluster {
            scenario,
            realization,
            output,
        } => {
            let cfg = load_scenario(&scenario)?;
            let net = load_realization(&cfg, realization.as_deref(), scenario.trial)?;
            let clusters = build_clusters(&cfg, &net);
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => {
                    let zones = build_zones(&net.ap_positions, cfg.ref_distance, cfg.area_side);
                    json_text(&json!({
                        "mode": cfg.mode,
                        "ref_distance": cfg.ref_distance,
                        "zones": zones,
                        "clusters": clusters,
                        "max_diameter": clusters.max_diameter(&net.ap_positions, cfg.area_side),
                    }))?
                }
                Format::Csv => {
                    let mut s = String::from("ap,cluster\n");
                    for l in 0..clusters.num_aps() {
                        s.push_str(&format!("{l},{}\n", clusters.cluster_of(l)));
                    }
                    s
                }
            };
            emit(&output, &text)
        }
        Command::Solve {
            scenario,
            realization,
            allocation,
            output,
        } => {
            let cfg = load_scenario(&scenario)?;
            let trial = scenario.trial;
            let net = load_realization(&cfg, realization.as_deref(), trial)?;
            let clusters: ClusterSet = build_clusters(&cfg, &net);
            let alloc = match allocation {
                Some(p) => {
                    let text = fs::read_to_string(&p)?;
                    serde_json::from_str::<StreamAllocation>(&text).map_err(|e| {
                        Error::config("allocation", format!("{}: {e}", p.display()))
                    })?
                }
                None => build_allocation(&cfg, &net, &clusters, trial).map_err(in_trial(trial))?,
            };
            let sys = System::new(&net, &clusters, &alloc).map_err(|e| match e {
                Error::InvalidAllocation(m) => Error::config("allocation", m),
                other => other,
            })?;
            let report = match cfg.precoding {
                Precoding::Wmmse => {
                    let mut rng = substream(cfg.seed, trial, Role::SolverInit);
                    wmmse_solve(&sys, &cfg.solver, &mut rng).map_err(in_trial(trial))?.1
                }
                Precoding::Mr => mr_precoder(&sys).1,
            };
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => json_text(&json!({
                    "version": VERSION,
                    "config": cfg,
                    "trial": trial,
                    "clusters": clusters,
                    "allocation": alloc,
                    "report": report,
                }))?,
                Format::Csv => {
                    let mut s = String::from("trial,k,c,rate\n");
                    for row in report.csv_rows(trial as usize) {
                        s.push_str(&row);
                        s.push('\n');
                    }
                    s
                }
            };
            emit(&output, &text)
        }
        Command::Run { scenario, output } => {
            let cfg = load_scenario(&scenario)?;
            let result = run_scenario(&cfg)?;
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => json_text(&result)?,
                Format::Csv => result.to_csv(),
            };
            emit(&output, &text)?;
            if let Some(f) = result.numerical_failure() {
                return Err(Failure::Recorded(f.clone()));
            }
            Ok(())
        }
        Command::Sweep { scenario, output } => {
            let cfg = load_scenario(&scenario)?;
            let spec = cfg
                .sweep
                .clone()
                .ok_or_else(|| Error::config("sweep", "the config has no `sweep` section"))?;
            let (rows, results) = sweep(&cfg, &spec)?;
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Csv => sweep_csv(&rows),
                Format::Json => json_text(&json!({ "version": VERSION, "config": cfg, "rows": rows }))?,
            };
            emit(&output, &text)?;
            if let Some(f) = results.iter().find_map(|r| r.numerical_failure()) {
                return Err(Failure::Recorded(f.clone()));
            }
            Ok(())
        }
        Command::Example {
            config,
            seed,
            trials,
            norm_mode,
            output,
        } => {
            let mut cfg = match config {
                Some(p) => serde_json::from_str::<Figure1Config>(&read(&p)?).map_err(schema_error)?,
                None => Figure1Config::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(n) = norm_mode {
                cfg.norm_mode = match n {
                    NormArg::Unit => NormMode::Unit,
                    NormArg::Iid => NormMode::Iid,
                };
            }
            let rows = figure1_sweep(&cfg)?;
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Csv => figure1_csv(&rows),
                Format::Json => json_text(&json!({ "version": VERSION, "config": cfg, "rows": rows }))?,
            };
            emit(&output, &text)
        }
    }
}

fn report(failure: Failure) -> ExitCode {
    let (error, trial) = match failure {
        Failure::Error { error, trial } => (error, trial),
        Failure::Recorded(f) => {
            let body = json!({ "kind": "numerical", "trial": f.trial, "message": f.error });
            eprintln!("{}", json!({ "error": body }));
            return ExitCode::from(3);
        }
    };
    let (code, body) = match &error {
        Error::InvalidConfig { field, message } => (
            2,
            json!({ "kind": "invalid_config", "field": field, "message": message }),
        ),
        e if e.is_numerical() => (
            3,
            json!({ "kind": "numerical", "trial": trial, "message": e.to_string() }),
        ),
        e => (1, json!({ "kind": "error", "trial": trial, "message": e.to_string() })),
    };
    eprintln!("{}", json!({ "error": body }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}
