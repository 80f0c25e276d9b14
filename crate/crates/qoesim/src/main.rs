//! Command-line front end: profile-table export, single scenario runs,
//! sweep grids, and the built-in verification suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config
//! error, 3 infeasible scenario.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qoesim::error::Error;
use qoesim::qoe::{build_profile_table, profile_table_csv, ApplicationSpec};
use qoesim::sim::{
    metrics_csv, metrics_csv_rows, run, run_traced, summarize, sweep, EponAlg, Load,
    ScenarioConfig, WirelessAlg, METRICS_CSV_HEADER,
};
use qoesim::verify::run_checks;

#[derive(Parser)]
#[command(
    name = "qoesim",
    about = "QoE-aware resource allocation in converged OFDMA + EPON access networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export an application's profile table as CSV.
    Profiles {
        /// Application: skype, googleplus, or ichat.
        #[arg(long, default_value = "skype")]
        app: String,
        /// FEC redundancy factor in [0, 1).
        #[arg(long, default_value_t = qoesim::qoe::DEFAULT_FEC)]
        fec: f64,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run one scenario and report per-type metrics.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Metrics CSV destination.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write per-TTI traces to PREFIX.{channel,wireless,epon}.csv.
        #[arg(long, value_name = "PREFIX")]
        trace: Option<PathBuf>,
    },
    /// Run a (load x algorithm x seed) grid and summarize it.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Number of seeds (1..=N).
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Metrics CSV destination (one row per run, domain, and type).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in verification suite.
    Verify {
        /// Only run checks whose name contains this substring.
        #[arg(long)]
        only: Option<String>,
    },
}

/// Config file plus command-line overrides (overrides win).
#[derive(Args)]
struct ScenarioArgs {
    /// Scenario config JSON; defaults apply for absent fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    load: Option<Load>,
    /// Wireless algorithm: mrr, wf, or mckp.
    #[arg(long)]
    wireless: Option<WirelessAlg>,
    /// EPON policy: eara or hpf.
    #[arg(long)]
    epon: Option<EponAlg>,
    /// MCKP approximation factor in (0, 1].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Application: skype, googleplus, or ichat.
    #[arg(long)]
    app: Option<String>,
    /// TTIs to simulate.
    #[arg(long)]
    ttis: Option<u32>,
}

impl ScenarioArgs {
    fn build(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                serde_json::from_str::<ScenarioConfig>(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(load) = self.load {
            cfg.load = load;
        }
        if let Some(alg) = self.wireless {
            cfg.wireless_algorithm = alg;
        }
        if let Some(alg) = self.epon {
            cfg.epon_algorithm = alg;
        }
        if let Some(eps) = self.epsilon {
            cfg.epsilon = eps;
        }
        if let Some(app) = &self.app {
            cfg.app = app.clone();
        }
        if let Some(ttis) = self.ttis {
            cfg.ttis = ttis;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Writes via a temp file in the same directory so the target is either
/// complete or absent.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => PathBuf::from(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
    };
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

fn exit_for(err: &Error) -> u8 {
    match err.root() {
        Error::CapacityInfeasible { .. } | Error::BaselineInfeasible { .. } => EXIT_INFEASIBLE,
        _ => EXIT_CONFIG,
    }
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_for(&err))
}

fn cmd_profiles(app: &str, fec: f64, output: Option<&Path>) -> ExitCode {
    let spec = match ApplicationSpec::for_name(app) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let table = match build_profile_table(&spec, fec) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let csv = profile_table_csv(&spec.name, &table);
    match output {
        Some(path) => {
            if let Err(e) = write_atomic(path, &csv) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
            println!("{} profiles -> {}", table.len(), path.display());
        }
        None => print!("{csv}"),
    }
    ExitCode::SUCCESS
}

fn print_type_table(metrics: &qoesim::sim::RunMetrics) {
    println!("{:<10} {:>5} {:>10} {:>10} {:>12}", "domain", "type", "mean_mos", "drop", "prbs_or_bw");
    for t in &metrics.per_type {
        println!(
            "{:<10} {:>5} {:>10.4} {:>10.4} {:>12.4}",
            t.domain.to_string(),
            t.ctype.to_string(),
            t.mean_mos,
            t.mean_call_drop,
            t.mean_resource
        );
    }
    println!(
        "cumulative mos {:.3}, cumulative call-drop {:.3}, blocked {}, sched {:.1} us/tti",
        metrics.mean_cumulative_mos,
        metrics.mean_cumulative_call_drop,
        metrics.blocked_total,
        metrics.mean_sched_time_us
    );
}

fn cmd_run(args: &ScenarioArgs, output: Option<&Path>, trace: Option<&Path>) -> ExitCode {
    let cfg = match args.build() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if let Some(prefix) = trace {
        let (metrics, tr) = match run_traced(&cfg) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        let base = prefix.to_string_lossy();
        for (suffix, body) in [
            ("channel", tr.channel_csv()),
            ("wireless", tr.wireless_csv()),
            ("epon", tr.epon_csv()),
        ] {
            let path = PathBuf::from(format!("{base}.{suffix}.csv"));
            if let Err(e) = write_atomic(&path, &body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        }
        finish_run(&cfg, &metrics, output)
    } else {
        let metrics = match run(&cfg) {
            Ok(m) => m,
            Err(e) => return fail(e),
        };
        finish_run(&cfg, &metrics, output)
    }
}

fn finish_run(
    cfg: &ScenarioConfig,
    metrics: &qoesim::sim::RunMetrics,
    output: Option<&Path>,
) -> ExitCode {
    print_type_table(metrics);
    if let Some(path) = output {
        if let Err(e) = write_atomic(path, &metrics_csv(cfg, metrics)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
        println!("metrics -> {}", path.display());
    }
    ExitCode::SUCCESS
}

fn cmd_sweep(args: &ScenarioArgs, seeds: u64, output: Option<&Path>) -> ExitCode {
    let base = match args.build() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if seeds == 0 {
        eprintln!("error: --seeds must be at least 1");
        return ExitCode::from(EXIT_CONFIG);
    }
    let loads: Vec<Load> = match args.load {
        Some(l) => vec![l],
        None => Load::ALL.to_vec(),
    };
    let algorithms: Vec<WirelessAlg> = match args.wireless {
        Some(a) => vec![a],
        None => vec![WirelessAlg::Mrr, WirelessAlg::Wf, WirelessAlg::Mckp],
    };
    let seed_list: Vec<u64> = (1..=seeds).collect();
    let cells = match sweep(&base, &loads, &algorithms, &seed_list) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let failures = cells.iter().filter(|c| c.outcome.is_err()).count();
    if let Some(path) = output {
        let mut csv = String::from(METRICS_CSV_HEADER);
        csv.push('\n');
        for cell in &cells {
            if let Ok(metrics) = &cell.outcome {
                let mut cfg = base.clone();
                cfg.load = cell.load;
                cfg.wireless_algorithm = cell.algorithm;
                cfg.seed = cell.seed;
                csv.push_str(&metrics_csv_rows(&cfg, metrics));
            }
        }
        if let Err(e) = write_atomic(path, &csv) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
        println!(
            "{} runs ({failures} failed) -> {}",
            cells.len(),
            path.display()
        );
    }
    let (rows, warnings) = summarize(&cells);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{:<8} {:<6} {:<10} {:>5} {:>10} {:>9} {:>10} {:>9}",
        "load", "alg", "domain", "type", "mean_mos", "se_mos", "mean_drop", "se_drop"
    );
    for r in &rows {
        println!(
            "{:<8} {:<6} {:<10} {:>5} {:>10.4} {:>9.4} {:>10.4} {:>9.4}",
            r.load.to_string(),
            r.algorithm.to_string(),
            r.domain.to_string(),
            r.ctype.to_string(),
            r.mean_mos,
            r.stderr_mos,
            r.mean_call_drop,
            r.stderr_call_drop
        );
    }
    ExitCode::SUCCESS
}

fn cmd_verify(only: Option<&str>) -> ExitCode {
    let results = run_checks(only);
    if results.is_empty() {
        eprintln!("error: no check matches '{}'", only.unwrap_or(""));
        return ExitCode::from(EXIT_CONFIG);
    }
    let mut failed = 0;
    for r in &results {
        println!(
            "{} {:<24} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        if !r.passed {
            failed += 1;
        }
    }
    println!("{} of {} checks passed", results.len() - failed, results.len());
    if failed > 0 {
        ExitCode::from(EXIT_CHECK_FAILED)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Profiles { app, fec, output } => cmd_profiles(app, *fec, output.as_deref()),
        Command::Run {
            scenario,
            output,
            trace,
        } => cmd_run(scenario, output.as_deref(), trace.as_deref()),
        Command::Sweep {
            scenario,
            seeds,
            output,
        } => cmd_sweep(scenario, *seeds, output.as_deref()),
        Command::Verify { only } => cmd_verify(only.as_deref()),
    }
}
