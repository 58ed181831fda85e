use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tfim_lab::experiment::{
    default_workers, read_scan_csv, run_entropy_scan, run_kp_search, run_mc_compare, run_transfer_bounds,
    run_uniformity_report, summary_path, write_json, ExperimentConfig, Scenario,
};
use tfim_lab::Error;

const EXIT_PARTIAL: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "tfim-lab", version, about = "Transverse-field Ising chain experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entanglement entropy of the block [0, L] over a grid of (m, L).
    EntropyScan(Common),
    /// Path-integral time-zero marginal against exact diagonalization.
    McCompare(Common),
    /// Eigenvalue, semigroup and Feynman-Kac checks on random clusters.
    TransferBounds(Common),
    /// Search for a numeric cluster-expansion certificate.
    KpSearch(Common),
    /// Compare the entropy slopes of two scan tables.
    Uniformity(UniformityArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_n: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    certificate_out: Option<PathBuf>,
}

#[derive(Args)]
struct UniformityArgs {
    /// Scan expected to saturate.
    #[arg(long)]
    bounded: PathBuf,
    /// Scan expected to grow logarithmically.
    #[arg(long)]
    critical: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn load(common: &Common, scenario: Scenario) -> Result<(ExperimentConfig, usize), Failure> {
    let mut config = ExperimentConfig::load_unvalidated(&common.config)?;
    if config.scenario != scenario {
        return Err(Failure::Config(format!(
            "{} describes scenario {}, not {}",
            common.config.display(),
            config.scenario.name(),
            scenario.name()
        )));
    }
    if common.seed.is_some() {
        config.seed = common.seed;
    }
    if let (Some(n), Some(scan)) = (common.max_n, config.scan.as_mut()) {
        scan.max_n = n;
    }
    if common.workers.is_some() {
        config.workers = common.workers;
    }
    if common.out.is_some() {
        config.output.path = common.out.clone();
    }
    if common.certificate_out.is_some() {
        config.output.certificate = common.certificate_out.clone();
    }
    config.validate()?;
    let workers = config.workers.unwrap_or_else(default_workers);
    Ok((config, workers))
}

fn emit<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    match path {
        Some(p) => write_json(p, value).map_err(Failure::from),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
            writeln!(std::io::stdout(), "{text}").map_err(|e| Failure::Run(e.to_string()))
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::EntropyScan(common) => {
            let (config, workers) = load(&common, Scenario::EntropyScan)?;
            let out = config
                .output
                .path
                .clone()
                .ok_or_else(|| Failure::Config("entropy-scan needs --out or [output] path".into()))?;
            let table = run_entropy_scan(&config, Some(&out), workers)?;
            for p in &table.summary.profiles {
                let slope = p.slope.map_or_else(|| "n/a".to_string(), |s| format!("{s:.4}"));
                let max = p.max_entropy_bits.map_or_else(|| "n/a".to_string(), |s| format!("{s:.6}"));
                eprintln!("{}: {} points, max S = {max} bits, slope = {slope}", p.profile_id, p.points);
            }
            eprintln!("wrote {} and {}", out.display(), summary_path(&out).display());
            if table.summary.failures.is_empty() {
                Ok(0)
            } else {
                eprintln!("{} scan points failed", table.summary.failures.len());
                Ok(EXIT_PARTIAL)
            }
        }
        Command::McCompare(common) => {
            let (config, workers) = load(&common, Scenario::McCompare)?;
            let report = run_mc_compare(&config, workers)?;
            for c in &report.comparisons {
                eprintln!("beta {}: TV {:.3e}, max |z| {:.2}", c.beta, c.tv_distance, c.max_abs_z);
            }
            eprintln!("pass: {}", report.pass);
            emit(config.output.path.as_deref(), &report)?;
            Ok(0)
        }
        Command::TransferBounds(common) => {
            let (config, _) = load(&common, Scenario::TransferBounds)?;
            let report = run_transfer_bounds(&config)?;
            eprintln!(
                "{} clusters: {} eigenvalue violations, semigroup error {:.2e}, Feynman-Kac failures {}/{}",
                report.clusters,
                report.eigenvalue_violations,
                report.max_semigroup_error,
                report.feynman_kac_failures,
                report.feynman_kac.len()
            );
            emit(config.output.path.as_deref(), &report)?;
            Ok(0)
        }
        Command::KpSearch(common) => {
            let (config, _) = load(&common, Scenario::KpSearch)?;
            let outcome = run_kp_search(&config)?;
            let path = config.output.certificate.as_deref().or(config.output.path.as_deref());
            emit(path, &outcome)?;
            if outcome.found {
                let c = outcome.certificate.as_ref().expect("found implies a certificate");
                let ln_c2 = c.bounds.map_or(f64::NAN, |b| b.ln_c2);
                eprintln!("certificate found: eta {:.4e}, ln C2 {ln_c2:.4}, slack {:.4}", c.eta, c.slack);
                Ok(0)
            } else {
                eprintln!("no certificate; binding inequality: {}", outcome.binding.as_deref().unwrap_or("none"));
                Ok(EXIT_PARTIAL)
            }
        }
        Command::Uniformity(args) => {
            let a = read_scan_csv(&args.bounded).map_err(|e| Failure::Config(e.to_string()))?;
            let b = read_scan_csv(&args.critical).map_err(|e| Failure::Config(e.to_string()))?;
            let report = run_uniformity_report(&a, &b, args.threshold).map_err(|e| Failure::Config(e.to_string()))?;
            eprintln!("slopes {:.4} vs {:.4}: {:?}", report.slope_a, report.slope_b, report.verdict);
            emit(args.out.as_deref(), &report)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_PARTIAL)
        }
    }
}
