use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use unit_index::arith::SquarefreeD;
use unit_index::criterion::{evaluate, EvalOptions};
use unit_index::experiment::{report, run_scan, Format, ScanConfig};
use unit_index::qfclassgroup::verify_hypotheses;

#[derive(Parser)]
#[command(name = "unit-index", version, about = "Unit index of real biquadratic fields Q(√d, √p)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan primes p <= X and tabulate densities.
    Scan(ScanArgs),
    /// Evaluate a single prime.
    Verdict {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        p: u64,
    },
    /// Check that d is admissible and has trivial narrow 4-rank.
    Hypotheses {
        #[arg(long)]
        d: u64,
    },
}

#[derive(Args)]
struct ScanArgs {
    /// key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long = "X", alias = "x")]
    x: Option<u64>,
    /// Comma-separated values of m to keep.
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn scan(args: ScanArgs) -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = match &args.config {
        Some(path) => ScanConfig::from_file(path)?,
        None => ScanConfig::new(0, 0),
    };
    if let Some(d) = args.d {
        cfg.d = d;
    }
    if let Some(x) = args.x {
        cfg.x = x;
    }
    if let Some(m) = &args.m {
        cfg.set("m", m)?;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(out) = args.out {
        cfg.out = Some(out);
    }
    if let Some(f) = &args.format {
        cfg.format = f.parse()?;
    }
    if let Some(c) = args.checkpoint {
        cfg.checkpoint = Some(c);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let result = run_scan(&cfg)?;
    match &cfg.out {
        Some(out) => report(&cfg, &result, out)?,
        None => match cfg.format {
            Format::Csv => unit_index::experiment::write_csv(&result.records, std::io::stdout())?,
            Format::Json => unit_index::experiment::write_json(&result, std::io::stdout())?,
        },
    }
    if cfg.out.is_some() {
        println!("{}", result.summary);
    } else {
        eprintln!("{}", result.summary);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Scan(args) => scan(args)?,
        Command::Verdict { d, p } => {
            let d = SquarefreeD::new(d)?;
            let v = evaluate(&d, p, &EvalOptions::default());
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Command::Hypotheses { d } => {
            let report = verify_hypotheses(&SquarefreeD::new(d)?);
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.passed() {
                return Err("hypotheses fail".into());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
