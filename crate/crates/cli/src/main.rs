use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;
use streamdist::instance::GeneratorSpec;
use streamdist_cli::{
    describe, gen_instance, read_distribution, report_to_csv, run_experiment, CliError,
    CliResult, ExperimentConfig, TesterKind,
};

#[derive(Parser)]
#[command(name = "streamdist", version, about = "Streaming distribution testers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize a generated instance as a pmf file.
    Gen {
        /// uniform, point_mass, uniform_prefix, geometric, reversed_geometric,
        /// power, step or no_instance.
        kind: String,
        /// Generator parameter as key=value; repeatable.
        #[arg(long = "param", value_parser = parse_pair)]
        params: Vec<(String, f64)>,
        #[arg(long, env = "STREAMDIST_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print summary statistics of a distribution file.
    Describe { file: PathBuf },
    /// Run seeded trials of a tester and write a JSON report.
    Test {
        #[arg(long, value_enum)]
        tester: TesterKind,
        /// Distribution file (pmf or generator spec).
        #[arg(long)]
        instance: PathBuf,
        /// Reference distribution for identity, closeness and pcond.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        eps: f64,
        /// Memory budget in bits; the window midpoint when omitted.
        #[arg(long)]
        m: Option<u64>,
        /// Decomposition size for the learner.
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, env = "STREAMDIST_SEED", default_value_t = 0)]
        seed: u64,
        /// Profile name or JSON constants file.
        #[arg(long, default_value = "default")]
        constants: String,
        /// Constant override as key=value; repeatable.
        #[arg(long = "set", value_parser = parse_pair)]
        overrides: Vec<(String, f64)>,
        /// Worker threads (0: all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a per-trial CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_pair(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn write_out(path: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("writing {}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen { kind, params, seed, out } => {
            let spec = GeneratorSpec {
                kind,
                params: params.into_iter().map(|(k, v)| (k, Value::from(v))).collect(),
                seed,
            };
            let dist = gen_instance(&spec)?;
            write_out(out.as_ref(), &serde_json::to_string(&dist).map_err(|e| CliError::Io(e.to_string()))?)
        }
        Command::Describe { file } => {
            let dist = read_distribution(&file)?.materialize()?;
            println!("{}", to_json(&describe(&dist)?)?);
            Ok(())
        }
        Command::Test {
            tester,
            instance,
            reference,
            eps,
            m,
            l,
            trials,
            seed,
            constants,
            overrides,
            jobs,
            out,
            csv,
        } => {
            let mut cfg = ExperimentConfig::new(tester, read_distribution(&instance)?, eps);
            cfg.reference = reference.as_deref().map(read_distribution).transpose()?;
            cfg.m = m;
            cfg.l = l;
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.constants = constants;
            cfg.overrides = overrides.into_iter().collect::<BTreeMap<_, _>>();
            cfg.jobs = jobs;
            let report = run_experiment(&cfg)?;
            eprintln!(
                "{}: accept_rate {:.3} over {} trials ({} failed), mean samples {:.0}, max peak {} bits",
                tester.name(),
                report.accept_rate,
                report.trials,
                report.failed_trials,
                report.mean_samples,
                report.max_peak_bits
            );
            write_out(out.as_ref(), &to_json(&report)?)?;
            if let Some(path) = csv {
                std::fs::write(&path, report_to_csv(&report))
                    .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("streamdist: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
