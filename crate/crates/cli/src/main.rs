use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use q2mpc_cli::check::check;
use q2mpc_cli::formats::{parse_circuit, parse_msp, parse_structure, write_msp};
use q2mpc_cli::trials::{run_trials, RunConfig};
use q2mpc_cli::{load, CliError};
use q2mpc_core::engine::Inputs;
use q2mpc_core::field::FieldSpec;
use q2mpc_core::msp::Msp;
use q2mpc_core::simnet::AdversaryScript;
use q2mpc_core::structures::PlayerSet;
use q2mpc_core::wss::Params;

const WORKERS_VAR: &str = "Q2MPC_TRIAL_WORKERS";

#[derive(Parser)]
#[command(
    name = "q2mpc",
    version,
    about = "MPC over span programs for Q2 adversary structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a span program meets the protocol's premises.
    Check {
        /// MSP file, or `threshold:<n>:<t>:<q>`.
        #[arg(long)]
        msp: String,
        /// Structure file; defaults to the structure the span program induces.
        #[arg(long)]
        structure: Option<String>,
    },
    /// Evaluate a circuit, possibly many times, under a scripted adversary.
    Run {
        #[arg(long)]
        circuit: String,
        /// MSP file, or `threshold:<n>:<t>:<q>`.
        #[arg(long)]
        msp: String,
        #[arg(long)]
        structure: Option<String>,
        /// Strategy name with optional parameters, as in `wrong_product_dealer:cp=guess`.
        #[arg(long, default_value = "honest")]
        adversary: String,
        /// Comma-separated corrupt players.
        #[arg(long, default_value = "")]
        corrupt: String,
        /// Corrupt players speak before honest ones instead of after.
        #[arg(long)]
        non_rushing: bool,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// Fixed inputs such as `x=3,y=2`; drawn from the trial seed otherwise.
        #[arg(long)]
        inputs: Option<String>,
        /// Print only the aggregate.
        #[arg(long)]
        summary_only: bool,
    },
    /// Print a span program file.
    GenMsp {
        #[command(subcommand)]
        kind: GenKind,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Vandermonde program for the threshold structure `{B : |B| <= t}`.
    Threshold {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        q: u64,
    },
}

fn threshold_msp(n: usize, t: usize, q: u64) -> Result<Msp, CliError> {
    Ok(Msp::threshold(n, t, &FieldSpec::computation(q)?)?)
}

fn load_msp(source: &str) -> Result<Msp, CliError> {
    let Some(numbers) = source.strip_prefix("threshold:") else {
        return load(source, parse_msp);
    };
    let nums: Vec<u64> = numbers
        .split(':')
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad threshold program '{source}'")))?;
    match nums[..] {
        [n, t, q] => threshold_msp(n as usize, t as usize, q),
        _ => Err(CliError::Usage(format!(
            "expected threshold:<n>:<t>:<q>, got '{source}'"
        ))),
    }
}

fn parse_corrupt(s: &str) -> Result<PlayerSet, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.trim_start_matches('P')
                .parse::<usize>()
                .ok()
                .filter(|&i| i < q2mpc_core::structures::MAX_PLAYERS)
                .ok_or_else(|| CliError::Usage(format!("bad player '{p}'")))
        })
        .collect()
}

fn parse_inputs(s: &str, field: &FieldSpec) -> Result<Inputs, CliError> {
    s.split(',')
        .filter(|item| !item.trim().is_empty())
        .map(|item| {
            let (w, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("expected wire=value, got '{item}'")))?;
            let v: u64 = v
                .trim()
                .parse()
                .ok()
                .filter(|&v| v < field.modulus())
                .ok_or_else(|| CliError::Usage(format!("'{v}' is not an element of {field}")))?;
            Ok((w.trim().to_string(), field.elem(v)))
        })
        .collect()
}

fn workers() -> Result<usize, CliError> {
    match std::env::var(WORKERS_VAR) {
        Err(_) => Ok(1),
        Ok(v) => v.parse().ok().filter(|&w| w > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "{WORKERS_VAR} must be a positive integer, got '{v}'"
            ))
        }),
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Check { msp, structure } => {
            let msp = load_msp(&msp)?;
            let structure = structure.map(|p| load(&p, parse_structure)).transpose()?;
            let report = check(&msp, structure)?;
            println!("{report}");
            if report.passes() {
                Ok(())
            } else {
                Err(CliError::CheckFailed)
            }
        }
        Command::Run {
            circuit,
            msp,
            structure,
            adversary,
            corrupt,
            non_rushing,
            k,
            seed,
            trials,
            inputs,
            summary_only,
        } => {
            let circuit = load(&circuit, parse_circuit)?;
            let msp = load_msp(&msp)?;
            let structure = structure.map(|p| load(&p, parse_structure)).transpose()?;
            let mut adversary =
                AdversaryScript::parse_strategy(&adversary, parse_corrupt(&corrupt)?)?;
            adversary.rushing = !non_rushing;
            let inputs = inputs
                .map(|s| parse_inputs(&s, circuit.field()))
                .transpose()?;
            let config = RunConfig {
                circuit,
                params: Params::new(msp, k)?,
                structure,
                adversary,
                seed,
                trials: trials as usize,
                inputs,
            };
            let workers = workers()?;
            info!("running {trials} trial(s) on {workers} worker(s)");
            let report = run_trials(&config, workers)?;
            println!("{}", report.render(!summary_only));
            if report.protocol_failed() {
                return Err(CliError::ProtocolFailure(format!(
                    "{} error(s), {} undetected cheat(s)",
                    report.errors(),
                    report.undetected_cheats()
                )));
            }
            Ok(())
        }
        Command::GenMsp {
            kind: GenKind::Threshold { n, t, q },
        } => {
            print!("{}", write_msp(&threshold_msp(n, t, q)?));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
