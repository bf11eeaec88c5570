use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hodge_verify::config::{self, ExperimentConfig, Suite};
use hodge_verify::{emit, suites, VerifyError};

#[derive(Parser)]
#[command(name = "hodge-verify", version, about = "Run Hodge-system verification sweeps and write CSV/SVG results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment file; without it the built-in experiment of each suite runs.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only print failures.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Weighted a priori and Gaffney ratio stability.
    Apriori,
    /// Hessian mean-oscillation decay profiles.
    Decay,
    /// Muckenhoupt, reflection and maximal-function checks.
    Weights,
    /// Convergence, spectrum and constructive chains.
    Solver,
    /// Every suite, including the algebraic identities.
    All,
}

impl Command {
    fn suites(self) -> &'static [Suite] {
        match self {
            Command::Apriori => &[Suite::Apriori],
            Command::Decay => &[Suite::Decay],
            Command::Weights => &[Suite::Weights],
            Command::Solver => &[Suite::Solver],
            Command::All => &Suite::ALL,
        }
    }
}

fn experiments(cli: &Cli) -> Result<Vec<ExperimentConfig>, VerifyError> {
    let wanted = cli.command.suites();
    let mut list = match &cli.config {
        Some(path) => config::load(path)?.into_iter().filter(|c| wanted.contains(&c.suite)).collect(),
        None => wanted.iter().map(|&s| ExperimentConfig::builtin(s)).collect::<Vec<_>>(),
    };
    if list.is_empty() {
        return Err(VerifyError::Config("no experiment matches the selected suites".into()));
    }
    for c in &mut list {
        if let Some(seed) = cli.seed {
            c.seed = seed;
        }
        if let Some(out) = &cli.out {
            c.out = out.clone();
        }
    }
    Ok(list)
}

fn run(cli: &Cli) -> Result<bool, VerifyError> {
    let mut all_pass = true;
    for cfg in experiments(cli)? {
        let result = suites::run(&cfg)?;
        emit::emit(&result, &cfg.out)?;
        let checks = result.checks().count();
        let failures: Vec<_> = result.failures().collect();
        for f in &failures {
            eprintln!(
                "FAIL {} [{}] {} = {} {} {}",
                f.criterion_id,
                f.case,
                f.quantity,
                emit::format_value(f.value),
                f.relation.symbol(),
                f.threshold.map(emit::format_value).unwrap_or_default()
            );
        }
        if !cli.quiet {
            let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
            println!("{verdict} {} ({} checks, {} failed) -> {}", cfg.name, checks, failures.len(), cfg.out.display());
        }
        all_pass &= failures.is_empty();
    }
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
