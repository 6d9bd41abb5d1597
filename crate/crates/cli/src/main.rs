use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use logtr_cli::output::write_atomic;
use logtr_cli::suites::{run_suite, Suite};
use logtr_cli::{compute, oracle_hodge, oracle_hurwitz, CliError, CliResult};
use logtr_core::scalar::fmt_scalar;
use logtr_core::Mode;

#[derive(Parser)]
#[command(name = "logtr", version, about = "Exact topological recursion on rational spectral curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Tr,
    Logtr,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Tr => Mode::Tr,
            ModeArg::Logtr => Mode::LogTr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Loops,
    Projection,
    Symmetry,
    Swap,
    Bridge,
    Closed,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::Loops => Suite::Loops,
            SuiteArg::Projection => Suite::Projection,
            SuiteArg::Symmetry => Suite::Symmetry,
            SuiteArg::Swap => Suite::Swap,
            SuiteArg::Bridge => Suite::Bridge,
            SuiteArg::Closed => Suite::Closed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute one correlator and write it as JSON.
    Compute {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: usize,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Largest 2g-2+n accepted.
        #[arg(long, default_value_t = 4)]
        budget: u32,
    },
    /// Run a property suite over all (g, n) within the budget.
    Check {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 4)]
        budget: u32,
        /// Family used by the loops, projection and symmetry suites.
        #[arg(long, value_enum, default_value = "logtr")]
        mode: ModeArg,
    },
    /// Exact Hurwitz numbers and intersection numbers.
    Oracle(OracleArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct OracleArgs {
    /// Degree, profile (e.g. "2,1") and genus.
    #[arg(long, num_args = 3, value_names = ["D", "MU", "G"])]
    hurwitz: Option<Vec<String>>,
    #[arg(long)]
    hodge: bool,
}

fn read(path: &PathBuf) -> CliResult<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Compute { curve, mode, g, n, out, budget } => {
            let cache = std::env::var_os("LOGTR_CACHE_DIR").map(PathBuf::from);
            let doc = compute(&read(&curve)?, mode.into(), g, n, budget, cache.as_deref())?;
            match out {
                Some(p) => write_atomic(&p, &doc.to_text())?,
                None => print!("{}", doc.to_text()),
            }
            Ok(true)
        }
        Command::Check { curve, suite, budget, mode } => {
            let report = run_suite(&read(&curve)?, suite.into(), mode.into(), budget)?;
            print!("{}", pretty(&report));
            Ok(report["pass"] == serde_json::Value::Bool(true))
        }
        Command::Oracle(args) => {
            if let Some(h) = args.hurwitz {
                let bad = |what: &str| CliError::Core(logtr_core::Error::Parse(format!("bad {what}")));
                let d: usize = h[0].parse().map_err(|_| bad("degree"))?;
                let g: u32 = h[2].parse().map_err(|_| bad("genus"))?;
                println!("{}", fmt_scalar(&oracle_hurwitz(d, &h[1], g)?));
                Ok(true)
            } else {
                let table = oracle_hodge()?;
                print!("{}", pretty(&table));
                Ok(table["consistent"] == serde_json::Value::Bool(true))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
