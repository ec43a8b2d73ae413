use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ris_resilience::config::{Overrides, RunConfig, TimeModelName};
use ris_resilience::plotdata::{plotdata, write_plotdata};
use ris_resilience::sim::{
    element_table, named_setups, run_scenario, summary_table, sweep_elements, sweep_weights,
    weight_table, write_element_sweep, write_result, write_weight_sweep, Mode,
};
use ris_resilience::Error;

/// Resilience of RIS-assisted cell-free MIMO downlinks under link blockage.
#[derive(Parser)]
#[command(name = "risres", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its result directory.
    Run(RunArgs),
    /// Run a scenario once and score it for every weight point of the sweep grid.
    SweepWeights(RunArgs),
    /// Repeat a scenario for every RIS size of the sweep grid.
    SweepElements(RunArgs),
    /// Turn a result directory into tidy CSV tables.
    TracePlotdata {
        /// Result directory written by another subcommand.
        dir: PathBuf,
        /// Output directory [default: <dir>/plotdata].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TimeModelArg {
    Wall,
    Synthetic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    NoRis,
    RandomRis,
    OptimizedRis,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (replaces `seed` of the run file).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, value_enum)]
    time_model: Option<TimeModelArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Print the normalized configuration and exit.
    #[arg(long)]
    print_config: bool,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ALL_FAILED: u8 = 3;

fn fail(code: u8, err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn load(args: &RunArgs) -> Result<RunConfig, Error> {
    let config = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        seed: args.seed,
        mode: args.mode.map(|m| match m {
            ModeArg::NoRis => Mode::NoRis,
            ModeArg::RandomRis => Mode::RandomRis,
            ModeArg::OptimizedRis => Mode::OptimizedRis,
        }),
        time_model: args.time_model.map(|t| match t {
            TimeModelArg::Wall => TimeModelName::Wall,
            TimeModelArg::Synthetic => TimeModelName::Synthetic,
        }),
    };
    let config = config.with_overrides(&overrides);
    config.validate()?;
    Ok(config)
}

fn write_echo(config: &RunConfig, out: &Path) -> Result<(), Error> {
    let path = out.join("config.toml");
    std::fs::write(&path, config.echo()).map_err(|e| Error::Io { path, source: e })
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Parse { .. } | Error::InvalidConfig(_))
        || matches!(e, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
}

fn experiment(command: &Command, args: &RunArgs) -> ExitCode {
    let config = match load(args) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if args.print_config {
        print!("{}", config.echo());
        return ExitCode::SUCCESS;
    }
    let scenario = &config.scenario;
    let t0 = scenario.weights.t0_tolerable_s;
    let out = &args.out;
    let outcome = (|| -> Result<bool, Error> {
        let all_failed = match command {
            Command::Run(_) => {
                let result = run_scenario(scenario)?;
                write_result(&result, out)?;
                print!("{}", summary_table(&result, &named_setups(t0))?);
                result.all_failed()
            }
            Command::SweepWeights(_) => {
                let sweep = sweep_weights(scenario, &config.sweep.weight_points(t0)?)?;
                write_weight_sweep(&sweep, out)?;
                print!("{}", summary_table(&sweep.result, &[])?);
                print!("{}", weight_table(&sweep.rows));
                sweep.result.all_failed()
            }
            Command::SweepElements(_) => {
                let grid = config.sweep.element_points(t0)?;
                let sweep = sweep_elements(scenario, &config.sweep.elements, &grid)?;
                write_element_sweep(&sweep, out)?;
                print!("{}", element_table(&sweep));
                sweep.points.iter().all(|p| p.result.all_failed())
            }
            Command::TracePlotdata { .. } => unreachable!(),
        };
        write_echo(&config, out)?;
        Ok(all_failed)
    })();
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => fail(EXIT_ALL_FAILED, "every replication failed"),
        Err(e) if is_config_error(&e) => fail(EXIT_CONFIG, e),
        Err(e) => fail(EXIT_FAILURE, e),
    }
}

fn trace_plotdata(dir: &Path, out: Option<&Path>) -> ExitCode {
    let data = match plotdata(dir) {
        Ok(d) => d,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    for w in &data.warnings {
        log::warn!("{w}");
    }
    let out = out.map_or_else(|| dir.join("plotdata"), Path::to_path_buf);
    match write_plotdata(&data, &out) {
        Ok(paths) => {
            for (p, t) in paths.iter().zip(&data.tables) {
                println!("{} ({} rows)", p.display(), t.rows);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_FAILURE, e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(a) | Command::SweepWeights(a) | Command::SweepElements(a) => experiment(&cli.command, a),
        Command::TracePlotdata { dir, out } => trace_plotdata(dir, out.as_deref()),
    }
}
