use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use synthsel_cli::{parse_config, run, CliError, Command, Context};

#[derive(Parser)]
#[command(name = "synthsel", version, about = "Variable selection by aggregating lasso fits over synthetic replicates")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// Config document (TOML)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the config's seed
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; only affects wall-clock time
    #[arg(long, global = true, env = "SYNTHSEL_WORKERS", value_name = "N")]
    workers: Option<usize>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Train a diffusion model and write a checkpoint
    Train,
    /// Draw synthetic rows from a checkpoint
    Generate,
    /// Aggregate lasso selections over synthetic replicates
    Select,
    /// Average per-replicate OLS p-values
    Infer,
    /// Neighbourhood-selection graph estimate
    Graph,
    /// Run a simulation experiment
    Simulate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Train => Command::Train,
            Cmd::Generate => Command::Generate,
            Cmd::Select => Command::Select,
            Cmd::Infer => Command::Infer,
            Cmd::Graph => Command::Graph,
            Cmd::Simulate => Command::Simulate,
        }
    }
}

fn execute(args: &Args, cmd: Command) -> Result<(), CliError> {
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    }
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let (config, base) = parse_config(path)?;
    let seed = args.seed.unwrap_or(config.seed);
    let ctx = Context {
        config,
        base,
        seed,
        out: args.out.clone(),
    };
    for file in run(cmd, &ctx)? {
        println!("{}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let args = Args::parse();
    let cmd: Command = args.command.into();
    match execute(&args, cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.render(cmd.name()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
