use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Command, FromArgMatches};

use sdde_cli::output::OutputDir;
use sdde_cli::{run_experiment, CliError, ExperimentConfig, ExperimentRegistry};

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's output.dir, then out/<kind>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; path i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensembles.
    #[arg(long, env = "SDDE_THREADS")]
    threads: Option<usize>,
    /// Full-size protocol instead of the desk-scale defaults.
    #[arg(long)]
    paper_scale: bool,
}

fn main() -> ExitCode {
    let registry = ExperimentRegistry::builtin();
    let mut cmd = Command::new("sdde")
        .about("Stochastic delay equations near a Hopf point: simulation and reductions")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for exp in registry.iter() {
        cmd = cmd.subcommand(RunArgs::augment_args(Command::new(exp.name()).about(exp.about())));
    }
    let matches = cmd.get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let args = match RunArgs::from_arg_matches(sub) {
        Ok(a) => a,
        Err(e) => e.exit(),
    };

    match run(&registry, name, args) {
        Ok(dir) => {
            eprintln!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(registry: &ExperimentRegistry, name: &str, args: RunArgs) -> Result<PathBuf, CliError> {
    let exp = registry.get(name)?;
    let loaded = ExperimentConfig::load(&args.config);
    let dir = args
        .out
        .clone()
        .or_else(|| loaded.as_ref().ok().and_then(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out").join(name));
    let result = loaded.and_then(|mut cfg| {
        if let Some(seed) = args.seed {
            cfg.ensemble.seed = seed;
        }
        if let Some(t) = args.threads {
            cfg.ensemble.threads = Some(t);
        }
        if args.paper_scale {
            exp.paper_scale(&mut cfg);
        }
        cfg.output.dir = Some(dir.clone());
        cfg.check()?;
        run_experiment(registry, name, cfg, &dir)
    });
    match result {
        Ok(()) => Ok(dir),
        Err(e) => {
            // Errors raised before the run started have no error.json yet.
            if !dir.join("error.json").exists() {
                if let Ok(out) = OutputDir::create(&dir) {
                    let _ = out.write_error(&e);
                }
            }
            Err(e)
        }
    }
}
