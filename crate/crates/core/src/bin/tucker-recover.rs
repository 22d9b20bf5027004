use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tucker_recover::harness::{self, ExperimentKind, ExperimentSpec};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Complete,
    Phase,
    Noise,
    Modes,
    Cond,
    Compare,
}

impl From<Command> for ExperimentKind {
    fn from(c: Command) -> Self {
        match c {
            Command::Complete => ExperimentKind::Complete,
            Command::Phase => ExperimentKind::Phase,
            Command::Noise => ExperimentKind::Noise,
            Command::Modes => ExperimentKind::Modes,
            Command::Cond => ExperimentKind::Cond,
            Command::Compare => ExperimentKind::Compare,
        }
    }
}

/// Low-rank Tucker tensor recovery experiments.
#[derive(Parser, Debug)]
#[command(name = "tucker-recover", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Command,
    /// Key-value config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output` or `results/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(cli: &Cli) -> tucker_recover::Result<ExperimentSpec> {
    let text = std::fs::read_to_string(&cli.config)?;
    let mut spec = ExperimentSpec::parse(cli.experiment.into(), &text)?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match load(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let out = match harness::run(&spec) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| spec.output.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(spec.kind.name()));
    match harness::write_output(&dir, &spec, &out) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    if out.any_diverged() {
        eprintln!("warning: at least one run diverged");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
