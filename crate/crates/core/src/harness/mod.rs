//! Experiment configuration, synthetic data, drivers and CSV output.

mod config;
mod experiments;
mod synth;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub use config::{ExperimentKind, ExperimentSpec, SolverKind};
pub use experiments::{
    run, run_compare, run_complete, run_cond, run_mode_selection, run_noise, run_phase_transition,
    run_solver, ExperimentOutput, PhaseCell, RunSummary, Table,
};
pub use synth::{synth_conditioned, synth_tensor, GroundTruth, SyntheticInstance};

use crate::error::Result;
use crate::rng::PRNG_ALGORITHM;

/// Comment preamble identifying the run.
pub fn csv_preamble(spec: &ExperimentSpec) -> String {
    format!(
        "# experiment={}\n# spec_hash={}\n# prng={}\n# seed={}\n",
        spec.kind.name(),
        spec.hash(),
        PRNG_ALGORITHM,
        spec.seed
    )
}

/// Renders a table as CSV text with the preamble.
pub fn render_csv(spec: &ExperimentSpec, table: &Table) -> String {
    let mut s = csv_preamble(spec);
    s.push_str(&table.header);
    s.push('\n');
    for row in &table.rows {
        s.push_str(row);
        s.push('\n');
    }
    s
}

/// Writes every table as `<name>.csv` and a `meta.txt` into `dir`.
pub fn write_output(dir: &Path, spec: &ExperimentSpec, out: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for table in &out.tables {
        let path = dir.join(format!("{}.csv", table.name));
        fs::write(&path, render_csv(spec, table))?;
        written.push(path);
    }
    let meta = dir.join("meta.txt");
    let mut f = fs::File::create(&meta)?;
    writeln!(f, "tucker-recover {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(f, "experiment = {}", spec.kind.name())?;
    writeln!(f, "spec_hash = {}", spec.hash())?;
    writeln!(f, "prng = {PRNG_ALGORITHM}")?;
    writeln!(f, "master_seed = {}", spec.seed)?;
    writeln!(
        f,
        "trial seeds = derive_seed(master_seed, experiment id, trial, purpose) with purposes truth, omega, noise/<snr>"
    )?;
    writeln!(f, "runs = {}", out.runs.len())?;
    writeln!(f, "diverged = {}", out.runs.iter().filter(|r| r.status == crate::solvers::SolverStatus::Diverged).count())?;
    writeln!(f, "\n[spec]")?;
    write!(f, "{}", spec.canonical())?;
    written.push(meta);
    Ok(written)
}
