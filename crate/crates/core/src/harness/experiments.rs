//! Experiment drivers. Trials run in parallel; results are collected in
//! (grid cell, trial) order so the output never depends on scheduling.

use rayon::prelude::*;

use super::config::{ExperimentKind, ExperimentSpec, SolverKind};
use super::synth::{synth_conditioned, synth_tensor, GroundTruth, SyntheticInstance};
use crate::error::{Error, Result};
use crate::measurement::NoiseSpec;
use crate::rng::derive_seed;
use crate::solvers::{
    rgd, sempiht, sm_qrgd, tiht, IhtVariant, MonitorFlags, Problem, SolveOutput, SolverConfig,
    SolverStatus, SolverTrace, TRACE_CSV_HEADER,
};
use crate::tensor::MultilinearRank;

/// Outcome of one solver run inside an experiment.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub trial: usize,
    pub solver: SolverKind,
    pub rank: MultilinearRank,
    pub rho: f64,
    pub snr_db: f64,
    pub kappa2: Option<f64>,
    /// 0-based.
    pub tangent_mode: usize,
    pub status: SolverStatus,
    pub iterations: usize,
    pub iters_to_tol: Option<usize>,
    pub final_rel_err: f64,
    pub trace: SolverTrace,
}

impl RunSummary {
    /// Mean over iterations `>= 1` of the leading-order thresholding work.
    pub fn mean_threshold_leading(&self) -> f64 {
        mean(self.trace.records.iter().skip(1).map(|r| r.threshold_flops.leading as f64))
    }

    pub fn mean_flops(&self) -> f64 {
        mean(self.trace.records.iter().skip(1).map(|r| r.flops.total() as f64))
    }

    pub fn mean_threshold_total(&self) -> f64 {
        mean(self.trace.records.iter().skip(1).map(|r| r.threshold_flops.total() as f64))
    }

    pub fn total_wall_ns(&self) -> u64 {
        self.trace.records.iter().map(|r| r.wall_ns).sum()
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// One cell of the phase-transition grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCell {
    pub r: usize,
    pub rho: f64,
    pub successes: usize,
    pub trials: usize,
    pub mean_iters: f64,
}

impl PhaseCell {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// A CSV body: header line and data rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: String,
    pub rows: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub tables: Vec<Table>,
    pub runs: Vec<RunSummary>,
    pub cells: Vec<PhaseCell>,
}

impl ExperimentOutput {
    pub fn any_diverged(&self) -> bool {
        self.runs.iter().any(|r| r.status == SolverStatus::Diverged)
    }
}

fn solver_config(spec: &ExperimentSpec, rank: &MultilinearRank, tangent_mode: usize) -> SolverConfig {
    let mut cfg = SolverConfig::new(rank.clone());
    cfg.step_rule = spec.step;
    cfg.max_iters = spec.max_iters;
    cfg.tol_rel_err = spec.tol;
    cfg.tangent_mode = tangent_mode;
    cfg.seed = spec.seed;
    if spec.monitors {
        cfg.monitors = MonitorFlags::all();
    }
    cfg
}

pub fn run_solver(kind: SolverKind, problem: &Problem<'_>, config: &SolverConfig) -> Result<SolveOutput> {
    match kind {
        SolverKind::SmQrgd => sm_qrgd(problem, config),
        SolverKind::SeMpiht => sempiht(problem, config),
        SolverKind::TihtCiht => tiht(problem, config, IhtVariant::Ciht),
        SolverKind::TihtNiht => tiht(problem, config, IhtVariant::Niht),
        SolverKind::Rgd => rgd(problem, config),
    }
}

struct Job<'a> {
    trial: usize,
    solver: SolverKind,
    inst: &'a SyntheticInstance,
    rho: f64,
    snr_db: f64,
    kappa2: Option<f64>,
    tangent_mode: usize,
}

fn execute(spec: &ExperimentSpec, job: &Job<'_>) -> Result<RunSummary> {
    let rank = job.inst.truth.tucker.ranks();
    let cfg = solver_config(spec, &rank, job.tangent_mode);
    let problem = Problem::new(&job.inst.op, &job.inst.y).with_truth(&job.inst.truth.dense);
    let out = run_solver(job.solver, &problem, &cfg)?;
    Ok(RunSummary {
        trial: job.trial,
        solver: job.solver,
        rank,
        rho: job.rho,
        snr_db: job.snr_db,
        kappa2: job.kappa2,
        tangent_mode: job.tangent_mode,
        status: out.trace.status,
        iterations: out.trace.iterations(),
        iters_to_tol: out.trace.iterations_to(spec.tol),
        final_rel_err: out.trace.final_rel_err(),
        trace: out.trace,
    })
}

fn instance(
    spec: &ExperimentSpec,
    id: &str,
    trial: usize,
    truth: GroundTruth,
    rho: f64,
    snr_db: f64,
) -> Result<SyntheticInstance> {
    let t = trial as u64;
    let noise = NoiseSpec::new(snr_db, derive_seed(spec.seed, id, t, &format!("noise/{snr_db:e}")))?;
    SyntheticInstance::completion(truth, rho, derive_seed(spec.seed, id, t, "omega"), noise)
}

fn random_truth(spec: &ExperimentSpec, id: &str, trial: usize, rank: &MultilinearRank) -> Result<GroundTruth> {
    synth_tensor(&spec.dims, rank, derive_seed(spec.seed, id, trial as u64, "truth"))
}

fn trace_rows<'a>(prefix: &str, trace: &'a SolverTrace, timing: bool) -> impl Iterator<Item = String> + 'a {
    let prefix = prefix.to_string();
    trace
        .records
        .iter()
        .map(move |r| format!("{prefix},{}", SolverTrace::csv_row(r, timing)))
}

fn run_jobs(spec: &ExperimentSpec, jobs: &[Job<'_>]) -> Result<Vec<RunSummary>> {
    jobs.par_iter().map(|j| execute(spec, j)).collect()
}

fn check_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::Config(format!(
            "spec is for {}, not {}",
            spec.kind.name(),
            kind.name()
        )));
    }
    spec.validate()
}

fn fmt_snr(s: f64) -> String {
    if s.is_infinite() {
        "inf".into()
    } else {
        format!("{s:e}")
    }
}

/// Independent trials of every listed solver on random completion instances.
pub fn run_complete(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    check_kind(spec, ExperimentKind::Complete)?;
    let id = "complete";
    let snr = spec.snrs[0];
    let insts = (0..spec.trials)
        .into_par_iter()
        .map(|t| instance(spec, id, t, random_truth(spec, id, t, &spec.rank)?, spec.rho, snr))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<Job<'_>> = insts
        .iter()
        .enumerate()
        .flat_map(|(trial, inst)| {
            spec.solvers.iter().map(move |&solver| Job {
                trial,
                solver,
                inst,
                rho: spec.rho,
                snr_db: snr,
                kappa2: None,
                tangent_mode: 0,
            })
        })
        .collect();
    let runs = run_jobs(spec, &jobs)?;
    let rows = runs
        .iter()
        .flat_map(|r| trace_rows(&format!("{},{}", r.trial, r.solver.name()), &r.trace, spec.timing))
        .collect();
    Ok(ExperimentOutput {
        kind: ExperimentKind::Complete,
        tables: vec![Table {
            name: "complete".into(),
            header: format!("trial,solver,{TRACE_CSV_HEADER}"),
            rows,
        }],
        runs,
        cells: Vec::new(),
    })
}

/// Success counts over the `(r, rho)` grid for the first listed solver. A
/// trial succeeds when its final relative error is at most `tol`.
pub fn run_phase_transition(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    check_kind(spec, ExperimentKind::Phase)?;
    let solver = spec.solvers[0];
    let d = spec.dims.len();
    let grid: Vec<(usize, f64)> = spec
        .ranks
        .iter()
        .flat_map(|&r| spec.rhos.iter().map(move |&rho| (r, rho)))
        .collect();
    let work: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..spec.trials).map(move |t| (c, t)))
        .collect();
    let runs = work
        .par_iter()
        .map(|&(c, trial)| {
            let (r, rho) = grid[c];
            let id = format!("phase/r={r}/rho={rho:e}");
            let rank = MultilinearRank::uniform(d, r);
            let inst = instance(spec, &id, trial, random_truth(spec, &id, trial, &rank)?, rho, spec.snrs[0])?;
            execute(
                spec,
                &Job {
                    trial,
                    solver,
                    inst: &inst,
                    rho,
                    snr_db: spec.snrs[0],
                    kappa2: None,
                    tangent_mode: 0,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<PhaseCell> = grid
        .iter()
        .enumerate()
        .map(|(c, &(r, rho))| {
            let cell = &runs[c * spec.trials..(c + 1) * spec.trials];
            PhaseCell {
                r,
                rho,
                successes: cell.iter().filter(|s| s.final_rel_err <= spec.tol).count(),
                trials: spec.trials,
                mean_iters: mean(cell.iter().map(|s| s.iterations as f64)),
            }
        })
        .collect();
    let rows = cells
        .iter()
        .map(|c| format!("{},{:e},{},{},{:e}", c.r, c.rho, c.successes, c.trials, c.mean_iters))
        .collect();
    Ok(ExperimentOutput {
        kind: ExperimentKind::Phase,
        tables: vec![Table {
            name: "phase".into(),
            header: "r,rho,successes,trials,mean_iters".into(),
            rows,
        }],
        runs,
        cells,
    })
}

/// Every listed solver at every SNR. Truth and sampling set depend only on
/// the trial; the noise draw also depends on the SNR.
pub fn run_noise(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    check_kind(spec, ExperimentKind::Noise)?;
    let id = "noise";
    let cases: Vec<(f64, usize)> = spec
        .snrs
        .iter()
        .flat_map(|&s| (0..spec.trials).map(move |t| (s, t)))
        .collect();
    let insts = cases
        .par_iter()
        .map(|&(snr, t)| instance(spec, id, t, random_truth(spec, id, t, &spec.rank)?, spec.rho, snr))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<Job<'_>> = cases
        .iter()
        .zip(&insts)
        .flat_map(|(&(snr, trial), inst)| {
            spec.solvers.iter().map(move |&solver| Job {
                trial,
                solver,
                inst,
                rho: spec.rho,
                snr_db: snr,
                kappa2: None,
                tangent_mode: 0,
            })
        })
        .collect();
    let runs = run_jobs(spec, &jobs)?;
    let rows = runs
        .iter()
        .flat_map(|r| {
            let prefix = format!("{},{},{}", fmt_snr(r.snr_db), r.trial, r.solver.name());
            trace_rows(&prefix, &r.trace, spec.timing).collect::<Vec<_>>()
        })
        .collect();
    Ok(ExperimentOutput {
        kind: ExperimentKind::Noise,
        tables: vec![Table {
            name: "noise".into(),
            header: format!("snr_db,trial,solver,{TRACE_CSV_HEADER}"),
            rows,
        }],
        runs,
        cells: Vec::new(),
    })
}

/// SM-QRGD with each listed tangent mode on shared instances.
pub fn run_mode_selection(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    check_kind(spec, ExperimentKind::Modes)?;
    let id = "modes";
    let insts = (0..spec.trials)
        .into_par_iter()
        .map(|t| instance(spec, id, t, random_truth(spec, id, t, &spec.rank)?, spec.rho, spec.snrs[0]))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<Job<'_>> = insts
        .iter()
        .enumerate()
        .flat_map(|(trial, inst)| {
            spec.tangent_modes.iter().map(move |&m| Job {
                trial,
                solver: SolverKind::SmQrgd,
                inst,
                rho: spec.rho,
                snr_db: spec.snrs[0],
                kappa2: None,
                tangent_mode: m,
            })
        })
        .collect();
    let runs = run_jobs(spec, &jobs)?;
    let rows = runs
        .iter()
        .flat_map(|r| {
            let prefix = format!("{},{}", r.trial, r.tangent_mode + 1);
            trace_rows(&prefix, &r.trace, spec.timing).collect::<Vec<_>>()
        })
        .collect();
    Ok(ExperimentOutput {
        kind: ExperimentKind::Modes,
        tables: vec![Table {
            name: "modes".into(),
            header: format!("trial,tangent_mode,{TRACE_CSV_HEADER}"),
            rows,
        }],
        runs,
        cells: Vec::new(),
    })
}

/// Listed solvers on truths with prescribed mode-2 condition numbers.
pub fn run_cond(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    check_kind(spec, ExperimentKind::Cond)?;
    let (n, r) = (spec.dims[0], spec.rank[0]);
    let cases: Vec<(f64, usize)> = spec
        .kappas
        .iter()
        .flat_map(|&k| (0..spec.trials).map(move |t| (k, t)))
        .collect();
    let insts = cases
        .par_iter()
        .map(|&(kappa, t)| {
            let id = format!("cond/kappa={kappa:e}");
            let truth = synth_conditioned(n, r, kappa, derive_seed(spec.seed, &id, t as u64, "truth"))?;
            instance(spec, &id, t, truth, spec.rho, spec.snrs[0])
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<Job<'_>> = cases
        .iter()
        .zip(&insts)
        .flat_map(|(&(kappa, trial), inst)| {
            spec.solvers.iter().map(move |&solver| Job {
                trial,
                solver,
                inst,
                rho: spec.rho,
                snr_db: spec.snrs[0],
                kappa2: Some(kappa),
                tangent_mode: 0,
            })
        })
        .collect();
    let runs = run_jobs(spec, &jobs)?;
    let rows = runs
        .iter()
        .flat_map(|r| {
            let prefix = format!("{:e},{},{}", r.kappa2.unwrap_or(1.0), r.trial, r.solver.name());
            trace_rows(&prefix, &r.trace, spec.timing).collect::<Vec<_>>()
        })
        .collect();
    Ok(ExperimentOutput {
        kind: ExperimentKind::Cond,
        tables: vec![Table {
            name: "cond".into(),
            header: format!("kappa2,trial,solver,{TRACE_CSV_HEADER}"),
            rows,
        }],
        runs,
        cells: Vec::new(),
    })
}

/// Per-solver traces on shared instances plus a per-solver summary table.
pub fn run_compare(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    check_kind(spec, ExperimentKind::Compare)?;
    let id = "compare";
    let insts = (0..spec.trials)
        .into_par_iter()
        .map(|t| instance(spec, id, t, random_truth(spec, id, t, &spec.rank)?, spec.rho, spec.snrs[0]))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<Job<'_>> = insts
        .iter()
        .enumerate()
        .flat_map(|(trial, inst)| {
            spec.solvers.iter().map(move |&solver| Job {
                trial,
                solver,
                inst,
                rho: spec.rho,
                snr_db: spec.snrs[0],
                kappa2: None,
                tangent_mode: 0,
            })
        })
        .collect();
    let runs = run_jobs(spec, &jobs)?;
    let rows = runs
        .iter()
        .flat_map(|r| trace_rows(&format!("{},{}", r.trial, r.solver.name()), &r.trace, spec.timing))
        .collect();
    let summary = spec
        .solvers
        .iter()
        .map(|&s| {
            let mine: Vec<&RunSummary> = runs.iter().filter(|r| r.solver == s).collect();
            let converged = mine.iter().filter(|r| r.status == SolverStatus::Converged).count();
            let wall = if spec.timing {
                format!("{:e}", mean(mine.iter().map(|r| r.total_wall_ns() as f64)))
            } else {
                String::new()
            };
            format!(
                "{},{},{},{:e},{:e},{:e},{:e},{}",
                s.name(),
                mine.len(),
                converged,
                mean(mine.iter().map(|r| r.iterations as f64)),
                mean(mine.iter().map(|r| r.mean_flops())),
                mean(mine.iter().map(|r| r.mean_threshold_total())),
                mean(mine.iter().map(|r| r.mean_threshold_leading())),
                wall
            )
        })
        .collect();
    Ok(ExperimentOutput {
        kind: ExperimentKind::Compare,
        tables: vec![
            Table {
                name: "compare".into(),
                header: format!("trial,solver,{TRACE_CSV_HEADER}"),
                rows,
            },
            Table {
                name: "compare_summary".into(),
                header: "solver,runs,converged,mean_iters,flops_per_iter,threshold_flops_per_iter,threshold_leading_per_iter,mean_wall_ns".into(),
                rows: summary,
            },
        ],
        runs,
        cells: Vec::new(),
    })
}

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    match spec.kind {
        ExperimentKind::Complete => run_complete(spec),
        ExperimentKind::Phase => run_phase_transition(spec),
        ExperimentKind::Noise => run_noise(spec),
        ExperimentKind::Modes => run_mode_selection(spec),
        ExperimentKind::Cond => run_cond(spec),
        ExperimentKind::Compare => run_compare(spec),
    }
}
