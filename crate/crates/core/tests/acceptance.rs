//! Acceptance criteria 1 to 12. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Tolerances are pinned here, not configurable.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use tucker_recover::harness::{
    self, run_complete, run_mode_selection, run_noise, run_phase_transition, synth_tensor, ExperimentKind,
    ExperimentSpec, SolverKind, SyntheticInstance,
};
use tucker_recover::hosvd::{default_order, h_mode1, mode1_first_order, st_hosvd, t_hosvd, tail_energies};
use tucker_recover::linalg::singular_values;
use tucker_recover::measurement::NoiseSpec;
use tucker_recover::rng::{rng_from_seed, Prng};
use tucker_recover::solvers::{gamma_constants, AppendixMonitor, ConvergenceConstants};
use tucker_recover::solvers::{sm_qrgd, MonitorFlags, Problem, SolverConfig};
use tucker_recover::tangent::{fused_retract, lemma31_check, project_dense};
use tucker_recover::{DenseTensor, MultilinearRank, Result};

const SLACK: f64 = 1e-10;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn gaussian(dims: &[usize], rng: &mut Prng) -> DenseTensor {
    DenseTensor::from_fn(dims, |_| StandardNormal.sample(&mut *rng)).unwrap()
}

fn random_dims(d: usize, lo: usize, hi: usize, rng: &mut Prng) -> Vec<usize> {
    (0..d).map(|_| rng.random_range(lo..=hi)).collect()
}

fn random_rank(dims: &[usize], max: usize, rng: &mut Prng) -> MultilinearRank {
    MultilinearRank::new(dims.iter().map(|&n| rng.random_range(1..=n.min(max))).collect())
}

fn instance(dims: &[usize], rank: &MultilinearRank, rho: f64, seed: u64) -> SyntheticInstance {
    let truth = synth_tensor(dims, rank, seed).unwrap();
    SyntheticInstance::completion(truth, rho, seed ^ 0x5eed, NoiseSpec::noiseless()).unwrap()
}

fn spec(kind: ExperimentKind, text: &str) -> ExperimentSpec {
    ExperimentSpec::parse(kind, text).expect("acceptance config parses")
}

fn c1_quasi_projection() -> Result<Outcome> {
    let mut rng = rng_from_seed(101);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let d = rng.random_range(3..=4);
        let dims = random_dims(d, 6, 12, &mut rng);
        let r = random_rank(&dims, 12, &mut rng);
        let z = gaussian(&dims, &mut rng);
        let bound = (d as f64).sqrt() * tail_energies(&z, &r)?.max();
        for est in [t_hosvd(&z, &r)?, st_hosvd(&z, &r, &default_order(&r))?] {
            let err = z.distance(&est.compose())?;
            worst = worst.max(err - bound);
        }
    }
    Ok(Outcome::new(
        worst < SLACK,
        format!("max(err - sqrt(d)*max tau) = {worst:.3e} over 200 tensors x 2 methods, need < {SLACK:e}"),
    ))
}

fn c2_tangent_membership() -> Result<Outcome> {
    let mut rng = rng_from_seed(202);
    let mut worst_pairs = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(3..=4);
        let dims = random_dims(d, 5, 10, &mut rng);
        let r = random_rank(&dims, 10, &mut rng);
        let w = gaussian(&dims, &mut rng);
        let x = st_hosvd(&w, &r, &mode1_first_order(&r))?;
        let (_, basis) = h_mode1(&w, r[0])?;
        worst_pairs = worst_pairs.max(lemma31_check(&x, &basis)?);
    }
    let mut worst_iter = 0.0f64;
    let mut checked = 0;
    for seed in 0..10 {
        let inst = instance(&[12, 12, 12], &MultilinearRank::uniform(3, 2), 0.5, 2000 + seed);
        let mut cfg = SolverConfig::new(MultilinearRank::uniform(3, 2));
        cfg.monitors = MonitorFlags {
            lemma31: true,
            appendix: false,
        };
        let out = sm_qrgd(&Problem::new(&inst.op, &inst.y).with_truth(&inst.truth.dense), &cfg)?;
        for rec in &out.trace.records {
            if let Some(v) = rec.lemma31 {
                worst_iter = worst_iter.max(v);
                checked += 1;
            }
        }
    }
    Ok(Outcome::new(
        worst_pairs <= SLACK && worst_iter <= SLACK && checked > 0,
        format!("max residual {worst_pairs:.3e} on 100 pairs, {worst_iter:.3e} over {checked} solver iterates, need <= {SLACK:e}"),
    ))
}

fn c3_fused() -> Result<Outcome> {
    let mut rng = rng_from_seed(303);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let d = if i % 5 == 4 { 4 } else { 3 };
        let dims = random_dims(d, 6, if d == 3 { 16 } else { 9 }, &mut rng);
        let r = random_rank(&dims, 3, &mut rng);
        let t = synth_tensor(&dims, &r, rng.random()).unwrap().dense;
        let scale = 0.3 * t.frob_norm() / (t.len() as f64).sqrt();
        let mut w = gaussian(&dims, &mut rng);
        w.scale(scale);
        w.axpy(1.0, &t)?;
        let (_, basis) = h_mode1(&w, r[0])?;
        let mut z = gaussian(&dims, &mut rng);
        z.scale(scale);
        z.axpy(1.0, &w)?;
        let fast = fused_retract(&z, &basis, &r)?.tucker.compose();
        let reference = st_hosvd(&project_dense(&z, &basis)?, &r, &mode1_first_order(&r))?.compose();
        worst = worst.max(fast.distance(&reference)? / reference.frob_norm());
    }
    Ok(Outcome::new(
        worst <= SLACK,
        format!("max relative difference {worst:.3e} on 100 instances, need <= {SLACK:e}"),
    ))
}

fn c4_complexity() -> Result<Outcome> {
    let (n, r) = (40usize, 5usize);
    let rank = MultilinearRank::uniform(3, r);
    let inst = instance(&[n, n, n], &rank, 0.3, 404);
    let mut cfg = SolverConfig::new(rank);
    cfg.max_iters = 5;
    cfg.tol_rel_err = 0.0;
    let out = sm_qrgd(&Problem::new(&inst.op, &inst.y).with_truth(&inst.truth.dense), &cfg)?;
    let unit = (n * n * n * r) as f64;
    let (mut th, mut st) = (Vec::new(), Vec::new());
    for rec in out.trace.records.iter().skip(1) {
        th.push(rec.threshold_flops.leading as f64 / unit);
        st.push((rec.flops.leading - rec.threshold_flops.leading) as f64 / unit);
    }
    let inside = |v: &[f64], lo: f64, hi: f64| !v.is_empty() && v.iter().all(|&x| (lo..=hi).contains(&x));
    Ok(Outcome::new(
        inside(&th, 2.5, 3.5) && inside(&st, 3.5, 4.5),
        format!(
            "thresholding {:.3} n^d r in [2.5, 3.5], step normalization {:.3} n^d r in [3.5, 4.5] ({} iterations)",
            th.iter().copied().fold(f64::NAN, f64::max),
            st.iter().copied().fold(f64::NAN, f64::max),
            th.len()
        ),
    ))
}

fn c5_tangent_distance() -> Result<Outcome> {
    let mut rng = rng_from_seed(505);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..200 {
        let dims = random_dims(2, 8, 30, &mut rng);
        let r = rng.random_range(1..=4);
        let rank = MultilinearRank::uniform(2, r);
        let x = synth_tensor(&dims, &rank, rng.random()).unwrap().dense;
        let eps = 10f64.powi(-(i % 4) - 1) * x.frob_norm() / (x.len() as f64).sqrt();
        let mut noisy = gaussian(&dims, &mut rng);
        noisy.scale(eps);
        noisy.axpy(1.0, &x)?;
        let (xhat, basis) = h_mode1(&noisy, r)?;
        let resid = x.distance(&project_dense(&x, &basis)?)?;
        let sigma_r = singular_values(x.mode1_view())[r - 1];
        let bound = x.distance(&xhat)?.powi(2) / sigma_r;
        worst = worst.max(resid - bound);
    }
    Ok(Outcome::new(
        worst <= SLACK,
        format!("max(residual - bound) = {worst:.3e} on 200 pairs, need <= {SLACK:e}"),
    ))
}

fn c6_distance_ratios() -> Result<Outcome> {
    let mut worst = [0.0f64; 3];
    let (mut checked, mut ok) = (0usize, true);
    for seed in 0..20 {
        let inst = instance(&[16, 16, 16], &MultilinearRank::uniform(3, 2), 0.4, 6000 + seed);
        let mut cfg = SolverConfig::new(MultilinearRank::uniform(3, 2));
        cfg.monitors = MonitorFlags {
            lemma31: false,
            appendix: true,
        };
        let out = sm_qrgd(&Problem::new(&inst.op, &inst.y).with_truth(&inst.truth.dense), &cfg)?;
        for m in out.trace.records.iter().filter_map(|r| r.appendix.as_ref()) {
            checked += 1;
            ok &= m.within_bounds(3, 0.0);
            worst[0] = worst[0].max(m.x_ratio);
            worst[1] = worst[1].max(m.xhat_ratio);
            worst[2] = worst[2].max(m.gap_ratio);
        }
    }
    let b = AppendixMonitor::bounds(3);
    Ok(Outcome::new(
        ok && checked > 0,
        format!(
            "max ratios ({:.3}, {:.3}, {:.3}) vs bounds ({:.3}, {:.1}, {:.3}) over {checked} iterations",
            worst[0], worst[1], worst[2], b[0], b[1], b[2]
        ),
    ))
}

fn c7_recovery() -> Result<Outcome> {
    let s = spec(
        ExperimentKind::Complete,
        "dims = 20,20,20\nrank = 2,2,2\nrho = 0.4\nsolvers = smqrgd,sempiht,tiht-niht,rgd\n\
         trials = 100\nseed = 707\ntol = 1e-5\nmax_iters = 100",
    );
    let out = run_complete(&s)?;
    let needed = [(SolverKind::SmQrgd, 95), (SolverKind::SeMpiht, 90), (SolverKind::TihtNiht, 90), (SolverKind::Rgd, 90)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (solver, need) in needed {
        let wins = out
            .runs
            .iter()
            .filter(|r| r.solver == solver && r.final_rel_err <= 1e-5 && r.iterations <= 100)
            .count();
        pass &= wins >= need;
        parts.push(format!("{} {wins}/100 (need {need})", solver.name()));
    }
    Ok(Outcome::new(pass, parts.join(", ")))
}

fn c8_phase() -> Result<Outcome> {
    let rhos = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5];
    let list = rhos.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
    let s = spec(
        ExperimentKind::Phase,
        &format!("dims = 30,30,30\nranks = 1,2,3\nrhos = {list}\ntrials = 20\nseed = 808"),
    );
    let out = run_phase_transition(&s)?;
    let mut pass = true;
    let mut thresholds = Vec::new();
    for r in [1, 2, 3] {
        let row: Vec<f64> = out.cells.iter().filter(|c| c.r == r).map(|c| c.success_rate()).collect();
        let inversions = row.windows(2).filter(|w| w[1] < w[0]).count();
        pass &= inversions <= 1;
        let at95 = rhos.iter().zip(&row).find(|(_, &s)| s >= 0.95).map(|(&rho, _)| rho);
        pass &= at95.is_some();
        thresholds.push(at95.unwrap_or(f64::INFINITY));
    }
    pass &= thresholds.windows(2).all(|w| w[0] <= w[1]);
    Ok(Outcome::new(
        pass,
        format!("rho reaching 95% success for r = 1, 2, 3: {thresholds:?}; at most one inversion per row"),
    ))
}

fn c9_noise_floor() -> Result<Outcome> {
    let s = spec(
        ExperimentKind::Noise,
        "dims = 20,20,20\nrank = 2,2,2\nrho = 0.4\nsnr = 60\nsolvers = smqrgd,sempiht\n\
         trials = 5\nseed = 909\nmax_iters = 150",
    );
    let out = run_noise(&s)?;
    let mut pass = true;
    let mut worst_ratio = 1.0f64;
    for t in 0..5 {
        let err = |k: SolverKind| {
            out.runs
                .iter()
                .find(|r| r.trial == t && r.solver == k)
                .map(|r| r.final_rel_err)
                .unwrap_or(f64::NAN)
        };
        let (a, b) = (err(SolverKind::SmQrgd), err(SolverKind::SeMpiht));
        pass &= a > 0.0 && a < 1e-2 && b > 0.0 && b < 1e-2;
        let ratio = a.max(b) / a.min(b);
        pass &= ratio <= 2.0;
        worst_ratio = worst_ratio.max(ratio);
    }
    let floor = out.runs.iter().map(|r| r.final_rel_err).fold(0.0, f64::max);
    Ok(Outcome::new(
        pass,
        format!("5 trials at 60 dB: plateaus in (0, 1e-2) (max {floor:.3e}), worst ratio {worst_ratio:.4} <= 2"),
    ))
}

fn c10_mode_selection() -> Result<Outcome> {
    let s = spec(
        ExperimentKind::Modes,
        "dims = 20,20,20\nrank = 2,4,6\nrho = 0.5\ntangent_modes = 1,3\ntrials = 10\nseed = 1010",
    );
    let out = run_mode_selection(&s)?;
    let iters = |t: usize, m: usize| {
        out.runs
            .iter()
            .find(|r| r.trial == t && r.tangent_mode == m)
            .and_then(|r| r.iters_to_tol)
            .unwrap_or(usize::MAX)
    };
    let wins = (0..10).filter(|&t| iters(t, 0) <= iters(t, 2)).count();
    let show: Vec<String> = (0..10).map(|t| format!("{}/{}", iters(t, 0), iters(t, 2))).collect();
    Ok(Outcome::new(
        wins >= 8,
        format!("mode 1 no slower than mode 3 in {wins}/10 seeds (need 8); iterations {}", show.join(" ")),
    ))
}

fn c11_gamma() -> Result<Outcome> {
    let rep = gamma_constants(&ConvergenceConstants {
        d: 3,
        r1: 1,
        kappa1: 1.0,
        ric: 0.01,
    })?;
    let (g, t) = (0.436326, 0.017539);
    Ok(Outcome::new(
        (rep.gamma1 - g).abs() <= 1e-6 && (rep.threshold1 - t).abs() <= 1e-6,
        format!("gamma1 = {:.7} (expect {g}), threshold1 = {:.7} (expect {t}), tol 1e-6", rep.gamma1, rep.threshold1),
    ))
}

fn c12_determinism() -> Result<Outcome> {
    let configs = [
        (ExperimentKind::Complete, "dims = 10,10,10\nrho = 0.5\ntrials = 3\nsolvers = smqrgd,sempiht,tiht-ciht,tiht-niht,rgd"),
        (ExperimentKind::Phase, "dims = 10,10,10\nranks = 1,2\nrhos = 0.2,0.5\ntrials = 3"),
        (ExperimentKind::Noise, "dims = 10,10,10\nrho = 0.5\nsnr = 40,inf\ntrials = 2\nmax_iters = 30"),
        (ExperimentKind::Modes, "dims = 10,10,10\nrank = 1,2,3\nrho = 0.5\ntrials = 2"),
        (ExperimentKind::Cond, "dims = 9,9,9\nrank = 3,3,3\nrho = 0.5\nkappas = 1,5\ntrials = 2"),
        (ExperimentKind::Compare, "dims = 12,12,12\nrank = 2,2,2\nrho = 0.5\ntrials = 2"),
    ];
    let render = |s: &ExperimentSpec| -> Result<Vec<String>> {
        let out = harness::run(s)?;
        Ok(out.tables.iter().map(|t| harness::render_csv(s, t)).collect())
    };
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
    let mut pass = true;
    let mut bytes = 0;
    for (kind, text) in configs {
        let s = spec(kind, text);
        let a = render(&s)?;
        let b = render(&s)?;
        let c = serial.install(|| render(&s))?;
        pass &= a == b && a == c;
        bytes += a.iter().map(String::len).sum::<usize>();
    }
    Ok(Outcome::new(
        pass,
        format!("6 experiments x 3 runs (two parallel, one single-threaded), {bytes} bytes each, byte-identical"),
    ))
}

type Check = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(&str, Check, Option<u64>); 12] = [
        ("quasi-projection of T-HOSVD and ST-HOSVD", c1_quasi_projection, Some(30)),
        ("sequential truncation stays in the tangent space", c2_tangent_membership, Some(30)),
        ("fused retraction matches the dense reference", c3_fused, Some(60)),
        ("leading-order flop counts", c4_complexity, None),
        ("tangent-space distance bound", c5_tangent_distance, Some(30)),
        ("per-iteration distance ratios", c6_distance_ratios, None),
        ("desk-scale recovery rates", c7_recovery, Some(300)),
        ("phase-transition monotonicity", c8_phase, None),
        ("noise floor agreement", c9_noise_floor, None),
        ("mode-selection ordering", c10_mode_selection, None),
        ("convergence constant formulas", c11_gamma, None),
        ("determinism of experiment output", c12_determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let took = start.elapsed();
        let slow = limit.is_some_and(|s| took > Duration::from_secs(s));
        let pass = outcome.pass && !slow;
        if !pass {
            failed += 1;
        }
        let budget = limit.map(|s| format!(", limit {s}s")).unwrap_or_default();
        println!(
            "criterion {:>2} {}: {name}: {} [{:.1}s{budget}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
