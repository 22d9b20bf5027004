//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` are comments. Lists are comma separated. Mode
//! numbers (`tangent_modes`) are 1-based. Recognized keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `kind` | must match the subcommand if given | |
//! | `dims` | tensor shape | `20,20,20` |
//! | `rank` | multilinear rank | `2,2,2` |
//! | `ranks` | uniform ranks of the phase grid | `1,2,3` |
//! | `rho` | sampling ratio | `0.4` |
//! | `rhos` | sampling ratios of the phase grid | `0.1,0.2,0.3,0.4,0.5` |
//! | `snr` | noise levels in dB (`inf` for none) | `60,80,100` for `noise`, `inf` otherwise |
//! | `kappas` | mode-2 condition numbers | `1,5,10` |
//! | `tangent_modes` | SM-QRGD tangent modes | `1,2,3` |
//! | `solvers` | `smqrgd`, `sempiht`, `tiht-ciht`, `tiht-niht`, `rgd` | per kind |
//! | `step` | `normalized` or a positive constant | `1` for `noise`, else `normalized` |
//! | `trials` | trials per grid cell | `10` |
//! | `seed` | master seed | `0` |
//! | `tol` | relative-error tolerance | `1e-5` |
//! | `max_iters` | iteration cap | `100` |
//! | `monitors` | record tangent and distance monitors | `false` |
//! | `timing` | write wall-clock columns | `false` |
//! | `output` | output directory | `.` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::solvers::StepRule;
use crate::tensor::MultilinearRank;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Complete,
    Phase,
    Noise,
    Modes,
    Cond,
    Compare,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        Self::Complete,
        Self::Phase,
        Self::Noise,
        Self::Modes,
        Self::Cond,
        Self::Compare,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Complete => "complete",
            Self::Phase => "phase",
            Self::Noise => "noise",
            Self::Modes => "modes",
            Self::Cond => "cond",
            Self::Compare => "compare",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    SmQrgd,
    SeMpiht,
    TihtCiht,
    TihtNiht,
    Rgd,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        Self::SmQrgd,
        Self::SeMpiht,
        Self::TihtCiht,
        Self::TihtNiht,
        Self::Rgd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::SmQrgd => "smqrgd",
            Self::SeMpiht => "sempiht",
            Self::TihtCiht => "tiht-ciht",
            Self::TihtNiht => "tiht-niht",
            Self::Rgd => "rgd",
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub dims: Vec<usize>,
    pub rank: MultilinearRank,
    pub ranks: Vec<usize>,
    pub rho: f64,
    pub rhos: Vec<f64>,
    pub snrs: Vec<f64>,
    pub kappas: Vec<f64>,
    /// 0-based.
    pub tangent_modes: Vec<usize>,
    pub solvers: Vec<SolverKind>,
    pub step: StepRule,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
    pub monitors: bool,
    pub timing: bool,
    pub output: Option<PathBuf>,
}

const KEYS: [&str; 18] = [
    "kind", "dims", "rank", "ranks", "rho", "rhos", "snr", "kappas", "tangent_modes", "solvers",
    "step", "trials", "seed", "tol", "max_iters", "monitors", "timing", "output",
];

fn parse_scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items = v
        .split(',')
        .map(|t| parse_scalar(key, t))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v.trim() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        t => parse_scalar(key, t),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        t => Err(Error::Config(format!("{key}: expected true or false, got {t:?}"))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentSpec {
    /// Defaults for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let noise = kind == ExperimentKind::Noise;
        Self {
            kind,
            dims: vec![20, 20, 20],
            rank: MultilinearRank::uniform(3, 2),
            ranks: vec![1, 2, 3],
            rho: 0.4,
            rhos: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            snrs: if noise { vec![60.0, 80.0, 100.0] } else { vec![f64::INFINITY] },
            kappas: vec![1.0, 5.0, 10.0],
            tangent_modes: vec![0, 1, 2],
            solvers: match kind {
                ExperimentKind::Noise => vec![SolverKind::SmQrgd, SolverKind::SeMpiht],
                ExperimentKind::Compare => vec![SolverKind::SmQrgd, SolverKind::SeMpiht, SolverKind::Rgd],
                _ => vec![SolverKind::SmQrgd],
            },
            step: if noise { StepRule::Constant(1.0) } else { StepRule::Normalized },
            trials: 10,
            seed: 0,
            tol: 1e-5,
            max_iters: 100,
            monitors: false,
            timing: false,
            output: None,
        }
    }

    /// Parses a config for the experiment `kind`.
    pub fn parse(kind: ExperimentKind, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key {k:?}", no + 1)));
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("duplicate key {k:?}")));
            }
        }
        let mut spec = Self::defaults(kind);
        for (k, v) in &entries {
            let v = v.as_str();
            match k.as_str() {
                "kind" => {
                    if v.parse::<ExperimentKind>()? != kind {
                        return Err(Error::Config(format!(
                            "config is for {v:?}, not {:?}",
                            kind.name()
                        )));
                    }
                }
                "dims" => spec.dims = parse_list(k, v)?,
                "rank" => spec.rank = MultilinearRank::new(parse_list(k, v)?),
                "ranks" => spec.ranks = parse_list(k, v)?,
                "rho" => spec.rho = parse_scalar(k, v)?,
                "rhos" => spec.rhos = parse_list(k, v)?,
                "snr" => {
                    spec.snrs = v.split(',').map(|t| parse_f64(k, t)).collect::<Result<_>>()?
                }
                "kappas" => spec.kappas = parse_list(k, v)?,
                "tangent_modes" => {
                    let modes: Vec<usize> = parse_list(k, v)?;
                    if modes.contains(&0) {
                        return Err(Error::Config("tangent_modes are 1-based".into()));
                    }
                    spec.tangent_modes = modes.into_iter().map(|m| m - 1).collect();
                }
                "solvers" => {
                    spec.solvers = v.split(',').map(|t| t.trim().parse()).collect::<Result<_>>()?
                }
                "step" => {
                    spec.step = if v == "normalized" {
                        StepRule::Normalized
                    } else {
                        StepRule::Constant(parse_scalar(k, v)?)
                    }
                }
                "trials" => spec.trials = parse_scalar(k, v)?,
                "seed" => spec.seed = parse_scalar(k, v)?,
                "tol" => spec.tol = parse_scalar(k, v)?,
                "max_iters" => spec.max_iters = parse_scalar(k, v)?,
                "monitors" => spec.monitors = parse_bool(k, v)?,
                "timing" => spec.timing = parse_bool(k, v)?,
                "output" => spec.output = Some(PathBuf::from(v)),
                _ => unreachable!("keys filtered above"),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let d = self.dims.len();
        if d < 2 || self.dims.contains(&0) {
            return bad(format!("dims {:?} must have at least two positive entries", self.dims));
        }
        if self.rank.len() != d {
            return bad(format!("rank {:?} does not match dims {:?}", self.rank.as_slice(), self.dims));
        }
        self.rank.check_against(&self.dims).map_err(|e| Error::Config(e.to_string()))?;
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return bad("tol must be nonnegative".into());
        }
        if self.solvers.is_empty() {
            return bad("no solvers".into());
        }
        for &rho in std::iter::once(&self.rho).chain(&self.rhos) {
            if !(rho > 0.0 && rho <= 1.0) {
                return bad(format!("sampling ratio {rho} not in (0, 1]"));
            }
        }
        let min_dim = *self.dims.iter().min().expect("nonempty");
        if self.ranks.iter().any(|&r| r == 0 || r > min_dim) {
            return bad(format!("phase ranks {:?} must lie in 1..={min_dim}", self.ranks));
        }
        if self.snrs.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return bad("snr must be a number or inf".into());
        }
        if self.kappas.iter().any(|&k| !(k >= 1.0 && k.is_finite())) {
            return bad("kappas must be finite and at least 1".into());
        }
        if self.tangent_modes.is_empty() || self.tangent_modes.iter().any(|&m| m >= d) {
            return bad(format!("tangent_modes must lie in 1..={d}"));
        }
        if let StepRule::Constant(a) = self.step {
            if !(a > 0.0 && a.is_finite()) {
                return bad(format!("step {a} must be positive"));
            }
        }
        if self.kind == ExperimentKind::Cond && (d != 3 || self.dims.iter().any(|&n| n != self.dims[0])) {
            return bad("cond needs cubic order-3 dims".into());
        }
        if self.kind == ExperimentKind::Cond && self.rank.iter().any(|&r| r != self.rank[0]) {
            return bad("cond needs a uniform rank".into());
        }
        Ok(())
    }

    /// Normalized `key = value` listing of every field except `output`.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let step = match self.step {
            StepRule::Normalized => "normalized".to_string(),
            StepRule::Constant(a) => format!("{a:e}"),
        };
        let floats = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        let modes: Vec<usize> = self.tangent_modes.iter().map(|m| m + 1).collect();
        let solvers: Vec<&str> = self.solvers.iter().map(SolverKind::name).collect();
        let _ = writeln!(s, "kind = {}", self.kind.name());
        let _ = writeln!(s, "dims = {}", join(&self.dims));
        let _ = writeln!(s, "rank = {}", join(self.rank.as_slice()));
        let _ = writeln!(s, "ranks = {}", join(&self.ranks));
        let _ = writeln!(s, "rho = {:e}", self.rho);
        let _ = writeln!(s, "rhos = {}", floats(&self.rhos));
        let _ = writeln!(s, "snr = {}", floats(&self.snrs));
        let _ = writeln!(s, "kappas = {}", floats(&self.kappas));
        let _ = writeln!(s, "tangent_modes = {}", join(&modes));
        let _ = writeln!(s, "solvers = {}", solvers.join(","));
        let _ = writeln!(s, "step = {step}");
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "tol = {:e}", self.tol);
        let _ = writeln!(s, "max_iters = {}", self.max_iters);
        let _ = writeln!(s, "monitors = {}", self.monitors);
        let _ = writeln!(s, "timing = {}", self.timing);
        s
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
