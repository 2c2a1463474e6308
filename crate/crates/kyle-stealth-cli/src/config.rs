//! Flat `key = value` run configuration with dotted keys.
//!
//! ```text
//! # experiment I, chi = 3
//! p = 0.5
//! sigma = 1000
//! n_pop = 61729
//! hazard.family = quadratic
//! hazard.K = 5e-7
//! hazard.beta = 0.270651
//! penalty.chi = 3
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use kyle_stealth::calibration::{CalibrationStats, ConditionPair};
use kyle_stealth::model::{HazardModel, ModelParams, PenaltyFamily, PenaltyModel};
use kyle_stealth::SolverOptions;

const KNOWN_KEYS: &[&str] = &[
    "p",
    "sigma",
    "n_pop",
    "beta",
    "hazard.family",
    "hazard.K",
    "hazard.beta",
    "hazard.theta",
    "hazard.K_D",
    "hazard.theta_D",
    "hazard.y_bar",
    "penalty.chi",
    "penalty.c0",
    "penalty.K_alpha",
    "penalty.alpha",
    "penalty.alpha_prime",
    "solver.tol",
    "solver.inner_tol",
    "solver.scan_points",
    "solver.scan_lo",
    "solver.scan_hi",
    "solver.nodes",
    "converge.n_list",
    "stats.insider_volume",
    "stats.total_volume",
    "stats.volume_ratio",
    "stats.total_volume_stderr",
    "stats.episode_count",
    "stats.mu",
    "calibration.chi",
    "calibration.pair",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError(format!("{key}: cannot parse {v:?}"))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.parse_value(key)?;
        match v {
            Some(x) if !x.is_finite() => Err(ConfigError(format!("{key}: value must be finite"))),
            other => Ok(other),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| ConfigError(format!("missing required key {key}")))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.parse_value(key)
    }

    pub fn n_list(&self) -> Result<Option<Vec<u64>>> {
        self.raw("converge.n_list").map(parse_n_list).transpose()
    }

    /// Builds and validates the model parameters.
    pub fn model(&self) -> Result<ModelParams> {
        let p = self.require_f64("p")?;
        let sigma = self.require_f64("sigma")?;
        let n_pop = self.u64("n_pop")?.unwrap_or(1);
        let beta = match (self.f64("hazard.beta")?, self.f64("beta")?) {
            (Some(a), Some(b)) if a != b => {
                return Err(ConfigError(format!("hazard.beta = {a} conflicts with beta = {b}")));
            }
            (a, b) => a.or(b).unwrap_or(0.0),
        };
        let family = self.raw("hazard.family").unwrap_or("quadratic");
        let hazard = match family {
            "quadratic" => HazardModel::quadratic(self.require_f64("hazard.K")?, beta),
            "absolute" => HazardModel::absolute(self.require_f64("hazard.K")?, beta),
            "power" => HazardModel::power(self.require_f64("hazard.K")?, self.require_f64("hazard.theta")?, beta),
            "erfc" => HazardModel::erfc_detection(
                self.require_f64("hazard.K_D")?,
                self.require_f64("hazard.theta_D")?,
                self.require_f64("hazard.y_bar")?,
                sigma,
            ),
            "log" => HazardModel::log_one_plus(beta),
            other => return Err(ConfigError(format!("unknown hazard.family {other:?}"))),
        };
        let chi = self.require_f64("penalty.chi")?;
        let c0 = match self.raw("penalty.c0").unwrap_or("zero") {
            "zero" => PenaltyFamily::Zero,
            "linear" => PenaltyFamily::Linear { k_alpha: self.require_f64("penalty.K_alpha")? },
            "power" => PenaltyFamily::Power {
                k_alpha: self.require_f64("penalty.K_alpha")?,
                alpha: self.require_f64("penalty.alpha")?,
                alpha_prime: self.f64("penalty.alpha_prime")?.unwrap_or(1.0),
            },
            "piecewise_example3" => PenaltyFamily::PiecewiseExample3,
            other => return Err(ConfigError(format!("unknown penalty.c0 {other:?}"))),
        };
        ModelParams::new(p, sigma, n_pop, hazard, PenaltyModel::new(chi, c0)).map_err(|e| ConfigError(e.to_string()))
    }

    /// Solver options, with `tol` overriding `solver.tol` when given.
    pub fn solver(&self, tol: Option<f64>) -> Result<SolverOptions> {
        let mut opts = SolverOptions::default();
        if let Some(t) = tol.or(self.f64("solver.tol")?) {
            opts.tol = t;
        }
        if let Some(t) = self.f64("solver.inner_tol")? {
            opts.inner_tol = t;
        }
        if let Some(n) = self.u64("solver.scan_points")? {
            opts.scan_points = n as usize;
        }
        if let Some(x) = self.f64("solver.scan_lo")? {
            opts.scan_lo = x;
        }
        if let Some(x) = self.f64("solver.scan_hi")? {
            opts.scan_hi = x;
        }
        if let Some(n) = self.u64("solver.nodes")? {
            opts.nodes = n as usize;
        }
        if !(opts.tol > 0.0 && opts.inner_tol > 0.0) {
            return Err(ConfigError("solver tolerances must be positive".into()));
        }
        if opts.scan_points < 2 || opts.nodes < 1 || !(0.0 < opts.scan_lo && opts.scan_lo < opts.scan_hi) {
            return Err(ConfigError("solver scan window or node count is invalid".into()));
        }
        Ok(opts)
    }

    /// Calibration statistics from `stats.*` keys (plus `sigma`).
    pub fn stats(&self) -> Result<CalibrationStats> {
        let insider_volume = self.require_f64("stats.insider_volume")?;
        Ok(CalibrationStats {
            insider_volume,
            total_volume: self.f64("stats.total_volume")?,
            volume_ratio: self.f64("stats.volume_ratio")?,
            total_volume_stderr: self.f64("stats.total_volume_stderr")?,
            episode_count: self.u64("stats.episode_count")?,
            sigma: self.require_f64("sigma")?,
            mu: self.f64("stats.mu")?,
        })
    }

    pub fn calibration_chis(&self) -> Result<Option<Vec<f64>>> {
        self.raw("calibration.chi").map(parse_f64_list).transpose()
    }

    pub fn calibration_pair(&self) -> Result<Option<ConditionPair>> {
        self.raw("calibration.pair").map(parse_pair).transpose()
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError(format!("line {}: unknown key {key:?}", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError(format!("line {}: duplicate key {key:?}", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }
}

pub fn parse_n_list(s: &str) -> Result<Vec<u64>> {
    let ns = s
        .split(',')
        .map(|t| {
            let t = t.trim();
            // accept 1e6-style shorthand as long as it is an exact integer
            t.parse::<u64>().ok().or_else(|| {
                t.parse::<f64>().ok().filter(|x| *x >= 1.0 && x.fract() == 0.0 && *x < 1.8e19).map(|x| x as u64)
            })
        })
        .collect::<Option<Vec<u64>>>()
        .ok_or_else(|| ConfigError(format!("cannot parse N list {s:?}")))?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(ConfigError("N list must contain positive integers".into()));
    }
    Ok(ns)
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| ConfigError(format!("cannot parse number {t:?}"))))
        .collect()
}

pub fn parse_pair(s: &str) -> Result<ConditionPair> {
    ConditionPair::parse(s.trim()).ok_or_else(|| ConfigError(format!("unknown condition pair {s:?}")))
}
