//! Method-of-moments calibration of `(N, γ)` from insider-volume statistics,
//! and replication of the published calibration tables.

use crate::equilibrium::{solve_finite, solve_limiting, SolverOptions};
use crate::error::{Error, Result};
use crate::market::PriceParams;
use crate::model::{HazardModel, ModelParams, PenaltyModel, Strategy};
use crate::numerics::{erfc, lambert_w0, linear_grid};
use crate::par::{self, Execution};

/// Summary statistics of observed insider trading episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationStats {
    /// average (or median) insider share volume 𝔦
    pub insider_volume: f64,
    /// average total share volume 𝔳
    pub total_volume: Option<f64>,
    /// median insider-to-total volume ratio 𝔯
    pub volume_ratio: Option<f64>,
    pub total_volume_stderr: Option<f64>,
    pub episode_count: Option<u64>,
    /// per-trader order standard deviation σ
    pub sigma: f64,
    /// per-trader mean absolute order μ; estimated when absent
    pub mu: Option<f64>,
}

impl CalibrationStats {
    /// Prosecuted-episode statistics with total volume and its standard error.
    pub fn experiment_one() -> Self {
        Self {
            insider_volume: 9819.0,
            total_volume: Some(113_909.0),
            volume_ratio: Some(0.113),
            total_volume_stderr: Some(10_246.0),
            episode_count: Some(588),
            sigma: 1000.0,
            mu: None,
        }
    }

    /// Median insider volume and volume ratio only; μ carried over from the
    /// first experiment.
    pub fn experiment_two() -> Self {
        Self {
            insider_volume: 4900.0,
            total_volume: None,
            volume_ratio: Some(0.026),
            total_volume_stderr: None,
            episode_count: None,
            sigma: 1000.0,
            mu: Some(1.68625),
        }
    }
}

/// Which two moment conditions are matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionPair {
    /// insider volume and total volume
    InsiderTotal,
    /// insider volume and volume ratio
    InsiderRatio,
    /// total volume and volume ratio
    TotalRatio,
}

impl ConditionPair {
    pub const ALL: [ConditionPair; 3] = [Self::InsiderTotal, Self::InsiderRatio, Self::TotalRatio];

    pub fn label(&self) -> &'static str {
        match self {
            Self::InsiderTotal => "insider+total",
            Self::InsiderRatio => "insider+ratio",
            Self::TotalRatio => "total+ratio",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "insider+total" | "e1" => Some(Self::InsiderTotal),
            "insider+ratio" | "e2" => Some(Self::InsiderRatio),
            "total+ratio" | "e3" => Some(Self::TotalRatio),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub n_hat: f64,
    pub n_hat_rounded: u64,
    pub gamma_hat: f64,
    pub mu_hat: f64,
    pub conditions_used: ConditionPair,
    /// `1 − e^{−𝔞²/2}` for the quadratic hazard `z²/(2σ²)`
    pub implied_prosecution: f64,
    pub warnings: Vec<String>,
}

/// `𝔞 = √(1 − 2 W₀(√e χ₀ / (2χ)))`: the limiting order in units of σ.
pub fn limit_factor(chi: f64) -> Result<f64> {
    let w = lambert_w0(0.5f64.exp() * (chi - 1.0) / (2.0 * chi))?;
    Ok((1.0 - 2.0 * w).sqrt())
}

fn prosecution_weights(params: &ModelParams, strat: &Strategy) -> [f64; 2] {
    let p = params.p;
    let pr = |z: f64| -(-params.hazard.lambda_n(params.n_pop, z)).exp_m1();
    [(1.0 - p) * pr(strat.z0), p * pr(strat.z1)]
}

/// Unconditional prosecution probability `Σ p(v) (1 − e^{−λ_N(Z(v))})`.
pub fn prosecution_marginal(params: &ModelParams, strat: &Strategy) -> f64 {
    let w = prosecution_weights(params, strat);
    w[0] + w[1]
}

/// `E[|Z(V)| | prosecuted]`
pub fn conditional_insider_volume(params: &ModelParams, strat: &Strategy) -> Result<f64> {
    let w = prosecution_weights(params, strat);
    let total = w[0] + w[1];
    if !(total > 0.0) {
        return Err(Error::Domain("prosecution probability is zero on both branches".into()));
    }
    Ok((w[0] * strat.z0.abs() + w[1] * strat.z1.abs()) / total)
}

/// `N μ + E[|Z(V)| | prosecuted]`
pub fn conditional_total_volume(params: &ModelParams, strat: &Strategy, mu: f64) -> Result<f64> {
    if !(mu >= 0.0 && mu < params.sigma) {
        return Err(Error::InvalidParameter(format!("need 0 <= mu < sigma, got mu = {mu}")));
    }
    Ok(params.n_pop as f64 * mu + conditional_insider_volume(params, strat)?)
}

/// `P{(X_N + |Z|)/|Z| > x | prosecuted}` with `X_N ~ N(Nμ, N(σ² − μ²))`.
pub fn ratio_tail(params: &ModelParams, strat: &Strategy, mu: f64, x: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return Err(Error::InvalidParameter(format!("ratio threshold must be >= 1, got {x}")));
    }
    let w = prosecution_weights(params, strat);
    let total = w[0] + w[1];
    if !(total > 0.0) {
        return Err(Error::Domain("prosecution probability is zero on both branches".into()));
    }
    let n = params.n_pop as f64;
    let denom = (2.0 * n * (params.sigma * params.sigma - mu * mu)).sqrt();
    let tail = |z: f64| {
        if x.is_infinite() {
            0.0
        } else {
            0.5 * erfc((z.abs() * (x - 1.0) - n * mu) / denom)
        }
    };
    Ok((w[0] * tail(strat.z0) + w[1] * tail(strat.z1)) / total)
}

/// μ̂ from `N(σ² − μ²) = s²` and `N μ = v − i`.
pub fn estimate_mu(i: f64, v: f64, sigma: f64, s: f64) -> Result<f64> {
    if !(v > i) {
        return Err(Error::Domain(format!("total volume {v} must exceed insider volume {i}")));
    }
    if !(s > 0.0) {
        return Err(Error::Domain("dispersion must be positive".into()));
    }
    let d = v - i;
    let s2 = s * s;
    // rationalised form of (√(s⁴ + 4σ²d²) − s²)/(2d); no cancellation for small d
    Ok(2.0 * sigma * sigma * d / ((s2 * s2 + 4.0 * sigma * sigma * d * d).sqrt() + s2))
}

/// Standard deviation from the standard error of a mean over `episodes`.
pub fn std_from_stderr(stderr: f64, episodes: u64) -> f64 {
    stderr * (episodes as f64).sqrt()
}

/// Closed-form `(N̂, γ̂)` for the chosen pair of moment conditions.
pub fn calibrate(stats: &CalibrationStats, chi: f64, conditions: ConditionPair) -> Result<CalibrationResult> {
    if !(chi >= 1.0) {
        return Err(Error::InvalidParameter("chi must be >= 1".into()));
    }
    let sigma = stats.sigma;
    let i = stats.insider_volume;
    let mut warnings = Vec::new();
    let mu = match stats.mu {
        Some(m) => m,
        None => {
            let v = stats.total_volume.ok_or(Error::MissingStatistic("total_volume"))?;
            let se = stats.total_volume_stderr.ok_or(Error::MissingStatistic("total_volume_stderr"))?;
            let k = stats.episode_count.ok_or(Error::MissingStatistic("episode_count"))?;
            estimate_mu(i, v, sigma, std_from_stderr(se, k))?
        }
    };
    if !(mu > 0.0 && mu < sigma) {
        warnings.push(format!("mu = {mu} outside (0, sigma)"));
    }
    let a = limit_factor(chi)?;
    let (n_hat, target) = match conditions {
        ConditionPair::InsiderTotal => {
            let v = stats.total_volume.ok_or(Error::MissingStatistic("total_volume"))?;
            ((v - i) / mu, i)
        }
        ConditionPair::InsiderRatio => {
            let r = stats.volume_ratio.ok_or(Error::MissingStatistic("volume_ratio"))?;
            (i * (1.0 - r) / (mu * r), i)
        }
        ConditionPair::TotalRatio => {
            let v = stats.total_volume.ok_or(Error::MissingStatistic("total_volume"))?;
            let r = stats.volume_ratio.ok_or(Error::MissingStatistic("volume_ratio"))?;
            (v * (1.0 - r) / mu, v * r)
        }
    };
    if !(n_hat > 1.0) {
        return Err(Error::Domain(format!("calibrated population {n_hat} is not above 1")));
    }
    let gamma_hat = (target / (sigma * a)).ln() / n_hat.ln();
    if !(gamma_hat > 0.0 && gamma_hat < 0.5) {
        warnings.push(format!("stealth index {gamma_hat} outside (0, 1/2)"));
    }
    Ok(CalibrationResult {
        n_hat,
        n_hat_rounded: n_hat.round() as u64,
        gamma_hat,
        mu_hat: mu,
        conditions_used: conditions,
        implied_prosecution: -(-0.5 * a * a).exp_m1(),
        warnings,
    })
}

/// Market instance at a calibrated point (`p = 1/2`, `λ = z²/(2σ²)`).
pub fn calibrated_params(sigma: f64, n_pop: u64, gamma: f64, chi: f64) -> ModelParams {
    ModelParams {
        p: 0.5,
        sigma,
        n_pop,
        hazard: HazardModel::quadratic(1.0 / (2.0 * sigma * sigma), gamma),
        penalty: PenaltyModel::civil(chi),
    }
}

/// A published number and what we computed for it.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenCheck {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
}

impl GoldenCheck {
    fn new(name: impl Into<String>, expected: f64, actual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), expected, actual, tolerance }
    }

    pub fn passed(&self) -> bool {
        (self.actual - self.expected).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCell {
    pub chi: f64,
    pub result: CalibrationResult,
}

/// Finite and limiting strategies at one calibrated point.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyComparison {
    pub label: String,
    pub n_pop: u64,
    pub gamma: f64,
    pub finite: Strategy,
    /// `N^γ Z̃`
    pub limiting: Strategy,
    pub prosecution_finite: f64,
    pub prosecution_limiting: f64,
    pub price_params: PriceParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub name: String,
    pub p_const: f64,
    /// `(y, P*_N(y))`
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationReport {
    pub table2: Vec<(ConditionPair, CalibrationCell)>,
    pub table3: Vec<StrategyComparison>,
    pub table5: Vec<CalibrationCell>,
    pub table6: Option<StrategyComparison>,
    pub figures: Vec<FigureData>,
    pub checks: Vec<GoldenCheck>,
    pub errors: Vec<String>,
}

impl ReplicationReport {
    pub fn all_passed(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().all(|c| c.passed())
    }
}

const CHIS: [f64; 3] = [1.0, 2.0, 3.0];

/// Reference Table 2 `(N̂, γ̂)` by condition pair and χ.
const TABLE2: [(ConditionPair, [(u64, f64); 3]); 3] = [
    (ConditionPair::InsiderTotal, [(61729, 0.207091), (61729, 0.249565), (61729, 0.270651)]),
    (ConditionPair::InsiderRatio, [(45708, 0.21289), (45708, 0.256553), (45708, 0.27823)]),
    (ConditionPair::TotalRatio, [(59918, 0.23226), (59918, 0.274849), (59918, 0.295992)]),
];
const TABLE3_FINITE: [f64; 3] = [9813.0, 9811.0, 12862.0];
const TABLE3_LIMIT: [f64; 3] = [9819.0, 9819.0, 12872.0];
const TABLE5: [(u64, f64); 3] = [(108858, 0.137029), (108858, 0.177425), (108858, 0.19748)];
const TABLE6_STRATEGY: f64 = 4900.0;
const TABLE6_PROSECUTION: (f64, f64) = (0.11572, 0.11576);

/// Tolerances used for every comparison against the published tables.
pub mod tolerance {
    pub const GAMMA: f64 = 1e-4;
    pub const SHARES: f64 = 3.0;
    pub const PROSECUTION: f64 = 0.005e-2;
}

fn compare(params: &ModelParams, label: String, opts: &SolverOptions) -> Result<StrategyComparison> {
    let sol = solve_finite(params, opts)?;
    let lim = solve_limiting(params)?;
    let ng = (params.n_pop as f64).powf(params.gamma());
    let limiting = lim.strategy_scaled.scaled(ng);
    Ok(StrategyComparison {
        label,
        n_pop: params.n_pop,
        gamma: params.gamma(),
        finite: sol.strategy,
        limiting,
        prosecution_finite: prosecution_marginal(params, &sol.strategy),
        prosecution_limiting: prosecution_marginal(params, &limiting),
        price_params: sol.price_params,
    })
}

fn figure(name: &str, params: &ModelParams, cmp: &StrategyComparison) -> FigureData {
    let half = 3.0 * (params.n_pop as f64).sqrt() * params.sigma;
    let points = linear_grid(-half, half, 201).into_iter().map(|y| (y, cmp.price_params.eval(y))).collect();
    FigureData { name: name.to_string(), p_const: params.p, points }
}

/// Recomputes Tables 2, 3, 5 and 6 and the price-curve data behind the two
/// figures, comparing each number with its published value.
pub fn replicate_tables(opts: &SolverOptions) -> ReplicationReport {
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    let one = CalibrationStats::experiment_one();
    let two = CalibrationStats::experiment_two();

    let mut table2 = Vec::new();
    for (pair, expected) in TABLE2 {
        for (chi, (n_exp, g_exp)) in CHIS.iter().zip(expected) {
            match calibrate(&one, *chi, pair) {
                Ok(r) => {
                    let tag = format!("table2 {} chi={chi}", pair.label());
                    checks.push(GoldenCheck::new(format!("{tag} N"), n_exp as f64, r.n_hat_rounded as f64, 0.0));
                    checks.push(GoldenCheck::new(format!("{tag} gamma"), g_exp, r.gamma_hat, tolerance::GAMMA));
                    table2.push((pair, CalibrationCell { chi: *chi, result: r }));
                }
                Err(e) => errors.push(format!("table2 {} chi={chi}: {e}", pair.label())),
            }
        }
    }

    let mut table5 = Vec::new();
    for (chi, (n_exp, g_exp)) in CHIS.iter().zip(TABLE5) {
        match calibrate(&two, *chi, ConditionPair::InsiderRatio) {
            Ok(r) => {
                let tag = format!("table5 chi={chi}");
                checks.push(GoldenCheck::new(format!("{tag} N"), n_exp as f64, r.n_hat_rounded as f64, 0.0));
                checks.push(GoldenCheck::new(format!("{tag} gamma"), g_exp, r.gamma_hat, tolerance::GAMMA));
                table5.push(CalibrationCell { chi: *chi, result: r });
            }
            Err(e) => errors.push(format!("table5 chi={chi}: {e}")),
        }
    }

    // finite-N solves at the χ = 3 points, one per cell, in parallel
    let mut jobs: Vec<(String, ModelParams)> = table2
        .iter()
        .filter(|(_, c)| c.chi == 3.0)
        .map(|(pair, c)| {
            (format!("table3 {}", pair.label()), calibrated_params(one.sigma, c.result.n_hat_rounded, c.result.gamma_hat, 3.0))
        })
        .collect();
    if let Some(c) = table5.iter().find(|c| c.chi == 3.0) {
        jobs.push(("table6".into(), calibrated_params(two.sigma, c.result.n_hat_rounded, c.result.gamma_hat, 3.0)));
    }
    let inner = SolverOptions { execution: Execution::Sequential, ..opts.clone() };
    let solved = par::map(opts.execution, &jobs, |(label, params)| compare(params, label.clone(), &inner));

    let mut table3 = Vec::new();
    let mut table6 = None;
    let mut figures = Vec::new();
    for ((label, params), res) in jobs.iter().zip(solved) {
        let cmp = match res {
            Ok(c) => c,
            Err(e) => {
                errors.push(format!("{label}: {e}"));
                continue;
            }
        };
        if label == "table6" {
            checks.push(GoldenCheck::new("table6 finite z0", -TABLE6_STRATEGY, cmp.finite.z0, tolerance::SHARES));
            checks.push(GoldenCheck::new("table6 finite z1", TABLE6_STRATEGY, cmp.finite.z1, tolerance::SHARES));
            checks.push(GoldenCheck::new("table6 limiting z1", TABLE6_STRATEGY, cmp.limiting.z1, tolerance::SHARES));
            checks.push(GoldenCheck::new(
                "table6 finite prosecution",
                TABLE6_PROSECUTION.0,
                cmp.prosecution_finite,
                tolerance::PROSECUTION,
            ));
            checks.push(GoldenCheck::new(
                "table6 limiting prosecution",
                TABLE6_PROSECUTION.1,
                cmp.prosecution_limiting,
                tolerance::PROSECUTION,
            ));
            figures.push(figure("figure2", params, &cmp));
            table6 = Some(cmp);
        } else {
            let k = table3.len();
            checks.push(GoldenCheck::new(format!("{label} finite z0"), -TABLE3_FINITE[k], cmp.finite.z0, tolerance::SHARES));
            checks.push(GoldenCheck::new(format!("{label} finite z1"), TABLE3_FINITE[k], cmp.finite.z1, tolerance::SHARES));
            checks.push(GoldenCheck::new(format!("{label} limiting z1"), TABLE3_LIMIT[k], cmp.limiting.z1, tolerance::SHARES));
            if k == 0 {
                figures.push(figure("figure1", params, &cmp));
            }
            table3.push(cmp);
        }
    }

    ReplicationReport { table2, table3, table5, table6, figures, checks, errors }
}
