use super::{solve_finite, solve_limiting, LimitingSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::market::PriceParams;
use crate::model::{ModelParams, Strategy};
use crate::numerics::{linear_grid, loglog_slope};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: u64,
    /// `N^{−γ} Z*_N`
    pub z_scaled: Strategy,
    /// `|N^{−γ} Z*_N(v) − Z̃(v)|` for v = 0, 1
    pub abs_error: [f64; 2],
    pub bound_exponent: f64,
    /// `sup_ỹ |P*_N(√N ỹ) − p| / (1 + |ỹ|)`
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub limit: LimitingSolution,
    /// fitted log–log slopes of the strategy errors, per side
    pub fitted_slope: [f64; 2],
    pub epsilon_slope: f64,
    /// `(N, message)` for every population whose solve failed
    pub failures: Vec<(u64, String)>,
}

impl ConvergenceReport {
    pub fn epsilon_rows(&self) -> Vec<(u64, f64)> {
        self.rows.iter().map(|r| (r.n, r.epsilon)).collect()
    }
}

/// Predicted decay exponent: `2γ − 1` with civil penalties, otherwise
/// `max{2γ−1, −γ(α−1)θ', −γα'}`.
pub fn theory_exponent(params: &ModelParams) -> f64 {
    let g = params.gamma();
    let civil = 2.0 * g - 1.0;
    if params.penalty.is_civil() {
        return civil;
    }
    let a = params.penalty.alpha();
    let mut e = civil.max(-g * (a - 1.0) * params.hazard.theta_prime);
    if a > 1.0 {
        e = e.max(-g * params.penalty.alpha_prime());
    }
    e
}

/// Slope over all but the first quartile of the rows.
fn fit(ns: &[f64], ys: &[f64]) -> f64 {
    let skip = ns.len() / 4;
    loglog_slope(&ns[skip..], &ys[skip..])
}

/// Solves at every `N` (in parallel) and measures the distance to the limit.
pub fn convergence_report(params_base: &ModelParams, n_list: &[u64], opts: &SolverOptions) -> Result<ConvergenceReport> {
    let gamma = params_base.gamma();
    if gamma >= 0.5 {
        return Err(Error::InvalidParameter("convergence needs a stealth index below 1/2".into()));
    }
    let limit = solve_limiting(params_base)?;
    let zt = limit.strategy_scaled;
    let exponent = theory_exponent(params_base);
    let mut ns: Vec<u64> = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();

    let results = par::map(opts.execution, &ns, |&n| -> Result<ConvergenceRow> {
        let params = params_base.with_n(n);
        let sol = solve_finite(&params, opts)?;
        let ng = (n as f64).powf(gamma);
        let z_scaled = sol.strategy.scaled(1.0 / ng);
        let pp = PriceParams::new(&params, &sol.strategy);
        let sn = (n as f64).sqrt();
        let epsilon = linear_grid(-20.0, 20.0, 801)
            .iter()
            .map(|&r| {
                let yt = r * params.sigma;
                (pp.eval(sn * yt) - params.p).abs() / (1.0 + yt.abs())
            })
            .fold(0.0, f64::max);
        Ok(ConvergenceRow {
            n,
            z_scaled,
            abs_error: [(z_scaled.z0 - zt.z0).abs(), (z_scaled.z1 - zt.z1).abs()],
            bound_exponent: exponent,
            epsilon,
        })
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (n, r) in ns.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((*n, e.to_string())),
        }
    }
    let nf: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let e0: Vec<f64> = rows.iter().map(|r| r.abs_error[0]).collect();
    let e1: Vec<f64> = rows.iter().map(|r| r.abs_error[1]).collect();
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    Ok(ConvergenceReport {
        fitted_slope: [fit(&nf, &e0), fit(&nf, &e1)],
        epsilon_slope: fit(&nf, &eps),
        rows,
        limit,
        failures,
    })
}
