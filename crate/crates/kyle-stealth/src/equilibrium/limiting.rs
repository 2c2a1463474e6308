use super::{solve_finite, EquilibriumSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{HazardFamily, HazardModel, ModelParams, PenaltyFamily, PenaltyModel, Strategy};
use crate::numerics::{expand_bracket, find_root_with, geometric_grid, lambert_w0, Direction, RootOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitingMethod {
    ClosedFormLambert,
    RootFind,
    PowerClosedForm,
    FiniteN1Delegate,
}

impl std::fmt::Display for LimitingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LimitingMethod::ClosedFormLambert => "closed_form_lambert",
            LimitingMethod::RootFind => "root_find",
            LimitingMethod::PowerClosedForm => "power_closed_form",
            LimitingMethod::FiniteN1Delegate => "finite_n1_delegate",
        })
    }
}

/// The scaled large-population equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitingSolution {
    pub strategy_scaled: Strategy,
    pub gamma: f64,
    /// the constant limit price, `None` when γ = 1/2 (price stays informative)
    pub price_constant: Option<f64>,
    pub method: LimitingMethod,
    /// first-order residual per side
    pub residuals: [f64; 2],
    pub warnings: Vec<String>,
    /// the underlying `N = 1` solve when delegated
    pub delegate: Option<Box<EquilibriumSolution>>,
}

/// Penalty seen by the limiting objective: `N^{−γ} C₀(N^γ z̃)` in the limit.
fn limiting_penalty(params: &ModelParams) -> PenaltyModel {
    let pen = params.penalty;
    if params.hazard.beta == 0.0 || pen.is_civil() {
        pen
    } else if pen.is_bounded() {
        PenaltyModel::civil(pen.chi)
    } else {
        PenaltyModel::new(pen.chi, PenaltyFamily::Linear { k_alpha: pen.k_alpha() })
    }
}

/// Limiting scaled objective against the constant price `p` (γ < 1/2):
/// `(v − p) z (χ e^{−λ(z)} − χ₀) − (1 − e^{−λ(z)}) C₀(z)`, which collapses to
/// `(v − p) z − K_θ K_α |z|^{θ+α}` when `β > 0` and `α > 1`.
pub fn limiting_objective(params: &ModelParams, z: f64, v: u8) -> f64 {
    if params.hazard.beta > 0.0 && params.penalty.alpha() > 1.0 {
        let kk = params.hazard.k_theta() * params.penalty.k_alpha();
        return (v as f64 - params.p) * z - kk * z.abs().powf(params.hazard.theta + params.penalty.alpha());
    }
    let pen = limiting_penalty(params);
    let lam = params.hazard.lambda(z);
    let s = (-lam).exp();
    (v as f64 - params.p) * z * (pen.chi * s - pen.chi0()) + (-lam).exp_m1() * pen.c0(z)
}

/// `d/dz` of [`limiting_objective`], i.e. `e^{−λ}` times the first-order
/// condition `(v−p)(χ − χ z λ' − χ₀ e^{λ}) + A₁(z)`.
fn damped_condition(params: &ModelParams, pen: &PenaltyModel, z: f64, v: u8) -> f64 {
    let h = &params.hazard;
    let lam = h.lambda(z);
    let lp = h.lambda_prime(z);
    let s = (-lam).exp();
    (v as f64 - params.p) * (pen.chi * s - pen.chi * z * lp * s - pen.chi0()) - lp * pen.c0(z) * s
        + (-lam).exp_m1() * pen.c0_prime(z)
}

fn condition(params: &ModelParams, pen: &PenaltyModel, z: f64, v: u8) -> f64 {
    damped_condition(params, pen, z, v) * params.hazard.lambda(z).exp()
}

/// Counts sign changes and flat stretches of the condition on a wide grid.
fn uniqueness_warning(params: &ModelParams, pen: &PenaltyModel, v: u8) -> Option<String> {
    let dir = if v == 0 { -1.0 } else { 1.0 };
    let g = geometric_grid(1e-6, 1e6, 1201);
    let vals: Vec<f64> = g.iter().map(|&a| damped_condition(params, pen, dir * a, v)).collect();
    let scale = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let flat = vals.windows(2).filter(|w| w[0].abs() <= 1e-12 * scale && w[1].abs() <= 1e-12 * scale).count();
    let changes = vals.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
    if flat > 0 || changes > 1 {
        Some(format!(
            "first-order condition for v = {v} is not uniquely solvable ({changes} sign changes, {flat} flat cells)"
        ))
    } else {
        None
    }
}

fn root_find_side(params: &ModelParams, pen: &PenaltyModel, v: u8) -> Result<f64> {
    let f = |z: f64| damped_condition(params, pen, z, v);
    let (seed, dir) = if v == 0 { (-1e-9, Direction::Negative) } else { (1e-9, Direction::Positive) };
    let b = expand_bracket(f, seed, dir)?;
    find_root_with(f, b, RootOptions::x_only(0.0))
}

/// Dispatches to the closed forms where they exist and to bracketed root
/// finding otherwise; γ = 1/2 is handed to the finite solver at `N = 1`.
pub fn solve_limiting(params: &ModelParams) -> Result<LimitingSolution> {
    params.check()?;
    let h = params.hazard;
    let pen = params.penalty;
    let gamma = params.gamma();
    let p = params.p;

    if gamma >= 0.5 {
        return delegate(params, gamma);
    }

    let power_case = h.beta > 0.0 && pen.alpha() > 1.0;
    if pen.is_civil() {
        if let HazardFamily::Quadratic { k } = h.family {
            let w = lambert_w0(0.5f64.exp() * pen.chi0() / (2.0 * pen.chi))?;
            let z = ((0.5 - w) / k).sqrt();
            let strat = Strategy::new(-z, z)?;
            let residuals = [condition(params, &pen, -z, 0), condition(params, &pen, z, 1)];
            return Ok(LimitingSolution {
                strategy_scaled: strat,
                gamma,
                price_constant: Some(p),
                method: LimitingMethod::ClosedFormLambert,
                residuals,
                warnings: vec![],
                delegate: None,
            });
        }
    }

    if power_case {
        let kk = h.k_theta() * pen.k_alpha();
        let e = h.theta + pen.alpha();
        let side = |v: u8| {
            let d = v as f64 - p;
            d.signum() * (d.abs() / (kk * e)).powf(1.0 / (e - 1.0))
        };
        let (z0, z1) = (side(0), side(1));
        let res = |z: f64, v: u8| (v as f64 - p) - kk * e * z.abs().powf(e - 1.0) * z.signum();
        return Ok(LimitingSolution {
            strategy_scaled: Strategy::new(z0, z1)?,
            gamma,
            price_constant: Some(p),
            method: LimitingMethod::PowerClosedForm,
            residuals: [res(z0, 0), res(z1, 1)],
            warnings: vec![],
            delegate: None,
        });
    }

    let lpen = limiting_penalty(params);
    let warnings: Vec<String> = [0u8, 1].iter().filter_map(|&v| uniqueness_warning(params, &lpen, v)).collect();
    let z0 = root_find_side(params, &lpen, 0)?;
    let z1 = root_find_side(params, &lpen, 1)?;
    Ok(LimitingSolution {
        strategy_scaled: Strategy::new(z0, z1)?,
        gamma,
        price_constant: Some(p),
        method: LimitingMethod::RootFind,
        residuals: [condition(params, &lpen, z0, 0), condition(params, &lpen, z1, 1)],
        warnings,
        delegate: None,
    })
}

fn delegate(params: &ModelParams, gamma: f64) -> Result<LimitingSolution> {
    if !params.penalty.is_civil() {
        return Err(Error::Unsupported("γ = 1/2 limit with a criminal penalty component".into()));
    }
    // β = 1/2 keeps λ; β > 1/2 kills the hazard in the limit
    let hazard = if params.hazard.beta > 0.5 { HazardModel::zero() } else { params.hazard };
    let one = ModelParams { n_pop: 1, hazard, ..*params };
    let opts = SolverOptions { skip_validation: matches!(hazard.family, HazardFamily::Zero), ..Default::default() };
    let sol = solve_finite(&one, &opts)?;
    Ok(LimitingSolution {
        strategy_scaled: sol.strategy,
        gamma,
        price_constant: None,
        method: LimitingMethod::FiniteN1Delegate,
        residuals: [sol.residual_f0, sol.residual_g1],
        warnings: vec![],
        delegate: Some(Box::new(sol)),
    })
}
