//! Price formation, expected price and profit, the insider's objective and
//! the first-order condition functions used by the equilibrium solver.

use crate::error::{Error, Result};
use crate::model::{ModelParams, Strategy};
use crate::numerics::{default_rule, expit, QuadratureRule};

const EXP_CLAMP: f64 = 700.0;

/// `P(y) = 1 / (1 + e^{a y + b})`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceParams {
    pub a: f64,
    pub b: f64,
}

impl PriceParams {
    pub fn new(params: &ModelParams, strat: &Strategy) -> Self {
        let ns2 = params.n_pop as f64 * params.sigma * params.sigma;
        Self {
            a: (strat.z0 - strat.z1) / ns2,
            b: params.q().ln() + (strat.z1 * strat.z1 - strat.z0 * strat.z0) / (2.0 * ns2),
        }
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        expit(-(self.a * y + self.b).clamp(-EXP_CLAMP, EXP_CLAMP))
    }
}

/// Market maker's price given total order flow `y`.
pub fn price(params: &ModelParams, strat: &Strategy, y: f64) -> f64 {
    PriceParams::new(params, strat).eval(y)
}

/// `Φ_N(Z; z) = E[P_N(Z; √N W + z)]`
pub fn expected_price(params: &ModelParams, strat: &Strategy, z: f64) -> f64 {
    expected_price_with(params, strat, z, default_rule())
}

pub fn expected_price_with(params: &ModelParams, strat: &Strategy, z: f64, rule: &QuadratureRule) -> f64 {
    let pp = PriceParams::new(params, strat);
    let scale = (params.n_pop as f64).sqrt() * params.sigma;
    rule.expect(|x| pp.eval(scale * x + z))
}

/// `v − Φ_N(Z; z)`, summed as `E[1 − P]` when `v = 1` so that the
/// difference keeps full relative precision deep in the tail.
fn price_gap(params: &ModelParams, strat: &Strategy, z: f64, v: u8, rule: &QuadratureRule) -> (f64, f64) {
    let pp = PriceParams::new(params, strat);
    let scale = (params.n_pop as f64).sqrt() * params.sigma;
    let (mut phi, mut upper) = (0.0, 0.0);
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let u = (pp.a * (scale * x + z) + pp.b).clamp(-EXP_CLAMP, EXP_CLAMP);
        phi += w * expit(-u);
        upper += w * expit(u);
    }
    (phi, if v == 1 { upper } else { -phi })
}

fn check_side(z: f64, v: u8) -> Result<()> {
    let ok = match v {
        0 => z <= 0.0,
        1 => z >= 0.0,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::SignConstraint { z, v })
    }
}

/// `Q_N(Z; z, v) = (v − Φ_N(Z; z))·z`, defined as 0 at `z = 0`.
pub fn expected_profit(params: &ModelParams, strat: &Strategy, z: f64, v: u8) -> Result<f64> {
    check_side(z, v)?;
    if z == 0.0 {
        return Ok(0.0);
    }
    Ok(price_gap(params, strat, z, v, default_rule()).1 * z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    pub expected_price: f64,
    pub expected_profit: f64,
    pub expected_extra_penalty: f64,
    pub objective: f64,
}

/// `J́_N(Z; z, v) = e^{−λ_N} Q_N − (1 − e^{−λ_N}) Ψ_N` with `Ψ_N = C₀ + χ₀ Q_N`.
pub fn objective(params: &ModelParams, strat: &Strategy, z: f64, v: u8) -> Result<ObjectiveTerms> {
    objective_with(params, strat, z, v, default_rule())
}

pub fn objective_with(
    params: &ModelParams,
    strat: &Strategy,
    z: f64,
    v: u8,
    rule: &QuadratureRule,
) -> Result<ObjectiveTerms> {
    check_side(z, v)?;
    let (phi, gap) = price_gap(params, strat, z, v, rule);
    let q = if z == 0.0 { 0.0 } else { gap * z };
    let psi = params.penalty.c0(z) + params.penalty.chi0() * q;
    let lam = params.hazard.lambda_n(params.n_pop, z);
    let survive = (-lam).exp();
    Ok(ObjectiveTerms {
        expected_price: phi,
        expected_profit: q,
        expected_extra_penalty: psi,
        objective: survive * q + (-lam).exp_m1() * psi,
    })
}

/// Shared kernel of [`phi_bar`] and [`phi_hat`]: `u = ±t²/2 − t x + ln q`.
fn phi_kernel(params: &ModelParams, zeta: f64, sign: f64, rule: &QuadratureRule) -> (f64, f64) {
    let sn = (params.n_pop as f64).sqrt() * params.sigma;
    let t = zeta / sn;
    let lq = params.q().ln();
    let base = sign * 0.5 * t * t + lq;
    let (mut val, mut der) = (0.0, 0.0);
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let u = base - t * x;
        let lo = expit(-u);
        val += w * lo;
        der += w * lo * expit(u);
    }
    (val, t / sn * der)
}

/// `(Φ̄_N(ζ), Φ̄'_N(ζ))`: expected price and its `z`-derivative at the sell
/// order of a strategy with spread `ζ`.
pub fn phi_bar(params: &ModelParams, zeta: f64) -> (f64, f64) {
    phi_kernel(params, zeta, 1.0, default_rule())
}

pub fn phi_bar_with(params: &ModelParams, zeta: f64, rule: &QuadratureRule) -> (f64, f64) {
    phi_kernel(params, zeta, 1.0, rule)
}

/// `(Φ̂_N(ζ), Φ̂'_N(ζ))`, the same at the buy order.
pub fn phi_hat(params: &ModelParams, zeta: f64) -> (f64, f64) {
    phi_kernel(params, zeta, -1.0, default_rule())
}

pub fn phi_hat_with(params: &ModelParams, zeta: f64, rule: &QuadratureRule) -> (f64, f64) {
    phi_kernel(params, zeta, -1.0, rule)
}

/// `g_{1,N}(z) = χ z λ'_N(z) − χ + χ₀ e^{λ_N(z)}`
pub fn g1(params: &ModelParams, z: f64) -> f64 {
    let (chi, chi0) = (params.penalty.chi, params.penalty.chi0());
    let h = &params.hazard;
    chi * z * h.lambda_n_prime(params.n_pop, z) - chi + chi0 * h.lambda_n(params.n_pop, z).exp()
}

/// `g_{2,N}(z) = (χ₀ e^{λ_N(z)} − χ) z`
pub fn g2(params: &ModelParams, z: f64) -> f64 {
    let (chi, chi0) = (params.penalty.chi, params.penalty.chi0());
    (chi0 * params.hazard.lambda_n(params.n_pop, z).exp() - chi) * z
}

/// `A_N(z) = −λ'_N(z) C₀(z) − (e^{λ_N(z)} − 1) C₀'(z)`
pub fn a_n(params: &ModelParams, z: f64) -> f64 {
    let h = &params.hazard;
    let pen = &params.penalty;
    -h.lambda_n_prime(params.n_pop, z) * pen.c0(z) - h.lambda_n(params.n_pop, z).exp_m1() * pen.c0_prime(z)
}

/// `(g1, g2, A)` multiplied through by `e^{−λ_N(z)}`. Same zeros, but finite
/// for orders far beyond the point where `e^{λ}` overflows.
pub(crate) fn damped_terms(params: &ModelParams, z: f64) -> (f64, f64, f64) {
    let (chi, chi0) = (params.penalty.chi, params.penalty.chi0());
    let h = &params.hazard;
    let pen = &params.penalty;
    let lam = h.lambda_n(params.n_pop, z);
    let lp = h.lambda_n_prime(params.n_pop, z);
    let s = (-lam).exp();
    let g1 = chi * z * lp * s - chi * s + chi0;
    let g2 = (chi0 - chi * s) * z;
    let a = -lp * pen.c0(z) * s + (-lam).exp_m1() * pen.c0_prime(z);
    (g1, g2, a)
}

/// `F₀(ζ; z) = g1(z) Φ̄(ζ) + g2(z) Φ̄'(ζ) + A(z)`
pub fn f0(params: &ModelParams, zeta: f64, z: f64) -> f64 {
    f0_given(params, phi_bar(params, zeta), z)
}

/// [`f0`] with `Φ̄` already evaluated.
pub fn f0_given(params: &ModelParams, bar: (f64, f64), z: f64) -> f64 {
    g1(params, z) * bar.0 + g2(params, z) * bar.1 + a_n(params, z)
}

/// `G₁(ζ) = g1(z₁)(Φ̂ − 1) + g2(z₁) Φ̂' + A(z₁)` with `z₁ = ζ + z₀(ζ)`.
pub fn g1_condition(params: &ModelParams, zeta: f64, z0_of_zeta: f64) -> f64 {
    g1_condition_given(params, phi_hat(params, zeta), zeta + z0_of_zeta)
}

pub fn g1_condition_given(params: &ModelParams, hat: (f64, f64), z1: f64) -> f64 {
    g1(params, z1) * (hat.0 - 1.0) + g2(params, z1) * hat.1 + a_n(params, z1)
}

/// `e^{−λ_N(z₁)} G₁`, safe to evaluate anywhere.
pub(crate) fn g1_condition_damped(params: &ModelParams, hat: (f64, f64), z1: f64) -> f64 {
    let (g1, g2, a) = damped_terms(params, z1);
    g1 * (hat.0 - 1.0) + g2 * hat.1 + a
}

/// Large-population limit of the scaled price function
/// `P_N(N^γ Z̃; N^{max(γ,1/2)} ỹ)`.
///
/// `sigma` is only consulted in the γ = 1/2 regime, where the limit is the
/// one-trader price.
pub fn limiting_price(strat: &Strategy, gamma: f64, y_tilde: f64, p: f64, sigma: f64) -> f64 {
    const HALF: f64 = 0.5;
    if gamma < HALF {
        p
    } else if gamma == HALF {
        let ns2 = sigma * sigma;
        let a = (strat.z0 - strat.z1) / ns2;
        let b = ((1.0 - p) / p).ln() + (strat.z1 * strat.z1 - strat.z0 * strat.z0) / (2.0 * ns2);
        PriceParams { a, b }.eval(y_tilde)
    } else {
        let mid = strat.z0 + strat.z1;
        if 2.0 * y_tilde > mid {
            1.0
        } else if 2.0 * y_tilde == mid {
            p
        } else {
            0.0
        }
    }
}

/// `P_N(N^γ Z̃; N^{max(γ,1/2)} ỹ)` evaluated directly.
pub fn scaled_price(params: &ModelParams, strat_scaled: &Strategy, gamma: f64, y_tilde: f64) -> f64 {
    let n = params.n_pop as f64;
    let z = strat_scaled.scaled(n.powf(gamma));
    price(params, &z, n.powf(gamma.max(0.5)) * y_tilde)
}
