//! Parameter containers, hazard and penalty families, and numerical checks of
//! the standing convexity/growth assumptions.

use crate::error::{Error, Result};
use crate::numerics::{erfc, geometric_grid, loglog_slope};

/// Shape of the hazard rate `λ` (before population scaling).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HazardFamily {
    /// `λ(u) = K u²`
    Quadratic { k: f64 },
    /// `λ(u) = K |u|`
    Absolute { k: f64 },
    /// `λ(u) = K_θ |u|^θ`
    Power { k_theta: f64, theta: f64 },
    /// Order-flow-imbalance detection with `D(u) = min{K_D |u|^θ_D, 1}`.
    ErfcDetection { k_d: f64, theta_d: f64, y_bar: f64, sigma: f64 },
    /// `λ(u) = log(1 + |u|)`; concave, kept for the non-uniqueness example.
    LogOnePlus,
    /// `λ ≡ 0`: no prosecution at all. Only used internally.
    Zero,
}

/// A hazard family together with its population scaling and declared
/// small-argument exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardModel {
    pub family: HazardFamily,
    /// `λ_N(z) = λ(N^{-β} z)`
    pub beta: f64,
    pub theta: f64,
    pub theta_prime: f64,
}

impl HazardModel {
    pub fn quadratic(k: f64, beta: f64) -> Self {
        Self { family: HazardFamily::Quadratic { k }, beta, theta: 2.0, theta_prime: f64::INFINITY }
    }

    pub fn absolute(k: f64, beta: f64) -> Self {
        Self { family: HazardFamily::Absolute { k }, beta, theta: 1.0, theta_prime: f64::INFINITY }
    }

    pub fn power(k_theta: f64, theta: f64, beta: f64) -> Self {
        Self { family: HazardFamily::Power { k_theta, theta }, beta, theta, theta_prime: f64::INFINITY }
    }

    /// Detection family; its population exponent is fixed at 1/2.
    pub fn erfc_detection(k_d: f64, theta_d: f64, y_bar: f64, sigma: f64) -> Self {
        Self {
            family: HazardFamily::ErfcDetection { k_d, theta_d, y_bar, sigma },
            beta: 0.5,
            theta: theta_d.min(2.0),
            theta_prime: 1.0,
        }
    }

    pub fn log_one_plus(beta: f64) -> Self {
        Self { family: HazardFamily::LogOnePlus, beta, theta: 1.0, theta_prime: 1.0 }
    }

    pub fn zero() -> Self {
        Self { family: HazardFamily::Zero, beta: 0.0, theta: 1.0, theta_prime: f64::INFINITY }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad("hazard.beta must be a finite number >= 0");
        }
        if !(self.theta >= 1.0) {
            return bad("hazard.theta must be >= 1");
        }
        if !(self.theta_prime > 0.0) {
            return bad("hazard.theta_prime must be > 0");
        }
        match self.family {
            HazardFamily::Quadratic { k } | HazardFamily::Absolute { k } if !(k > 0.0 && k.is_finite()) => {
                bad("hazard.K must be positive")
            }
            HazardFamily::Power { k_theta, theta } if !(k_theta > 0.0) || !(theta >= 1.0) => {
                bad("power hazard needs K_theta > 0 and theta >= 1")
            }
            HazardFamily::ErfcDetection { k_d, theta_d, y_bar, sigma }
                if !(k_d > 0.0) || !(theta_d >= 1.0) || !(y_bar > 0.0) || !(sigma > 0.0) =>
            {
                bad("erfc detection needs K_D > 0, theta_D >= 1, y_bar > 0, sigma > 0")
            }
            _ => Ok(()),
        }
    }

    /// Leading coefficient `K_θ` in `λ(u) ~ K_θ |u|^θ` as `u → 0`.
    pub fn k_theta(&self) -> f64 {
        match self.family {
            HazardFamily::Quadratic { k } | HazardFamily::Absolute { k } => k,
            HazardFamily::Power { k_theta, .. } => k_theta,
            HazardFamily::ErfcDetection { k_d, y_bar, sigma, .. } => {
                k_d * erfc(y_bar / (std::f64::consts::SQRT_2 * sigma))
            }
            HazardFamily::LogOnePlus => 1.0,
            HazardFamily::Zero => 0.0,
        }
    }

    /// `N^{-β}`
    #[inline]
    pub fn scale(&self, n_pop: u64) -> f64 {
        (n_pop as f64).powf(-self.beta)
    }

    /// Unscaled `λ(u)`.
    pub fn lambda(&self, u: f64) -> f64 {
        match self.family {
            HazardFamily::Quadratic { k } => k * u * u,
            HazardFamily::Absolute { k } => k * u.abs(),
            HazardFamily::Power { k_theta, theta } => k_theta * u.abs().powf(theta),
            HazardFamily::ErfcDetection { .. } => {
                let s = self.erfc_survival(u);
                if s > 0.0 {
                    0.0 - s.ln()
                } else {
                    f64::INFINITY
                }
            }
            HazardFamily::LogOnePlus => u.abs().ln_1p(),
            HazardFamily::Zero => 0.0,
        }
    }

    /// Unscaled `λ'(u)`; at `u = 0` the right derivative of `|u|` is taken as 0.
    pub fn lambda_prime(&self, u: f64) -> f64 {
        let sgn = if u > 0.0 {
            1.0
        } else if u < 0.0 {
            -1.0
        } else {
            0.0
        };
        match self.family {
            HazardFamily::Quadratic { k } => 2.0 * k * u,
            HazardFamily::Absolute { k } => k * sgn,
            HazardFamily::Power { k_theta, theta } => k_theta * theta * sgn * u.abs().powf(theta - 1.0),
            HazardFamily::ErfcDetection { k_d, theta_d, y_bar, sigma } => {
                let r2s = std::f64::consts::SQRT_2 * sigma;
                let a = (y_bar + u) / r2s;
                let b = (y_bar - u) / r2s;
                let sum = erfc(a) + erfc(b);
                let raw = k_d * u.abs().powf(theta_d);
                let (d, d_prime) = if raw < 1.0 {
                    (raw, k_d * theta_d * sgn * u.abs().powf(theta_d - 1.0))
                } else {
                    (1.0, 0.0)
                };
                // d/du [erfc(a) + erfc(b)]
                let dsum = (2.0 / std::f64::consts::PI).sqrt() / sigma * ((-b * b).exp() - (-a * a).exp());
                (0.5 * d_prime * sum + 0.5 * d * dsum) / self.erfc_survival(u)
            }
            HazardFamily::LogOnePlus => sgn / (1.0 + u.abs()),
            HazardFamily::Zero => 0.0,
        }
    }

    fn erfc_survival(&self, u: f64) -> f64 {
        match self.family {
            HazardFamily::ErfcDetection { k_d, theta_d, y_bar, sigma } => {
                let d = (k_d * u.abs().powf(theta_d)).min(1.0);
                let r2s = std::f64::consts::SQRT_2 * sigma;
                if d < 1.0 {
                    1.0 - 0.5 * d * (erfc((y_bar + u) / r2s) + erfc((y_bar - u) / r2s))
                } else {
                    // certain detection: the difference of two tails, kept accurate far out
                    let a = u.abs();
                    0.5 * (erfc((a - y_bar) / r2s) - erfc((a + y_bar) / r2s))
                }
            }
            _ => 1.0,
        }
    }

    /// `λ_N(z)`
    #[inline]
    pub fn lambda_n(&self, n_pop: u64, z: f64) -> f64 {
        self.lambda(self.scale(n_pop) * z)
    }

    /// `λ'_N(z) = N^{-β} λ'(N^{-β} z)`
    #[inline]
    pub fn lambda_n_prime(&self, n_pop: u64, z: f64) -> f64 {
        let s = self.scale(n_pop);
        s * self.lambda_prime(s * z)
    }
}

/// `λ_N(z)`; fails when the detection family leaves its probability range.
pub fn hazard_value(h: &HazardModel, n_pop: u64, z: f64) -> Result<f64> {
    h.check()?;
    let u = h.scale(n_pop) * z;
    if let HazardFamily::ErfcDetection { .. } = h.family {
        let s = h.erfc_survival(u);
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Domain(format!("detection probability {} outside [0, 1)", 1.0 - s)));
        }
    }
    Ok(h.lambda(u))
}

/// `dλ_N/dz`
pub fn hazard_derivative(h: &HazardModel, n_pop: u64, z: f64) -> f64 {
    h.lambda_n_prime(n_pop, z)
}

/// `1 − e^{−λ_N(z)}`
pub fn prosecution_probability(h: &HazardModel, n_pop: u64, z: f64) -> f64 {
    -(-h.lambda_n(n_pop, z)).exp_m1()
}

/// Strategy-based (criminal) penalty component `C₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyFamily {
    Zero,
    /// `K_α |z|`
    Linear { k_alpha: f64 },
    /// `K_α |z|^α`
    Power { k_alpha: f64, alpha: f64, alpha_prime: f64 },
    /// The bounded four-branch penalty of the non-uniqueness example.
    PiecewiseExample3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyModel {
    /// civil multiplier χ ≥ 1
    pub chi: f64,
    pub c0: PenaltyFamily,
}

impl PenaltyModel {
    pub fn civil(chi: f64) -> Self {
        Self { chi, c0: PenaltyFamily::Zero }
    }

    pub fn new(chi: f64, c0: PenaltyFamily) -> Self {
        Self { chi, c0 }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.chi >= 1.0) || !self.chi.is_finite() {
            return Err(Error::InvalidParameter("penalty.chi must be >= 1".into()));
        }
        match self.c0 {
            PenaltyFamily::Linear { k_alpha } if !(k_alpha > 0.0) => {
                Err(Error::InvalidParameter("penalty.K_alpha must be positive".into()))
            }
            PenaltyFamily::Power { k_alpha, alpha, alpha_prime }
                if !(k_alpha > 0.0) || !(alpha >= 1.0) || !(alpha_prime > 0.0) =>
            {
                Err(Error::InvalidParameter("power penalty needs K_alpha > 0, alpha >= 1, alpha_prime > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// `χ₀ = χ − 1`
    pub fn chi0(&self) -> f64 {
        self.chi - 1.0
    }

    pub fn is_civil(&self) -> bool {
        matches!(self.c0, PenaltyFamily::Zero)
    }

    /// Large-argument growth exponent α (1 for the zero, linear and bounded
    /// families, so that the stealth index reduces to β).
    pub fn alpha(&self) -> f64 {
        match self.c0 {
            PenaltyFamily::Power { alpha, .. } => alpha,
            _ => 1.0,
        }
    }

    pub fn alpha_prime(&self) -> f64 {
        match self.c0 {
            PenaltyFamily::Power { alpha_prime, .. } => alpha_prime,
            _ => f64::INFINITY,
        }
    }

    pub fn k_alpha(&self) -> f64 {
        match self.c0 {
            PenaltyFamily::Zero | PenaltyFamily::PiecewiseExample3 => 0.0,
            PenaltyFamily::Linear { k_alpha } | PenaltyFamily::Power { k_alpha, .. } => k_alpha,
        }
    }

    pub fn c0(&self, z: f64) -> f64 {
        match self.c0 {
            PenaltyFamily::Zero => 0.0,
            PenaltyFamily::Linear { k_alpha } => k_alpha * z.abs(),
            PenaltyFamily::Power { k_alpha, alpha, .. } => k_alpha * z.abs().powf(alpha),
            PenaltyFamily::PiecewiseExample3 => {
                if z <= -6.0 {
                    1.0 / (4.0 * z) + 1.0 / 12.0
                } else if z <= 0.0 {
                    -z / 144.0
                } else if z <= 1.2 {
                    25.0 * z / 144.0
                } else {
                    5.0 / 12.0 - 1.0 / (4.0 * z)
                }
            }
        }
    }

    pub fn c0_prime(&self, z: f64) -> f64 {
        let sgn = if z > 0.0 {
            1.0
        } else if z < 0.0 {
            -1.0
        } else {
            0.0
        };
        match self.c0 {
            PenaltyFamily::Zero => 0.0,
            PenaltyFamily::Linear { k_alpha } => k_alpha * sgn,
            PenaltyFamily::Power { k_alpha, alpha, .. } => k_alpha * alpha * sgn * z.abs().powf(alpha - 1.0),
            PenaltyFamily::PiecewiseExample3 => {
                if z <= -6.0 {
                    -1.0 / (4.0 * z * z)
                } else if z <= 0.0 {
                    -1.0 / 144.0
                } else if z <= 1.2 {
                    25.0 / 144.0
                } else {
                    1.0 / (4.0 * z * z)
                }
            }
        }
    }

    /// Whether `C₀` stays bounded as `|z| → ∞`.
    pub fn is_bounded(&self) -> bool {
        matches!(self.c0, PenaltyFamily::Zero | PenaltyFamily::PiecewiseExample3)
    }
}

/// `C₀(z) + χ·(profit)⁺`
pub fn penalty_total(pen: &PenaltyModel, z: f64, profit: f64) -> f64 {
    pen.c0(z) + pen.chi * profit.max(0.0)
}

/// A complete market instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub p: f64,
    pub sigma: f64,
    pub n_pop: u64,
    pub hazard: HazardModel,
    pub penalty: PenaltyModel,
}

impl ModelParams {
    pub fn new(p: f64, sigma: f64, n_pop: u64, hazard: HazardModel, penalty: PenaltyModel) -> Result<Self> {
        let m = Self { p, sigma, n_pop, hazard, penalty };
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.n_pop == 0 {
            return Err(Error::InvalidParameter("n_pop must be >= 1".into()));
        }
        self.hazard.check()?;
        self.penalty.check()
    }

    /// `q = (1 − p)/p`
    pub fn q(&self) -> f64 {
        (1.0 - self.p) / self.p
    }

    pub fn beta(&self) -> f64 {
        self.hazard.beta
    }

    pub fn with_n(&self, n_pop: u64) -> Self {
        Self { n_pop, ..*self }
    }

    /// Stealth index for this instance.
    pub fn gamma(&self) -> f64 {
        crate::equilibrium::stealth_index(self.hazard.beta, self.hazard.theta, self.penalty.alpha())
    }
}

/// Sell/buy order pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strategy {
    pub z0: f64,
    pub z1: f64,
}

impl Strategy {
    pub fn new(z0: f64, z1: f64) -> Result<Self> {
        if !(z0 < 0.0 && z1 > 0.0) || !z0.is_finite() || !z1.is_finite() {
            return Err(Error::InvalidParameter(format!("strategy needs z0 < 0 < z1, got ({z0}, {z1})")));
        }
        Ok(Self { z0, z1 })
    }

    /// `ζ = Z(1) − Z(0)`
    pub fn zeta(&self) -> f64 {
        self.z1 - self.z0
    }

    pub fn get(&self, v: u8) -> f64 {
        if v == 0 {
            self.z0
        } else {
            self.z1
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { z0: self.z0 * factor, z1: self.z1 * factor }
    }
}

/// One line of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub fitted_theta: f64,
    /// `None` when `C₀` is bounded or identically zero.
    pub fitted_alpha: Option<f64>,
    pub c0_bounded: bool,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(f, "{}: {} ({})", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail)?;
        }
        Ok(())
    }
}

fn symmetric_grid() -> Vec<f64> {
    // 64 points per decade over [1e-4, 1e4]
    let pos = geometric_grid(1e-4, 1e4, 8 * 64 + 1);
    let mut g: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
    g.push(0.0);
    g.extend(pos);
    g
}

/// Worst scaled second divided difference of `f` over `grid` (negative
/// means a concave kink somewhere).
fn min_second_difference<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> (f64, f64) {
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut worst = f64::INFINITY;
    let mut at = f64::NAN;
    for i in 1..grid.len() - 1 {
        let (x0, x1, x2) = (grid[i - 1], grid[i], grid[i + 1]);
        let (f0, f1, f2) = (vals[i - 1], vals[i], vals[i + 1]);
        if !(f0.is_finite() && f1.is_finite() && f2.is_finite()) {
            continue;
        }
        let s1 = (f1 - f0) / (x1 - x0);
        let s2 = (f2 - f1) / (x2 - x1);
        // slope change relative to slope magnitude
        let d = (s2 - s1) / (1.0 + s1.abs().max(s2.abs()));
        if d < worst {
            worst = d;
            at = x1;
        }
    }
    (worst, at)
}

/// Samples the hazard and penalty on geometric grids and reports each
/// standing condition separately. Failures are entries, not errors.
pub fn validate_assumptions(params: &ModelParams) -> ValidationReport {
    let h = params.hazard;
    let pen = params.penalty;
    let grid = symmetric_grid();
    let mut checks = Vec::new();

    let (worst, at) = min_second_difference(|u| h.lambda(u), &grid);
    checks.push(Check {
        name: "convexity",
        passed: worst >= -1e-9,
        detail: format!("min scaled second difference {worst:.3e} at z = {at:.4e}"),
    });

    let sign_ok = grid
        .iter()
        .filter(|&&u| u != 0.0)
        .all(|&u| {
            // skip points where the hazard has saturated to +∞
            let d = h.lambda_prime(u);
            !d.is_finite() || d * u.signum() > 0.0
        });
    checks.push(Check {
        name: "hazard sign",
        passed: sign_ok,
        detail: "lambda' < 0 on z < 0 and > 0 on z > 0".into(),
    });

    let zero_ok = h.lambda(0.0) == 0.0;
    let increases = |inner: f64, outer: f64| {
        let (li, lo) = (h.lambda(inner), h.lambda(outer));
        lo > li || (li.is_infinite() && lo.is_infinite())
    };
    let mono_ok = grid.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        if a >= 0.0 {
            increases(a, b)
        } else if b <= 0.0 {
            increases(b, a)
        } else {
            true
        }
    });
    checks.push(Check {
        name: "hazard monotone",
        passed: zero_ok && mono_ok,
        detail: format!("lambda(0) = {}, strictly increasing in |z|: {}", h.lambda(0.0), mono_ok),
    });

    let small = geometric_grid(1e-4, 1e-2, 33);
    let lam: Vec<f64> = small.iter().map(|&u| 0.5 * (h.lambda(u) + h.lambda(-u))).collect();
    let fitted_theta = loglog_slope(&small, &lam);
    checks.push(Check {
        name: "theta fit",
        passed: (fitted_theta - h.theta).abs() <= 0.05,
        detail: format!("fitted {fitted_theta:.4}, declared {}", h.theta),
    });

    let c0_zero = pen.c0(0.0) == 0.0;
    let c0_mono = grid.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        if a >= 0.0 {
            pen.c0(b) >= pen.c0(a)
        } else if b <= 0.0 {
            pen.c0(a) >= pen.c0(b)
        } else {
            true
        }
    });
    checks.push(Check {
        name: "penalty monotone",
        passed: c0_zero && c0_mono,
        detail: format!("C0(0) = {}, nondecreasing in |z|: {}", pen.c0(0.0), c0_mono),
    });

    let (c0_worst, c0_at) = min_second_difference(|z| pen.c0(z), &grid);
    checks.push(Check {
        name: "penalty convexity",
        passed: c0_worst >= -1e-9,
        detail: format!("min scaled second difference {c0_worst:.3e} at z = {c0_at:.4e}"),
    });

    let c0_bounded = pen.is_bounded();
    let fitted_alpha = if c0_bounded {
        None
    } else {
        let big = geometric_grid(1e2, 1e4, 33);
        let c: Vec<f64> = big.iter().map(|&z| 0.5 * (pen.c0(z) + pen.c0(-z))).collect();
        Some(loglog_slope(&big, &c))
    };
    checks.push(match fitted_alpha {
        Some(a) => Check {
            name: "alpha fit",
            passed: (a - pen.alpha()).abs() <= 0.05,
            detail: format!("fitted {a:.4}, declared {}", pen.alpha()),
        },
        // bounded penalties are reported, not failed
        None => Check { name: "alpha fit", passed: true, detail: "C0 bounded; no growth exponent".into() },
    });

    checks.push(Check {
        name: "civil multiplier",
        passed: pen.chi >= 1.0,
        detail: format!("chi = {}, chi0 = {}", pen.chi, pen.chi0()),
    });

    ValidationReport { checks, fitted_theta, fitted_alpha, c0_bounded }
}
