use super::SolverOptions;
use crate::error::{Error, Result};
use crate::market::{
    damped_terms, f0_given, g1_condition_damped, g1_condition_given, objective_with, phi_bar_with, phi_hat_with,
    PriceParams,
};
use crate::model::{validate_assumptions, HazardFamily, ModelParams, Strategy};
use crate::numerics::{
    expand_bracket, find_root_with, geometric_grid, Bracket, Direction, QuadratureRule, RootOptions,
};
use crate::par;

/// One sign change of the outer condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootRecord {
    pub zeta: f64,
    pub strategy: Strategy,
    /// `J́(Z; Z(0), 0) + J́(Z; Z(1), 1)`, the selection criterion
    pub objective_sum: f64,
    pub residual_g1: f64,
}

/// A finite-population equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    pub strategy: Strategy,
    pub zeta_star: f64,
    pub residual_f0: f64,
    pub residual_g1: f64,
    pub price_params: PriceParams,
    pub n_pop: u64,
    /// every root found on the scan, in increasing `ζ`
    pub all_roots: Vec<RootRecord>,
    pub gamma: f64,
    /// largest zero of `ζ ↦ ζ + z₀(ζ)`
    pub zeta_breve: f64,
    /// zero of `g_{1,N}` on the negative axis (`-inf` when there is none)
    pub z_diamond: f64,
}

/// Zero of `g_{1,N}` on `(−∞, 0)`, obtained from `N = 1` via
/// `g_{1,N}(z) = g_{1,1}(N^{−β} z)`. `None` when `g_1` never changes sign.
pub fn z_diamond(params: &ModelParams) -> Result<Option<f64>> {
    if matches!(params.hazard.family, HazardFamily::Zero) {
        return Ok(None);
    }
    let one = params.with_n(1);
    let g = |z: f64| damped_terms(&one, z).0;
    let bracket = match expand_bracket(g, -1e-9, Direction::Negative) {
        Ok(b) => b,
        Err(Error::SpanCap { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let z1 = find_root_with(g, bracket, RootOptions::x_only(0.0))?;
    Ok(Some(z1 / params.hazard.scale(params.n_pop)))
}

/// Everything the outer iteration needs at one `ζ`.
#[derive(Debug, Clone, Copy)]
struct Point {
    zeta: f64,
    z0: f64,
    bar: (f64, f64),
    hat: (f64, f64),
}

impl Point {
    fn z1(&self) -> f64 {
        self.zeta + self.z0
    }
}

struct Inner<'a> {
    params: &'a ModelParams,
    rule: &'a QuadratureRule,
    z_diamond: Option<f64>,
    x_tol: f64,
}

impl Inner<'_> {
    /// `z₀(ζ)`: the zero of `F₀(ζ; ·)` on `(z◇, 0)`.
    fn z0(&self, bar: (f64, f64)) -> Result<f64> {
        let f = |z: f64| f0_given(self.params, bar, z);
        match self.z_diamond {
            Some(d) => {
                let f_d = f(d);
                if f_d <= 0.0 {
                    // Φ̄' has underflowed; the zero sits on z◇ itself
                    return Ok(d);
                }
                let mut hi = d * 1e-14;
                let mut f_hi = f(hi);
                while f_hi >= 0.0 && hi > d * 1e-300 {
                    hi *= 1e-20;
                    f_hi = f(hi);
                }
                let bracket = Bracket::new(d, hi, f_d, f_hi)?;
                find_root_with(f, bracket, RootOptions::x_only(self.x_tol))
            }
            None => {
                if matches!(self.params.hazard.family, HazardFamily::Zero) && self.params.penalty.is_civil() {
                    // pure-profit condition, linear in z
                    return Ok(-bar.0 / bar.1);
                }
                let b = expand_bracket(f, -self.x_tol, Direction::Negative)?;
                find_root_with(f, b, RootOptions::x_only(self.x_tol))
            }
        }
    }

    fn point(&self, zeta: f64) -> Result<Point> {
        let bar = phi_bar_with(self.params, zeta, self.rule);
        let hat = phi_hat_with(self.params, zeta, self.rule);
        let z0 = self.z0(bar)?;
        Ok(Point { zeta, z0, bar, hat })
    }

    fn damped_g(&self, p: &Point) -> f64 {
        g1_condition_damped(self.params, p.hat, p.z1())
    }
}

fn check_assumptions(params: &ModelParams) -> Result<()> {
    let report = validate_assumptions(params);
    let mut needed = vec!["convexity", "hazard sign", "hazard monotone", "civil multiplier"];
    if !params.penalty.is_civil() {
        needed.extend(["penalty monotone", "penalty convexity"]);
    }
    for name in needed {
        if let Some(c) = report.get(name) {
            if !c.passed {
                return Err(Error::Assumption(format!("{name}: {}", c.detail)));
            }
        }
    }
    Ok(())
}

/// Solves the two first-order conditions by nested root finding: an inner
/// solve for the sell order given the spread `ζ`, and an outer scan over `ζ`
/// for the buy-side condition.
pub fn solve_finite(params: &ModelParams, opts: &SolverOptions) -> Result<EquilibriumSolution> {
    params.check()?;
    if !opts.skip_validation {
        check_assumptions(params)?;
    }
    let rule = opts.rule();
    let gamma = params.gamma();
    let n = params.n_pop as f64;
    let unit = params.sigma * n.powf(gamma);
    let zd = z_diamond(params)?;
    let inner = Inner { params, rule: &rule, z_diamond: zd, x_tol: opts.inner_tol * unit };

    let grid = geometric_grid(opts.scan_lo * unit, opts.scan_hi * unit, opts.scan_points);
    let pts: Vec<Point> = par::map(opts.execution, &grid, |&z| inner.point(z)).into_iter().collect::<Result<_>>()?;
    let trace = || pts.iter().map(|p| (p.zeta, p.z1())).collect::<Vec<_>>();

    if pts[0].z1() > 0.0 {
        return Err(Error::Bracketing { reason: "z1 already positive at the start of the scan".into(), trace: trace() });
    }
    let idx = (0..pts.len() - 1)
        .rev()
        .find(|&i| pts[i].z1() <= 0.0 && pts[i + 1].z1() > 0.0)
        .ok_or_else(|| Error::Bracketing { reason: "z1 never turns positive".into(), trace: trace() })?;
    let zeta_breve = if pts[idx].z1() == 0.0 {
        pts[idx].zeta
    } else {
        let h = |z: f64| inner.point(z).map(|p| p.z1()).unwrap_or(f64::NAN);
        let b = Bracket::new(pts[idx].zeta, pts[idx + 1].zeta, pts[idx].z1(), pts[idx + 1].z1())?;
        find_root_with(h, b, RootOptions::x_only(0.0))?
    };

    // outer condition just beyond ζ̆ and at every later grid point
    let start = zeta_breve * (1.0 + 1e-10);
    let mut zs = vec![start];
    zs.extend(grid.iter().copied().filter(|&z| z > start));
    let outer: Vec<(f64, f64)> = par::map(opts.execution, &zs, |&z| {
        inner.point(z).map(|p| (z, inner.damped_g(&p)))
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let brackets: Vec<Bracket> = outer
        .windows(2)
        .filter_map(|w| Bracket::new(w[0].0, w[1].0, w[0].1, w[1].1).ok())
        .collect();
    if brackets.is_empty() {
        return Err(Error::Bracketing { reason: "outer condition has no sign change".into(), trace: outer });
    }

    let roots: Vec<(RootRecord, f64)> = par::map(opts.execution, &brackets, |b| -> Result<(RootRecord, f64)> {
        let g = |z: f64| inner.point(z).map(|p| inner.damped_g(&p)).unwrap_or(f64::NAN);
        let zeta = find_root_with(g, *b, RootOptions::x_only(0.0))?;
        let p = inner.point(zeta)?;
        let strategy = Strategy { z0: p.z0, z1: p.z1() };
        let r_f0 = f0_given(params, p.bar, p.z0);
        let r_g1 = g1_condition_given(params, p.hat, p.z1());
        let j = objective_with(params, &strategy, strategy.z0, 0, &rule)?.objective
            + objective_with(params, &strategy, strategy.z1, 1, &rule)?.objective;
        Ok((RootRecord { zeta, strategy, objective_sum: j, residual_g1: r_g1 }, r_f0))
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let best = roots
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| if r.0.objective_sum > roots[b].0.objective_sum { i } else { b });
    let (rec, r_f0) = roots[best];
    Ok(EquilibriumSolution {
        strategy: rec.strategy,
        zeta_star: rec.zeta,
        residual_f0: r_f0,
        residual_g1: rec.residual_g1,
        price_params: PriceParams::new(params, &rec.strategy),
        n_pop: params.n_pop,
        all_roots: roots.into_iter().map(|r| r.0).collect(),
        gamma,
        zeta_breve,
        z_diamond: zd.unwrap_or(f64::NEG_INFINITY),
    })
}
