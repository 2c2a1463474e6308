use super::GridSpec;
use crate::market::{objective, price};
use crate::model::{ModelParams, Strategy};
use crate::numerics::golden_section_max;
use crate::par::{self, Execution};

/// Price half of a candidate ε-equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CandidatePrice {
    /// price held at this constant
    Constant(f64),
    /// the rational price implied by the candidate strategy itself
    Rational,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    /// strategy in scaled units; the traded orders are `N^γ` times this
    pub strategy_scaled: Strategy,
    pub price: CandidatePrice,
}

/// Grids for the two suprema, in scaled units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyGrids {
    /// `|z̃|` grid, as a multiple of `|Z̃(v)|`
    pub z_rel: GridSpec,
    /// `ỹ` grid, as a multiple of `σ`
    pub y_rel: GridSpec,
}

impl Default for CertifyGrids {
    fn default() -> Self {
        Self { z_rel: GridSpec::geometric(1e-3, 1e2, 501), y_rel: GridSpec::linear(-20.0, 20.0, 801) }
    }
}

/// ε for which the candidate is an ε-equilibrium: the larger of the
/// insider's best-response gap (scaled by `N^{−γ}`) and the weighted
/// mispricing `sup |p − P_N(N^γ Z̃; √N ỹ)| / (1 + |ỹ|)`.
pub fn certify_epsilon_equilibrium(params: &ModelParams, candidate: &Candidate, grids: &CertifyGrids) -> f64 {
    let gamma = params.gamma();
    let n = params.n_pop as f64;
    let ng = n.powf(gamma);
    let traded = candidate.strategy_scaled.scaled(ng);
    let (chi, chi0) = (params.penalty.chi, params.penalty.chi0());

    let scaled_obj = |zt: f64, v: u8| -> f64 {
        let z = ng * zt;
        match candidate.price {
            CandidatePrice::Constant(pc) => {
                let lam = params.hazard.lambda_n(params.n_pop, z);
                let s = (-lam).exp();
                ((v as f64 - pc) * z * (chi * s - chi0) + (-lam).exp_m1() * params.penalty.c0(z)) / ng
            }
            CandidatePrice::Rational => {
                objective(params, &traded, z, v).map(|t| t.objective / ng).unwrap_or(f64::NEG_INFINITY)
            }
        }
    };

    let mut gap = 0.0f64;
    for v in [0u8, 1] {
        let zc = candidate.strategy_scaled.get(v);
        let sign = zc.signum();
        let xs: Vec<f64> = grids.z_rel.values().into_iter().map(|r| r * zc.abs()).collect();
        let vals = par::map(Execution::default(), &xs, |&a| scaled_obj(sign * a, v));
        let best = vals.iter().enumerate().fold(0, |b, (i, &x)| if x > vals[b] { i } else { b });
        let lo = xs[best.saturating_sub(1)];
        let hi = xs[(best + 1).min(xs.len() - 1)];
        let (_, refined) = golden_section_max(|a| scaled_obj(sign * a, v), lo, hi, 1e-13);
        let sup = refined.max(vals[best]);
        gap = gap.max(sup - scaled_obj(zc, v));
    }

    let mispricing = match candidate.price {
        CandidatePrice::Rational => 0.0,
        CandidatePrice::Constant(pc) => {
            let sn = n.sqrt();
            grids
                .y_rel
                .values()
                .iter()
                .map(|&r| {
                    let yt = r * params.sigma;
                    (pc - price(params, &traded, sn * yt)).abs() / (1.0 + yt.abs())
                })
                .fold(0.0, f64::max)
        }
    };
    gap.max(mispricing)
}
