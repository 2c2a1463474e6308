use super::limiting_objective;
use crate::model::{HazardModel, ModelParams, PenaltyFamily, PenaltyModel};
use crate::numerics::{geometric_grid, linear_grid};

/// Non-uniqueness configuration: concave log hazard, bounded piecewise
/// penalty, `β = 0`, `χ = 1`.
pub fn example3_params(p: f64) -> ModelParams {
    ModelParams {
        p,
        sigma: 1.0,
        n_pop: 1,
        hazard: HazardModel::log_one_plus(0.0),
        penalty: PenaltyModel::new(1.0, PenaltyFamily::PiecewiseExample3),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example3Data {
    /// `(z̃, J̃)` on `(−∞, −6] ∪ [6/5, ∞)`
    pub tail: Vec<(f64, f64)>,
    /// `(z̃, J̃)` on `(−6, 0) ∪ (0, 6/5)`
    pub interior: Vec<(f64, f64)>,
    pub tail_max_deviation: f64,
    pub interior_max: f64,
}

/// Evaluates the limiting objective of the non-uniqueness configuration on
/// the flat tails and on the interior.
pub fn example3_regression(p: f64) -> Example3Data {
    let params = example3_params(p);
    let tail_neg = geometric_grid(6.0, 1e6, 200).into_iter().map(|a| (-a, 0u8));
    let tail_pos = geometric_grid(1.2, 1e6, 200).into_iter().map(|a| (a, 1u8));
    let tail: Vec<(f64, f64)> =
        tail_neg.chain(tail_pos).map(|(z, v)| (z, limiting_objective(&params, z, v))).collect();
    let int_neg = linear_grid(-6.0, 0.0, 402)[1..401].to_vec().into_iter().map(|z| (z, 0u8));
    let int_pos = linear_grid(0.0, 1.2, 402)[1..401].to_vec().into_iter().map(|z| (z, 1u8));
    let interior: Vec<(f64, f64)> =
        int_neg.chain(int_pos).map(|(z, v)| (z, limiting_objective(&params, z, v))).collect();
    Example3Data {
        tail_max_deviation: tail.iter().map(|t| (t.1 - 0.25).abs()).fold(0.0, f64::max),
        interior_max: interior.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max),
        tail,
        interior,
    }
}
