use super::GridSpec;
use crate::market::objective;
use crate::model::{ModelParams, Strategy};
use crate::numerics::golden_section_max;
use crate::par::{self, Execution};

/// Grid argmax of the insider's objective against the price implied by
/// `strat`, polished by golden-section search inside the winning cell.
///
/// The grid is given in `|z|`; for `v = 0` it is mirrored onto the negative
/// axis.
pub fn brute_force_best_response(params: &ModelParams, strat: &Strategy, v: u8, grid: &GridSpec) -> f64 {
    let sign = if v == 0 { -1.0 } else { 1.0 };
    let xs = grid.values();
    let f = |a: f64| objective(params, strat, sign * a, v).map(|t| t.objective).unwrap_or(f64::NEG_INFINITY);
    let vals = par::map(Execution::default(), &xs, |&a| f(a));
    let best = vals.iter().enumerate().fold(0, |b, (i, &x)| if x > vals[b] { i } else { b });
    let lo = xs[best.saturating_sub(1)];
    let hi = xs[(best + 1).min(xs.len() - 1)];
    if lo == hi {
        return sign * lo;
    }
    let (a, fa) = golden_section_max(f, lo, hi, 1e-12);
    if fa >= vals[best] {
        sign * a
    } else {
        sign * xs[best]
    }
}
