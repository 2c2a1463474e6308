//! Special functions and the generic kernels (quadrature, bracketing, 1-D
//! root finding and maximisation) everything else is built on.

use crate::error::{Error, Result};

/// Default number of Gauss–Hermite nodes.
pub const DEFAULT_NODES: usize = 201;
/// Default tolerance handed to [`find_root`].
pub const DEFAULT_TOL: f64 = 1e-12;
/// Iteration cap for the bracketed root finder.
pub const MAX_ITER: usize = 200;
/// Largest span [`expand_bracket`] will explore before giving up.
pub const SPAN_CAP: f64 = 1e12;

/// Complementary error function.
///
/// Backed by `libm` (a port of the musl/FreeBSD implementation), which is
/// accurate to within a couple of ulps over the whole real line.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Principal branch of the Lambert W function, `w e^w = x` with `w >= -1`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    const INV_E: f64 = 0.367_879_441_171_442_33;
    if x.is_nan() || x < -INV_E {
        return Err(Error::Domain(format!("lambert_w0 needs x >= -1/e, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let p2 = 2.0 * (std::f64::consts::E * x + 1.0);
    if p2 <= 0.0 {
        return Ok(-1.0);
    }
    // branch-point series in p = sqrt(2(ex+1)) near -1/e, log(1+x) elsewhere
    let mut w = if x < -0.25 {
        let p = p2.sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        (1.0 + x).ln()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// Probabilists' Gauss–Hermite rule with weights normalised to sum to one,
/// so that `Σ wᵢ f(xᵢ) ≈ E[f(X)]` for `X ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds an `n`-point rule.
    ///
    /// Works on the orthonormal Hermite recurrence, which stays finite for
    /// several hundred nodes (the unnormalised one overflows long before
    /// that). Positive roots are isolated by a sign scan finer than the
    /// smallest root spacing and then polished by Brent.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
        }
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let nf = n as f64;
        // (p_n(z), p_{n-1}(z)) of the orthonormal physicists' family, sans e^{-z²/2}
        let eval = |z: f64| {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            (p1, p2)
        };
        let zmax = (2.0 * nf + 1.0).sqrt() + 1.0;
        let h = std::f64::consts::PI / (2.0 * nf + 1.0).sqrt() / 16.0;
        let steps = (zmax / h).ceil() as usize;
        let mut pos = Vec::with_capacity(n / 2);
        // start just off zero so the odd-n root at the origin is not counted twice
        let mut a = 0.5 * h;
        let mut fa = eval(a).0;
        for k in 1..=steps {
            let b = 0.5 * h + k as f64 * h;
            let fb = eval(b).0;
            if fa == 0.0 {
                pos.push(a);
            } else if fa.signum() != fb.signum() && fb != 0.0 {
                let r = find_root_with(|z| eval(z).0, Bracket::new(a, b, fa, fb)?, RootOptions::x_only(0.0))?;
                pos.push(r);
            }
            a = b;
            fa = fb;
        }
        let mut x: Vec<f64> = pos.iter().map(|&r| -r).chain(pos.iter().copied()).collect();
        if n % 2 == 1 {
            x.push(0.0);
        }
        if x.len() != n {
            return Err(Error::NoConvergence { iterations: steps, best_x: x.len() as f64, best_f: nf });
        }
        x.sort_by(|a, b| a.total_cmp(b));
        // w ∝ 1 / (n p_{n-1}(x)²); constant factors vanish in the normalisation
        let w: Vec<f64> = x
            .iter()
            .map(|&z| {
                let q = eval(z).1;
                1.0 / (q * q)
            })
            .collect();
        let total: f64 = w.iter().sum();
        let sqrt2 = std::f64::consts::SQRT_2;
        Ok(Self { nodes: x.iter().map(|z| z * sqrt2).collect(), weights: w.iter().map(|wi| wi / total).collect() })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ wᵢ f(xᵢ)` over standard-normal nodes.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        default_rule().clone()
    }
}

/// Shared 201-node rule, built once.
pub fn default_rule() -> &'static QuadratureRule {
    use std::sync::OnceLock;
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| QuadratureRule::gauss_hermite(DEFAULT_NODES).expect("default rule"))
}

/// `E[f(W)]` for `W ~ N(0, sigma²)`.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(f: F, sigma: f64, rule: &QuadratureRule) -> f64 {
    rule.expect(|x| f(sigma * x))
}

/// An interval known to straddle a sign change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        let (lo, hi, f_lo, f_hi) = if lo <= hi { (lo, hi, f_lo, f_hi) } else { (hi, lo, f_hi, f_lo) };
        let opposite = (f_lo < 0.0 && f_hi > 0.0) || (f_lo > 0.0 && f_hi < 0.0);
        if !(lo < hi) || !opposite {
            return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
        }
        Ok(Self { lo, hi, f_lo, f_hi })
    }

    /// Evaluates `f` at both ends and checks the sign change.
    pub fn from_fn<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> Result<Self> {
        let f_lo = f(lo);
        let f_hi = f(hi);
        Self::new(lo, hi, f_lo, f_hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Stopping rule for [`find_root_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// stop once the bracket is narrower than `x_abs + x_rel·|x|`
    pub x_abs: f64,
    pub x_rel: f64,
    /// stop as soon as `|f(x)| <= f_abs` (0 disables)
    pub f_abs: f64,
    pub max_iter: usize,
}

impl RootOptions {
    /// The contract of [`find_root`]: `|f| <= tol` or width `<= tol·max(1, |x|)`.
    pub fn from_tol(tol: f64) -> Self {
        Self { x_abs: tol, x_rel: tol, f_abs: tol, max_iter: MAX_ITER }
    }

    /// Pure argument tolerance, running to full precision otherwise.
    pub fn x_only(x_abs: f64) -> Self {
        Self { x_abs, x_rel: 4.0 * f64::EPSILON, f_abs: 0.0, max_iter: MAX_ITER }
    }
}

/// Brent's method on a valid bracket with the default contract.
pub fn find_root<F: FnMut(f64) -> f64>(f: F, bracket: Bracket, tol: f64) -> Result<f64> {
    find_root_with(f, bracket, RootOptions::from_tol(tol))
}

/// Brent's method (inverse quadratic interpolation with a bisection
/// safeguard). The bracket shrinks monotonically.
pub fn find_root_with<F: FnMut(f64) -> f64>(mut f: F, bracket: Bracket, opts: RootOptions) -> Result<f64> {
    let Bracket { lo, hi, f_lo, f_hi } = Bracket::new(bracket.lo, bracket.hi, bracket.f_lo, bracket.f_hi)?;
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, f_lo, f_hi);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..opts.max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * (opts.x_abs.max(opts.x_rel * b.abs()));
        let xm = 0.5 * (c - b);
        if fb == 0.0 || fb.abs() <= opts.f_abs || xm.abs() <= tol1 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::Domain(format!("function returned NaN at x = {b}")));
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, best_x: b, best_f: fb })
}

/// Search direction for [`expand_bracket`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Negative,
    Positive,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Negative => -1.0,
            Direction::Positive => 1.0,
        }
    }
}

/// Walks away from `seed` with doubling steps until `f` changes sign.
pub fn expand_bracket<F: FnMut(f64) -> f64>(f: F, seed: f64, direction: Direction) -> Result<Bracket> {
    expand_bracket_capped(f, seed, direction, SPAN_CAP)
}

pub fn expand_bracket_capped<F: FnMut(f64) -> f64>(
    mut f: F,
    seed: f64,
    direction: Direction,
    cap: f64,
) -> Result<Bracket> {
    let mut a = seed;
    let mut fa = f(a);
    if !fa.is_finite() {
        return Err(Error::Domain(format!("function not finite at seed {seed}")));
    }
    if fa == 0.0 {
        return Err(Error::Domain(format!("seed {seed} is itself a zero")));
    }
    let mut step = seed.abs().max(1.0);
    loop {
        let b = seed + direction.sign() * step;
        if (b - seed).abs() > cap {
            return Err(Error::SpanCap { seed, cap });
        }
        let fb = f(b);
        if fb.is_nan() {
            return Err(Error::Domain(format!("function returned NaN at x = {b}")));
        }
        if fb == 0.0 || (fb > 0.0) != (fa > 0.0) {
            let (lo, hi, f_lo, f_hi) = if a < b { (a, b, fa, fb) } else { (b, a, fb, fa) };
            return Ok(Bracket { lo, hi, f_lo, f_hi });
        }
        a = b;
        fa = fb;
        step *= 2.0;
    }
}

/// Golden-section maximisation of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a).abs() <= tol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `n` points spaced geometrically from `lo` to `hi` (both positive).
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (la, lb) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Numerically stable logistic `1 / (1 + e^{-u})`.
#[inline]
pub fn expit(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}
