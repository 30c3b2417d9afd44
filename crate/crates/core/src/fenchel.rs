//! Fenchel–Legendre conjugates, Bernoulli and corrected rate functions, and
//! exposed points of the corrected rate.

use crate::cgf::CgfCurve;
use crate::error::{check_open_unit, LabError, Result};
use crate::extended::ExtendedReal;
use crate::grid::GridSpec;
use crate::numeric::x_ln_x_over_y;
use serde::Serialize;

/// Tuning for [`fenchel_conjugate_numeric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Final bracket width in `λ`.
    pub tol: f64,
    /// Hard limit on `|λ|` during bracket expansion.
    pub bound: f64,
    /// Average slope of the objective over the last expansion step above
    /// which hitting `bound` is read as a divergent supremum.
    pub divergence_slope: f64,
    pub max_iter: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { tol: 1e-10, bound: 700.0, divergence_slope: 1e-9, max_iter: 500 }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Sample of the concave objective `λ ↦ λx - f(λ)`.
#[derive(Debug, Clone, Copy)]
struct Sample {
    at: f64,
    value: f64,
}

fn check_concave(a: Sample, b: Sample, c: Sample) -> Result<()> {
    let chord = a.value + (c.value - a.value) * (b.at - a.at) / (c.at - a.at);
    let slack = 1e-9 * (1.0 + a.value.abs() + b.value.abs() + c.value.abs());
    if b.value < chord - slack {
        return Err(LabError::NonConvex {
            at: b.at,
            detail: format!("objective {} lies below its chord {}", b.value, chord),
        });
    }
    Ok(())
}

/// `sup_λ (λx - f(λ))` for a convex `f` finite on `ℝ`.
///
/// The maximiser is bracketed by doubling from `[-1, 1]` (capped at
/// `±opts.bound`), then located by golden-section search. If the objective is
/// still rising at the cap with slope above `opts.divergence_slope` the
/// supremum is `+inf`; a flatter rise means the supremum is approached
/// asymptotically and the value at the cap is returned.
pub fn fenchel_conjugate_numeric<F>(f: F, x: f64, opts: &SearchConfig) -> Result<ExtendedReal>
where
    F: Fn(f64) -> f64,
{
    if !x.is_finite() {
        return Err(LabError::invalid(format!("conjugate point {x} is not finite")));
    }
    let objective = |l: f64| Sample { at: l, value: l * x - f(l) };
    let mut best = f64::NEG_INFINITY;
    let mut track = |s: Sample| {
        best = best.max(s.value);
        s
    };

    let left = track(objective(-1.0));
    let centre = track(objective(0.0));
    let right = track(objective(1.0));
    check_concave(left, centre, right)?;

    let (lo, hi) = if right.value > centre.value || left.value > centre.value {
        let dir = if right.value > centre.value { 1.0 } else { -1.0 };
        let mut prev = centre;
        let mut cur = if dir > 0.0 { right } else { left };
        loop {
            if cur.at.abs() >= opts.bound {
                let slope = (cur.value - prev.value) / (cur.at - prev.at).abs();
                if slope > opts.divergence_slope {
                    return Ok(ExtendedReal::PosInfinity);
                }
                return Ok(ExtendedReal::Finite(best));
            }
            let next_at = dir * (2.0 * cur.at.abs()).min(opts.bound);
            let next = track(objective(next_at));
            if dir > 0.0 {
                check_concave(prev, cur, next)?;
            } else {
                check_concave(next, cur, prev)?;
            }
            if next.value <= cur.value {
                break if dir > 0.0 { (prev, next) } else { (next, prev) };
            }
            prev = cur;
            cur = next;
        }
    } else {
        (left, right)
    };

    let (mut a, mut b) = (lo, hi);
    let mut c = track(objective(b.at - INV_PHI * (b.at - a.at)));
    let mut d = track(objective(a.at + INV_PHI * (b.at - a.at)));
    for _ in 0..opts.max_iter {
        if b.at - a.at <= opts.tol {
            break;
        }
        check_concave(a, c, d)?;
        check_concave(c, d, b)?;
        if c.value >= d.value {
            b = d;
            d = c;
            c = track(objective(b.at - INV_PHI * (b.at - a.at)));
        } else {
            a = c;
            c = d;
            d = track(objective(a.at + INV_PHI * (b.at - a.at)));
        }
    }
    Ok(ExtendedReal::Finite(best))
}

/// Numerical conjugate of one of the crate's CGF curves.
pub fn conjugate_of(curve: &CgfCurve, x: f64, opts: &SearchConfig) -> Result<ExtendedReal> {
    fenchel_conjugate_numeric(|l| curve.evaluate(l), x, opts)
}

/// `I_t(x) = x ln(x/t) + (1-x) ln((1-x)/(1-t))` on `[0, 1]`, `+inf` elsewhere.
pub fn bernoulli_rate(t: f64, x: f64) -> Result<ExtendedReal> {
    check_open_unit("t", t)?;
    Ok(bernoulli_rate_unchecked(t, x))
}

pub(crate) fn bernoulli_rate_unchecked(t: f64, x: f64) -> ExtendedReal {
    if !(0.0..=1.0).contains(&x) {
        return ExtendedReal::PosInfinity;
    }
    let v = x_ln_x_over_y(x, t) + x_ln_x_over_y(1.0 - x, 1.0 - t);
    ExtendedReal::Finite(v.max(0.0))
}

/// `[p², p(2-p)]`, where the corrected rate vanishes.
pub fn flat_region(p: f64) -> (f64, f64) {
    (p * p, p * (2.0 - p))
}

/// `I(x)`: `I_{p²}` below `p²`, zero on `[p², p(2-p)]`, `I_{p(2-p)}` above.
pub fn corrected_rate(p: f64, x: f64) -> Result<ExtendedReal> {
    check_open_unit("p", p)?;
    Ok(corrected_rate_unchecked(p, x))
}

pub(crate) fn corrected_rate_unchecked(p: f64, x: f64) -> ExtendedReal {
    let (lo, hi) = flat_region(p);
    if x < lo {
        bernoulli_rate_unchecked(lo, x)
    } else if x <= hi {
        ExtendedReal::Finite(0.0)
    } else {
        bernoulli_rate_unchecked(hi, x)
    }
}

/// A closed-form rate function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateProfile {
    /// `I_t`.
    Bernoulli { t: f64 },
    /// `I = Λ*`.
    Corrected { p: f64 },
}

impl RateProfile {
    pub fn bernoulli(t: f64) -> Result<Self> {
        check_open_unit("t", t)?;
        Ok(RateProfile::Bernoulli { t })
    }

    pub fn corrected(p: f64) -> Result<Self> {
        check_open_unit("p", p)?;
        Ok(RateProfile::Corrected { p })
    }

    pub fn evaluate(&self, x: f64) -> ExtendedReal {
        match *self {
            RateProfile::Bernoulli { t } => bernoulli_rate_unchecked(t, x),
            RateProfile::Corrected { p } => corrected_rate_unchecked(p, x),
        }
    }

    pub fn finite_region(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    /// `inf_{x ∈ [lo, hi]}` of the rate. Both profiles decrease to their zero
    /// set and increase after it, so the infimum sits at the point of the
    /// interval nearest that set.
    pub fn inf_over(&self, lo: f64, hi: f64) -> ExtendedReal {
        let (zero_lo, zero_hi) = match *self {
            RateProfile::Bernoulli { t } => (t, t),
            RateProfile::Corrected { p } => flat_region(p),
        };
        let lo = lo.max(0.0);
        let hi = hi.min(1.0);
        if lo > hi {
            return ExtendedReal::PosInfinity;
        }
        let nearest = if hi < zero_lo {
            hi
        } else if lo > zero_hi {
            lo
        } else {
            return ExtendedReal::Finite(0.0);
        };
        self.evaluate(nearest)
    }
}

/// Outcome of an exposed-point query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExposedPointVerdict {
    pub point: f64,
    #[serde(rename = "exposed")]
    pub is_exposed: bool,
    pub hyperplane: Option<f64>,
    /// Smallest `(λy - I(y)) - (λx - I(x))` over the checked grid points.
    pub min_margin: Option<f64>,
    pub witness: String,
}

/// Grid points closer than this to `y` are skipped by the separation check;
/// strict convexity (`I'' ≥ 4`) already gives a margin of at least `2e-10`
/// at this distance.
pub const SEPARATION_EXCLUSION: f64 = 1e-5;

/// Required strict-separation margin.
pub const SEPARATION_MARGIN: f64 = 1e-12;

/// `λ` exposing `y` for the corrected rate:
/// `ln(y(1-p²)/((1-y)p²))` on `(0, p²)` and
/// `ln(y(1-p(2-p))/((1-y)p(2-p)))` on `(p(2-p), 1)`.
pub fn exposing_hyperplane(p: f64, y: f64) -> Result<f64> {
    check_open_unit("p", p)?;
    let (lo, hi) = flat_region(p);
    let t = if y > 0.0 && y < lo {
        lo
    } else if y > hi && y < 1.0 {
        hi
    } else {
        return Err(LabError::invalid(format!("{y} is not in (0, {lo}) ∪ ({hi}, 1); it has no exposing hyperplane")));
    };
    Ok(logit_ratio(y, t))
}

/// `ln(y(1-t)/((1-y)t))`, the slope of `I_t` at `y`.
fn logit_ratio(y: f64, t: f64) -> f64 {
    (y * (1.0 - t) / ((1.0 - y) * t)).ln()
}

/// Smallest `(λy - I(y)) - (λx - I(x))` over grid points `x` at least
/// [`SEPARATION_EXCLUSION`] away from `y`, with the worst `x`.
fn separation_margin<R>(rate: R, y: f64, lambda: f64, grid: &GridSpec) -> (f64, Option<f64>)
where
    R: Fn(f64) -> ExtendedReal,
{
    let at_y = match rate(y) {
        ExtendedReal::Finite(v) => lambda * y - v,
        ExtendedReal::PosInfinity => return (f64::NEG_INFINITY, None),
    };
    grid.points()
        .into_iter()
        .filter(|x| (x - y).abs() >= SEPARATION_EXCLUSION)
        .filter_map(|x| rate(x).finite().map(|v| (at_y - (lambda * x - v), x)))
        .fold((f64::INFINITY, None), |(m, w), (margin, x)| if margin < m { (margin, Some(x)) } else { (m, w) })
}

fn verdict_from_margin(y: f64, lambda: f64, margin: f64, worst: Option<f64>) -> ExposedPointVerdict {
    let is_exposed = margin > SEPARATION_MARGIN;
    let witness = match (is_exposed, worst) {
        (true, Some(x)) => format!("strict separation on grid, tightest at x = {x} with margin {margin:e}"),
        (true, None) => "no other finite grid point".to_string(),
        (false, Some(x)) => format!("separation fails at x = {x} with margin {margin:e}"),
        (false, None) => "rate is infinite at the point".to_string(),
    };
    ExposedPointVerdict {
        point: y,
        is_exposed,
        hyperplane: is_exposed.then_some(lambda),
        min_margin: margin.is_finite().then_some(margin),
        witness,
    }
}

/// Classifies `y` as an exposed point of the corrected rate `I = Λ*`.
///
/// Points of `(0, p²) ∪ (p(2-p), 1)` get their exposing hyperplane and a grid
/// strict-separation check. On the flat region the only candidate slope is
/// `λ = 0`, and a second grid point where `I` also vanishes shows the maximum
/// is not unique. Outside `(0, 1)`, `I(y) = +inf`.
pub fn exposed_point_test(p: f64, y: f64, grid: &GridSpec) -> Result<ExposedPointVerdict> {
    check_open_unit("p", p)?;
    if !(y > 0.0 && y < 1.0) {
        return Ok(ExposedPointVerdict {
            point: y,
            is_exposed: false,
            hyperplane: None,
            min_margin: None,
            witness: "I(y) = +inf outside (0, 1)".to_string(),
        });
    }
    let (lo, hi) = flat_region(p);
    if (lo..=hi).contains(&y) {
        let second = grid
            .points()
            .into_iter()
            .filter(|x| (x - y).abs() > 1e-9 && (lo..=hi).contains(x))
            .find(|x| corrected_rate_unchecked(p, *x).to_f64().abs() <= SEPARATION_MARGIN);
        let witness = match second {
            Some(x) => format!("flat region [{lo}, {hi}]: lambda = 0 is the only candidate and x = {x} attains the same value"),
            None => format!("flat region [{lo}, {hi}]: lambda = 0 is the only candidate and every point of the region attains the maximum"),
        };
        return Ok(ExposedPointVerdict {
            point: y,
            is_exposed: false,
            hyperplane: None,
            min_margin: Some(0.0),
            witness,
        });
    }
    let lambda = exposing_hyperplane(p, y)?;
    let (margin, worst) = separation_margin(|x| corrected_rate_unchecked(p, x), y, lambda, grid);
    Ok(verdict_from_margin(y, lambda, margin, worst))
}

/// Exposed-point query for `Γ* = I_p` (since `Γ = Λ_p` here). The two extra
/// conditions on the exposing hyperplane (the limit defining `Γ` exists and
/// `Γ(tλ) < ∞` for some `t > 1`) hold for every `λ` because `γ_n → Λ_p` and
/// `dom Γ = ℝ`; they are reported as flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaStarVerdict {
    pub verdict: ExposedPointVerdict,
    pub limit_exists: bool,
    pub finite_beyond_one: bool,
}

pub fn gamma_star_exposed_test(p: f64, y: f64, grid: &GridSpec) -> Result<GammaStarVerdict> {
    check_open_unit("p", p)?;
    let verdict = if y > 0.0 && y < 1.0 {
        let lambda = logit_ratio(y, p);
        let (margin, worst) = separation_margin(|x| bernoulli_rate_unchecked(p, x), y, lambda, grid);
        verdict_from_margin(y, lambda, margin, worst)
    } else {
        ExposedPointVerdict {
            point: y,
            is_exposed: false,
            hyperplane: None,
            min_margin: None,
            witness: "I_p(y) = +inf outside (0, 1)".to_string(),
        }
    };
    Ok(GammaStarVerdict { verdict, limit_exists: true, finite_beyond_one: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fin(v: ExtendedReal) -> f64 {
        v.finite().expect("finite value")
    }

    #[test]
    fn conjugate_examples() {
        let opts = SearchConfig::default();
        let half = CgfCurve::bernoulli(0.5).unwrap();
        assert_abs_diff_eq!(fin(conjugate_of(&half, 0.5, &opts).unwrap()), 0.0, epsilon = 1e-12);
        let cf = CgfCurve::chen_feng(0.5).unwrap();
        assert_abs_diff_eq!(fin(conjugate_of(&cf, 0.5, &opts).unwrap()), 0.0, epsilon = 1e-12);
        assert_eq!(conjugate_of(&half, 1.2, &opts).unwrap(), ExtendedReal::PosInfinity);
        assert_eq!(conjugate_of(&half, -0.01, &opts).unwrap(), ExtendedReal::PosInfinity);
    }

    #[test]
    fn conjugate_at_support_endpoints_is_finite() {
        let opts = SearchConfig::default();
        let c = CgfCurve::bernoulli(0.3).unwrap();
        assert_abs_diff_eq!(fin(conjugate_of(&c, 1.0, &opts).unwrap()), -(0.3f64.ln()), epsilon = 1e-12);
        assert_abs_diff_eq!(fin(conjugate_of(&c, 0.0, &opts).unwrap()), -(0.7f64.ln()), epsilon = 1e-12);
    }

    #[test]
    fn conjugate_of_quadratic() {
        // (λ²/2)* = x²/2
        let opts = SearchConfig::default();
        for x in [-3.0, -0.5, 0.0, 2.0, 40.0] {
            let v = fin(fenchel_conjugate_numeric(|l| 0.5 * l * l, x, &opts).unwrap());
            assert_abs_diff_eq!(v, 0.5 * x * x, epsilon = 1e-9);
        }
    }

    #[test]
    fn conjugate_rejects_non_convex() {
        let opts = SearchConfig::default();
        let err = fenchel_conjugate_numeric(|l| l.powi(4) - 2.0 * l * l, 0.0, &opts).unwrap_err();
        assert!(matches!(err, LabError::NonConvex { .. }));
        let err = fenchel_conjugate_numeric(|l: f64| (3.0 * l).cos(), 0.1, &opts).unwrap_err();
        assert!(matches!(err, LabError::NonConvex { .. }));
    }

    #[test]
    fn bernoulli_rate_examples() {
        assert_abs_diff_eq!(fin(bernoulli_rate(0.5, 1.0).unwrap()), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(fin(bernoulli_rate(0.5, 0.2).unwrap()), 0.19274475702175743, epsilon = 1e-14);
        assert_abs_diff_eq!(fin(bernoulli_rate(0.25, 0.2).unwrap()), 0.007002106647214986, epsilon = 1e-14);
        assert_eq!(bernoulli_rate(0.5, 1.01).unwrap(), ExtendedReal::PosInfinity);
        assert_eq!(bernoulli_rate(0.5, -1e-9).unwrap(), ExtendedReal::PosInfinity);
        assert!(bernoulli_rate(1.0, 0.5).is_err());
    }

    #[test]
    fn corrected_rate_examples() {
        assert_eq!(corrected_rate(0.5, 0.5).unwrap(), ExtendedReal::Finite(0.0));
        assert_abs_diff_eq!(fin(corrected_rate(0.5, 0.2).unwrap()), 0.007002106647214986, epsilon = 1e-14);
        assert_abs_diff_eq!(fin(corrected_rate(0.5, 0.9).unwrap()), 0.07246032792714366, epsilon = 1e-14);
        assert!(corrected_rate(0.0, 0.5).is_err());
    }

    #[test]
    fn corrected_rate_agrees_with_numeric_conjugate() {
        let opts = SearchConfig::default();
        let cf = CgfCurve::chen_feng(0.3).unwrap();
        for k in 0..=24 {
            let x = -0.1 + 0.05 * k as f64;
            let num = conjugate_of(&cf, x, &opts).unwrap();
            let closed = corrected_rate(0.3, x).unwrap();
            assert!(num.distance(closed) <= 1e-8, "x = {x}: {num} vs {closed}");
        }
    }

    #[test]
    fn inf_over_intervals() {
        let ip = RateProfile::bernoulli(0.5).unwrap();
        assert_eq!(ip.inf_over(0.0, 1.0), ExtendedReal::Finite(0.0));
        assert_eq!(ip.inf_over(0.8, 1.0), ip.evaluate(0.8));
        assert_eq!(ip.inf_over(0.0, 0.1), ip.evaluate(0.1));
        assert_eq!(ip.inf_over(1.02, 1.1), ExtendedReal::PosInfinity);
        let i = RateProfile::corrected(0.5).unwrap();
        assert_eq!(i.inf_over(0.3, 0.9), ExtendedReal::Finite(0.0));
        assert_eq!(i.inf_over(0.05, 0.2), i.evaluate(0.2));
    }

    #[test]
    fn hyperplane_examples() {
        assert_abs_diff_eq!(exposing_hyperplane(0.5, 0.1).unwrap(), -1.0986122886681098, epsilon = 1e-14);
        assert_abs_diff_eq!(exposing_hyperplane(0.5, 0.9).unwrap(), 1.0986122886681098, epsilon = 1e-14);
        let edge = exposing_hyperplane(0.5, 0.2499).unwrap();
        assert!(edge < 0.0 && edge > -1e-3, "{edge}");
        assert_abs_diff_eq!(edge, -0.0005334044665742243, epsilon = 1e-14);
        assert!(exposing_hyperplane(0.5, 0.5).is_err());
        assert!(exposing_hyperplane(0.5, 0.0).is_err());
        assert!(exposing_hyperplane(0.5, 1.0).is_err());
    }

    #[test]
    fn exposed_examples() {
        let grid = GridSpec::new(0.0, 1.0, 0.001).unwrap();
        let v = exposed_point_test(0.5, 0.1, &grid).unwrap();
        assert!(v.is_exposed);
        assert_abs_diff_eq!(v.hyperplane.unwrap(), -1.0986122886681098, epsilon = 1e-14);
        assert!(v.min_margin.unwrap() > SEPARATION_MARGIN);
        let flat = exposed_point_test(0.5, 0.5, &grid).unwrap();
        assert!(!flat.is_exposed && flat.hyperplane.is_none());
        assert!(flat.witness.contains("x = 0.25"), "{}", flat.witness);
        let outside = exposed_point_test(0.5, 1.5, &grid).unwrap();
        assert!(!outside.is_exposed);
    }

    #[test]
    fn gamma_star_exposes_every_interior_point() {
        let grid = GridSpec::new(0.0, 1.0, 0.01).unwrap();
        for y in [0.05, 0.25, 0.5, 0.75, 0.97] {
            let v = gamma_star_exposed_test(0.5, y, &grid).unwrap();
            assert!(v.verdict.is_exposed, "{y}: {:?}", v.verdict);
            assert!(v.limit_exists && v.finite_beyond_one);
        }
        assert!(!gamma_star_exposed_test(0.5, 1.0, &grid).unwrap().verdict.is_exposed);
    }
}
