//! Exact finite-n large deviation rates for `V = P(2 - P)` and the
//! P-i.i.d. Bernoulli(p) sample mean.
//!
//! Every probability is a binomial sum evaluated in log-space; the capacity
//! rate is `(1/n) ln[q(2 - q)]` with `q = P(X̄_n ∈ event)`.

use crate::binomial::BinomialTable;
use crate::cgf::{lambda_chen_feng_unchecked, GammaApproximant};
use crate::error::{check_open_unit, LabError, Result};
use crate::extended::ExtendedReal;
use crate::fenchel::{bernoulli_rate_unchecked, corrected_rate_unchecked, RateProfile};
use crate::grid::GridSpec;
use crate::numeric::log_sum_exp;
use serde::{Serialize, Serializer};

/// Serializes floats as JSON numbers and infinities as `"inf"` / `"-inf"`.
pub fn serialize_extended_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *v == f64::INFINITY {
        s.serialize_str("inf")
    } else if *v == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_f64(*v)
    }
}

/// `{x : lower ◇ x ◇ upper}` where each `◇` is `<` or `≤` per the flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalEvent {
    pub lower: f64,
    pub upper: f64,
    pub lower_open: bool,
    pub upper_open: bool,
}

/// Snaps `t` to the nearest integer when it is within rounding noise of it.
fn snap(t: f64) -> (f64, bool) {
    let r = t.round();
    if (t - r).abs() <= 1e-9 * t.abs().max(1.0) {
        (r, true)
    } else {
        (t, false)
    }
}

impl IntervalEvent {
    pub fn new(lower: f64, upper: f64, lower_open: bool, upper_open: bool) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(LabError::invalid(format!("interval bounds {lower}, {upper} are not ordered")));
        }
        Ok(IntervalEvent { lower, upper, lower_open, upper_open })
    }

    pub fn open(lower: f64, upper: f64) -> Result<Self> {
        IntervalEvent::new(lower, upper, true, true)
    }

    pub fn closed(lower: f64, upper: f64) -> Result<Self> {
        IntervalEvent::new(lower, upper, false, false)
    }

    /// `(c, +inf)`.
    pub fn above(c: f64) -> Result<Self> {
        IntervalEvent::new(c, f64::INFINITY, true, true)
    }

    pub fn is_closed(&self) -> bool {
        !self.lower_open && !self.upper_open
    }

    pub fn contains(&self, x: f64) -> bool {
        let lo = if self.lower_open { x > self.lower } else { x >= self.lower };
        let hi = if self.upper_open { x < self.upper } else { x <= self.upper };
        lo && hi
    }

    /// Inclusive range of `j ∈ 0..=n` with `j/n` in the event. Boundary lattice
    /// points count only when the corresponding side is closed.
    pub fn lattice_range(&self, n: u64) -> Option<(u64, u64)> {
        let nf = n as f64;
        let first = if self.lower == f64::NEG_INFINITY {
            0.0
        } else {
            let (t, exact) = snap(nf * self.lower);
            if exact && self.lower_open {
                t + 1.0
            } else {
                t.ceil()
            }
        };
        let last = if self.upper == f64::INFINITY {
            nf
        } else {
            let (t, exact) = snap(nf * self.upper);
            if exact && self.upper_open {
                t - 1.0
            } else {
                t.floor()
            }
        };
        let first = first.max(0.0);
        let last = last.min(nf);
        (first <= last).then_some((first as u64, last as u64))
    }
}

/// Sorted, disjoint lattice ranges covered by a union of intervals.
fn union_ranges(events: &[IntervalEvent], n: u64) -> Vec<(u64, u64)> {
    let mut ranges: Vec<(u64, u64)> = events.iter().filter_map(|e| e.lattice_range(n)).collect();
    ranges.sort_unstable();
    let mut merged: Vec<(u64, u64)> = Vec::with_capacity(ranges.len());
    for (a, b) in ranges {
        match merged.last_mut() {
            Some(last) if a <= last.1 + 1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

fn log_prob_on(table: &BinomialTable, events: &[IntervalEvent]) -> f64 {
    let pmf = table.log_pmf();
    log_sum_exp(union_ranges(events, table.n()).into_iter().flat_map(|(a, b)| (a..=b).map(|j| pmf[j as usize])))
        .min(0.0)
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(LabError::invalid("n must be at least 1"))
    } else {
        Ok(())
    }
}

/// `ln P(S_n/n ∈ event)`; `-inf` when no lattice point falls in the event.
pub fn log_interval_prob(p: f64, n: u64, event: &IntervalEvent) -> Result<f64> {
    log_union_prob(p, n, std::slice::from_ref(event))
}

/// `ln P(S_n/n ∈ ∪ events)`.
pub fn log_union_prob(p: f64, n: u64, events: &[IntervalEvent]) -> Result<f64> {
    check_n(n)?;
    let table = BinomialTable::new(n, p)?;
    Ok(log_prob_on(&table, events))
}

/// `(1/n) ln[q(2 - q)]` from `ln q`, with `ln(2 - q) = ln 2 + ln(1 - q/2)`.
pub fn capacity_rate_from_log_prob(log_q: f64, n: u64) -> f64 {
    if log_q == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let q = log_q.exp();
    (log_q + std::f64::consts::LN_2 + (-0.5 * q).ln_1p()) / n as f64
}

/// `(1/n) ln V(X̄_n ∈ event)`; `-inf` for an empty lattice intersection.
pub fn finite_n_capacity_rate(p: f64, n: u64, event: &IntervalEvent) -> Result<f64> {
    finite_n_capacity_rate_union(p, n, std::slice::from_ref(event))
}

pub fn finite_n_capacity_rate_union(p: f64, n: u64, events: &[IntervalEvent]) -> Result<f64> {
    Ok(capacity_rate_from_log_prob(log_union_prob(p, n, events)?, n))
}

/// Verdict thresholds for [`counterexample_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictThresholds {
    pub tol_true: f64,
    pub sep_min: f64,
    pub n_min: u64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        VerdictThresholds { tol_true: 0.02, sep_min: 0.15, n_min: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdpRow {
    pub n: u64,
    /// `ln P(X̄_n ∈ event)`.
    #[serde(serialize_with = "serialize_extended_f64")]
    pub q_log: f64,
    /// `(1/n) ln V(X̄_n ∈ event)`.
    #[serde(serialize_with = "serialize_extended_f64")]
    pub rate: f64,
    pub empty: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictMargins {
    /// Row the verdict is based on.
    pub n: u64,
    #[serde(serialize_with = "serialize_extended_f64")]
    pub distance_true: f64,
    #[serde(serialize_with = "serialize_extended_f64")]
    pub distance_refuted: f64,
}

/// Finite-n capacity rates of `{X̄_n ∈ (a, b)}` against the true limit
/// `-I_p(b)` and the limit `-I_{p²}(b)` the refuted lower bound would force.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdpReport {
    pub p: f64,
    pub a: f64,
    pub b: f64,
    #[serde(skip)]
    pub event: IntervalEvent,
    pub rows: Vec<LdpRow>,
    pub target_true: f64,
    pub target_refuted: f64,
    pub tol_true: f64,
    pub sep_min: f64,
    pub n_min: u64,
    pub verdict: Verdict,
    pub margins: Option<VerdictMargins>,
}

pub fn counterexample_report(
    p: f64,
    a: f64,
    b: f64,
    n_list: &[u64],
    thresholds: &VerdictThresholds,
) -> Result<LdpReport> {
    check_open_unit("p", p)?;
    if !(0.0 < a && a < b && b < p * p) {
        return Err(LabError::invalid(format!("need 0 < a < b < p² = {}, got a = {a}, b = {b}", p * p)));
    }
    if n_list.is_empty() {
        return Err(LabError::invalid("n list is empty"));
    }
    let event = IntervalEvent::open(a, b)?;
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let rows = ns
        .iter()
        .map(|&n| {
            let q_log = log_interval_prob(p, n, &event)?;
            Ok(LdpRow { n, q_log, rate: capacity_rate_from_log_prob(q_log, n), empty: q_log == f64::NEG_INFINITY })
        })
        .collect::<Result<Vec<_>>>()?;
    // both rates decrease on [0, p²] ⊃ (a, b), so the infimum over (a, b) is at b
    let target_true = bernoulli_rate_unchecked(p, b).neg_f64();
    let target_refuted = bernoulli_rate_unchecked(p * p, b).neg_f64();
    let last = *rows.last().expect("nonempty n list");
    let (verdict, margins) = if last.n < thresholds.n_min {
        (Verdict::Fail, None)
    } else {
        let distance_true = (last.rate - target_true).abs();
        let distance_refuted = (last.rate - target_refuted).abs();
        let pass = distance_true <= thresholds.tol_true && distance_refuted >= thresholds.sep_min;
        (
            if pass { Verdict::Pass } else { Verdict::Fail },
            Some(VerdictMargins { n: last.n, distance_true, distance_refuted }),
        )
    };
    Ok(LdpReport {
        p,
        a,
        b,
        event,
        rows,
        target_true,
        target_refuted,
        tol_true: thresholds.tol_true,
        sep_min: thresholds.sep_min,
        n_min: thresholds.n_min,
        verdict,
        margins,
    })
}

/// `ln(2(n+1))/n`: the capacity factor `V ≤ 2P` plus at most `n+1` lattice
/// points, each with `P(S_n = j) ≤ e^{-n I_p(j/n)}`.
pub fn upper_bound_slack(n: u64) -> f64 {
    (2.0 * (n as f64 + 1.0)).ln() / n as f64
}

/// `bound - value` with `-inf` values treated as always satisfied.
fn margin(bound: f64, value: f64) -> f64 {
    if value == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        bound - value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBoundReport {
    pub p: f64,
    pub n: u64,
    pub events: Vec<IntervalEvent>,
    #[serde(serialize_with = "serialize_extended_f64")]
    pub rate: f64,
    /// `inf_F I_p`.
    pub inf_bernoulli: ExtendedReal,
    /// `inf_F I`, the weaker corrected-rate bound.
    pub inf_corrected: ExtendedReal,
    pub slack: f64,
    #[serde(serialize_with = "serialize_extended_f64")]
    pub bound: f64,
    #[serde(serialize_with = "serialize_extended_f64")]
    pub corrected_bound: f64,
    #[serde(serialize_with = "serialize_extended_f64")]
    pub margin: f64,
    #[serde(serialize_with = "serialize_extended_f64")]
    pub corrected_margin: f64,
    pub holds: bool,
}

/// `(1/n) ln V(X̄_n ∈ F) ≤ -inf_F I_p + ln(2(n+1))/n` for a closed union `F`.
pub fn upper_bound_check(p: f64, closed: &[IntervalEvent], n: u64) -> Result<UpperBoundReport> {
    check_open_unit("p", p)?;
    if closed.is_empty() {
        return Err(LabError::invalid("closed set F is empty"));
    }
    for e in closed {
        if !e.is_closed() {
            return Err(LabError::invalid("upper bound check needs closed intervals"));
        }
        if e.lower < -0.1 - 1e-12 || e.upper > 1.1 + 1e-12 {
            return Err(LabError::invalid(format!("interval [{}, {}] leaves [-0.1, 1.1]", e.lower, e.upper)));
        }
    }
    let rate = finite_n_capacity_rate_union(p, n, closed)?;
    let infimum = |profile: RateProfile| {
        closed.iter().map(|e| profile.inf_over(e.lower, e.upper)).fold(ExtendedReal::PosInfinity, ExtendedReal::min)
    };
    let inf_bernoulli = infimum(RateProfile::Bernoulli { t: p });
    let inf_corrected = infimum(RateProfile::Corrected { p });
    let slack = upper_bound_slack(n);
    let bound = inf_bernoulli.neg_f64() + slack;
    let corrected_bound = inf_corrected.neg_f64() + slack;
    let margin_main = margin(bound, rate);
    Ok(UpperBoundReport {
        p,
        n,
        events: closed.to_vec(),
        rate,
        inf_bernoulli,
        inf_corrected,
        slack,
        bound,
        corrected_bound,
        margin: margin_main,
        corrected_margin: margin(corrected_bound, rate),
        holds: margin_main >= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TightnessRow {
    pub n: u64,
    pub lambda: f64,
    /// `(1/n) ln V(X̄_n > c)`.
    #[serde(serialize_with = "serialize_extended_f64")]
    pub lhs: f64,
    /// `Λ(λ) - λc`.
    pub rhs: f64,
    /// `γ_n(λ) - λc`, the sharper exact Markov bound.
    pub gamma_rhs: f64,
    /// `-λc + max(Λ(-λ), Λ(λ))`.
    pub envelope: f64,
    #[serde(serialize_with = "serialize_extended_f64")]
    pub margin: f64,
    #[serde(serialize_with = "serialize_extended_f64")]
    pub gamma_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessReport {
    pub p: f64,
    pub c: f64,
    pub rows: Vec<TightnessRow>,
    pub holds: bool,
}

/// Exact Chernoff inequality `(1/n) ln V(X̄_n > c) ≤ Λ(λ) - λc` obtained from
/// Markov's inequality and negative dependence.
pub fn tightness_bound_check(p: f64, c: f64, lambdas: &[f64], n_list: &[u64]) -> Result<TightnessReport> {
    check_open_unit("p", p)?;
    let upper_mean = p * (2.0 - p);
    if c.is_nan() || c <= upper_mean {
        return Err(LabError::invalid(format!("threshold c = {c} must exceed p(2-p) = {upper_mean}")));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(LabError::invalid(format!("lambda values must be positive, got {l}")));
    }
    let event = IntervalEvent::above(c)?;
    let mut rows = Vec::with_capacity(lambdas.len() * n_list.len());
    for &n in n_list {
        check_n(n)?;
        let lhs = finite_n_capacity_rate(p, n, &event)?;
        let gamma = GammaApproximant::new(p, n)?;
        for &lambda in lambdas {
            let rhs = lambda_chen_feng_unchecked(p, lambda) - lambda * c;
            let gamma_rhs = gamma.evaluate(lambda) - lambda * c;
            let envelope =
                -lambda * c + lambda_chen_feng_unchecked(p, -lambda).max(lambda_chen_feng_unchecked(p, lambda));
            rows.push(TightnessRow {
                n,
                lambda,
                lhs,
                rhs,
                gamma_rhs,
                envelope,
                margin: margin(rhs, lhs),
                gamma_margin: margin(gamma_rhs, lhs),
            });
        }
    }
    let holds = rows.iter().all(|r| r.margin >= 0.0);
    Ok(TightnessReport { p, c, rows, holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure1Row {
    pub x: f64,
    #[serde(rename = "I_p")]
    pub i_p: f64,
    #[serde(rename = "I")]
    pub i: f64,
}

/// `(x, I_p(x), I(x))` on a grid inside `[0, 1]`.
pub fn figure1_data(p: f64, grid: &GridSpec) -> Result<Vec<Figure1Row>> {
    check_open_unit("p", p)?;
    if grid.start < 0.0 || grid.stop > 1.0 {
        return Err(LabError::invalid(format!("grid {grid} must lie within [0, 1]")));
    }
    Ok(grid
        .points()
        .into_iter()
        .map(|x| Figure1Row {
            x,
            i_p: bernoulli_rate_unchecked(p, x).to_f64(),
            i: corrected_rate_unchecked(p, x).to_f64(),
        })
        .collect())
}
