//! Cumulant generating functions of the distorted Bernoulli sequence.

use crate::binomial::BinomialTable;
use crate::error::{check_open_unit, LabError, Result};
use crate::numeric::log_sum_exp;
use std::sync::Arc;

/// Largest `n` accepted by [`GammaApproximant`].
pub const MAX_GAMMA_N: u64 = 1_000_000;

/// `ln(1 - t + t e^λ)`, the CGF of `Bernoulli(t)`.
pub fn bernoulli_cgf(t: f64, lambda: f64) -> Result<f64> {
    check_open_unit("t", t)?;
    Ok(bernoulli_cgf_unchecked(t, lambda))
}

pub(crate) fn bernoulli_cgf_unchecked(t: f64, lambda: f64) -> f64 {
    if lambda > 0.0 {
        lambda + (t + (1.0 - t) * (-lambda).exp()).ln()
    } else {
        (t * lambda.exp_m1()).ln_1p()
    }
}

/// The per-variable limit `Λ(λ) = ln E[e^{λX}]` under the upper expectation:
/// `Λ_{p²}(λ)` for `λ < 0` and `Λ_{p(2-p)}(λ)` for `λ ≥ 0`.
pub fn lambda_chen_feng(p: f64, lambda: f64) -> Result<f64> {
    check_open_unit("p", p)?;
    Ok(lambda_chen_feng_unchecked(p, lambda))
}

pub(crate) fn lambda_chen_feng_unchecked(p: f64, lambda: f64) -> f64 {
    if lambda < 0.0 {
        bernoulli_cgf_unchecked(p * p, lambda)
    } else {
        bernoulli_cgf_unchecked(p * (2.0 - p), lambda)
    }
}

/// `γ_n(λ) = (1/n) ln E[e^{λ S_n}]` for `S_n ~ Binomial(n, p)`, with the upper
/// expectation evaluated by max-coupling. The order-statistic laws are built
/// once, so evaluating many `λ` costs `O(n)` each.
#[derive(Debug, Clone)]
pub struct GammaApproximant {
    p: f64,
    n: u64,
    log_max_pmf: Arc<[f64]>,
    log_min_pmf: Arc<[f64]>,
}

impl GammaApproximant {
    pub fn new(p: f64, n: u64) -> Result<Self> {
        check_open_unit("p", p)?;
        if n == 0 || n > MAX_GAMMA_N {
            return Err(LabError::invalid(format!("n must lie in 1..={MAX_GAMMA_N}, got {n}")));
        }
        let table = BinomialTable::new(n, p)?;
        Ok(GammaApproximant { p, n, log_max_pmf: table.log_max_pmf().into(), log_min_pmf: table.log_min_pmf().into() })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn evaluate(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        // e^{λ·} is increasing for λ > 0, so the max of the two copies wins;
        // for λ < 0 the min does.
        let weights = if lambda > 0.0 { &self.log_max_pmf } else { &self.log_min_pmf };
        let log_mgf = log_sum_exp(weights.iter().enumerate().map(|(j, lw)| lambda * j as f64 + lw));
        log_mgf / self.n as f64
    }
}

/// One-shot `γ_n(λ)`.
pub fn gamma_finite_n(p: f64, lambda: f64, n: u64) -> Result<f64> {
    Ok(GammaApproximant::new(p, n)?.evaluate(lambda))
}

/// A convex function of `λ`, finite on the whole real line.
#[derive(Debug, Clone)]
pub enum CgfCurve {
    /// `Λ_t`.
    Bernoulli { t: f64 },
    /// `Λ`, the branchwise envelope.
    ChenFeng { p: f64 },
    /// `γ_n`.
    Gamma(GammaApproximant),
}

impl CgfCurve {
    pub fn bernoulli(t: f64) -> Result<Self> {
        check_open_unit("t", t)?;
        Ok(CgfCurve::Bernoulli { t })
    }

    pub fn chen_feng(p: f64) -> Result<Self> {
        check_open_unit("p", p)?;
        Ok(CgfCurve::ChenFeng { p })
    }

    pub fn gamma(p: f64, n: u64) -> Result<Self> {
        Ok(CgfCurve::Gamma(GammaApproximant::new(p, n)?))
    }

    pub fn evaluate(&self, lambda: f64) -> f64 {
        match self {
            CgfCurve::Bernoulli { t } => bernoulli_cgf_unchecked(*t, lambda),
            CgfCurve::ChenFeng { p } => lambda_chen_feng_unchecked(*p, lambda),
            CgfCurve::Gamma(g) => g.evaluate(lambda),
        }
    }

    /// All curves here have `dom = ℝ`.
    pub fn effective_domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn label(&self) -> String {
        match self {
            CgfCurve::Bernoulli { t } => format!("Lambda_{t}"),
            CgfCurve::ChenFeng { p } => format!("Lambda[p={p}]"),
            CgfCurve::Gamma(g) => format!("gamma_{}[p={}]", g.n(), g.p()),
        }
    }
}
