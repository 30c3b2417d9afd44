//! Max-coupling representation of the upper expectation under `V = P(2 - P)`.
//!
//! For `Y` with law `μ` under `P`, `E[Y] = E_P[max(Z, Z')]` where `Z, Z'` are
//! independent copies of `Y`. Joint upper expectations of P-i.i.d. sequences
//! are evaluated by enumerating the doubled product space.

use crate::error::{LabError, Result};
use crate::numeric::compensated_sum;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

const WEIGHT_TOL: f64 = 1e-12;

/// Largest product space enumerated by [`negative_dependence_residual`].
pub const MAX_PRODUCT_OUTCOMES: u64 = 10_000_000;

/// A finitely supported probability law as `(value, weight)` pairs, sorted by
/// value with exact duplicates merged.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    points: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(LabError::invalid("a distribution needs at least one support point"));
        }
        for &(v, w) in &points {
            if !v.is_finite() {
                return Err(LabError::invalid(format!("support value {v} is not finite")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(LabError::invalid(format!("weight {w} is negative or not finite")));
            }
        }
        let total = compensated_sum(points.iter().map(|p| p.1));
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(LabError::invalid(format!("weights sum to {total}, not 1")));
        }
        let mut points = points;
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for (v, w) in points {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += w,
                _ => merged.push((v, w)),
            }
        }
        Ok(DiscreteDistribution { points: merged })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(LabError::invalid(format!("Bernoulli parameter {p} is outside [0, 1]")));
        }
        DiscreteDistribution::new(vec![(0.0, 1.0 - p), (1.0, p)])
    }

    pub fn point_mass(c: f64) -> Result<Self> {
        DiscreteDistribution::new(vec![(c, 1.0)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Linear expectation under `P`.
    pub fn mean(&self) -> f64 {
        compensated_sum(self.points.iter().map(|(v, w)| v * w))
    }

    /// Law of `f(Y)`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        DiscreteDistribution::new(self.points.iter().map(|&(v, w)| (f(v), w)).collect())
    }
}

/// A nonnegative function applied to a random variable.
#[derive(Clone)]
pub struct Transform {
    name: String,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transform").field("name", &self.name).finish()
    }
}

impl Transform {
    pub fn new<F>(name: impl Into<String>, func: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Transform { name: name.into(), func: Arc::new(func) }
    }

    pub fn identity() -> Self {
        Transform::new("x", |x| x)
    }

    pub fn exp() -> Self {
        Transform::new("exp(x)", f64::exp)
    }

    /// `x ↦ e^{λx}`.
    pub fn exp_scaled(lambda: f64) -> Self {
        Transform::new(format!("exp({lambda}x)"), move |x| (lambda * x).exp())
    }

    pub fn zero() -> Self {
        Transform::new("0", |_| 0.0)
    }

    /// Lookup table on explicit support values, zero elsewhere.
    pub fn table(values: Vec<(f64, f64)>) -> Self {
        Transform::new("table", move |x| values.iter().find(|(k, _)| *k == x).map_or(0.0, |(_, v)| *v))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, x: f64) -> f64 {
        (self.func)(x)
    }
}

/// A law paired with a transform `φ ≥ 0` on its support.
#[derive(Debug, Clone)]
pub struct LawWithTransform {
    law: DiscreteDistribution,
    transform: Transform,
}

impl LawWithTransform {
    pub fn new(law: DiscreteDistribution, transform: Transform) -> Result<Self> {
        for &(v, _) in law.points() {
            let t = transform.apply(v);
            if !(t.is_finite() && t >= 0.0) {
                return Err(LabError::invalid(format!(
                    "transform `{}` gives {t} at support point {v}; it must be finite and nonnegative",
                    transform.name()
                )));
            }
        }
        Ok(LawWithTransform { law, transform })
    }

    pub fn law(&self) -> &DiscreteDistribution {
        &self.law
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }
}

/// Both sides of `E[φ_1(Y_1)…φ_{n+1}(Y_{n+1})] ≤ E[φ_1(Y_1)…φ_n(Y_n)]·E[φ_{n+1}(Y_{n+1})]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DependenceResidual {
    /// Product of the two upper expectations.
    pub lhs: f64,
    /// Upper expectation of the full product.
    pub rhs: f64,
    /// `lhs - rhs`; nonnegative under negative dependence.
    pub residual: f64,
}

/// `E_P[max(Z, Z')] = Σ_j y_j (F(j)² - F(j-1)²)` over the sorted support.
pub fn max_coupling_expectation(law: &DiscreteDistribution) -> f64 {
    let mut below = 0.0;
    let terms = law.points().iter().map(|&(y, w)| {
        let upto = below + w;
        // F(j)² - F(j-1)² = w·(F(j) + F(j-1))
        let mass = w * (upto + below);
        below = upto;
        y * mass
    });
    compensated_sum(terms.collect::<Vec<_>>())
}

/// Upper expectation of `Π_i φ_i(Y_i)` for P-i.i.d. `Y_i ~ law`, enumerated
/// literally as `E_P[max(Π φ_i(Y_i), Π φ_i(Y'_i))]` over the `2k`-fold product.
fn joint_upper_expectation(law: &DiscreteDistribution, transforms: &[&Transform]) -> f64 {
    let k = transforms.len();
    let pts = law.points();
    let s = pts.len();
    // φ_i evaluated once per support point
    let table: Vec<Vec<f64>> = transforms.iter().map(|t| pts.iter().map(|&(v, _)| t.apply(v)).collect()).collect();
    let mut idx = vec![0usize; 2 * k];
    let mut terms = Vec::new();
    loop {
        let weight: f64 = idx.iter().map(|&i| pts[i].1).product();
        let first: f64 = (0..k).map(|i| table[i][idx[i]]).product();
        let second: f64 = (0..k).map(|i| table[i][idx[k + i]]).product();
        terms.push(weight * first.max(second));
        // odometer
        let mut pos = 0;
        loop {
            if pos == 2 * k {
                return compensated_sum(terms);
            }
            idx[pos] += 1;
            if idx[pos] < s {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Negative dependence residual for P-i.i.d. variables sharing one law.
/// `laws[..n]` form the product on the left, `laws[n]` is the new factor.
pub fn negative_dependence_residual(laws: &[LawWithTransform]) -> Result<DependenceResidual> {
    let k = laws.len();
    if !(2..=6).contains(&k) {
        return Err(LabError::invalid(format!("need between 2 and 6 variables, got {k}")));
    }
    let law = laws[0].law();
    if laws.iter().any(|l| l.law() != law) {
        return Err(LabError::invalid("all variables must share the same law (P-i.i.d.)"));
    }
    let outcomes = (law.len() as u64).checked_pow(2 * k as u32);
    if outcomes.is_none_or(|o| o > MAX_PRODUCT_OUTCOMES) {
        return Err(LabError::capability(format!(
            "support size {} with {k} variables needs {}^{} outcomes, above {MAX_PRODUCT_OUTCOMES}",
            law.len(),
            law.len(),
            2 * k
        )));
    }
    let transforms: Vec<&Transform> = laws.iter().map(|l| l.transform()).collect();
    let rhs = joint_upper_expectation(law, &transforms);
    let head = joint_upper_expectation(law, &transforms[..k - 1]);
    let tail = joint_upper_expectation(law, &transforms[k - 1..]);
    let lhs = head * tail;
    Ok(DependenceResidual { lhs, rhs, residual: lhs - rhs })
}

/// `|E[φ(Y_i)] - E[φ(Y_j)]|` with one side from the sorted max-coupling
/// formula on the law of `φ(Y)` and the other from the pairwise sum
/// `Σ w_a w_b max(φ(a), φ(b))`.
pub fn identical_distribution_check(law: &DiscreteDistribution, phi: &Transform) -> Result<f64> {
    let pair = LawWithTransform::new(law.clone(), phi.clone())?;
    let pushed = pair.law().map(|v| phi.apply(v))?;
    let sorted_side = max_coupling_expectation(&pushed);
    let pts = law.points();
    let pairwise_side = compensated_sum(
        pts.iter()
            .flat_map(|&(a, wa)| pts.iter().map(move |&(b, wb)| wa * wb * phi.apply(a).max(phi.apply(b))))
            .collect::<Vec<_>>(),
    );
    Ok((sorted_side - pairwise_side).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn max_coupling_examples() {
        let b = DiscreteDistribution::bernoulli(0.5).unwrap();
        assert_abs_diff_eq!(max_coupling_expectation(&b), 0.75, epsilon = 1e-15);
        let c = DiscreteDistribution::point_mass(-3.25).unwrap();
        assert_eq!(max_coupling_expectation(&c), -3.25);
        let e = b.map(f64::exp).unwrap();
        assert_abs_diff_eq!(max_coupling_expectation(&e), 2.288711371344284, epsilon = 1e-12);
    }

    #[test]
    fn empty_support_is_rejected() {
        assert!(DiscreteDistribution::new(vec![]).is_err());
        assert!(DiscreteDistribution::new(vec![(1.0, 0.6)]).is_err());
    }

    #[test]
    fn duplicates_are_merged() {
        let d = DiscreteDistribution::new(vec![(1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).unwrap();
        assert_eq!(d.points(), &[(0.0, 0.5), (1.0, 0.5)]);
    }

    #[test]
    fn canonical_residual() {
        let law = DiscreteDistribution::bernoulli(0.5).unwrap();
        let pair = LawWithTransform::new(law, Transform::identity()).unwrap();
        let r = negative_dependence_residual(&[pair.clone(), pair]).unwrap();
        assert_abs_diff_eq!(r.lhs, 0.5625, epsilon = 1e-15);
        assert_abs_diff_eq!(r.rhs, 0.4375, epsilon = 1e-15);
        assert_abs_diff_eq!(r.residual, 0.125, epsilon = 1e-15);
    }

    #[test]
    fn zero_transform_annihilates() {
        let law = DiscreteDistribution::bernoulli(0.3).unwrap();
        let id = LawWithTransform::new(law.clone(), Transform::identity()).unwrap();
        let zero = LawWithTransform::new(law, Transform::zero()).unwrap();
        let r = negative_dependence_residual(&[id.clone(), zero, id]).unwrap();
        assert_eq!((r.lhs, r.rhs, r.residual), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exp_residual_nonnegative() {
        let law = DiscreteDistribution::bernoulli(0.3).unwrap();
        let e = LawWithTransform::new(law, Transform::exp()).unwrap();
        let r = negative_dependence_residual(&[e.clone(), e.clone(), e]).unwrap();
        assert!(r.residual >= 0.0, "{r:?}");
    }

    #[test]
    fn residual_input_errors() {
        let a = LawWithTransform::new(DiscreteDistribution::bernoulli(0.3).unwrap(), Transform::identity()).unwrap();
        let b = LawWithTransform::new(DiscreteDistribution::bernoulli(0.4).unwrap(), Transform::identity()).unwrap();
        assert!(matches!(negative_dependence_residual(&[a.clone(), b]), Err(LabError::InvalidInput(_))));
        assert!(matches!(negative_dependence_residual(std::slice::from_ref(&a)), Err(LabError::InvalidInput(_))));
        let wide = DiscreteDistribution::new((0..20).map(|i| (i as f64, 0.05)).collect()).unwrap();
        let w = LawWithTransform::new(wide, Transform::identity()).unwrap();
        assert!(matches!(negative_dependence_residual(&[w.clone(), w.clone(), w]), Err(LabError::Capability(_))));
    }

    #[test]
    fn negative_transform_rejected() {
        let law = DiscreteDistribution::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!(LawWithTransform::new(law, Transform::identity()).is_err());
    }

    #[test]
    fn identical_distribution_examples() {
        let b = DiscreteDistribution::bernoulli(0.5).unwrap();
        assert!(identical_distribution_check(&b, &Transform::identity()).unwrap() <= 1e-14);
        let b3 = DiscreteDistribution::bernoulli(0.3).unwrap();
        assert!(identical_distribution_check(&b3, &Transform::exp()).unwrap() <= 1e-14);
        let c = DiscreteDistribution::point_mass(2.0).unwrap();
        assert!(identical_distribution_check(&c, &Transform::exp_scaled(-0.7)).unwrap() <= 1e-14);
    }
}
