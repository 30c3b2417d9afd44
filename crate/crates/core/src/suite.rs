//! Cross-module invariant suite. Each check reports a margin (how far inside
//! its tolerance it landed, negative on failure) so regressions are easy to
//! size up. Randomized instances are drawn from a seeded ChaCha stream.

use crate::capacity::{Distortion, DistortionCapacity, Event, FiniteSpace, SimpleRandomVariable};
use crate::cgf::{bernoulli_cgf_unchecked, lambda_chen_feng_unchecked, CgfCurve, GammaApproximant};
use crate::coupling::{
    max_coupling_expectation, negative_dependence_residual, DiscreteDistribution, LawWithTransform, Transform,
};
use crate::error::Result;
use crate::fenchel::{
    bernoulli_rate_unchecked, conjugate_of, corrected_rate_unchecked, exposed_point_test, flat_region, SearchConfig,
    SEPARATION_MARGIN,
};
use crate::grid::GridSpec;
use crate::ldp_lab::{
    counterexample_report, figure1_data, tightness_bound_check, upper_bound_check, IntervalEvent, Verdict,
    VerdictThresholds,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    #[serde(serialize_with = "crate::ldp_lab::serialize_extended_f64")]
    pub margin: f64,
    pub detail: String,
}

impl CheckOutcome {
    /// Passes when `margin ≥ 0`.
    fn from_margin(name: &'static str, margin: f64, detail: String) -> Self {
        CheckOutcome { name, passed: margin >= 0.0, margin, detail }
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability weights with every atom carrying some mass.
pub fn random_weights<R: Rng>(rng: &mut R, atoms: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

pub fn random_space<R: Rng>(rng: &mut R, max_atoms: usize) -> FiniteSpace {
    let atoms = rng.random_range(1..=max_atoms);
    FiniteSpace::from_weights(random_weights(rng, atoms)).expect("normalised weights")
}

/// One to three closed intervals with endpoints in `[-0.1, 1.1]`.
pub fn random_closed_union<R: Rng>(rng: &mut R) -> Vec<IntervalEvent> {
    let pieces = rng.random_range(1..=3);
    (0..pieces)
        .map(|_| {
            let a = rng.random_range(-0.1..=1.1);
            let b = rng.random_range(-0.1..=1.1);
            IntervalEvent::closed(f64::min(a, b), f64::max(a, b)).expect("ordered")
        })
        .collect()
}

pub fn check_core_identity(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0_f64;
    for _ in 0..instances {
        let space = random_space(&mut rng, 6);
        let values = (0..space.len()).map(|_| rng.random_range(-5..=5) as f64).collect();
        let rv = SimpleRandomVariable::new(&space, values)?;
        let cap = DistortionCapacity::new(space, Distortion::max_of_two());
        worst = worst.max((cap.choquet_integral(&rv) - cap.upper_expectation_core(&rv)?).abs());
    }
    Ok(CheckOutcome::from_margin(
        "capacity.core_identity",
        1e-12 - worst,
        format!("{instances} spaces, max |choquet - sup over core| = {worst:e}"),
    ))
}

pub fn check_dual_involution(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0_f64;
    for _ in 0..instances {
        let space = random_space(&mut rng, 6);
        let k = rng.random_range(1..=4);
        let cap = DistortionCapacity::new(space.clone(), Distortion::max_of(k));
        let back = cap.dual().dual();
        for ev in Event::all(space.len()) {
            worst = worst.max((cap.eval(ev) - back.eval(ev)).abs());
        }
    }
    Ok(CheckOutcome::from_margin(
        "capacity.dual_involution",
        1e-12 - worst,
        format!("max |v - dual(dual(v))| = {worst:e}"),
    ))
}

pub fn check_square_monotone(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut failures = 0;
    for _ in 0..instances {
        let space = random_space(&mut rng, 5);
        let cap = DistortionCapacity::new(space, Distortion::square());
        for n in [2, 3] {
            if !cap.check_n_monotone(n)? {
                failures += 1;
            }
        }
    }
    Ok(CheckOutcome::from_margin(
        "capacity.square_n_monotone",
        0.0 - failures as f64,
        format!("{failures} failures of 2/3-monotonicity for P^2 over {instances} spaces"),
    ))
}

pub fn check_negative_dependence(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..instances {
        let support = rng.random_range(1..=4);
        let weights = random_weights(&mut rng, support);
        let law = DiscreteDistribution::new(weights.into_iter().enumerate().map(|(i, w)| (i as f64, w)).collect())?;
        let vars = rng.random_range(2..=4);
        let laws = (0..vars)
            .map(|_| {
                let table = (0..support).map(|i| (i as f64, rng.random_range(0.0..3.0))).collect();
                LawWithTransform::new(law.clone(), Transform::table(table))
            })
            .collect::<Result<Vec<_>>>()?;
        worst = worst.min(negative_dependence_residual(&laws)?.residual);
    }
    Ok(CheckOutcome::from_margin(
        "coupling.negative_dependence",
        worst + 1e-12,
        format!("{instances} instances, min residual = {worst:e}"),
    ))
}

pub fn check_canonical_residual() -> Result<CheckOutcome> {
    let pair = LawWithTransform::new(DiscreteDistribution::bernoulli(0.5)?, Transform::identity())?;
    let r = negative_dependence_residual(&[pair.clone(), pair])?;
    let err = (r.residual - 0.125).abs();
    Ok(CheckOutcome::from_margin(
        "coupling.canonical_residual",
        1e-12 - err,
        format!("lhs = {}, rhs = {}, residual = {}", r.lhs, r.rhs, r.residual),
    ))
}

pub fn check_coupling_matches_choquet(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0_f64;
    for _ in 0..instances {
        let space = random_space(&mut rng, 6);
        let values: Vec<f64> = (0..space.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let law = DiscreteDistribution::new(values.iter().copied().zip(space.weights().iter().copied()).collect())?;
        let rv = SimpleRandomVariable::new(&space, values)?;
        let cap = DistortionCapacity::new(space, Distortion::max_of_two());
        worst = worst.max((max_coupling_expectation(&law) - cap.choquet_integral(&rv)).abs());
    }
    Ok(CheckOutcome::from_margin(
        "coupling.matches_choquet",
        1e-12 - worst,
        format!("max |E_P[max(Z, Z')] - choquet| = {worst:e}"),
    ))
}

const GAMMA_LAMBDAS: [f64; 6] = [-3.0, -1.0, -0.1, 0.1, 1.0, 3.0];
const GAMMA_NS: [u64; 4] = [10, 100, 1000, 10_000];

pub fn check_gamma_sandwich() -> Result<CheckOutcome> {
    let p = 0.5;
    let mut margin = f64::INFINITY;
    for n in GAMMA_NS {
        let gamma = GammaApproximant::new(p, n)?;
        for lambda in GAMMA_LAMBDAS {
            let g = gamma.evaluate(lambda);
            let base = bernoulli_cgf_unchecked(p, lambda);
            margin = margin.min(g - base).min(base + std::f64::consts::LN_2 / n as f64 - g);
        }
    }
    Ok(CheckOutcome::from_margin(
        "cgf.gamma_sandwich",
        margin + 1e-12,
        "Lambda_p <= gamma_n <= Lambda_p + ln2/n".to_string(),
    ))
}

pub fn check_gamma_domination() -> Result<CheckOutcome> {
    let p = 0.5;
    let mut margin = f64::INFINITY;
    let top = GammaApproximant::new(p, 10_000)?;
    for n in GAMMA_NS {
        let gamma = GammaApproximant::new(p, n)?;
        for lambda in GAMMA_LAMBDAS {
            margin = margin.min(lambda_chen_feng_unchecked(p, lambda) - gamma.evaluate(lambda));
        }
    }
    for lambda in GAMMA_LAMBDAS {
        let full = lambda_chen_feng_unchecked(p, lambda);
        let gap = full - top.evaluate(lambda);
        margin = margin.min(gap - 0.9 * (full - bernoulli_cgf_unchecked(p, lambda)));
    }
    Ok(CheckOutcome::from_margin(
        "cgf.gamma_below_lambda",
        margin + 1e-12,
        "gamma_n <= Lambda with a strict gap at n = 10000".to_string(),
    ))
}

pub const CONJUGATE_PS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

pub fn check_conjugates() -> Result<CheckOutcome> {
    let grid = GridSpec::new(-0.1, 1.1, 0.001)?;
    let opts = SearchConfig::default();
    let mut worst = 0.0_f64;
    for p in CONJUGATE_PS {
        let lambda = CgfCurve::chen_feng(p)?;
        let bern = CgfCurve::bernoulli(p)?;
        for x in grid.points() {
            worst = worst.max(conjugate_of(&lambda, x, &opts)?.distance(corrected_rate_unchecked(p, x)));
            worst = worst.max(conjugate_of(&bern, x, &opts)?.distance(bernoulli_rate_unchecked(p, x)));
        }
    }
    Ok(CheckOutcome::from_margin(
        "fenchel.conjugate_consistency",
        1e-8 - worst,
        format!("max |numeric conjugate - closed form| = {worst:e}"),
    ))
}

pub fn check_exposed_set() -> Result<CheckOutcome> {
    let p = 0.5;
    let grid = GridSpec::new(0.0, 1.0, 0.001)?;
    let (lo, hi) = flat_region(p);
    let mut wrong = 0;
    let mut min_margin = f64::INFINITY;
    for y in grid.points() {
        let verdict = exposed_point_test(p, y, &grid)?;
        let expected = (y > 0.0 && y < lo) || (y > hi && y < 1.0);
        if verdict.is_exposed != expected {
            wrong += 1;
        }
        if verdict.is_exposed {
            min_margin = min_margin.min(verdict.min_margin.unwrap_or(f64::NEG_INFINITY));
        }
    }
    let margin = if wrong > 0 { 0.0 - wrong as f64 } else { min_margin - SEPARATION_MARGIN };
    Ok(CheckOutcome::from_margin(
        "fenchel.exposed_set",
        margin,
        format!("{wrong} misclassified grid points, min separation margin {min_margin:e}"),
    ))
}

pub fn check_counterexample() -> Result<CheckOutcome> {
    let thresholds = VerdictThresholds::default();
    let report = counterexample_report(0.5, 0.05, 0.2, &[100, 500, 1000, 5000], &thresholds)?;
    let (margin, detail) = match report.margins {
        Some(m) => (
            (thresholds.tol_true - m.distance_true).min(m.distance_refuted - thresholds.sep_min),
            format!("r_{} off target by {:.6}, off refuted target by {:.6}", m.n, m.distance_true, m.distance_refuted),
        ),
        None => (-1.0, "no row above n_min".to_string()),
    };
    let margin = if report.verdict == Verdict::Pass { margin } else { margin.min(-f64::EPSILON) };
    Ok(CheckOutcome::from_margin("ldp.counterexample", margin, detail))
}

pub fn check_upper_bounds(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut margin = f64::INFINITY;
    for p in [0.3, 0.5, 0.7] {
        for _ in 0..instances {
            let union = random_closed_union(&mut rng);
            margin = margin.min(upper_bound_check(p, &union, 2000)?.margin);
        }
    }
    Ok(CheckOutcome::from_margin("ldp.upper_bound", margin, format!("{} closed unions at n = 2000", 3 * instances)))
}

pub fn check_chernoff() -> Result<CheckOutcome> {
    let mut margin = f64::INFINITY;
    for c in [0.8, 0.9] {
        let report = tightness_bound_check(0.5, c, &[0.5, 1.0, 2.0, 4.0], &[100, 1000, 5000])?;
        margin = report.rows.iter().map(|r| r.margin).fold(margin, f64::min);
    }
    Ok(CheckOutcome::from_margin(
        "ldp.chernoff",
        margin,
        "(1/n) ln V(mean > c) <= Lambda(lambda) - lambda c".to_string(),
    ))
}

pub fn check_figure1() -> Result<CheckOutcome> {
    let p = 0.5;
    let (lo, hi) = flat_region(p);
    let rows = figure1_data(p, &GridSpec::new(0.0, 1.0, 0.001)?)?;
    let mut bad = 0;
    for r in &rows {
        let ordered = r.i <= r.i_p;
        let flat_ok = ((lo..=hi).contains(&r.x)) == (r.i == 0.0);
        let mean_ok = (r.x == p) == (r.i_p == 0.0);
        if !(ordered && flat_ok && mean_ok) {
            bad += 1;
        }
    }
    Ok(CheckOutcome::from_margin(
        "ldp.figure1",
        0.0 - bad as f64,
        format!("{} rows, {bad} violating I <= I_p or the zero sets", rows.len()),
    ))
}

/// Runs every check in a fixed order.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_core_identity(seed, 100)?,
        check_dual_involution(seed, 50)?,
        check_square_monotone(seed, 100)?,
        check_negative_dependence(seed, 200)?,
        check_canonical_residual()?,
        check_coupling_matches_choquet(seed, 200)?,
        check_gamma_sandwich()?,
        check_gamma_domination()?,
        check_conjugates()?,
        check_exposed_set()?,
        check_counterexample()?,
        check_upper_bounds(seed, 50)?,
        check_chernoff()?,
        check_figure1()?,
    ])
}
