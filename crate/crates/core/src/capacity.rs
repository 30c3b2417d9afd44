//! Finite probability spaces and distortion capacities `A ↦ g(P(A))`.
//!
//! Events are bitmasks over the ordered atom list. Exhaustive routines
//! (n-monotonicity, cores) enumerate all `2^m` events and are capped at a few
//! atoms.

use crate::error::{LabError, Result};
use crate::numeric::compensated_sum;
use itertools::Itertools;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

/// Absolute tolerance for all capacity comparisons.
pub const TOL: f64 = 1e-12;

/// Largest space accepted by [`DistortionCapacity::check_n_monotone`].
pub const MAX_MONOTONE_ATOMS: usize = 12;

/// Largest space accepted by [`DistortionCapacity::core_extreme_points`].
pub const MAX_CORE_ATOMS: usize = 8;

/// Subset of atoms, bit `i` set when atom `i` belongs to the event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event(pub u64);

impl Event {
    pub const EMPTY: Event = Event(0);

    pub fn full(atoms: usize) -> Event {
        if atoms == 64 {
            Event(u64::MAX)
        } else {
            Event((1u64 << atoms) - 1)
        }
    }

    pub fn singleton(i: usize) -> Event {
        Event(1u64 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn union(self, other: Event) -> Event {
        Event(self.0 | other.0)
    }

    pub fn intersection(self, other: Event) -> Event {
        Event(self.0 & other.0)
    }

    pub fn complement(self, atoms: usize) -> Event {
        Event(!self.0 & Event::full(atoms).0)
    }

    pub fn is_subset(self, other: Event) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// All `2^atoms` events in increasing bitmask order.
    pub fn all(atoms: usize) -> impl Iterator<Item = Event> {
        (0..1u64 << atoms).map(Event)
    }
}

/// A probability on finitely many labelled atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    atoms: Vec<String>,
    weights: Vec<f64>,
}

impl FiniteSpace {
    pub fn new(atoms: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(LabError::invalid("a finite space needs at least one atom"));
        }
        if atoms.len() != weights.len() {
            return Err(LabError::invalid(format!("{} atoms but {} weights", atoms.len(), weights.len())));
        }
        if atoms.len() > 64 {
            return Err(LabError::capability("at most 64 atoms are representable"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0 && **w <= 1.0)) {
            return Err(LabError::invalid(format!("weight {w} is outside [0, 1]")));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > TOL {
            return Err(LabError::invalid(format!("weights sum to {total}, not 1")));
        }
        let distinct: HashSet<&String> = atoms.iter().collect();
        if distinct.len() != atoms.len() {
            return Err(LabError::invalid("atom labels must be distinct"));
        }
        Ok(FiniteSpace { atoms, weights })
    }

    /// Space with atoms labelled `w1, w2, ...`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let atoms = (1..=weights.len()).map(|i| format!("w{i}")).collect();
        FiniteSpace::new(atoms, weights)
    }

    pub fn uniform(atoms: usize) -> Result<Self> {
        FiniteSpace::from_weights(vec![1.0 / atoms as f64; atoms])
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn full_event(&self) -> Event {
        Event::full(self.len())
    }

    /// Event made of the named atoms.
    pub fn event<S: AsRef<str>>(&self, labels: &[S]) -> Result<Event> {
        labels.iter().try_fold(Event::EMPTY, |ev, label| {
            let label = label.as_ref();
            self.atoms
                .iter()
                .position(|a| a == label)
                .map(|i| ev.union(Event::singleton(i)))
                .ok_or_else(|| LabError::UnknownAtom(label.to_string()))
        })
    }

    pub fn prob(&self, event: Event) -> f64 {
        if event == self.full_event() {
            return 1.0;
        }
        compensated_sum(self.weights.iter().enumerate().filter(|(i, _)| event.contains(*i)).map(|(_, w)| *w))
    }

    /// Linear expectation of a value vector aligned with the atoms.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        compensated_sum(self.weights.iter().zip(values).map(|(w, v)| w * v))
    }
}

/// Nondecreasing `g: [0, 1] → [0, 1]` with `g(0) = 0`, `g(1) = 1`.
#[derive(Clone)]
pub struct Distortion {
    name: String,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Distortion").field("name", &self.name).finish()
    }
}

impl Distortion {
    /// Wraps an arbitrary function after sampling it on a `1e-3` grid for the
    /// boundary values, range and monotonicity.
    pub fn new<F>(name: impl Into<String>, func: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        if func(0.0).abs() > TOL || (func(1.0) - 1.0).abs() > TOL {
            return Err(LabError::invalid(format!("distortion `{name}` must satisfy g(0) = 0 and g(1) = 1")));
        }
        let mut prev = func(0.0);
        for k in 1..=1000 {
            let x = k as f64 / 1000.0;
            let y = func(x);
            if !(y.is_finite() && (-TOL..=1.0 + TOL).contains(&y)) {
                return Err(LabError::invalid(format!("distortion `{name}` leaves [0, 1] at x = {x}")));
            }
            if y < prev - TOL {
                return Err(LabError::invalid(format!("distortion `{name}` decreases near x = {x}")));
            }
            prev = y;
        }
        Ok(Distortion { name, func: Arc::new(func) })
    }

    fn known<F>(name: &str, func: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Distortion { name: name.to_string(), func: Arc::new(func) }
    }

    pub fn identity() -> Self {
        Distortion::known("x", |x| x)
    }

    /// `g(x) = x²`, the dual of [`Distortion::max_of_two`].
    pub fn square() -> Self {
        Distortion::known("x^2", |x| x * x)
    }

    /// `g(x) = x(2 - x)`: the probability that at least one of two i.i.d.
    /// copies lands in the event.
    pub fn max_of_two() -> Self {
        Distortion::known("x(2-x)", |x| x * (2.0 - x))
    }

    /// `g(x) = x^k`.
    pub fn power(k: u32) -> Self {
        Distortion::known(&format!("x^{k}"), move |x| x.powi(k as i32))
    }

    /// `g(x) = 1 - (1 - x)^k`, the dual of [`Distortion::power`].
    pub fn max_of(k: u32) -> Self {
        Distortion::known(&format!("1-(1-x)^{k}"), move |x| 1.0 - (1.0 - x).powi(k as i32))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.func)(x)
    }

    /// `x ↦ 1 - g(1 - x)`.
    pub fn dual(&self) -> Distortion {
        let inner = Arc::clone(&self.func);
        Distortion { name: format!("dual({})", self.name), func: Arc::new(move |x| 1.0 - inner(1.0 - x)) }
    }
}

/// Real values indexed by the atoms of a [`FiniteSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleRandomVariable {
    values: Vec<f64>,
}

impl SimpleRandomVariable {
    pub fn new(space: &FiniteSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(LabError::invalid(format!(
                "random variable has {} values for {} atoms",
                values.len(),
                space.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::invalid("random variable values must be finite"));
        }
        Ok(SimpleRandomVariable { values })
    }

    /// Builds from `(label, value)` pairs; every atom must be assigned.
    pub fn from_assignment(space: &FiniteSpace, pairs: &[(&str, f64)]) -> Result<Self> {
        let mut values = vec![None; space.len()];
        for (label, v) in pairs {
            let i = space
                .atoms()
                .iter()
                .position(|a| a == label)
                .ok_or_else(|| LabError::UnknownAtom(label.to_string()))?;
            values[i] = Some(*v);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| LabError::invalid(format!("atom `{}` is unassigned", space.atoms()[i]))))
            .collect::<Result<Vec<_>>>()?;
        SimpleRandomVariable::new(space, values)
    }

    pub fn constant(space: &FiniteSpace, c: f64) -> Result<Self> {
        SimpleRandomVariable::new(space, vec![c; space.len()])
    }

    pub fn indicator(space: &FiniteSpace, event: Event) -> Self {
        let values = (0..space.len()).map(|i| if event.contains(i) { 1.0 } else { 0.0 }).collect();
        SimpleRandomVariable { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `{ω : X(ω) ≥ level}`.
    pub fn upper_level_set(&self, level: f64) -> Event {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v >= level)
            .fold(Event::EMPTY, |ev, (i, _)| ev.union(Event::singleton(i)))
    }
}

/// Extreme points of the core `{Q : Q(A) ≥ v(A) for all A}` of a 2-monotone
/// capacity: one permutation measure per ordering of the atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreVertexSet {
    pub vertices: Vec<Vec<f64>>,
}

impl CoreVertexSet {
    /// Smallest `Q(A) - v(A)` over all vertices and events.
    pub fn min_domination_slack(&self, lower: &DistortionCapacity) -> f64 {
        let space = lower.base();
        let table = lower.event_table();
        let table = &table;
        self.vertices
            .iter()
            .flat_map(|q| {
                Event::all(space.len()).map(move |ev| {
                    let mass = compensated_sum(q.iter().enumerate().filter(|(i, _)| ev.contains(*i)).map(|(_, w)| *w));
                    mass - table[ev.0 as usize]
                })
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `A ↦ g(P(A))` on a finite space.
#[derive(Debug, Clone)]
pub struct DistortionCapacity {
    base: FiniteSpace,
    distortion: Distortion,
}

impl DistortionCapacity {
    pub fn new(base: FiniteSpace, distortion: Distortion) -> Self {
        DistortionCapacity { base, distortion }
    }

    pub fn base(&self) -> &FiniteSpace {
        &self.base
    }

    pub fn distortion(&self) -> &Distortion {
        &self.distortion
    }

    pub fn eval(&self, event: Event) -> f64 {
        if event.is_empty() {
            return 0.0;
        }
        if event == self.base.full_event() {
            return 1.0;
        }
        self.distortion.eval(self.base.prob(event))
    }

    /// Capacity of the event made of the named atoms.
    pub fn eval_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<f64> {
        Ok(self.eval(self.base.event(labels)?))
    }

    /// `A ↦ 1 - v(Aᶜ)`, again a distortion capacity with `1 - g(1 - x)`.
    pub fn dual(&self) -> DistortionCapacity {
        DistortionCapacity { base: self.base.clone(), distortion: self.distortion.dual() }
    }

    /// Values on all `2^m` events, indexed by bitmask.
    pub fn event_table(&self) -> Vec<f64> {
        Event::all(self.base.len()).map(|ev| self.eval(ev)).collect()
    }

    /// Choquet integral by the decreasing-rearrangement telescoping sum
    /// `y_min + Σ (y_k - y_{k+1}) v(X ≥ y_k)`.
    pub fn choquet_integral(&self, rv: &SimpleRandomVariable) -> f64 {
        let levels: Vec<f64> = rv.values().iter().copied().sorted_by(|a, b| b.total_cmp(a)).dedup().collect();
        let lowest = *levels.last().expect("finite space has at least one atom");
        let layers = levels.windows(2).map(|w| (w[0] - w[1]) * self.eval(rv.upper_level_set(w[0])));
        lowest + compensated_sum(layers)
    }

    /// Whether `v(∪A_i) ≥ Σ_{∅≠I} (-1)^{|I|+1} v(∩_{i∈I} A_i)` holds for every
    /// family of `n` events.
    ///
    /// Uses the Möbius characterisation: `v` is n-monotone iff
    /// `Σ_{L ⊆ E ⊆ A} m(E) ≥ 0` for all `L ⊆ A` with `2 ≤ |L| ≤ n`, where `m`
    /// is the Möbius transform of `v`. Sums are accepted down to `-TOL`.
    pub fn check_n_monotone(&self, n: usize) -> Result<bool> {
        let m = self.base.len();
        if m > MAX_MONOTONE_ATOMS {
            return Err(LabError::capability(format!(
                "n-monotonicity enumerates all events; {m} atoms exceeds the limit of {MAX_MONOTONE_ATOMS}"
            )));
        }
        if n < 2 {
            return Err(LabError::invalid(format!("n must be at least 2, got {n}")));
        }
        Ok(min_monotone_residual(&self.event_table(), m, n) >= -TOL)
    }

    /// Permutation measures of this capacity, `Q_σ(ω_σ(k)) = v(σ(1..k)) - v(σ(1..k-1))`.
    /// Requires `self` to be 2-monotone so that each one lies in the core.
    pub fn permutation_vertices(&self) -> Result<CoreVertexSet> {
        let m = self.base.len();
        if m > MAX_CORE_ATOMS {
            return Err(LabError::capability(format!(
                "core enumeration visits m! permutations; {m} atoms exceeds the limit of {MAX_CORE_ATOMS}"
            )));
        }
        if !self.check_n_monotone(2)? {
            return Err(LabError::capability(
                "capacity is not 2-monotone; its core vertices are not permutation measures",
            ));
        }
        let table = self.event_table();
        let mut seen = HashSet::new();
        let mut vertices = Vec::new();
        for perm in (0..m).permutations(m) {
            let mut q = vec![0.0; m];
            let mut prefix = Event::EMPTY;
            for &atom in &perm {
                let next = prefix.union(Event::singleton(atom));
                q[atom] = table[next.0 as usize] - table[prefix.0 as usize];
                prefix = next;
            }
            let key: Vec<i64> = q.iter().map(|w| (w / TOL).round() as i64).collect();
            if seen.insert(key) {
                vertices.push(q);
            }
        }
        Ok(CoreVertexSet { vertices })
    }

    /// Extreme points of `{Q : Q ≥ v}` where `v` is the dual of `self`; the
    /// upper probability `self` is the envelope `sup_Q Q(A)` over them.
    pub fn core_extreme_points(&self) -> Result<CoreVertexSet> {
        self.dual().permutation_vertices()
    }

    /// `max_Q E_Q[X]` over [`Self::core_extreme_points`].
    pub fn upper_expectation_core(&self, rv: &SimpleRandomVariable) -> Result<f64> {
        let core = self.core_extreme_points()?;
        Ok(core
            .vertices
            .iter()
            .map(|q| compensated_sum(q.iter().zip(rv.values()).map(|(w, x)| w * x)))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Scatters the low bits of `index` into the set bits of `mask`.
fn deposit(mut index: u64, mask: u64) -> u64 {
    let mut out = 0;
    let mut rest = mask;
    while rest != 0 {
        let bit = rest & rest.wrapping_neg();
        if index & 1 == 1 {
            out |= bit;
        }
        index >>= 1;
        rest &= rest - 1;
    }
    out
}

/// Smallest `Σ_{L ⊆ E ⊆ A} m(E)` over `L ⊆ A`, `2 ≤ |L| ≤ n`; `+inf` if no
/// such pair exists.
fn min_monotone_residual(table: &[f64], atoms: usize, n: usize) -> f64 {
    // Möbius transform: m(E) = Σ_{F ⊆ E} (-1)^{|E∖F|} v(F).
    let mut mobius = table.to_vec();
    for bit in 0..atoms {
        for mask in 0..mobius.len() {
            if mask >> bit & 1 == 1 {
                mobius[mask] -= mobius[mask ^ (1 << bit)];
            }
        }
    }
    let full = Event::full(atoms).0;
    let mut worst = f64::INFINITY;
    for lower in 0..=full {
        let size = lower.count_ones() as usize;
        if size < 2 || size > n {
            continue;
        }
        let free = full & !lower;
        let r = free.count_ones();
        let mut acc: Vec<f64> = (0..1u64 << r).map(|i| mobius[(lower | deposit(i, free)) as usize]).collect();
        for bit in 0..r {
            for idx in 0..acc.len() {
                if idx >> bit & 1 == 1 {
                    acc[idx] += acc[idx ^ (1 << bit)];
                }
            }
        }
        worst = acc.iter().copied().fold(worst, f64::min);
    }
    worst
}
