use serde::{Serialize, Serializer};
use std::fmt;

/// A value in `(-inf, +inf]`. Rate functions and conjugates live here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PosInfinity => None,
        }
    }

    /// Lossy view as `f64`, mapping `+inf` to `f64::INFINITY`. Intended for
    /// plotting and comparisons, never for further arithmetic.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// `|a - b|`, where two infinities are at distance zero and a finite
    /// value is infinitely far from `+inf`.
    pub fn distance(self, other: ExtendedReal) -> f64 {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => (a - b).abs(),
            (ExtendedReal::PosInfinity, ExtendedReal::PosInfinity) => 0.0,
            _ => f64::INFINITY,
        }
    }

    pub fn min(self, other: ExtendedReal) -> ExtendedReal {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a.min(b)),
            (ExtendedReal::PosInfinity, x) | (x, ExtendedReal::PosInfinity) => x,
        }
    }

    /// `-self` as a plain float: `-inf` when `self` is `+inf`.
    pub fn neg_f64(self) -> f64 {
        -self.to_f64()
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtendedReal::PosInfinity
        } else {
            ExtendedReal::Finite(v)
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInfinity => f.write_str("inf"),
        }
    }
}

/// Finite values serialize as JSON numbers, `+inf` as the string `"inf"`.
impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => serializer.serialize_f64(*v),
            ExtendedReal::PosInfinity => serializer.serialize_str("inf"),
        }
    }
}
