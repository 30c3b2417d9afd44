//! Log-space tables for `Binomial(n, p)`.

use crate::error::{check_open_unit, Result};
use crate::numeric::log_add_exp;
use std::f64::consts::PI;

/// `ln n! - (n + 1/2) ln n + n - ln √(2π)` for `n = 0..=15`.
#[allow(clippy::excessive_precision)]
const STIRLING_ERROR: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258,
    0.041_340_695_955_409_294,
    0.027_677_925_684_998_339,
    0.020_790_672_103_765_093,
    0.016_644_691_189_821_192,
    0.013_876_128_823_070_748,
    0.011_896_709_945_891_770,
    0.010_411_265_261_972_096,
    0.009_255_462_182_712_733,
    0.008_330_563_433_362_871,
    0.007_573_675_487_951_841,
    0.006_942_840_107_209_530,
    0.006_408_994_188_004_207,
    0.005_951_370_112_758_848,
    0.005_554_733_551_962_801,
];

/// Error of Stirling's formula for `ln n!`.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return STIRLING_ERROR[n as usize];
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/m) + m - x`, by series when `x ≈ m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let v2 = v * v;
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// `ln P(S = j)` by Loader's saddle-point expansion, which avoids the
/// cancellation in `ln n! - ln j! - ln (n-j)!`.
fn log_binomial_pmf(j: u64, n: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    if j == 0 {
        return n as f64 * (-p).ln_1p();
    }
    if j == n {
        return n as f64 * p.ln();
    }
    let (x, nf) = (j as f64, n as f64);
    let lc = stirling_error(nf)
        - stirling_error(x)
        - stirling_error(nf - x)
        - deviance(x, nf * p)
        - deviance(nf - x, nf * q);
    let lf = (2.0 * PI).ln() + x.ln() + (-x / nf).ln_1p();
    lc - 0.5 * lf
}

/// `ln P(S = j)`, `ln P(S ≤ j)` and `ln P(S > j)` for `j = 0..=n`.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    n: u64,
    p: f64,
    log_pmf: Vec<f64>,
    log_cdf: Vec<f64>,
    log_sf: Vec<f64>,
}

impl BinomialTable {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        check_open_unit("p", p)?;
        let log_pmf: Vec<f64> = (0..=n).map(|j| log_binomial_pmf(j, n, p)).collect();
        let mut log_cdf = Vec::with_capacity(log_pmf.len());
        let mut acc = f64::NEG_INFINITY;
        for &l in &log_pmf {
            acc = log_add_exp(acc, l);
            log_cdf.push(acc.min(0.0));
        }
        let mut log_sf = vec![f64::NEG_INFINITY; log_pmf.len()];
        let mut acc = f64::NEG_INFINITY;
        for j in (0..log_pmf.len()).rev() {
            log_sf[j] = acc.min(0.0);
            acc = log_add_exp(acc, log_pmf[j]);
        }
        Ok(BinomialTable { n, p, log_pmf, log_cdf, log_sf })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn log_pmf(&self) -> &[f64] {
        &self.log_pmf
    }

    /// `ln P(S ≤ j)`.
    pub fn log_cdf(&self) -> &[f64] {
        &self.log_cdf
    }

    /// `ln P(S > j)`.
    pub fn log_sf(&self) -> &[f64] {
        &self.log_sf
    }

    /// `ln P(max(S, S') = j)` for two independent copies, via
    /// `F(j)² - F(j-1)² = pmf(j)·(F(j) + F(j-1))`.
    pub fn log_max_pmf(&self) -> Vec<f64> {
        (0..self.log_pmf.len())
            .map(|j| {
                let prev = if j == 0 { f64::NEG_INFINITY } else { self.log_cdf[j - 1] };
                self.log_pmf[j] + log_add_exp(self.log_cdf[j], prev)
            })
            .collect()
    }

    /// `ln P(min(S, S') = j)` via
    /// `(1-F(j-1))² - (1-F(j))² = pmf(j)·(P(S ≥ j) + P(S > j))`.
    pub fn log_min_pmf(&self) -> Vec<f64> {
        (0..self.log_pmf.len())
            .map(|j| {
                let at_least = if j == 0 { 0.0 } else { self.log_sf[j - 1] };
                self.log_pmf[j] + log_add_exp(at_least, self.log_sf[j])
            })
            .collect()
    }
}
