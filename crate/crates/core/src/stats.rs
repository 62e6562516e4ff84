//! Empirical distributions and Kolmogorov–Smirnov tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard normal CDF `Φ(x)`, computed from the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Right-continuous step ECDF backed by the sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Domain("empirical CDF of an empty sample".into()));
        }
        if sample.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("sample contains NaN".into()));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted })
    }

    /// Fraction of the sample `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Empirical quantile by the inverse-ECDF rule.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }
}

/// Sample median (midpoint of the two central order statistics for even sizes).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 0 { 0.5 * (v[m - 1] + v[m]) } else { v[m] })
}

/// Sample mean and (n−1) standard deviation.
pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d_stat: f64,
    pub p_value: f64,
    /// `n` for the one-sample test, `nm/(n+m)` for the two-sample test.
    pub n_effective: f64,
}

/// Kolmogorov limiting tail `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
///
/// For small `λ` the alternating series converges poorly, so the dual theta
/// series for `1 − Q` is used there instead.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let mut cdf = 0.0;
        let mut k = 1.0f64;
        loop {
            let term = y.powf(k * k);
            cdf += term;
            if term < 1e-17 || k > 100.0 {
                break;
            }
            k += 2.0;
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * cdf;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_tail((s + 0.12 + 0.11 / s) * d)
}

/// One-sample KS test of `sample` against `cdf`.
///
/// The supremum is taken over both sides of every jump of the ECDF, using the
/// left limit `cdf(x−)` on the lower side, so ties and discontinuous targets
/// are handled exactly.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<KsResult> {
    let ecdf = EmpiricalCdf::new(sample)?;
    let xs = ecdf.sorted();
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut prev = f64::NEG_INFINITY;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut k = i;
        while k < xs.len() && xs[k] == x {
            k += 1;
        }
        let left = cdf(x.next_down());
        let at = cdf(x);
        if left.is_nan() || at.is_nan() || left < prev - 1e-12 || at < left - 1e-12 {
            return Err(Error::Domain(format!("target CDF is not monotone on the sample (at x = {x})")));
        }
        prev = at;
        d = d.max((k as f64 / n - at).abs()).max((i as f64 / n - left).abs());
        i = k;
    }
    let d = d.clamp(0.0, 1.0);
    Ok(KsResult {
        d_stat: d,
        p_value: ks_p_value(d, n),
        n_effective: n,
    })
}

/// One-sample KS on a sorted sample with precomputed target CDF values.
pub fn ks_one_sample_presorted(sorted: &[f64], cdf_values: &[f64]) -> Result<KsResult> {
    if sorted.is_empty() || sorted.len() != cdf_values.len() {
        return Err(Error::Domain("sample and CDF values must be non-empty and aligned".into()));
    }
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for (i, &f) in cdf_values.iter().enumerate() {
        if f.is_nan() || f < prev - 1e-12 {
            return Err(Error::Domain(format!(
                "target CDF is not monotone on the sample (at x = {})",
                sorted[i]
            )));
        }
        prev = prev.max(f);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    let d = d.clamp(0.0, 1.0);
    Ok(KsResult {
        d_stat: d,
        p_value: ks_p_value(d, n),
        n_effective: n,
    })
}

/// Two-sample KS test. The statistic is exactly symmetric in `(a, b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let ea = EmpiricalCdf::new(a)?;
    let eb = EmpiricalCdf::new(b)?;
    let (xa, xb) = (ea.sorted(), eb.sorted());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    Ok(KsResult {
        d_stat: d,
        p_value: ks_p_value(d, n_eff),
        n_effective: n_eff,
    })
}
