//! Monte Carlo experiments for the edge-count limit theorems, plus a
//! numerical audit of the remainder terms that the proofs show vanish.
//!
//! Normalized statistics:
//!
//! * finite `E W²`: `(2E_n − nEW) / √(n(2EW + Var W))`, compared with `Φ`;
//! * regularly varying weights with `α ∈ (1,2)`: `(2E_n − nEW) / a_n`,
//!   compared (two-sample) with the weight-sum statistic `(L_n − nEW) / a_n`,
//!   which converges to the same stable law;
//! * the law of large numbers `E_n / n → EW/2`.
//!
//! Replications run on the rayon pool. Each replication derives its own seeds
//! from `(master_seed, n, replication)` and results are gathered in index
//! order, so output is identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{sample_graph, SamplerKind};
use crate::quadrature::neumaier_add;
use crate::seed::{derive_seed, mix64, STREAM_EDGES, STREAM_WEIGHTS};
use crate::stats::{self, ks_one_sample, ks_two_sample, normal_cdf, KsResult};
use crate::weights::{analytic_moments, compute_norming, sample_weights, WeightModel, WeightVector};

/// Largest `n` for which [`proof_audit`] evaluates its `O(n²)` double sums.
pub const AUDIT_MAX_N: usize = 20_000;
/// Smallest replication count accepted for the distributional experiments.
pub const MIN_LIMIT_REPLICATIONS: usize = 100;
/// Default number of weight pairs for the Monte Carlo moment bounds.
pub const DEFAULT_PAIR_DRAWS: usize = 1_000_000;
/// Bound on the remainder coefficient in the log expansion.
pub const REMAINDER_COEFFICIENT_BOUND: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Gaussian limit under finite second moment.
    T1,
    /// Stable limit under regular variation with α ∈ (1,2).
    T2,
    #[serde(rename = "LLN")]
    Lln,
    #[serde(rename = "AUDIT")]
    Audit,
}

fn default_sampler() -> SamplerKind {
    SamplerKind::Fast
}

fn default_t_values() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: WeightModel,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub theorem: Theorem,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    /// Characteristic-function arguments for the audit.
    #[serde(default = "default_t_values")]
    pub t_values: Vec<f64>,
    /// Weight pairs for the Monte Carlo moment bounds of the audit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_draws: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid must not be empty".into()));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("every n in n_grid must be >= 2, got {n}")));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        match self.theorem {
            Theorem::T1 | Theorem::T2 if self.replications < MIN_LIMIT_REPLICATIONS => {
                return Err(Error::Config(format!(
                    "distributional experiments need at least {MIN_LIMIT_REPLICATIONS} replications, got {}",
                    self.replications
                )))
            }
            Theorem::Audit => {
                if self.t_values.is_empty() {
                    return Err(Error::Config("audit needs at least one t value".into()));
                }
                if let Some(&n) = self.n_grid.iter().find(|&&n| n > AUDIT_MAX_N) {
                    return Err(Error::Size { n, max: AUDIT_MAX_N });
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// One row of `result.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub n: usize,
    pub replication: usize,
    /// Normalized edge statistic (or `E_n / n` for the LLN experiment).
    pub statistic: f64,
    pub edge_count: u64,
    pub l_n: f64,
    /// `(L_n − nEW) / a_n`, only for the stable-limit experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_statistic: Option<f64>,
}

/// Centering and scale used to normalize `2E_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norming {
    /// `n E W`.
    pub center: f64,
    /// `√(n(2EW + Var W))` or `a_n`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSample {
    pub n: usize,
    pub values: Vec<f64>,
    pub norming: Norming,
}

/// Per-`n` summary of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub norming: Option<Norming>,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub ks: Option<KsResult>,
    /// `EW / 2` for the LLN experiment.
    pub target: Option<f64>,
    /// KS distance strictly below the previous grid point's (None for the first).
    pub decreasing_from_previous: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub records: Vec<ReplicationRecord>,
    pub per_n: Vec<NSummary>,
    /// KS distance at the last grid point strictly below that at the first.
    pub trend_decreasing: Option<bool>,
}

impl ExperimentResult {
    /// Edge statistics for one grid point.
    pub fn sample(&self, n: usize) -> Option<NormalizedSample> {
        let summary = self.per_n.iter().find(|s| s.n == n)?;
        Some(NormalizedSample {
            n,
            values: self.records.iter().filter(|r| r.n == n).map(|r| r.statistic).collect(),
            norming: summary.norming?,
        })
    }

    /// Weight-sum statistics for one grid point (stable-limit experiment only).
    pub fn weight_sample(&self, n: usize) -> Option<NormalizedSample> {
        let summary = self.per_n.iter().find(|s| s.n == n)?;
        let values: Option<Vec<f64>> =
            self.records.iter().filter(|r| r.n == n).map(|r| r.weight_statistic).collect();
        Some(NormalizedSample { n, values: values?, norming: summary.norming? })
    }

    /// `(n, mean of E_n/n, standard deviation)` rows of the LLN experiment.
    pub fn lln_rows(&self) -> Vec<(usize, f64, f64)> {
        self.per_n.iter().map(|s| (s.n, s.mean, s.sd)).collect()
    }
}

/// `(2E_n − nEW) / √(n(2EW + Var W))`.
pub fn normalize_t1(edge_count: u64, n: usize, mean: f64, variance: f64) -> Result<f64> {
    let denom = (n as f64 * (2.0 * mean + variance)).sqrt();
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::Domain(format!(
            "degenerate denominator sqrt(n(2EW + Var W)) = {denom}"
        )));
    }
    Ok((2.0 * edge_count as f64 - n as f64 * mean) / denom)
}

/// `(2E_n − nEW) / a_n`.
pub fn normalize_t2(edge_count: u64, n: usize, mean: f64, a_n: f64) -> Result<f64> {
    if !(a_n > 0.0 && a_n.is_finite()) {
        return Err(Error::Domain(format!("a_n must be positive, got {a_n}")));
    }
    Ok((2.0 * edge_count as f64 - n as f64 * mean) / a_n)
}

/// Seed pair for replication `r` at vertex count `n`.
pub fn replication_seeds(master: u64, n: usize, r: usize) -> (u64, u64) {
    let key = master ^ mix64(n as u64);
    (derive_seed(key, STREAM_WEIGHTS, r as u64), derive_seed(key, STREAM_EDGES, r as u64))
}

fn simulate<F>(cfg: &ExperimentConfig, n: usize, f: F) -> Result<Vec<ReplicationRecord>>
where
    F: Fn(usize, &WeightVector, u64) -> Result<ReplicationRecord> + Sync,
{
    (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let (ws, gs) = replication_seeds(cfg.master_seed, n, r);
            let w = sample_weights(&cfg.model, n, ws)?;
            let g = sample_graph(&w, gs, cfg.sampler)?;
            f(r, &w, g.edge_count)
        })
        .collect()
}

fn summarize(n: usize, values: &[f64], norming: Option<Norming>, ks: Option<KsResult>, target: Option<f64>) -> NSummary {
    let (mean, sd) = stats::mean_and_sd(values);
    NSummary {
        n,
        norming,
        mean,
        sd,
        median: stats::median(values).unwrap_or(f64::NAN),
        ks,
        target,
        decreasing_from_previous: None,
    }
}

fn mark_trend(per_n: &mut [NSummary]) -> Option<bool> {
    let ds: Vec<f64> = per_n.iter().filter_map(|s| s.ks.map(|k| k.d_stat)).collect();
    for i in 1..per_n.len() {
        if let (Some(a), Some(b)) = (per_n[i - 1].ks, per_n[i].ks) {
            per_n[i].decreasing_from_previous = Some(b.d_stat < a.d_stat);
        }
    }
    (ds.len() >= 2).then(|| ds[ds.len() - 1] < ds[0])
}

/// Gaussian-limit experiment: one-sample KS of the normalized edge count against `Φ`.
pub fn run_theorem1(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    if cfg.theorem != Theorem::T1 {
        return Err(Error::Config(format!("expected theorem T1, got {:?}", cfg.theorem)));
    }
    let mut records = Vec::new();
    let mut per_n = Vec::new();
    for &n in &cfg.n_grid {
        let m = analytic_moments(&cfg.model, n)?;
        if !m.has_finite_second_moment() {
            return Err(Error::Hypothesis(format!(
                "Gaussian limit needs E W^2 < inf; {} has infinite second moment",
                cfg.model
            )));
        }
        let scale = (n as f64 * (2.0 * m.mean + m.variance)).sqrt();
        let recs = simulate(cfg, n, |r, w, e| {
            Ok(ReplicationRecord {
                n,
                replication: r,
                statistic: normalize_t1(e, n, m.mean, m.variance)?,
                edge_count: e,
                l_n: w.sum_l(),
                weight_statistic: None,
            })
        })?;
        let values: Vec<f64> = recs.iter().map(|r| r.statistic).collect();
        let ks = ks_one_sample(&values, normal_cdf)?;
        per_n.push(summarize(n, &values, Some(Norming { center: n as f64 * m.mean, scale }), Some(ks), None));
        records.extend(recs);
    }
    let trend = mark_trend(&mut per_n);
    Ok(ExperimentResult { config: cfg.clone(), records, per_n, trend_decreasing: trend })
}

/// Checks that the model is regularly varying with `α ∈ (1,2)`.
pub fn require_stable_domain(model: &WeightModel) -> Result<f64> {
    let tail = model.tail_params().ok_or_else(|| {
        Error::Hypothesis(format!("stable limit needs a regularly varying weight law, got {model}"))
    })?;
    if !tail.in_stable_range() {
        return Err(Error::Hypothesis(format!(
            "stable limit needs alpha in (1,2), got {}",
            tail.alpha
        )));
    }
    Ok(tail.alpha)
}

/// Stable-limit experiment: two-sample KS between the edge statistic and the
/// weight-sum statistic of the same replications.
pub fn run_theorem2(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    if cfg.theorem != Theorem::T2 {
        return Err(Error::Config(format!("expected theorem T2, got {:?}", cfg.theorem)));
    }
    require_stable_domain(&cfg.model)?;
    let mut records = Vec::new();
    let mut per_n = Vec::new();
    for &n in &cfg.n_grid {
        let mean = analytic_moments(&cfg.model, n)?.mean;
        let a_n = compute_norming(&cfg.model, n)?;
        let center = n as f64 * mean;
        let recs = simulate(cfg, n, |r, w, e| {
            Ok(ReplicationRecord {
                n,
                replication: r,
                statistic: normalize_t2(e, n, mean, a_n)?,
                edge_count: e,
                l_n: w.sum_l(),
                weight_statistic: Some((w.sum_l() - center) / a_n),
            })
        })?;
        let edge: Vec<f64> = recs.iter().map(|r| r.statistic).collect();
        let weight: Vec<f64> = recs.iter().filter_map(|r| r.weight_statistic).collect();
        let ks = ks_two_sample(&weight, &edge)?;
        per_n.push(summarize(n, &edge, Some(Norming { center, scale: a_n }), Some(ks), None));
        records.extend(recs);
    }
    let trend = mark_trend(&mut per_n);
    Ok(ExperimentResult { config: cfg.clone(), records, per_n, trend_decreasing: trend })
}

/// Law of large numbers: mean and spread of `E_n / n` per `n`, target `EW/2`.
pub fn run_lln(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut records = Vec::new();
    let mut per_n = Vec::new();
    for &n in &cfg.n_grid {
        let mean = analytic_moments(&cfg.model, n)?.mean;
        if !mean.is_finite() {
            return Err(Error::Hypothesis(format!("{} has infinite mean", cfg.model)));
        }
        let recs = simulate(cfg, n, |r, w, e| {
            Ok(ReplicationRecord {
                n,
                replication: r,
                statistic: e as f64 / n as f64,
                edge_count: e,
                l_n: w.sum_l(),
                weight_statistic: None,
            })
        })?;
        let values: Vec<f64> = recs.iter().map(|r| r.statistic).collect();
        per_n.push(summarize(n, &values, None, None, Some(mean / 2.0)));
        records.extend(recs);
    }
    Ok(ExperimentResult { config: cfg.clone(), records, per_n, trend_decreasing: None })
}

/// Dispatches on `cfg.theorem` (the audit has its own entry point, [`run_audit`]).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    match cfg.theorem {
        Theorem::T1 => run_theorem1(cfg),
        Theorem::T2 => run_theorem2(cfg),
        Theorem::Lln => run_lln(cfg),
        Theorem::Audit => Err(Error::Config("audit configs run through run_audit".into())),
    }
}

/// Remainder terms of the characteristic-function expansion, evaluated on
/// one weight vector. Double sums run over all `i, j` including `i = j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditTerms {
    pub n: usize,
    pub t: f64,
    pub c_n: f64,
    pub a_n: f64,
    /// `2|t|/c_n · ΣW_i² / L_n`, bound on the diagonal (self-loop) correction.
    pub selfloop_bound: f64,
    /// `|t|³ L_n / (12 c_n³)`, bound on the third-order Taylor term.
    pub i1_bound: f64,
    /// `t²/c_n² · (ΣW_i²/n)² · (n/L_n)²`, bound on the quadratic log remainder.
    pub i3_bound: f64,
    /// `(1/a_n) · ΣW_i² / L_n`.
    pub t_a: f64,
    /// `(1/a_n²) · ΣΣ W_iW_j / (L_n + W_iW_j)`.
    pub t_b: f64,
    /// `(1/a_n) · ΣΣ W_i²W_j² / (L_n (L_n + W_iW_j))`.
    pub t_c: f64,
    /// `(1/a_n²) · ΣΣ W_i²W_j² / (L_n + W_iW_j)²`.
    pub t_d: f64,
    /// `|O₁| ≤ 1/2` in the log expansion.
    pub remainder_coefficient_bound: f64,
}

impl AuditTerms {
    pub const NAMES: [&'static str; 7] = ["selfloop_bound", "i1_bound", "i3_bound", "t_a", "t_b", "t_c", "t_d"];

    pub fn values(&self) -> [f64; 7] {
        [self.selfloop_bound, self.i1_bound, self.i3_bound, self.t_a, self.t_b, self.t_c, self.t_d]
    }
}

/// Evaluates every audit term exactly as written (`O(n²)`).
pub fn proof_audit(weights: &WeightVector, t: f64, c_n: f64, a_n: f64) -> Result<AuditTerms> {
    let n = weights.len();
    if n > AUDIT_MAX_N {
        return Err(Error::Size { n, max: AUDIT_MAX_N });
    }
    if !(c_n > 0.0 && a_n > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("need c_n > 0, a_n > 0 and finite t (c_n={c_n}, a_n={a_n}, t={t})")));
    }
    let w = weights.values();
    let l = weights.sum_l();
    let sq = weights.sum_sq();
    let nf = n as f64;

    // Row sums over j ≥ i; off-diagonal terms are doubled by symmetry.
    let rows: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let wi = w[i];
            let mut acc = [0.0; 3];
            for (k, &wj) in w[i..].iter().enumerate() {
                let s = wi * wj;
                let d = l + s;
                let factor = if k == 0 { 1.0 } else { 2.0 };
                acc[0] += factor * s / d;
                acc[1] += factor * s * s / (l * d);
                acc[2] += factor * (s / d) * (s / d);
            }
            acc
        })
        .collect();
    let mut sums = [(0.0, 0.0); 3];
    for row in &rows {
        for (slot, &v) in sums.iter_mut().zip(row) {
            neumaier_add(&mut slot.0, &mut slot.1, v);
        }
    }
    let [b, c, d] = sums.map(|(s, comp)| s + comp);
    let at = t.abs();
    Ok(AuditTerms {
        n,
        t,
        c_n,
        a_n,
        selfloop_bound: 2.0 * at / c_n * sq / l,
        i1_bound: at.powi(3) * l / (12.0 * c_n.powi(3)),
        i3_bound: t * t / (c_n * c_n) * (sq / nf).powi(2) * (nf / l).powi(2),
        t_a: sq / l / a_n,
        t_b: b / (a_n * a_n),
        t_c: c / a_n,
        t_d: d / (a_n * a_n),
        remainder_coefficient_bound: REMAINDER_COEFFICIENT_BOUND,
    })
}

/// Monte Carlo estimates of `(1/a_n) E W₁²W₂² 1{W₁W₂ ≤ n}` and
/// `(n/a_n) E W₁W₂ 1{W₁W₂ > n}` from `draws` independent weight pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentBounds {
    pub n: usize,
    pub a_n: f64,
    pub truncated_square: f64,
    pub tail_product: f64,
}

pub fn moment_bounds(model: &WeightModel, n: usize, a_n: f64, draws: usize, seed: u64) -> Result<MomentBounds> {
    if draws == 0 {
        return Err(Error::Config("need at least one pair draw".into()));
    }
    let pairs = sample_weights(model, 2 * draws.max(1), seed)?;
    let v = pairs.values();
    let nf = n as f64;
    let (mut lo, mut clo, mut hi, mut chi) = (0.0, 0.0, 0.0, 0.0);
    for pair in v.chunks_exact(2) {
        let p = pair[0] * pair[1];
        if p <= nf {
            neumaier_add(&mut lo, &mut clo, p * p);
        } else {
            neumaier_add(&mut hi, &mut chi, p);
        }
    }
    let m = draws as f64;
    Ok(MomentBounds {
        n,
        a_n,
        truncated_square: (lo + clo) / m / a_n,
        tail_product: nf / a_n * (hi + chi) / m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: ExperimentConfig,
    /// One entry per `(n, t, seed index)`.
    pub terms: Vec<AuditTerms>,
    /// Per `(n, t)`: medians over seeds in the order of [`AuditTerms::NAMES`].
    pub medians: Vec<AuditMedians>,
    pub moment_bounds: Vec<MomentBounds>,
    /// Per term name: medians strictly decreasing along `n_grid` for every `t`.
    pub decreasing: Vec<(String, bool)>,
    pub moment_bounds_decreasing: (bool, bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditMedians {
    pub n: usize,
    pub t: f64,
    pub c_n: f64,
    pub a_n: f64,
    pub medians: [f64; 7],
}

/// `c_n` for the audit: `½√(n Var W)` when the variance is finite and
/// positive, otherwise `a_n / 2` as in the stable-limit argument.
pub fn audit_c_n(model: &WeightModel, n: usize, a_n: f64) -> Result<f64> {
    let m = analytic_moments(model, n)?;
    Ok(if m.variance.is_finite() && m.variance > 0.0 {
        0.5 * (n as f64 * m.variance).sqrt()
    } else {
        0.5 * a_n
    })
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Runs [`proof_audit`] for every `n` in the grid, `replications` weight
/// draws each, and every `t`; records medians and trend verdicts.
pub fn run_audit(cfg: &ExperimentConfig) -> Result<AuditReport> {
    cfg.validate()?;
    let mut terms = Vec::new();
    let mut medians = Vec::new();
    let mut bounds = Vec::new();
    let draws = cfg.pair_draws.unwrap_or(DEFAULT_PAIR_DRAWS);
    let pair_seed = derive_seed(cfg.master_seed, 0x5041_4952, 0);
    for &n in &cfg.n_grid {
        let a_n = compute_norming(&cfg.model, n)?;
        let c_n = audit_c_n(&cfg.model, n, a_n)?;
        let per_seed: Vec<WeightVector> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| sample_weights(&cfg.model, n, replication_seeds(cfg.master_seed, n, r).0))
            .collect::<Result<_>>()?;
        for &t in &cfg.t_values {
            let rows: Vec<AuditTerms> =
                per_seed.iter().map(|w| proof_audit(w, t, c_n, a_n)).collect::<Result<_>>()?;
            let mut med = [0.0; 7];
            for (k, slot) in med.iter_mut().enumerate() {
                let col: Vec<f64> = rows.iter().map(|r| r.values()[k]).collect();
                *slot = stats::median(&col).unwrap_or(f64::NAN);
            }
            medians.push(AuditMedians { n, t, c_n, a_n, medians: med });
            terms.extend(rows);
        }
        bounds.push(moment_bounds(&cfg.model, n, a_n, draws, pair_seed)?);
    }
    let decreasing = AuditTerms::NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let ok = cfg.t_values.iter().all(|&t| {
                let col: Vec<f64> = medians.iter().filter(|m| m.t == t).map(|m| m.medians[k]).collect();
                strictly_decreasing(&col)
            });
            (name.to_string(), ok)
        })
        .collect();
    let sq: Vec<f64> = bounds.iter().map(|b| b.truncated_square).collect();
    let tp: Vec<f64> = bounds.iter().map(|b| b.tail_product).collect();
    Ok(AuditReport {
        config: cfg.clone(),
        terms,
        medians,
        moment_bounds: bounds,
        decreasing,
        moment_bounds_decreasing: (strictly_decreasing(&sq), strictly_decreasing(&tp)),
    })
}
