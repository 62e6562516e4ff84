//! The generalized random graph.
//!
//! Given weights `W_1..W_n` with total `L_n`, each unordered pair `{i, j}`
//! (`i ≠ j`) is an edge independently with probability
//! `p_ij = W_i W_j / (L_n + W_i W_j)`. Self-loops are never generated.
//!
//! Two samplers produce the same law:
//!
//! * [`sample_graph_naive`] flips one coin per pair, `O(n²)`.
//! * [`sample_graph_fast`] sorts the weights in decreasing order and walks each
//!   row with geometric skips under the envelope `q_ij = min(1, W_i W_j / L_n)`,
//!   thinning landed candidates with probability `p_ij / q`. Expected work is
//!   `O(n log n + n + E[E_n])`.

use std::fmt;
use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, open01};
use crate::weights::WeightVector;

/// Largest vertex count accepted by [`exact_edge_count_pmf`].
pub const EXACT_PMF_MAX_N: usize = 12;
/// Largest vertex count accepted by the quadratic sampler.
pub const NAIVE_MAX_N: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Naive,
    Fast,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Naive => "naive",
            SamplerKind::Fast => "fast",
        })
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(SamplerKind::Naive),
            "fast" => Ok(SamplerKind::Fast),
            other => Err(Error::Config(format!("unknown sampler `{other}` (expected naive|fast)"))),
        }
    }
}

/// One realized graph. Adjacency is not kept unless requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    pub n: usize,
    pub edge_count: u64,
    pub degrees: Vec<u32>,
    pub seed: u64,
    pub sampler: SamplerKind,
    /// Pair candidates examined (coin flips for the naive sampler, landed
    /// skip positions plus direct trials for the fast one).
    pub candidates: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(u32, u32)>>,
}

impl GraphSample {
    /// Edge list in ascending lexicographic order, if it was recorded.
    pub fn sorted_edges(&self) -> Option<Vec<(u32, u32)>> {
        self.edges.as_ref().map(|e| {
            let mut e = e.clone();
            e.sort_unstable();
            e
        })
    }

    /// Writes the recorded edge list as `i j` lines, 0-indexed, ascending.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        let edges = self
            .sorted_edges()
            .ok_or_else(|| Error::Config("edge list was not recorded for this sample".into()))?;
        for (i, j) in edges {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }
}

/// Options shared by both samplers.
#[derive(Debug, Clone, Copy, Default)]
pub struct SampleOptions {
    /// Keep the edge list (memory `O(E_n)`).
    pub record_edges: bool,
}

/// `p = w_i w_j / (L_n + w_i w_j)`.
pub fn edge_probability(w_i: f64, w_j: f64, l_n: f64) -> Result<f64> {
    if !(l_n > 0.0) || !l_n.is_finite() {
        return Err(Error::Domain(format!("total weight must be positive, got {l_n}")));
    }
    if !(w_i >= 0.0 && w_j >= 0.0) {
        return Err(Error::Domain(format!("weights must be non-negative, got {w_i}, {w_j}")));
    }
    Ok(pair_probability(w_i * w_j, l_n))
}

#[inline]
fn pair_probability(product: f64, l_n: f64) -> f64 {
    product / (l_n + product)
}

struct Accumulator {
    degrees: Vec<u32>,
    edge_count: u64,
    edges: Option<Vec<(u32, u32)>>,
}

impl Accumulator {
    fn new(n: usize, record: bool) -> Self {
        Accumulator {
            degrees: vec![0; n],
            edge_count: 0,
            edges: record.then(Vec::new),
        }
    }

    #[inline]
    fn add(&mut self, a: usize, b: usize) {
        self.degrees[a] += 1;
        self.degrees[b] += 1;
        self.edge_count += 1;
        if let Some(e) = self.edges.as_mut() {
            e.push((a.min(b) as u32, a.max(b) as u32));
        }
    }
}

fn check_size(weights: &WeightVector) -> Result<()> {
    if weights.len() < 2 {
        return Err(Error::Domain(format!("graph needs at least 2 vertices, got {}", weights.len())));
    }
    if weights.len() > u32::MAX as usize {
        return Err(Error::Size { n: weights.len(), max: u32::MAX as usize });
    }
    Ok(())
}

/// One independent Bernoulli(p_ij) per pair `i < j`, in row-major order.
pub fn sample_graph_naive(weights: &WeightVector, seed: u64) -> Result<GraphSample> {
    sample_graph_naive_with(weights, seed, SampleOptions::default())
}

pub fn sample_graph_naive_with(weights: &WeightVector, seed: u64, opts: SampleOptions) -> Result<GraphSample> {
    check_size(weights)?;
    if weights.len() > NAIVE_MAX_N {
        return Err(Error::Size { n: weights.len(), max: NAIVE_MAX_N });
    }
    let w = weights.values();
    let l = weights.sum_l();
    let n = w.len();
    let mut rng = seed::rng_from_seed(seed);
    let mut acc = Accumulator::new(n, opts.record_edges);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = pair_probability(w[i] * w[j], l);
            if rng.random::<f64>() < p {
                acc.add(i, j);
            }
        }
    }
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    Ok(GraphSample {
        n,
        edge_count: acc.edge_count,
        degrees: acc.degrees,
        seed,
        sampler: SamplerKind::Naive,
        candidates: pairs,
        edges: acc.edges,
    })
}

/// Skip sampler with the same law as [`sample_graph_naive`].
pub fn sample_graph_fast(weights: &WeightVector, seed: u64) -> Result<GraphSample> {
    sample_graph_fast_with(weights, seed, SampleOptions::default())
}

pub fn sample_graph_fast_with(weights: &WeightVector, seed: u64, opts: SampleOptions) -> Result<GraphSample> {
    check_size(weights)?;
    let n = weights.len();
    let l = weights.sum_l();
    let mut order: Vec<u32> = (0..n as u32).collect();
    let w = weights.values();
    // Descending weight; index breaks ties so the order is total and deterministic.
    order.sort_unstable_by(|&a, &b| w[b as usize].total_cmp(&w[a as usize]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&v| w[v as usize]).collect();

    let mut rng = seed::rng_from_seed(seed);
    let mut acc = Accumulator::new(n, opts.record_edges);
    let mut candidates: u64 = 0;

    for u in 0..n.saturating_sub(1) {
        let wu = sorted[u];
        let mut v = u + 1;
        // Envelope at the current position; non-increasing along the row.
        let mut q = (wu * sorted[v] / l).min(1.0);
        while v < n {
            if q >= 1.0 {
                // Dense corner: plain Bernoulli trial.
                candidates += 1;
                let product = wu * sorted[v];
                if rng.random::<f64>() < pair_probability(product, l) {
                    acc.add(order[u] as usize, order[v] as usize);
                }
                v += 1;
                if v < n {
                    q = (wu * sorted[v] / l).min(1.0);
                }
                continue;
            }
            if q <= 0.0 {
                break;
            }
            // Number of Bernoulli(q) failures before the next success.
            let skip = (open01(&mut rng).ln() / (-q).ln_1p()).floor();
            if skip >= (n - v) as f64 {
                break;
            }
            v += skip as usize;
            candidates += 1;
            let product = wu * sorted[v];
            let p = pair_probability(product, l);
            if rng.random::<f64>() * q < p {
                acc.add(order[u] as usize, order[v] as usize);
            }
            q = (product / l).min(1.0);
            v += 1;
        }
    }

    Ok(GraphSample {
        n,
        edge_count: acc.edge_count,
        degrees: acc.degrees,
        seed,
        sampler: SamplerKind::Fast,
        candidates,
        edges: acc.edges,
    })
}

pub fn sample_graph(weights: &WeightVector, seed: u64, kind: SamplerKind) -> Result<GraphSample> {
    match kind {
        SamplerKind::Naive => sample_graph_naive(weights, seed),
        SamplerKind::Fast => sample_graph_fast(weights, seed),
    }
}

/// Degree sequence in the original vertex order.
pub fn degree_sequence(sample: &GraphSample) -> &[u32] {
    &sample.degrees
}

/// Exact law of `E_n` given the weights: a Poisson-binomial distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCountPmf {
    pub probabilities: Vec<f64>,
}

impl EdgeCountPmf {
    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// Total-variation distance to an empirical pmf given as counts.
    pub fn total_variation(&self, counts: &[u64]) -> f64 {
        let total: u64 = counts.iter().sum();
        let len = self.probabilities.len().max(counts.len());
        0.5 * (0..len)
            .map(|k| {
                let p = self.probabilities.get(k).copied().unwrap_or(0.0);
                let q = counts.get(k).map_or(0.0, |&c| c as f64 / total as f64);
                (p - q).abs()
            })
            .sum::<f64>()
    }
}

/// Convolves `[1 − p, p]` over the `n(n−1)/2` edge indicators.
pub fn exact_edge_count_pmf(weights: &WeightVector) -> Result<EdgeCountPmf> {
    let n = weights.len();
    if n > EXACT_PMF_MAX_N {
        return Err(Error::Size { n, max: EXACT_PMF_MAX_N });
    }
    let w = weights.values();
    let l = weights.sum_l();
    let m = n * n.saturating_sub(1) / 2;
    let mut pmf = vec![0.0; m + 1];
    pmf[0] = 1.0;
    let mut used = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let p = pair_probability(w[i] * w[j], l);
            used += 1;
            for k in (1..=used).rev() {
                pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
            }
            pmf[0] *= 1.0 - p;
        }
    }
    Ok(EdgeCountPmf { probabilities: pmf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{sample_weights, WeightModel};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn wv(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    /// Brute force over all 2^m edge configurations.
    fn enumerate_pmf(w: &[f64]) -> Vec<f64> {
        let l: f64 = w.iter().sum();
        let mut probs = Vec::new();
        for i in 0..w.len() {
            for j in (i + 1)..w.len() {
                probs.push(w[i] * w[j] / (l + w[i] * w[j]));
            }
        }
        let mut out = vec![0.0; probs.len() + 1];
        for mask in 0u32..(1 << probs.len()) {
            let mut p = 1.0;
            for (b, &q) in probs.iter().enumerate() {
                p *= if mask >> b & 1 == 1 { q } else { 1.0 - q };
            }
            out[mask.count_ones() as usize] += p;
        }
        out
    }

    #[test]
    fn naive_rejects_oversized_input() {
        let w = WeightVector::new(vec![1.0; NAIVE_MAX_N + 1]).unwrap();
        assert!(matches!(sample_graph_naive(&w, 1), Err(Error::Size { .. })));
    }

    #[test]
    fn edge_probability_examples() {
        assert_eq!(edge_probability(1.0, 1.0, 3.0).unwrap(), 0.25);
        assert_abs_diff_eq!(edge_probability(2.5, 2.5, 25.0).unwrap(), 0.2, epsilon = 1e-16);
        assert_eq!(edge_probability(0.0, 5.0, 10.0).unwrap(), 0.0);
        assert!(edge_probability(1.0, 1.0, 0.0).is_err());
        assert!(edge_probability(1.0, 1.0, -2.0).is_err());
    }

    #[test]
    fn constant_weights_give_lambda_over_n() {
        for (lambda, n) in [(2.0, 10usize), (0.5, 7), (3.0, 1000)] {
            let w = sample_weights(&WeightModel::Constant { lambda }, n, 0).unwrap();
            let target = lambda / n as f64;
            let p = edge_probability(w.values()[0], w.values()[1], w.sum_l()).unwrap();
            let ulps = (p.to_bits() as i64 - target.to_bits() as i64).abs();
            assert!(ulps <= 4, "lambda={lambda} n={n}: {p} vs {target}");
        }
    }

    #[test]
    fn exact_pmf_examples() {
        let p = exact_edge_count_pmf(&wv(&[1.0, 1.0])).unwrap().probabilities;
        assert_abs_diff_eq!(p[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 1.0 / 3.0, epsilon = 1e-15);
        let p = exact_edge_count_pmf(&wv(&[1.0, 1.0, 1.0])).unwrap().probabilities;
        for (a, b) in p.iter().zip([27.0, 27.0, 9.0, 1.0]) {
            assert_abs_diff_eq!(*a, b / 64.0, epsilon = 1e-15);
        }
        let p = exact_edge_count_pmf(&wv(&[1.0, 2.0, 3.0])).unwrap().probabilities;
        let oracle = enumerate_pmf(&[1.0, 2.0, 3.0]);
        for ((a, b), c) in p.iter().zip(&oracle).zip([6.0, 11.0, 6.0, 1.0]) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
            assert_abs_diff_eq!(*a, c / 24.0, epsilon = 1e-15);
        }
        assert!(matches!(exact_edge_count_pmf(&wv(&[1.0; 13])), Err(Error::Size { .. })));
    }

    #[test]
    fn single_pair_frequency() {
        let w = wv(&[1.0, 1.0]);
        for kind in [SamplerKind::Naive, SamplerKind::Fast] {
            let hits = (0..30_000u64)
                .filter(|&s| sample_graph(&w, s, kind).unwrap().edge_count == 1)
                .count();
            let f = hits as f64 / 3e4;
            assert!((f - 1.0 / 3.0).abs() < 0.01, "{kind}: {f}");
        }
    }

    #[test]
    fn n2_accept_event_matches_naive() {
        // With one pair the envelope is q = w1 w2 / L < 1; a landed candidate at
        // the only position happens with probability q, accepted w.p. p/q.
        let w = wv(&[2.0, 5.0]);
        let p = 10.0 / 17.0;
        let hits = (0..40_000u64)
            .filter(|&s| sample_graph_fast(&w, s).unwrap().edge_count == 1)
            .count() as f64
            / 4e4;
        assert!((hits - p).abs() < 0.01, "{hits} vs {p}");
    }

    #[test]
    fn three_equal_weights_mean() {
        let w = wv(&[1.0, 1.0, 1.0]);
        let mean = (0..10_000u64)
            .map(|s| sample_graph_naive(&w, s).unwrap().edge_count as f64)
            .sum::<f64>()
            / 1e4;
        assert!((mean - 0.75).abs() < 0.02, "{mean}");
    }

    #[test]
    fn er_expected_edges_and_degrees() {
        let w = sample_weights(&WeightModel::Constant { lambda: 2.0 }, 10, 0).unwrap();
        let reps = 10_000u64;
        let (mut edges, mut deg) = (0.0, 0.0);
        for s in 0..reps {
            let g = sample_graph_naive(&w, s).unwrap();
            edges += g.edge_count as f64;
            deg += degree_sequence(&g).iter().map(|&d| d as f64).sum::<f64>() / 10.0;
        }
        assert!((edges / reps as f64 - 9.0).abs() < 0.1);
        assert!((deg / reps as f64 - 1.8).abs() < 0.05);
    }

    #[test]
    fn degree_sequence_examples() {
        let w = wv(&[1e9, 1e9]);
        let g = (0..100).map(|s| sample_graph_naive(&w, s).unwrap()).find(|g| g.edge_count == 1).unwrap();
        assert_eq!(degree_sequence(&g), &[1, 1]);
        let w = wv(&[1e-9, 1e-9, 1e-9]);
        let g = sample_graph_fast(&w, 3).unwrap();
        assert_eq!(degree_sequence(&g), &[0, 0, 0]);
    }

    #[test]
    fn dense_corner_uses_direct_trials() {
        // Two huge weights: w1 w2 ≥ L, so the envelope saturates at 1.
        let w = wv(&[1e6, 1e6, 1.0, 1.0]);
        let pmf = exact_edge_count_pmf(&w).unwrap();
        let mut counts = vec![0u64; pmf.probabilities.len()];
        for s in 0..50_000u64 {
            counts[sample_graph_fast(&w, s).unwrap().edge_count as usize] += 1;
        }
        assert!(pmf.total_variation(&counts) < 0.02);
    }

    #[test]
    fn edge_list_dump_is_sorted() {
        let w = sample_weights(&WeightModel::Exponential { rate: 0.2 }, 30, 8).unwrap();
        let g = sample_graph_fast_with(&w, 1, SampleOptions { record_edges: true }).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let pairs: Vec<(u32, u32)> = text
            .lines()
            .map(|l| {
                let mut it = l.split(' ').map(|t| t.parse().unwrap());
                (it.next().unwrap(), it.next().unwrap())
            })
            .collect();
        assert_eq!(pairs.len() as u64, g.edge_count);
        assert!(pairs.windows(2).all(|p| p[0] < p[1]));
        assert!(pairs.iter().all(|(i, j)| i < j));
        assert!(sample_graph_fast(&w, 1).unwrap().write_edge_list(Vec::new()).is_err());
    }

    proptest! {
        #[test]
        fn handshake_and_bounds(values in prop::collection::vec(0.01f64..50.0, 2..40), seed in any::<u64>()) {
            let w = wv(&values);
            for g in [sample_graph_naive(&w, seed).unwrap(), sample_graph_fast(&w, seed).unwrap()] {
                let total: u64 = g.degrees.iter().map(|&d| d as u64).sum();
                prop_assert_eq!(total, 2 * g.edge_count);
                let n = values.len() as u64;
                prop_assert!(g.edge_count <= n * (n - 1) / 2);
                prop_assert!(g.degrees.iter().all(|&d| (d as u64) < n));
            }
        }

        #[test]
        fn probability_symmetric_and_monotone(a in 0.0f64..100.0, b in 0.0f64..100.0, l in 0.1f64..1e3, s in 1.001f64..10.0) {
            let p = edge_probability(a, b, l).unwrap();
            prop_assert_eq!(p, edge_probability(b, a, l).unwrap());
            prop_assert!((0.0..1.0).contains(&p));
            if a > 0.0 && b > 0.0 {
                prop_assert!(edge_probability(a * s, b * s, l).unwrap() > p);
                prop_assert!(edge_probability(a * s, b, l).unwrap() > p);
            }
        }

        #[test]
        fn pmf_is_normalized_with_correct_mean(values in prop::collection::vec(0.05f64..20.0, 2..9)) {
            let w = wv(&values);
            let pmf = exact_edge_count_pmf(&w).unwrap();
            prop_assert!(pmf.probabilities.iter().all(|&p| p >= 0.0));
            prop_assert!((pmf.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let mut expect = 0.0;
            for i in 0..values.len() {
                for j in (i + 1)..values.len() {
                    expect += edge_probability(values[i], values[j], w.sum_l()).unwrap();
                }
            }
            prop_assert!((pmf.mean() - expect).abs() < 1e-10);
        }
    }
}
