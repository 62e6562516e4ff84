//! Vertex-weight laws.
//!
//! A [`WeightModel`] is a parametric law for the i.i.d. weights `W_1..W_n`.
//! Besides sampling, every model reports its analytic moments, the truncated
//! moments `E W² 1{W ≤ x}` and `E W 1{W ≥ x}`, and (for the regularly
//! varying families) the tail data `P(W > x) ~ c x^{-α} h(x)`.
//!
//! Truncated moments are available along two independent routes: closed
//! forms where they exist, and adaptive quadrature of the density
//! ([`truncated_second_moment_numeric`], [`truncated_first_moment_tail_numeric`]).

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Exp, Gamma, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, neumaier_add};
use crate::seed::{self, open01};
use crate::stats::normal_cdf;

/// Absolute tolerance used for quadrature-based truncated moments.
pub const QUAD_TOL: f64 = 1e-10;

/// Parametric law of a single vertex weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightModel {
    /// Every weight equals `nλ/(n−λ)`; the edge probability is then `λ/n`
    /// for every pair. Needs `n` to become a concrete law, see [`WeightModel::resolve`].
    Constant { lambda: f64 },
    /// Point mass at `value` (a resolved `Constant`).
    Point { value: f64 },
    Exponential { rate: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, scale: f64 },
    /// `P(W > x) = (x/xm)^{-α}` for `x ≥ xm`.
    Pareto { alpha: f64, xm: f64 },
    /// `P(W > x) = (x/xm)^{-α} (1 + ln(x/xm))` for `x ≥ xm`.
    ParetoLog { alpha: f64, xm: f64 },
}

/// Slowly varying factor in the tail `P(W > x) ~ c x^{-α} h(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlowVariation {
    /// `h ≡ 1`.
    Constant,
    /// `h(x) = 1 + ln(x / x0)`.
    Logarithmic { x0: f64 },
}

impl SlowVariation {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SlowVariation::Constant => 1.0,
            SlowVariation::Logarithmic { x0 } => 1.0 + (x / x0).ln(),
        }
    }
}

/// Regular-variation data of a heavy-tailed weight law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    pub alpha: f64,
    pub c: f64,
    pub h: SlowVariation,
}

impl TailParams {
    pub fn in_stable_range(&self) -> bool {
        self.alpha > 1.0 && self.alpha < 2.0
    }
}

/// Mean, variance and second moment; infinite values are `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub second_moment: f64,
}

impl Moments {
    pub fn has_finite_second_moment(&self) -> bool {
        self.second_moment.is_finite()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl WeightModel {
    /// Checks parameter domains (the `Constant` `λ < n` check happens in [`resolve`](Self::resolve)).
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightModel::Constant { lambda } => positive("lambda", lambda),
            WeightModel::Point { value } => positive("value", value),
            WeightModel::Exponential { rate } => positive("rate", rate),
            WeightModel::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::Parameter(format!("mu must be finite, got {mu}")));
                }
                positive("sigma", sigma)
            }
            WeightModel::Gamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)
            }
            WeightModel::Pareto { alpha, xm } => {
                positive("alpha", alpha)?;
                positive("xm", xm)
            }
            WeightModel::ParetoLog { alpha, xm } => {
                positive("xm", xm)?;
                // The survival function is only monotone for α ≥ 1.
                if !(alpha >= 1.0 && alpha.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "pareto_log needs alpha >= 1, got {alpha}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Turns a `Constant` into the point mass `nλ/(n−λ)`; other models are returned unchanged.
    pub fn resolve(&self, n: usize) -> Result<WeightModel> {
        self.validate()?;
        match *self {
            WeightModel::Constant { lambda } => {
                let nf = n as f64;
                if n == 0 || lambda >= nf {
                    return Err(Error::ConstantDomain { lambda, n });
                }
                Ok(WeightModel::Point {
                    value: nf * lambda / (nf - lambda),
                })
            }
            other => Ok(other),
        }
    }

    fn require_resolved(&self) -> Result<()> {
        self.validate()?;
        if let WeightModel::Constant { .. } = self {
            return Err(Error::UnsupportedModel(
                "constant model must be resolved at a vertex count first".into(),
            ));
        }
        Ok(())
    }

    /// Tail data for the regularly varying families, `None` otherwise.
    pub fn tail_params(&self) -> Option<TailParams> {
        match *self {
            WeightModel::Pareto { alpha, xm } => Some(TailParams {
                alpha,
                c: xm.powf(alpha),
                h: SlowVariation::Constant,
            }),
            WeightModel::ParetoLog { alpha, xm } => Some(TailParams {
                alpha,
                c: xm.powf(alpha),
                h: SlowVariation::Logarithmic { x0: xm },
            }),
            _ => None,
        }
    }

    /// Left end of the support.
    pub fn support_min(&self) -> f64 {
        match *self {
            WeightModel::Pareto { xm, .. } | WeightModel::ParetoLog { xm, .. } => xm,
            WeightModel::Point { value } => value,
            _ => 0.0,
        }
    }

    /// `P(W > x)`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        self.require_resolved()?;
        Ok(match *self {
            WeightModel::Point { value } => f64::from(u8::from(value > x)),
            WeightModel::Exponential { rate } => (-rate * x.max(0.0)).exp(),
            WeightModel::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    normal_cdf(-(x.ln() - mu) / sigma)
                }
            }
            WeightModel::Gamma { .. } => {
                if x <= 0.0 {
                    1.0
                } else {
                    quadrature::integrate_to_infinity(|w| self.density(w), x, QUAD_TOL)?
                }
            }
            WeightModel::Pareto { alpha, xm } => {
                if x <= xm {
                    1.0
                } else {
                    (x / xm).powf(-alpha)
                }
            }
            WeightModel::ParetoLog { alpha, xm } => {
                if x <= xm {
                    1.0
                } else {
                    let y = (x / xm).ln();
                    (-alpha * y).exp() * (1.0 + y)
                }
            }
            WeightModel::Constant { .. } => unreachable!(),
        })
    }

    /// Lebesgue density; zero for the point mass.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            WeightModel::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            WeightModel::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = (x.ln() - mu) / sigma;
                    (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
                }
            }
            WeightModel::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    ((shape - 1.0) * x.ln() - x / scale - libm::lgamma(shape) - shape * scale.ln())
                        .exp()
                }
            }
            WeightModel::Pareto { alpha, xm } => {
                if x < xm {
                    0.0
                } else {
                    alpha / xm * (x / xm).powf(-alpha - 1.0)
                }
            }
            WeightModel::ParetoLog { alpha, xm } => {
                if x < xm {
                    0.0
                } else {
                    let y = (x / xm).ln();
                    (-alpha * y).exp() * (alpha * (1.0 + y) - 1.0) / x
                }
            }
            WeightModel::Point { .. } | WeightModel::Constant { .. } => 0.0,
        }
    }

    fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R, sampler: &Sampler) -> f64 {
        match (*self, sampler) {
            (WeightModel::Point { value }, _) => value,
            (_, Sampler::Exp(d)) => d.sample(rng),
            (_, Sampler::LogNormal(d)) => d.sample(rng),
            (_, Sampler::Gamma(d)) => {
                // Gamma with tiny shape can round to 0; weights must stay positive.
                loop {
                    let v = d.sample(rng);
                    if v > 0.0 {
                        return v;
                    }
                }
            }
            (WeightModel::Pareto { alpha, xm }, _) => xm * open01(rng).powf(-1.0 / alpha),
            (WeightModel::ParetoLog { alpha, xm }, _) => {
                xm * pareto_log_inverse_survival(alpha, open01(rng)).exp()
            }
            _ => unreachable!("sampler/model mismatch"),
        }
    }
}

enum Sampler {
    None,
    Exp(Exp<f64>),
    LogNormal(LogNormal<f64>),
    Gamma(Gamma<f64>),
}

fn sampler_for(model: &WeightModel) -> Result<Sampler> {
    let bad = |e: &dyn fmt::Display| Error::Parameter(e.to_string());
    Ok(match *model {
        WeightModel::Exponential { rate } => Sampler::Exp(Exp::new(rate).map_err(|e| bad(&e))?),
        WeightModel::LogNormal { mu, sigma } => {
            Sampler::LogNormal(LogNormal::new(mu, sigma).map_err(|e| bad(&e))?)
        }
        WeightModel::Gamma { shape, scale } => {
            Sampler::Gamma(Gamma::new(shape, scale).map_err(|e| bad(&e))?)
        }
        _ => Sampler::None,
    })
}

/// Solves `e^{-αy}(1+y) = u` for `y ≥ 0` by bisection.
fn pareto_log_inverse_survival(alpha: f64, u: f64) -> f64 {
    let surv = |y: f64| (-alpha * y).exp() * (1.0 + y);
    if u >= 1.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while surv(hi) > u {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if surv(mid) > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl fmt::Display for WeightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            WeightModel::Constant { lambda } => write!(f, "constant:lambda={lambda}"),
            WeightModel::Point { value } => write!(f, "point:value={value}"),
            WeightModel::Exponential { rate } => write!(f, "exponential:rate={rate}"),
            WeightModel::LogNormal { mu, sigma } => write!(f, "lognormal:mu={mu},sigma={sigma}"),
            WeightModel::Gamma { shape, scale } => write!(f, "gamma:shape={shape},scale={scale}"),
            WeightModel::Pareto { alpha, xm } => write!(f, "pareto:alpha={alpha},xm={xm}"),
            WeightModel::ParetoLog { alpha, xm } => write!(f, "pareto_log:alpha={alpha},xm={xm}"),
        }
    }
}

/// Parses `kind:key=value,key=value`, e.g. `pareto:alpha=1.5,xm=1`.
impl FromStr for WeightModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = Vec::new();
        for item in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{item}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{v}` is not a number")))?;
            params.push((k.trim().to_string(), v));
        }
        let mut take = |key: &str, default: Option<f64>| -> Result<f64> {
            match params.iter().position(|(k, _)| k == key) {
                Some(i) => Ok(params.swap_remove(i).1),
                None => default.ok_or_else(|| Error::Config(format!("missing `{key}` for `{kind}`"))),
            }
        };
        let model = match kind.trim().to_ascii_lowercase().as_str() {
            "constant" => WeightModel::Constant { lambda: take("lambda", None)? },
            "point" => WeightModel::Point { value: take("value", None)? },
            "exponential" | "exp" => WeightModel::Exponential { rate: take("rate", Some(1.0))? },
            "lognormal" => WeightModel::LogNormal {
                mu: take("mu", Some(0.0))?,
                sigma: take("sigma", Some(1.0))?,
            },
            "gamma" => WeightModel::Gamma {
                shape: take("shape", None)?,
                scale: take("scale", Some(1.0))?,
            },
            "pareto" => WeightModel::Pareto {
                alpha: take("alpha", None)?,
                xm: take("xm", Some(1.0))?,
            },
            "pareto_log" | "paretolog" => WeightModel::ParetoLog {
                alpha: take("alpha", None)?,
                xm: take("xm", Some(1.0))?,
            },
            other => return Err(Error::Config(format!("unknown weight model `{other}`"))),
        };
        if let Some((k, _)) = params.first() {
            return Err(Error::Config(format!("unknown parameter `{k}` for `{kind}`")));
        }
        model.validate()?;
        Ok(model)
    }
}

/// A realized weight sample with cached `L_n = ΣW_i` and `ΣW_i²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    values: Vec<f64>,
    sum_l: f64,
    sum_sq: f64,
}

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("weight vector must be non-empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("weights must be positive and finite, got {bad}")));
        }
        let (mut s, mut cs, mut q, mut cq) = (0.0, 0.0, 0.0, 0.0);
        for &v in &values {
            neumaier_add(&mut s, &mut cs, v);
            neumaier_add(&mut q, &mut cq, v * v);
        }
        Ok(WeightVector {
            values,
            sum_l: s + cs,
            sum_sq: q + cq,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total weight `L_n`.
    pub fn sum_l(&self) -> f64 {
        self.sum_l
    }

    /// `Σ W_i²`.
    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }
}

/// Draws `n` i.i.d. weights; bitwise deterministic in `(model, n, seed)`.
pub fn sample_weights(model: &WeightModel, n: usize, seed: u64) -> Result<WeightVector> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 vertices, got {n}")));
    }
    let law = model.resolve(n)?;
    let sampler = sampler_for(&law)?;
    let mut rng = seed::rng_from_seed(seed);
    let values = (0..n).map(|_| law.draw(&mut rng, &sampler)).collect();
    WeightVector::new(values)
}

/// Closed-form mean, variance and second moment. `n` is only used to resolve `Constant`.
pub fn analytic_moments(model: &WeightModel, n: usize) -> Result<Moments> {
    let law = model.resolve(n)?;
    let (mean, second) = match law {
        WeightModel::Point { value } => (value, value * value),
        WeightModel::Exponential { rate } => (1.0 / rate, 2.0 / (rate * rate)),
        WeightModel::LogNormal { mu, sigma } => {
            ((mu + 0.5 * sigma * sigma).exp(), (2.0 * mu + 2.0 * sigma * sigma).exp())
        }
        WeightModel::Gamma { shape, scale } => (shape * scale, shape * (shape + 1.0) * scale * scale),
        WeightModel::Pareto { alpha, xm } => {
            let m1 = if alpha > 1.0 { alpha * xm / (alpha - 1.0) } else { f64::INFINITY };
            let m2 = if alpha > 2.0 { alpha * xm * xm / (alpha - 2.0) } else { f64::INFINITY };
            (m1, m2)
        }
        WeightModel::ParetoLog { alpha, xm } => {
            let moment = |k: f64| {
                if alpha > k {
                    let d = alpha - k;
                    xm.powf(k) * ((alpha - 1.0) / d + alpha / (d * d))
                } else {
                    f64::INFINITY
                }
            };
            (moment(1.0), moment(2.0))
        }
        WeightModel::Constant { .. } => unreachable!(),
    };
    let variance = match law {
        WeightModel::Point { .. } => 0.0,
        WeightModel::Exponential { rate } => 1.0 / (rate * rate),
        WeightModel::Gamma { shape, scale } => shape * scale * scale,
        _ if second.is_finite() => second - mean * mean,
        _ => f64::INFINITY,
    };
    Ok(Moments {
        mean,
        variance,
        second_moment: second,
    })
}

/// `E W² 1{W ≤ x}`, closed form where available and quadrature otherwise.
pub fn truncated_second_moment(model: &WeightModel, x: f64) -> Result<f64> {
    model.require_resolved()?;
    if x.is_nan() {
        return Err(Error::Domain("x must not be NaN".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(match *model {
        WeightModel::Point { value } => {
            if value <= x {
                value * value
            } else {
                0.0
            }
        }
        WeightModel::Exponential { rate } => {
            let t = rate * x;
            if t < 1e-3 {
                // Series avoids cancellation: ∫₀ˣ r w² e^{-rw} dw = (2/r²) Σ_{k≥3} (-1)^{k+1} t^k / k! ...
                let mut term = t * t * t / 6.0;
                let mut acc = 0.0;
                let mut k = 3.0;
                while term.abs() > 1e-300 && k < 40.0 {
                    acc += term;
                    k += 1.0;
                    term *= -t / k;
                }
                2.0 * acc / (rate * rate)
            } else {
                2.0 / (rate * rate) - (-t).exp() * (x * x + 2.0 * x / rate + 2.0 / (rate * rate))
            }
        }
        WeightModel::LogNormal { mu, sigma } => {
            (2.0 * mu + 2.0 * sigma * sigma).exp() * normal_cdf((x.ln() - mu - 2.0 * sigma * sigma) / sigma)
        }
        WeightModel::Pareto { alpha, xm } => {
            if x <= xm {
                0.0
            } else if (alpha - 2.0).abs() < 1e-12 {
                2.0 * xm * xm * (x / xm).ln()
            } else {
                let g = 2.0 - alpha;
                alpha * xm * xm * ((x / xm).powf(g) - 1.0) / g
            }
        }
        WeightModel::ParetoLog { alpha, xm } => {
            if x <= xm {
                0.0
            } else {
                let y = (x / xm).ln();
                let g = 2.0 - alpha;
                let inner = if g.abs() < 1e-12 {
                    (alpha - 1.0) * y + 0.5 * alpha * y * y
                } else {
                    let a = (g * y).exp_m1() / g;
                    let b = y * (g * y).exp() / g - a / g;
                    (alpha - 1.0) * a + alpha * b
                };
                xm * xm * inner
            }
        }
        WeightModel::Gamma { .. } => truncated_second_moment_numeric(model, x)?,
        WeightModel::Constant { .. } => unreachable!(),
    })
}

/// `E W 1{W ≥ x}`, closed form where available and quadrature otherwise.
pub fn truncated_first_moment_tail(model: &WeightModel, x: f64) -> Result<f64> {
    model.require_resolved()?;
    if x.is_nan() {
        return Err(Error::Domain("x must not be NaN".into()));
    }
    let mean = analytic_moments(model, 2)?.mean;
    if x <= model.support_min() && !matches!(model, WeightModel::Point { .. }) {
        return Ok(mean);
    }
    Ok(match *model {
        WeightModel::Point { value } => {
            if value >= x {
                value
            } else {
                0.0
            }
        }
        WeightModel::Exponential { rate } => (-rate * x).exp() * (x + 1.0 / rate),
        WeightModel::LogNormal { mu, sigma } => mean * normal_cdf(-(x.ln() - mu - sigma * sigma) / sigma),
        WeightModel::Pareto { alpha, xm } => {
            if alpha <= 1.0 {
                f64::INFINITY
            } else {
                alpha * xm.powf(alpha) * x.powf(1.0 - alpha) / (alpha - 1.0)
            }
        }
        WeightModel::ParetoLog { alpha, xm } => {
            if alpha <= 1.0 {
                f64::INFINITY
            } else {
                let y = (x / xm).ln();
                let b = alpha - 1.0;
                xm * (-b * y).exp() * (1.0 + alpha * y / b + alpha / (b * b))
            }
        }
        WeightModel::Gamma { .. } => truncated_first_moment_tail_numeric(model, x)?,
        WeightModel::Constant { .. } => unreachable!(),
    })
}

/// `E W² 1{W ≤ x}` by adaptive quadrature of the density.
pub fn truncated_second_moment_numeric(model: &WeightModel, x: f64) -> Result<f64> {
    model.require_resolved()?;
    if let WeightModel::Point { .. } = model {
        return Err(Error::UnsupportedModel("point mass has no density".into()));
    }
    let lo = model.support_min();
    if x <= lo {
        return Ok(0.0);
    }
    quadrature::integrate(|w| w * w * model.density(w), lo, x, QUAD_TOL)
}

/// `E W 1{W ≥ x}` by adaptive quadrature of the density.
pub fn truncated_first_moment_tail_numeric(model: &WeightModel, x: f64) -> Result<f64> {
    model.require_resolved()?;
    if let WeightModel::Point { .. } = model {
        return Err(Error::UnsupportedModel("point mass has no density".into()));
    }
    let lo = x.max(model.support_min());
    if lo > 0.0 {
        // w = lo·e^u turns polynomial tails into exponential ones.
        quadrature::integrate_to_infinity(
            |u| {
                let w = lo * u.exp();
                w * w * model.density(w)
            },
            0.0,
            QUAD_TOL,
        )
    } else {
        quadrature::integrate_to_infinity(|w| w * model.density(w), 0.0, QUAD_TOL)
    }
}

/// Exact truncated moments divided by their regular-variation asymptotes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Ratios {
    pub x: f64,
    /// `E W² 1{W ≤ x}` over `cα/(2−α) x^{2−α} h(x)`.
    pub ratio_second: f64,
    /// `E W 1{W ≥ x}` over `cα/(α−1) x^{1−α} h(x)`.
    pub ratio_tail_karamata: f64,
    /// `E W 1{W ≥ x}` over `c(2−α)/(α−1) x^{1−α} h(x)`.
    pub ratio_tail_alternative: f64,
}

/// Compares the exact truncated moments with their asymptotic forms on `x_grid`.
///
/// Two constants are reported for the tail moment: the Karamata constant
/// `cα/(α−1)` and the alternative `c(2−α)/(α−1)`. Only the former is
/// asymptotically correct; the latter is kept so the discrepancy (a factor
/// `α/(2−α)`, i.e. 3 at α = 1.5) stays visible in reports.
pub fn lemma1_ratio_check(model: &WeightModel, x_grid: &[f64]) -> Result<Vec<Lemma1Ratios>> {
    model.validate()?;
    let tail = model
        .tail_params()
        .ok_or_else(|| Error::UnsupportedModel(format!("{model} has no regular-variation tail data")))?;
    if !tail.in_stable_range() {
        return Err(Error::Hypothesis(format!(
            "truncated-moment asymptotics need alpha in (1,2), got {}",
            tail.alpha
        )));
    }
    let a = tail.alpha;
    x_grid
        .iter()
        .map(|&x| {
            if !(x > model.support_min()) {
                return Err(Error::Domain(format!(
                    "x = {x} must exceed the support minimum {}",
                    model.support_min()
                )));
            }
            let h = tail.h.eval(x);
            let second = truncated_second_moment(model, x)?;
            let first = truncated_first_moment_tail(model, x)?;
            let asym_second = tail.c * a / (2.0 - a) * x.powf(2.0 - a) * h;
            let base_tail = tail.c * x.powf(1.0 - a) * h / (a - 1.0);
            Ok(Lemma1Ratios {
                x,
                ratio_second: second / asym_second,
                ratio_tail_karamata: first / (a * base_tail),
                ratio_tail_alternative: first / ((2.0 - a) * base_tail),
            })
        })
        .collect()
}

/// Norming constant `a_n`: the largest root of `a² = n E W² 1{W ≤ a}`.
///
/// `a ↦ n E W² 1{W ≤ a} − a²` is scanned on a geometric grid until it turns
/// from positive to negative; the bracket is then bisected.
pub fn compute_norming(model: &WeightModel, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Bracketing(format!("norming needs n >= 2, got {n}")));
    }
    let law = model.resolve(n)?;
    let nf = n as f64;
    let excess = |a: f64| -> Result<f64> { Ok(nf * truncated_second_moment(&law, a)? / (a * a) - 1.0) };

    let start = match law.support_min() {
        m if m > 0.0 => m,
        _ => {
            let mean = analytic_moments(&law, n)?.mean;
            if !mean.is_finite() {
                return Err(Error::Hypothesis("norming needs a finite mean".into()));
            }
            mean * 1e-3
        }
    };
    let step = 2f64.powf(0.25);
    let mut a = start * step;
    let mut seen_positive: Option<f64> = None;
    let mut bracket = None;
    for _ in 0..4000 {
        let v = excess(a)?;
        if v > 0.0 {
            seen_positive = Some(a);
        } else if let Some(lo) = seen_positive {
            bracket = Some((lo, a));
            break;
        }
        a *= step;
        if !a.is_finite() || a > 1e300 {
            break;
        }
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::Bracketing(format!(
            "n E W^2 1{{W <= a}} never exceeds a^2 for {law} at n = {n}"
        ))
    })?;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= 1e-14 * mid {
            break;
        }
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const PARETO: WeightModel = WeightModel::Pareto { alpha: 1.5, xm: 1.0 };

    #[test]
    fn constant_resolves_to_er_weight() {
        let w = sample_weights(&WeightModel::Constant { lambda: 2.0 }, 10, 99).unwrap();
        assert!(w.values().iter().all(|&v| v == 2.5));
        assert_eq!(w.sum_l(), 25.0);
    }

    #[test]
    fn constant_lambda_at_least_n_is_rejected() {
        let err = sample_weights(&WeightModel::Constant { lambda: 10.0 }, 10, 1).unwrap_err();
        assert!(matches!(err, Error::ConstantDomain { .. }));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        for m in [
            WeightModel::Exponential { rate: 0.0 },
            WeightModel::Pareto { alpha: -1.0, xm: 1.0 },
            WeightModel::Gamma { shape: 1.0, scale: f64::NAN },
            WeightModel::LogNormal { mu: 0.0, sigma: -1.0 },
            WeightModel::ParetoLog { alpha: 0.5, xm: 1.0 },
        ] {
            assert!(matches!(sample_weights(&m, 10, 0), Err(Error::Parameter(_))), "{m:?}");
        }
        assert!(sample_weights(&PARETO, 1, 0).is_err());
    }

    #[test]
    fn pareto_support_and_determinism() {
        let a = sample_weights(&PARETO, 10_000, 42).unwrap();
        let b = sample_weights(&PARETO, 10_000, 42).unwrap();
        assert!(a.values().iter().all(|&v| v >= 1.0));
        assert_eq!(a, b);
        assert_ne!(a, sample_weights(&PARETO, 10_000, 43).unwrap());
    }

    #[test]
    fn exponential_sample_mean() {
        let w = sample_weights(&WeightModel::Exponential { rate: 1.0 }, 100_000, 5).unwrap();
        let mean = w.sum_l() / 1e5;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn pareto_log_sampler_matches_survival() {
        let model = WeightModel::ParetoLog { alpha: 1.5, xm: 2.0 };
        let w = sample_weights(&model, 200_000, 11).unwrap();
        for x in [3.0, 10.0, 100.0] {
            let emp = w.values().iter().filter(|&&v| v > x).count() as f64 / 2e5;
            let exact = model.survival(x).unwrap();
            let sd = (exact * (1.0 - exact) / 2e5).sqrt();
            assert!((emp - exact).abs() < 5.0 * sd + 1e-4, "x={x}: {emp} vs {exact}");
        }
    }

    #[test]
    fn analytic_moment_examples() {
        let m = analytic_moments(&PARETO, 10).unwrap();
        assert_eq!(m.mean, 3.0);
        assert!(m.second_moment.is_infinite() && m.variance.is_infinite());
        let m = analytic_moments(&WeightModel::Pareto { alpha: 3.0, xm: 1.0 }, 10).unwrap();
        assert!(m.has_finite_second_moment());
        let m = analytic_moments(&WeightModel::Exponential { rate: 1.0 }, 10).unwrap();
        assert_eq!((m.mean, m.variance, m.second_moment), (1.0, 1.0, 2.0));
        let m = analytic_moments(&WeightModel::Constant { lambda: 2.0 }, 10).unwrap();
        assert_eq!((m.mean, m.variance, m.second_moment), (2.5, 0.0, 6.25));
    }

    #[test]
    fn pareto_log_moments_match_quadrature() {
        let model = WeightModel::ParetoLog { alpha: 2.5, xm: 1.5 };
        let m = analytic_moments(&model, 2).unwrap();
        let mean = truncated_first_moment_tail_numeric(&model, 0.0).unwrap();
        assert_relative_eq!(mean, m.mean, max_relative = 1e-8);
        let total = quadrature::integrate(|w| model.density(w), 1.5, 1e4, 1e-12).unwrap()
            + model.survival(1e4).unwrap();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn truncated_second_moment_examples() {
        assert_abs_diff_eq!(truncated_second_moment(&PARETO, 100.0).unwrap(), 27.0, epsilon = 1e-12);
        assert_eq!(truncated_second_moment(&PARETO, 1.0).unwrap(), 0.0);
        let exp = WeightModel::Exponential { rate: 1.0 };
        let q = truncated_second_moment_numeric(&exp, 50.0).unwrap();
        assert_abs_diff_eq!(q, 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(truncated_second_moment(&exp, 50.0).unwrap(), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn truncated_first_moment_tail_examples() {
        assert_abs_diff_eq!(truncated_first_moment_tail(&PARETO, 100.0).unwrap(), 0.3, epsilon = 1e-14);
        assert_eq!(truncated_first_moment_tail(&PARETO, 1.0).unwrap(), 3.0);
        let exp = WeightModel::Exponential { rate: 1.0 };
        let v = truncated_first_moment_tail(&exp, 10.0).unwrap();
        assert_abs_diff_eq!(v, 11.0 * (-10.0f64).exp(), epsilon = 1e-16);
        assert_abs_diff_eq!(v, 4.994e-4, epsilon = 1e-7);
    }

    #[test]
    fn closed_forms_agree_with_quadrature() {
        let models = [
            WeightModel::Exponential { rate: 0.7 },
            WeightModel::LogNormal { mu: 0.2, sigma: 0.8 },
            WeightModel::Pareto { alpha: 1.5, xm: 1.0 },
            WeightModel::Pareto { alpha: 2.5, xm: 0.5 },
            WeightModel::ParetoLog { alpha: 1.5, xm: 1.0 },
            WeightModel::ParetoLog { alpha: 1.2, xm: 3.0 },
        ];
        for m in models {
            for x in [0.3, 1.0, 2.5, 10.0, 100.0, 1e4] {
                let a = truncated_second_moment(&m, x).unwrap();
                let b = truncated_second_moment_numeric(&m, x).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-8 * a.max(1.0));
                let a = truncated_first_moment_tail(&m, x).unwrap();
                let b = truncated_first_moment_tail_numeric(&m, x).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-8 * a.max(1.0));
            }
        }
    }

    #[test]
    fn gamma_uses_quadrature_and_matches_moments() {
        let g = WeightModel::Gamma { shape: 2.5, scale: 1.3 };
        let m = analytic_moments(&g, 2).unwrap();
        assert_relative_eq!(truncated_second_moment(&g, 1e3).unwrap(), m.second_moment, max_relative = 1e-9);
        assert_relative_eq!(truncated_first_moment_tail(&g, 0.0).unwrap(), m.mean, max_relative = 1e-12);
        assert_relative_eq!(truncated_first_moment_tail(&g, 1e-9).unwrap(), m.mean, max_relative = 1e-9);
    }

    #[test]
    fn pareto_second_moment_reconstruction_above_two() {
        let m = WeightModel::Pareto { alpha: 3.0, xm: 1.0 };
        let x = 7.0;
        // ∫ₓ^∞ w² · 3 w^{-4} dw = 3/x
        let total = truncated_second_moment(&m, x).unwrap() + 3.0 / x;
        assert_abs_diff_eq!(total, analytic_moments(&m, 2).unwrap().second_moment, epsilon = 1e-9);
    }

    #[test]
    fn lemma1_examples() {
        let r = lemma1_ratio_check(&PARETO, &[100.0, 1e4]).unwrap();
        assert_abs_diff_eq!(r[0].ratio_second, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].ratio_second, 0.99, epsilon = 1e-12);
        assert_abs_diff_eq!(r[0].ratio_tail_karamata, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[0].ratio_tail_alternative, 3.0, epsilon = 1e-12);
        assert!(matches!(
            lemma1_ratio_check(&WeightModel::Exponential { rate: 1.0 }, &[10.0]),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn lemma1_pareto_log_converges_slowly() {
        let m = WeightModel::ParetoLog { alpha: 1.5, xm: 1.0 };
        let r = lemma1_ratio_check(&m, &[1e2, 1e4, 1e8, 1e16]).unwrap();
        for w in r.windows(2) {
            assert!((w[1].ratio_second - 1.0).abs() < (w[0].ratio_second - 1.0).abs());
            assert!((w[1].ratio_tail_karamata - 1.0).abs() < (w[0].ratio_tail_karamata - 1.0).abs());
        }
    }

    #[test]
    fn norming_example_bracket() {
        let g = |a: f64| a * a - 3000.0 * (a.sqrt() - 1.0);
        assert!(g(197.0) < 0.0 && g(199.0) > 0.0);
        let a = compute_norming(&PARETO, 1000).unwrap();
        assert!(a > 197.0 && a < 199.0, "{a}");
        let resid = (a * a - 1000.0 * truncated_second_moment(&PARETO, a).unwrap()).abs() / (a * a);
        assert!(resid <= 1e-8, "{resid}");
    }

    #[test]
    fn norming_rejects_tiny_n() {
        assert!(compute_norming(&PARETO, 0).is_err());
        // n = 2: 6(√a − 1) < a² everywhere, so no bracket exists.
        assert!(matches!(compute_norming(&PARETO, 2), Err(Error::Bracketing(_))));
    }

    #[test]
    fn norming_for_light_tails_tracks_sqrt_n() {
        let a = compute_norming(&WeightModel::Exponential { rate: 1.0 }, 10_000).unwrap();
        assert_relative_eq!(a, (2.0f64 * 1e4).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn model_strings_round_trip() {
        for s in ["pareto:alpha=1.5,xm=1", "exponential:rate=2", "constant:lambda=2", "pareto_log:alpha=1.5,xm=3"] {
            let m: WeightModel = s.parse().unwrap();
            assert_eq!(m.to_string().parse::<WeightModel>().unwrap(), m);
        }
        assert!("pareto:alpha=1.5,beta=2".parse::<WeightModel>().is_err());
        assert!("weird:x=1".parse::<WeightModel>().is_err());
    }

    #[test]
    fn model_json_uses_kind_tag() {
        let json = serde_json::to_string(&PARETO).unwrap();
        assert_eq!(json, r#"{"kind":"pareto","alpha":1.5,"xm":1.0}"#);
        let back: WeightModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, PARETO);
    }
}
