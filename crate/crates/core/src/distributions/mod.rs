//! The three candidate models for citation counts.
//!
//! Both discrete models live on a shifted support `{k_min, k_min + 1, ...}`
//! where `k = count + offset` (see [`Support`]). With the default offset of 1
//! an uncited article sits at `k = 1`.
//!
//! * discretised lognormal: `P(k) = f(k) / ∑_{m ≥ k_min} f(m)` with `f` the
//!   continuous lognormal density used as a point mass.
//! * hooked power law: `P(k) ∝ (B + k)^-α`.
//! * normal-on-log: a continuous normal density for `ln k`. It is not
//!   renormalised over the integers, so its likelihood is a density on a
//!   different measure from the two discrete models.

mod series;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use series::Kernel;
pub use series::Normalization;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub(crate) fn table_cap() -> u64 {
    series::TABLE_CAP
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub rel_tail_tol: f64,
    pub max_terms: u64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            rel_tail_tol: 1e-12,
            max_terms: 100_000_000,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tail_tol > 0.0 && self.rel_tail_tol < 1.0) {
            return Err(Error::Config(format!(
                "rel_tail_tol must lie in (0, 1), got {}",
                self.rel_tail_tol
            )));
        }
        if self.max_terms < 1_000 {
            return Err(Error::Config(format!(
                "max_terms must be at least 1000, got {}",
                self.max_terms
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretisedLognormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl DiscretisedLognormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        let p = Self { mu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::Domain(format!(
                "lognormal needs finite mu and sigma > 0, got mu = {}, sigma = {}",
                self.mu, self.sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HookedPowerLawParams {
    pub alpha: f64,
    /// The hook `B`, relative to a support starting at 1.
    pub b_offset: f64,
}

impl HookedPowerLawParams {
    pub fn new(alpha: f64, b_offset: f64) -> Result<Self> {
        let p = Self { alpha, b_offset };
        p.validate_on(1)?;
        Ok(p)
    }

    /// Validates against a support starting at `min_k`; every `B + k` must be positive.
    pub fn validate_on(&self, min_k: u64) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha <= 1.0 {
            return Err(Error::Divergence { alpha: self.alpha });
        }
        if !self.b_offset.is_finite() || self.b_offset + min_k as f64 <= 0.0 {
            return Err(Error::Domain(format!(
                "hook B = {} must exceed -{min_k}",
                self.b_offset
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalLogParams {
    pub mean_log: f64,
    pub sd_log: f64,
}

impl NormalLogParams {
    pub fn new(mean_log: f64, sd_log: f64) -> Result<Self> {
        let p = Self { mean_log, sd_log };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean_log.is_finite() || !self.sd_log.is_finite() || self.sd_log <= 0.0 {
            return Err(Error::Domain(format!(
                "normal-on-log needs sd_log > 0, got {}",
                self.sd_log
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    Dlnorm,
    Hooked,
    NormalLog,
}

impl ModelId {
    pub const ALL: [ModelId; 3] = [ModelId::Dlnorm, ModelId::Hooked, ModelId::NormalLog];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Dlnorm => "dlnorm",
            ModelId::Hooked => "hooked",
            ModelId::NormalLog => "normal_log",
        }
    }

    pub fn is_discrete(self) -> bool {
        !matches!(self, ModelId::NormalLog)
    }

    /// Names of the two parameters, in the order used by panels and CSV output.
    pub fn parameter_names(self) -> [&'static str; 2] {
        match self {
            ModelId::Dlnorm => ["mu", "sigma"],
            ModelId::Hooked => ["alpha", "b"],
            ModelId::NormalLog => ["mean", "sd"],
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dlnorm" | "lognormal" => Ok(ModelId::Dlnorm),
            "hooked" | "hook" => Ok(ModelId::Hooked),
            "normal_log" | "normal" => Ok(ModelId::NormalLog),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    Dlnorm(DiscretisedLognormalParams),
    Hooked(HookedPowerLawParams),
    NormalLog(NormalLogParams),
}

impl ModelParams {
    pub fn model_id(&self) -> ModelId {
        match self {
            ModelParams::Dlnorm(_) => ModelId::Dlnorm,
            ModelParams::Hooked(_) => ModelId::Hooked,
            ModelParams::NormalLog(_) => ModelId::NormalLog,
        }
    }

    pub fn values(&self) -> [f64; 2] {
        match *self {
            ModelParams::Dlnorm(p) => [p.mu, p.sigma],
            ModelParams::Hooked(p) => [p.alpha, p.b_offset],
            ModelParams::NormalLog(p) => [p.mean_log, p.sd_log],
        }
    }

    pub fn from_values(model: ModelId, v: [f64; 2]) -> Result<Self> {
        Ok(match model {
            ModelId::Dlnorm => ModelParams::Dlnorm(DiscretisedLognormalParams::new(v[0], v[1])?),
            ModelId::Hooked => ModelParams::Hooked(HookedPowerLawParams::new(v[0], v[1])?),
            ModelId::NormalLog => ModelParams::NormalLog(NormalLogParams::new(v[0], v[1])?),
        })
    }

    /// Parameter value by name (see [`ModelId::parameter_names`]).
    pub fn get(&self, name: &str) -> Option<f64> {
        let names = self.model_id().parameter_names();
        names.iter().position(|n| *n == name).map(|i| self.values()[i])
    }
}

/// How raw citation counts map onto the model support.
///
/// With uncited articles included, `k = count + offset` and the support starts
/// at `offset`. Excluding them drops zero counts and maps `count = 1` onto
/// `offset`, so the default offset of 1 fits the unshifted counts directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Support {
    pub offset: u32,
    pub exclude_uncited: bool,
}

impl Default for Support {
    fn default() -> Self {
        Self {
            offset: 1,
            exclude_uncited: false,
        }
    }
}

impl Support {
    pub fn with_offset(offset: u32) -> Self {
        Self {
            offset,
            exclude_uncited: false,
        }
    }

    pub fn min_k(&self) -> u64 {
        self.offset as u64
    }

    /// Shifted support value for a raw count, or `None` when the count is excluded.
    pub fn shift(&self, count: u64) -> Option<u64> {
        if self.exclude_uncited {
            (count > 0).then(|| count - 1 + self.offset as u64)
        } else {
            Some(count + self.offset as u64)
        }
    }
}

/// Distinct shifted values with their frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub support: Support,
    pub values: Vec<u64>,
    pub freqs: Vec<u64>,
    pub ln_values: Vec<f64>,
    pub n: u64,
}

impl Histogram {
    pub fn from_counts(counts: &[u64], support: Support) -> Self {
        let mut map: BTreeMap<u64, u64> = BTreeMap::new();
        for &c in counts {
            if let Some(k) = support.shift(c) {
                *map.entry(k).or_default() += 1;
            }
        }
        let values: Vec<u64> = map.keys().copied().collect();
        let freqs: Vec<u64> = map.values().copied().collect();
        let ln_values = values.iter().map(|&k| (k as f64).ln()).collect();
        let n = freqs.iter().sum();
        Self {
            support,
            values,
            freqs,
            ln_values,
            n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distinct(&self) -> usize {
        self.values.len()
    }
}

struct LognormalKernel {
    mu: f64,
    sigma: f64,
}

impl Kernel for LognormalKernel {
    fn ln_weight(&self, x: f64) -> f64 {
        let u = x.ln();
        let z = (u - self.mu) / self.sigma;
        -u - 0.5 * z * z - self.sigma.ln() - LN_SQRT_2PI
    }

    fn dlog(&self, x: f64) -> f64 {
        let q1 = -1.0 - (x.ln() - self.mu) / (self.sigma * self.sigma);
        q1 / x
    }

    fn d2_ratio(&self, x: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let q1 = -1.0 - (x.ln() - self.mu) / s2;
        let q2 = -1.0 / s2;
        (q1 * q1 + q2 - q1) / (x * x)
    }

    fn ln_tail_integral(&self, x: f64) -> f64 {
        let z = (x.ln() - self.mu) / (self.sigma * std::f64::consts::SQRT_2);
        0.5_f64.ln() + series::ln_erfc(z)
    }

    fn mode(&self) -> f64 {
        (self.mu - self.sigma * self.sigma).exp()
    }
}

struct HookedKernel {
    alpha: f64,
    b: f64,
}

impl Kernel for HookedKernel {
    fn ln_weight(&self, x: f64) -> f64 {
        -self.alpha * (self.b + x).ln()
    }

    fn dlog(&self, x: f64) -> f64 {
        -self.alpha / (self.b + x)
    }

    fn d2_ratio(&self, x: f64) -> f64 {
        let y = self.b + x;
        self.alpha * (self.alpha + 1.0) / (y * y)
    }

    fn ln_tail_integral(&self, x: f64) -> f64 {
        (1.0 - self.alpha) * (self.b + x).ln() - (self.alpha - 1.0).ln()
    }

    fn mode(&self) -> f64 {
        f64::NEG_INFINITY
    }
}

/// The continuous lognormal density `f(x)`, used directly as a point mass.
pub fn dlnorm_unnormalized(x: f64, params: &DiscretisedLognormalParams) -> Result<f64> {
    params.validate()?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("lognormal density needs x > 0, got {x}")));
    }
    let kernel = LognormalKernel {
        mu: params.mu,
        sigma: params.sigma,
    };
    Ok(kernel.ln_weight(x).exp())
}

/// `ln ∑_{m ≥ min_k} f(m)` for the discretised lognormal.
pub fn dlnorm_normalizer(
    params: &DiscretisedLognormalParams,
    min_k: u64,
    trunc: &TruncationPolicy,
) -> Result<Normalization> {
    params.validate()?;
    trunc.validate()?;
    if min_k == 0 {
        return Err(Error::Domain("lognormal support must start at k >= 1".into()));
    }
    series::ln_normalizer(
        &LognormalKernel {
            mu: params.mu,
            sigma: params.sigma,
        },
        min_k,
        trunc,
    )
}

/// `ln ∑_{m ≥ min_k} (B + m)^-α` for the hooked power law.
pub fn hooked_normalizer(
    params: &HookedPowerLawParams,
    min_k: u64,
    trunc: &TruncationPolicy,
) -> Result<Normalization> {
    params.validate_on(min_k)?;
    trunc.validate()?;
    series::ln_normalizer(
        &HookedKernel {
            alpha: params.alpha,
            b: params.b_offset,
        },
        min_k,
        trunc,
    )
}

/// Probability of a raw count under the discretised lognormal with offset 1,
/// `f(count + 1) / ∑_{m ≥ 0} f(m + 1)`.
pub fn dlnorm_pmf(count: u64, params: &DiscretisedLognormalParams, trunc: &TruncationPolicy) -> Result<f64> {
    let dist = DiscreteDistribution::new(ModelParams::Dlnorm(*params), 1, trunc)?;
    Ok(dist.pmf(count + 1))
}

/// Probability of the shifted value `k ≥ 1` under the hooked power law.
pub fn hooked_pmf(k: u64, params: &HookedPowerLawParams, trunc: &TruncationPolicy) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("hooked support on shifted counts starts at k = 1".into()));
    }
    let dist = DiscreteDistribution::new(ModelParams::Hooked(*params), 1, trunc)?;
    Ok(dist.pmf(k))
}

/// Normal density of `ln k`.
pub fn normal_log_density(k: u64, params: &NormalLogParams) -> Result<f64> {
    params.validate()?;
    if k == 0 {
        return Err(Error::Domain("normal-on-log needs k >= 1".into()));
    }
    Ok(normal_log_ln_density((k as f64).ln(), params).exp())
}

fn normal_log_ln_density(ln_k: f64, params: &NormalLogParams) -> f64 {
    let z = (ln_k - params.mean_log) / params.sd_log;
    -0.5 * z * z - params.sd_log.ln() - LN_SQRT_2PI
}

/// Mean `e^{μ + σ²/2}` of the continuous lognormal. This is not the mean of the
/// discretised, shifted distribution.
pub fn lognormal_expected_mean(params: &DiscretisedLognormalParams) -> Result<f64> {
    params.validate()?;
    Ok((params.mu + 0.5 * params.sigma * params.sigma).exp())
}

/// A discrete model bound to a support, with its normaliser computed once.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    params: ModelParams,
    min_k: u64,
    norm: Normalization,
}

impl DiscreteDistribution {
    pub fn new(params: ModelParams, min_k: u64, trunc: &TruncationPolicy) -> Result<Self> {
        let norm = match &params {
            ModelParams::Dlnorm(p) => dlnorm_normalizer(p, min_k, trunc)?,
            ModelParams::Hooked(p) => hooked_normalizer(p, min_k, trunc)?,
            ModelParams::NormalLog(_) => {
                return Err(Error::Domain("normal-on-log is not a discrete model".into()))
            }
        };
        Ok(Self { params, min_k, norm })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn min_k(&self) -> u64 {
        self.min_k
    }

    pub fn normalization(&self) -> Normalization {
        self.norm
    }

    pub fn ln_weight(&self, k: u64) -> f64 {
        let x = k as f64;
        match self.params {
            ModelParams::Dlnorm(p) => LognormalKernel { mu: p.mu, sigma: p.sigma }.ln_weight(x),
            ModelParams::Hooked(p) => HookedKernel { alpha: p.alpha, b: p.b_offset }.ln_weight(x),
            ModelParams::NormalLog(_) => unreachable!("rejected in new"),
        }
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        if k < self.min_k {
            return f64::NEG_INFINITY;
        }
        self.ln_weight(k) - self.norm.ln_z
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.ln_pmf(k).exp()
    }

    /// `P(K ≥ k)`.
    pub fn survival(&self, k: u64) -> f64 {
        if k <= self.min_k {
            return 1.0;
        }
        let span = k - self.min_k;
        if span <= series::TABLE_CAP || (k as f64) <= self.mode() * 4.0 {
            let head: f64 = (self.min_k..k).map(|m| self.pmf(m)).sum();
            return (1.0 - head).max(0.0);
        }
        (self.ln_tail(k) - self.norm.ln_z).exp()
    }

    /// `P(K ≤ k)`.
    pub fn cdf(&self, k: u64) -> f64 {
        1.0 - self.survival(k + 1)
    }

    pub(crate) fn mode(&self) -> f64 {
        match self.params {
            ModelParams::Dlnorm(p) => LognormalKernel { mu: p.mu, sigma: p.sigma }.mode(),
            _ => self.min_k as f64,
        }
    }

    pub(crate) fn ln_tail(&self, k: u64) -> f64 {
        match self.params {
            ModelParams::Dlnorm(p) => series::ln_tail(&LognormalKernel { mu: p.mu, sigma: p.sigma }, k),
            ModelParams::Hooked(p) => {
                series::ln_tail(&HookedKernel { alpha: p.alpha, b: p.b_offset }, k)
            }
            ModelParams::NormalLog(_) => unreachable!("rejected in new"),
        }
    }
}

/// Per-observation log-likelihood on the shifted support, aligned with the
/// order of `counts` (excluded zeros are skipped).
pub fn pointwise_log_likelihood(
    model: &ModelParams,
    counts: &[u64],
    support: Support,
    trunc: &TruncationPolicy,
) -> Result<Vec<f64>> {
    let hist = Histogram::from_counts(counts, support);
    if hist.is_empty() {
        return Err(Error::EmptyData);
    }
    let per_value = log_likelihood_by_value(model, &hist, trunc)?;
    let index: BTreeMap<u64, f64> = hist.values.iter().copied().zip(per_value).collect();
    Ok(counts
        .iter()
        .filter_map(|&c| support.shift(c))
        .map(|k| index[&k])
        .collect())
}

/// Log-likelihood of each distinct value in the histogram.
pub fn log_likelihood_by_value(
    model: &ModelParams,
    hist: &Histogram,
    trunc: &TruncationPolicy,
) -> Result<Vec<f64>> {
    match model {
        ModelParams::NormalLog(p) => {
            p.validate()?;
            if hist.values.first() == Some(&0) {
                return Err(Error::Domain("normal-on-log needs k >= 1; use an offset of at least 1".into()));
            }
            Ok(hist.ln_values.iter().map(|&u| normal_log_ln_density(u, p)).collect())
        }
        discrete => {
            let dist = DiscreteDistribution::new(*discrete, hist.support.min_k(), trunc)?;
            Ok(hist.values.iter().map(|&k| dist.ln_pmf(k)).collect())
        }
    }
}

/// Total log-likelihood of a histogram.
pub fn histogram_log_likelihood(model: &ModelParams, hist: &Histogram, trunc: &TruncationPolicy) -> Result<f64> {
    if hist.is_empty() {
        return Err(Error::EmptyData);
    }
    let per_value = log_likelihood_by_value(model, hist, trunc)?;
    Ok(per_value
        .iter()
        .zip(&hist.freqs)
        .map(|(ll, &f)| ll * f as f64)
        .sum())
}

/// `∑ ln P(count + 1)` (discrete models) or `∑ ln φ(ln(count + 1))`
/// (normal-on-log) under the default support.
pub fn log_likelihood(model: &ModelParams, counts: &[u64], trunc: &TruncationPolicy) -> Result<f64> {
    log_likelihood_on(model, counts, Support::default(), trunc)
}

pub fn log_likelihood_on(
    model: &ModelParams,
    counts: &[u64],
    support: Support,
    trunc: &TruncationPolicy,
) -> Result<f64> {
    histogram_log_likelihood(model, &Histogram::from_counts(counts, support), trunc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const ZETA2: f64 = PI * PI / 6.0;

    fn trunc() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn lognormal_density_values() {
        let p = DiscretisedLognormalParams::new(0.0, 1.0).unwrap();
        let inv_sqrt_2pi = 1.0 / (2.0 * PI).sqrt();
        assert!((dlnorm_unnormalized(1.0, &p).unwrap() - inv_sqrt_2pi).abs() < 1e-15);
        assert!((dlnorm_unnormalized(2.0, &p).unwrap() - 0.156_874).abs() < 1e-6);
        for mu in [-2.0, 0.3, 4.0] {
            let p = DiscretisedLognormalParams::new(mu, 1.0).unwrap();
            let got = dlnorm_unnormalized(mu.exp(), &p).unwrap();
            assert!((got - (-mu).exp() * inv_sqrt_2pi).abs() < 1e-14 * got.max(1.0));
        }
    }

    #[test]
    fn lognormal_density_rejects_non_positive_x() {
        let p = DiscretisedLognormalParams::new(0.0, 1.0).unwrap();
        assert!(matches!(dlnorm_unnormalized(0.0, &p), Err(Error::Domain(_))));
        assert!(matches!(dlnorm_unnormalized(-1.0, &p), Err(Error::Domain(_))));
        assert!(DiscretisedLognormalParams::new(0.0, 0.0).is_err());
    }

    #[test]
    fn dlnorm_pmf_against_brute_force_sum() {
        let p = DiscretisedLognormalParams::new(0.0, 1.0).unwrap();
        // oracle: direct sum far past the point where terms vanish
        let z: f64 = (1..200_000u64).map(|m| dlnorm_unnormalized(m as f64, &p).unwrap()).sum();
        let f1 = 1.0 / (2.0 * PI).sqrt();
        let f2 = 0.156_874_019_278_981_1;
        assert!((dlnorm_pmf(0, &p, &trunc()).unwrap() - f1 / z).abs() < 1e-12);
        assert!((dlnorm_pmf(1, &p, &trunc()).unwrap() - f2 / z).abs() < 1e-12);
    }

    #[test]
    fn hooked_pmf_matches_zeta_two() {
        let p = HookedPowerLawParams::new(2.0, 0.0).unwrap();
        assert!((hooked_pmf(1, &p, &trunc()).unwrap() - 1.0 / ZETA2).abs() < 1e-12);
        assert!((hooked_pmf(2, &p, &trunc()).unwrap() - 0.25 / ZETA2).abs() < 1e-12);
        assert!((1.0 / ZETA2 - 0.607_927).abs() < 1e-6);
        assert!((0.25 / ZETA2 - 0.151_982).abs() < 1e-6);
    }

    #[test]
    fn hooked_domain_errors() {
        assert!(matches!(HookedPowerLawParams::new(1.0, 0.0), Err(Error::Divergence { .. })));
        assert!(matches!(HookedPowerLawParams::new(0.5, 0.0), Err(Error::Divergence { .. })));
        assert!(matches!(HookedPowerLawParams::new(2.0, -1.0), Err(Error::Domain(_))));
        let p = HookedPowerLawParams { alpha: 2.0, b_offset: -0.5 };
        assert!(p.validate_on(1).is_ok());
        assert!(p.validate_on(0).is_err());
        assert!(hooked_pmf(0, &HookedPowerLawParams::new(2.0, 0.0).unwrap(), &trunc()).is_err());
    }

    #[test]
    fn pmf_sums_to_one() {
        let t = trunc();
        let dl = DiscreteDistribution::new(ModelParams::Dlnorm(DiscretisedLognormalParams::new(1.0, 1.0).unwrap()), 1, &t).unwrap();
        let hk = DiscreteDistribution::new(ModelParams::Hooked(HookedPowerLawParams::new(3.0, 5.0).unwrap()), 1, &t).unwrap();
        for d in [dl, hk] {
            let k_max = 2_000_000u64;
            let head: f64 = (1..=k_max).map(|k| d.pmf(k)).sum();
            let total = head + (d.ln_tail(k_max + 1) - d.normalization().ln_z).exp();
            assert!((total - 1.0).abs() < 1e-9, "{total}");
        }
    }

    #[test]
    fn normal_log_density_values() {
        let p = NormalLogParams::new(0.0, 1.0).unwrap();
        assert!((normal_log_density(1, &p).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        let p = NormalLogParams::new(7.0_f64.ln(), 0.4).unwrap();
        let peak = 1.0 / (0.4 * (2.0 * PI).sqrt());
        assert!((normal_log_density(7, &p).unwrap() - peak).abs() < 1e-12);
        // density at ln k = 2 for the standard normal
        let p = NormalLogParams { mean_log: -2.0, sd_log: 1.0 };
        assert!((normal_log_density(1, &p).unwrap() - 0.053_990_966_513_188_06).abs() < 1e-15);
        assert!(NormalLogParams::new(0.0, 0.0).is_err());
    }

    #[test]
    fn expected_mean_values() {
        let e = |mu, sigma| lognormal_expected_mean(&DiscretisedLognormalParams::new(mu, sigma).unwrap()).unwrap();
        assert!((e(0.0, 1e-9) - 1.0).abs() < 1e-12);
        assert!((e(1.0, 1.0) - 4.481_689).abs() < 1e-6);
        assert!((e(0.0, 2.0) - 7.389_056).abs() < 1e-6);
    }

    #[test]
    fn log_likelihood_examples() {
        let hooked = ModelParams::Hooked(HookedPowerLawParams::new(2.0, 0.0).unwrap());
        let one = log_likelihood(&hooked, &[0], &trunc()).unwrap();
        assert!((one - (6.0 / (PI * PI)).ln()).abs() < 1e-12);
        assert!((one + 0.497_700_302).abs() < 1e-9);
        let two = log_likelihood(&hooked, &[0, 0], &trunc()).unwrap();
        assert_eq!(two, 2.0 * one);
        assert_eq!(log_likelihood(&hooked, &[], &trunc()), Err(Error::EmptyData));
    }

    #[test]
    fn pointwise_follow_input_order() {
        let m = ModelParams::Dlnorm(DiscretisedLognormalParams::new(1.0, 1.0).unwrap());
        let counts = [3, 0, 3, 7, 0];
        let pw = pointwise_log_likelihood(&m, &counts, Support::default(), &trunc()).unwrap();
        assert_eq!(pw.len(), 5);
        assert_eq!(pw[0], pw[2]);
        assert_eq!(pw[1], pw[4]);
        let total = log_likelihood(&m, &counts, &trunc()).unwrap();
        assert!((pw.iter().sum::<f64>() - total).abs() < 1e-12);

        let excl = Support { offset: 1, exclude_uncited: true };
        assert_eq!(pointwise_log_likelihood(&m, &counts, excl, &trunc()).unwrap().len(), 3);
    }

    #[test]
    fn support_shift_rules() {
        let s = Support::default();
        assert_eq!(s.shift(0), Some(1));
        assert_eq!(s.shift(4), Some(5));
        let e = Support { offset: 1, exclude_uncited: true };
        assert_eq!(e.shift(0), None);
        assert_eq!(e.shift(4), Some(4));
        let z = Support::with_offset(0);
        assert_eq!(z.shift(0), Some(0));
        assert_eq!(z.min_k(), 0);
    }

    #[test]
    fn normal_log_rejects_zero_support() {
        let m = ModelParams::NormalLog(NormalLogParams::new(0.0, 1.0).unwrap());
        assert!(log_likelihood_on(&m, &[0, 1], Support::with_offset(0), &trunc()).is_err());
    }

    #[test]
    fn truncation_failure_is_reported() {
        let t = TruncationPolicy { rel_tail_tol: 1e-12, max_terms: 1_000 };
        // mass sits around e^12, far past the allowed number of terms
        let p = DiscretisedLognormalParams::new(12.0, 0.05).unwrap();
        assert!(matches!(dlnorm_normalizer(&p, 1, &t), Err(Error::TruncationFailure { .. })));
        assert!(TruncationPolicy { rel_tail_tol: 0.0, max_terms: 1000 }.validate().is_err());
        assert!(TruncationPolicy { rel_tail_tol: 1e-9, max_terms: 10 }.validate().is_err());
    }

    #[test]
    fn extreme_parameters_stay_finite() {
        let t = trunc();
        let tiny = DiscretisedLognormalParams::new(-10.0, 0.1).unwrap();
        let d = DiscreteDistribution::new(ModelParams::Dlnorm(tiny), 1, &t).unwrap();
        assert!((d.pmf(1) - 1.0).abs() < 1e-12);
        let steep = HookedPowerLawParams::new(400.0, -0.999_999).unwrap();
        let d = DiscreteDistribution::new(ModelParams::Hooked(steep), 1, &t).unwrap();
        assert!(d.normalization().ln_z.is_finite());
        assert!((d.pmf(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_and_survival_agree() {
        let t = trunc();
        let d = DiscreteDistribution::new(ModelParams::Hooked(HookedPowerLawParams::new(2.0, 0.0).unwrap()), 1, &t).unwrap();
        assert!((d.cdf(1) - 1.0 / ZETA2).abs() < 1e-12);
        assert_eq!(d.survival(1), 1.0);
        // far tail: ∑_{k ≥ K} k^-2 / ζ(2) ≈ (1/K + 1/(2K²)) / ζ(2)
        let k = 5_000_000u64;
        let kf = k as f64;
        let expected = (1.0 / kf + 0.5 / (kf * kf)) / ZETA2;
        assert!((d.survival(k) / expected - 1.0).abs() < 1e-9);
    }
}
