//! Seeded sampling from the discrete models and parameter-recovery runs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::CountDataset;
use crate::distributions::{DiscreteDistribution, ModelId, ModelParams, TruncationPolicy};
use crate::error::{Error, Result};
use crate::fitting::{fit, FitOptions, FitResult};
use crate::model_selection::{vuong_test, Winner};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub params: ModelParams,
    pub n: usize,
    pub seed: u64,
    pub trunc: TruncationPolicy,
}

impl SampleSpec {
    pub fn new(params: ModelParams, n: usize, seed: u64) -> Self {
        Self {
            params,
            n,
            seed,
            trunc: TruncationPolicy::default(),
        }
    }

    pub fn model(&self) -> ModelId {
        self.params.model_id()
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for repeat `index` of an experiment seeded with `seed`: the
/// `index + 1`-th SplitMix64 output of a stream started at `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

/// Inverse-CDF sampler over a lazily grown cumulative table.
///
/// Beyond the in-memory table cap the quantile is found by bisection on the
/// analytic survival function.
#[derive(Debug, Clone)]
pub struct InverseCdfSampler {
    dist: DiscreteDistribution,
    cumulative: Vec<f64>,
    max_terms: u64,
}

impl InverseCdfSampler {
    pub fn new(params: ModelParams, trunc: &TruncationPolicy) -> Result<Self> {
        let dist = DiscreteDistribution::new(params, 1, trunc)?;
        Ok(Self {
            dist,
            cumulative: Vec::new(),
            max_terms: trunc.max_terms,
        })
    }

    pub fn distribution(&self) -> &DiscreteDistribution {
        &self.dist
    }

    fn extend_to(&mut self, u: f64) -> Result<bool> {
        let cap = crate::distributions::table_cap();
        let min_k = self.dist.min_k();
        let mut acc = self.cumulative.last().copied().unwrap_or(0.0);
        while acc <= u {
            let len = self.cumulative.len() as u64;
            if len >= cap {
                return Ok(false);
            }
            if len >= self.max_terms {
                return Err(Error::TruncationFailure { max_terms: self.max_terms });
            }
            acc += self.dist.pmf(min_k + len);
            self.cumulative.push(acc);
        }
        Ok(true)
    }

    /// Shifted value `k ≥ 1` for the uniform variate `u ∈ [0, 1)`.
    pub fn quantile(&mut self, u: f64) -> Result<u64> {
        let min_k = self.dist.min_k();
        if self.extend_to(u)? {
            let idx = self.cumulative.partition_point(|&c| c <= u);
            return Ok(min_k + idx as u64);
        }
        // far tail: smallest k with P(K > k) < 1 - u
        let target = 1.0 - u;
        let mut lo = min_k + self.cumulative.len() as u64 - 1;
        let mut hi = lo.max(1);
        loop {
            hi = hi.saturating_mul(2);
            if hi - min_k > self.max_terms {
                return Err(Error::TruncationFailure { max_terms: self.max_terms });
            }
            if self.dist.survival(hi + 1) < target {
                break;
            }
            lo = hi;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.dist.survival(mid + 1) < target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// `spec.n` raw counts (shifted draw minus one) from its model.
pub fn sample(spec: &SampleSpec) -> Result<CountDataset> {
    sample_cell(spec, "synthetic", 0)
}

pub fn sample_cell(spec: &SampleSpec, subject: &str, year: i32) -> Result<CountDataset> {
    if spec.n < 1 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let mut sampler = InverseCdfSampler::new(spec.params, &spec.trunc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut counts = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let u: f64 = rng.random();
        counts.push(sampler.quantile(u)? - 1);
    }
    Ok(CountDataset::new(subject, year, counts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRecovery {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    /// Sample standard deviation across repeats (0 for a single repeat).
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub model: ModelId,
    pub rival: ModelId,
    pub repeats: usize,
    pub failed_repeats: usize,
    pub failures: Vec<String>,
    pub parameters: Vec<ParameterRecovery>,
    /// Share of successful repeats in which the Vuong test picked the true model.
    pub true_model_selected: f64,
    pub fits: Vec<FitResult>,
}

struct RepeatOutcome {
    fit: FitResult,
    picked_truth: bool,
}

fn one_repeat(spec: &SampleSpec, opts: &FitOptions, index: u64) -> Result<RepeatOutcome> {
    let rival = rival_of(spec.model())?;
    let draw = SampleSpec {
        seed: derive_seed(spec.seed, index),
        ..*spec
    };
    let data = sample(&draw)?;
    let own = fit(spec.model(), &data, opts)?;
    let other = fit(rival, &data, opts)?;
    let cmp = vuong_test(&own, &other)?;
    Ok(RepeatOutcome {
        fit: own,
        picked_truth: cmp.winner == Winner::A,
    })
}

fn rival_of(model: ModelId) -> Result<ModelId> {
    match model {
        ModelId::Dlnorm => Ok(ModelId::Hooked),
        ModelId::Hooked => Ok(ModelId::Dlnorm),
        ModelId::NormalLog => Err(Error::Config("only the discrete models can be sampled".into())),
    }
}

/// Draws `repeats` datasets, fits the generating model and its rival to each,
/// and summarises bias, spread and how often the truth wins the Vuong test.
pub fn recovery_experiment(spec: &SampleSpec, opts: &FitOptions, repeats: usize) -> Result<RecoverySummary> {
    if repeats < 1 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let rival = rival_of(spec.model())?;
    let outcomes: Vec<Result<RepeatOutcome>> = (0..repeats as u64)
        .into_par_iter()
        .map(|i| one_repeat(spec, opts, i))
        .collect();

    let mut fits = Vec::new();
    let mut failures = Vec::new();
    let mut picked = 0usize;
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => {
                picked += usize::from(o.picked_truth);
                fits.push(o.fit);
            }
            Err(e) => failures.push(format!("repeat {i}: {e}")),
        }
    }
    let names = spec.model().parameter_names();
    let truth = spec.params.values();
    let parameters = (0..2)
        .map(|j| {
            let vals: Vec<f64> = fits.iter().map(|f| f.params.values()[j]).collect();
            let m = vals.len() as f64;
            let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / m };
            let spread = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)).sqrt()
            } else {
                0.0
            };
            ParameterRecovery {
                name: names[j].to_string(),
                truth: truth[j],
                mean,
                bias: mean - truth[j],
                spread,
            }
        })
        .collect();
    let ok = fits.len();
    Ok(RecoverySummary {
        model: spec.model(),
        rival,
        repeats,
        failed_repeats: failures.len(),
        failures,
        parameters,
        true_model_selected: if ok == 0 { 0.0 } else { picked as f64 / ok as f64 },
        fits,
    })
}
