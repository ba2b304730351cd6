//! Vuong's test for non-nested models and the table-cell labels built on it.
//!
//! The statistic is the plain, uncorrected one: both discrete models have two
//! parameters, so an AIC/BIC-style correction would cancel. Comparing models
//! with different parameter counts through this function ignores that term.
//! P-values are two-sided.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::ModelId;
use crate::error::{Error, Result};
use crate::fitting::FitResult;

pub const DEFAULT_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    A,
    B,
    Indistinguishable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub model_a: ModelId,
    pub model_b: ModelId,
    pub vuong_stat: f64,
    pub p_value: f64,
    pub winner: Winner,
    pub significant: bool,
    pub level: f64,
    pub n: usize,
}

impl ComparisonResult {
    pub fn winning_model(&self) -> Option<ModelId> {
        match self.winner {
            Winner::A => Some(self.model_a),
            Winner::B => Some(self.model_b),
            Winner::Indistinguishable => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VuongOptions {
    pub level: f64,
    /// Permit comparing the continuous normal-on-log model with a discrete one.
    pub allow_mixed_measures: bool,
}

impl Default for VuongOptions {
    fn default() -> Self {
        Self {
            level: DEFAULT_LEVEL,
            allow_mixed_measures: false,
        }
    }
}

/// Two-sided standard-normal tail probability `P(|Z| ≥ |z|)`.
pub fn two_sided_normal_p(z: f64) -> f64 {
    libm::erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Moments {
    stat: f64,
    degenerate: bool,
}

/// Vuong statistic for pointwise log-likelihood differences `d_i = a_i - b_i`.
fn vuong_moments(a: &[f64], b: &[f64]) -> Moments {
    let n = a.len();
    if n < 2 {
        return Moments { stat: 0.0, degenerate: true };
    }
    let nf = n as f64;
    let d = || a.iter().zip(b).map(|(x, y)| x - y);
    let mean = d().sum::<f64>() / nf;
    let var = d().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    let scale = a.iter().chain(b).map(|v| v.abs()).sum::<f64>() / (2.0 * nf);
    if !(sd > 1e-12 * scale.max(1.0)) {
        return Moments { stat: 0.0, degenerate: true };
    }
    Moments {
        stat: nf.sqrt() * mean / sd,
        degenerate: false,
    }
}

/// Compares two fits of the same observations.
pub fn vuong_test(fit_a: &FitResult, fit_b: &FitResult) -> Result<ComparisonResult> {
    vuong_test_with(fit_a, fit_b, &VuongOptions::default())
}

pub fn vuong_test_with(fit_a: &FitResult, fit_b: &FitResult, opts: &VuongOptions) -> Result<ComparisonResult> {
    if fit_a.model_id.is_discrete() != fit_b.model_id.is_discrete() && !opts.allow_mixed_measures {
        return Err(Error::MixedMeasures {
            a: fit_a.model_id.to_string(),
            b: fit_b.model_id.to_string(),
        });
    }
    if fit_a.pointwise_ll.len() != fit_b.pointwise_ll.len() || fit_a.n != fit_b.n {
        return Err(Error::Alignment {
            a: fit_a.pointwise_ll.len(),
            b: fit_b.pointwise_ll.len(),
        });
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::Config(format!("significance level {} outside (0, 1)", opts.level)));
    }
    Ok(compare_pointwise(
        fit_a.model_id,
        fit_b.model_id,
        &fit_a.pointwise_ll,
        &fit_b.pointwise_ll,
        opts.level,
    ))
}

/// The test on raw aligned pointwise log-likelihoods.
pub fn compare_pointwise(model_a: ModelId, model_b: ModelId, a: &[f64], b: &[f64], level: f64) -> ComparisonResult {
    let m = vuong_moments(a, b);
    let (stat, p_value, winner) = if m.degenerate {
        (0.0, 1.0, Winner::Indistinguishable)
    } else {
        let winner = if m.stat > 0.0 {
            Winner::A
        } else if m.stat < 0.0 {
            Winner::B
        } else {
            Winner::Indistinguishable
        };
        (m.stat, two_sided_normal_p(m.stat), winner)
    };
    ComparisonResult {
        model_a,
        model_b,
        vuong_stat: stat,
        p_value,
        winner,
        significant: p_value < level && winner != Winner::Indistinguishable,
        level,
        n: a.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Hook,
    L,
    Tie,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Hook => "Hook",
            Label::L => "L",
            Label::Tie => "Hook=L (tie)",
        })
    }
}

/// A winner-matrix cell: which discrete model fits better, and whether the
/// difference is significant (rendered underlined in a table).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellLabel {
    pub label: Label,
    pub significant: bool,
    pub comparison: ComparisonResult,
}

impl fmt::Display for CellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.significant {
            write!(f, "_{}_", self.label)
        } else {
            write!(f, "{}", self.label)
        }
    }
}

/// Labels a cell from its fits; only the dlnorm and hooked fits are used and
/// their order in `fits` does not matter.
pub fn label_cell(fits: &[FitResult], level: f64) -> Result<CellLabel> {
    let find = |m: ModelId| {
        fits.iter()
            .find(|f| f.model_id == m)
            .ok_or_else(|| Error::Config(format!("cell has no {m} fit to compare")))
    };
    let hooked = find(ModelId::Hooked)?;
    let dlnorm = find(ModelId::Dlnorm)?;
    let cmp = vuong_test_with(
        hooked,
        dlnorm,
        &VuongOptions {
            level,
            allow_mixed_measures: false,
        },
    )?;
    let label = match cmp.winner {
        Winner::A => Label::Hook,
        Winner::B => Label::L,
        Winner::Indistinguishable => Label::Tie,
    };
    Ok(CellLabel {
        label,
        significant: cmp.significant,
        comparison: cmp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ModelParams, NormalLogParams, Support};

    fn fake(model: ModelId, pw: Vec<f64>) -> FitResult {
        let params = match model {
            ModelId::NormalLog => ModelParams::NormalLog(NormalLogParams { mean_log: 0.0, sd_log: 1.0 }),
            ModelId::Hooked => ModelParams::Hooked(crate::distributions::HookedPowerLawParams { alpha: 2.0, b_offset: 0.0 }),
            ModelId::Dlnorm => ModelParams::Dlnorm(crate::distributions::DiscretisedLognormalParams { mu: 0.0, sigma: 1.0 }),
        };
        FitResult {
            model_id: model,
            params,
            log_lik: pw.iter().sum(),
            n: pw.len(),
            iterations: 0,
            converged: true,
            at_boundary: false,
            support: Support::default(),
            warnings: vec![],
            pointwise_ll: pw,
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn hand_computed_fixture() {
        let b = vec![-1.0; 4];
        let a: Vec<f64> = [0.1, -0.1, 0.2, 0.2].iter().map(|d| d - 1.0).collect();
        let r = vuong_test(&fake(ModelId::Hooked, a), &fake(ModelId::Dlnorm, b)).unwrap();
        // mean 0.1, sample sd sqrt(0.02): stat = 2 * 0.1 / 0.141421 = sqrt 2
        assert!((r.vuong_stat - 2f64.sqrt()).abs() < 1e-9);
        assert!((r.vuong_stat - 1.41421).abs() < 1e-5);
        assert!((r.p_value - 0.1573).abs() < 1e-4);
        assert_eq!(r.winner, Winner::A);
        assert!(!r.significant);
    }

    #[test]
    fn identical_fits_are_indistinguishable() {
        let pw = vec![-1.5, -2.0, -0.3];
        let r = vuong_test(&fake(ModelId::Hooked, pw.clone()), &fake(ModelId::Dlnorm, pw)).unwrap();
        assert_eq!(r.winner, Winner::Indistinguishable);
        assert_eq!(r.vuong_stat, 0.0);
        assert!(!r.significant);
    }

    #[test]
    fn swapping_negates_statistic() {
        let a = fake(ModelId::Hooked, vec![-1.0, -2.5, -0.7, -3.0, -1.1]);
        let b = fake(ModelId::Dlnorm, vec![-1.2, -2.0, -0.9, -3.3, -1.0]);
        let ab = vuong_test(&a, &b).unwrap();
        let ba = vuong_test(&b, &a).unwrap();
        assert_eq!(ab.vuong_stat, -ba.vuong_stat);
        assert_eq!(ab.p_value, ba.p_value);
        assert_eq!(ab.winner, Winner::A);
        assert_eq!(ba.winner, Winner::B);
    }

    #[test]
    fn misaligned_or_mixed_inputs_are_rejected() {
        let a = fake(ModelId::Hooked, vec![-1.0, -2.0]);
        let b = fake(ModelId::Dlnorm, vec![-1.0, -2.0, -3.0]);
        assert!(matches!(vuong_test(&a, &b), Err(Error::Alignment { .. })));
        let n = fake(ModelId::NormalLog, vec![-1.0, -2.0]);
        assert!(matches!(vuong_test(&a, &n), Err(Error::MixedMeasures { .. })));
        let opts = VuongOptions { allow_mixed_measures: true, ..Default::default() };
        assert!(vuong_test_with(&a, &n, &opts).is_ok());
    }

    #[test]
    fn labels_do_not_depend_on_order() {
        let h = fake(ModelId::Hooked, vec![-1.0, -2.5, -0.7, -3.0, -1.1]);
        let d = fake(ModelId::Dlnorm, vec![-1.2, -2.6, -0.9, -3.3, -1.0]);
        let x = label_cell(&[h.clone(), d.clone()], 0.05).unwrap();
        let y = label_cell(&[d.clone(), h.clone()], 0.05).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.label, Label::Hook);
        let tie = label_cell(&[h.clone(), fake(ModelId::Dlnorm, h.pointwise_ll.clone())], 0.05).unwrap();
        assert_eq!(tie.label, Label::Tie);
        assert_eq!(tie.label.to_string(), "Hook=L (tie)");
        assert!(!tie.significant);
        assert!(label_cell(&[h], 0.05).is_err());
    }
}
