//! Truncated summation of the normalising series.
//!
//! Terms are summed explicitly until the remaining tail can be replaced by its
//! Euler-Maclaurin estimate `∫_N^∞ w + w(N)/2 - w'(N)/12` to within the
//! requested relative tolerance. Everything is carried relative to a reference
//! log-weight so that extreme parameters neither overflow nor underflow.

use crate::distributions::TruncationPolicy;
use crate::error::{Error, Result};

/// Unnormalised log-weight of a discrete model, extended to real arguments.
pub(crate) trait Kernel {
    fn ln_weight(&self, x: f64) -> f64;
    /// `w'(x) / w(x)`
    fn dlog(&self, x: f64) -> f64;
    /// `w''(x) / w(x)`
    fn d2_ratio(&self, x: f64) -> f64;
    /// `ln ∫_x^∞ w(t) dt`
    fn ln_tail_integral(&self, x: f64) -> f64;
    /// Location beyond which the weight is strictly decreasing.
    fn mode(&self) -> f64;
}

/// Number of explicit terms before the tail estimate may be used.
const MIN_EXPLICIT: u64 = 8;
/// The tail estimate is only trusted once single terms are this small.
const EM_TERM_RATIO: f64 = 1e-3;
/// Bound on the Euler-Maclaurin remainder in units of |w''(N)|.
const EM_REMAINDER: f64 = 0.01;
/// Largest cumulative table kept in memory by the samplers.
pub(crate) const TABLE_CAP: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// `ln Z` including the tail estimate.
    pub ln_z: f64,
    /// Explicitly summed terms before the tail estimate took over.
    pub terms: u64,
}

/// Tail `∑_{m ≥ n} w(m)` divided by `exp(reference)`.
pub(crate) fn scaled_tail<K: Kernel>(kernel: &K, n: u64, reference: f64) -> f64 {
    let x = n as f64;
    let t = (kernel.ln_weight(x) - reference).exp();
    let integral = (kernel.ln_tail_integral(x) - reference).exp();
    integral + 0.5 * t - t * kernel.dlog(x) / 12.0
}

/// `ln ∑_{m ≥ n} w(m)` from the tail estimate alone; only valid far past the mode.
pub(crate) fn ln_tail<K: Kernel>(kernel: &K, n: u64) -> f64 {
    let reference = kernel.ln_weight(n as f64);
    reference + scaled_tail(kernel, n, reference).ln()
}

fn reference_log_weight<K: Kernel>(kernel: &K, min_k: u64) -> f64 {
    let mode = kernel.mode();
    let mut reference = kernel.ln_weight(min_k as f64);
    if mode.is_finite() && mode > min_k as f64 {
        let lo = mode.floor();
        for x in [lo, lo + 1.0] {
            let lw = kernel.ln_weight(x);
            if lw > reference {
                reference = lw;
            }
        }
    }
    reference
}

pub(crate) fn ln_normalizer<K: Kernel>(
    kernel: &K,
    min_k: u64,
    trunc: &TruncationPolicy,
) -> Result<Normalization> {
    let reference = reference_log_weight(kernel, min_k);
    let tol = trunc.rel_tail_tol;
    let mode = kernel.mode();
    let mut sum = 0.0_f64;
    let mut m = min_k;
    loop {
        let explicit = m - min_k;
        if explicit >= trunc.max_terms {
            return Err(Error::TruncationFailure {
                max_terms: trunc.max_terms,
            });
        }
        let x = m as f64;
        let t = (kernel.ln_weight(x) - reference).exp();
        if explicit >= MIN_EXPLICIT && x > mode && sum > 0.0 {
            let small_term = t <= tol * sum;
            let em_ok = t <= EM_TERM_RATIO * sum
                && EM_REMAINDER * (kernel.d2_ratio(x) * t).abs() <= tol * sum;
            if small_term || em_ok {
                let total = sum + scaled_tail(kernel, m, reference);
                return Ok(Normalization {
                    ln_z: reference + total.ln(),
                    terms: explicit,
                });
            }
        }
        sum += t;
        m += 1;
    }
}

/// `ln erfc(z)`, accurate far into the upper tail where `erfc` underflows.
pub(crate) fn ln_erfc(z: f64) -> f64 {
    if z < 25.0 {
        libm::erfc(z).ln()
    } else {
        let z2 = z * z;
        let inv = 1.0 / (2.0 * z2);
        let series = 1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv;
        -z2 - (z * std::f64::consts::PI.sqrt()).ln() + series.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_erfc_is_continuous_at_the_switch() {
        let below = libm::erfc(24.999_999).ln();
        let z2 = 25.0_f64 * 25.0;
        let asym = ln_erfc(25.0);
        // erfc(z) ~ exp(-z^2)/(z sqrt(pi)), so the two sides differ only by the step in z
        assert!((below - asym).abs() < 1e-4, "{below} vs {asym}");
        assert!(asym < -z2);
    }

    #[test]
    fn ln_erfc_matches_libm_in_range() {
        for &z in &[-3.0, -0.5, 0.0, 0.7, 2.0, 5.0, 10.0, 20.0] {
            let direct: f64 = libm::erfc(z);
            assert!((ln_erfc(z) - direct.ln()).abs() < 1e-13);
        }
    }
}
