//! Maximum-likelihood fitting of the three models.
//!
//! The discrete models are fitted by projected descent on the mean negative
//! log-likelihood with central finite-difference gradients. Search directions
//! are built from gradient history (BFGS inverse-Hessian updates) and every
//! step is accepted by a halving Armijo line search. Bounds are enforced by
//! projection.

use serde::{Deserialize, Serialize};

use crate::dataset::CountDataset;
use crate::distributions::{
    histogram_log_likelihood, log_likelihood_by_value, DiscretisedLognormalParams, Histogram,
    HookedPowerLawParams, ModelId, ModelParams, NormalLogParams, Support, TruncationPolicy,
};
use crate::error::{Error, Result};

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// Margin kept from open parameter bounds.
pub const BOUND_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub rel_ll_tol: f64,
    pub max_iters: usize,
    pub trunc: TruncationPolicy,
    /// Relative finite-difference step.
    pub grad_step: f64,
    pub exclude_uncited: bool,
    /// Added to every count before fitting; the support starts here.
    pub offset: u32,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            rel_ll_tol: 1e-10,
            max_iters: 10_000,
            trunc: TruncationPolicy::default(),
            grad_step: 1e-6,
            exclude_uncited: false,
            offset: 1,
        }
    }
}

impl FitOptions {
    pub fn support(&self) -> Support {
        Support {
            offset: self.offset,
            exclude_uncited: self.exclude_uncited,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_ll_tol > 0.0) {
            return Err(Error::Config("rel_ll_tol must be positive".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.grad_step > 0.0 && self.grad_step < 1.0) {
            return Err(Error::Config("grad_step must lie in (0, 1)".into()));
        }
        self.trunc.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model_id: ModelId,
    pub params: ModelParams,
    pub log_lik: f64,
    /// Observations used.
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    /// The optimum sits on a projection bound.
    pub at_boundary: bool,
    pub support: Support,
    pub warnings: Vec<String>,
    /// Log-likelihood of each observation, in input order.
    #[serde(skip)]
    pub pointwise_ll: Vec<f64>,
}

pub fn fit(model: ModelId, data: &CountDataset, opts: &FitOptions) -> Result<FitResult> {
    match model {
        ModelId::Dlnorm => fit_dlnorm(data, opts),
        ModelId::Hooked => fit_hooked(data, opts),
        ModelId::NormalLog => fit_normal_log(data, opts),
    }
}

/// Sample mean and divide-by-n standard deviation of `ln k`.
pub fn fit_normal_log(data: &CountDataset, opts: &FitOptions) -> Result<FitResult> {
    let support = opts.support();
    let hist = Histogram::from_counts(&data.counts, support);
    if hist.n < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            available: hist.n as usize,
        });
    }
    if hist.values[0] == 0 {
        return Err(Error::Domain("normal-on-log needs an offset of at least 1".into()));
    }
    let logs: Vec<f64> = data
        .counts
        .iter()
        .filter_map(|&c| support.shift(c))
        .map(|k| (k as f64).ln())
        .collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|u| (u - mean) * (u - mean)).sum::<f64>() / n;
    if hist.distinct() < 2 || var <= 0.0 {
        return Err(Error::DegenerateData(
            "all transformed values are equal, so the standard deviation is zero".into(),
        ));
    }
    let params = ModelParams::NormalLog(NormalLogParams::new(mean, var.sqrt())?);
    finish(params, data, &hist, opts, 0, true, false, Vec::new())
}

pub fn fit_dlnorm(data: &CountDataset, opts: &FitOptions) -> Result<FitResult> {
    let hist = prepare(data, opts)?;
    if hist.distinct() < 2 {
        return Err(Error::DegenerateData(
            "all counts are equal; the lognormal likelihood is unbounded as sigma -> 0".into(),
        ));
    }
    let n = hist.n as f64;
    let mean = hist
        .ln_values
        .iter()
        .zip(&hist.freqs)
        .map(|(u, &f)| u * f as f64)
        .sum::<f64>()
        / n;
    let var = hist
        .ln_values
        .iter()
        .zip(&hist.freqs)
        .map(|(u, &f)| (u - mean) * (u - mean) * f as f64)
        .sum::<f64>()
        / n;
    fit_dlnorm_from(data, opts, [mean, var.sqrt().max(0.05)])
}

/// As [`fit_dlnorm`], starting the search from `start = [mu, sigma]`.
pub fn fit_dlnorm_from(data: &CountDataset, opts: &FitOptions, start: [f64; 2]) -> Result<FitResult> {
    let hist = prepare(data, opts)?;
    if hist.distinct() < 2 {
        return Err(Error::DegenerateData(
            "all counts are equal; the lognormal likelihood is unbounded as sigma -> 0".into(),
        ));
    }
    let lower = [f64::NEG_INFINITY, BOUND_MARGIN];
    let make = |x: [f64; 2]| {
        ModelParams::Dlnorm(DiscretisedLognormalParams {
            mu: x[0],
            sigma: x[1],
        })
    };
    run(ModelId::Dlnorm, data, &hist, opts, start, lower, make)
}

pub fn fit_hooked(data: &CountDataset, opts: &FitOptions) -> Result<FitResult> {
    let hist = prepare(data, opts)?;
    let mut ks: Vec<(u64, u64)> = hist.values.iter().copied().zip(hist.freqs.iter().copied()).collect();
    ks.sort_unstable();
    let median = weighted_median(&ks, hist.n);
    fit_hooked_from(data, opts, [2.0, median.max(1.0)])
}

/// As [`fit_hooked`], starting the search from `start = [alpha, B]`.
pub fn fit_hooked_from(data: &CountDataset, opts: &FitOptions, start: [f64; 2]) -> Result<FitResult> {
    let hist = prepare(data, opts)?;
    let lower = [1.0 + BOUND_MARGIN, -(hist.support.min_k() as f64) + BOUND_MARGIN];
    let make = |x: [f64; 2]| {
        ModelParams::Hooked(HookedPowerLawParams {
            alpha: x[0],
            b_offset: x[1],
        })
    };
    run(ModelId::Hooked, data, &hist, opts, start, lower, make)
}

fn prepare(data: &CountDataset, opts: &FitOptions) -> Result<Histogram> {
    opts.validate()?;
    let hist = Histogram::from_counts(&data.counts, opts.support());
    if hist.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(hist)
}

fn weighted_median(sorted: &[(u64, u64)], n: u64) -> f64 {
    let lo_rank = (n - 1) / 2;
    let hi_rank = n / 2;
    let mut seen = 0u64;
    let (mut lo, mut hi) = (None, None);
    for &(k, f) in sorted {
        let end = seen + f;
        if lo.is_none() && lo_rank < end {
            lo = Some(k);
        }
        if hi.is_none() && hi_rank < end {
            hi = Some(k);
            break;
        }
        seen = end;
    }
    let (lo, hi) = (lo.unwrap_or(0), hi.unwrap_or(0));
    0.5 * (lo as f64 + hi as f64)
}

fn run(
    model: ModelId,
    data: &CountDataset,
    hist: &Histogram,
    opts: &FitOptions,
    start: [f64; 2],
    lower: [f64; 2],
    make: impl Fn([f64; 2]) -> ModelParams,
) -> Result<FitResult> {
    let n = hist.n as f64;
    let objective = |x: [f64; 2]| -> f64 {
        match histogram_log_likelihood(&make(x), hist, &opts.trunc) {
            Ok(ll) if ll.is_finite() => -ll / n,
            _ => f64::INFINITY,
        }
    };
    let outcome = minimize(&objective, start, lower, opts)?;
    let mut warnings = Vec::new();
    if outcome.at_boundary {
        warnings.push(format!(
            "{model} optimum lies on a parameter bound at ({}, {})",
            outcome.x[0], outcome.x[1]
        ));
    }
    if !outcome.converged {
        warnings.push(format!(
            "{model} fit stopped at the iteration cap of {} without meeting the tolerance",
            opts.max_iters
        ));
    }
    finish(
        make(outcome.x),
        data,
        hist,
        opts,
        outcome.iterations,
        outcome.converged,
        outcome.at_boundary,
        warnings,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    params: ModelParams,
    data: &CountDataset,
    hist: &Histogram,
    opts: &FitOptions,
    iterations: usize,
    converged: bool,
    at_boundary: bool,
    warnings: Vec<String>,
) -> Result<FitResult> {
    let per_value = log_likelihood_by_value(&params, hist, &opts.trunc)?;
    let log_lik = per_value
        .iter()
        .zip(&hist.freqs)
        .map(|(ll, &f)| ll * f as f64)
        .sum();
    let support = hist.support;
    let pointwise_ll: Vec<f64> = data
        .counts
        .iter()
        .filter_map(|&c| support.shift(c))
        .map(|k| per_value[hist.values.binary_search(&k).expect("value in histogram")])
        .collect();
    Ok(FitResult {
        model_id: params.model_id(),
        params,
        log_lik,
        n: pointwise_ll.len(),
        iterations,
        converged,
        at_boundary,
        support,
        warnings,
        pointwise_ll,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Outcome {
    pub x: [f64; 2],
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    pub at_boundary: bool,
}

fn project(x: [f64; 2], lower: [f64; 2]) -> [f64; 2] {
    [x[0].max(lower[0]), x[1].max(lower[1])]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}

/// Central differences, falling back to one-sided ones next to a bound or a
/// non-finite neighbour.
fn gradient(f: &impl Fn([f64; 2]) -> f64, x: [f64; 2], fx: f64, lower: [f64; 2], rel_step: f64) -> [f64; 2] {
    let mut g = [0.0; 2];
    for i in 0..2 {
        let h = rel_step * x[i].abs().max(1.0);
        let mut up = x;
        up[i] += h;
        let mut down = x;
        down[i] -= h;
        let f_up = f(up);
        let f_down = if down[i] >= lower[i] { f(down) } else { f64::INFINITY };
        g[i] = match (f_up.is_finite(), f_down.is_finite()) {
            (true, true) => (f_up - f_down) / (2.0 * h),
            (true, false) => (f_up - fx) / h,
            (false, true) => (fx - f_down) / h,
            (false, false) => 0.0,
        };
    }
    g
}

type InverseHessian = [[f64; 2]; 2];

fn scaled_identity(scale: f64) -> InverseHessian {
    [[scale, 0.0], [0.0, scale]]
}

fn apply(h: &InverseHessian, g: [f64; 2]) -> [f64; 2] {
    [h[0][0] * g[0] + h[0][1] * g[1], h[1][0] * g[0] + h[1][1] * g[1]]
}

fn bfgs_update(h: &mut InverseHessian, s: [f64; 2], y: [f64; 2]) {
    let sy = dot(s, y);
    if !(sy > 1e-12 * norm(s) * norm(y)) {
        return;
    }
    let rho = 1.0 / sy;
    let hy = apply(h, y);
    let yhy = dot(y, hy);
    let mut next = *h;
    for i in 0..2 {
        for j in 0..2 {
            next[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
    *h = next;
}

pub(crate) fn minimize(
    f: &impl Fn([f64; 2]) -> f64,
    start: [f64; 2],
    lower: [f64; 2],
    opts: &FitOptions,
) -> Result<Outcome> {
    let mut x = project(start, lower);
    let mut fx = f(x);
    if !fx.is_finite() {
        return Err(Error::Domain(format!(
            "objective is not finite at the starting point ({}, {})",
            x[0], x[1]
        )));
    }
    let mut g = gradient(f, x, fx, lower, opts.grad_step);
    let initial_scale = |x: [f64; 2], g: [f64; 2]| {
        0.1 * x[0].abs().max(x[1].abs()).max(1.0) / norm(g).max(1e-300)
    };
    let mut h = scaled_identity(initial_scale(x, g));
    let mut fresh = true;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        // bound-constrained coordinates whose descent direction points outward stay fixed
        let active = [
            x[0] <= lower[0] && g[0] > 0.0,
            x[1] <= lower[1] && g[1] > 0.0,
        ];
        let restrict = |mut d: [f64; 2]| {
            for i in 0..2 {
                if active[i] {
                    d[i] = 0.0;
                }
            }
            d
        };
        let mut d = restrict(apply(&h, g).map(|v| -v));
        if !(dot(d, g) < 0.0) {
            h = scaled_identity(initial_scale(x, g));
            fresh = true;
            d = restrict(apply(&h, g).map(|v| -v));
        }
        if norm(d) == 0.0 || !(dot(d, g) < 0.0) {
            converged = true;
            break;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = project([x[0] + t * d[0], x[1] + t * d[1]], lower);
            let fc = f(cand);
            let step = [cand[0] - x[0], cand[1] - x[1]];
            if fc.is_finite() && fc <= fx + ARMIJO_C * dot(g, step) {
                accepted = Some((cand, fc, step));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, s)) = accepted else {
            // no decrease is resolvable at this precision
            converged = true;
            break;
        };

        let improvement = fx - fnew;
        let gn = gradient(f, xn, fnew, lower, opts.grad_step);
        let y = [gn[0] - g[0], gn[1] - g[1]];
        if fresh {
            let sy = dot(s, y);
            let yy = dot(y, y);
            if sy > 0.0 && yy > 0.0 {
                h = scaled_identity(sy / yy);
            }
            fresh = false;
        }
        bfgs_update(&mut h, s, y);
        x = xn;
        fx = fnew;
        g = gn;
        if improvement <= opts.rel_ll_tol * fx.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    let at_boundary = x[0] <= lower[0] || x[1] <= lower[1];
    Ok(Outcome {
        x,
        f: fx,
        iterations,
        converged,
        at_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> FitOptions {
        FitOptions::default()
    }

    #[test]
    fn normal_log_two_point_example() {
        let d = CountDataset::new("s", 2010, vec![0, 6]);
        let r = fit_normal_log(&d, &quiet()).unwrap();
        let ln7 = 7.0_f64.ln();
        assert!((ln7 - 1.945_910).abs() < 1e-6);
        let ModelParams::NormalLog(p) = r.params else { panic!() };
        assert!((p.mean_log - ln7 / 2.0).abs() < 1e-15);
        assert!((p.sd_log - ln7 / 2.0).abs() < 1e-15);
        assert!((p.mean_log - 0.972_955).abs() < 1e-6);
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn normal_log_degenerate_inputs() {
        let zeros = CountDataset::new("s", 2010, vec![0, 0, 0, 0]);
        assert!(matches!(fit_normal_log(&zeros, &quiet()), Err(Error::DegenerateData(_))));
        let constant = CountDataset::new("s", 2010, vec![7; 12]);
        assert!(matches!(fit_normal_log(&constant, &quiet()), Err(Error::DegenerateData(_))));
        let single = CountDataset::new("s", 2010, vec![3]);
        assert!(matches!(fit_normal_log(&single, &quiet()), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn dlnorm_rejects_constant_data() {
        let constant = CountDataset::new("s", 2010, vec![4; 30]);
        assert!(matches!(fit_dlnorm(&constant, &quiet()), Err(Error::DegenerateData(_))));
        let empty = CountDataset::new("s", 2010, vec![]);
        assert_eq!(fit_dlnorm(&empty, &quiet()), Err(Error::EmptyData));
    }

    #[test]
    fn hooked_single_observation_does_not_crash() {
        let d = CountDataset::new("s", 2010, vec![0]);
        let r = fit_hooked(&d, &FitOptions { max_iters: 200, ..quiet() }).unwrap();
        assert_eq!(r.n, 1);
        assert!(r.log_lik.is_finite());
        let ModelParams::Hooked(p) = r.params else { panic!() };
        assert!(p.alpha > 1.0 && p.b_offset > -1.0);
        // all mass wants to sit on k = 1, which pushes B onto its bound
        assert!(r.at_boundary || !r.converged, "{r:?}");
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn pointwise_sum_matches_total() {
        let d = CountDataset::new("s", 2010, vec![0, 1, 1, 2, 3, 5, 8, 13, 0, 0, 4, 40]);
        for model in [ModelId::Dlnorm, ModelId::Hooked, ModelId::NormalLog] {
            let r = fit(model, &d, &quiet()).unwrap();
            assert_eq!(r.n, r.pointwise_ll.len());
            let s: f64 = r.pointwise_ll.iter().sum();
            assert!((s - r.log_lik).abs() <= 1e-9 * r.log_lik.abs());
        }
    }

    #[test]
    fn exclude_uncited_uses_fewer_observations() {
        let d = CountDataset::new("s", 2010, vec![0, 1, 1, 2, 3, 5, 8, 13, 0, 0, 4, 40]);
        let opts = FitOptions { exclude_uncited: true, ..quiet() };
        let r = fit_dlnorm(&d, &opts).unwrap();
        assert_eq!(r.n, 9);
    }

    #[test]
    fn minimize_quadratic_bowl() {
        let f = |x: [f64; 2]| (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2) + 0.5 * x[0] * x[1];
        let o = minimize(&f, [0.0, 0.0], [f64::NEG_INFINITY; 2], &quiet()).unwrap();
        // solving the gradient equations by hand: x = 520/159, y = -1 - x/40
        let x = 520.0 / 159.0;
        assert!(o.converged);
        assert!((o.x[0] - x).abs() < 1e-4, "{o:?}");
        assert!((o.x[1] - (-1.0 - x / 40.0)).abs() < 1e-4, "{o:?}");
    }

    #[test]
    fn minimize_respects_bounds() {
        let f = |x: [f64; 2]| (x[0] + 2.0).powi(2) + (x[1] - 1.0).powi(2);
        let o = minimize(&f, [5.0, 5.0], [0.0, f64::NEG_INFINITY], &quiet()).unwrap();
        assert!(o.at_boundary);
        assert_eq!(o.x[0], 0.0);
        assert!((o.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn weighted_median_rules() {
        assert_eq!(weighted_median(&[(1, 1), (2, 1), (9, 1)], 3), 2.0);
        assert_eq!(weighted_median(&[(1, 2), (3, 2)], 4), 2.0);
        assert_eq!(weighted_median(&[(4, 5)], 5), 4.0);
    }
}
