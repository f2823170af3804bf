//! Pressure estimation. The Gurevich flavor grows periodic-orbit sums
//! `Z_n` anchored at a cylinder, the pointwise flavor grows transfer
//! iterates at a base point; both feed the same tail estimator: the
//! point value is the max of `a_n = (log Z_n)/n` over the window
//! `[⌈N/2⌉, N]`, and a least-squares line through `log Z_n` on that
//! window supplies a slope refinement and a residual-based interval.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{GraphKind, GraphModel, NonWanderingReport};
use crate::numeric::fit_line;
use crate::potential::Potential;
use crate::symbolic::{BasePoint, CylinderFunction, FinitePath};
use crate::transfer::{StopRule, TransferEngine};

#[derive(Debug, Clone)]
pub struct PressureEstimate {
    /// Tail-max of `a_n`; −∞ when every sampled sum vanished.
    pub point_value: f64,
    /// All sampled `(n, a_n)` with a nonzero sum.
    pub sequence: Vec<(usize, f64)>,
    /// `[lo, hi]` bracketing the limit, residual- and truncation-widened.
    pub error_interval: (f64, f64),
    /// Least-squares slope of `log Z_n` over the tail window. Usually the
    /// sharpest number here; the interval is the honest statement.
    pub refined: f64,
    pub n_max: usize,
    pub method: &'static str,
}

impl PressureEstimate {
    pub fn lo(&self) -> f64 {
        self.error_interval.0
    }

    pub fn hi(&self) -> f64 {
        self.error_interval.1
    }

    fn vanished(n_max: usize, method: &'static str) -> PressureEstimate {
        PressureEstimate {
            point_value: f64::NEG_INFINITY,
            sequence: Vec::new(),
            error_interval: (f64::NEG_INFINITY, f64::NEG_INFINITY),
            refined: f64::NEG_INFINITY,
            n_max,
            method,
        }
    }
}

/// `log_zs[i] = log Z_{i+1}`; `var_pad` widens the interval for potentials
/// that are declared truncations of a uniformly continuous function.
fn estimate_from_log_sums(log_zs: &[f64], var_pad: f64, method: &'static str) -> PressureEstimate {
    let n_max = log_zs.len();
    let sequence: Vec<(usize, f64)> = log_zs
        .iter()
        .enumerate()
        .filter(|&(_, &lz)| lz > f64::NEG_INFINITY)
        .map(|(i, &lz)| (i + 1, lz / (i + 1) as f64))
        .collect();
    if sequence.is_empty() {
        return PressureEstimate::vanished(n_max, method);
    }
    let tail_start = n_max.div_ceil(2);
    let tail: Vec<(usize, f64)> =
        sequence.iter().copied().filter(|&(n, _)| n >= tail_start).collect();
    // fall back to everything sampled when the tail window is empty, so
    // −∞ is reserved for an identically vanishing sweep
    let window: &[(usize, f64)] = if tail.is_empty() { &sequence } else { &tail };
    let point_value =
        window.iter().map(|&(_, a)| a).fold(f64::NEG_INFINITY, f64::max);
    let pts: Vec<(f64, f64)> =
        window.iter().map(|&(n, a)| (n as f64, a * n as f64)).collect();
    let (refined, resid) = match fit_line(&pts) {
        Some((_, slope, resid)) => (slope, resid),
        None => (point_value, 0.0),
    };
    let lo = point_value.min(refined) - 2.0 * resid - var_pad;
    let hi = point_value.max(refined) + 2.0 * resid + var_pad;
    PressureEstimate { point_value, sequence, error_interval: (lo, hi), refined, n_max, method }
}

/// Gurevich pressure of `φ` from orbit sums anchored at `Z(μ)`.
pub fn gurevich(
    phi: &Potential,
    g: &GraphModel,
    mu: &FinitePath,
    n_max: usize,
) -> Result<PressureEstimate> {
    if n_max < 4 {
        return Err(Error::Parameter(format!("orbit-sum horizon must be at least 4, got {n_max}")));
    }
    let engine = TransferEngine::new(g, phi)?;
    let log_zs = engine.closed_walk_sums(Some(mu), n_max)?;
    if log_zs.iter().all(|&z| z == f64::NEG_INFINITY) {
        return Err(Error::EmptyNw(format!(
            "no periodic orbit of length <= {n_max} meets Z({mu})"
        )));
    }
    Ok(estimate_from_log_sums(&log_zs, phi.truncation_var.unwrap_or(0.0), "gurevich"))
}

/// Pointwise pressure: growth rate of `L^n_φ(f)(x)`.
pub fn pointwise(
    phi: &Potential,
    g: &GraphModel,
    x: &BasePoint,
    f: &CylinderFunction,
    n_max: usize,
) -> Result<PressureEstimate> {
    if n_max < 4 {
        return Err(Error::Parameter(format!("iterate horizon must be at least 4, got {n_max}")));
    }
    if !f.is_nonnegative() || f.support_len() == 0 {
        return Err(Error::Parameter(
            "pointwise pressure needs a nonnegative, nonzero test function".into(),
        ));
    }
    let engine = TransferEngine::new(g, phi)?;
    let series =
        engine.series_multi(std::slice::from_ref(f), x, &StopRule::FixedSteps(n_max))?;
    let mut log_terms = vec![f64::NEG_INFINITY; n_max];
    for n in 1..=n_max {
        if let Some(t) = series[0].terms.get(n) {
            if !t.is_zero() {
                log_terms[n - 1] = t.log_abs;
            }
        }
    }
    Ok(estimate_from_log_sums(&log_terms, phi.truncation_var.unwrap_or(0.0), "pointwise"))
}

/// A canonical periodic anchor: the smallest non-wandering vertex.
pub fn canonical_anchor(g: &GraphModel) -> Result<FinitePath> {
    let v = match g.nonwandering(0) {
        NonWanderingReport::Empty => {
            return Err(Error::EmptyNw("the graph has no periodic orbits to anchor at".into()))
        }
        NonWanderingReport::FiniteNonEmpty { vertices, .. } => {
            vertices.into_iter().min().expect("non-empty")
        }
        NonWanderingReport::Infinite { samples } => match g.kind() {
            GraphKind::Ladder => 0,
            _ => samples.into_iter().map(|(v, _)| v).min().unwrap_or(0),
        },
    };
    FinitePath::vertex(g, v)
}

/// `P(−βφ)` over a grid, in parallel, with the Lipschitz sandwich
/// `(β′−β)·a ≤ P(−βφ) − P(−β′φ) ≤ (β′−β)·b` checked between adjacent
/// grid points (`[a, b]` = range of φ on the non-wandering part).
pub fn pressure_of_beta(
    phi: &Potential,
    g: &GraphModel,
    betas: &[f64],
    n_max: usize,
) -> Result<Vec<(f64, PressureEstimate)>> {
    let (a, b) = phi.range_on_nw(g)?;
    if !(a > 0.0) || !b.is_finite() {
        return Err(Error::Parameter(format!(
            "the beta-pressure map needs 0 < inf φ ≤ sup φ < ∞ on the non-wandering part, got [{a}, {b}]"
        )));
    }
    let mu = canonical_anchor(g)?;
    let results: Result<Vec<(f64, PressureEstimate)>> = betas
        .par_iter()
        .map(|&beta| Ok((beta, gurevich(&phi.scale(-beta), g, &mu, n_max)?)))
        .collect();
    let results = results?;

    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&i, &j| results[i].0.total_cmp(&results[j].0));
    for pair in order.windows(2) {
        let (beta, ref e) = results[pair[0]];
        let (beta2, ref e2) = results[pair[1]];
        let d = beta2 - beta;
        if d == 0.0 {
            continue;
        }
        // P(−βφ) − P(−β′φ) as an interval, intersected with [a·d, b·d]
        let diff_lo = e.lo() - e2.hi();
        let diff_hi = e.hi() - e2.lo();
        let slack = 1e-9;
        if diff_hi < a * d - slack || diff_lo > b * d + slack {
            return Err(Error::Parameter(format!(
                "Lipschitz sandwich violated between beta = {beta} and {beta2}: \
                 difference in [{diff_lo}, {diff_hi}] vs [{}, {}]",
                a * d,
                b * d
            )));
        }
    }
    Ok(results)
}
