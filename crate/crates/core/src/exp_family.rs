//! Pressure estimation for the hyperbolic exponential maps
//! `E_λ(z) = λ e^z`, `0 < λ < e^{−1}`, with potential `φ(z) = log |z|`.
//!
//! Inverse branches of `E_λ` are `y_k(x) = Log(x/λ) + 2πik`, one per
//! integer `k`, so the transfer operator of `−β log |z|` acts by
//! `(L g)(x) = Σ_k |y_k(x)|^{−β} g(y_k(x))`. Iterating it on `g ≡ 1`
//! at the repelling real fixed point and taking `(1/n) log` of the
//! result estimates the pressure. Every truncation made along the way
//! (branch index, beam width) carries an explicit discarded-mass bound,
//! so each `a_n` is reported as an interval certified to contain the
//! untruncated value.
//!
//! For λ in this range the map is hyperbolic and expands on its Julia
//! set: `|E_λ'(z)| = λ e^{Re z} > 1` forces `Re z > log(1/λ) > 1`
//! there. That floor is what makes the branch sums uniformly bounded
//! (the constant `Â(β)` below) and keeps every preimage point the
//! iteration visits inside the region where the bounds hold.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::bisect;
use crate::pressure::PressureEstimate;

use std::f64::consts::PI;

pub const DEFAULT_BRANCHES: usize = 50;
pub const DEFAULT_BEAM: usize = 100_000;
pub const DEFAULT_N_MAX: usize = 6;

/// The map `E_λ` together with its branch truncation and the repelling
/// real fixed point the pressure is sampled at.
#[derive(Debug, Clone)]
pub struct ExpSystem {
    pub lambda: f64,
    /// Branches `|k| ≤ k_branches` are expanded; the rest go into the
    /// tail bound.
    pub k_branches: usize,
    /// Larger root of `λ e^x = x`; lies on the Julia set.
    pub x0: f64,
}

impl ExpSystem {
    pub fn new(lambda: f64, k_branches: usize) -> Result<ExpSystem> {
        if !(lambda > 0.0 && lambda < (-1.0f64).exp()) {
            return Err(Error::Parameter(format!(
                "lambda must lie in (0, e^-1) for the hyperbolic regime, got {lambda}"
            )));
        }
        let x0 = repelling_fixed_point(lambda);
        Ok(ExpSystem { lambda, k_branches, x0 })
    }

    /// `Σ_{|k| ≤ K} |y_k(x)|^{−β}` plus a closed-form bound on the
    /// dropped `|k| > K` tail.
    ///
    /// The tail bound is `Σ_{|k|>K} (2π|k| − c)^{−β}` with
    /// `c = |Log(x/λ)|`, compared against `2 ∫_K^∞ (2πs − c)^{−β} ds`;
    /// it is finite only when `2πK > c`, and reported as `+∞` otherwise
    /// (the enumerated part is still a valid lower bound).
    pub fn branch_sum(&self, x: Complex64, beta: f64) -> Result<(f64, f64)> {
        if !(beta > 1.0) {
            return Err(Error::Divergent(format!(
                "branch sums diverge like a harmonic tail for β ≤ 1, got β = {beta}"
            )));
        }
        if x.norm_sqr() == 0.0 {
            return Err(Error::Parameter("branch sums are undefined at x = 0".into()));
        }
        let y0 = (x / self.lambda).ln();
        let mut value = 0.0;
        for k in -(self.k_branches as i64)..=(self.k_branches as i64) {
            let y = y0 + Complex64::new(0.0, 2.0 * PI * k as f64);
            value += y.norm_sqr().powf(-0.5 * beta);
        }
        Ok((value, self.tail_bound(y0.norm(), beta)))
    }

    fn tail_bound(&self, c: f64, beta: f64) -> f64 {
        let edge = 2.0 * PI * self.k_branches as f64 - c;
        if edge <= 0.0 {
            return f64::INFINITY;
        }
        edge.powf(1.0 - beta) / (PI * (beta - 1.0))
    }

    /// Uniform bound `Â(β) ≥ sup_x Σ_k |y_k(x)|^{−β}` over the Julia
    /// set, used to propagate discarded mass through the remaining
    /// iterations. Uses `|y_k| ≥ 2π|k| − π` for `k ≠ 0` and the
    /// hyperbolicity floor `|y_0| ≥ log(log(1/λ)/λ)`.
    pub fn branch_sum_sup(&self, beta: f64) -> Result<f64> {
        if !(beta > 1.0) {
            return Err(Error::Divergent(format!(
                "the branch-sum supremum is infinite for β ≤ 1, got β = {beta}"
            )));
        }
        let floor = (((1.0 / self.lambda).ln()) / self.lambda).ln();
        Ok(floor.powf(-beta) + 2.0 * (PI.powf(-beta) + PI.powf(1.0 - beta) / (2.0 * PI * (beta - 1.0))))
    }

    /// Interval estimate of `P(−β log|z|)` from `n_max` beam-truncated
    /// iterations of the transfer operator on `g ≡ 1` at `x₀`.
    ///
    /// The beam keeps the `beam_width` heaviest partial products; the
    /// weight of everything discarded (evicted products and `|k| > K`
    /// branch tails) is accumulated into a bound `D_n` that multiplies
    /// by at most `Â(β)` per remaining step, so
    /// `a_n ∈ [log(S_n)/n, log(S_n + D_n)/n]` certifiably.
    pub fn exp_pressure(
        &self,
        beta: f64,
        n_max: usize,
        beam_width: usize,
    ) -> Result<PressureEstimate> {
        if !(beta > 1.0) {
            return Err(Error::Divergent(format!(
                "pressure iteration needs β > 1, got β = {beta}"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::Parameter("β must be finite".into()));
        }
        if n_max == 0 {
            return Err(Error::Parameter("need at least one iteration".into()));
        }
        if beam_width == 0 {
            return Err(Error::Parameter("beam width must be positive".into()));
        }
        let a_hat = self.branch_sum_sup(beta)?;
        let ks = self.k_branches as i64;

        let mut beam: Vec<(Complex64, f64)> = vec![(Complex64::new(self.x0, 0.0), 1.0)];
        let mut discarded = 0.0f64;
        let mut sequence: Vec<(usize, f64)> = Vec::with_capacity(n_max);
        let mut last = (f64::NEG_INFINITY, f64::INFINITY);

        for n in 1..=n_max {
            // expand in parallel, flatten in item order for determinism
            let expanded: Vec<(Vec<(Complex64, f64)>, f64)> = beam
                .par_iter()
                .map(|&(z, w)| {
                    let y0 = (z / self.lambda).ln();
                    let mut children = Vec::with_capacity(2 * ks as usize + 1);
                    for k in -ks..=ks {
                        let y = y0 + Complex64::new(0.0, 2.0 * PI * k as f64);
                        children.push((y, w * y.norm_sqr().powf(-0.5 * beta)));
                    }
                    (children, w * self.tail_bound(y0.norm(), beta))
                })
                .collect();

            let mut tail_mass = 0.0;
            let mut children: Vec<(Complex64, f64)> = Vec::new();
            for (c, t) in expanded {
                children.extend(c);
                tail_mass += t;
            }

            let mut evicted = 0.0;
            if children.len() > beam_width {
                children.select_nth_unstable_by(beam_width - 1, |a, b| b.1.total_cmp(&a.1));
                evicted = children[beam_width..].iter().map(|&(_, w)| w).sum();
                children.truncate(beam_width);
            }

            discarded = discarded * a_hat + tail_mass + evicted;
            beam = children;
            let kept: f64 = beam.iter().map(|&(_, w)| w).sum();
            let upper = kept + discarded;
            if discarded > 0.5 * upper {
                return Err(Error::BeamOverflow(format!(
                    "discarded-mass bound is {:.2}% of the value at step {n}; \
                     raise the beam width or branch count",
                    100.0 * discarded / upper
                )));
            }
            let (lo, hi) = (kept.ln() / n as f64, upper.ln() / n as f64);
            sequence.push((n, 0.5 * (lo + hi)));
            last = (lo, hi);
        }

        let mid = 0.5 * (last.0 + last.1);
        Ok(PressureEstimate {
            point_value: mid,
            sequence,
            error_interval: last,
            refined: mid,
            n_max,
            method: "exp-beam",
        })
    }
}

/// First adjacent pair of grid points where the estimated pressure
/// changes sign, scanning midpoints left to right.
pub fn beta0_bracket(
    sys: &ExpSystem,
    betas: &[f64],
    n_max: usize,
    beam_width: usize,
) -> Result<(f64, f64)> {
    if betas.len() < 2 {
        return Err(Error::Parameter("need at least two grid points".into()));
    }
    let mut prev: Option<(f64, f64)> = None;
    for &beta in betas {
        let mid = sys.exp_pressure(beta, n_max, beam_width)?.point_value;
        if let Some((b_prev, m_prev)) = prev {
            if m_prev > 0.0 && mid <= 0.0 {
                return Ok((b_prev, beta));
            }
        }
        prev = Some((beta, mid));
    }
    Err(Error::Undecided("no sign change of the pressure on the grid".into()))
}

/// Larger root of `λ e^x = x`, bisection-bracketed: the function is
/// increasing to the right of `log(1/λ)` and changes sign there.
fn repelling_fixed_point(lambda: f64) -> f64 {
    let f = |x: f64| lambda * x.exp() - x;
    let lo = (1.0 / lambda).ln();
    let mut hi = lo + 1.0;
    while f(hi) <= 0.0 {
        hi += 1.0;
    }
    bisect(f, lo, hi, 0.0, 200).expect("sign change by construction")
}
