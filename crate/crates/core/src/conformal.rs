//! Conformal measures on cylinder sets.
//!
//! The central construction takes a weight potential ψ with certified
//! negative pressure and a family of points escaping to infinity, and
//! reads the mass of each cylinder off the ratio of two iterate series
//! at those points:
//!
//! ```text
//! m(Z(μ)) = Σ_n L^n_ψ(1_{Z(μ)})(x_k)  /  Σ_n L^n_ψ(h)(x_k)
//! ```
//!
//! evaluated at the far end of the escaping family. The resulting measure
//! satisfies `L*_ψ m = m`. At zero pressure the weight is lowered by a
//! small ε first and the cylinder masses are extrapolated back to ε = 0.
//! Graphs whose non-wandering part is a finite core get a direct
//! eigenvector construction instead, extended outward level by level.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{GraphKind, GraphModel, NonWanderingReport, VertexId};
use crate::numeric::{extrapolate_to_zero, log_sum};
use crate::potential::{all_paths, Potential};
use crate::pressure::{canonical_anchor, gurevich, PressureEstimate};
use crate::symbolic::{rel_gap, BasePoint, CylinderFunction, CylinderMeasure, FinitePath};
use crate::transfer::{StopRule, TransferEngine};

/// Pressure estimates whose relevant end sits beyond zero by more than
/// this margin are treated as certified; anything closer counts as
/// straddling and the gates below stay permissive.
pub const PRESSURE_MARGIN: f64 = 1e-6;

/// Largest tolerated relative disagreement of a cylinder ratio across
/// the tail of the escaping family.
pub const RATIO_STABILITY_TOL: f64 = 1e-6;

/// How far the core spectral radius may sit from 1 (in log scale) before
/// the finite-core extension refuses.
const CORE_RADIUS_TOL: f64 = 1e-6;

/// Horizon of the periodic-orbit pressure gates.
const GATE_HORIZON: usize = 60;

/// Certificate that one escaping point is reachable from the support of
/// the reference function: prepending `chain` to the point lands inside
/// `{h > 0}`, so the series `Σ_n L^n(h)` at the point has a strictly
/// positive term at `n = chain.len()`.
#[derive(Debug, Clone)]
pub struct Witness {
    /// The support cylinder of `h` the chain starts in.
    pub support: FinitePath,
    /// Path from that cylinder to the start vertex of the point.
    pub chain: FinitePath,
}

impl Witness {
    /// Number of transfer steps the certificate spans.
    pub fn steps(&self) -> usize {
        self.chain.len()
    }
}

/// A canonical family of points escaping to infinity, each certified
/// against the support of the same reference function.
#[derive(Debug, Clone)]
pub struct DivergingSequence {
    pub points: Vec<BasePoint>,
    pub witnesses: Vec<Witness>,
}

impl DivergingSequence {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Residuals of the fixed-point identity `m(Z(π)) = e^{−βφ(π)}·m(Z(σπ))`
/// over every stored cylinder pair.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    pub checked: usize,
    pub max_rel: f64,
    pub mean_rel: f64,
}

/// Output of one fixed-weight ratio construction.
#[derive(Debug, Clone)]
pub struct FixedConstruction {
    pub measure: CylinderMeasure,
    /// Worst relative disagreement of any cylinder ratio over the last
    /// points of the escaping family.
    pub ratio_spread: f64,
    /// Log of the worst geometric bound on a truncated series tail.
    pub tail_bound_log: f64,
    /// Whether every series met its decay cutoff before the step cap.
    pub converged: bool,
    /// The pressure estimate the negativity gate saw (None when the
    /// graph has no periodic orbits at all).
    pub pressure: Option<PressureEstimate>,
}

/// A constructed conformal measure with its accuracy bookkeeping.
#[derive(Debug, Clone)]
pub struct ConformalResult {
    pub measure: CylinderMeasure,
    pub beta: f64,
    /// Regularization schedule used (empty for the finite-core route).
    pub eps_schedule: Vec<f64>,
    /// Worst ratio disagreement across all regularized runs.
    pub ratio_spread: f64,
    /// Worst relative gap between the full extrapolation and the one
    /// dropping the coarsest ε, over all cylinders.
    pub extrapolation_spread: f64,
    /// Log of the worst truncated-tail bound across all runs.
    pub tail_bound_log: f64,
    /// Which construction produced the measure.
    pub method: &'static str,
    pub residuals: ResidualReport,
}

/// Canonical escaping points for the non-compact families, certified
/// against `h`.
///
/// On the ladder the k-th point climbs forever from vertex `k`; on the
/// one-way ray it sits `k` steps downstream of the support of `h`. Both
/// families pair each point with a connecting chain out of the first
/// support cylinder of `h`, so every normalizing series has a positive
/// term no later than `chain.len()`; keeping `count` within a few steps
/// of the reported vertex window is what lets the adaptive series
/// truncation start counting quiet rounds immediately.
pub fn diverging_sequence(
    g: &GraphModel,
    h: &CylinderFunction,
    count: usize,
) -> Result<DivergingSequence> {
    if count == 0 {
        return Err(Error::Parameter("an escaping family needs at least one point".into()));
    }
    if !h.is_nonnegative() || h.support_len() == 0 {
        return Err(Error::Parameter(
            "escape witnesses need a nonnegative, nonzero reference function".into(),
        ));
    }
    let nu0 = h.terms().next().expect("nonzero support").0.clone();
    let r0 = nu0.range(g);

    let mut points = Vec::with_capacity(count);
    let mut witnesses = Vec::with_capacity(count);
    match g.kind() {
        GraphKind::Ladder => {
            for k in 1..=count as i64 {
                let mut chain = nu0.clone();
                let mut v = r0;
                if v > k {
                    // drop to the base, then climb
                    chain = chain.extended(g, 2 * v + 1)?;
                    v = 0;
                }
                while v < k {
                    chain = chain.extended(g, 2 * v)?;
                    v += 1;
                }
                points.push(BasePoint::deterministic(g, k)?);
                witnesses.push(Witness { support: nu0.clone(), chain });
            }
        }
        GraphKind::ZRay => {
            for k in 1..=count as i64 {
                let mut chain = nu0.clone();
                let mut v = r0;
                while v > r0 - k {
                    chain = chain.extended(g, v)?;
                    v -= 1;
                }
                points.push(BasePoint::deterministic(g, r0 - k)?);
                witnesses.push(Witness { support: nu0.clone(), chain });
            }
        }
        _ => {
            return Err(Error::NotNoncompact(format!(
                "forward orbits of a {} graph stay inside a compact region; no escaping sequence exists",
                g.kind_name()
            )))
        }
    }

    for (x, wit) in points.iter().zip(&witnesses) {
        debug_assert_eq!(wit.chain.range(g), x.start_vertex());
        let y = BasePoint::new(
            g,
            wit.chain.source(),
            wit.chain.edges().to_vec(),
            crate::symbolic::Tail::Deterministic,
        )?;
        if h.evaluate(g, &y)?.is_zero() {
            return Err(Error::Parameter(format!(
                "witness chain {} does not land in the support of h",
                wit.chain
            )));
        }
    }
    Ok(DivergingSequence { points, witnesses })
}

/// Vertex window whose cylinders the constructions report, always wide
/// enough for the deepest residual checks.
fn root_vertices(g: &GraphModel, nu0: &FinitePath, depth: usize) -> Vec<VertexId> {
    let reach = depth.max(4) as i64;
    match g.kind() {
        GraphKind::Ladder => (0..=reach).collect(),
        GraphKind::ZRay => {
            let r0 = nu0.range(g);
            (0..=reach).map(|i| r0 - i).collect()
        }
        _ => vec![],
    }
}

fn enumerate_cylinders(g: &GraphModel, roots: &[VertexId], depth: usize) -> Result<Vec<FinitePath>> {
    let mut out = Vec::new();
    for &v in roots {
        let base = FinitePath::vertex(g, v)?;
        for d in 0..=depth {
            out.extend(base.extensions(g, d));
        }
    }
    Ok(out)
}

/// Gurevich estimate at the canonical anchor, or None when the graph has
/// no periodic orbit at all (pressure −∞, every negativity gate passes).
fn pressure_gate(psi: &Potential, g: &GraphModel) -> Result<Option<PressureEstimate>> {
    if matches!(g.nonwandering(0), NonWanderingReport::Empty) {
        return Ok(None);
    }
    let anchor = canonical_anchor(g)?;
    gurevich(psi, g, &anchor, GATE_HORIZON).map(Some)
}

/// Ratio-limit construction at a fixed weight potential ψ with certified
/// negative pressure: cylinder masses over the canonical vertex window up
/// to `depth`, normalized so the series of `h` divides out (the first
/// support cylinder of `h` gets mass 1 when `h` is its indicator).
pub fn construct_fixed(
    psi: &Potential,
    g: &GraphModel,
    h: &CylinderFunction,
    seq: &DivergingSequence,
    stop: &StopRule,
    depth: usize,
) -> Result<FixedConstruction> {
    psi.validate_for(g)?;
    if !h.is_nonnegative() || h.support_len() == 0 {
        return Err(Error::Parameter(
            "the normalizing function must be nonnegative and nonzero".into(),
        ));
    }
    if seq.is_empty() {
        return Err(Error::Parameter("the escaping family is empty".into()));
    }

    let pressure = pressure_gate(psi, g)?;
    if let Some(est) = &pressure {
        if est.hi() > PRESSURE_MARGIN {
            return Err(Error::NonnegativePressure(format!(
                "pressure estimate [{:.6}, {:.6}] is not negative; the ratio series need not converge",
                est.lo(),
                est.hi()
            )));
        }
    }

    let nu0 = h.terms().next().expect("nonzero support").0.clone();
    let cylinders = enumerate_cylinders(g, &root_vertices(g, &nu0, depth), depth)?;
    let mut fs: Vec<CylinderFunction> = Vec::with_capacity(cylinders.len() + 1);
    fs.push(h.clone());
    fs.extend(cylinders.iter().cloned().map(CylinderFunction::indicator));

    // one series batch per escaping point; each batch shares a single
    // dynamic program over window states
    let per_point: Vec<(Vec<f64>, f64, bool)> = seq
        .points
        .par_iter()
        .map(|x| -> Result<(Vec<f64>, f64, bool)> {
            let engine = TransferEngine::new(g, psi)?;
            let series = engine.series_multi(&fs, x, stop)?;
            let h_total = series[0].total();
            if h_total.is_zero() || h_total.sign < 0 {
                return Err(Error::UnstableLimit(format!(
                    "normalizing series vanished at the point starting at vertex {}",
                    x.start_vertex()
                )));
            }
            let mut ratios = Vec::with_capacity(cylinders.len());
            for s in &series[1..] {
                let t = s.total();
                ratios.push(if t.is_zero() { f64::NEG_INFINITY } else { t.log_abs - h_total.log_abs });
            }
            let tail = series
                .iter()
                .filter_map(|s| s.tail_bound_log())
                .fold(f64::NEG_INFINITY, f64::max);
            let converged = series.iter().all(|s| s.converged);
            Ok((ratios, tail, converged))
        })
        .collect::<Result<Vec<_>>>()?;

    let tail_bound_log =
        per_point.iter().map(|(_, t, _)| *t).fold(f64::NEG_INFINITY, f64::max);
    let converged = per_point.iter().all(|(_, _, c)| *c);

    let tail_len = per_point.len().min(3);
    let tail_points = &per_point[per_point.len() - tail_len..];
    let mut ratio_spread = 0.0f64;
    let mut measure = CylinderMeasure::new(depth);
    for (i, mu) in cylinders.iter().enumerate() {
        let mut spread = 0.0f64;
        for a in 0..tail_len {
            for b in a + 1..tail_len {
                spread = spread.max(rel_gap(tail_points[a].0[i], tail_points[b].0[i]));
            }
        }
        if spread > RATIO_STABILITY_TOL {
            return Err(Error::UnstableLimit(format!(
                "ratio for {} disagrees by {:.2e} across the escaping tail",
                mu, spread
            )));
        }
        ratio_spread = ratio_spread.max(spread);
        measure.set_log(mu.clone(), tail_points[tail_len - 1].0[i])?;
    }
    Ok(FixedConstruction { measure, ratio_spread, tail_bound_log, converged, pressure })
}

/// Conformal measure for the weight `−βφ`, regularized through a
/// decreasing ε schedule and extrapolated back to ε = 0, with the final
/// normalization `∫ h dm = 1` enforced exactly.
pub fn construct_limit(
    phi: &Potential,
    beta: f64,
    g: &GraphModel,
    h: &CylinderFunction,
    eps_schedule: &[f64],
    stop: &StopRule,
    depth: usize,
) -> Result<ConformalResult> {
    if !beta.is_finite() {
        return Err(Error::Parameter(format!("inverse temperature must be finite, got {beta}")));
    }
    if eps_schedule.is_empty()
        || eps_schedule.iter().any(|&e| !(e > 0.0) || !e.is_finite())
        || eps_schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::Parameter(
            "the regularization schedule must be strictly decreasing and positive".into(),
        ));
    }
    if depth < phi.depth() + 1 {
        return Err(Error::Parameter(format!(
            "construction depth {depth} leaves no room for residual checks of a depth-{} potential",
            phi.depth()
        )));
    }

    let psi = phi.scale(-beta);
    if let Some(est) = pressure_gate(&psi, g)? {
        if est.lo() > PRESSURE_MARGIN {
            return Err(Error::PressurePositive(format!(
                "pressure estimate [{:.6}, {:.6}] is positive; no conformal measure exists",
                est.lo(),
                est.hi()
            )));
        }
    }

    let seq = diverging_sequence(g, h, depth.max(4) + 3)?;
    let mut runs: Vec<FixedConstruction> = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        runs.push(construct_fixed(&psi.affine(1.0, -eps), g, h, &seq, stop, depth)?);
    }

    let ratio_spread =
        runs.iter().map(|r| r.ratio_spread).fold(0.0f64, f64::max);
    let tail_bound_log =
        runs.iter().map(|r| r.tail_bound_log).fold(f64::NEG_INFINITY, f64::max);

    // extrapolate each cylinder mass to ε = 0 over the finest points of
    // the schedule, tracking how much the coarsest of them still moves
    // the answer
    let used = eps_schedule.len().min(3);
    let xs: Vec<f64> = eps_schedule[eps_schedule.len() - used..].to_vec();
    let mut measure = CylinderMeasure::new(depth);
    let mut extrapolation_spread = 0.0f64;
    let paths: Vec<FinitePath> = runs[0].measure.iter().map(|(p, _)| p.clone()).collect();
    for p in &paths {
        let ys: Vec<f64> = runs[runs.len() - used..]
            .iter()
            .map(|r| r.measure.get_log(p).unwrap_or(f64::NEG_INFINITY).exp())
            .collect();
        let full = extrapolate_to_zero(&xs, &ys);
        let refined = if used > 1 { extrapolate_to_zero(&xs[1..], &ys[1..]) } else { full };
        let denom = full.abs().max(refined.abs()).max(f64::MIN_POSITIVE);
        extrapolation_spread = extrapolation_spread.max((full - refined).abs() / denom);
        let log_mass = if full > 0.0 {
            full.ln()
        } else {
            // extrapolation overshot through zero; fall back to the
            // finest regularized value
            runs[runs.len() - 1].measure.get_log(p).unwrap_or(f64::NEG_INFINITY)
        };
        measure.set_log(p.clone(), log_mass)?;
    }

    let total = measure.integrate(g, h)?;
    if total.is_zero() || total.sign < 0 {
        return Err(Error::UnstableLimit("the extrapolated measure gives h zero mass".into()));
    }
    measure.rescale_log(-total.log_abs);

    let residuals = verify(&measure, phi, beta, g, depth - 1)?;
    Ok(ConformalResult {
        measure,
        beta,
        eps_schedule: eps_schedule.to_vec(),
        ratio_spread,
        extrapolation_spread,
        tail_bound_log,
        method: "ratio-limit",
        residuals,
    })
}

/// Measure with `L*_φ m = e^t m`: exists exactly when `t` clears the
/// pressure of φ, and is then the conformal measure of the shifted
/// potential `φ − t`.
pub fn eigenmeasure(
    phi: &Potential,
    t: f64,
    g: &GraphModel,
    h: &CylinderFunction,
    eps_schedule: &[f64],
    stop: &StopRule,
    depth: usize,
) -> Result<ConformalResult> {
    if !t.is_finite() {
        return Err(Error::Parameter(format!("eigenvalue exponent must be finite, got {t}")));
    }
    if let Some(est) = pressure_gate(phi, g)? {
        if t < est.lo() - PRESSURE_MARGIN {
            return Err(Error::BelowThreshold(format!(
                "exponent {t:.6} sits below the pressure estimate [{:.6}, {:.6}]; no eigenmeasure exists",
                est.lo(),
                est.hi()
            )));
        }
    }
    construct_limit(&phi.affine(-1.0, t), 1.0, g, h, eps_schedule, stop, depth)
}

/// Fixed-point residuals of a stored measure against the weight `−βφ`:
/// for every stored path π of length between `k` and `d+1` whose shift is
/// also stored, compare `m(Z(π))` with `e^{−βφ(π)}·m(Z(σπ))`.
///
/// The identity is homogeneous, so the report is invariant under joint
/// rescaling of the measure.
pub fn verify(
    m: &CylinderMeasure,
    phi: &Potential,
    beta: f64,
    g: &GraphModel,
    d: usize,
) -> Result<ResidualReport> {
    phi.validate_for(g)?;
    let k = phi.depth();
    if d < k {
        return Err(Error::Parameter(format!(
            "residual depth {d} cannot resolve a depth-{k} potential"
        )));
    }
    if m.depth() < d + 1 {
        return Err(Error::DepthMismatch(format!(
            "measure of depth {} cannot support residual checks to depth {d}",
            m.depth()
        )));
    }
    let mut checked = 0usize;
    let mut max_rel = 0.0f64;
    let mut sum_rel = 0.0f64;
    for (pi, log_pi) in m.iter() {
        if pi.len() < k || pi.len() > d + 1 {
            continue;
        }
        let shifted = pi.shifted(g)?;
        let Some(log_shift) = m.get_log(&shifted) else { continue };
        let w = -beta * phi.value(g, &pi.edges()[..k])?;
        let r = rel_gap(log_pi, w + log_shift);
        checked += 1;
        sum_rel += r;
        max_rel = max_rel.max(r);
    }
    if checked == 0 {
        return Err(Error::DepthMismatch(
            "no stored cylinder pair admits a residual check".into(),
        ));
    }
    Ok(ResidualReport { checked, max_rel, mean_rel: sum_rel / checked as f64 })
}

/// Conformal measure on a graph whose non-wandering part is a finite
/// strongly connected core fed by inward rays: the core masses come from
/// the eigenvector of the weighted window-transition matrix (which must
/// have spectral radius 1), and outer cylinders are pulled back along
/// the rays level by level through the filtration.
pub fn extend_from_core(
    g: &GraphModel,
    phi: &Potential,
    beta: f64,
    levels: usize,
    depth: usize,
) -> Result<ConformalResult> {
    let GraphKind::CoreWithInwardRays { .. } = g.kind() else {
        return Err(Error::WrongCase(format!(
            "the core extension applies to a finite core with inward rays, not a {} graph",
            g.kind_name()
        )));
    };
    phi.validate_for(g)?;
    if !beta.is_finite() {
        return Err(Error::Parameter(format!("inverse temperature must be finite, got {beta}")));
    }
    let k = phi.depth();
    if depth < k + 1 {
        return Err(Error::Parameter(format!(
            "extension depth {depth} leaves no room for residual checks of a depth-{k} potential"
        )));
    }
    let NonWanderingReport::FiniteNonEmpty { vertices, .. } = g.nonwandering(0) else {
        return Err(Error::WrongCase("the non-wandering part is not a finite core".into()));
    };
    let core: BTreeSet<VertexId> = vertices.into_iter().collect();

    let psi = phi.scale(-beta);
    let est = gurevich(&psi, g, &canonical_anchor(g)?, GATE_HORIZON)?;
    if est.lo() > PRESSURE_MARGIN || est.hi() < -PRESSURE_MARGIN {
        return Err(Error::PressureNotZero(format!(
            "core pressure estimate [{:.6}, {:.6}] excludes zero; no conformal measure exists",
            est.lo(),
            est.hi()
        )));
    }

    let (log_radius, window_logs) = core_eigenvector(g, &psi, &core, k)?;
    if log_radius.abs() > CORE_RADIUS_TOL {
        return Err(Error::PressureNotZero(format!(
            "core spectral radius differs from 1 by {:.2e} in log scale",
            log_radius
        )));
    }

    let mut ext = Extension { g, psi: &psi, k, core: &core, window_logs, memo: BTreeMap::new() };
    let filtration = g.h_filtration(levels)?;
    let roots = filtration.levels.last().cloned().unwrap_or_default();
    let mut measure = CylinderMeasure::new(depth);
    for mu in enumerate_cylinders(g, &roots, depth)? {
        let v = ext.mass(&mu)?;
        measure.set_log(mu, v)?;
    }
    measure.finite_total = Some(true);

    let v_min = core.iter().min().copied().expect("nonempty core");
    let pivot = FinitePath::vertex(g, v_min)?;
    let log_pivot = measure
        .get_log(&pivot)
        .ok_or_else(|| Error::DepthMismatch(format!("core cylinder {pivot} not stored")))?;
    measure.rescale_log(-log_pivot);

    let residuals = verify(&measure, phi, beta, g, depth - 1)?;
    Ok(ConformalResult {
        measure,
        beta,
        eps_schedule: vec![],
        ratio_spread: 0.0,
        extrapolation_spread: 0.0,
        tail_bound_log: f64::NEG_INFINITY,
        method: "core-extension",
        residuals,
    })
}

/// Eigenvector of the window-transition matrix restricted to the core:
/// states are the length-(k−1) core paths, a state maps to its shift
/// extended by one edge, and entries carry the weight of the full
/// length-k window. Returns the log spectral radius and the log
/// eigenvector entries. Power iteration on (A + I) so periodic cores
/// converge too.
fn core_eigenvector(
    g: &GraphModel,
    psi: &Potential,
    core: &BTreeSet<VertexId>,
    k: usize,
) -> Result<(f64, BTreeMap<FinitePath, f64>)> {
    let states = all_paths(g, core, k - 1);
    if states.is_empty() {
        return Err(Error::WrongCase("the core admits no potential windows".into()));
    }
    let index: BTreeMap<&FinitePath, usize> =
        states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); states.len()];
    for (i, s) in states.iter().enumerate() {
        for e in g.out_edges(s.range(g)) {
            let window = s.extended(g, e.id)?;
            let target = window.shifted(g)?;
            let j = *index
                .get(&target)
                .ok_or_else(|| Error::WrongCase("core window escapes the core".into()))?;
            rows[i].push((j, psi.value(g, window.edges())?.exp()));
        }
    }

    let n = states.len();
    let mut x = vec![1.0 / n as f64; n];
    let mut lambda = 0.0f64;
    for _ in 0..200_000 {
        let mut next = vec![0.0f64; n];
        for (i, row) in rows.iter().enumerate() {
            let mut acc = x[i]; // the +I part keeps periodic cores converging
            for &(j, w) in row {
                acc += w * x[j];
            }
            next[i] = acc;
        }
        let norm: f64 = next.iter().sum();
        for v in &mut next {
            *v /= norm;
        }
        let moved = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let settled = (norm - lambda).abs() <= 1e-15 * norm.max(1.0) && moved <= 1e-15;
        x = next;
        lambda = norm;
        if settled {
            break;
        }
    }
    let rho = lambda - 1.0;
    if !(rho > 0.0) {
        return Err(Error::PressureNotZero(
            "core transition weights give a nonpositive spectral radius".into(),
        ));
    }
    let logs = states.iter().zip(&x).map(|(s, &v)| (s.clone(), v.ln())).collect();
    Ok((rho.ln(), logs))
}

/// Recursive cylinder masses over the core-plus-rays region, memoized in
/// the log domain. Long paths peel their first window off with the
/// conformal identity; full windows inside the core read the
/// eigenvector; everything else splits one edge deeper, which always
/// moves ray vertices out of the window because rays only point inward.
struct Extension<'a> {
    g: &'a GraphModel,
    psi: &'a Potential,
    k: usize,
    core: &'a BTreeSet<VertexId>,
    window_logs: BTreeMap<FinitePath, f64>,
    memo: BTreeMap<FinitePath, f64>,
}

impl Extension<'_> {
    fn mass(&mut self, mu: &FinitePath) -> Result<f64> {
        if let Some(&v) = self.memo.get(mu) {
            return Ok(v);
        }
        let val = if mu.len() >= self.k {
            let w = self.psi.value(self.g, &mu.edges()[..self.k])?;
            w + self.mass(&mu.shifted(self.g)?)?
        } else if mu.len() == self.k - 1
            && mu.vertices(self.g).iter().all(|v| self.core.contains(v))
        {
            *self.window_logs.get(mu).expect("core window state")
        } else {
            let mut parts = Vec::new();
            for e in self.g.out_edges(mu.range(self.g)) {
                let child = mu.extended(self.g, e.id)?;
                parts.push(self.mass(&child)?);
            }
            log_sum(&parts)
        };
        self.memo.insert(mu.clone(), val);
        Ok(val)
    }
}
