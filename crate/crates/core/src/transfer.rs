//! The transfer operator `L_φ(f)(x) = Σ_{σ(y)=x} e^{φ(y)} f(y)` for
//! locally constant data, computed by dynamic programming over window
//! states (the last `depth−1` edges of a partial path) instead of path
//! enumeration.
//!
//! The same state machinery powers three consumers: pointwise iterate
//! series `L^n_φ(f)(x)` for n = 0..N, the action on cylinder functions,
//! and weighted closed-walk sums `Z_n` over periodic points.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, GraphModel, NonWanderingReport, VertexId};
use crate::numeric::{log_add, SignedAccumulator, SignedLog};
use crate::potential::Potential;
use crate::symbolic::{BasePoint, CylinderFunction, FinitePath};

/// DP state: the last `w = depth−1` consumed edges plus the vertex the
/// partial path has reached (redundant with the window when w ≥ 1, the
/// entire state when w = 0).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct State {
    window: Vec<EdgeId>,
    frontier: VertexId,
}

/// When to stop extending an iterate series.
#[derive(Debug, Clone)]
pub enum StopRule {
    /// Exactly this many operator applications beyond the function depth.
    FixedSteps(usize),
    /// Stop once every readout's term stays below `rel_cutoff` times its
    /// partial sum for `consecutive` rounds; never exceed `cap` steps.
    Adaptive { rel_cutoff: f64, consecutive: usize, cap: usize },
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::Adaptive { rel_cutoff: 1e-14, consecutive: 16, cap: 10_000 }
    }
}

/// One function's iterate sequence at a base point: `terms[n] = L^n(f)(x)`.
#[derive(Debug, Clone)]
pub struct ReadoutSeries {
    pub terms: Vec<SignedLog>,
    /// False when the adaptive rule hit its cap before the terms died down.
    pub converged: bool,
}

impl ReadoutSeries {
    /// `Σ_n terms[n]`.
    pub fn total(&self) -> SignedLog {
        let mut acc = SignedAccumulator::new();
        for &t in &self.terms {
            acc.add(t);
        }
        acc.total()
    }

    /// Geometric decay ratio measured over the last ten nonzero magnitudes.
    pub fn tail_ratio(&self) -> Option<f64> {
        let logs: Vec<f64> =
            self.terms.iter().filter(|t| !t.is_zero()).map(|t| t.log_abs).collect();
        if logs.len() < 11 {
            return None;
        }
        let a = logs[logs.len() - 11];
        let b = logs[logs.len() - 1];
        Some(((b - a) / 10.0).exp())
    }

    /// Geometric bound on the dropped tail `Σ_{n>N} terms`, from the
    /// measured decay ratio; None when the ratio is missing or ≥ 1.
    pub fn tail_bound_log(&self) -> Option<f64> {
        let r = self.tail_ratio()?;
        if !(r < 1.0) {
            return None;
        }
        let last = self.terms.iter().rev().find(|t| !t.is_zero())?;
        Some(last.log_abs + (r / (1.0 - r)).ln())
    }
}

struct Space {
    states: Vec<State>,
    index: BTreeMap<State, usize>,
    /// rows[s] = outgoing (target, log weight); empty for boundary states,
    /// which is sound because values there are never read at full depth.
    rows: Vec<Vec<(usize, f64)>>,
}

struct SeedTerm {
    seed: usize,
    sign: i8,
    logw: f64,
}

struct Readout {
    depth: usize,
    seed_terms: Vec<SeedTerm>,
    direct: Vec<SignedLog>,
}

pub struct TransferEngine<'a> {
    g: &'a GraphModel,
    phi: &'a Potential,
    w: usize,
}

impl<'a> TransferEngine<'a> {
    pub fn new(g: &'a GraphModel, phi: &'a Potential) -> Result<TransferEngine<'a>> {
        phi.validate_for(g)?;
        Ok(TransferEngine { g, phi, w: phi.depth() - 1 })
    }

    fn advance(&self, s: &State, e: EdgeId) -> Result<(State, f64)> {
        let edge = self.g.edge(e).ok_or_else(|| Error::GraphSpec(format!("no edge {e}")))?;
        let mut window = s.window.clone();
        window.push(e);
        let logw = self.phi.value(self.g, &window)?;
        let next = if self.w == 0 {
            State { window: vec![], frontier: edge.range }
        } else {
            State { window: window[1..].to_vec(), frontier: edge.range }
        };
        Ok((next, logw))
    }

    /// Breadth-first materialization of everything reachable from `seeds`
    /// in at most `radius` steps, with complete transition rows for all
    /// non-boundary states.
    fn materialize(&self, seeds: &[State], radius: usize) -> Result<Space> {
        let mut space = Space { states: Vec::new(), index: BTreeMap::new(), rows: Vec::new() };
        let mut layer: Vec<usize> = Vec::new();
        for s in seeds {
            if !space.index.contains_key(s) {
                let idx = space.states.len();
                space.index.insert(s.clone(), idx);
                space.states.push(s.clone());
                space.rows.push(Vec::new());
                layer.push(idx);
            }
        }
        for _dist in 0..radius {
            let mut next_layer = Vec::new();
            for &si in &layer {
                let s = space.states[si].clone();
                let mut row = Vec::new();
                for e in self.g.out_edges(s.frontier) {
                    let (t, logw) = self.advance(&s, e.id)?;
                    let ti = match space.index.get(&t) {
                        Some(&i) => i,
                        None => {
                            let i = space.states.len();
                            space.index.insert(t.clone(), i);
                            space.states.push(t);
                            space.rows.push(Vec::new());
                            next_layer.push(i);
                            i
                        }
                    };
                    row.push((ti, logw));
                }
                space.rows[si] = row;
            }
            layer = next_layer;
            if layer.is_empty() {
                break;
            }
        }
        Ok(space)
    }

    /// Straddle product: the `w` windows that overlap both the walk's last
    /// `w` edges and the first edges of `x`.
    fn straddle(&self, s: &State, x_head: &[EdgeId], sx: VertexId) -> Result<f64> {
        if s.frontier != sx {
            return Ok(f64::NEG_INFINITY);
        }
        let k = self.w + 1;
        let mut total = 0.0;
        for t in 1..=self.w {
            let mut window = Vec::with_capacity(k);
            window.extend_from_slice(&s.window[t - 1..]);
            window.extend_from_slice(&x_head[..t]);
            total += self.phi.value(self.g, &window)?;
        }
        Ok(total)
    }

    fn seed_of(&self, nu: &FinitePath) -> Result<(State, f64)> {
        let w = self.w;
        debug_assert!(nu.len() >= w);
        let edges = nu.edges();
        let window = edges[nu.len() - w..].to_vec();
        let k = w + 1;
        let mut inside = 0.0;
        for pos in k..=nu.len() {
            inside += self.phi.value(self.g, &edges[pos - k..pos])?;
        }
        Ok((State { window, frontier: nu.range(self.g) }, inside))
    }

    /// `L^n(f)(x)` for n below the function depth, by direct comparison of
    /// the cylinder word with the expansion of `x`.
    fn direct_terms(&self, fr: &CylinderFunction, x: &BasePoint) -> Result<Vec<SignedLog>> {
        let w = self.w;
        let k = w + 1;
        let df = fr.depth();
        let mut out = Vec::with_capacity(df);
        for n in 0..df {
            let x_edges = x.expand(self.g, (df - n).max(w))?;
            let mut acc = SignedAccumulator::new();
            for (nu, coeff) in fr.terms() {
                let edges = nu.edges();
                if x_edges[..df - n] != edges[n..] {
                    continue;
                }
                let mut word = Vec::with_capacity(n + w);
                word.extend_from_slice(&edges[..n]);
                word.extend_from_slice(&x_edges[..w]);
                let mut weight = 0.0;
                for j in k..=(n + w) {
                    weight += self.phi.value(self.g, &word[j - k..j])?;
                }
                acc.add(coeff.scale_log(weight));
            }
            out.push(acc.total());
        }
        Ok(out)
    }

    /// Iterate series for several functions at one base point in a single
    /// DP sweep. `out[i].terms[n] = L^n_φ(f_i)(x)`.
    pub fn series_multi(
        &self,
        fs: &[CylinderFunction],
        x: &BasePoint,
        stop: &StopRule,
    ) -> Result<Vec<ReadoutSeries>> {
        let w = self.w;
        let x_head = x.expand(self.g, w)?;
        let sx = x.start_vertex();

        let mut seeds: Vec<State> = Vec::new();
        let mut seed_index: BTreeMap<State, usize> = BTreeMap::new();
        let mut readouts: Vec<Readout> = Vec::with_capacity(fs.len());
        for f in fs {
            let df = f.depth().max(w);
            let fr = if df > f.depth() { f.refine(self.g, df)? } else { f.clone() };
            let mut seed_terms = Vec::with_capacity(fr.support_len());
            for (nu, coeff) in fr.terms() {
                let (state, inside) = self.seed_of(nu)?;
                let idx = *seed_index.entry(state.clone()).or_insert_with(|| {
                    seeds.push(state.clone());
                    seeds.len() - 1
                });
                seed_terms.push(SeedTerm { seed: idx, sign: coeff.sign, logw: coeff.log_abs + inside });
            }
            let direct = self.direct_terms(&fr, x)?;
            readouts.push(Readout { depth: df, seed_terms, direct });
        }

        let (cap, fixed) = match stop {
            StopRule::FixedSteps(n) => (*n, true),
            StopRule::Adaptive { cap, .. } => (*cap, false),
        };

        let mut per_seed: Vec<Vec<f64>> = Vec::new();
        let mut converged = fixed || seeds.is_empty();
        let mut radius = if fixed { cap } else { 64.min(cap) };
        loop {
            if seeds.is_empty() {
                break;
            }
            let space = self.materialize(&seeds, radius)?;
            let mut t: Vec<f64> = Vec::with_capacity(space.states.len());
            for s in &space.states {
                t.push(self.straddle(s, &x_head, sx)?);
            }
            per_seed = vec![Vec::with_capacity(radius + 1); seeds.len()];
            for (i, s) in seeds.iter().enumerate() {
                per_seed[i].push(t[space.index[s]]);
            }

            let (rel_cutoff, consecutive) = match stop {
                StopRule::Adaptive { rel_cutoff, consecutive, .. } => (*rel_cutoff, *consecutive),
                StopRule::FixedSteps(_) => (0.0, usize::MAX),
            };
            let log_cutoff = rel_cutoff.ln();
            let mut partials: Vec<f64> = readouts
                .iter()
                .map(|r| {
                    let mut p = f64::NEG_INFINITY;
                    for d in &r.direct {
                        p = log_add(p, d.log_abs);
                    }
                    for st in &r.seed_terms {
                        p = log_add(p, st.logw + per_seed[st.seed][0]);
                    }
                    p
                })
                .collect();
            let mut quiet = 0usize;
            let mut stopped_early = false;
            for _m in 1..=radius {
                let mut next = vec![f64::NEG_INFINITY; t.len()];
                for (si, row) in space.rows.iter().enumerate() {
                    let mut acc = f64::NEG_INFINITY;
                    for &(ti, lw) in row {
                        acc = log_add(acc, lw + t[ti]);
                    }
                    next[si] = acc;
                }
                t = next;
                for (i, s) in seeds.iter().enumerate() {
                    per_seed[i].push(t[space.index[s]]);
                }
                if !fixed {
                    let mut all_quiet = true;
                    for (r, partial) in readouts.iter().zip(partials.iter_mut()) {
                        let mut term = f64::NEG_INFINITY;
                        for st in &r.seed_terms {
                            term = log_add(term, st.logw + per_seed[st.seed].last().unwrap());
                        }
                        *partial = log_add(*partial, term);
                        if term > log_cutoff + *partial {
                            all_quiet = false;
                        }
                    }
                    quiet = if all_quiet { quiet + 1 } else { 0 };
                    if quiet >= consecutive {
                        stopped_early = true;
                        break;
                    }
                }
            }
            if fixed || stopped_early {
                converged = true;
                break;
            }
            if radius >= cap {
                converged = false;
                break;
            }
            radius = (radius * 2).min(cap);
        }

        let mut out = Vec::with_capacity(readouts.len());
        for r in &readouts {
            let steps = if r.seed_terms.is_empty() {
                0
            } else {
                per_seed[r.seed_terms[0].seed].len() - 1
            };
            let mut terms: Vec<SignedLog> = Vec::with_capacity(r.depth + steps + 1);
            terms.extend(r.direct.iter().copied());
            if !r.seed_terms.is_empty() {
                for m in 0..=steps {
                    let mut acc = SignedAccumulator::new();
                    for st in &r.seed_terms {
                        acc.add(SignedLog { sign: st.sign, log_abs: st.logw + per_seed[st.seed][m] });
                    }
                    terms.push(acc.total());
                }
            }
            out.push(ReadoutSeries { terms, converged });
        }
        Ok(out)
    }

    /// `L^n_φ(f)(x)`.
    pub fn apply_pointwise(&self, f: &CylinderFunction, x: &BasePoint, n: usize) -> Result<SignedLog> {
        let series = self.series_multi(std::slice::from_ref(f), x, &StopRule::FixedSteps(n))?;
        Ok(series[0].terms.get(n).copied().unwrap_or(SignedLog::ZERO))
    }

    /// `L_φ f` as a cylinder function one level shallower, via
    /// `L_φ 1_{Z(μ)} = e^{φ(μ)} 1_{Z(σμ)}`.
    pub fn apply_functional(&self, f: &CylinderFunction) -> Result<CylinderFunction> {
        let k = self.w + 1;
        if f.depth() < k {
            return Err(Error::DepthUnderflow(format!(
                "function depth {} is below the potential depth {k}; refine first",
                f.depth()
            )));
        }
        let mut acc: BTreeMap<FinitePath, SignedAccumulator> = BTreeMap::new();
        for (nu, coeff) in f.terms() {
            let weight = self.phi.value(self.g, &nu.edges()[..k])?;
            let key = nu.shifted(self.g)?;
            acc.entry(key).or_insert_with(SignedAccumulator::new).add(coeff.scale_log(weight));
        }
        let mut terms = Vec::with_capacity(acc.len());
        for (p, a) in acc {
            let total = a.total();
            if !total.is_zero() {
                terms.push((p, total));
            }
        }
        CylinderFunction::from_signed_terms(f.depth() - 1, terms)
    }

    /// Weighted periodic-point sums `Z_n = Σ_{σ^n y = y, y ∈ Z(μ)} e^{φ_n(y)}`
    /// for n = 1..=n_max, returned as logs. `None` anchors at nothing and
    /// sums over all periodic points (finite non-wandering part required).
    pub fn closed_walk_sums(&self, anchor: Option<&FinitePath>, n_max: usize) -> Result<Vec<f64>> {
        match anchor {
            Some(mu) => self.closed_walks_anchored(mu, n_max),
            None => {
                let vertices = match self.g.nonwandering(0) {
                    NonWanderingReport::Empty => return Ok(vec![f64::NEG_INFINITY; n_max]),
                    NonWanderingReport::FiniteNonEmpty { vertices, .. } => vertices,
                    NonWanderingReport::Infinite { .. } => {
                        return Err(Error::Parameter(
                            "summing over all periodic points needs a finite non-wandering part; pass an anchor".into(),
                        ))
                    }
                };
                let mut totals = vec![f64::NEG_INFINITY; n_max];
                for v in vertices {
                    let mu = FinitePath::vertex(self.g, v)?;
                    let part = self.closed_walks_anchored(&mu, n_max)?;
                    for (tot, p) in totals.iter_mut().zip(part) {
                        *tot = log_add(*tot, p);
                    }
                }
                Ok(totals)
            }
        }
    }

    fn closed_walks_anchored(&self, mu: &FinitePath, n_max: usize) -> Result<Vec<f64>> {
        let w = self.w;
        let v = mu.source();
        let ell = mu.len();
        let mut z = vec![f64::NEG_INFINITY; n_max];

        // periods shorter than the anchor: the cycle is forced to be the
        // anchor's n-prefix and must reproduce the anchor when repeated
        for n in 1..=ell.saturating_sub(1).min(n_max) {
            let edges = mu.edges();
            if edges[..ell - n] != edges[n..] {
                continue; // not n-periodic
            }
            let head = &edges[..n];
            let last = self.g.edge(head[n - 1]).expect("validated path");
            if last.range != v {
                continue; // prefix does not close
            }
            let k = w + 1;
            let mut word = Vec::with_capacity(n + k - 1);
            while word.len() < n + k - 1 {
                let i = word.len() % n;
                word.push(head[i]);
            }
            let mut weight = 0.0;
            for j in 0..n {
                weight += self.phi.value(self.g, &word[j..j + k])?;
            }
            z[n - 1] = log_add(z[n - 1], weight);
        }

        if n_max < ell.max(1) && ell > 0 {
            return Ok(z);
        }

        let starts = self.cycle_start_states(v, n_max)?;
        for s0 in starts {
            // forced steps along the anchor
            let mut cur = s0.clone();
            let mut forced = 0.0;
            let mut ok = true;
            for &e in mu.edges() {
                match self.advance(&cur, e) {
                    Ok((next, lw)) => {
                        forced += lw;
                        cur = next;
                    }
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let free_max = n_max - ell;
            let space = self.materialize(&[cur.clone()], free_max)?;
            let read = match space.index.get(&s0) {
                Some(&i) => i,
                None if ell == 0 => unreachable!("seed is its own start"),
                None => {
                    // the start state is unreachable from the anchored walk
                    continue;
                }
            };
            let seed = space.index[&cur];
            let mut t = vec![f64::NEG_INFINITY; space.states.len()];
            t[seed] = 0.0;
            if t[read] > f64::NEG_INFINITY && ell >= 1 {
                z[ell - 1] = log_add(z[ell - 1], forced + t[read]);
            }
            for m in 1..=free_max {
                let mut next = vec![f64::NEG_INFINITY; t.len()];
                for (si, row) in space.rows.iter().enumerate() {
                    if t[si] == f64::NEG_INFINITY {
                        continue;
                    }
                    for &(ti, lw) in row {
                        next[ti] = log_add(next[ti], t[si] + lw);
                    }
                }
                t = next;
                let n = ell + m;
                if n >= 1 && t[read] > f64::NEG_INFINITY {
                    z[n - 1] = log_add(z[n - 1], forced + t[read]);
                }
            }
        }
        Ok(z)
    }

    /// All window states a closed walk of length ≤ n_max through `v` can
    /// start in: length-w paths ending at `v` inside the forward ball.
    fn cycle_start_states(&self, v: VertexId, n_max: usize) -> Result<Vec<State>> {
        let w = self.w;
        if w == 0 {
            return Ok(vec![State { window: vec![], frontier: v }]);
        }
        let ball = self.g.forward_ball(&[v], n_max);
        let mut into: BTreeMap<VertexId, Vec<(VertexId, EdgeId)>> = BTreeMap::new();
        for &u in &ball {
            for e in self.g.out_edges(u) {
                if ball.contains(&e.range) {
                    into.entry(e.range).or_default().push((u, e.id));
                }
            }
        }
        let mut paths: Vec<Vec<EdgeId>> = vec![vec![]];
        let mut ends: Vec<VertexId> = vec![v];
        for _ in 0..w {
            let mut np = Vec::new();
            let mut ne = Vec::new();
            for (p, &end) in paths.iter().zip(&ends) {
                let first = match p.first() {
                    Some(&e) => self.g.edge(e).expect("edge exists").source,
                    None => end,
                };
                if let Some(preds) = into.get(&first) {
                    for &(u, eid) in preds {
                        let mut q = Vec::with_capacity(p.len() + 1);
                        q.push(eid);
                        q.extend_from_slice(p);
                        np.push(q);
                        ne.push(u);
                        let _ = u;
                    }
                }
            }
            paths = np;
            ends = ne;
            if paths.is_empty() {
                break;
            }
        }
        let mut out: Vec<State> = paths
            .into_iter()
            .map(|window| State { window, frontier: v })
            .collect();
        out.sort();
        out.dedup();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphModel;
    use crate::symbolic::Tail;
    use std::collections::BTreeMap as Map;

    fn ladder_point_at_zero(g: &GraphModel) -> BasePoint {
        BasePoint::eventually_periodic(g, 0, vec![], vec![1]).unwrap()
    }

    #[test]
    fn ladder_loop_series() {
        let g = GraphModel::ladder();
        let x = ladder_point_at_zero(&g);
        let f = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        let cases: [(f64, Box<dyn Fn(i32) -> f64>); 2] =
            [(1.0, Box::new(|_n| 0.5)), (2.0, Box::new(|n| 0.5 * 0.5f64.powi(n)))];
        for (beta, expect) in cases {
            let psi = Potential::constant(2.0f64.ln()).scale(-beta);
            let eng = TransferEngine::new(&g, &psi).unwrap();
            let series = eng.series_multi(std::slice::from_ref(&f), &x, &StopRule::FixedSteps(10)).unwrap();
            let terms = &series[0].terms;
            assert!((terms[0].value() - 1.0).abs() < 1e-14); // L^0 = f(x)
            for n in 1..=10 {
                let want = expect(n as i32);
                assert!(
                    (terms[n].value() - want).abs() < 1e-12 * want.max(1.0),
                    "beta={beta} n={n} got={} want={want}",
                    terms[n].value()
                );
            }
        }
    }

    #[test]
    fn full_shift_binomial() {
        let g = GraphModel::full_shift(2).unwrap();
        let (c1, c2) = (0.3, -0.4);
        let phi = Potential::per_symbol(vec![c1, c2]).unwrap();
        let eng = TransferEngine::new(&g, &phi).unwrap();
        let f = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        let x = BasePoint::eventually_periodic(&g, 0, vec![], vec![0]).unwrap();
        let base = c1.exp() + c2.exp();
        for n in 0..=6 {
            let got = eng.apply_pointwise(&f, &x, n).unwrap().value();
            assert!((got - base.powi(n as i32)).abs() < 1e-12 * base.powi(n as i32));
        }
    }

    #[test]
    fn zray_single_preimage_chain() {
        let g = GraphModel::zray();
        let t = 0.7;
        let psi = Potential::constant(t).scale(-1.5);
        let eng = TransferEngine::new(&g, &psi).unwrap();
        let f = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        let x = BasePoint::deterministic(&g, -3).unwrap();
        for n in 0..=6 {
            let got = eng.apply_pointwise(&f, &x, n).unwrap();
            if n == 3 {
                assert!((got.value() - (-1.5 * t * 3.0).exp()).abs() < 1e-14);
            } else {
                assert!(got.is_zero(), "n={n}");
            }
        }
    }

    #[test]
    fn depth_two_straddle_matches_enumeration() {
        // golden-mean graph with a generic depth-2 table
        let g = GraphModel::explicit_finite(vec![(0, 0, 0), (1, 0, 1), (2, 1, 0)]).unwrap();
        let mut t = Map::new();
        for (word, v) in
            [(vec![0, 0], 1.0), (vec![0, 1], 2.0), (vec![1, 2], 5.0), (vec![2, 0], 3.0), (vec![2, 1], 7.0)]
        {
            t.insert(FinitePath::from_edges(&g, &word).unwrap(), v);
        }
        let phi = Potential::table(&g, 2, t).unwrap().scale(0.11);
        let eng = TransferEngine::new(&g, &phi).unwrap();
        let f = CylinderFunction::indicator(FinitePath::from_edges(&g, &[0, 0]).unwrap());
        let x = BasePoint::eventually_periodic(&g, 0, vec![], vec![0]).unwrap();

        // brute force: all paths p of length n with r(p) = 0, f(p·x) from
        // the first two edges, weight from sliding depth-2 windows
        let val = |word: &[EdgeId]| phi.value(&g, word).unwrap();
        for n in 1..=5usize {
            let mut total = 0.0;
            let mut stack: Vec<(VertexId, Vec<EdgeId>)> = vec![(0, vec![])];
            let mut complete: Vec<Vec<EdgeId>> = vec![];
            while let Some((cur, p)) = stack.pop() {
                if p.len() == n {
                    if cur == 0 {
                        complete.push(p);
                    }
                    continue;
                }
                for e in g.out_edges(cur) {
                    let mut q = p.clone();
                    q.push(e.id);
                    stack.push((e.range, q));
                }
            }
            for p in complete {
                let mut y = p.clone();
                y.extend_from_slice(&[0, 0]); // x starts 0 0 ...
                if y[0] != 0 || y[1] != 0 {
                    continue; // f = 1_{Z(00)}
                }
                let mut wsum = 0.0;
                for j in 0..n {
                    wsum += val(&y[j..j + 2]);
                }
                total += wsum.exp();
            }
            let got = eng.apply_pointwise(&f, &x, n).unwrap().value();
            assert!((got - total).abs() <= 1e-12 * total.abs().max(1.0), "n={n} got={got} want={total}");
        }
    }

    #[test]
    fn functional_single_branch() {
        let g = GraphModel::explicit_finite(vec![(0, 0, 0), (1, 0, 1), (2, 1, 0)]).unwrap();
        let phi = Potential::constant(0.25);
        let eng = TransferEngine::new(&g, &phi).unwrap();
        let f = CylinderFunction::indicator(FinitePath::from_edges(&g, &[1, 2]).unwrap());
        let lf = eng.apply_functional(&f).unwrap();
        assert_eq!(lf.depth(), 1);
        let (key, wv) = lf.terms().next().unwrap();
        assert_eq!(key, &FinitePath::from_edges(&g, &[2]).unwrap());
        assert!((wv.value() - 0.25f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn functional_agrees_with_pointwise() {
        let g = GraphModel::ladder();
        let t = 0.4;
        let phi = Potential::constant(t);
        let eng = TransferEngine::new(&g, &phi).unwrap();
        let f = CylinderFunction::indicator(FinitePath::vertex(&g, 1).unwrap())
            .refine(&g, 1)
            .unwrap();
        let lf = eng.apply_functional(&f).unwrap();
        assert_eq!(lf.depth(), 0);
        let points = [
            BasePoint::eventually_periodic(&g, 0, vec![], vec![1]).unwrap(),
            BasePoint::eventually_periodic(&g, 2, vec![5], vec![1]).unwrap(),
            BasePoint::eventually_periodic(&g, 0, vec![0, 3], vec![0, 3]).unwrap(),
        ];
        for x in &points {
            let a = lf.evaluate(&g, x).unwrap();
            let b = eng.apply_pointwise(&f, x, 1).unwrap();
            assert!((a.value() - b.value()).abs() < 1e-12);
        }
    }

    #[test]
    fn semigroup_property() {
        let g = GraphModel::explicit_finite(vec![(0, 0, 0), (1, 0, 1), (2, 1, 0)]).unwrap();
        let phi = Potential::constant(-0.3);
        let eng = TransferEngine::new(&g, &phi).unwrap();
        let f = CylinderFunction::indicator(FinitePath::from_edges(&g, &[1, 2]).unwrap());
        let x = BasePoint::eventually_periodic(&g, 0, vec![], vec![0]).unwrap();
        for (a, b) in [(1usize, 2usize), (2, 1), (2, 3)] {
            let mut fa = f.clone();
            for _ in 0..a {
                fa = eng.apply_functional(&fa).unwrap();
                if fa.depth() == 0 {
                    break;
                }
            }
            // refine back up so further applications stay representable
            let fa = fa.refine(&g, fa.depth().max(1)).unwrap();
            let lhs = eng.apply_pointwise(&f, &x, a + b).unwrap().value();
            let rhs = eng.apply_pointwise(&fa, &x, b).unwrap().value();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "a={a} b={b}");
        }
    }

    #[test]
    fn signed_functions_cancel_consistently() {
        let g = GraphModel::full_shift(2).unwrap();
        let phi = Potential::per_symbol(vec![0.1, 0.6]).unwrap();
        let eng = TransferEngine::new(&g, &phi).unwrap();
        let p0 = FinitePath::from_edges(&g, &[0]).unwrap();
        let p1 = FinitePath::from_edges(&g, &[1]).unwrap();
        let f = CylinderFunction::from_terms(1, vec![(p0.clone(), 2.0), (p1.clone(), -1.0)]).unwrap();
        let fp = CylinderFunction::from_terms(1, vec![(p0, 2.0)]).unwrap();
        let fm = CylinderFunction::from_terms(1, vec![(p1, 1.0)]).unwrap();
        let x = BasePoint::eventually_periodic(&g, 0, vec![], vec![0]).unwrap();
        for n in 0..=5 {
            let whole = eng.apply_pointwise(&f, &x, n).unwrap().value();
            let split = eng.apply_pointwise(&fp, &x, n).unwrap().value()
                - eng.apply_pointwise(&fm, &x, n).unwrap().value();
            assert!((whole - split).abs() < 1e-11 * split.abs().max(1.0));
        }
    }

    #[test]
    fn functional_depth_underflow() {
        let g = GraphModel::ladder();
        let phi = Potential::constant(0.0);
        let eng = TransferEngine::new(&g, &phi).unwrap();
        let f = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        assert!(matches!(eng.apply_functional(&f), Err(Error::DepthUnderflow(_))));
    }

    #[test]
    fn closed_walks_golden_mean_counts() {
        let g = GraphModel::explicit_finite(vec![(0, 0, 0), (1, 0, 1), (2, 1, 0)]).unwrap();
        let phi = Potential::constant(0.0);
        let eng = TransferEngine::new(&g, &phi).unwrap();
        let z = eng.closed_walk_sums(None, 6).unwrap();
        // traces of [[1,1],[1,0]]^n: 1, 3, 4, 7, 11, 18
        let want = [1.0, 3.0, 4.0, 7.0, 11.0, 18.0];
        for (n, w) in want.iter().enumerate() {
            assert!((z[n].exp() - w).abs() < 1e-9, "n={} got={}", n + 1, z[n].exp());
        }
    }

    #[test]
    fn closed_walks_ladder_loop_counts() {
        let g = GraphModel::ladder();
        let phi = Potential::constant(0.0);
        let eng = TransferEngine::new(&g, &phi).unwrap();
        let mu = FinitePath::vertex(&g, 0).unwrap();
        let z = eng.closed_walk_sums(Some(&mu), 8).unwrap();
        for n in 1..=8usize {
            let want = 2.0f64.powi(n as i32 - 1);
            assert!((z[n - 1].exp() - want).abs() < 1e-9 * want, "n={n}");
        }
    }

    #[test]
    fn closed_walks_respect_long_anchors() {
        let g = GraphModel::explicit_finite(vec![(0, 0, 0), (1, 0, 1), (2, 1, 0)]).unwrap();
        let phi = Potential::constant(0.0);
        let eng = TransferEngine::new(&g, &phi).unwrap();
        // anchor 1 2: periodic points starting 1 2 ...
        let mu = FinitePath::from_edges(&g, &[1, 2]).unwrap();
        let z = eng.closed_walk_sums(Some(&mu), 4).unwrap();
        // n=1: would need edge 1 to loop at 0 and the anchor to be 1-periodic; impossible
        assert_eq!(z[0], f64::NEG_INFINITY);
        // n=2: the cycle (1 2) itself
        assert!((z[1].exp() - 1.0).abs() < 1e-12);
        // n=3: cycles 1 2 0; exactly one
        assert!((z[2].exp() - 1.0).abs() < 1e-12);
        // n=4: 1 2 0 0 and 1 2 1 2
        assert!((z[3].exp() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_stop_converges_geometrically() {
        let g = GraphModel::ladder();
        let psi = Potential::constant(2.0f64.ln()).scale(-2.0);
        let eng = TransferEngine::new(&g, &psi).unwrap();
        let f = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        let x = ladder_point_at_zero(&g);
        let s = eng.series_multi(std::slice::from_ref(&f), &x, &StopRule::default()).unwrap();
        assert!(s[0].converged);
        let total = s[0].total().value();
        // Σ_n (1/2)(1/2)^n + 1 for the n=0 term: 1 + 1/2·(1/(1-1/2)) = 2... the
        // terms are 1, 1/4·2^0·... : 1 + Σ_{n≥1} (1/2)^{n+1}·2^{n-1}·... = 1 + Σ (1/2)(1/2)^n = 1.5
        assert!((total - 1.5).abs() < 1e-10, "got {total}");
        let r = s[0].tail_ratio().unwrap();
        assert!((r - 0.5).abs() < 0.01);
    }

    #[test]
    fn deterministic_tail_points_work_in_series() {
        let g = GraphModel::zray();
        let psi = Potential::constant(1.0).scale(-1.0);
        let eng = TransferEngine::new(&g, &psi).unwrap();
        let f = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        let x = BasePoint::new(&g, -2, vec![], Tail::Deterministic).unwrap();
        let s = eng.series_multi(std::slice::from_ref(&f), &x, &StopRule::default()).unwrap();
        assert!(s[0].converged);
        assert!((s[0].total().value() - (-2.0f64).exp()).abs() < 1e-14);
    }
}
