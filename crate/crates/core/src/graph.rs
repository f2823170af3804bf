//! Directed-graph models for the path spaces this crate works on.
//!
//! A graph here is always row-finite (finite out-degree) and sink-free
//! (every vertex emits at least one edge); in-degree may be infinite.
//! Besides explicit finite edge lists, several infinite families are built
//! in and answer structural queries (non-wandering set, cofinality,
//! filtration levels) in closed form while materializing vertices and edges
//! lazily:
//!
//! * `Ladder`: vertices 0,1,2,…; at `n` an "up" edge `n -> n+1` (id `2n`)
//!   and a "down" edge `n -> 0` (id `2n+1`). Every vertex is non-wandering.
//! * `ZRay`: vertices all integers; the single edge `n -> n-1` with id `n`.
//!   No cycles at all.
//! * `WeightedFullShift`: one vertex `0` with `alphabet` self-loops,
//!   ids `0..alphabet`.
//! * `CoreWithInwardRays`: a finite strongly connected core plus infinite
//!   inward rays `… -> ray(r,2) -> ray(r,1) -> attach_r`; every ray vertex
//!   has exactly one outgoing edge, pointing toward the core.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};

pub type VertexId = i64;
pub type EdgeId = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub id: EdgeId,
    pub source: VertexId,
    pub range: VertexId,
}

impl From<(EdgeId, VertexId, VertexId)> for Edge {
    fn from((id, source, range): (EdgeId, VertexId, VertexId)) -> Edge {
        Edge { id, source, range }
    }
}

/// Ray vertices and their edges use negative ids: ray `r`, level `i >= 1`
/// maps to `-(r * RAY_STRIDE + i)`.
pub const RAY_STRIDE: i64 = 1 << 32;

#[derive(Debug, Clone)]
pub enum GraphKind {
    ExplicitFinite {
        edges: Vec<Edge>,
    },
    Ladder,
    ZRay,
    WeightedFullShift {
        alphabet: u32,
    },
    CoreWithInwardRays {
        core_edges: Vec<Edge>,
        /// Attachment vertex of each ray (index = ray number).
        rays: Vec<VertexId>,
    },
}

#[derive(Debug, Clone)]
pub struct GraphModel {
    kind: GraphKind,
    /// Out-adjacency for the explicit part (explicit graphs and cores),
    /// sorted by edge id per vertex.
    adj: BTreeMap<VertexId, Vec<Edge>>,
    edges_by_id: BTreeMap<EdgeId, Edge>,
}

impl GraphModel {
    pub fn explicit_finite<E: Into<Edge>>(edges: Vec<E>) -> Result<GraphModel> {
        let edges: Vec<Edge> = edges.into_iter().map(Into::into).collect();
        let (adj, edges_by_id) = index_edges(&edges, "explicit graph")?;
        let g = GraphModel { kind: GraphKind::ExplicitFinite { edges }, adj, edges_by_id };
        g.check_no_sinks()?;
        Ok(g)
    }

    pub fn ladder() -> GraphModel {
        GraphModel { kind: GraphKind::Ladder, adj: BTreeMap::new(), edges_by_id: BTreeMap::new() }
    }

    pub fn zray() -> GraphModel {
        GraphModel { kind: GraphKind::ZRay, adj: BTreeMap::new(), edges_by_id: BTreeMap::new() }
    }

    pub fn full_shift(alphabet: u32) -> Result<GraphModel> {
        if alphabet == 0 {
            return Err(Error::GraphSpec("full shift needs at least one symbol".into()));
        }
        Ok(GraphModel {
            kind: GraphKind::WeightedFullShift { alphabet },
            adj: BTreeMap::new(),
            edges_by_id: BTreeMap::new(),
        })
    }

    pub fn core_with_inward_rays<E: Into<Edge>>(
        core_edges: Vec<E>,
        rays: Vec<VertexId>,
    ) -> Result<GraphModel> {
        let core_edges: Vec<Edge> = core_edges.into_iter().map(Into::into).collect();
        for e in &core_edges {
            if e.id < 0 || e.source < 0 || e.range < 0 {
                return Err(Error::GraphSpec(
                    "core edge and vertex ids must be nonnegative (negative ids are reserved for rays)".into(),
                ));
            }
        }
        let (adj, edges_by_id) = index_edges(&core_edges, "core")?;
        let core_vertices: BTreeSet<VertexId> = adj.keys().copied().collect();
        if core_vertices.is_empty() {
            return Err(Error::GraphSpec("core must have at least one edge".into()));
        }
        for r in &rays {
            if !core_vertices.contains(r) {
                return Err(Error::GraphSpec(format!("ray attach vertex {r} is not a core vertex")));
            }
        }
        if rays.len() as i64 >= RAY_STRIDE {
            return Err(Error::GraphSpec("too many rays".into()));
        }
        let g = GraphModel { kind: GraphKind::CoreWithInwardRays { core_edges, rays }, adj, edges_by_id };
        g.check_no_sinks()?;
        // the kind's contract is that the core is exactly the non-wandering
        // set, which needs it strongly connected
        let verts: Vec<VertexId> = g.adj.keys().copied().collect();
        let sccs = strongly_connected_components(&verts, |v| {
            g.adj.get(&v).map(|es| es.iter().map(|e| e.range).collect()).unwrap_or_default()
        });
        if sccs.len() != 1 {
            return Err(Error::GraphSpec("core must be strongly connected".into()));
        }
        Ok(g)
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            GraphKind::ExplicitFinite { .. } => "explicit_finite",
            GraphKind::Ladder => "ladder",
            GraphKind::ZRay => "zray",
            GraphKind::WeightedFullShift { .. } => "weighted_full_shift",
            GraphKind::CoreWithInwardRays { .. } => "core_with_inward_rays",
        }
    }

    /// Whether the vertex id denotes a vertex of this graph.
    pub fn has_vertex(&self, v: VertexId) -> bool {
        match &self.kind {
            GraphKind::ExplicitFinite { .. } => self.adj.contains_key(&v),
            GraphKind::Ladder => v >= 0,
            GraphKind::ZRay => true,
            GraphKind::WeightedFullShift { .. } => v == 0,
            GraphKind::CoreWithInwardRays { rays, .. } => {
                if v >= 0 {
                    self.adj.contains_key(&v)
                } else {
                    decode_ray(v).map(|(r, _)| (r as usize) < rays.len()).unwrap_or(false)
                }
            }
        }
    }

    /// Outgoing edges of `v`, sorted by edge id. Finite by row-finiteness.
    pub fn out_edges(&self, v: VertexId) -> Vec<Edge> {
        match &self.kind {
            GraphKind::ExplicitFinite { .. } => self.adj.get(&v).cloned().unwrap_or_default(),
            GraphKind::Ladder => {
                if v < 0 {
                    vec![]
                } else {
                    vec![
                        Edge { id: 2 * v, source: v, range: v + 1 },
                        Edge { id: 2 * v + 1, source: v, range: 0 },
                    ]
                }
            }
            GraphKind::ZRay => vec![Edge { id: v, source: v, range: v - 1 }],
            GraphKind::WeightedFullShift { alphabet } => {
                if v == 0 {
                    (0..*alphabet as i64).map(|id| Edge { id, source: 0, range: 0 }).collect()
                } else {
                    vec![]
                }
            }
            GraphKind::CoreWithInwardRays { rays, .. } => {
                if v >= 0 {
                    self.adj.get(&v).cloned().unwrap_or_default()
                } else {
                    match decode_ray(v) {
                        Some((r, i)) if (r as usize) < rays.len() => {
                            let range = if i == 1 { rays[r as usize] } else { ray_vertex(r, i - 1) };
                            vec![Edge { id: v, source: v, range }]
                        }
                        _ => vec![],
                    }
                }
            }
        }
    }

    /// Edge lookup by id.
    pub fn edge(&self, id: EdgeId) -> Option<Edge> {
        match &self.kind {
            GraphKind::ExplicitFinite { .. } => self.edges_by_id.get(&id).copied(),
            GraphKind::Ladder => {
                if id < 0 {
                    None
                } else if id % 2 == 0 {
                    let n = id / 2;
                    Some(Edge { id, source: n, range: n + 1 })
                } else {
                    let n = (id - 1) / 2;
                    Some(Edge { id, source: n, range: 0 })
                }
            }
            GraphKind::ZRay => Some(Edge { id, source: id, range: id - 1 }),
            GraphKind::WeightedFullShift { alphabet } => {
                if (0..*alphabet as i64).contains(&id) {
                    Some(Edge { id, source: 0, range: 0 })
                } else {
                    None
                }
            }
            GraphKind::CoreWithInwardRays { rays, .. } => {
                if id >= 0 {
                    self.edges_by_id.get(&id).copied()
                } else {
                    match decode_ray(id) {
                        Some((r, i)) if (r as usize) < rays.len() => {
                            let range = if i == 1 { rays[r as usize] } else { ray_vertex(r, i - 1) };
                            Some(Edge { id, source: ray_vertex(r, i), range })
                        }
                        _ => None,
                    }
                }
            }
        }
    }

    /// All vertices, for the kinds whose vertex set is finite.
    pub fn finite_vertices(&self) -> Option<Vec<VertexId>> {
        match &self.kind {
            GraphKind::ExplicitFinite { .. } => Some(self.adj.keys().copied().collect()),
            GraphKind::WeightedFullShift { .. } => Some(vec![0]),
            _ => None,
        }
    }

    /// Whether the forward dynamics can escape every compact region (the
    /// prerequisite for building a diverging base-point sequence).
    pub fn supports_escape(&self) -> bool {
        matches!(self.kind, GraphKind::Ladder | GraphKind::ZRay)
    }

    /// Forward ball: every vertex reachable from `starts` within `radius`
    /// edge steps (including the starts). Deterministic BFS order.
    pub fn forward_ball(&self, starts: &[VertexId], radius: usize) -> Vec<VertexId> {
        let mut seen: BTreeSet<VertexId> = BTreeSet::new();
        let mut frontier: Vec<VertexId> = Vec::new();
        for &s in starts {
            if self.has_vertex(s) && seen.insert(s) {
                frontier.push(s);
            }
        }
        let mut out: Vec<VertexId> = frontier.clone();
        for _ in 0..radius {
            let mut next = Vec::new();
            for &v in &frontier {
                for e in self.out_edges(v) {
                    if seen.insert(e.range) {
                        next.push(e.range);
                        out.push(e.range);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        out.sort_unstable();
        out
    }

    /// Shortest cycle through `v` of length at most `max_len`, as an edge
    /// list, found by breadth-first search back to `v`.
    pub fn find_cycle_through(&self, v: VertexId, max_len: usize) -> Option<Vec<EdgeId>> {
        if !self.has_vertex(v) {
            return None;
        }
        // BFS over (vertex) with parent pointers; first return to v wins.
        let mut parent: BTreeMap<VertexId, (VertexId, EdgeId)> = BTreeMap::new();
        let mut queue: VecDeque<(VertexId, usize)> = VecDeque::new();
        queue.push_back((v, 0));
        let mut seen: BTreeSet<VertexId> = BTreeSet::new();
        seen.insert(v);
        while let Some((u, d)) = queue.pop_front() {
            if d >= max_len {
                continue;
            }
            for e in self.out_edges(u) {
                if e.range == v {
                    // reconstruct v -> ... -> u, then e closes the cycle
                    let mut rev = vec![e.id];
                    let mut cur = u;
                    while cur != v {
                        let (p, pe) = parent[&cur];
                        rev.push(pe);
                        cur = p;
                    }
                    rev.reverse();
                    return Some(rev);
                }
                if seen.insert(e.range) {
                    parent.insert(e.range, (u, e.id));
                    queue.push_back((e.range, d + 1));
                }
            }
        }
        None
    }

    fn check_no_sinks(&self) -> Result<()> {
        // only explicit parts can hide sinks; parametric families are
        // sink-free by construction
        let mut targets: BTreeSet<VertexId> = BTreeSet::new();
        for es in self.adj.values() {
            for e in es {
                if e.range >= 0 {
                    targets.insert(e.range);
                }
            }
        }
        for t in targets {
            if self.adj.get(&t).map_or(true, |es| es.is_empty()) {
                return Err(Error::GraphSpec(format!("vertex {t} has no outgoing edge (sink)")));
            }
        }
        Ok(())
    }

    /// Non-wandering set report. `explore_radius` is accepted for API
    /// stability but the built-in kinds all answer exactly.
    pub fn nonwandering(&self, _explore_radius: usize) -> NonWanderingReport {
        match &self.kind {
            GraphKind::Ladder => {
                let samples = [0, 5]
                    .iter()
                    .map(|&v| (v, self.find_cycle_through(v, 16).expect("ladder vertex is on a cycle")))
                    .collect();
                NonWanderingReport::Infinite { samples }
            }
            GraphKind::ZRay => NonWanderingReport::Empty,
            GraphKind::WeightedFullShift { .. } => {
                NonWanderingReport::FiniteNonEmpty { vertices: vec![0], period: 1, irreducible: true }
            }
            GraphKind::CoreWithInwardRays { .. } => {
                let vertices: Vec<VertexId> = self.adj.keys().copied().collect();
                let period = subgraph_period(self, &vertices);
                NonWanderingReport::FiniteNonEmpty { vertices, period, irreducible: true }
            }
            GraphKind::ExplicitFinite { .. } => {
                let verts: Vec<VertexId> = self.adj.keys().copied().collect();
                let sccs = strongly_connected_components(&verts, |v| {
                    self.adj.get(&v).map(|es| es.iter().map(|e| e.range).collect()).unwrap_or_default()
                });
                let mut nw: Vec<VertexId> = Vec::new();
                let mut cyclic_sccs = 0usize;
                for scc in &sccs {
                    if scc_has_cycle(self, scc) {
                        cyclic_sccs += 1;
                        nw.extend(scc.iter().copied());
                    }
                }
                if nw.is_empty() {
                    return NonWanderingReport::Empty;
                }
                nw.sort_unstable();
                let mut period = 0u32;
                for scc in &sccs {
                    if scc_has_cycle(self, scc) {
                        period = gcd(period, subgraph_period(self, scc));
                    }
                }
                NonWanderingReport::FiniteNonEmpty { vertices: nw, period, irreducible: cyclic_sccs == 1 }
            }
        }
    }

    /// Cofinality: every vertex can reach the tail of every infinite path.
    pub fn is_cofinal(&self) -> bool {
        match &self.kind {
            GraphKind::Ladder | GraphKind::ZRay | GraphKind::WeightedFullShift { .. } => true,
            GraphKind::CoreWithInwardRays { .. } => true, // validated: core strongly connected, rays feed in
            GraphKind::ExplicitFinite { .. } => {
                // tails of infinite paths settle in cycle-bearing SCCs, so:
                // every vertex must reach every such SCC
                let verts: Vec<VertexId> = self.adj.keys().copied().collect();
                let sccs = strongly_connected_components(&verts, |v| {
                    self.adj.get(&v).map(|es| es.iter().map(|e| e.range).collect()).unwrap_or_default()
                });
                let cyclic: Vec<&Vec<VertexId>> = sccs.iter().filter(|s| scc_has_cycle(self, s)).collect();
                for &v in &verts {
                    let reach: BTreeSet<VertexId> =
                        self.forward_ball(&[v], verts.len()).into_iter().collect();
                    for scc in &cyclic {
                        if !scc.iter().any(|w| reach.contains(w)) {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    /// Filtration levels over the non-wandering core: `H_0` is the core,
    /// `H_{n}` adds every vertex all of whose out-edges land in `H_{n-1}`.
    /// Only defined when the non-wandering set is finite and nonempty.
    pub fn h_filtration(&self, levels: usize) -> Result<HFiltration> {
        let nw = match self.nonwandering(0) {
            NonWanderingReport::FiniteNonEmpty { vertices, .. } => vertices,
            NonWanderingReport::Empty => {
                return Err(Error::WrongCase("h_filtration needs a nonempty finite non-wandering set".into()))
            }
            NonWanderingReport::Infinite { .. } => {
                return Err(Error::WrongCase("h_filtration needs a finite non-wandering set".into()))
            }
        };
        match &self.kind {
            GraphKind::CoreWithInwardRays { rays, .. } => {
                let mut out: Vec<Vec<VertexId>> = Vec::with_capacity(levels + 1);
                let mut cur: BTreeSet<VertexId> = nw.iter().copied().collect();
                out.push(cur.iter().copied().collect());
                for n in 1..=levels {
                    for (r, _) in rays.iter().enumerate() {
                        cur.insert(ray_vertex(r as i64, n as i64));
                    }
                    out.push(cur.iter().copied().collect());
                }
                Ok(HFiltration { levels: out, stable: rays.is_empty() })
            }
            GraphKind::WeightedFullShift { .. } | GraphKind::ExplicitFinite { .. } => {
                let all: Vec<VertexId> = self.adj.keys().copied().collect();
                let all: Vec<VertexId> =
                    if all.is_empty() { self.finite_vertices().unwrap_or_default() } else { all };
                let mut cur: BTreeSet<VertexId> = nw.iter().copied().collect();
                let mut out: Vec<Vec<VertexId>> = vec![cur.iter().copied().collect()];
                let mut stable = false;
                for _ in 1..=levels {
                    let mut next = cur.clone();
                    for &v in &all {
                        if next.contains(&v) {
                            continue;
                        }
                        if self.out_edges(v).iter().all(|e| cur.contains(&e.range)) {
                            next.insert(v);
                        }
                    }
                    if next == cur {
                        stable = true;
                        out.push(next.iter().copied().collect());
                        break;
                    }
                    out.push(next.iter().copied().collect());
                    cur = next;
                }
                Ok(HFiltration { levels: out, stable })
            }
            GraphKind::Ladder | GraphKind::ZRay => unreachable!("handled by the non-wandering cases above"),
        }
    }

    /// Deterministic eventually periodic base-point data for this graph:
    /// up to `count` pairs `(prefix, cycle)` at distinct start vertices.
    /// Used by the CLI when no explicit base point is given.
    pub fn canonical_cycles(&self, count: usize) -> Vec<(Vec<EdgeId>, Vec<EdgeId>)> {
        let mut out = Vec::new();
        match &self.kind {
            GraphKind::Ladder => {
                // start at vertex j: take the down edge, then sit on the
                // self-loop d_0 forever
                for j in 0..count as i64 {
                    if j == 0 {
                        out.push((vec![], vec![1])); // d_0 is a self-loop at 0
                    } else {
                        out.push((vec![2 * j + 1], vec![1]));
                    }
                }
            }
            GraphKind::ZRay => {
                // no cycles exist; callers use deterministic tails instead
            }
            GraphKind::WeightedFullShift { .. } => {
                out.push((vec![], vec![0]));
            }
            GraphKind::CoreWithInwardRays { rays, .. } => {
                let core0 = *self.adj.keys().next().expect("validated nonempty core");
                if let Some(cyc) = self.find_cycle_through(core0, self.adj.len() + 1) {
                    out.push((vec![], cyc.clone()));
                    for (r, &attach) in rays.iter().enumerate().take(count.saturating_sub(1)) {
                        // walk in from ray level 1, then follow a path to the cycle base
                        let v1 = ray_vertex(r as i64, 1);
                        let mut prefix = vec![v1];
                        let mut cur = attach;
                        let mut guard = 0;
                        while cur != core0 && guard < 4 * self.adj.len() + 4 {
                            let e = self.out_edges(cur).into_iter().next().expect("no sinks");
                            prefix.push(e.id);
                            cur = e.range;
                            guard += 1;
                        }
                        if cur == core0 {
                            out.push((prefix, cyc.clone()));
                        }
                    }
                }
            }
            GraphKind::ExplicitFinite { .. } => {
                for &v in self.adj.keys() {
                    if out.len() >= count {
                        break;
                    }
                    if let Some(cyc) = self.find_cycle_through(v, self.adj.len() + 1) {
                        out.push((vec![], cyc));
                    }
                }
            }
        }
        out.truncate(count);
        out
    }
}

pub fn ray_vertex(ray: i64, level: i64) -> VertexId {
    -(ray * RAY_STRIDE + level)
}

pub(crate) fn decode_ray(v: VertexId) -> Option<(i64, i64)> {
    if v >= 0 {
        return None;
    }
    let n = -v;
    let (r, i) = (n / RAY_STRIDE, n % RAY_STRIDE);
    if i == 0 {
        None
    } else {
        Some((r, i))
    }
}

fn index_edges(edges: &[Edge], what: &str) -> Result<(BTreeMap<VertexId, Vec<Edge>>, BTreeMap<EdgeId, Edge>)> {
    let mut adj: BTreeMap<VertexId, Vec<Edge>> = BTreeMap::new();
    let mut by_id: BTreeMap<EdgeId, Edge> = BTreeMap::new();
    for &e in edges {
        if by_id.insert(e.id, e).is_some() {
            return Err(Error::GraphSpec(format!("duplicate edge id {} in {what}", e.id)));
        }
        adj.entry(e.source).or_default().push(e);
        adj.entry(e.range).or_default();
    }
    for es in adj.values_mut() {
        es.sort_by_key(|e| e.id);
    }
    Ok((adj, by_id))
}

/// Non-wandering classification of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NonWanderingReport {
    /// No vertex lies on a cycle.
    Empty,
    /// Finitely many vertices on cycles. `period` is the gcd of all cycle
    /// lengths; `irreducible` records whether they form one strongly
    /// connected block.
    FiniteNonEmpty { vertices: Vec<VertexId>, period: u32, irreducible: bool },
    /// Infinitely many non-wandering vertices; `samples` exhibits cycles
    /// found by path search.
    Infinite { samples: Vec<(VertexId, Vec<EdgeId>)> },
}

impl NonWanderingReport {
    pub fn case_name(&self) -> &'static str {
        match self {
            NonWanderingReport::Empty => "empty",
            NonWanderingReport::FiniteNonEmpty { .. } => "finite_nonempty",
            NonWanderingReport::Infinite { .. } => "infinite",
        }
    }
}

/// Increasing vertex sets `H_0 ⊆ H_1 ⊆ …` of the core filtration.
#[derive(Debug, Clone)]
pub struct HFiltration {
    pub levels: Vec<Vec<VertexId>>,
    /// Whether the last computed level is already stable.
    pub stable: bool,
}

fn gcd(a: u32, b: u32) -> u32 {
    if a == 0 {
        b
    } else {
        gcd(b % a, a)
    }
}

fn scc_has_cycle(g: &GraphModel, scc: &[VertexId]) -> bool {
    if scc.len() > 1 {
        return true;
    }
    let v = scc[0];
    g.out_edges(v).iter().any(|e| e.range == v)
}

/// gcd of cycle lengths inside the subgraph induced on `vertices`
/// (which must be strongly connected or a union of SCCs).
fn subgraph_period(g: &GraphModel, vertices: &[VertexId]) -> u32 {
    let inside: BTreeSet<VertexId> = vertices.iter().copied().collect();
    let mut period = 0u32;
    let mut visited: BTreeSet<VertexId> = BTreeSet::new();
    for &root in vertices {
        if visited.contains(&root) {
            continue;
        }
        let mut depth: BTreeMap<VertexId, i64> = BTreeMap::new();
        depth.insert(root, 0);
        let mut queue = VecDeque::new();
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            visited.insert(u);
            for e in g.out_edges(u) {
                if !inside.contains(&e.range) {
                    continue;
                }
                match depth.get(&e.range) {
                    None => {
                        depth.insert(e.range, depth[&u] + 1);
                        queue.push_back(e.range);
                    }
                    Some(&dv) => {
                        let diff = (depth[&u] + 1 - dv).unsigned_abs() as u32;
                        period = gcd(period, diff);
                    }
                }
            }
        }
    }
    if period == 0 {
        // a single BFS tree with no back edges cannot happen inside an SCC
        // with a cycle; 0 only remains when there were no cycles at all
        0
    } else {
        period
    }
}

/// Iterative Kosaraju on an arbitrary (small) vertex list.
pub fn strongly_connected_components<F>(vertices: &[VertexId], succ: F) -> Vec<Vec<VertexId>>
where
    F: Fn(VertexId) -> Vec<VertexId>,
{
    let vset: BTreeSet<VertexId> = vertices.iter().copied().collect();
    // forward pass: record finish order
    let mut finish: Vec<VertexId> = Vec::with_capacity(vertices.len());
    let mut seen: BTreeSet<VertexId> = BTreeSet::new();
    for &start in vertices {
        if seen.contains(&start) {
            continue;
        }
        // explicit stack of (vertex, next-child-index)
        let mut stack: Vec<(VertexId, Vec<VertexId>, usize)> = vec![(start, succ(start), 0)];
        seen.insert(start);
        while let Some((v, children, idx)) = stack.pop() {
            if idx < children.len() {
                let c = children[idx];
                stack.push((v, children, idx + 1));
                if vset.contains(&c) && seen.insert(c) {
                    let cc = succ(c);
                    stack.push((c, cc, 0));
                }
            } else {
                finish.push(v);
            }
        }
    }
    // build reverse adjacency
    let mut radj: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &v in vertices {
        for w in succ(v) {
            if vset.contains(&w) {
                radj.entry(w).or_default().push(v);
            }
        }
    }
    // reverse pass in decreasing finish order
    let mut comp_of: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut comps: Vec<Vec<VertexId>> = Vec::new();
    for &v in finish.iter().rev() {
        if comp_of.contains_key(&v) {
            continue;
        }
        let id = comps.len();
        let mut comp = Vec::new();
        let mut stack = vec![v];
        comp_of.insert(v, id);
        while let Some(u) = stack.pop() {
            comp.push(u);
            for &w in radj.get(&u).map(|v| v.as_slice()).unwrap_or(&[]) {
                if !comp_of.contains_key(&w) {
                    comp_of.insert(w, id);
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}
