//! Finite paths, base points of the path space, and the two locally
//! constant data types everything is phrased in: cylinder functions
//! (finitely supported, signed, fixed depth) and cylinder measures
//! (nonnegative log-domain masses of cylinders up to a depth).
//!
//! Serialization conventions: a nonempty path is the whitespace-separated
//! list of its edge ids; the empty path at vertex `v` (the depth-0 cylinder
//! `[v]`) is written `v<id>`. Measures serialize as TSV rows
//! `path<TAB>log10_value` with `-inf` for mass zero.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, GraphModel, VertexId};
use crate::numeric::{log_add, SignedAccumulator, SignedLog};

/// A finite path: a start vertex and a composable edge list (possibly
/// empty, which denotes the vertex cylinder `[start]`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinitePath {
    start: VertexId,
    edges: Vec<EdgeId>,
}

impl FinitePath {
    pub fn vertex(g: &GraphModel, v: VertexId) -> Result<FinitePath> {
        if !g.has_vertex(v) {
            return Err(Error::InvalidPath(format!("no vertex {v}")));
        }
        Ok(FinitePath { start: v, edges: vec![] })
    }

    pub fn from_edges(g: &GraphModel, edges: &[EdgeId]) -> Result<FinitePath> {
        if edges.is_empty() {
            return Err(Error::InvalidPath("empty edge list; use FinitePath::vertex".into()));
        }
        let first = g
            .edge(edges[0])
            .ok_or_else(|| Error::InvalidPath(format!("no edge {}", edges[0])))?;
        let p = FinitePath { start: first.source, edges: edges.to_vec() };
        p.validate(g)?;
        Ok(p)
    }

    fn validate(&self, g: &GraphModel) -> Result<()> {
        let mut cur = self.start;
        for &id in &self.edges {
            let e = g.edge(id).ok_or_else(|| Error::InvalidPath(format!("no edge {id}")))?;
            if e.source != cur {
                return Err(Error::InvalidPath(format!(
                    "edge {id} starts at {} but the path is at {cur}",
                    e.source
                )));
            }
            cur = e.range;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn source(&self) -> VertexId {
        self.start
    }

    pub fn range(&self, g: &GraphModel) -> VertexId {
        match self.edges.last() {
            None => self.start,
            Some(&id) => g.edge(id).expect("validated path").range,
        }
    }

    /// Every vertex the path visits, in order (length + 1 entries).
    pub fn vertices(&self, g: &GraphModel) -> Vec<VertexId> {
        let mut out = Vec::with_capacity(self.edges.len() + 1);
        out.push(self.start);
        for &id in &self.edges {
            out.push(g.edge(id).expect("validated path").range);
        }
        out
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    /// Append one edge (must compose).
    pub fn extended(&self, g: &GraphModel, id: EdgeId) -> Result<FinitePath> {
        let e = g.edge(id).ok_or_else(|| Error::InvalidPath(format!("no edge {id}")))?;
        if e.source != self.range(g) {
            return Err(Error::InvalidPath(format!("edge {id} does not extend the path")));
        }
        let mut edges = self.edges.clone();
        edges.push(id);
        Ok(FinitePath { start: self.start, edges })
    }

    /// Drop the first edge (the shift image of the cylinder word).
    pub fn shifted(&self, g: &GraphModel) -> Result<FinitePath> {
        match self.edges.split_first() {
            None => Err(Error::InvalidPath("cannot shift an empty path".into())),
            Some((&first, rest)) => {
                let e = g.edge(first).expect("validated path");
                Ok(FinitePath { start: e.range, edges: rest.to_vec() })
            }
        }
    }

    /// First `n` edges as a path (`n <= len`).
    pub fn prefix(&self, n: usize) -> FinitePath {
        assert!(n <= self.edges.len());
        FinitePath { start: self.start, edges: self.edges[..n].to_vec() }
    }

    /// All extensions of this path by `extra` more edges.
    pub fn extensions(&self, g: &GraphModel, extra: usize) -> Vec<FinitePath> {
        let mut out = vec![self.clone()];
        for _ in 0..extra {
            let mut next = Vec::new();
            for p in &out {
                for e in g.out_edges(p.range(g)) {
                    let mut edges = p.edges.clone();
                    edges.push(e.id);
                    next.push(FinitePath { start: p.start, edges });
                }
            }
            out = next;
        }
        out
    }

    /// Sort key: by depth, then start vertex, then edge word.
    pub fn order_key(&self) -> (usize, VertexId, Vec<EdgeId>) {
        (self.edges.len(), self.start, self.edges.clone())
    }

    pub fn parse(g: &GraphModel, s: &str) -> Result<FinitePath> {
        let s = s.trim();
        if let Some(v) = s.strip_prefix('v') {
            if let Ok(v) = v.parse::<i64>() {
                return FinitePath::vertex(g, v);
            }
        }
        let ids: std::result::Result<Vec<EdgeId>, _> =
            s.split_whitespace().map(|t| t.parse::<i64>()).collect();
        let ids = ids.map_err(|e| Error::Parse(format!("bad path {s:?}: {e}")))?;
        if ids.is_empty() {
            return Err(Error::Parse("empty path string".into()));
        }
        FinitePath::from_edges(g, &ids)
    }
}

impl fmt::Display for FinitePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.edges.is_empty() {
            write!(f, "v{}", self.start)
        } else {
            let mut first = true;
            for id in &self.edges {
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{id}")?;
                first = false;
            }
            Ok(())
        }
    }
}

/// What a base point does after its explicit prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tail {
    /// Repeat a fixed cycle forever (the point is eventually periodic).
    Cycle(Vec<EdgeId>),
    /// Follow the smallest outgoing edge id forever. On out-degree-one
    /// regions (ZRay) this is the only continuation; on the ladder it is
    /// the all-up climb, the canonical escaping tail.
    Deterministic,
}

/// A concretely representable point of the path space: a finite prefix and
/// a tail rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasePoint {
    start: VertexId,
    prefix: Vec<EdgeId>,
    tail: Tail,
}

impl BasePoint {
    pub fn new(g: &GraphModel, start: VertexId, prefix: Vec<EdgeId>, tail: Tail) -> Result<BasePoint> {
        if !g.has_vertex(start) {
            return Err(Error::InvalidBasePoint(format!("no vertex {start}")));
        }
        let mut cur = start;
        for &id in &prefix {
            let e = g.edge(id).ok_or_else(|| Error::InvalidBasePoint(format!("no edge {id}")))?;
            if e.source != cur {
                return Err(Error::InvalidBasePoint(format!("prefix edge {id} does not compose")));
            }
            cur = e.range;
        }
        if let Tail::Cycle(cycle) = &tail {
            if cycle.is_empty() {
                return Err(Error::InvalidBasePoint("cycle tail must be nonempty".into()));
            }
            let mut c = cur;
            for &id in cycle {
                let e = g.edge(id).ok_or_else(|| Error::InvalidBasePoint(format!("no edge {id}")))?;
                if e.source != c {
                    return Err(Error::InvalidBasePoint(format!("cycle edge {id} does not compose")));
                }
                c = e.range;
            }
            if c != cur {
                return Err(Error::InvalidBasePoint("tail does not close into a cycle".into()));
            }
        }
        Ok(BasePoint { start, prefix, tail })
    }

    pub fn eventually_periodic(
        g: &GraphModel,
        start: VertexId,
        prefix: Vec<EdgeId>,
        cycle: Vec<EdgeId>,
    ) -> Result<BasePoint> {
        BasePoint::new(g, start, prefix, Tail::Cycle(cycle))
    }

    pub fn deterministic(g: &GraphModel, start: VertexId) -> Result<BasePoint> {
        BasePoint::new(g, start, vec![], Tail::Deterministic)
    }

    pub fn start_vertex(&self) -> VertexId {
        self.start
    }

    /// First `len` edges of the point.
    pub fn expand(&self, g: &GraphModel, len: usize) -> Result<Vec<EdgeId>> {
        let mut out = Vec::with_capacity(len);
        out.extend(self.prefix.iter().take(len).copied());
        if out.len() == len {
            return Ok(out);
        }
        match &self.tail {
            Tail::Cycle(cycle) => {
                let mut i = 0usize;
                while out.len() < len {
                    out.push(cycle[i % cycle.len()]);
                    i += 1;
                }
            }
            Tail::Deterministic => {
                let mut cur = if let Some(&last) = out.last() {
                    g.edge(last).expect("validated").range
                } else {
                    self.start
                };
                while out.len() < len {
                    let es = g.out_edges(cur);
                    let e = es.iter().min_by_key(|e| e.id).ok_or_else(|| {
                        Error::InvalidBasePoint(format!(
                            "deterministic tail hit vertex {cur} with no outgoing edge"
                        ))
                    })?;
                    out.push(e.id);
                    cur = e.range;
                }
            }
        }
        Ok(out)
    }

    /// The shifted point (drop `n` leading edges).
    pub fn shift(&self, g: &GraphModel, n: usize) -> Result<BasePoint> {
        let head = self.expand(g, n)?;
        let new_start = match head.last() {
            None => self.start,
            Some(&id) => g.edge(id).expect("validated").range,
        };
        if n <= self.prefix.len() {
            return BasePoint::new(g, new_start, self.prefix[n..].to_vec(), self.tail.clone());
        }
        match &self.tail {
            Tail::Deterministic => BasePoint::new(g, new_start, vec![], Tail::Deterministic),
            Tail::Cycle(cycle) => {
                let k = (n - self.prefix.len()) % cycle.len();
                let mut rotated = cycle[k..].to_vec();
                rotated.extend_from_slice(&cycle[..k]);
                BasePoint::new(g, new_start, vec![], Tail::Cycle(rotated))
            }
        }
    }
}

impl fmt::Display for BasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.start)?;
        if !self.prefix.is_empty() {
            write!(f, " ")?;
            for (i, id) in self.prefix.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{id}")?;
            }
        }
        match &self.tail {
            Tail::Deterministic => write!(f, " ..."),
            Tail::Cycle(c) => {
                write!(f, " (")?;
                for (i, id) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{id}")?;
                }
                write!(f, ")*")
            }
        }
    }
}

/// A finitely supported locally constant function of fixed depth `d`:
/// `f = Σ w_ν · 1_{Z(ν)}` over paths `ν` of length exactly `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFunction {
    depth: usize,
    terms: BTreeMap<FinitePath, SignedLog>,
}

impl CylinderFunction {
    pub fn zero(depth: usize) -> CylinderFunction {
        CylinderFunction { depth, terms: BTreeMap::new() }
    }

    /// Indicator of a cylinder, weight one.
    pub fn indicator(path: FinitePath) -> CylinderFunction {
        let depth = path.len();
        let mut terms = BTreeMap::new();
        terms.insert(path, SignedLog::from_log(0.0));
        CylinderFunction { depth, terms }
    }

    pub fn from_terms(depth: usize, terms: Vec<(FinitePath, f64)>) -> Result<CylinderFunction> {
        let mut map = BTreeMap::new();
        for (p, w) in terms {
            if p.len() != depth {
                return Err(Error::InvalidPath(format!(
                    "term {p} has length {}, function depth is {depth}",
                    p.len()
                )));
            }
            let s = SignedLog::from_value(w);
            if !s.is_zero() {
                map.insert(p, s);
            }
        }
        Ok(CylinderFunction { depth, terms: map })
    }

    pub fn from_signed_terms(depth: usize, terms: Vec<(FinitePath, SignedLog)>) -> Result<CylinderFunction> {
        let mut map = BTreeMap::new();
        for (p, w) in terms {
            if p.len() != depth {
                return Err(Error::InvalidPath(format!(
                    "term {p} has length {}, function depth is {depth}",
                    p.len()
                )));
            }
            if !w.is_zero() {
                map.insert(p, w);
            }
        }
        Ok(CylinderFunction { depth, terms: map })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FinitePath, SignedLog)> {
        self.terms.iter().map(|(p, &w)| (p, w))
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.terms.values().all(|w| w.sign >= 0)
    }

    /// Pointwise value at a base point.
    pub fn evaluate(&self, g: &GraphModel, x: &BasePoint) -> Result<SignedLog> {
        let word = x.expand(g, self.depth)?;
        let key = if word.is_empty() {
            FinitePath::vertex(g, x.start_vertex())?
        } else {
            FinitePath { start: x.start_vertex(), edges: word }
        };
        Ok(self.terms.get(&key).copied().unwrap_or(SignedLog::ZERO))
    }

    /// Rewrite at a larger depth by splitting every cylinder into its
    /// extensions. Values are unchanged as functions on the path space.
    pub fn refine(&self, g: &GraphModel, new_depth: usize) -> Result<CylinderFunction> {
        if new_depth < self.depth {
            return Err(Error::DepthUnderflow(format!(
                "cannot refine from depth {} down to {new_depth}",
                self.depth
            )));
        }
        if new_depth == self.depth {
            return Ok(self.clone());
        }
        let extra = new_depth - self.depth;
        let mut terms = BTreeMap::new();
        for (p, &w) in &self.terms {
            for q in p.extensions(g, extra) {
                terms.insert(q, w);
            }
        }
        Ok(CylinderFunction { depth: new_depth, terms })
    }

    pub fn add(&self, other: &CylinderFunction) -> Result<CylinderFunction> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch(format!(
                "cannot add depth {} to depth {}",
                self.depth, other.depth
            )));
        }
        let mut terms = self.terms.clone();
        for (p, &w) in &other.terms {
            let mut acc = SignedAccumulator::new();
            if let Some(&old) = terms.get(p) {
                acc.add(old);
            }
            acc.add(w);
            let total = acc.total();
            if total.is_zero() {
                terms.remove(p);
            } else {
                terms.insert(p.clone(), total);
            }
        }
        Ok(CylinderFunction { depth: self.depth, terms })
    }

    pub fn scale(&self, c: f64) -> CylinderFunction {
        let factor = SignedLog::from_value(c);
        let mut terms = BTreeMap::new();
        if factor.is_zero() {
            return CylinderFunction { depth: self.depth, terms };
        }
        for (p, &w) in &self.terms {
            terms.insert(
                p.clone(),
                SignedLog { sign: w.sign * factor.sign, log_abs: w.log_abs + factor.log_abs },
            );
        }
        CylinderFunction { depth: self.depth, terms }
    }
}

/// Outcome of an additivity scan over a measure.
#[derive(Debug, Clone, Copy)]
pub struct AdditivityReport {
    pub checked: usize,
    pub max_rel_residual: f64,
}

/// Nonnegative masses of all cylinders up to a depth, in the log domain.
#[derive(Debug, Clone)]
pub struct CylinderMeasure {
    depth: usize,
    values: BTreeMap<FinitePath, f64>,
    /// Some(true/false) only when the total mass is actually decidable
    /// (finite vertex set); None = unknown from partial sums.
    pub finite_total: Option<bool>,
}

impl CylinderMeasure {
    pub fn new(depth: usize) -> CylinderMeasure {
        CylinderMeasure { depth, values: BTreeMap::new(), finite_total: None }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn set_log(&mut self, path: FinitePath, log_mass: f64) -> Result<()> {
        if path.len() > self.depth {
            return Err(Error::DepthMismatch(format!(
                "path {path} longer than measure depth {}",
                self.depth
            )));
        }
        self.values.insert(path, log_mass);
        Ok(())
    }

    pub fn get_log(&self, path: &FinitePath) -> Option<f64> {
        self.values.get(path).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FinitePath, f64)> {
        self.values.iter().map(|(p, &v)| (p, v))
    }

    /// Drop all cylinders deeper than `d`.
    pub fn restrict_depth(&self, d: usize) -> CylinderMeasure {
        CylinderMeasure {
            depth: d.min(self.depth),
            values: self.values.iter().filter(|(p, _)| p.len() <= d).map(|(p, &v)| (p.clone(), v)).collect(),
            finite_total: self.finite_total,
        }
    }

    /// Multiply every mass by `e^{log_c}`.
    pub fn rescale_log(&mut self, log_c: f64) {
        for v in self.values.values_mut() {
            *v += log_c;
        }
    }

    /// `∫ f dm = Σ w_ν m(Z(ν))`; every support cylinder of `f` must be
    /// stored.
    pub fn integrate(&self, g: &GraphModel, f: &CylinderFunction) -> Result<SignedLog> {
        let _ = g;
        let mut acc = SignedAccumulator::new();
        for (p, w) in f.terms() {
            let m = self.get_log(p).ok_or_else(|| {
                Error::DepthMismatch(format!("measure does not store cylinder {p}"))
            })?;
            acc.add(w.scale_log(m));
        }
        Ok(acc.total())
    }

    /// Relative additivity residuals `m(Z(μ)) vs Σ_e m(Z(μe))` over every
    /// stored cylinder whose extensions are all stored.
    pub fn additivity(&self, g: &GraphModel) -> AdditivityReport {
        let mut checked = 0usize;
        let mut worst = 0.0f64;
        for (p, &v) in &self.values {
            if p.len() >= self.depth {
                continue;
            }
            let mut sum = f64::NEG_INFINITY;
            let mut all_present = true;
            for e in g.out_edges(p.range(g)) {
                let child = match p.extended(g, e.id) {
                    Ok(c) => c,
                    Err(_) => {
                        all_present = false;
                        break;
                    }
                };
                match self.values.get(&child) {
                    Some(&cv) => sum = log_add(sum, cv),
                    None => {
                        all_present = false;
                        break;
                    }
                }
            }
            if !all_present {
                continue;
            }
            checked += 1;
            worst = worst.max(rel_gap(v, sum));
        }
        AdditivityReport { checked, max_rel_residual: worst }
    }

    /// TSV rows `path<TAB>log10(mass)`, sorted by depth then path.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<(&FinitePath, f64)> = self.values.iter().map(|(p, &v)| (p, v)).collect();
        rows.sort_by_key(|(p, _)| p.order_key());
        let mut out = String::new();
        for (p, v) in rows {
            let log10 = v / std::f64::consts::LN_10;
            out.push_str(&format!("{p}\t{log10}\n"));
        }
        out
    }

    pub fn from_tsv(g: &GraphModel, text: &str, depth: usize) -> Result<CylinderMeasure> {
        let mut m = CylinderMeasure::new(depth);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            let path_s = parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing path", lineno + 1)))?;
            let val_s = parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing value", lineno + 1)))?;
            let path = FinitePath::parse(g, path_s)?;
            let log10: f64 = val_s
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad value {val_s:?}: {e}", lineno + 1)))?;
            m.set_log(path, log10 * std::f64::consts::LN_10)?;
        }
        Ok(m)
    }
}

/// Relative gap between two log-domain masses: `|x - y| / max(x, y)`.
pub fn rel_gap(log_x: f64, log_y: f64) -> f64 {
    if log_x == f64::NEG_INFINITY && log_y == f64::NEG_INFINITY {
        return 0.0;
    }
    if log_x == f64::NEG_INFINITY || log_y == f64::NEG_INFINITY {
        return 1.0;
    }
    -(-(log_x - log_y).abs()).exp_m1()
}
