//! Locally constant potentials of finite depth: explicit tables on finite
//! graphs and closed-form rules for the parametric families, plus Birkhoff
//! sums, variations, the Bowen constant, and value ranges on the
//! non-wandering part.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, GraphKind, GraphModel, NonWanderingReport, VertexId};
use crate::symbolic::FinitePath;

/// Closed-form value rules for family graphs.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyRule {
    /// The same value on every point; valid on any graph.
    Constant { value: f64 },
    /// Depth-1 rule on the ladder graph: one value on climb edges, one on
    /// return edges.
    LadderUpDown { up: f64, down: f64 },
    /// Depth-1 rule on the full shift: one value per symbol.
    PerSymbol { values: Vec<f64> },
    /// Depth-1 rule on a core-with-rays graph: explicit core edge values,
    /// per-ray value lists indexed from the attachment level outward, and a
    /// tail value for deeper ray edges.
    CoreRays { core: BTreeMap<EdgeId, f64>, ray_values: Vec<Vec<f64>>, ray_tail: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Table(BTreeMap<FinitePath, f64>),
    Rule(FamilyRule),
}

/// A depth-`k` locally constant potential. The effective value is
/// `mul * raw + add`, so β-scaling and constant shifts stay exact and keep
/// the closed-form rules intact.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    depth: usize,
    source: Source,
    mul: f64,
    add: f64,
    /// Declared `var_k` of a deeper potential this one truncates; pressure
    /// intervals are widened by this half-width.
    pub truncation_var: Option<f64>,
}

impl Potential {
    pub fn constant(value: f64) -> Potential {
        Potential {
            depth: 1,
            source: Source::Rule(FamilyRule::Constant { value }),
            mul: 1.0,
            add: 0.0,
            truncation_var: None,
        }
    }

    pub fn ladder_up_down(up: f64, down: f64) -> Potential {
        Potential {
            depth: 1,
            source: Source::Rule(FamilyRule::LadderUpDown { up, down }),
            mul: 1.0,
            add: 0.0,
            truncation_var: None,
        }
    }

    pub fn per_symbol(values: Vec<f64>) -> Result<Potential> {
        if values.is_empty() {
            return Err(Error::PotentialSpec("per-symbol rule needs at least one value".into()));
        }
        Ok(Potential {
            depth: 1,
            source: Source::Rule(FamilyRule::PerSymbol { values }),
            mul: 1.0,
            add: 0.0,
            truncation_var: None,
        })
    }

    pub fn core_rays(
        core: BTreeMap<EdgeId, f64>,
        ray_values: Vec<Vec<f64>>,
        ray_tail: f64,
    ) -> Potential {
        Potential {
            depth: 1,
            source: Source::Rule(FamilyRule::CoreRays { core, ray_values, ray_tail }),
            mul: 1.0,
            add: 0.0,
            truncation_var: None,
        }
    }

    /// Explicit table on a finite graph; must assign a value to every valid
    /// length-`depth` path.
    pub fn table(g: &GraphModel, depth: usize, values: BTreeMap<FinitePath, f64>) -> Result<Potential> {
        if depth == 0 {
            return Err(Error::PotentialSpec("potential depth must be at least 1".into()));
        }
        let vertices = g.finite_vertices().ok_or_else(|| {
            Error::PotentialSpec("table potentials need a finite graph; use a family rule".into())
        })?;
        for p in values.keys() {
            if p.len() != depth {
                return Err(Error::PotentialSpec(format!(
                    "table key {p} has length {}, expected {depth}",
                    p.len()
                )));
            }
        }
        for p in all_paths(g, &vertices.iter().copied().collect(), depth) {
            if !values.contains_key(&p) {
                return Err(Error::PotentialSpec(format!("table misses path {p}")));
            }
        }
        Ok(Potential { depth, source: Source::Table(values), mul: 1.0, add: 0.0, truncation_var: None })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn rule(&self) -> Option<&FamilyRule> {
        match &self.source {
            Source::Rule(r) => Some(r),
            Source::Table(_) => None,
        }
    }

    /// `mul*self + add` as a new potential.
    pub fn affine(&self, mul: f64, add: f64) -> Potential {
        Potential {
            depth: self.depth,
            source: self.source.clone(),
            mul: self.mul * mul,
            add: self.add * mul + add,
            truncation_var: self.truncation_var.map(|v| v * mul.abs()),
        }
    }

    /// `beta * self`.
    pub fn scale(&self, beta: f64) -> Potential {
        self.affine(beta, 0.0)
    }

    /// Reject rule/graph pairings the rule was not written for.
    pub fn validate_for(&self, g: &GraphModel) -> Result<()> {
        let ok = match (&self.source, g.kind()) {
            (Source::Rule(FamilyRule::Constant { .. }), _) => true,
            (Source::Rule(FamilyRule::LadderUpDown { .. }), GraphKind::Ladder) => true,
            (Source::Rule(FamilyRule::PerSymbol { values }), GraphKind::WeightedFullShift { alphabet }) => {
                values.len() == *alphabet as usize
            }
            (Source::Rule(FamilyRule::CoreRays { .. }), GraphKind::CoreWithInwardRays { .. }) => true,
            (Source::Table(_), _) => g.finite_vertices().is_some(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::PotentialSpec("potential rule does not match the graph kind".into()))
        }
    }

    fn raw_value(&self, g: &GraphModel, window: &[EdgeId]) -> Result<f64> {
        match &self.source {
            Source::Table(map) => {
                let p = FinitePath::from_edges(g, window)?;
                map.get(&p)
                    .copied()
                    .ok_or_else(|| Error::PotentialSpec(format!("no table value for {p}")))
            }
            Source::Rule(rule) => {
                let e = window[0];
                match rule {
                    FamilyRule::Constant { value } => Ok(*value),
                    FamilyRule::LadderUpDown { up, down } => {
                        if e < 0 {
                            return Err(Error::PotentialSpec(format!("edge {e} is not a ladder edge")));
                        }
                        Ok(if e % 2 == 0 { *up } else { *down })
                    }
                    FamilyRule::PerSymbol { values } => values
                        .get(e as usize)
                        .copied()
                        .ok_or_else(|| Error::PotentialSpec(format!("no per-symbol value for edge {e}"))),
                    FamilyRule::CoreRays { core, ray_values, ray_tail } => {
                        if e >= 0 {
                            core.get(&e).copied().ok_or_else(|| {
                                Error::PotentialSpec(format!("no core value for edge {e}"))
                            })
                        } else {
                            let (ray, level) = crate::graph::decode_ray(e).ok_or_else(|| {
                                Error::PotentialSpec(format!("edge {e} is not a ray edge"))
                            })?;
                            let explicit = ray_values
                                .get(ray as usize)
                                .and_then(|vs| vs.get(level as usize - 1));
                            Ok(explicit.copied().unwrap_or(*ray_tail))
                        }
                    }
                }
            }
        }
    }

    /// Value on the cylinder of a length-`depth` edge window.
    pub fn value(&self, g: &GraphModel, window: &[EdgeId]) -> Result<f64> {
        if window.len() != self.depth {
            return Err(Error::Parameter(format!(
                "window length {} does not match potential depth {}",
                window.len(),
                self.depth
            )));
        }
        Ok(self.mul * self.raw_value(g, window)? + self.add)
    }

    /// `Σ_{j<n} φ(σ^j x)` for any `x` in the cylinder of `μ`; defined when
    /// `|μ| ≥ n + depth − 1`.
    pub fn birkhoff(&self, g: &GraphModel, mu: &FinitePath, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        let k = self.depth;
        if mu.len() < n + k - 1 {
            return Err(Error::InsufficientDepth(format!(
                "path of length {} does not determine a {n}-step sum of a depth-{k} potential",
                mu.len()
            )));
        }
        let edges = mu.edges();
        let mut total = 0.0;
        for j in 0..n {
            total += self.value(g, &edges[j..j + k])?;
        }
        Ok(total)
    }

    /// `sup |φ(x) − φ(y)|` over points agreeing on their first `j` edges.
    pub fn variation(&self, g: &GraphModel, j: usize) -> Result<f64> {
        if j >= self.depth {
            return Ok(0.0);
        }
        let raw = match &self.source {
            Source::Rule(FamilyRule::Constant { .. }) => 0.0,
            Source::Rule(FamilyRule::LadderUpDown { up, down }) => (up - down).abs(),
            Source::Rule(FamilyRule::PerSymbol { values }) => spread(values.iter().copied()),
            Source::Rule(FamilyRule::CoreRays { core, ray_values, ray_tail }) => {
                let all = core
                    .values()
                    .chain(ray_values.iter().flatten())
                    .copied()
                    .chain(std::iter::once(*ray_tail));
                spread(all)
            }
            Source::Table(map) => {
                // j = 0 compares arbitrary pairs; j ≥ 1 pairs share a prefix
                if j == 0 {
                    spread(map.values().copied())
                } else {
                    let mut groups: BTreeMap<Vec<EdgeId>, Vec<f64>> = BTreeMap::new();
                    for (p, &v) in map {
                        groups.entry(p.edges()[..j].to_vec()).or_default().push(v);
                    }
                    groups.values().map(|vs| spread(vs.iter().copied())).fold(0.0, f64::max)
                }
            }
        };
        let _ = g;
        Ok(self.mul.abs() * raw)
    }

    /// Bowen constant for Birkhoff-sum differences over shared prefixes:
    /// `C = Σ_{j=1}^{k−1} var_j`; always finite for this potential class.
    pub fn bowen_constant(&self, g: &GraphModel) -> Result<f64> {
        let mut c = 0.0;
        for j in 1..self.depth {
            c += self.variation(g, j)?;
        }
        Ok(c)
    }

    /// `(inf, sup)` of the potential over depth windows lying inside the
    /// non-wandering subgraph.
    pub fn range_on_nw(&self, g: &GraphModel) -> Result<(f64, f64)> {
        self.validate_for(g)?;
        match g.nonwandering(0) {
            NonWanderingReport::Empty => {
                Err(Error::EmptyNw("no non-wandering vertices; range undefined".into()))
            }
            NonWanderingReport::Infinite { .. } => match &self.source {
                Source::Rule(FamilyRule::Constant { value }) => {
                    let v = self.mul * value + self.add;
                    Ok((v, v))
                }
                Source::Rule(FamilyRule::LadderUpDown { up, down }) => {
                    let a = self.mul * up + self.add;
                    let b = self.mul * down + self.add;
                    Ok((a.min(b), a.max(b)))
                }
                _ => Err(Error::PotentialSpec(
                    "no closed-form range for this rule on an infinite graph".into(),
                )),
            },
            NonWanderingReport::FiniteNonEmpty { vertices, .. } => {
                let set: BTreeSet<VertexId> = vertices.into_iter().collect();
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in all_paths(g, &set, self.depth) {
                    let v = self.value(g, p.edges())?;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if lo > hi {
                    return Err(Error::EmptyNw("no potential windows inside the non-wandering part".into()));
                }
                Ok((lo, hi))
            }
        }
    }
}

fn spread<I: IntoIterator<Item = f64>>(vals: I) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        0.0
    } else {
        hi - lo
    }
}

/// All length-`len` paths whose vertices stay inside `allowed`.
pub(crate) fn all_paths(g: &GraphModel, allowed: &BTreeSet<VertexId>, len: usize) -> Vec<FinitePath> {
    let mut out = Vec::new();
    for &v in allowed {
        let mut stack = vec![(v, Vec::<EdgeId>::new())];
        while let Some((cur, edges)) = stack.pop() {
            if edges.len() == len {
                let p = if edges.is_empty() {
                    FinitePath::vertex(g, v)
                } else {
                    FinitePath::from_edges(g, &edges)
                };
                if let Ok(p) = p {
                    out.push(p);
                }
                continue;
            }
            for e in g.out_edges(cur) {
                if allowed.contains(&e.range) {
                    let mut next = edges.clone();
                    next.push(e.id);
                    stack.push((e.range, next));
                }
            }
        }
    }
    out.sort_by_key(|p| p.order_key());
    out
}
