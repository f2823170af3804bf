//! JSON spec files for graphs and potentials.
//!
//! Graph spec: `{"kind": "...", "params": {...}}` where the kind picks
//! which params apply. Edge lists are arrays of `[id, source, range]`
//! integer triples.
//!
//! ```json
//! {"kind": "ladder", "params": {}}
//! {"kind": "explicit_finite", "params": {"edges": [[0,0,0],[1,0,1],[2,1,0]]}}
//! {"kind": "weighted_full_shift", "params": {"alphabet": 2}}
//! {"kind": "core_with_inward_rays", "params": {"core_edges": [[0,0,0],[1,0,0]], "rays": [0]}}
//! ```
//!
//! Potential spec: either an explicit table over edge windows (keys are
//! space-separated edge ids) or a named family rule, optionally
//! composed with an exact affine map and a truncation-variation bound:
//!
//! ```json
//! {"depth": 1, "table": {"0": 0.0, "1": 0.7, "2": 0.7}}
//! {"family_rule": {"kind": "ladder_up_down", "up": 0.693, "down": 1.386}, "mul": -2.0}
//! ```
//!
//! Everything is schema-checked here; computations never see a
//! half-parsed spec.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, GraphModel, VertexId};
use crate::potential::Potential;
use crate::symbolic::FinitePath;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSpec {
    kind: String,
    #[serde(default)]
    params: GraphParams,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphParams {
    edges: Option<Vec<(EdgeId, VertexId, VertexId)>>,
    alphabet: Option<u32>,
    core_edges: Option<Vec<(EdgeId, VertexId, VertexId)>>,
    rays: Option<Vec<VertexId>>,
}

impl GraphParams {
    fn reject_unused(&self, kind: &str, used: &[&str]) -> Result<()> {
        let present: [(&str, bool); 4] = [
            ("edges", self.edges.is_some()),
            ("alphabet", self.alphabet.is_some()),
            ("core_edges", self.core_edges.is_some()),
            ("rays", self.rays.is_some()),
        ];
        for (name, is_set) in present {
            if is_set && !used.contains(&name) {
                return Err(Error::GraphSpec(format!(
                    "param \"{name}\" does not apply to kind \"{kind}\""
                )));
            }
        }
        Ok(())
    }
}

/// Parse a graph spec document.
pub fn parse_graph(text: &str) -> Result<GraphModel> {
    let spec: GraphSpec =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("graph spec: {e}")))?;
    let params = &spec.params;
    match spec.kind.as_str() {
        "ladder" => {
            params.reject_unused(&spec.kind, &[])?;
            Ok(GraphModel::ladder())
        }
        "zray" => {
            params.reject_unused(&spec.kind, &[])?;
            Ok(GraphModel::zray())
        }
        "explicit_finite" => {
            params.reject_unused(&spec.kind, &["edges"])?;
            let edges = spec.params.edges.clone().ok_or_else(|| {
                Error::GraphSpec("kind \"explicit_finite\" needs \"edges\"".into())
            })?;
            GraphModel::explicit_finite(edges)
        }
        "weighted_full_shift" => {
            params.reject_unused(&spec.kind, &["alphabet"])?;
            let alphabet = params.alphabet.ok_or_else(|| {
                Error::GraphSpec("kind \"weighted_full_shift\" needs \"alphabet\"".into())
            })?;
            GraphModel::full_shift(alphabet)
        }
        "core_with_inward_rays" => {
            params.reject_unused(&spec.kind, &["core_edges", "rays"])?;
            let core_edges = spec.params.core_edges.clone().ok_or_else(|| {
                Error::GraphSpec("kind \"core_with_inward_rays\" needs \"core_edges\"".into())
            })?;
            let rays = spec.params.rays.clone().unwrap_or_default();
            GraphModel::core_with_inward_rays(core_edges, rays)
        }
        other => Err(Error::GraphSpec(format!("unknown graph kind \"{other}\""))),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialSpec {
    depth: Option<usize>,
    table: Option<BTreeMap<String, f64>>,
    family_rule: Option<RuleSpec>,
    mul: Option<f64>,
    add: Option<f64>,
    truncation_var: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum RuleSpec {
    #[serde(rename = "constant")]
    Constant { value: f64 },
    #[serde(rename = "ladder_up_down")]
    LadderUpDown { up: f64, down: f64 },
    #[serde(rename = "per_symbol")]
    PerSymbol { values: Vec<f64> },
    #[serde(rename = "core_rays")]
    CoreRays { core: BTreeMap<String, f64>, ray_values: Vec<Vec<f64>>, ray_tail: f64 },
}

/// Parse a potential spec document against the graph it will act on.
pub fn parse_potential(text: &str, g: &GraphModel) -> Result<Potential> {
    let spec: PotentialSpec =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("potential spec: {e}")))?;

    let base = match (&spec.table, &spec.family_rule) {
        (Some(_), Some(_)) => {
            return Err(Error::PotentialSpec(
                "give either \"table\" or \"family_rule\", not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::PotentialSpec(
                "a potential needs a \"table\" or a \"family_rule\"".into(),
            ))
        }
        (Some(table), None) => {
            let depth = spec.depth.ok_or_else(|| {
                Error::PotentialSpec("a table potential needs an explicit \"depth\"".into())
            })?;
            let mut values = BTreeMap::new();
            for (key, &v) in table {
                let ids = parse_edge_ids(key)?;
                values.insert(FinitePath::from_edges(g, &ids)?, v);
            }
            Potential::table(g, depth, values)?
        }
        (None, Some(rule)) => {
            if spec.depth.is_some_and(|d| d != 1) {
                return Err(Error::PotentialSpec(
                    "family rules are depth-1; drop the \"depth\" field or set it to 1".into(),
                ));
            }
            match rule {
                RuleSpec::Constant { value } => Potential::constant(*value),
                RuleSpec::LadderUpDown { up, down } => Potential::ladder_up_down(*up, *down),
                RuleSpec::PerSymbol { values } => Potential::per_symbol(values.clone())?,
                RuleSpec::CoreRays { core, ray_values, ray_tail } => {
                    let mut parsed = BTreeMap::new();
                    for (key, &v) in core {
                        let id: EdgeId = key.trim().parse().map_err(|_| {
                            Error::PotentialSpec(format!("core key \"{key}\" is not an edge id"))
                        })?;
                        parsed.insert(id, v);
                    }
                    Potential::core_rays(parsed, ray_values.clone(), *ray_tail)
                }
            }
        }
    };

    let mut phi = if spec.mul.is_some() || spec.add.is_some() {
        base.affine(spec.mul.unwrap_or(1.0), spec.add.unwrap_or(0.0))
    } else {
        base
    };
    if spec.truncation_var.is_some() {
        phi.truncation_var = spec.truncation_var;
    }
    phi.validate_for(g)?;
    Ok(phi)
}

fn parse_edge_ids(key: &str) -> Result<Vec<EdgeId>> {
    let mut ids = Vec::new();
    for tok in key.split_whitespace() {
        ids.push(tok.parse().map_err(|_| {
            Error::PotentialSpec(format!("table key token \"{tok}\" is not an edge id"))
        })?);
    }
    if ids.is_empty() {
        return Err(Error::PotentialSpec("empty table key".into()));
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    #[test]
    fn named_families_parse_without_params() {
        let g = parse_graph(r#"{"kind": "ladder"}"#).unwrap();
        assert!(matches!(g.kind(), GraphKind::Ladder));
        let g = parse_graph(r#"{"kind": "zray", "params": {}}"#).unwrap();
        assert!(matches!(g.kind(), GraphKind::ZRay));
    }

    #[test]
    fn explicit_edges_parse_as_triples() {
        let text = r#"{"kind": "explicit_finite", "params": {"edges": [[0,0,0],[1,0,1],[2,1,0]]}}"#;
        let g = parse_graph(text).unwrap();
        assert!(matches!(g.kind(), GraphKind::ExplicitFinite { .. }));
        assert!(g.has_vertex(0) && g.has_vertex(1));
    }

    #[test]
    fn full_shift_and_core_kinds_parse() {
        let g = parse_graph(r#"{"kind": "weighted_full_shift", "params": {"alphabet": 3}}"#)
            .unwrap();
        assert!(matches!(g.kind(), GraphKind::WeightedFullShift { alphabet: 3 }));
        let g = parse_graph(
            r#"{"kind": "core_with_inward_rays",
                "params": {"core_edges": [[0,0,0],[1,0,0]], "rays": [0, 0]}}"#,
        )
        .unwrap();
        assert!(matches!(g.kind(), GraphKind::CoreWithInwardRays { .. }));
    }

    #[test]
    fn stray_or_missing_params_are_schema_errors() {
        assert!(parse_graph(r#"{"kind": "lader"}"#).is_err());
        assert!(parse_graph(r#"{"kind": "ladder", "params": {"alphabet": 2}}"#).is_err());
        assert!(parse_graph(r#"{"kind": "explicit_finite", "params": {}}"#).is_err());
        assert!(parse_graph(r#"{"kind": "ladder", "extra": 1}"#).is_err());
        assert!(matches!(parse_graph("{oops"), Err(Error::Parse(_))));
        assert!(matches!(parse_graph(r#"{"kind": 7}"#), Err(Error::Parse(_))));
    }

    #[test]
    fn rule_potentials_parse_and_compose_affine() {
        let g = GraphModel::ladder();
        let phi = parse_potential(
            r#"{"family_rule": {"kind": "ladder_up_down", "up": 1.0, "down": 3.0}, "mul": -2.0, "add": 0.5}"#,
            &g,
        )
        .unwrap();
        // up edge from vertex 0 has id 0: -2*1 + 0.5
        assert!((phi.value(&g, &[0]).unwrap() - (-1.5)).abs() < 1e-15);
        assert!((phi.value(&g, &[1]).unwrap() - (-5.5)).abs() < 1e-15);
    }

    #[test]
    fn table_potentials_bind_to_the_graph() {
        let g = parse_graph(r#"{"kind": "explicit_finite", "params": {"edges": [[0,0,0],[1,0,1],[2,1,0]]}}"#)
            .unwrap();
        let phi = parse_potential(
            r#"{"depth": 2, "table": {"0 0": 0.1, "0 1": 0.2, "1 2": 0.3, "2 0": 0.4, "2 1": 0.5}}"#,
            &g,
        )
        .unwrap();
        assert_eq!(phi.depth(), 2);
        assert!((phi.value(&g, &[1, 2]).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn core_rays_rule_parses_string_keys() {
        let g = parse_graph(
            r#"{"kind": "core_with_inward_rays", "params": {"core_edges": [[0,0,0],[1,0,0]], "rays": [0]}}"#,
        )
        .unwrap();
        let phi = parse_potential(
            r#"{"family_rule": {"kind": "core_rays", "core": {"0": 0.6, "1": 0.6},
                "ray_values": [[1.0, 2.0]], "ray_tail": 2.0}}"#,
            &g,
        )
        .unwrap();
        assert!((phi.value(&g, &[0]).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn potential_schema_violations_are_rejected() {
        let g = GraphModel::ladder();
        for bad in [
            r#"{}"#,
            r#"{"depth": 1}"#,
            r#"{"table": {"0": 1.0}}"#,
            r#"{"depth": 1, "table": {"0": 1.0}, "family_rule": {"kind": "constant", "value": 0.0}}"#,
            r#"{"family_rule": {"kind": "constant"}}"#,
            r#"{"family_rule": {"kind": "constant", "value": 0.0}, "depth": 2}"#,
            r#"{"family_rule": {"kind": "nope", "value": 0.0}}"#,
            r#"{"family_rule": {"kind": "constant", "value": 0.0}, "scale": 2}"#,
        ] {
            assert!(parse_potential(bad, &g).is_err(), "accepted: {bad}");
        }
        // table keys must be edge ids on the graph
        assert!(parse_potential(r#"{"depth": 1, "table": {"x": 1.0}}"#, &g).is_err());
    }

    #[test]
    fn truncation_var_is_carried_through() {
        let g = GraphModel::ladder();
        let phi = parse_potential(
            r#"{"family_rule": {"kind": "constant", "value": 0.0}, "truncation_var": 1e-9}"#,
            &g,
        )
        .unwrap();
        assert_eq!(phi.truncation_var, Some(1e-9));
    }
}
