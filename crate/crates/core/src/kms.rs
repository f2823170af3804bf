//! Inverse-temperature regions for gauge-type equilibrium weights.
//!
//! A gauge-invariant weight at inverse temperature β corresponds to a
//! βφ-conformal measure, and such a measure exists exactly when
//! `P(−βφ) ≤ 0`. For a strictly positive potential the map
//! `β ↦ P(−βφ)` is strictly decreasing, so the existence region along
//! the β axis is read off from the sign of the pressure:
//!
//! * no periodic orbits: the pressure is −∞ everywhere, every β works;
//! * finitely many non-wandering vertices: equality `P(−βφ) = 0` can
//!   hold at one β at most, giving a singleton (or nothing);
//! * infinitely many: the region is a half line `[β₀, ∞)` whose left
//!   endpoint is the unique root of the pressure.
//!
//! The root is bracketed by the Lipschitz sandwich
//! `P(0) − βb ≤ P(−βφ) ≤ P(0) − βa` (with `[a, b]` the range of φ on
//! the non-wandering part) and then bisected on the refined pressure
//! estimate; reported error bars fold the width of the final bracket
//! together with the pressure uncertainty divided by `a`.

use crate::conformal::{construct_limit, extend_from_core, ConformalResult};
use crate::error::{Error, Result};
use crate::graph::{GraphKind, GraphModel, NonWanderingReport};
use crate::potential::Potential;
use crate::pressure::{canonical_anchor, gurevich, PressureEstimate};
use crate::symbolic::CylinderFunction;
use crate::transfer::StopRule;

/// Hard cap on bisection steps; tol wins long before this.
const MAX_BISECTIONS: usize = 200;

/// How often the initial bracket may be doubled before giving up.
const MAX_EXPANSIONS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Weights exist at every real β.
    AllReal,
    /// Exactly one admissible β, up to the reported error.
    Singleton { beta0: f64, err: f64 },
    /// All β ≥ β₀, up to the reported error on the endpoint.
    HalfLine { beta0: f64, err: f64 },
    /// No root found; `searched` records the interval that was scanned.
    Empty { searched: (f64, f64) },
    /// The zero-potential pressure is unbounded, forcing β₀ = ∞.
    UnboundedNone,
}

impl Region {
    pub fn tag(&self) -> &'static str {
        match self {
            Region::AllReal => "ALL_REAL",
            Region::Singleton { .. } => "SINGLETON",
            Region::HalfLine { .. } => "HALF_LINE",
            Region::Empty { .. } => "EMPTY",
            Region::UnboundedNone => "UNBOUNDED_NONE",
        }
    }

    /// Whether β lies in the region, error bars included.
    pub fn contains(&self, beta: f64) -> bool {
        if !beta.is_finite() {
            return false;
        }
        match self {
            Region::AllReal => true,
            Region::Singleton { beta0, err } => (beta - beta0).abs() <= err + 1e-12,
            Region::HalfLine { beta0, err } => beta >= beta0 - err - 1e-12,
            Region::Empty { .. } | Region::UnboundedNone => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KmsRegion {
    /// Non-wandering case the region decision was based on.
    pub case_tag: &'static str,
    pub region: Region,
    /// Final bracket around β₀ with pressure error folded in.
    pub beta0_bracket: Option<(f64, f64)>,
    /// Every pressure estimate evaluated along the way, sorted by β.
    pub samples: Vec<(f64, PressureEstimate)>,
}

/// The admissible inverse-temperature region for a strictly positive
/// potential with finite bounds on the non-wandering part.
pub fn kms_region(
    phi: &Potential,
    g: &GraphModel,
    tol: f64,
    n_max: usize,
) -> Result<KmsRegion> {
    phi.validate_for(g)?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::Parameter(format!("bisection tolerance must be positive, got {tol}")));
    }
    if n_max < 4 {
        return Err(Error::Parameter(format!("pressure horizon must be at least 4, got {n_max}")));
    }
    if !g.is_cofinal() {
        return Err(Error::Parameter("the region analysis needs a cofinal graph".into()));
    }

    let report = g.nonwandering(0);
    let case_tag = report.case_name();
    if matches!(report, NonWanderingReport::Empty) {
        return Ok(KmsRegion {
            case_tag,
            region: Region::AllReal,
            beta0_bracket: None,
            samples: vec![],
        });
    }
    let finite_case = matches!(report, NonWanderingReport::FiniteNonEmpty { .. });

    let (a, b) = phi.range_on_nw(g)?;
    if !(a > 0.0) || !b.is_finite() {
        return Err(Error::UnboundedPotential(format!(
            "the root search needs 0 < inf φ ≤ sup φ < ∞ on the non-wandering part, got [{a}, {b}]"
        )));
    }

    let anchor = canonical_anchor(g)?;
    let mut samples: Vec<(f64, PressureEstimate)> = Vec::new();
    let eval = |beta: f64, samples: &mut Vec<(f64, PressureEstimate)>| -> Result<PressureEstimate> {
        let est = gurevich(&phi.scale(-beta), g, &anchor, n_max)?;
        samples.push((beta, est.clone()));
        Ok(est)
    };

    let p0 = eval(0.0, &mut samples)?;
    if !p0.hi().is_finite() && !finite_case {
        return Ok(KmsRegion {
            case_tag,
            region: Region::UnboundedNone,
            beta0_bracket: None,
            samples,
        });
    }

    // Lipschitz sandwich bracket, padded by tol on both sides.
    let mut lo = p0.lo() / b - tol;
    let mut hi = p0.hi() / a + tol;
    let mut f_lo = eval(lo, &mut samples)?;
    let mut f_hi = eval(hi, &mut samples)?;
    let mut expansions = 0;
    while f_lo.refined <= 0.0 && expansions < MAX_EXPANSIONS {
        lo -= (hi - lo).max(tol);
        f_lo = eval(lo, &mut samples)?;
        expansions += 1;
    }
    while f_hi.refined > 0.0 && expansions < MAX_EXPANSIONS {
        hi += (hi - lo).max(tol);
        f_hi = eval(hi, &mut samples)?;
        expansions += 1;
    }
    if f_lo.refined <= 0.0 || f_hi.refined > 0.0 {
        if finite_case {
            samples.sort_by(|x, y| x.0.total_cmp(&y.0));
            return Ok(KmsRegion {
                case_tag,
                region: Region::Empty { searched: (lo, hi) },
                beta0_bracket: None,
                samples,
            });
        }
        return Err(Error::Undecided(format!(
            "the pressure stayed sign-definite over [{lo}, {hi}]; cannot bracket the root"
        )));
    }

    let mut delta = refined_err(&f_lo).max(refined_err(&f_hi));
    let mut steps = 0;
    while hi - lo > tol && steps < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let est = eval(mid, &mut samples)?;
        delta = delta.max(refined_err(&est));
        if est.refined > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }

    let beta0 = 0.5 * (lo + hi);
    let err = 0.5 * (hi - lo) + delta / a;
    let region = if finite_case {
        Region::Singleton { beta0, err }
    } else {
        Region::HalfLine { beta0, err }
    };
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(KmsRegion {
        case_tag,
        region,
        beta0_bracket: Some((beta0 - err, beta0 + err)),
        samples,
    })
}

/// Error band of the refined (slope-fit) pressure value, which is what
/// the bisection compares against zero. The full interval also covers
/// the point estimator's O(1/n) finite-horizon bias; subtracting the
/// point-vs-refined gap leaves the residual- and truncation-driven part
/// that actually limits the root location.
fn refined_err(est: &PressureEstimate) -> f64 {
    (0.5 * ((est.hi() - est.lo()) - (est.point_value - est.refined).abs())).max(0.0)
}

/// A conformal measure witnessing the weight at β, routed to the
/// construction that fits the graph: the ratio limit on non-compact
/// graphs, the core extension on a finite core with inward rays.
#[allow(clippy::too_many_arguments)]
pub fn kms_certificate(
    region: &KmsRegion,
    beta: f64,
    phi: &Potential,
    g: &GraphModel,
    h: &CylinderFunction,
    eps_schedule: &[f64],
    stop: &StopRule,
    levels: usize,
    depth: usize,
) -> Result<ConformalResult> {
    if !region.region.contains(beta) {
        return Err(Error::WrongCase(format!(
            "beta = {beta} lies outside the {} region",
            region.region.tag()
        )));
    }
    match g.kind() {
        GraphKind::CoreWithInwardRays { .. } => extend_from_core(g, phi, beta, levels, depth),
        GraphKind::Ladder | GraphKind::ZRay => {
            construct_limit(phi, beta, g, h, eps_schedule, stop, depth)
        }
        GraphKind::ExplicitFinite { .. } | GraphKind::WeightedFullShift { .. } => {
            Err(Error::WrongCase(
                "no certificate route for a compact graph without inward rays".into(),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::symbolic::FinitePath;
    use std::collections::BTreeMap;

    const LN2: f64 = std::f64::consts::LN_2;

    fn beta0_of(r: &KmsRegion) -> f64 {
        match r.region {
            Region::Singleton { beta0, .. } | Region::HalfLine { beta0, .. } => beta0,
            _ => panic!("no endpoint in {:?}", r.region),
        }
    }

    #[test]
    fn orbit_free_ray_admits_every_temperature() {
        let g = GraphModel::zray();
        let phi = Potential::constant(0.3);
        let r = kms_region(&phi, &g, 1e-3, 40).unwrap();
        assert_eq!(r.case_tag, "empty");
        assert_eq!(r.region, Region::AllReal);
        assert!(r.region.contains(-7.0) && r.region.contains(100.0));
    }

    #[test]
    fn symmetric_ladder_gives_a_half_line_at_one() {
        let g = GraphModel::ladder();
        let phi = Potential::constant(LN2);
        let r = kms_region(&phi, &g, 1e-3, 60).unwrap();
        assert_eq!(r.case_tag, "infinite");
        let Region::HalfLine { beta0, err } = r.region else { panic!("{:?}", r.region) };
        assert!((beta0 - 1.0).abs() <= 1e-3, "beta0 = {beta0}");
        assert!(err <= 2e-3, "err = {err}");
        assert!(r.region.contains(2.0) && !r.region.contains(0.5));

        // endpoint bracket validity: pressure nonnegative left of the
        // bracket, nonpositive right of it
        let (blo, bhi) = r.beta0_bracket.unwrap();
        assert!(blo <= beta0 && beta0 <= bhi);
        let anchor = canonical_anchor(&g).unwrap();
        let left = gurevich(&phi.scale(-blo), &g, &anchor, 60).unwrap();
        let right = gurevich(&phi.scale(-bhi), &g, &anchor, 60).unwrap();
        assert!(left.hi() >= 0.0 && right.lo() <= 0.0);
    }

    #[test]
    fn asymmetric_ladder_endpoint_solves_the_moran_equation() {
        let g = GraphModel::ladder();
        let phi = Potential::ladder_up_down(LN2, 4.0f64.ln());
        let r = kms_region(&phi, &g, 1e-3, 60).unwrap();
        let want = oracle::moran_solve(&[LN2, 4.0f64.ln()]).unwrap();
        let got = beta0_of(&r);
        assert!((got - want).abs() <= 1e-3, "endpoint {got} vs root {want}");
    }

    #[test]
    fn finite_core_pins_a_singleton() {
        let g = GraphModel::core_with_inward_rays(vec![(0, 0, 0), (1, 0, 0)], vec![0]).unwrap();
        let mut core = BTreeMap::new();
        core.insert(0, LN2);
        core.insert(1, LN2);
        let phi = Potential::core_rays(core, vec![vec![1.0]], 1.0);
        let r = kms_region(&phi, &g, 1e-3, 40).unwrap();
        assert_eq!(r.case_tag, "finite_nonempty");
        let Region::Singleton { beta0, .. } = r.region else { panic!("{:?}", r.region) };
        assert!((beta0 - 1.0).abs() <= 1e-3, "beta0 = {beta0}");
        assert!(!r.region.contains(2.0), "a singleton admits only its root");
    }

    #[test]
    fn constant_one_recovers_the_entropy() {
        let g = GraphModel::ladder();
        let phi = Potential::constant(1.0);
        let r = kms_region(&phi, &g, 1e-3, 60).unwrap();
        let got = beta0_of(&r);
        assert!((got - LN2).abs() <= 1e-3, "endpoint {got} vs entropy {LN2}");
    }

    #[test]
    fn scaling_the_potential_rescales_the_endpoint() {
        let g = GraphModel::ladder();
        let phi = Potential::constant(LN2);
        let base = beta0_of(&kms_region(&phi, &g, 1e-4, 60).unwrap());
        let doubled = beta0_of(&kms_region(&phi.scale(2.0), &g, 1e-4, 60).unwrap());
        assert!((doubled - base / 2.0).abs() <= 1e-3, "{doubled} vs {}", base / 2.0);
    }

    #[test]
    fn unbounded_potentials_are_refused() {
        let g = GraphModel::ladder();
        let phi = Potential::ladder_up_down(0.0, LN2);
        let err = kms_region(&phi, &g, 1e-3, 40).unwrap_err();
        assert!(matches!(err, Error::UnboundedPotential(_)));
    }

    #[test]
    fn certificates_follow_the_graph_route() {
        let g = GraphModel::ladder();
        let phi = Potential::constant(LN2);
        let r = kms_region(&phi, &g, 1e-3, 60).unwrap();
        let h = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        let stop = StopRule::default();
        let m = kms_certificate(&r, 2.0, &phi, &g, &h, &[0.1, 0.05, 0.025], &stop, 3, 3).unwrap();
        assert_eq!(m.method, "ratio-limit");
        let one = FinitePath::vertex(&g, 1).unwrap();
        assert!((m.measure.get_log(&one).unwrap().exp() - 3.0).abs() <= 0.01);

        let err = kms_certificate(&r, 0.5, &phi, &g, &h, &[0.1], &stop, 3, 3).unwrap_err();
        assert!(matches!(err, Error::WrongCase(_)));
    }

    #[test]
    fn core_certificates_use_the_extension() {
        let g = GraphModel::core_with_inward_rays(vec![(0, 0, 0), (1, 0, 0)], vec![0]).unwrap();
        let mut core = BTreeMap::new();
        core.insert(0, LN2);
        core.insert(1, LN2);
        let phi = Potential::core_rays(core, vec![vec![1.0]], 1.0);
        let r = kms_region(&phi, &g, 1e-3, 40).unwrap();
        let h = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        // the exact root sits inside the reported error bars
        let m = kms_certificate(&r, 1.0, &phi, &g, &h, &[0.1], &StopRule::default(), 2, 2);
        let m = m.unwrap();
        assert_eq!(m.method, "core-extension");
        let v0 = FinitePath::vertex(&g, 0).unwrap();
        assert!(m.measure.get_log(&v0).unwrap().abs() <= 1e-9);
    }
}
