//! Dissipativity certificates for conformal measures.
//!
//! A certified-negative pressure estimate for the weight `−βφ` forces
//! every matching conformal measure to be dissipative, so the verdict
//! rides on the same periodic-orbit estimate the rest of the crate uses.
//! The iterate series `Σ_n L^n(f)(x)` at sample points is reported as
//! supporting diagnostics: bounded partial sums corroborate the verdict,
//! growing ones illustrate why criticality stays inconclusive, but
//! neither direction upgrades the certificate on its own.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{GraphModel, NonWanderingReport};
use crate::numeric::log_add;
use crate::potential::Potential;
use crate::pressure::{canonical_anchor, gurevich, PressureEstimate};
use crate::symbolic::{BasePoint, CylinderFunction};
use crate::transfer::{StopRule, TransferEngine};

/// How far below zero the pressure upper bound must sit before the
/// verdict flips to certified.
const CERTIFY_MARGIN: f64 = 1e-9;

/// Divergence flag threshold on the measured term ratio.
const GROWTH_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    DissipativeCertified,
    Inconclusive,
}

impl Verdict {
    pub fn tag(self) -> &'static str {
        match self {
            Verdict::DissipativeCertified => "DISSIPATIVE_CERTIFIED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Series diagnostics at one sample point.
#[derive(Debug, Clone)]
pub struct PointDiagnostics {
    pub start_vertex: crate::graph::VertexId,
    /// `log Σ_{n ≤ N} L^n(f)(x)` for each horizon N.
    pub log_partial_sums: Vec<f64>,
    /// Geometric ratio measured over the last decade of terms.
    pub decay_ratio: Option<f64>,
    /// True when the terms still grow at the horizon.
    pub diverging: bool,
}

#[derive(Debug, Clone)]
pub struct DissipativityReport {
    pub verdict: Verdict,
    /// Estimate for `P(−βφ)`; None when the graph has no periodic orbit
    /// at all, which certifies on its own.
    pub pressure: Option<PressureEstimate>,
    pub points: Vec<PointDiagnostics>,
    /// Largest measured decay ratio across the sample points.
    pub decay_ratio: Option<f64>,
}

/// Dissipativity of every `βφ`-conformal measure, decided through the
/// sign of the pressure of `−βφ` and illustrated by iterate series at
/// the sample points.
pub fn dissipativity_test(
    phi: &Potential,
    beta: f64,
    g: &GraphModel,
    f: &CylinderFunction,
    sample_points: &[BasePoint],
    n_max: usize,
) -> Result<DissipativityReport> {
    phi.validate_for(g)?;
    if !beta.is_finite() {
        return Err(Error::Parameter(format!("inverse temperature must be finite, got {beta}")));
    }
    if !f.is_nonnegative() {
        return Err(Error::Parameter("the series diagnostic needs a nonnegative function".into()));
    }
    if n_max < 4 {
        return Err(Error::Parameter(format!("series horizon must be at least 4, got {n_max}")));
    }

    let psi = phi.scale(-beta);
    let pressure = match g.nonwandering(0) {
        NonWanderingReport::Empty => None,
        _ => Some(gurevich(&psi, g, &canonical_anchor(g)?, n_max)?),
    };
    let verdict = match &pressure {
        None => Verdict::DissipativeCertified,
        Some(est) if est.hi() < -CERTIFY_MARGIN => Verdict::DissipativeCertified,
        Some(_) => Verdict::Inconclusive,
    };

    let points: Vec<PointDiagnostics> = sample_points
        .par_iter()
        .map(|x| -> Result<PointDiagnostics> {
            let engine = TransferEngine::new(g, &psi)?;
            let series = engine.series_multi(
                std::slice::from_ref(f),
                x,
                &StopRule::FixedSteps(n_max),
            )?;
            let mut log_partial_sums = Vec::with_capacity(series[0].terms.len());
            let mut acc = f64::NEG_INFINITY;
            for t in &series[0].terms {
                acc = log_add(acc, t.log_abs);
                log_partial_sums.push(acc);
            }
            let decay_ratio = series[0].tail_ratio();
            let diverging = decay_ratio.map_or(false, |r| r > 1.0 + GROWTH_SLACK);
            Ok(PointDiagnostics {
                start_vertex: x.start_vertex(),
                log_partial_sums,
                decay_ratio,
                diverging,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let decay_ratio = points
        .iter()
        .filter_map(|p| p.decay_ratio)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |v| v.max(r))));

    Ok(DissipativityReport { verdict, pressure, points, decay_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::FinitePath;

    fn fixture() -> (GraphModel, Potential, CylinderFunction, Vec<BasePoint>) {
        let g = GraphModel::ladder();
        let phi = Potential::constant(std::f64::consts::LN_2);
        let f = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        let x = BasePoint::eventually_periodic(&g, 0, vec![], vec![1]).unwrap();
        (g, phi, f, vec![x])
    }

    #[test]
    fn certified_when_pressure_is_negative() {
        let (g, phi, f, xs) = fixture();
        let report = dissipativity_test(&phi, 2.0, &g, &f, &xs, 60).unwrap();
        assert_eq!(report.verdict, Verdict::DissipativeCertified);
        assert!(report.pressure.as_ref().unwrap().hi() < 0.0);
        let ratio = report.decay_ratio.unwrap();
        assert!((ratio - 0.5).abs() <= 0.05, "decay ratio {ratio}");

        let sums = &report.points[0].log_partial_sums;
        assert!(sums.windows(2).all(|w| w[1] >= w[0]), "partial sums must not decrease");
        assert!(!report.points[0].diverging);
    }

    #[test]
    fn critical_point_stays_inconclusive() {
        let (g, phi, f, xs) = fixture();
        let report = dissipativity_test(&phi, 1.0, &g, &f, &xs, 60).unwrap();
        assert_eq!(report.verdict, Verdict::Inconclusive);
        let ratio = report.decay_ratio.unwrap();
        assert!((ratio - 1.0).abs() <= 1e-6, "critical terms are flat, got {ratio}");
        assert!(!report.points[0].diverging);
    }

    #[test]
    fn growing_series_is_flagged_but_not_a_verdict() {
        let (g, phi, f, xs) = fixture();
        let report = dissipativity_test(&phi, 0.5, &g, &f, &xs, 60).unwrap();
        assert_eq!(report.verdict, Verdict::Inconclusive);
        assert!(report.points[0].diverging);
        let ratio = report.decay_ratio.unwrap();
        assert!((ratio - 2.0f64.sqrt()).abs() <= 1e-3, "ratio {ratio}");
    }

    #[test]
    fn orbit_free_graphs_certify_outright() {
        let g = GraphModel::zray();
        let phi = Potential::constant(0.3);
        let f = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        let x = BasePoint::deterministic(&g, 2).unwrap();
        let report = dissipativity_test(&phi, 1.0, &g, &f, &[x], 20).unwrap();
        assert_eq!(report.verdict, Verdict::DissipativeCertified);
        assert!(report.pressure.is_none());
    }

    #[test]
    fn signed_diagnostics_are_rejected() {
        let (g, phi, f, xs) = fixture();
        let err =
            dissipativity_test(&phi, 2.0, &g, &f.scale(-1.0), &xs, 60).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }
}
