//! Brute-force reference implementations. Everything here recomputes
//! quantities the main modules produce by DP or iteration, using explicit
//! path enumeration, dense power iteration, or closed forms instead, so
//! the two code paths share no logic.

use crate::error::{Error, Result};
use crate::graph::{EdgeId, GraphModel, NonWanderingReport, VertexId};
use crate::numeric::bisect;
use crate::potential::Potential;
use crate::symbolic::{BasePoint, CylinderFunction, FinitePath};

/// One reference value, tagged with how it was obtained.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub method: &'static str,
    pub value: f64,
    pub instance: String,
}

const MAX_ENUM: usize = 12;

/// `L^n_φ(f)(x)` by explicit recursion over every contributing preimage
/// path. No dynamic programming, plain arithmetic.
pub fn enumerate_ln(
    g: &GraphModel,
    phi: &Potential,
    f: &CylinderFunction,
    x: &BasePoint,
    n: usize,
) -> Result<f64> {
    if n > MAX_ENUM {
        return Err(Error::Parameter(format!("oracle enumeration is capped at n = {MAX_ENUM}")));
    }
    phi.validate_for(g)?;
    let k = phi.depth();
    let mut total = 0.0;
    for (nu, coeff) in f.terms() {
        let d = nu.len();
        let w = coeff.value();
        if n >= d {
            let x_word = x.expand(g, k - 1)?;
            // extend nu forward by n - d edges, keep paths that return to s(x)
            let mut stack: Vec<(VertexId, Vec<EdgeId>)> = vec![(nu.range(g), vec![])];
            while let Some((cur, q)) = stack.pop() {
                if q.len() == n - d {
                    if cur != x.start_vertex() {
                        continue;
                    }
                    let mut word: Vec<EdgeId> = Vec::with_capacity(n + k - 1);
                    word.extend_from_slice(nu.edges());
                    word.extend_from_slice(&q);
                    word.extend_from_slice(&x_word);
                    let mut s = 0.0;
                    for j in 0..n {
                        s += phi.value(g, &word[j..j + k])?;
                    }
                    total += w * s.exp();
                    continue;
                }
                for e in g.out_edges(cur) {
                    let mut q2 = q.clone();
                    q2.push(e.id);
                    stack.push((e.range, q2));
                }
            }
        } else {
            let x_word = x.expand(g, (d - n).max(k - 1))?;
            if x_word[..d - n] != nu.edges()[n..] {
                continue;
            }
            let mut word: Vec<EdgeId> = Vec::with_capacity(n + k - 1);
            word.extend_from_slice(&nu.edges()[..n]);
            word.extend_from_slice(&x_word[..k - 1]);
            let mut s = 0.0;
            for j in 0..n {
                s += phi.value(g, &word[j..j + k])?;
            }
            total += w * s.exp();
        }
    }
    Ok(total)
}

/// `Z_n = Σ_{σ^n y = y} e^{φ_n(y)}` (optionally restricted to `y ∈ Z(μ)`)
/// by listing every closed walk and weighting it with cyclic windows.
pub fn enumerate_periodic(
    g: &GraphModel,
    phi: &Potential,
    anchor: Option<&FinitePath>,
    n: usize,
) -> Result<f64> {
    if n == 0 || n > MAX_ENUM {
        return Err(Error::Parameter(format!("oracle period must be in 1..={MAX_ENUM}")));
    }
    phi.validate_for(g)?;
    let starts: Vec<VertexId> = match anchor {
        Some(mu) => vec![mu.source()],
        None => match g.nonwandering(0) {
            NonWanderingReport::Empty => return Ok(0.0),
            NonWanderingReport::FiniteNonEmpty { vertices, .. } => vertices,
            NonWanderingReport::Infinite { .. } => {
                return Err(Error::Parameter(
                    "oracle needs an anchor to sum periodic points on an infinite graph".into(),
                ))
            }
        },
    };
    let k = phi.depth();
    let mut total = 0.0;
    for v in starts {
        let mut stack: Vec<(VertexId, Vec<EdgeId>)> = vec![(v, vec![])];
        while let Some((cur, c)) = stack.pop() {
            if c.len() == n {
                if cur != v {
                    continue;
                }
                if let Some(mu) = anchor {
                    if !mu.edges().iter().enumerate().all(|(i, &e)| e == c[i % n]) {
                        continue;
                    }
                    if mu.is_empty() && mu.source() != v {
                        continue;
                    }
                }
                let mut word = Vec::with_capacity(n + k - 1);
                while word.len() < n + k - 1 {
                    word.push(c[word.len() % n]);
                }
                let mut s = 0.0;
                for j in 0..n {
                    s += phi.value(g, &word[j..j + k])?;
                }
                total += s.exp();
                continue;
            }
            for e in g.out_edges(cur) {
                let mut c2 = c.clone();
                c2.push(e.id);
                stack.push((e.range, c2));
            }
        }
    }
    Ok(total)
}

/// Dominant eigendata of a nonnegative irreducible matrix by power
/// iteration on `M + I` (shift escapes periodicity). Returns the log of
/// the spectral radius of `M` and the left eigenvector normalized to
/// total mass one.
pub fn perron(m: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let n = m.len();
    if n == 0 || m.iter().any(|row| row.len() != n) {
        return Err(Error::Parameter("perron needs a nonempty square matrix".into()));
    }
    if m.iter().flatten().any(|&x| !(x >= 0.0)) {
        return Err(Error::Parameter("perron needs nonnegative entries".into()));
    }
    let mut u = vec![1.0 / n as f64; n];
    let mut lambda = 0.0;
    for _ in 0..200_000 {
        let mut v = vec![0.0; n];
        for i in 0..n {
            v[i] += u[i]; // the +I shift
            for j in 0..n {
                v[j] += u[i] * m[i][j];
            }
        }
        let s: f64 = v.iter().sum();
        if !(s > 0.0) {
            return Err(Error::Parameter("matrix is nilpotent; no positive radius".into()));
        }
        for x in &mut v {
            *x /= s;
        }
        let delta = v.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let stable = delta <= 1e-14 && (s - lambda).abs() <= 1e-14;
        u = v;
        lambda = s;
        if stable {
            break;
        }
    }
    let radius = lambda - 1.0;
    if !(radius > 0.0) {
        return Err(Error::Parameter("spectral radius is not positive".into()));
    }
    Ok((radius.ln(), u))
}

/// Root of `Σ_i e^{−β t_i} = 1` by bisection to 1e−12. All `t_i` must be
/// positive so the sum is strictly decreasing.
pub fn moran_solve(ts: &[f64]) -> Result<f64> {
    if ts.is_empty() {
        return Err(Error::Parameter("moran_solve needs at least one weight".into()));
    }
    if ts.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Parameter("moran weights must be positive decay rates".into()));
    }
    let gfun = |beta: f64| ts.iter().map(|&t| (-beta * t).exp()).sum::<f64>() - 1.0;
    if ts.len() == 1 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut guard = 0;
    while gfun(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Parameter("no sign change found for the moran equation".into()));
        }
    }
    bisect(gfun, 0.0, hi, 1e-12, 200)
        .ok_or_else(|| Error::Parameter("moran bisection failed to bracket a root".into()))
}

/// The reference table the `oracle` CLI subcommand dumps: each row is an
/// independently computed value some main-path test pins against.
pub fn builtin_references() -> Result<Vec<OracleResult>> {
    let mut out = Vec::new();
    let golden = GraphModel::explicit_finite(vec![(0i64, 0i64, 0i64), (1, 0, 1), (2, 1, 0)])?;
    let zero = Potential::constant(0.0);

    let (log_rho, _) = perron(&[vec![1.0, 1.0], vec![1.0, 0.0]])?;
    out.push(OracleResult {
        method: "perron",
        value: log_rho,
        instance: "golden-mean vertex matrix [[1,1],[1,0]], log radius".into(),
    });
    let (log_one, ev) = perron(&[vec![0.5, 0.5], vec![0.5, 0.5]])?;
    out.push(OracleResult {
        method: "perron",
        value: log_one,
        instance: "one vertex, two loops of weight 1/2, log radius".into(),
    });
    out.push(OracleResult {
        method: "perron",
        value: ev[0],
        instance: "one vertex, two loops of weight 1/2, first eigenvector entry".into(),
    });

    out.push(OracleResult {
        method: "moran_solve",
        value: moran_solve(&[2.0f64.ln(), 4.0f64.ln()])?,
        instance: "2^-b + 4^-b = 1".into(),
    });
    out.push(OracleResult {
        method: "moran_solve",
        value: moran_solve(&[2.0f64.ln(), 2.0f64.ln()])?,
        instance: "2 * 2^-b = 1".into(),
    });

    for n in 1..=2usize {
        out.push(OracleResult {
            method: "enumerate_periodic",
            value: enumerate_periodic(&golden, &zero, None, n)?,
            instance: format!("golden mean, phi = 0, Z_{n}"),
        });
    }

    let ladder = GraphModel::ladder();
    let mu = FinitePath::vertex(&ladder, 0)?;
    out.push(OracleResult {
        method: "enumerate_periodic",
        value: enumerate_periodic(&ladder, &zero, Some(&mu), 4)?,
        instance: "ladder, phi = 0, loops at 0 of length 4".into(),
    });

    let two = GraphModel::full_shift(2)?;
    let one = CylinderFunction::indicator(FinitePath::vertex(&two, 0)?);
    let x = BasePoint::eventually_periodic(&two, 0, vec![], vec![0])?;
    out.push(OracleResult {
        method: "enumerate_ln",
        value: enumerate_ln(&two, &Potential::per_symbol(vec![0.0, 0.0])?, &one, &x, 3)?,
        instance: "full 2-shift, phi = 0, L^3(1)".into(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::TransferEngine;
    use std::collections::BTreeMap;

    fn golden() -> GraphModel {
        GraphModel::explicit_finite(vec![(0i64, 0i64, 0i64), (1, 0, 1), (2, 1, 0)]).unwrap()
    }

    #[test]
    fn golden_matrix_radius_is_golden_ratio() {
        let (log_rho, _) = perron(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let want = ((1.0 + 5.0f64.sqrt()) / 2.0).ln();
        assert!((log_rho - want).abs() < 1e-11);
    }

    #[test]
    fn two_equal_loops_radius_one() {
        let (log_rho, ev) = perron(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(log_rho.abs() < 1e-11);
        assert!((ev[0] - 0.5).abs() < 1e-11 && (ev[1] - 0.5).abs() < 1e-11);
    }

    #[test]
    fn period_two_cycle_radius_and_classes() {
        // a->b weight 8, b->a weight 2: radius sqrt(16) = 4
        let (log_rho, ev) = perron(&[vec![0.0, 8.0], vec![2.0, 0.0]]).unwrap();
        assert!((log_rho - 4.0f64.ln()).abs() < 1e-11);
        // left eigenvector solves (2 u2, 8 u1) = 4 (u1, u2)
        assert!((ev[1] / ev[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn moran_reference_roots() {
        let b = moran_solve(&[2.0f64.ln(), 4.0f64.ln()]).unwrap();
        assert!((b - 0.6942419136306174).abs() < 1e-11);
        let b2 = moran_solve(&[2.0f64.ln(), 2.0f64.ln()]).unwrap();
        assert!((b2 - 1.0).abs() < 1e-11);
        assert!(moran_solve(&[-1.0]).is_err());
    }

    #[test]
    fn golden_periodic_counts() {
        let g = golden();
        let zero = Potential::constant(0.0);
        assert!((enumerate_periodic(&g, &zero, None, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((enumerate_periodic(&g, &zero, None, 2).unwrap() - 3.0).abs() < 1e-12);
        assert!((enumerate_periodic(&g, &zero, None, 3).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ladder_loop_count_length_four() {
        let g = GraphModel::ladder();
        let zero = Potential::constant(0.0);
        let mu = FinitePath::vertex(&g, 0).unwrap();
        assert!((enumerate_periodic(&g, &zero, Some(&mu), 4).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn full_shift_counts_branches() {
        let g = GraphModel::full_shift(2).unwrap();
        let phi = Potential::per_symbol(vec![0.0, 0.0]).unwrap();
        let f = CylinderFunction::indicator(FinitePath::vertex(&g, 0).unwrap());
        let x = BasePoint::eventually_periodic(&g, 0, vec![], vec![0]).unwrap();
        assert!((enumerate_ln(&g, &phi, &f, &x, 3).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn matches_dp_on_a_depth_two_table() {
        let g = golden();
        let mut t = BTreeMap::new();
        for (word, v) in
            [(vec![0, 0], 0.2), (vec![0, 1], -0.4), (vec![1, 2], 0.9), (vec![2, 0], -0.1), (vec![2, 1], 0.3)]
        {
            t.insert(FinitePath::from_edges(&g, &word).unwrap(), v);
        }
        let phi = Potential::table(&g, 2, t).unwrap();
        let eng = TransferEngine::new(&g, &phi).unwrap();
        let f = CylinderFunction::indicator(FinitePath::from_edges(&g, &[1, 2]).unwrap());
        let x = BasePoint::eventually_periodic(&g, 0, vec![1, 2], vec![0]).unwrap();
        for n in 0..=7 {
            let a = enumerate_ln(&g, &phi, &f, &x, n).unwrap();
            let b = eng.apply_pointwise(&f, &x, n).unwrap().value();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "n={n} oracle={a} dp={b}");
        }
        let mu = FinitePath::from_edges(&g, &[1]).unwrap();
        let z = eng.closed_walk_sums(Some(&mu), 7).unwrap();
        for n in 1..=7usize {
            let a = enumerate_periodic(&g, &phi, Some(&mu), n).unwrap();
            let b = z[n - 1].exp();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "n={n} oracle={a} dp={b}");
        }
    }

    #[test]
    fn anchored_wrap_cases_match_dp() {
        let g = golden();
        let phi = Potential::constant(0.15);
        let eng = TransferEngine::new(&g, &phi).unwrap();
        let mu = FinitePath::from_edges(&g, &[1, 2, 1, 2]).unwrap();
        let z = eng.closed_walk_sums(Some(&mu), 6).unwrap();
        for n in 1..=6usize {
            let a = enumerate_periodic(&g, &phi, Some(&mu), n).unwrap();
            let b = z[n - 1].exp();
            assert!(
                (a - b).abs() <= 1e-10 * a.abs().max(1.0),
                "n={n} oracle={a} dp={b}"
            );
        }
    }

    #[test]
    fn reference_table_is_stable() {
        let refs = builtin_references().unwrap();
        assert!(refs.len() >= 8);
        let z2 = refs
            .iter()
            .find(|r| r.instance.contains("Z_2"))
            .unwrap();
        assert!((z2.value - 3.0).abs() < 1e-12);
    }
}
