//! Batch front end for the shiftthermo library.
//!
//! Reads graph and potential specs from JSON files, runs one named
//! computation, and emits a machine-readable report: TSV for bulk
//! numeric tables, JSON for structured verdicts. Nothing interactive,
//! nothing plotted.
//!
//! All tunable defaults live in the constants below and can be
//! overridden either by flags or by environment variables with the
//! `SHIFTTHERMO_` prefix (flag wins over env, env wins over default):
//!
//! | knob                | flag         | env                  | default          |
//! |---------------------|--------------|----------------------|------------------|
//! | pressure horizon    | `--N`        | `SHIFTTHERMO_N`      | 60               |
//! | measure depth       | `--depth`    | `SHIFTTHERMO_D`      | 3                |
//! | series cutoff τ     | `--tau`      | `SHIFTTHERMO_TAU`    | 1e-9             |
//! | bisection tol       | `--tol`      | `SHIFTTHERMO_TOL`    | 1e-3             |
//! | ε schedule          | `--eps`      | `SHIFTTHERMO_EPS`    | 0.1,0.05,0.025   |
//! | worker threads      | `--threads`  | `SHIFTTHERMO_THREADS`| 0 (= all cores)  |
//!
//! Exit codes: 0 on success; 2 when a mathematical precondition is
//! refused (`PRESSURE_POSITIVE`, `WRONG_CASE`, ...); 1 on input or
//! usage errors. Identical invocations produce byte-identical output.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use shiftthermo::conformal::{
    construct_fixed, construct_limit, diverging_sequence, extend_from_core, verify,
};
use shiftthermo::dissipativity::dissipativity_test;
use shiftthermo::exp_family::ExpSystem;
use shiftthermo::formats;
use shiftthermo::graph::{EdgeId, GraphKind, GraphModel, NonWanderingReport, VertexId};
use shiftthermo::kms::{kms_region, Region};
use shiftthermo::oracle;
use shiftthermo::potential::Potential;
use shiftthermo::pressure::{canonical_anchor, gurevich, pressure_of_beta, PressureEstimate};
use shiftthermo::symbolic::{BasePoint, CylinderFunction, CylinderMeasure, FinitePath};
use shiftthermo::transfer::StopRule;
use shiftthermo::{Error, Result};

const DEFAULT_N: usize = 60;
const DEFAULT_DEPTH: usize = 3;
const DEFAULT_TAU: f64 = 1e-9;
const DEFAULT_TOL: f64 = 1e-3;
const DEFAULT_EPS: &str = "0.1,0.05,0.025";
const DEFAULT_LEVELS: usize = 6;
const DEFAULT_LAMBDA: f64 = 0.2;
const DEFAULT_BRANCHES: usize = 50;
const DEFAULT_BEAM: usize = 100_000;

/// Printed by `--version`: enough to reproduce any report.
const FINGERPRINT: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (gurevich-ls ratio-limit core-extension exp-beam;",
    " N=60 D=3 tau=1e-9 tol=1e-3 eps=0.1,0.05,0.025",
    " branches=50 beam=100000 lambda=0.2)"
);

#[derive(Parser)]
#[command(name = "shiftthermo", version = FINGERPRINT)]
#[command(about = "Thermodynamic formalism for countable-state Markov shifts")]
struct Cli {
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel sections (0 keeps the rayon default).
    #[arg(long, global = true, env = "SHIFTTHERMO_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a graph: kind, cofinality, non-wandering part, core filtration.
    AnalyzeGraph {
        #[arg(long)]
        graph: PathBuf,
        /// Filtration levels to compute.
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Gurevich pressure P(-beta*phi) anchored at the canonical vertex.
    Pressure {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long = "N", env = "SHIFTTHERMO_N", default_value_t = DEFAULT_N)]
        n: usize,
        /// Also emit every per-step estimate a_n.
        #[arg(long)]
        full: bool,
    },
    /// P(-beta*phi) over a beta grid with the Lipschitz sandwich checked.
    PressureCurve {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        /// Comma-separated grid, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        betas: Vec<f64>,
        #[arg(long = "N", env = "SHIFTTHERMO_N", default_value_t = DEFAULT_N)]
        n: usize,
    },
    /// Build a (-beta*phi)-conformal measure and dump its cylinder masses.
    Construct {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, env = "SHIFTTHERMO_D", default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// Regularization schedule, strictly decreasing.
        #[arg(long, env = "SHIFTTHERMO_EPS", value_delimiter = ',', default_value = DEFAULT_EPS)]
        eps: Vec<f64>,
        /// Relative series cutoff for the adaptive stop rule.
        #[arg(long, env = "SHIFTTHERMO_TAU", default_value_t = DEFAULT_TAU)]
        tau: f64,
        /// "limit" (regularized ratio limit) or "fixed" (single escaping family).
        #[arg(long, default_value = "limit")]
        method: String,
        /// Vertex carrying the normalizing indicator (default: canonical anchor).
        #[arg(long)]
        h_vertex: Option<VertexId>,
        /// Filtration levels for the finite-core route.
        #[arg(long, default_value_t = DEFAULT_LEVELS)]
        levels: usize,
        /// Escaping-family length for --method fixed.
        #[arg(long, default_value_t = 12)]
        points: usize,
    },
    /// Re-check a dumped measure against the conformal fixed-point identity.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// A measure TSV produced by `construct`.
        #[arg(long)]
        measure: PathBuf,
        /// Residual depth (default: one below the stored depth).
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Certify dissipativity of the (-beta*phi)-conformal measure.
    Dissipativity {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long = "N", env = "SHIFTTHERMO_N", default_value_t = DEFAULT_N)]
        n: usize,
        /// Number of orbit sample points.
        #[arg(long, default_value_t = 3)]
        points: usize,
    },
    /// The admissible KMS inverse-temperature region for phi.
    KmsRegion {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        #[arg(long, env = "SHIFTTHERMO_TOL", default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long = "N", env = "SHIFTTHERMO_N", default_value_t = DEFAULT_N)]
        n: usize,
    },
    /// Rigorous pressure intervals for the exponential family E(z) = lambda*e^z.
    ExpPressure {
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        betas: Vec<f64>,
        /// Operator iterations per beta.
        #[arg(long, default_value_t = 6)]
        nmax: usize,
        /// Inverse branches per side.
        #[arg(long, default_value_t = DEFAULT_BRANCHES)]
        branches: usize,
        /// Beam width of the orbit tree.
        #[arg(long, default_value_t = DEFAULT_BEAM)]
        beam: usize,
    },
    /// Dump the built-in reference values (exact enumerations, closed forms).
    Oracle,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successes; everything else is an input error
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let out = cli.out.clone();
    match run(cli.command) {
        Ok(payload) => {
            let written = match out {
                Some(path) => fs::write(path, payload),
                None => {
                    print!("{payload}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error[IO]: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            let code = e.code();
            let msg = e.to_string();
            let msg = msg.strip_prefix(&format!("{code}: ")).unwrap_or(&msg);
            eprintln!("error[{code}]: {msg}");
            ExitCode::from(if e.is_refusal() { 2 } else { 1 })
        }
    }
}

fn run(cmd: Cmd) -> Result<String> {
    match cmd {
        Cmd::AnalyzeGraph { graph, levels } => analyze_graph(&load_graph(&graph)?, levels),
        Cmd::Pressure { graph, potential, beta, n, full } => {
            let g = load_graph(&graph)?;
            let phi = load_potential(&potential, &g)?;
            pressure_cmd(&g, &phi, beta, n, full)
        }
        Cmd::PressureCurve { graph, potential, betas, n } => {
            let g = load_graph(&graph)?;
            let phi = load_potential(&potential, &g)?;
            let rows = pressure_of_beta(&phi, &g, &betas, n)?;
            let mut s = String::from("beta\tlo\trefined\thi\n");
            for (b, est) in rows {
                writeln!(s, "{b}\t{}\t{}\t{}", est.lo(), est.refined, est.hi()).unwrap();
            }
            Ok(s)
        }
        Cmd::Construct { graph, potential, beta, depth, eps, tau, method, h_vertex, levels, points } => {
            let g = load_graph(&graph)?;
            let phi = load_potential(&potential, &g)?;
            construct_cmd(&g, &phi, beta, depth, &eps, tau, &method, h_vertex, levels, points)
        }
        Cmd::Verify { graph, potential, beta, measure, depth } => {
            let g = load_graph(&graph)?;
            let phi = load_potential(&potential, &g)?;
            let m = parse_measure(&fs::read_to_string(&measure)?, &g)?;
            let d = depth.unwrap_or_else(|| m.depth().saturating_sub(1).max(phi.depth()));
            let report = verify(&m, &phi, beta, &g, d)?;
            let doc = json!({
                "checked": report.checked,
                "max_rel": report.max_rel,
                "mean_rel": report.mean_rel,
                "depth": d,
            });
            Ok(format!("{:#}\n", doc))
        }
        Cmd::Dissipativity { graph, potential, beta, n, points } => {
            let g = load_graph(&graph)?;
            let phi = load_potential(&potential, &g)?;
            dissipativity_cmd(&g, &phi, beta, n, points)
        }
        Cmd::KmsRegion { graph, potential, tol, n } => {
            let g = load_graph(&graph)?;
            let phi = load_potential(&potential, &g)?;
            kms_cmd(&g, &phi, tol, n)
        }
        Cmd::ExpPressure { lambda, betas, nmax, branches, beam } => {
            let sys = ExpSystem::new(lambda, branches)?;
            let mut s = String::from("beta\tlo\tmid\thi\n");
            for &b in &betas {
                let est = sys.exp_pressure(b, nmax, beam)?;
                writeln!(s, "{b}\t{}\t{}\t{}", est.lo(), est.refined, est.hi()).unwrap();
            }
            Ok(s)
        }
        Cmd::Oracle => {
            let mut s = String::from("method\tvalue\tinstance\n");
            for r in oracle::builtin_references()? {
                writeln!(s, "{}\t{}\t{}", r.method, r.value, r.instance).unwrap();
            }
            Ok(s)
        }
    }
}

fn load_graph(path: &PathBuf) -> Result<GraphModel> {
    formats::parse_graph(&fs::read_to_string(path)?)
}

fn load_potential(path: &PathBuf, g: &GraphModel) -> Result<Potential> {
    formats::parse_potential(&fs::read_to_string(path)?, g)
}

fn analyze_graph(g: &GraphModel, levels: usize) -> Result<String> {
    let nw = g.nonwandering(0);
    let nw_doc = match &nw {
        NonWanderingReport::Empty => json!({ "case": "empty" }),
        NonWanderingReport::FiniteNonEmpty { vertices, period, irreducible } => json!({
            "case": "finite_nonempty",
            "vertices": vertices,
            "period": period,
            "irreducible": irreducible,
        }),
        NonWanderingReport::Infinite { samples } => json!({
            "case": "infinite",
            "samples": samples.iter().take(8)
                .map(|(v, cyc)| json!({ "vertex": v, "cycle": cyc }))
                .collect::<Vec<_>>(),
        }),
    };
    let filtration = match g.h_filtration(levels) {
        Ok(f) => json!({ "levels": f.levels, "stable": f.stable }),
        Err(_) => serde_json::Value::Null,
    };
    let doc = json!({
        "kind": g.kind_name(),
        "cofinal": g.is_cofinal(),
        "supports_escape": g.supports_escape(),
        "nonwandering": nw_doc,
        "filtration": filtration,
    });
    Ok(format!("{:#}\n", doc))
}

fn pressure_cmd(g: &GraphModel, phi: &Potential, beta: f64, n: usize, full: bool) -> Result<String> {
    let anchor = canonical_anchor(g)?;
    let est = gurevich(&phi.scale(-beta), g, &anchor, n)?;
    let mut s = String::new();
    writeln!(s, "p_est\t{}", est.refined).unwrap();
    writeln!(s, "p_point\t{}", est.point_value).unwrap();
    writeln!(s, "p_lo\t{}", est.lo()).unwrap();
    writeln!(s, "p_hi\t{}", est.hi()).unwrap();
    writeln!(s, "n_max\t{}", est.n_max).unwrap();
    writeln!(s, "method\t{}", est.method).unwrap();
    if full {
        for (k, a) in &est.sequence {
            writeln!(s, "a_{k}\t{a}").unwrap();
        }
    }
    Ok(s)
}

#[allow(clippy::too_many_arguments)]
fn construct_cmd(
    g: &GraphModel,
    phi: &Potential,
    beta: f64,
    depth: usize,
    eps: &[f64],
    tau: f64,
    method: &str,
    h_vertex: Option<VertexId>,
    levels: usize,
    points: usize,
) -> Result<String> {
    if matches!(g.kind(), GraphKind::CoreWithInwardRays { .. }) {
        let res = extend_from_core(g, phi, beta, levels, depth)?;
        let meta = vec![
            ("method".into(), res.method.to_string()),
            ("beta".into(), beta.to_string()),
            ("depth".into(), depth.to_string()),
            ("graph".into(), g.kind_name().to_string()),
            ("levels".into(), levels.to_string()),
            ("residual_max_rel".into(), res.residuals.max_rel.to_string()),
        ];
        return Ok(render_measure(&res.measure, g, &meta));
    }
    let h = CylinderFunction::indicator(match h_vertex {
        Some(v) => FinitePath::vertex(g, v)?,
        None => canonical_anchor(g)?,
    });
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Parameter(format!("series cutoff must be positive, got {tau}")));
    }
    let stop = StopRule::Adaptive { rel_cutoff: tau, consecutive: 16, cap: 10_000 };
    match method {
        "limit" => {
            let res = construct_limit(phi, beta, g, &h, eps, &stop, depth)?;
            let meta = vec![
                ("method".into(), res.method.to_string()),
                ("beta".into(), beta.to_string()),
                ("depth".into(), depth.to_string()),
                ("graph".into(), g.kind_name().to_string()),
                ("eps".into(), join_floats(&res.eps_schedule)),
                ("ratio_spread".into(), res.ratio_spread.to_string()),
                ("extrapolation_spread".into(), res.extrapolation_spread.to_string()),
                ("tail_bound_log".into(), res.tail_bound_log.to_string()),
                ("residual_max_rel".into(), res.residuals.max_rel.to_string()),
            ];
            Ok(render_measure(&res.measure, g, &meta))
        }
        "fixed" => {
            let seq = diverging_sequence(g, &h, points)?;
            let fixed = construct_fixed(&phi.scale(-beta), g, &h, &seq, &stop, depth)?;
            let mut meta = vec![
                ("method".into(), "fixed-family".to_string()),
                ("beta".into(), beta.to_string()),
                ("depth".into(), depth.to_string()),
                ("graph".into(), g.kind_name().to_string()),
                ("points".into(), seq.len().to_string()),
                ("ratio_spread".into(), fixed.ratio_spread.to_string()),
                ("tail_bound_log".into(), fixed.tail_bound_log.to_string()),
                ("converged".into(), fixed.converged.to_string()),
            ];
            if let Some(p) = &fixed.pressure {
                meta.push(("pressure_lo".into(), p.lo().to_string()));
                meta.push(("pressure_hi".into(), p.hi().to_string()));
            }
            Ok(render_measure(&fixed.measure, g, &meta))
        }
        other => Err(Error::Parameter(format!(
            "unknown construction method {other:?} (expected \"limit\" or \"fixed\")"
        ))),
    }
}

fn dissipativity_cmd(
    g: &GraphModel,
    phi: &Potential,
    beta: f64,
    n: usize,
    points: usize,
) -> Result<String> {
    let f = CylinderFunction::indicator(anchor_or_first_vertex(g)?);
    let samples: Vec<BasePoint> = sample_vertices(g, points.max(1))
        .into_iter()
        .map(|v| BasePoint::deterministic(g, v))
        .collect::<Result<_>>()?;
    let report = dissipativity_test(phi, beta, g, &f, &samples, n)?;
    let doc = json!({
        "verdict": report.verdict.tag(),
        "pressure": report.pressure.as_ref().map(pressure_doc),
        "decay_ratio": report.decay_ratio,
        "points": report.points.iter().map(|p| json!({
            "start_vertex": p.start_vertex,
            "decay_ratio": p.decay_ratio,
            "diverging": p.diverging,
            "log_partial_sum": p.log_partial_sums.last(),
            "steps": p.log_partial_sums.len(),
        })).collect::<Vec<_>>(),
    });
    Ok(format!("{:#}\n", doc))
}

fn kms_cmd(g: &GraphModel, phi: &Potential, tol: f64, n: usize) -> Result<String> {
    let r = kms_region(phi, g, tol, n)?;
    let region_doc = match &r.region {
        Region::AllReal => json!({ "type": "ALL_REAL" }),
        Region::Singleton { beta0, err } => {
            json!({ "type": "SINGLETON", "beta0": beta0, "err": err })
        }
        Region::HalfLine { beta0, err } => {
            json!({ "type": "HALF_LINE", "beta0": beta0, "err": err })
        }
        Region::Empty { searched } => {
            json!({ "type": "EMPTY", "searched_lo": searched.0, "searched_hi": searched.1 })
        }
        Region::UnboundedNone => json!({ "type": "UNBOUNDED_NONE" }),
    };
    let doc = json!({
        "case": r.case_tag,
        "region": region_doc,
        "beta0_lo": r.beta0_bracket.map(|b| b.0),
        "beta0_hi": r.beta0_bracket.map(|b| b.1),
        "samples": r.samples.iter()
            .map(|(b, est)| json!([b, est.lo(), est.refined, est.hi()]))
            .collect::<Vec<_>>(),
    });
    Ok(format!("{:#}\n", doc))
}

fn pressure_doc(est: &PressureEstimate) -> serde_json::Value {
    json!({
        "lo": est.lo(),
        "refined": est.refined,
        "hi": est.hi(),
        "point": est.point_value,
        "n_max": est.n_max,
    })
}

/// Indicator support for the default normalizing function: the canonical
/// anchor when the graph has periodic orbits, otherwise any vertex.
fn anchor_or_first_vertex(g: &GraphModel) -> Result<FinitePath> {
    match canonical_anchor(g) {
        Ok(p) => Ok(p),
        Err(Error::EmptyNw(_)) => {
            if g.has_vertex(0) {
                FinitePath::vertex(g, 0)
            } else {
                let vs = g.finite_vertices().unwrap_or_default();
                let v = *vs.first().ok_or_else(|| {
                    Error::GraphSpec("the graph has no usable start vertex".into())
                })?;
                FinitePath::vertex(g, v)
            }
        }
        Err(e) => Err(e),
    }
}

/// Deterministic orbit starts: non-wandering vertices first, padded with
/// whatever the forward ball reaches.
fn sample_vertices(g: &GraphModel, count: usize) -> Vec<VertexId> {
    let mut vs: Vec<VertexId> = match g.nonwandering(0) {
        NonWanderingReport::Empty => vec![],
        NonWanderingReport::FiniteNonEmpty { vertices, .. } => vertices,
        NonWanderingReport::Infinite { samples } => samples.into_iter().map(|(v, _)| v).collect(),
    };
    if vs.len() < count {
        let seeds: Vec<VertexId> = if vs.is_empty() {
            if g.has_vertex(0) {
                vec![0]
            } else {
                g.finite_vertices().unwrap_or_default().into_iter().take(1).collect()
            }
        } else {
            vs.clone()
        };
        vs.extend(g.forward_ball(&seeds, count));
    }
    vs.sort_unstable();
    vs.dedup();
    vs.truncate(count);
    vs
}

fn join_floats(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

// ---------------------------------------------------------------------------
// measure TSV

/// One `label<TAB>log10(mass)` row per stored cylinder, preceded by `#`
/// metadata lines. Ladder edges print as `u_i`/`d_i`; other graphs use
/// raw edge ids; depth-zero cylinders print as `v<id>`.
fn render_measure(m: &CylinderMeasure, g: &GraphModel, meta: &[(String, String)]) -> String {
    let mut s = String::from("# shiftthermo measure\n");
    for (k, v) in meta {
        writeln!(s, "# {k}\t{v}").unwrap();
    }
    writeln!(s, "# cylinders\t{}", m.len()).unwrap();
    writeln!(s, "# columns\tcylinder\tlog10_mass").unwrap();
    for (path, log_mass) in m.iter() {
        writeln!(s, "{}\t{}", path_label(g, path), log_mass / std::f64::consts::LN_10).unwrap();
    }
    s
}

fn path_label(g: &GraphModel, p: &FinitePath) -> String {
    if p.edges().is_empty() {
        return p.to_string();
    }
    p.edges().iter().map(|&e| edge_token(g, e)).collect::<Vec<_>>().join(" ")
}

fn edge_token(g: &GraphModel, id: EdgeId) -> String {
    match g.kind() {
        GraphKind::Ladder if id >= 0 => {
            if id % 2 == 0 {
                format!("u_{}", id / 2)
            } else {
                format!("d_{}", (id - 1) / 2)
            }
        }
        _ => id.to_string(),
    }
}

fn parse_edge_token(g: &GraphModel, tok: &str) -> Result<EdgeId> {
    let named = matches!(g.kind(), GraphKind::Ladder);
    if named {
        if let Some(i) = tok.strip_prefix("u_") {
            return parse_index(i).map(|k| 2 * k);
        }
        if let Some(i) = tok.strip_prefix("d_") {
            return parse_index(i).map(|k| 2 * k + 1);
        }
    }
    tok.parse::<EdgeId>()
        .map_err(|_| Error::Parse(format!("bad edge token {tok:?} in measure file")))
}

fn parse_index(s: &str) -> Result<EdgeId> {
    s.parse::<EdgeId>()
        .ok()
        .filter(|&k| k >= 0)
        .ok_or_else(|| Error::Parse(format!("bad edge index {s:?} in measure file")))
}

/// Inverse of [`render_measure`] up to float round-trip (exact: the dump
/// uses shortest-representation formatting).
fn parse_measure(text: &str, g: &GraphModel) -> Result<CylinderMeasure> {
    let mut rows: Vec<(FinitePath, f64)> = Vec::new();
    let mut declared_depth: Option<usize> = None;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.trim_start().splitn(2, '\t');
            if parts.next() == Some("depth") {
                declared_depth = parts.next().and_then(|v| v.trim().parse().ok());
            }
            continue;
        }
        let (label, value) = line.split_once('\t').ok_or_else(|| {
            Error::Parse(format!("measure line {} has no tab separator", ln + 1))
        })?;
        let log10: f64 = value.trim().parse().map_err(|_| {
            Error::Parse(format!("bad mass {value:?} on measure line {}", ln + 1))
        })?;
        let path = parse_path_label(g, label.trim())?;
        rows.push((path, log10 * std::f64::consts::LN_10));
    }
    if rows.is_empty() {
        return Err(Error::Parse("measure file has no cylinder rows".into()));
    }
    let depth = declared_depth
        .unwrap_or_else(|| rows.iter().map(|(p, _)| p.len()).max().unwrap_or(0));
    let mut m = CylinderMeasure::new(depth);
    for (path, log_mass) in rows {
        m.set_log(path, log_mass)?;
    }
    Ok(m)
}

fn parse_path_label(g: &GraphModel, label: &str) -> Result<FinitePath> {
    let toks: Vec<&str> = label.split_whitespace().collect();
    if toks.is_empty() {
        return Err(Error::Parse("empty cylinder label in measure file".into()));
    }
    if toks.len() == 1 {
        if let Some(v) = toks[0].strip_prefix('v') {
            if let Ok(vertex) = v.parse::<VertexId>() {
                return FinitePath::vertex(g, vertex);
            }
        }
    }
    let ids = toks.iter().map(|t| parse_edge_token(g, t)).collect::<Result<Vec<_>>>()?;
    FinitePath::from_edges(g, &ids)
}
