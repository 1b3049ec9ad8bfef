use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{write_csv, Assertion, Criterion, ExperimentConfig, ExperimentError, ExperimentReport};
use crate::geometry::off::write_off;
use crate::geometry::{
    build_product, extract_continuum_e, glue_surface, quotient_collapse, GeometryError, GluedSurfaceMesh, MeshParams,
    ProductMesh,
};
use crate::metric::{ahlfors_scan, llc_check, random_triples, stratified_scan, DualityConstants};
use crate::modulus::{
    analytic_density, analytic_energy_bound, f_set, growth_factors, min_path_length, numeric_energy,
    quotient_invariance_check, solve_cut_modulus, solve_modulus, CurveFamilySpec, ModulusError, SolverOptions,
};
use crate::network::Network;
use crate::oracles::{compare_case, default_corpus_dir, load_corpus};

/// Experiments in the order the consolidated report lists them.
pub const EXPERIMENTS: [&str; 7] = ["build", "calibrate", "ahlfors", "llc", "decay", "duality", "quotient"];

const AHLFORS_LOWER: f64 = 1.0 / 4096.0;
const AHLFORS_UPPER: f64 = 280.0;
const DECAY_SLACK: f64 = 0.1;
const DECAY_FACTOR: f64 = 2.0;
/// Values below this are treated as the mesh floor of the decay sweep.
const MESH_FLOOR: f64 = 1e-6;
const SMALL_MODULUS: f64 = 1e-2;
const DUALITY_GROWTH: f64 = 1.5;
const ORACLE_RELATIVE: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-8;
const CALIBRATION_N: usize = 64;
const CALIBRATION_SECONDS: f64 = 60.0;
const ORACLE_SECONDS: f64 = 10.0;
const CALIBRATION_BAND: (f64, f64) = (0.95, 1.05);
const METRIC_TOL: f64 = 1e-12;
const TOPOLOGY_MATRIX: [(u32, f64); 5] = [(1, 0.125), (2, 0.125), (3, 0.0625), (4, 0.03125), (5, 0.015625)];

fn geometry(e: GeometryError) -> ExperimentError {
    match e {
        GeometryError::Config(m) => ExperimentError::Config(m),
        other => ExperimentError::Computation(other.to_string()),
    }
}

fn solver(e: ModulusError) -> ExperimentError {
    ExperimentError::Computation(e.to_string())
}

fn surface(depth: u32, h: f64, cusp_inner: f64) -> Result<GluedSurfaceMesh, ExperimentError> {
    let params = MeshParams::with_cusp_inner(depth, h, cusp_inner).map_err(geometry)?;
    glue_surface(&params).map_err(geometry)
}

fn product(cfg: &ExperimentConfig, cusp_inner: f64) -> Result<ProductMesh, ExperimentError> {
    let y = surface(cfg.depth_m, cfg.mesh_h, cusp_inner)?;
    build_product(Arc::new(y), cfg.vertical_hz).map_err(geometry)
}

fn prepare(cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    Ok(())
}

fn finish(
    cfg: &ExperimentConfig,
    name: &str,
    artifacts: Vec<String>,
    results: serde_json::Value,
    assertions: Vec<Assertion>,
    start: Instant,
) -> Result<ExperimentReport, ExperimentError> {
    let report = ExperimentReport {
        experiment: name.to_string(),
        config: cfg.clone(),
        artifacts,
        results,
        assertions,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    let path = cfg.output_dir.join(format!("{name}.json"));
    std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

fn write_json(dir: &Path, file: &str, value: &impl Serialize) -> Result<String, ExperimentError> {
    std::fs::write(dir.join(file), serde_json::to_string_pretty(value)?)?;
    Ok(file.to_string())
}

fn options(cfg: &ExperimentConfig, p: f64) -> SolverOptions {
    SolverOptions::new(p, cfg.tol)
}

/// Runs every oracle case; fails unless the solver matches the
/// brute-force value on all of them.
pub fn oracle_gate() -> Result<Vec<crate::oracles::OracleComparison>, ExperimentError> {
    let cases = load_corpus(&default_corpus_dir()).map_err(|e| ExperimentError::OracleGate(e.to_string()))?;
    if cases.is_empty() {
        return Err(ExperimentError::OracleGate("corpus is empty".into()));
    }
    let mut out = Vec::new();
    for case in &cases {
        let cmp = compare_case(case, ORACLE_TOL).map_err(|e| ExperimentError::OracleGate(e.to_string()))?;
        if !(cmp.relative_error <= ORACLE_RELATIVE) {
            return Err(ExperimentError::OracleGate(format!(
                "{}: solver {} vs oracle {} (relative error {:.3e})",
                cmp.case, cmp.solver, cmp.oracle, cmp.relative_error
            )));
        }
        out.push(cmp);
    }
    Ok(out)
}

// ---------------------------------------------------------------- build

#[derive(Serialize)]
struct TopologyRow {
    depth_m: u32,
    mesh_h: f64,
    vertices: usize,
    edges: usize,
    cells: usize,
    euler_characteristic: i64,
    boundary_cycles: usize,
    area: f64,
    expected_area: f64,
}

fn topology_row(y: &GluedSurfaceMesh) -> Result<TopologyRow, ExperimentError> {
    Ok(TopologyRow {
        depth_m: y.params.depth,
        mesh_h: y.params.h,
        vertices: y.vertex_count(),
        edges: y.edge_count(),
        cells: y.cell_count(),
        euler_characteristic: y.euler_characteristic(),
        boundary_cycles: y.boundary_cycle_count().map_err(geometry)?,
        area: y.total_area(),
        expected_area: y.expected_area(),
    })
}

/// Metric axioms of the product distance on seeded vertex triples; returns
/// the worst violation of each axiom.
fn metric_axioms(x: &ProductMesh, n: usize, seed: u64) -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = x.vertex_count();
    let (mut identity, mut symmetry, mut triangle) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n {
        let (a, b, c) = (rng.random_range(0..nv), rng.random_range(0..nv), rng.random_range(0..nv));
        let (da, db) = (x.distances_from(a), x.distances_from(b));
        identity = identity.max(da[a]).max(db[b]);
        if a != b && !(da[b] > 0.0) {
            identity = f64::INFINITY;
        }
        symmetry = symmetry.max((da[b] - db[a]).abs());
        triangle = triangle.max(da[c] - (da[b] + db[c]));
    }
    (identity, symmetry, triangle)
}

/// `Mod_n` of a small family before and after scaling lengths by `λ` and
/// `n`-measures by `λ^n`.
fn scaling_check(tol: f64) -> Result<Vec<(String, f64, f64)>, ExperimentError> {
    let mut out = Vec::new();
    let grid = Network::grid(6, 6, 1.0);
    let (l, r) = Network::grid_sides(6, 6);
    let y = surface(1, 0.125, 0.125)?;
    let x = build_product(Arc::new(y), 0.25).map_err(geometry)?;
    let fam = CurveFamilySpec::MeetETruncated { delta0: 0.25, eps0: 0.5 }.resolve(&x).map_err(solver)?;
    let cases: [(&str, &Network, &[usize], &[usize], i32); 2] =
        [("grid 6x6, n = 2", &grid, &l, &r, 2), ("product M = 1, n = 3", &x.network, &fam.e, &fam.f, 3)];
    for (name, net, e, f, n) in cases {
        let opts = SolverOptions::new(n as f64, tol);
        let a = solve_modulus(net, e, f, &opts).map_err(solver)?;
        let b = solve_modulus(&net.scaled(2.0, n), e, f, &opts).map_err(solver)?;
        out.push((name.to_string(), a.value, b.value));
    }
    Ok(out)
}

/// Builds `Y` and `X`, writes the mesh artifacts and checks the structural
/// invariants.
pub fn cmd_build(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    prepare(cfg)?;
    let dir = &cfg.output_dir;
    let x = product(cfg, cfg.mesh_h)?;
    let y = x.base.clone();
    let mut artifacts = Vec::new();

    let mut off = std::io::BufWriter::new(std::fs::File::create(dir.join("y.off"))?);
    write_off(&y, &mut off)?;
    drop(off);
    artifacts.push("y.off".to_string());

    let mut rows = Vec::new();
    let mut matrix: Vec<(u32, f64)> = TOPOLOGY_MATRIX.to_vec();
    if !matrix.contains(&(cfg.depth_m, cfg.mesh_h)) {
        matrix.push((cfg.depth_m, cfg.mesh_h));
    }
    for (m, h) in matrix {
        let mesh = if (m, h) == (cfg.depth_m, cfg.mesh_h) { (*y).clone() } else { surface(m, h, h)? };
        rows.push(topology_row(&mesh)?);
    }
    write_csv(
        &dir.join("topology.csv"),
        &[
            "surface meshes of the structural test matrix",
            "depth_m, mesh_h: construction parameters; vertices, edges, cells: mesh counts",
            "euler_characteristic, boundary_cycles: topology of the glued surface",
            "area: summed cell area; expected_area: two base copies plus all attached pillowcases",
        ],
        &rows,
    )?;
    artifacts.push("topology.csv".to_string());

    let disk = rows.iter().all(|r| r.euler_characteristic == 1 && r.boundary_cycles == 1);
    let worst_area = rows.iter().map(|r| (r.area - r.expected_area).abs() / r.expected_area).fold(0.0, f64::max);

    // product multiplicativity on a ball around the cusp and a middle slab
    let dy = x.base_distances(y.cusp);
    let ball: Vec<usize> =
        (0..y.cells.len()).filter(|&c| y.cells[c].verts.iter().all(|&v| dy[v as usize] <= 0.25)).collect();
    let (lo, hi) = (x.layers.len() / 4, 3 * x.layers.len() / 4);
    let prism = x.prism_measure(&ball, lo, hi);
    let area: f64 = ball.iter().map(|&c| y.cells[c].area).sum();
    let product_error = (prism - area * (x.layers[hi] - x.layers[lo])).abs() / prism.max(1e-300);

    let (identity, symmetry, triangle) = metric_axioms(&x, cfg.metric_triples, cfg.seed);
    let scaling = scaling_check(1e-9)?;
    let worst_scaling = scaling.iter().map(|(_, a, b)| (a - b).abs() / a.abs().max(1e-300)).fold(0.0, f64::max);

    let summary = json!({
        "y": {
            "depth_m": y.params.depth,
            "mesh_h": y.params.h,
            "vertices": y.vertex_count(),
            "edges": y.edge_count(),
            "cells": y.cell_count(),
            "euler_characteristic": y.euler_characteristic(),
            "area": y.total_area(),
            "expected_area": y.expected_area(),
            "truncated_tail_area": y.truncated_tail_area(),
            "limit_area": y.expected_area() + y.truncated_tail_area(),
        },
        "x": {
            "vertical_hz": x.hz,
            "layers": x.layers,
            "vertices": x.vertex_count(),
            "edges": x.network.edge_count(),
            "measure": x.total_measure(),
        },
        "continuum_e": extract_continuum_e(&x).map_err(geometry)?.members.len(),
        "product_measure_relative_error": product_error,
        "metric_axioms": {"triples": cfg.metric_triples, "identity": identity, "symmetry": symmetry, "triangle": triangle},
        "scaling": scaling.iter().map(|(n, a, b)| json!({"instance": n, "original": a, "scaled": b})).collect::<Vec<_>>(),
    });
    artifacts.push(write_json(dir, "x.json", &summary)?);

    let c = Criterion::StructuralInvariants;
    let assertions = vec![
        Assertion::new(c, "disk topology", disk, format!("{} meshes, chi = 1 and one boundary cycle each", rows.len())),
        Assertion::new(
            c,
            "gluing measure additivity",
            worst_area <= METRIC_TOL,
            format!("max relative area defect {worst_area:.3e}"),
        ),
        Assertion::new(
            c,
            "product multiplicativity",
            product_error <= METRIC_TOL,
            format!("relative error {product_error:.3e}"),
        ),
        Assertion::new(
            c,
            "metric axioms",
            identity <= METRIC_TOL && symmetry <= METRIC_TOL && triangle <= METRIC_TOL,
            format!(
                "{} triples: identity {identity:.3e}, symmetry {symmetry:.3e}, triangle {triangle:.3e}",
                cfg.metric_triples
            ),
        ),
        Assertion::new(
            c,
            "conformal scaling invariance",
            worst_scaling <= METRIC_TOL,
            format!("max relative change {worst_scaling:.3e}"),
        ),
    ];
    finish(cfg, "build", artifacts, summary, assertions, start)
}

// ------------------------------------------------------------ calibrate

/// Unit-square `Mod₂` and the oracle corpus.
pub fn cmd_calibrate(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    prepare(cfg)?;
    let t = Instant::now();
    let net = Network::grid(CALIBRATION_N, CALIBRATION_N, 1.0);
    let (l, r) = Network::grid_sides(CALIBRATION_N, CALIBRATION_N);
    let square = solve_modulus(&net, &l, &r, &options(cfg, 2.0)).map_err(solver)?;
    let square_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (oracle, oracle_error) = match oracle_gate() {
        Ok(rows) => (rows, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let oracle_s = t.elapsed().as_secs_f64();
    let worst = oracle.iter().map(|c| c.relative_error).fold(0.0, f64::max);
    write_csv(
        &cfg.output_dir.join("oracle.csv"),
        &[
            "brute-force oracle against the solver on every corpus case",
            "oracle: interior-point value over all enumerated paths; oracle_lower: its dual bound",
            "solver: certified solver value; relative_error: |solver - oracle| / oracle",
        ],
        &oracle
            .iter()
            .map(|c| (c.case.clone(), c.p, c.oracle, c.oracle_lower, c.solver, c.relative_error))
            .collect::<Vec<_>>(),
    )?;
    let results = json!({
        "unit_square": {"n": CALIBRATION_N, "value": square.value, "lower_bound": square.lower_bound,
                        "certified": square.certified, "seconds": square_s},
        "oracle": {"cases": oracle.len(), "max_relative_error": worst, "seconds": oracle_s, "error": oracle_error},
    });
    let (lo, hi) = CALIBRATION_BAND;
    let assertions = vec![
        Assertion::new(
            Criterion::Calibration,
            "unit square Mod_2 at h = 1/64",
            square.certified && (lo..=hi).contains(&square.value) && square_s <= CALIBRATION_SECONDS,
            format!(
                "value {:.6} (certified {}) in [{lo}, {hi}], {square_s:.1} s of {CALIBRATION_SECONDS}",
                square.value, square.certified
            ),
        ),
        Assertion::new(
            Criterion::OracleEquivalence,
            "solver matches brute force",
            oracle_error.is_none() && worst <= ORACLE_RELATIVE && oracle_s <= ORACLE_SECONDS,
            match &oracle_error {
                Some(e) => e.clone(),
                None => format!(
                    "{} cases, max relative error {worst:.3e}, {oracle_s:.1} s of {ORACLE_SECONDS}",
                    oracle.len()
                ),
            },
        ),
    ];
    finish(cfg, "calibrate", vec!["oracle.csv".into()], results, assertions, start)
}

// -------------------------------------------------------------- ahlfors

#[derive(Serialize)]
struct BallRow {
    center: usize,
    stratum: String,
    chart: String,
    t: f64,
    y: f64,
    radius: f64,
    lumped: f64,
    inner: f64,
    outer: f64,
    ratio: f64,
    ratio_inner: f64,
    ratio_outer: f64,
    flagged: bool,
}

/// Stratified ball scan on `Y` against the regularity constants.
pub fn cmd_ahlfors(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    prepare(cfg)?;
    let y = surface(cfg.scan_depth_m, cfg.scan_h, cfg.scan_h)?;
    let r_min = 8.0 * cfg.scan_h;
    let summary = stratified_scan(&y, cfg.ahlfors_samples, r_min, 1.0, cfg.seed)
        .map_err(|e| ExperimentError::Computation(e.to_string()))?;
    let rows: Vec<BallRow> = summary
        .samples
        .iter()
        .map(|s| BallRow {
            center: s.stats.center,
            stratum: s.stratum.map_or(String::new(), |st| format!("{st:?}")),
            chart: s.stats.chart.clone(),
            t: s.stats.coords[0],
            y: s.stats.coords[1],
            radius: s.stats.radius,
            lumped: s.stats.measure.lumped,
            inner: s.stats.measure.inner,
            outer: s.stats.measure.outer,
            ratio: s.stats.ratio,
            ratio_inner: s.stats.ratio_inner,
            ratio_outer: s.stats.ratio_outer,
            flagged: s.flagged,
        })
        .collect();
    write_csv(
        &cfg.output_dir.join("ball_stats.csv"),
        &[
            "stratified ball scan on Y; one row per ball",
            "t, y: chart coordinates of the center; radius: metric radius r",
            "lumped: summed vertex areas in the ball; inner: cells fully inside; outer: cells that can meet the ball",
            "ratio = lumped/r^2, ratio_inner = inner/r^2, ratio_outer = outer/r^2",
            "flagged: ball reaches the truncation edge and is excluded from the extremes",
        ],
        &rows,
    )?;
    let violations = summary.violations(AHLFORS_LOWER, AHLFORS_UPPER);
    let results = json!({
        "depth_m": cfg.scan_depth_m, "mesh_h": cfg.scan_h, "samples": summary.samples.len(),
        "valid": summary.valid, "flagged": summary.flagged,
        "min_ratio": summary.min_ratio, "max_ratio": summary.max_ratio,
        "min_ratio_inner": summary.min_ratio_inner, "max_ratio_outer": summary.max_ratio_outer,
        "bounds": [AHLFORS_LOWER, AHLFORS_UPPER],
    });
    let detail = match violations.first() {
        Some(v) => format!(
            "{} violations, first at center {} r = {} (inner {:.4e}, outer {:.4e})",
            violations.len(),
            v.stats.center,
            v.stats.radius,
            v.stats.ratio_inner,
            v.stats.ratio_outer
        ),
        None => format!(
            "{} valid balls: inner ratio >= {:.4e}, outer ratio <= {:.3} within [1/4096, 280]",
            summary.valid, summary.min_ratio_inner, summary.max_ratio_outer
        ),
    };
    let assertions = vec![Assertion::new(
        Criterion::AhlforsRegularity,
        "ball ratios within the regularity bounds",
        violations.is_empty() && summary.valid == summary.samples.len(),
        detail,
    )];
    finish(cfg, "ahlfors", vec!["ball_stats.csv".into()], results, assertions, start)
}

// ------------------------------------------------------------------ llc

#[derive(Serialize)]
struct LlcRow {
    x: usize,
    r: f64,
    y: usize,
    z: usize,
    route: String,
    path_len: usize,
    clearance: f64,
    required: f64,
    reach: f64,
    passed: bool,
}

/// Seeded LLC triples on `X`.
pub fn cmd_llc(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    prepare(cfg)?;
    let x = product(cfg, cfg.mesh_h)?;
    let h_eff = cfg.mesh_h.max(cfg.vertical_hz);
    let (r_min, r_max) = cfg.llc_radii;
    let triples = random_triples(&x, cfg.llc_samples, r_min, r_max, cfg.seed);
    let mut rows = Vec::new();
    for (xc, r, y, z) in triples {
        let required = r / 12.0 - 2.0 * h_eff;
        rows.push(match llc_check(&x, xc, r, y, z) {
            Ok(w) => LlcRow {
                x: xc,
                r,
                y,
                z,
                route: format!("{:?}", w.route),
                path_len: w.path.len(),
                clearance: w.clearance,
                required,
                reach: w.reach,
                passed: w.clearance >= required,
            },
            Err(e) => LlcRow {
                x: xc,
                r,
                y,
                z,
                route: format!("failure: {e}"),
                path_len: 0,
                clearance: f64::NAN,
                required,
                reach: f64::NAN,
                passed: false,
            },
        });
    }
    write_csv(
        &cfg.output_dir.join("llc.csv"),
        &[
            "condition (b) with lambda = 12 on seeded triples (x, r, y, z), y and z outside B(x, r)",
            "route: construction that produced the witness path; clearance: min distance from x along it",
            "required = r/12 - 2 h_eff with h_eff = max(mesh_h, vertical_hz); reach: max distance from x",
        ],
        &rows,
    )?;
    let passed = rows.iter().filter(|r| r.passed).count();
    let worst = rows.iter().map(|r| r.clearance - r.required).fold(f64::INFINITY, f64::min);
    let results = json!({"triples": rows.len(), "passed": passed, "h_eff": h_eff, "min_margin": worst});
    let assertions = vec![Assertion::new(
        Criterion::LinearLocalConnectivity,
        "witness with clearance r/12 - 2h for every triple",
        passed == rows.len(),
        format!("{passed}/{} triples, smallest margin {worst:.4e}", rows.len()),
    )];
    finish(cfg, "llc", vec!["llc.csv".into()], results, assertions, start)
}

// ---------------------------------------------------------------- decay

#[derive(Serialize)]
struct DecayRow {
    delta: f64,
    cusp_width: f64,
    vertices: usize,
    bound: f64,
    energy: f64,
    c1_measure: f64,
    c2_measure: f64,
    analytic_min_length: f64,
    modulus: f64,
    lower_bound: f64,
    certified: bool,
    ratio: f64,
    seconds: f64,
}

/// Measured upper regularity constant of the base surface: the largest
/// outer ball ratio over a seeded scan plus the cusp balls of every `δ`.
fn measured_regularity(cfg: &ExperimentConfig, y: &GluedSurfaceMesh) -> Result<f64, ExperimentError> {
    let err = |e: crate::metric::MetricError| ExperimentError::Computation(e.to_string());
    let scan = stratified_scan(y, 100, 4.0 * cfg.mesh_h, 1.0, cfg.seed).map_err(err)?;
    let cusp: Vec<(usize, f64)> = cfg.delta_list.iter().map(|&d| (y.cusp, d)).collect();
    let at_cusp = ahlfors_scan(y, &cusp).map_err(err)?;
    Ok(scan.max_ratio_outer.max(at_cusp.max_ratio_outer))
}

/// Analytic density energy and solved `Mod_p Γ(E, F(δ₀, ε₀))` for every
/// truncation radius.
pub fn cmd_decay(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    prepare(cfg)?;
    oracle_gate()?;
    let y0 = surface(cfg.depth_m, cfg.mesh_h, cfg.mesh_h)?;
    let c_measured = measured_regularity(cfg, &y0)?;
    let spec = CurveFamilySpec::MeetETruncated { delta0: cfg.delta0, eps0: cfg.eps0 };
    let mut rows: Vec<DecayRow> = Vec::new();
    for &delta in &cfg.delta_list {
        let t = Instant::now();
        let width = cfg.cusp_width(delta);
        let x = product(cfg, width)?;
        let (rho, pieces) = analytic_density(&x, delta, cfg.epsilon).map_err(solver)?;
        let energy = numeric_energy(&x.network.measure, &rho, cfg.p);
        let fam = spec.resolve(&x).map_err(solver)?;
        let f_delta = f_set(&x, delta, cfg.epsilon).map_err(solver)?;
        let analytic_min_length = min_path_length(&x.network, &rho, &fam.e, &f_delta);
        let solved = solve_modulus(&x.network, &fam.e, &fam.f, &options(cfg, cfg.p)).map_err(solver)?;
        let ratio = rows.last().map_or(f64::NAN, |prev| prev.modulus / solved.value);
        rows.push(DecayRow {
            delta,
            cusp_width: width,
            vertices: x.vertex_count(),
            bound: analytic_energy_bound(delta, cfg.epsilon, c_measured),
            energy,
            c1_measure: pieces.c1_measure,
            c2_measure: pieces.c2_measure,
            analytic_min_length,
            modulus: solved.value,
            lower_bound: solved.lower_bound,
            certified: solved.certified,
            ratio,
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    write_csv(
        &cfg.output_dir.join("decay.csv"),
        &[
            "decay of the p-modulus of curves from E to F(delta0, eps0) as the inner truncation shrinks",
            "cusp_width: innermost cusp column of the mesh used for this delta",
            "bound = 4(1+eps) delta + C delta^2 (1+eps)/eps^3 with C the measured regularity constant",
            "energy: p-energy of the analytic density (1/delta on C1, 1/eps on C2); c1_measure, c2_measure: their measures",
            "analytic_min_length: shortest trapezoid rho-length of that density from E to F(delta, eps)",
            "modulus, lower_bound, certified: solved family value and its certificate; ratio: previous modulus / this one",
        ],
        &rows,
    )?;

    let c = Criterion::ModulusDecay;
    let mut assertions = Vec::new();
    for r in &rows {
        assertions.push(Assertion::new(
            c,
            &format!("analytic energy bound at delta = {}", r.delta),
            r.energy <= r.bound + DECAY_SLACK,
            format!("energy {:.5} <= bound {:.5} + {DECAY_SLACK}", r.energy, r.bound),
        ));
    }
    let uncertified: Vec<f64> = rows.iter().filter(|r| !r.certified).map(|r| r.delta).collect();
    assertions.push(Assertion::new(
        c,
        "every solve certified",
        uncertified.is_empty(),
        format!("uncertified at delta {uncertified:?}"),
    ));
    let checked: Vec<&DecayRow> = rows.iter().skip(1).filter(|r| r.modulus >= MESH_FLOOR).collect();
    let worst = checked.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    assertions.push(Assertion::new(
        c,
        "decrease by a factor 2 per halving",
        checked.iter().all(|r| r.ratio >= DECAY_FACTOR),
        format!("{} halvings above the mesh floor, smallest factor {worst:.3}", checked.len()),
    ));
    let finest = rows.last().expect("delta_list is nonempty").modulus;
    assertions.push(Assertion::new(
        c,
        "finest value below 1e-2",
        finest < SMALL_MODULUS,
        format!("modulus {finest:.4e} at delta = {}", rows.last().unwrap().delta),
    ));
    let results = json!({"c_measured": c_measured, "rows": rows.len(), "finest": finest});
    finish(cfg, "decay", vec!["decay.csv".into()], results, assertions, start)
}

// ------------------------------------------------------------- duality

#[derive(Clone, Debug, Serialize)]
struct DualityRow {
    level: u32,
    cusp_width: f64,
    vertices: usize,
    mod_sigma: f64,
    sigma_lower: f64,
    sigma_certified: bool,
    mod_gamma: f64,
    gamma_lower: f64,
    gamma_certified: bool,
    product: f64,
    growth: f64,
}

/// Cut modulus of `Σ(E, F(δ₀, ε₀))` and curve modulus of `Γ(E, F(δ₀, ε₀))`
/// under successive halvings of the cusp width.
pub fn cmd_duality(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    prepare(cfg)?;
    oracle_gate()?;
    let q = cfg.conjugate();
    let constants = DualityConstants::new(3).map_err(|e| ExperimentError::Computation(e.to_string()))?;
    let spec = CurveFamilySpec::MeetETruncated { delta0: cfg.delta0, eps0: cfg.eps0 };
    let mut rows: Vec<DualityRow> = Vec::new();
    for level in 0..=cfg.refinements {
        let width = cfg.mesh_h / 2f64.powi(level as i32);
        let x = product(cfg, width)?;
        let fam = spec.resolve(&x).map_err(solver)?;
        let sigma = solve_cut_modulus(&x.network, &fam.e, &fam.f, q, &options(cfg, cfg.p)).map_err(solver)?;
        let gamma = solve_modulus(&x.network, &fam.e, &fam.f, &options(cfg, cfg.p)).map_err(solver)?;
        let growth = rows.last().map_or(f64::NAN, |prev| sigma.value / prev.mod_sigma);
        rows.push(DualityRow {
            level,
            cusp_width: width,
            vertices: x.vertex_count(),
            mod_sigma: sigma.value,
            sigma_lower: sigma.lower_bound,
            sigma_certified: sigma.certified,
            mod_gamma: gamma.value,
            gamma_lower: gamma.lower_bound,
            gamma_certified: gamma.certified,
            product: gamma.value.powf(1.0 / cfg.p) * sigma.value.powf(1.0 / q),
            growth,
        });
    }
    write_csv(
        &cfg.output_dir.join("duality.csv"),
        &[
            "cut modulus (exponent q) and curve modulus (exponent p) of the E-family under cusp refinement",
            "product = mod_gamma^(1/p) * mod_sigma^(1/q); growth: mod_sigma / previous mod_sigma",
        ],
        &rows,
    )?;
    let sigmas: Vec<f64> = rows.iter().map(|r| r.mod_sigma).collect();
    let factors = growth_factors(&sigmas);
    let cumulative = sigmas.last().unwrap() / sigmas[0];
    let results = json!({
        "p": cfg.p, "q": q, "continuum_bound": constants.bound,
        "growth_factors": factors, "cumulative_growth": cumulative,
        "rows": rows,
    });
    let artifact = write_json(&cfg.output_dir, "duality_data.json", &results)?;
    let c = Criterion::DualityTrend;
    let certified = rows.iter().all(|r| r.sigma_certified && r.gamma_certified);
    let gammas: Vec<f64> = rows.iter().map(|r| r.mod_gamma).collect();
    let assertions = vec![
        Assertion::new(c, "every solve certified", certified, format!("{} levels", rows.len())),
        Assertion::new(
            c,
            "cut modulus grows at every refinement",
            factors.iter().all(|&g| g > 1.0),
            format!("factors {factors:.3?}"),
        ),
        Assertion::new(
            c,
            "cumulative growth across the refinements",
            rows.len() >= 4 && cumulative >= DUALITY_GROWTH,
            format!("{} refinements, factor {cumulative:.3} >= {DUALITY_GROWTH}", rows.len() - 1),
        ),
        Assertion::new(
            c,
            "curve modulus decreases",
            gammas.windows(2).all(|w| w[1] < w[0]),
            format!("values {:?}", gammas.iter().map(|g| format!("{g:.4e}")).collect::<Vec<_>>()),
        ),
    ];
    finish(cfg, "duality", vec!["duality.csv".into(), artifact], results, assertions, start)
}

// ------------------------------------------------------------ quotient

/// Paired moduli on `X` and on `X` with `E` collapsed.
pub fn cmd_quotient(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    prepare(cfg)?;
    oracle_gate()?;
    let finest = *cfg.delta_list.last().expect("validated");
    let x = product(cfg, cfg.cusp_width(finest))?;
    let e = extract_continuum_e(&x).map_err(geometry)?;
    let quotient = quotient_collapse(&x, &e).map_err(geometry)?;
    let connected = quotient.network.graph.component_count(|_| true) == 1;

    // a spherical shell far from the cusp
    let k = x.layers.len() / 2;
    let center_base = (0..x.base_count())
        .filter(|&v| x.base.vertices[v].chart.is_base())
        .min_by(|&u, &v| {
            let d = |w: usize| {
                let c = x.base.vertices[w].coords;
                (c[0] - 0.75).hypot(c[1])
            };
            d(u).total_cmp(&d(v))
        })
        .expect("base chart has vertices");
    let center = x.vertex(center_base, k);
    let d = x.distances_from(center);
    let inner: Vec<usize> = (0..d.len()).filter(|&v| d[v] <= 0.05).collect();
    // paths leave B(c, 0.25) through this shell, which stays clear of E
    let outer: Vec<usize> = (0..d.len()).filter(|&v| d[v] >= 0.25 && d[v] <= 0.3).collect();
    let opts = options(cfg, cfg.p);
    let away = quotient_invariance_check(&x.network, &quotient, &inner, &outer, &opts).map_err(solver)?;

    let fam = CurveFamilySpec::MeetETruncated { delta0: cfg.delta0, eps0: cfg.eps0 }.resolve(&x).map_err(solver)?;
    let near = quotient_invariance_check(&x.network, &quotient, &fam.e, &fam.f, &opts).map_err(solver)?;
    let results = json!({
        "cusp_width": cfg.cusp_width(finest),
        "quotient_connected": connected,
        "away": away,
        "e_family": near,
    });
    let artifact = write_json(&cfg.output_dir, "quotient_data.json", &results)?;
    let c = Criterion::QuotientInvariance;
    let assertions = vec![
        Assertion::new(c, "quotient is connected", connected, format!("{} vertices", quotient.network.vertex_count())),
        Assertion::new(
            c,
            "away family bit-identical",
            away.identical && away.same_support,
            format!("X {:.17e}, quotient {:.17e}", away.value_x, away.value_quotient),
        ),
        Assertion::new(
            c,
            "E-family below 1e-2 on both",
            near.value_x < SMALL_MODULUS && near.value_quotient < SMALL_MODULUS,
            format!("X {:.4e}, quotient {:.4e}", near.value_x, near.value_quotient),
        ),
    ];
    finish(cfg, "quotient", vec![artifact], results, assertions, start)
}

// -------------------------------------------------------------- report

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Pass,
    Fail,
    Missing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionStatus {
    pub criterion: Criterion,
    pub status: Status,
    pub assertions: Vec<(String, Assertion)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsolidatedReport {
    pub criteria: Vec<CriterionStatus>,
    pub missing: Vec<String>,
    pub experiments: Vec<(String, bool, f64)>,
}

impl ConsolidatedReport {
    pub fn all_passed(&self) -> bool {
        self.missing.is_empty() && self.criteria.iter().all(|c| c.status == Status::Pass)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.criteria {
            let status = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Missing => "MISSING",
            };
            s.push_str(&format!("{status} {}\n", c.criterion));
            for (exp, a) in &c.assertions {
                s.push_str(&format!(
                    "    [{}] {exp}: {} ({})\n",
                    if a.passed { "ok" } else { "FAIL" },
                    a.name,
                    a.detail
                ));
            }
        }
        if !self.missing.is_empty() {
            s.push_str(&format!("missing experiments: {}\n", self.missing.join(", ")));
        }
        s
    }
}

/// Collects the saved experiment reports into one status per criterion.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<ConsolidatedReport, ExperimentError> {
    prepare(cfg)?;
    let mut reports = Vec::new();
    let mut missing = Vec::new();
    for name in EXPERIMENTS {
        let path = cfg.output_dir.join(format!("{name}.json"));
        if path.exists() {
            reports.push(ExperimentReport::load(&path)?);
        } else {
            missing.push(name.to_string());
        }
    }
    let criteria: Vec<CriterionStatus> = Criterion::ALL
        .iter()
        .map(|&criterion| {
            let assertions: Vec<(String, Assertion)> = reports
                .iter()
                .flat_map(|r| r.assertions.iter().map(move |a| (r.experiment.clone(), a.clone())))
                .filter(|(_, a)| a.criterion == criterion)
                .collect();
            let status = if assertions.is_empty() {
                Status::Missing
            } else if assertions.iter().all(|(_, a)| a.passed) {
                Status::Pass
            } else {
                Status::Fail
            };
            CriterionStatus { criterion, status, assertions }
        })
        .collect();
    let report = ConsolidatedReport {
        experiments: reports.iter().map(|r| (r.experiment.clone(), r.passed(), r.wall_clock_s)).collect(),
        criteria,
        missing,
    };
    std::fs::write(cfg.output_dir.join("report.txt"), report.to_text())?;
    std::fs::write(cfg.output_dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    write_csv(
        &cfg.output_dir.join("criteria.csv"),
        &[
            "one row per acceptance criterion; status is Pass, Fail or Missing",
            "assertions: count of checks feeding it",
        ],
        &report
            .criteria
            .iter()
            .map(|c| (c.criterion.number(), c.criterion.label(), format!("{:?}", c.status), c.assertions.len()))
            .collect::<Vec<_>>(),
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_flags_missing_experiments() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig { output_dir: dir.path().to_path_buf(), ..Default::default() };
        let r = cmd_report(&cfg).unwrap();
        assert_eq!(r.missing.len(), EXPERIMENTS.len());
        assert!(r.criteria.iter().all(|c| c.status == Status::Missing));
        assert!(!r.all_passed());
        assert!(dir.path().join("report.txt").exists());
    }

    #[test]
    fn invalid_resolution_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig { output_dir: dir.path().to_path_buf(), mesh_h: 0.0625, ..Default::default() };
        let err = cmd_build(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }
}
