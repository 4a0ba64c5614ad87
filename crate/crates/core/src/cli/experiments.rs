//! The named experiments behind the command line.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Key, Value};
use super::report::{Check, Sample};
use super::svg::{Projection, Scene, Style};
use crate::billiards::{
    build_polygon, chasles_polygon_2d, dualize_polygon, measure_counts, poncelet_parameter, poncelet_perimeter,
    PolygonalThread, SegmentKind, CLOSURE_TOL,
};
use crate::elliptic::{to_cartesian, EllipticPoint};
use crate::error::{Error, Result};
use crate::geodesic::{
    closed_geodesic_check, integrate_cartesian_geodesic, integrate_geodesic, jacobi_constant, phi_gradient_norm_sq,
    umbilic_length, umbilics, GeodesicState,
};
use crate::ode::OdeOptions;
use crate::quadrature::{
    darboux_residuals, half_turn_criterion, perimeter_formula, solve_closure, CharacteristicRadical, ClosureMode,
    PerimeterVariant, WindingCounts,
};
use crate::sj::{
    check_identity, constructive_vertex, random_admissible_z, random_identity_sample, random_sj_matrix,
    vertex_configuration, CVec, CanonicalQuadric, Identity, IdentitySample, QuadricKind, SjBlock, SjMatrix,
    VERTEX_TOL,
};
use crate::threads::{assemble_staude_thread, curvature_budget, graves_excess, graves_vertex, TC_TOL};

pub const EXPERIMENTS: [&str; 10] = [
    "ivory-check",
    "lame-orthogonality",
    "graves",
    "chasles-2d",
    "darboux-3d",
    "staude",
    "geodesic",
    "closed-geodesic",
    "sj-check",
    "dualize",
];

/// What an experiment hands back for the report.
#[derive(Debug, Default)]
pub struct Outcome {
    pub samples: Vec<Sample>,
    pub checks: Vec<Check>,
    pub summary: BTreeMap<String, f64>,
    pub scene: Option<Scene>,
}

fn key(name: &'static str, default: Value, doc: &'static str) -> Key {
    Key { name, default, doc }
}

fn int(i: i64) -> Value {
    Value::Int(i)
}

fn float(x: f64) -> Value {
    Value::Float(x)
}

fn list(v: &[f64]) -> Value {
    Value::List(v.to_vec())
}

const AXES3: [f64; 3] = [3.0, 2.0, 1.0];

/// Accepted keys and default tolerance of an experiment.
pub fn schema(name: &str) -> Result<(Vec<Key>, f64)> {
    let sweep = |n: i64| key("samples", int(n), "number of samples");
    Ok(match name {
        "ivory-check" => (
            vec![
                sweep(1000),
                key("max_dim", int(6), "largest dimension of the complex families"),
                key("max_block", int(4), "largest symmetric Jordan block"),
            ],
            1e-10,
        ),
        "lame-orthogonality" => (vec![key("axes", list(&AXES3), "squared semiaxes a1 > a2 > a3"), sweep(10_000)], 1e-9),
        "graves" => (
            vec![
                key("a1", float(2.0), "squared major semiaxis"),
                key("a2", float(1.0), "squared minor semiaxis"),
                key("z", float(-1.0), "parameter of the vertex ellipse"),
                sweep(256),
                key("extra_sets", int(0), "random parameter sets added to the sweep"),
            ],
            1e-8,
        ),
        "chasles-2d" => (
            vec![
                key("axes", list(&[2.0, 1.0]), "squared semiaxes of the caustic ellipse"),
                key("p", int(3), "number of sides"),
                key("w", int(1), "number of turns"),
                sweep(64),
            ],
            1e-8,
        ),
        "darboux-3d" => (
            vec![
                key("axes", list(&AXES3), "squared semiaxes"),
                key("u3_0", float(0.5), "caustic ellipsoid"),
                key("n", int(4), "crossings of the plane x2 = 0"),
                key("n_prime", int(6), "tangencies with the hyperboloid"),
                key("m", int(12), "number of chords"),
                sweep(32),
            ],
            1e-6,
        ),
        "staude" => (
            vec![
                key("axes", list(&AXES3), "squared semiaxes"),
                key("u2_0", float(1.5), "hyperboloid"),
                key("u3_0", float(0.5), "ellipsoid wrapped by the thread"),
                key("u3_1", float(-0.5), "ellipsoid carrying the pen"),
                sweep(16),
            ],
            1e-6,
        ),
        "geodesic" => (
            vec![
                key("axes", list(&AXES3), "squared semiaxes"),
                key("u2_0", float(1.5), "hyperboloid touched by the geodesics"),
                key("u3_0", float(0.5), "ellipsoid carrying the geodesics"),
                key("length", float(20.0), "arc length of each run"),
                sweep(8),
                key("grad_samples", int(1000), "points for the eikonal check"),
                key("umbilic_samples", int(8), "directions leaving an umbilic"),
            ],
            1e-8,
        ),
        "closed-geodesic" => (
            vec![
                key("axes", list(&AXES3), "squared semiaxes"),
                key("u3_0", float(0.5), "ellipsoid carrying the geodesic"),
                key("n", int(4), "half oscillations of u1"),
                key("n_prime", int(6), "tangencies with the hyperboloid"),
            ],
            1e-8,
        ),
        "sj-check" => (
            vec![
                sweep(1000),
                key("identity", Value::Text("all".into()), "identity name or `all`"),
                key("max_dim", int(6), "largest dimension"),
                key("max_block", int(4), "largest symmetric Jordan block"),
                key("vertex_samples", int(200), "constructed vertex configurations"),
            ],
            1e-10,
        ),
        "dualize" => (
            vec![
                key("axes", list(&[2.0, 1.0]), "two squared semiaxes for a Poncelet polygon, three for a Darboux one"),
                key("p", int(3), "sides of the planar polygon"),
                key("w", int(1), "turns of the planar polygon"),
                key("u3_0", float(0.5), "caustic ellipsoid of the spatial polygon"),
                key("n", int(4), "winding count n of the spatial polygon"),
                key("n_prime", int(6), "winding count n' of the spatial polygon"),
                key("m", int(12), "chords of the spatial polygon"),
                key("iterations", int(10), "number of dualizations"),
                key("theta", float(0.3), "starting angle"),
            ],
            1e-6,
        ),
        other => return Err(Error::Config(format!("unknown experiment `{other}`; known: {}", EXPERIMENTS.join(", ")))),
    })
}

pub fn execute(config: &ExperimentConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    match config.experiment.as_str() {
        "ivory-check" => ivory_check(config, &mut rng),
        "lame-orthogonality" => lame_orthogonality(config, &mut rng),
        "graves" => graves(config, &mut rng),
        "chasles-2d" => chasles_2d(config),
        "darboux-3d" => darboux_3d(config),
        "staude" => staude(config),
        "geodesic" => geodesic(config, &mut rng),
        "closed-geodesic" => closed_geodesic(config),
        "sj-check" => sj_check(config, &mut rng),
        "dualize" => dualize(config),
        other => Err(Error::Config(format!("unknown experiment `{other}`"))),
    }
}

fn sample(index: usize, value: f64, deviation: f64, fields: &[(&str, f64)]) -> Sample {
    Sample { index, value, deviation, fields: fields.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
}

fn summary(items: &[(&str, f64)]) -> BTreeMap<String, f64> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn counts(config: &ExperimentConfig, m: Option<&str>) -> Result<WindingCounts> {
    let get = |k: &str| -> Result<u32> {
        match config.params.get(k) {
            Some(Value::Int(i)) if *i >= 0 => Ok(*i as u32),
            _ => Err(Error::Config(format!("`{k}`: expected a nonnegative integer"))),
        }
    };
    WindingCounts::new(get("n")?, get("n_prime")?, m.map_or(Ok(0), get)?)
        .map_err(|e| Error::Config(format!("winding counts: {e}")))
}

fn real_vec(x: &[f64]) -> CVec {
    CVec::from_iterator(x.len(), x.iter().map(|v| Complex64::new(*v, 0.0)))
}

fn random_axes(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut a = vec![rng.random_range(0.3..1.5)];
    for _ in 1..dim {
        let prev = a[a.len() - 1];
        a.push(prev + rng.random_range(0.2..2.0));
    }
    a.reverse();
    a
}

/// Uniform point of the real quadric `Σ x_j²/a_j = 1`.
fn real_point(rng: &mut ChaCha8Rng, axes: &[f64]) -> CVec {
    let g: Vec<f64> = axes.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
    let x: Vec<f64> = g.iter().zip(axes).map(|(v, a)| v / norm * a.sqrt()).collect();
    real_vec(&x)
}

/// A complex quadric of dimension `3..=max_dim` of any of the three kinds.
fn random_quadric(rng: &mut ChaCha8Rng, min_dim: usize, max_dim: usize, max_block: usize) -> CanonicalQuadric {
    loop {
        let dim = rng.random_range(min_dim..=max_dim.max(min_dim));
        let q = match rng.random_range(0..3) {
            0 => CanonicalQuadric::new(random_sj_matrix(rng, dim, max_block, false), QuadricKind::Qc),
            1 => {
                let mut m = random_sj_matrix(rng, dim - 1, max_block, false);
                m.blocks.push(SjBlock { eigenvalue: Complex64::new(0.0, 0.0), size: 1 });
                CanonicalQuadric::new(m, QuadricKind::Qwc)
            }
            _ => {
                let p = rng.random_range(2..=dim.min(max_block).max(2));
                let mut m = SjMatrix { blocks: vec![SjBlock { eigenvalue: Complex64::new(0.0, 0.0), size: p }] };
                if dim > p {
                    m.blocks.extend(random_sj_matrix(rng, dim - p, max_block, false).blocks);
                }
                CanonicalQuadric::new(m, QuadricKind::Iqwc)
            }
        };
        if let Ok(q) = q {
            return q;
        }
    }
}

fn kind_code(k: QuadricKind) -> f64 {
    match k {
        QuadricKind::Qc => 0.0,
        QuadricKind::Qwc => 1.0,
        QuadricKind::Iqwc => 2.0,
    }
}

fn ivory_check(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let n = config.count("samples")?;
    let max_dim = config.count("max_dim")?;
    let max_block = config.count("max_block")?;
    let mut samples = Vec::with_capacity(n);
    let mut attempts = 0;
    while samples.len() < n {
        attempts += 1;
        if attempts > 50 * n {
            return Err(Error::Hypothesis("too many rejected samples".into()));
        }
        let i = samples.len();
        // families cycle through the real plane, real space and complex forms
        let (q, z, s) = match i % 4 {
            family @ (0 | 1) => {
                let axes = random_axes(rng, family + 2);
                let q = CanonicalQuadric::from_axes(&axes)?;
                let z = Complex64::new(rng.random_range(-3.0..0.9 * axes[axes.len() - 1]), 0.0);
                let s = IdentitySample {
                    x00: real_point(rng, &axes),
                    x01: real_point(rng, &axes),
                    w00: None,
                    w01: None,
                    w00_polar: None,
                };
                (q, z, s)
            }
            _ => {
                let q = random_quadric(rng, 2, max_dim, max_block);
                let z = random_admissible_z(rng, &q.a, 1.5, 0.2);
                let s = random_identity_sample(&q, rng);
                (q, z, s)
            }
        };
        match check_identity(Identity::IvoryTheorem, &s, &q, z) {
            Ok(r) => samples.push(sample(
                i,
                r,
                r,
                &[("dim", q.dim() as f64), ("kind", kind_code(q.kind)), ("z_re", z.re), ("z_im", z.im), ("residual", r)],
            )),
            Err(Error::Hypothesis(_) | Error::BranchPole { .. } | Error::OffQuadric { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Outcome { samples, ..Outcome::default() })
}

fn sj_check(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let n = config.count("samples")?;
    let max_dim = config.count("max_dim")?;
    let max_block = config.count("max_block")?;
    let which = config.text("identity")?;
    let ids: Vec<Identity> = if which == "all" {
        Identity::ALL.to_vec()
    } else {
        vec![Identity::from_name(&which).ok_or_else(|| Error::Config(format!("`identity`: unknown identity `{which}`")))?]
    };
    let mut samples = Vec::new();
    let mut out = Outcome::default();
    for (k, id) in ids.iter().enumerate() {
        let mut done = 0;
        let mut attempts = 0;
        let mut worst: f64 = 0.0;
        while done < n {
            attempts += 1;
            if attempts > 100 * n {
                return Err(Error::Hypothesis(format!("{}: too many rejected samples", id.name())));
            }
            let q = random_quadric(rng, 3, max_dim, max_block);
            let z = random_admissible_z(rng, &q.a, 1.5, 0.2);
            let s = random_identity_sample(&q, rng);
            match check_identity(*id, &s, &q, z) {
                Ok(r) => {
                    worst = worst.max(r);
                    samples.push(sample(
                        samples.len(),
                        r,
                        r,
                        &[("identity", k as f64), ("dim", q.dim() as f64), ("kind", kind_code(q.kind)), ("residual", r)],
                    ));
                    done += 1;
                }
                Err(Error::Hypothesis(_) | Error::BranchPole { .. } | Error::OffQuadric { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        out.summary.insert(format!("max_residual_{}", id.name()), worst);
    }
    let vertex_samples = config.count("vertex_samples")?;
    let (mut reflect, mut collinear, mut symmetry, mut tangency) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut done = 0;
    while done < vertex_samples {
        let q = CanonicalQuadric::new(random_sj_matrix(rng, 3, 2, false), QuadricKind::Qc)?;
        let z = random_admissible_z(rng, &q.a, 1.0, 0.3);
        let Some(v) = constructive_vertex(&q, z, rng) else { continue };
        let zp = random_admissible_z(rng, &q.a, 1.0, 0.3);
        let r = vertex_configuration(&q, z, &v.x00, &v.x01, &v.x02, zp)?;
        reflect = reflect.max(r.reflect_defect_xz0).max(r.reflect_defect_x00);
        collinear = collinear.max(r.collinear_defect);
        symmetry = symmetry.max(r.discriminant_symmetry_residual);
        tangency = tangency.max(v.tangency_defect);
        done += 1;
    }
    out.checks = vec![
        Check::below("vertex_tangency", tangency, VERTEX_TOL),
        Check::below("vertex_reflection", reflect, VERTEX_TOL),
        Check::below("vertex_collinearity", collinear, VERTEX_TOL),
        Check::below("discriminant_symmetry", symmetry, VERTEX_TOL),
    ];
    out.samples = samples;
    Ok(out)
}

fn lame_orthogonality(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let axes = config.axes::<3>("axes")?;
    let n = config.count("samples")?;
    let [a1, a2, a3] = axes;
    let inside = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| lo + (hi - lo) * rng.random_range(0.01..0.99);
    let mut samples = Vec::with_capacity(n);
    let mut membership: f64 = 0.0;
    for i in 0..n {
        let u = [inside(rng, a2, a1), inside(rng, a3, a2), inside(rng, a3 - 4.0 * (a1 - a3), a3)];
        let signs = [0, 1, 2].map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        let x = to_cartesian(axes, &EllipticPoint::new(u, signs))?;
        let normals: Vec<[f64; 3]> = u.iter().map(|uk| std::array::from_fn(|j| x[j] / (axes[j] - uk))).collect();
        for uk in &u {
            let q: f64 = (0..3).map(|j| x[j] * x[j] / (axes[j] - uk)).sum::<f64>() - 1.0;
            membership = membership.max(q.abs());
        }
        let norm = |v: &[f64; 3]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let dot = |i: usize, j: usize| {
            (0..3).map(|c| normals[i][c] * normals[j][c]).sum::<f64>().abs() / (norm(&normals[i]) * norm(&normals[j]))
        };
        let worst = dot(0, 1).max(dot(0, 2)).max(dot(1, 2));
        samples.push(sample(i, worst, worst, &[("u1", u[0]), ("u2", u[1]), ("u3", u[2]), ("max_dot", worst)]));
    }
    Ok(Outcome { samples, checks: vec![Check::below("coordinate_membership", membership, 1e-9)], ..Outcome::default() })
}

fn graves(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let n = config.count("samples")?;
    let extra = match config.params.get("extra_sets") {
        Some(Value::Int(i)) if *i >= 0 => *i as usize,
        _ => return Err(Error::Config("`extra_sets`: expected a nonnegative integer".into())),
    };
    let mut sets = vec![(config.f64("a1")?, config.f64("a2")?, config.f64("z")?)];
    for _ in 0..extra {
        let a2 = rng.random_range(0.5..2.0);
        sets.push((a2 + rng.random_range(0.2..3.0), a2, rng.random_range(-3.0..-0.05)));
    }
    let mut out = Outcome::default();
    let mut tangency: f64 = 0.0;
    let mut min_excess = f64::INFINITY;
    for (set, &(a1, a2, z)) in sets.iter().enumerate() {
        let mut rows = Vec::with_capacity(n);
        let mut tangent = 0.0;
        for k in 0..n {
            let theta0 = TAU * k as f64 / n as f64;
            let v = graves_vertex(a1, a2, z, theta0)?;
            tangency = tangency.max(v.tangency_residual(v.theta1).abs()).max(v.tangency_residual(v.theta2).abs());
            let t = (v.on_vertex_ellipse(theta0) - v.on_base(v.theta1)).norm();
            tangent += t / n as f64;
            rows.push((theta0, v.theta1, v.theta2, graves_excess(a1, a2, z, theta0)?));
        }
        let lo = rows.iter().map(|r| r.3).fold(f64::INFINITY, f64::min);
        min_excess = min_excess.min(lo);
        for (theta0, t1, t2, e) in rows {
            out.samples.push(sample(
                out.samples.len(),
                e,
                (e - lo) / tangent,
                &[
                    ("set", set as f64),
                    ("a1", a1),
                    ("a2", a2),
                    ("z", z),
                    ("theta0", theta0),
                    ("theta1", t1),
                    ("theta2", t2),
                    ("excess", e),
                    ("mean_tangent", tangent),
                ],
            ));
        }
    }
    out.checks = vec![
        Check::below("tangency_condition", tangency, TC_TOL),
        Check::above("min_excess", min_excess, 0.0),
    ];
    let (a1, a2, z) = sets[0];
    let theta0 = 0.9;
    let v = graves_vertex(a1, a2, z, theta0)?;
    let mut scene = Scene::new("Graves: constant excess of a thread around an ellipse");
    scene.ellipse(a1, a2, Style::Conic);
    scene.ellipse(a1 - z, a2 - z, Style::Focal);
    let vertex = v.on_vertex_ellipse(theta0);
    for t in [v.theta1, v.theta2] {
        let c = v.on_base(t);
        scene.polyline(vec![[vertex[0], vertex[1]], [c[0], c[1]]], false, Style::Tangent);
    }
    let wrap = |d: f64| d - TAU * (d / TAU).round();
    let (lo, hi) = (theta0 + wrap(v.theta1 - theta0), theta0 + wrap(v.theta2 - theta0));
    let arc = super::svg::adaptive_polyline(|t| [a1.sqrt() * t.cos(), a2.sqrt() * t.sin()], lo, hi, super::svg::CURVE_TOL);
    scene.polyline(arc, false, Style::Curvature);
    scene.dot([vertex[0], vertex[1]]);
    out.scene = Some(scene);
    Ok(out)
}

fn planar_scene(title: &str, axes: [f64; 2], zs: &[f64], polys: &[&PolygonalThread]) -> Scene {
    let mut scene = Scene::new(title);
    scene.ellipse(axes[0], axes[1], Style::Conic);
    for z in zs {
        scene.ellipse(axes[0] - z, axes[1] - z, Style::Focal);
    }
    for poly in polys {
        let pts = poly.vertices.iter().map(|v| [v.point[0], v.point[1]]).collect();
        scene.polyline(pts, poly.closed, Style::Rectilinear);
    }
    scene
}

fn chasles_2d(config: &ExperimentConfig) -> Result<Outcome> {
    let axes = config.axes::<2>("axes")?;
    let p = config.count("p")?;
    let w = config.count("w")?;
    let n = config.count("samples")?;
    let z = poncelet_parameter(axes, p, w)?;
    let formula = poncelet_perimeter(axes, z, p, w)?;
    let mut out = Outcome::default();
    let mut gap: f64 = 0.0;
    let mut first = None;
    for k in 0..n {
        let theta = 0.1 + TAU * k as f64 / n as f64;
        let poly = chasles_polygon_2d(axes, &vec![z; p], theta)?;
        gap = gap.max(poly.closure_gap / poly.diameter);
        out.samples.push(sample(
            k,
            poly.perimeter,
            (poly.perimeter - formula) / formula,
            &[("theta", theta), ("perimeter", poly.perimeter), ("closure_gap", poly.closure_gap), ("closed", poly.closed as u8 as f64)],
        ));
        first.get_or_insert(poly);
    }
    out.checks = vec![Check::below("closure_gap_over_diameter", gap, CLOSURE_TOL)];
    out.summary = summary(&[("z", z), ("formula_perimeter", formula)]);
    out.scene = first.map(|poly| planar_scene("Poncelet polygon between confocal ellipses", axes, &[z], &[&poly]));
    Ok(out)
}

fn spatial_scene(title: &str, shells: &[[f64; 3]], poly: &PolygonalThread) -> Scene {
    let proj = Projection::default();
    let mut scene = Scene::new(title);
    for (k, b) in shells.iter().enumerate() {
        scene.ellipsoid(*b, &proj, if k == 0 { Style::Conic } else { Style::Focal });
    }
    let mut pts: Vec<Vec<f64>> = poly.vertices.iter().map(|v| v.point.iter().cloned().collect()).collect();
    if let Some(first) = pts.first().cloned() {
        if poly.closed {
            pts.push(first);
        }
    }
    scene.polyline3(&pts, &proj, Style::Rectilinear);
    for v in &poly.vertices {
        scene.dot(proj.project(v.point.as_slice()));
    }
    scene
}

/// Start on `{u³ = u³₁}` with `u² < u²₀`, spread over the sweep.
fn darboux_start(axes: [f64; 3], u2_0: f64, u3_1: f64, s: f64) -> Result<crate::family::Point> {
    let [a1, a2, a3] = axes;
    let eps = 1e-3 * (a1 - a3);
    let u1 = a2 + eps + (a1 - a2 - 2.0 * eps) * (0.5 + 0.5 * (7.0 * s).sin());
    let u2 = a3 + eps + (u2_0 - a3 - 2.0 * eps) * s;
    to_cartesian(axes, &EllipticPoint::new([u1, u2, u3_1], [1.0; 3]))
}

fn darboux_3d(config: &ExperimentConfig) -> Result<Outcome> {
    let axes = config.axes::<3>("axes")?;
    let u3_0 = config.f64("u3_0")?;
    let w = counts(config, Some("m"))?;
    let n = config.count("samples")?;
    let sol = solve_closure(axes, u3_0, w, ClosureMode::Darboux2)?;
    let rad = CharacteristicRadical::new(axes, sol.u2_0, u3_0)?;
    let formula = perimeter_formula(&rad, sol.u3_1, w, PerimeterVariant::Darb)?;
    let mut out = Outcome::default();
    let (mut gap, mut mismatched, mut residual) = (0.0f64, 0.0, 0.0f64);
    let mut first = None;
    for k in 0..n {
        let start = darboux_start(axes, sol.u2_0, sol.u3_1, k as f64 / n as f64)?;
        let poly = build_polygon(axes, &start, sol.u2_0, u3_0, w.m as usize, k)?;
        let measured = measure_counts(&poly, sol.u2_0);
        if measured != w {
            mismatched += 1.0;
        }
        let (r1, r2) = darboux_residuals(&rad, sol.u3_1, measured)?;
        residual = residual.max(r1.abs()).max(r2.abs());
        gap = gap.max(poly.closure_gap / poly.diameter);
        out.samples.push(sample(
            k,
            poly.perimeter,
            (poly.perimeter - formula) / formula,
            &[
                ("perimeter", poly.perimeter),
                ("closure_gap", poly.closure_gap),
                ("n", measured.n as f64),
                ("n_prime", measured.n_prime as f64),
                ("m", measured.m as f64),
                ("reflection_defect", poly.reflection_defect),
            ],
        ));
        first.get_or_insert(poly);
    }
    out.checks = vec![
        Check::below("closure_gap_over_diameter", gap, CLOSURE_TOL),
        Check::below("rationality_residual", residual, 1e-8),
        Check::equal("polygons_with_other_counts", mismatched, 0.0),
    ];
    out.summary = summary(&[("u2_0", sol.u2_0), ("u3_1", sol.u3_1), ("formula_perimeter", formula)]);
    let shells = [axes.map(|a| a - sol.u3_1), axes.map(|a| a - u3_0)];
    out.scene = first.map(|p| spatial_scene("Darboux polygon", &shells, &p));
    Ok(out)
}

fn staude(config: &ExperimentConfig) -> Result<Outcome> {
    let axes = config.axes::<3>("axes")?;
    let (u2_0, u3_0, u3_1) = (config.f64("u2_0")?, config.f64("u3_0")?, config.f64("u3_1")?);
    let n = config.count("samples")?;
    let rad = CharacteristicRadical::new(axes, u2_0, u3_0)?;
    let w = WindingCounts::new(2, 2, 1)?;
    let formula = perimeter_formula(&rad, u3_1, w, PerimeterVariant::Staud)?;
    let budget = curvature_budget(&rad, u3_1, w)?;
    let predicted_infeasible = budget < 0.0;
    let mut out = Outcome::default();
    let (mut flag_mismatch, mut joint, mut wrong_counts) = (0.0, 0.0f64, 0.0);
    let mut scene_thread = None;
    for k in 0..n {
        let azimuth = 0.1 + TAU * k as f64 / n as f64;
        match assemble_staude_thread(axes, u2_0, u3_0, u3_1, azimuth) {
            Ok(t) => {
                if predicted_infeasible {
                    flag_mismatch += 1.0;
                }
                if t.counts != w {
                    wrong_counts += 1.0;
                }
                joint = joint.max(t.joint_defect);
                out.samples.push(sample(
                    k,
                    t.total_length,
                    (t.total_length - formula) / formula,
                    &[
                        ("azimuth", azimuth),
                        ("length", t.total_length),
                        ("slack", t.slack),
                        ("joint_defect", t.joint_defect),
                        ("pieces", t.pieces.len() as f64),
                        ("infeasible", 0.0),
                    ],
                ));
                scene_thread.get_or_insert(t);
            }
            Err(Error::InfeasibleThread(_)) => {
                if !predicted_infeasible {
                    flag_mismatch += 1.0;
                }
                out.samples.push(sample(
                    k,
                    0.0,
                    0.0,
                    &[("azimuth", azimuth), ("length", 0.0), ("slack", budget), ("joint_defect", 0.0), ("pieces", 0.0), ("infeasible", 1.0)],
                ));
            }
            Err(e) => return Err(e),
        }
    }
    out.checks = vec![
        Check::equal("infeasible_flag_mismatches", flag_mismatch, 0.0),
        Check::below("joint_defect", joint, 1e-7),
        Check::equal("threads_with_other_counts", wrong_counts, 0.0),
    ];
    out.summary = summary(&[
        ("formula_length", formula),
        ("curvature_budget", budget),
        ("half_turn_criterion", half_turn_criterion(&rad)?),
    ]);
    if let Some(t) = scene_thread {
        let proj = Projection::default();
        let mut scene = Scene::new("Staude thread");
        scene.ellipsoid(axes.map(|a| a - u3_0), &proj, Style::Conic);
        scene.ellipsoid(axes.map(|a| a - u3_1), &proj, Style::Focal);
        for piece in &t.pieces {
            let style = match piece.kind {
                SegmentKind::Rectilinear => Style::Rectilinear,
                SegmentKind::Geodesic => Style::Geodesic,
                SegmentKind::Curvature => Style::Curvature,
            };
            let pts: Vec<Vec<f64>> = piece.points.iter().map(|p| p.iter().cloned().collect()).collect();
            scene.polyline3(&pts, &proj, style);
        }
        scene.dot(proj.project(t.pen.as_slice()));
        out.scene = Some(scene);
    }
    Ok(out)
}

fn geodesic(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let axes = config.axes::<3>("axes")?;
    let (u2_0, u3_0, length) = (config.f64("u2_0")?, config.f64("u3_0")?, config.f64("length")?);
    if !(length > 0.0) {
        return Err(Error::Config("`length`: must be positive".into()));
    }
    let n = config.count("samples")?;
    let rad = CharacteristicRadical::new(axes, u2_0, u3_0)?;
    let opts = OdeOptions::default();
    let mut out = Outcome::default();
    let mut speed: f64 = 0.0;
    let mut first_path = None;
    for k in 0..n {
        let phi = [(0.2 + 0.7 * k as f64) % TAU, (0.1 + 0.37 * k as f64) % TAU];
        let dir = [if k % 2 == 0 { 1.0 } else { -1.0 }, if k % 3 == 0 { -1.0 } else { 1.0 }];
        let start = GeodesicState::from_angles(&rad, phi, dir, 0.0);
        let path = integrate_geodesic(&rad, &start, length, &opts)?;
        let mut drift: f64 = 0.0;
        for (j, st) in path.states.iter().enumerate() {
            speed = speed.max((st.velocity(&rad).norm() - 1.0).abs());
            if j % 5 == 0 || j + 1 == path.states.len() {
                drift = drift.max(jacobi_constant(&rad, st, &start)?.abs());
            }
        }
        out.samples.push(sample(
            k,
            drift,
            drift,
            &[("phi1", phi[0]), ("phi2", phi[1]), ("jacobi_drift", drift), ("events", path.events.len() as f64)],
        ));
        first_path.get_or_insert(path);
    }
    let grad_n = config.count("grad_samples")?;
    let [a1, a2, a3] = axes;
    let mut grad: f64 = 0.0;
    for _ in 0..grad_n {
        let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.001..0.999));
        let u = [a2 + (a1 - a2) * t[0], a3 + (u2_0 - a3) * t[1], u3_0 - 1e-3 - 5.0 * t[2]];
        grad = grad.max((phi_gradient_norm_sq(&rad, &EllipticPoint::new(u, [1.0; 3]))? - 1.0).abs());
    }
    let umbilic_n = config.count("umbilic_samples")?;
    let u = umbilics(axes, u3_0);
    let ul = umbilic_length(axes, u3_0)?;
    let b = axes.map(|a| 1.0 / (a - u3_0));
    let normal = nalgebra::Vector3::new(b[0] * u[0][0], 0.0, b[2] * u[0][2]);
    let e1 = nalgebra::Vector3::new(0.0, 1.0, 0.0);
    let e2 = normal.cross(&e1).normalize();
    let mut umbilic: f64 = 0.0;
    for k in 0..umbilic_n {
        let theta = 0.3 + TAU * k as f64 / umbilic_n as f64;
        let v = e1 * theta.cos() + e2 * theta.sin();
        let v = crate::family::Point::from_column_slice(v.as_slice());
        let tr = integrate_cartesian_geodesic(axes, u3_0, &u[0], &v, ul, &opts)?;
        let y = tr.last().y;
        umbilic = umbilic.max(((y[0] - u[3][0]).powi(2) + y[1].powi(2) + (y[2] - u[3][2]).powi(2)).sqrt());
    }
    out.checks = vec![
        Check::below("unit_speed", speed, 1e-8),
        Check::below("eikonal", grad, 1e-10),
        Check::below("umbilic_to_umbilic", umbilic, 1e-6),
    ];
    out.summary = summary(&[("umbilic_length", ul)]);
    if let Some(path) = first_path {
        let proj = Projection::default();
        let mut scene = Scene::new("Geodesic on an ellipsoid");
        scene.ellipsoid(axes.map(|a| a - u3_0), &proj, Style::Conic);
        let pts: Vec<Vec<f64>> = path.points.iter().map(|p| p.iter().cloned().collect()).collect();
        scene.polyline3(&pts, &proj, Style::Geodesic);
        out.scene = Some(scene);
    }
    Ok(out)
}

fn closed_geodesic(config: &ExperimentConfig) -> Result<Outcome> {
    let axes = config.axes::<3>("axes")?;
    let u3_0 = config.f64("u3_0")?;
    let w = counts(config, None)?;
    let sol = solve_closure(axes, u3_0, w, ClosureMode::ClosedGeodesic)?;
    let rep = closed_geodesic_check(axes, u3_0, sol.u2_0, w, &OdeOptions::default())?;
    let measured = rep.measured_length.unwrap_or(f64::NAN);
    let gap = rep.closure_gap.unwrap_or(f64::INFINITY);
    let mut out = Outcome {
        samples: vec![sample(
            0,
            measured,
            measured - rep.predicted_length,
            &[("measured_length", measured), ("predicted_length", rep.predicted_length), ("closure_gap", gap)],
        )],
        checks: vec![Check::below("closure_gap", gap, CLOSURE_TOL), Check::below("rationality_residual", rep.residual.abs(), 1e-8)],
        summary: summary(&[("u2_0", sol.u2_0), ("residual", rep.residual)]),
        scene: None,
    };
    if let Some(path) = rep.path {
        let proj = Projection::default();
        let mut scene = Scene::new("Closed geodesic");
        scene.ellipsoid(axes.map(|a| a - u3_0), &proj, Style::Conic);
        let pts: Vec<Vec<f64>> = path.points.iter().map(|p| p.iter().cloned().collect()).collect();
        scene.polyline3(&pts, &proj, Style::Geodesic);
        out.scene = Some(scene);
    }
    Ok(out)
}

fn dualize(config: &ExperimentConfig) -> Result<Outcome> {
    let axes = config.list("axes")?;
    let iterations = config.count("iterations")?;
    let theta = config.f64("theta")?;
    let (poly, tangent_z, planar) = match axes.len() {
        2 => {
            let a = config.axes::<2>("axes")?;
            let (p, w) = (config.count("p")?, config.count("w")?);
            let z = poncelet_parameter(a, p, w)?;
            (chasles_polygon_2d(a, &vec![z; p], theta)?, 0.0, Some((a, z)))
        }
        3 => {
            let a = config.axes::<3>("axes")?;
            let u3_0 = config.f64("u3_0")?;
            let w = counts(config, Some("m"))?;
            let sol = solve_closure(a, u3_0, w, ClosureMode::Darboux2)?;
            let start = darboux_start(a, sol.u2_0, sol.u3_1, theta / TAU)?;
            (build_polygon(a, &start, sol.u2_0, u3_0, w.m as usize, 0)?, u3_0, None)
        }
        k => return Err(Error::Config(format!("`axes`: expected 2 or 3 entries, got {k}"))),
    };
    if !poly.closed {
        return Err(Error::Hypothesis(format!("initial polygon does not close (gap {:e})", poly.closure_gap)));
    }
    let base = poly.perimeter;
    let mut out = Outcome::default();
    let mut gap: f64 = 0.0;
    let mut current = poly.clone();
    let mut history = vec![poly];
    for k in 0..iterations {
        current = dualize_polygon(&axes, &current, tangent_z)?;
        gap = gap.max(current.closure_gap / current.diameter);
        out.samples.push(sample(
            k,
            current.perimeter,
            (current.perimeter - base) / base,
            &[("iteration", (k + 1) as f64), ("perimeter", current.perimeter), ("closure_gap", current.closure_gap)],
        ));
        if history.len() < 2 {
            history.push(current.clone());
        }
    }
    out.checks = vec![Check::below("closure_gap_over_diameter", gap, CLOSURE_TOL)];
    out.summary = summary(&[("initial_perimeter", base)]);
    out.scene = Some(match planar {
        Some((a, z)) => planar_scene("Polygon and its dual", a, &[z], &history.iter().collect::<Vec<_>>()),
        None => {
            let a: [f64; 3] = [axes[0], axes[1], axes[2]];
            let z = history[0].vertices[0].z;
            spatial_scene("Dual Darboux polygon", &[a.map(|v| v - z), a.map(|v| v - tangent_z)], &history[history.len() - 1])
        }
    });
    Ok(out)
}
