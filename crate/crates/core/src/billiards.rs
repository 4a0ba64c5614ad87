//! Polygons whose sides are common tangents of fixed confocal quadrics and
//! whose vertices reflect on other members of the family.

use crate::error::{Error, Result};
use crate::family::{reflect, ConfocalFamily, Line, Point, MERGE_TOL};
use crate::quadrature::{RootRadical, WindingCounts};
use crate::rootfind::brent;
use crate::poly::Poly;

/// Relative closure tolerance (times the polygon diameter).
pub const CLOSURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Rectilinear,
    Geodesic,
    Curvature,
}

/// A point where a segment touches the quadric `Q_z`, at arc parameter `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    pub z: f64,
    pub t: f64,
    pub point: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Polyline samples; a rectilinear segment holds its two endpoints.
    pub points: Vec<Point>,
    pub length: f64,
    pub contacts: Vec<Contact>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: Point,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalThread {
    pub vertices: Vec<Vertex>,
    pub segments: Vec<Segment>,
    /// The quadrics every rectilinear segment is tangent to.
    pub tangent_zs: Vec<f64>,
    /// Octant signs of each vertex.
    pub signs: Vec<Vec<f64>>,
    /// Point reached after the last segment.
    pub end: Point,
    pub closure_gap: f64,
    pub diameter: f64,
    pub perimeter: f64,
    /// Smallest step count after which the polygon returns to its start.
    pub period: Option<usize>,
    pub closed: bool,
    /// Largest tangential mismatch of the reflection law over the vertices.
    pub reflection_defect: f64,
    /// Largest tangency spectrum mismatch over the segments.
    pub tangency_defect: f64,
}

fn family_of(axes: &[f64]) -> Result<ConfocalFamily> {
    ConfocalFamily::new(axes.to_vec())
}

/// All real lines through `x` tangent to every quadric in `tangent_zs`.
///
/// In the orthonormal frame of normals to the confocal quadrics through
/// `x`, the tangent cone to `Q_z` is `Σ v_i² / (u^i − z) = 0`. With one
/// quadric fewer than the dimension the cones meet in the lines
/// `v_i² ∝ Π_z (u^i − z) / Π_{j≠i} (u^i − u^j)`, one for each choice of
/// signs. Every direction is oriented into the ellipsoid through `x`; the
/// sign patterns of the remaining components are enumerated with `+` first.
pub fn tangent_lines_from_point(axes: &[f64], x: &Point, tangent_zs: &[f64]) -> Result<Vec<Line>> {
    let fam = family_of(axes)?;
    let d = fam.dim();
    if tangent_zs.len() + 1 != d {
        return Err(Error::Range(format!("{} tangent quadrics given in dimension {d}", tangent_zs.len())));
    }
    for (i, a) in tangent_zs.iter().enumerate() {
        fam.check_z(*a)?;
        for b in &tangent_zs[i + 1..] {
            if (a - b).abs() <= MERGE_TOL {
                return Err(Error::ConeDegeneracy(format!("tangent quadrics z = {a} and z = {b} coincide")));
            }
        }
    }
    let (u, normals) = fam.coordinate_frame(x)?;
    for i in 0..d {
        for j in i + 1..d {
            if (u[i] - u[j]).abs() <= 1e-9 * (1.0 + u[i].abs()) {
                return Err(Error::ConeDegeneracy(format!("point lies on a focal set: u = {u:?}")));
            }
        }
    }
    let weights: Vec<f64> = (0..d)
        .map(|i| {
            let num: f64 = tangent_zs.iter().map(|z| u[i] - z).product();
            let den: f64 = (0..d).filter(|&j| j != i).map(|j| u[i] - u[j]).product();
            num / den
        })
        .collect();
    let sign = weights.iter().map(|w| w.signum()).find(|s| *s != 0.0).unwrap_or(1.0);
    if weights.iter().any(|w| w * sign < 0.0) {
        return Err(Error::NoRealTangent(format!("cones through {x:?} meet in complex lines only")));
    }
    let roots: Vec<f64> = weights.iter().map(|w| (w * sign).sqrt()).collect();
    let mut lines = Vec::with_capacity(1 << (d - 1));
    for pattern in 0..1usize << (d - 1) {
        let mut v = normals[d - 1].scale(-roots[d - 1]);
        for i in 0..d - 1 {
            let s = if pattern >> (d - 2 - i) & 1 == 0 { 1.0 } else { -1.0 };
            v += normals[i].scale(s * roots[i]);
        }
        lines.push(Line::new(x.clone(), v)?);
    }
    Ok(lines)
}

/// Point of contact of `line` with `Q_z`, at `t = −β/α`.
pub fn contact_point(fam: &ConfocalFamily, z: f64, line: &Line) -> Result<Contact> {
    fam.check_z(z)?;
    let (mut alpha, mut beta) = (0.0, 0.0);
    for ((a, b), d) in fam.axes().iter().zip(line.base.iter()).zip(line.dir.iter()) {
        alpha += d * d / (a - z);
        beta += b * d / (a - z);
    }
    let t = -beta / alpha;
    Ok(Contact { z, t, point: line.at(t) })
}

/// Outgoing direction at a vertex `w` of `Q_zv` for the incoming unit
/// direction `d_in`: the tangent line closest to the specular reflection.
/// Returns it with the tangential defect of the reflection law.
fn outgoing(fam: &ConfocalFamily, tangent_zs: &[f64], zv: f64, w: &Point, d_in: &Point) -> Result<(Point, f64)> {
    let normal = fam.normal_raw(zv, w)?;
    let spec = reflect(d_in, &normal)?;
    let candidates = tangent_lines_from_point(fam.axes(), w, tangent_zs)?;
    let best = candidates
        .iter()
        .map(|l| (l.dir.dot(&spec), l))
        .max_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap())
        .ok_or_else(|| Error::NoRealTangent("no candidate line at vertex".into()))?;
    let out = best.1.dir.scale(best.0.signum());
    Ok((out.clone(), reflection_defect(&normal, d_in, &out)))
}

/// Tangential component of `out − in`, which vanishes for a specular reflection.
pub fn reflection_defect(normal: &Point, d_in: &Point, d_out: &Point) -> f64 {
    let n = normal.normalize();
    let r = d_out - d_in;
    (&r - n.scale(n.dot(&r))).norm()
}

fn octant(x: &Point) -> Vec<f64> {
    x.iter().map(|c| if *c < 0.0 { -1.0 } else { 1.0 }).collect()
}

/// Trace `steps` chords from `start` on `Q_{vertex_zs[0]}` along `dir`,
/// the k-th vertex lying on `Q_{vertex_zs[k mod len]}`.
fn trace(
    fam: &ConfocalFamily,
    tangent_zs: &[f64],
    vertex_zs: &[f64],
    start: Point,
    dir: Point,
    steps: usize,
) -> Result<PolygonalThread> {
    if steps == 0 || vertex_zs.is_empty() {
        return Err(Error::Range("a polygon needs at least one step and one vertex quadric".into()));
    }
    let mut vertices = vec![Vertex { point: start.clone(), z: vertex_zs[0] }];
    let mut segments = Vec::with_capacity(steps);
    let mut d = dir.normalize();
    let (mut refl, mut tang) = (0.0f64, 0.0f64);
    let mut current = start.clone();
    for k in 0..steps {
        let zn = vertex_zs[(k + 1) % vertex_zs.len()];
        let line = Line::new(current.clone(), d.clone())?;
        let hits = fam.intersect_line(zn, &line)?;
        let t = hits.last().map(|h| h.0).unwrap_or(0.0);
        if t <= 1e-12 {
            return Err(Error::NoRealTangent(format!("chord from vertex {k} does not reach Q_{zn}")));
        }
        let w = line.at(t);
        tang = tang.max(fam.tangency_spectrum(&line)?.mismatch(tangent_zs));
        let contacts = tangent_zs.iter().map(|z| contact_point(fam, *z, &line)).collect::<Result<Vec<_>>>()?;
        segments.push(Segment {
            kind: SegmentKind::Rectilinear,
            points: vec![current.clone(), w.clone()],
            length: t,
            contacts,
        });
        if k + 1 < steps {
            let (out, defect) = outgoing(fam, tangent_zs, zn, &w, &d)?;
            refl = refl.max(defect);
            d = out;
            vertices.push(Vertex { point: w.clone(), z: zn });
        }
        current = w;
    }
    let mut diameter: f64 = 0.0;
    for (i, a) in vertices.iter().enumerate() {
        for b in &vertices[i + 1..] {
            diameter = diameter.max((&a.point - &b.point).norm());
        }
    }
    if vertices.len() == 1 {
        diameter = (&current - &start).norm();
    }
    let closure_gap = (&current - &start).norm();
    let tol = CLOSURE_TOL * diameter.max(f64::MIN_POSITIVE);
    let back = |k: usize| if k == steps { closure_gap } else { (&vertices[k].point - &start).norm() };
    let period = (1..=steps)
        .filter(|k| steps % k == 0 && vertex_zs[k % vertex_zs.len()] == vertex_zs[0])
        .find(|&k| back(k) < tol);
    let perimeter = segments.iter().map(|s| s.length).sum();
    Ok(PolygonalThread {
        signs: vertices.iter().map(|v| octant(&v.point)).collect(),
        vertices,
        segments,
        tangent_zs: tangent_zs.to_vec(),
        end: current,
        closure_gap,
        diameter,
        perimeter,
        period,
        closed: period == Some(steps),
        reflection_defect: refl,
        tangency_defect: tang,
    })
}

/// Darboux polygon: `steps` chords tangent to `{u² = u²₀}` and `{u³ = u³₀}`
/// reflecting on the ellipsoid `{u³ = u³₁}` through `start`.
///
/// `first_branch` picks the first chord among the tangent lines in the
/// order of `tangent_lines_from_point`; later chords follow by continuity.
pub fn build_polygon(
    axes: [f64; 3],
    start: &Point,
    u2_0: f64,
    u3_0: f64,
    steps: usize,
    first_branch: usize,
) -> Result<PolygonalThread> {
    let fam = family_of(&axes)?;
    let u = fam.coordinates(start)?;
    let u3_1 = u[2];
    if u3_1 >= u3_0 {
        return Err(Error::Range(format!("start lies inside Q_{u3_0} (u3 = {u3_1})")));
    }
    let zs = [u2_0, u3_0];
    let lines = tangent_lines_from_point(&axes, start, &zs)?;
    let first = &lines[first_branch % lines.len()];
    trace(&fam, &zs, &[u3_1], start.clone(), first.dir.clone(), steps)
}

/// Measured winding counts of a Darboux polygon: `n` chords crossing
/// `{x² = 0}`, `n′` chords touching `{u² = u²₀}` between their endpoints,
/// `m` chords.
pub fn measure_counts(poly: &PolygonalThread, u2_0: f64) -> WindingCounts {
    let mut n = 0;
    let mut n_prime = 0;
    for s in &poly.segments {
        let (a, b) = (&s.points[0], &s.points[s.points.len() - 1]);
        if a[1].signum() != b[1].signum() {
            n += 1;
        }
        if s.contacts.iter().any(|c| (c.z - u2_0).abs() <= MERGE_TOL && c.t > 0.0 && c.t < s.length) {
            n_prime += 1;
        }
    }
    WindingCounts { n, n_prime, m: poly.segments.len() as u32 }
}

/// Polygon circumscribed about the ellipse `Q_0` of `axes` with the j-th
/// vertex on `Q_{zs[j]}`, starting from the tangent at angle `theta`.
pub fn chasles_polygon_2d(axes: [f64; 2], zs: &[f64], theta: f64) -> Result<PolygonalThread> {
    if zs.is_empty() || zs.iter().any(|z| *z >= 0.0) {
        return Err(Error::Range("vertex parameters must be negative".into()));
    }
    let fam = family_of(&axes)?;
    let (s1, s2) = (axes[0].sqrt(), axes[1].sqrt());
    let y = Point::from_vec(vec![s1 * theta.cos(), s2 * theta.sin()]);
    let tangent = Point::from_vec(vec![-s1 * theta.sin(), s2 * theta.cos()]);
    let line = Line::new(y, tangent)?;
    let hits = fam.intersect_line(zs[0], &line)?;
    let (_, v1) = hits.last().cloned().ok_or_else(|| Error::NoRealTangent("tangent misses the first ellipse".into()))?;
    let (out, _) = outgoing(&fam, &[0.0], zs[0], &v1, &line.dir)?;
    trace(&fam, &[0.0], zs, v1, out, zs.len())
}

/// `Δ(u) = −(u − a₁)(u − a₂)(u − z′)` for lines tangent to `Q_{z′}` in the plane.
pub fn planar_radical(axes: [f64; 2], z_tangent: f64) -> Result<RootRadical> {
    RootRadical::new(vec![axes[0], axes[1], z_tangent], -1.0)
}

/// Parameter `z < 0` for which `p`-gons circumscribed about `Q_0` and
/// inscribed in `Q_z` close after `w` turns: `2w I₁ = p I_z`.
pub fn poncelet_parameter(axes: [f64; 2], p: usize, w: usize) -> Result<f64> {
    if p <= 2 * w || w == 0 {
        return Err(Error::Range(format!("no {p}-gon winding {w} times")));
    }
    let rad = planar_radical(axes, 0.0)?;
    let one = Poly::new(vec![1.0]);
    let i1 = rad.integrate(&one, axes[1], axes[0])?;
    let f = |z: f64| match rad.integrate(&one, z, 0.0) {
        Ok(iz) => 2.0 * w as f64 * i1 - p as f64 * iz,
        Err(_) => f64::NAN,
    };
    let mut lo = -axes[0];
    let mut k = 0;
    while f(lo) >= 0.0 {
        lo *= 2.0;
        k += 1;
        if k > 60 {
            return Err(Error::NotFound { reason: "no sign change of the Poncelet residual".into(), grid: Vec::new() });
        }
    }
    let hi = -1e-12 * axes[0];
    brent(f, lo, hi, 1e-15, 200)
        .ok_or_else(|| Error::NotFound { reason: "Poncelet residual has no bracketed root".into(), grid: Vec::new() })
}

/// Perimeter of a closed `p`-gon circumscribed about `Q_0` with vertices on
/// `Q_z` after `w` turns: `2w I₁[u] − p I_z[u]`.
pub fn poncelet_perimeter(axes: [f64; 2], z: f64, p: usize, w: usize) -> Result<f64> {
    let rad = planar_radical(axes, 0.0)?;
    let u = Poly::new(vec![0.0, 1.0]);
    Ok(2.0 * w as f64 * rad.integrate(&u, axes[1], axes[0])? - p as f64 * rad.integrate(&u, z, 0.0)?)
}

/// Exchange vertices and points of contact with `Q_{tangent_z}` through the
/// Ivory affinity, then retrace the new polygon and audit it.
///
/// The new j-th vertex is the image on the vertex quadric of the contact
/// point of the j-th side. The retraced polygon must close, pass through
/// every predicted vertex and keep the perimeter.
pub fn dualize_polygon(axes: &[f64], poly: &PolygonalThread, tangent_z: f64) -> Result<PolygonalThread> {
    if !poly.closed {
        return Err(Error::Hypothesis("only closed polygons can be dualized".into()));
    }
    let fam = family_of(axes)?;
    let p = poly.segments.len();
    let mut predicted = Vec::with_capacity(p);
    let mut zs = Vec::with_capacity(p);
    for (j, s) in poly.segments.iter().enumerate() {
        let c = s
            .contacts
            .iter()
            .find(|c| (c.z - tangent_z).abs() <= MERGE_TOL)
            .ok_or_else(|| Error::Hypothesis(format!("side {j} is not tangent to Q_{tangent_z}")))?;
        let zv = poly.vertices[j].z;
        predicted.push(fam.ivory(&c.point, tangent_z, zv)?);
        zs.push(zv);
    }
    let dir = if p > 1 { &predicted[1] - &predicted[0] } else { poly.segments[0].points[1].clone() - &predicted[0] };
    let dual = trace(&fam, &poly.tangent_zs, &zs, predicted[0].clone(), dir, p)?;
    let tol = CLOSURE_TOL * dual.diameter;
    let deviation = dual
        .vertices
        .iter()
        .zip(&predicted)
        .map(|(v, q)| (&v.point - q).norm())
        .fold(0.0, f64::max);
    if deviation > tol || !dual.closed {
        return Err(Error::Hypothesis(format!(
            "dual polygon misses its predicted vertices by {deviation:e} (closure gap {:e})",
            dual.closure_gap
        )));
    }
    if (dual.perimeter - poly.perimeter).abs() > CLOSURE_TOL * poly.perimeter {
        return Err(Error::Hypothesis(format!(
            "dual perimeter {} differs from {}",
            dual.perimeter, poly.perimeter
        )));
    }
    Ok(dual)
}
