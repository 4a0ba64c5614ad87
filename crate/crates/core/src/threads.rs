//! Thread constructions: the planar Graves vertex with its constant excess,
//! Staude threads around an ellipsoid and mixed thread lengths.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::billiards::{tangent_lines_from_point, Segment, SegmentKind};
use crate::error::{Error, Result};
use crate::family::{ConfocalFamily, Line, Point};
use crate::gauss;
use crate::geodesic::{
    curvature_arc_length, curvature_point, integrate_geodesic, phase1, phase2, state_from_tangent, GeodesicPath,
    GeodesicState, Turning,
};
use crate::ode::OdeOptions;
use crate::quadrature::{CharacteristicRadical, WindingCounts};
use crate::rootfind::brent;

/// Tangency condition tolerance for the Graves vertex.
pub const TC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravesVertex {
    pub a1: f64,
    pub a2: f64,
    pub z: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl GravesVertex {
    /// Point of `Q_0` at angle `θ`.
    pub fn on_base(&self, theta: f64) -> Point {
        Point::from_vec(vec![self.a1.sqrt() * theta.cos(), self.a2.sqrt() * theta.sin()])
    }

    /// Point of `Q_z` at angle `θ`, the Ivory image of `on_base(θ)`.
    pub fn on_vertex_ellipse(&self, theta: f64) -> Point {
        Point::from_vec(vec![(self.a1 - self.z).sqrt() * theta.cos(), (self.a2 - self.z).sqrt() * theta.sin()])
    }

    /// Left side of `cos θ₀ √(1 − z/a₁) cos θ + sin θ₀ √(1 − z/a₂) sin θ = 1`, minus one.
    pub fn tangency_residual(&self, theta: f64) -> f64 {
        self.theta0.cos() * (1.0 - self.z / self.a1).sqrt() * theta.cos()
            + self.theta0.sin() * (1.0 - self.z / self.a2).sqrt() * theta.sin()
            - 1.0
    }
}

/// Contact angles `θ₁, θ₂` of the two tangents from the vertex `x_z⁰` to `Q_0`.
pub fn graves_vertex(a1: f64, a2: f64, z: f64, theta0: f64) -> Result<GravesVertex> {
    if !(z < 0.0) || !(a1 > a2 && a2 > 0.0) {
        return Err(Error::Range(format!("need a1 > a2 > 0 and z < 0, got ({a1}, {a2}, {z})")));
    }
    let (c0, s0) = (theta0.cos(), theta0.sin());
    let (r1, r2) = ((1.0 - z / a1).sqrt(), (1.0 - z / a2).sqrt());
    let w = s0 * s0 / a2 + c0 * c0 / a1;
    let q = (-z * w).sqrt();
    let den = 1.0 - z * w;
    let angle = |j: f64| {
        let c = (c0 * r1 - j * s0 * r2 * q) / den;
        let s = (s0 * r2 + j * c0 * r1 * q) / den;
        s.atan2(c)
    };
    Ok(GravesVertex { a1, a2, z, theta0, theta1: angle(-1.0), theta2: angle(1.0) })
}

/// `|x_z¹ − x_z²| − length_{Q_0}(x_0¹ x_0⁰ x_0²)`.
pub fn graves_excess(a1: f64, a2: f64, z: f64, theta0: f64) -> Result<f64> {
    let v = graves_vertex(a1, a2, z, theta0)?;
    let chord = (v.on_vertex_ellipse(v.theta1) - v.on_vertex_ellipse(v.theta2)).norm();
    let wrap = |d: f64| d - TAU * (d / TAU).round();
    let lo = theta0 + wrap(v.theta1 - theta0);
    let hi = theta0 + wrap(v.theta2 - theta0);
    let arc = gauss::integrate(
        |t: f64| (a1 * a2).sqrt() * (t.sin().powi(2) / a2 + t.cos().powi(2) / a1).sqrt(),
        lo,
        hi,
        1e-14,
    )?;
    Ok(chord - arc.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaudeParams {
    pub axes: [f64; 3],
    pub u2_0: f64,
    pub u3_0: f64,
    pub u3_1: f64,
}

#[derive(Debug, Clone)]
pub struct StaudeThread {
    pub params: StaudeParams,
    pub pen: Point,
    /// Pieces in the order of traversal from the pen and back.
    pub pieces: Vec<Segment>,
    pub total_length: f64,
    /// Measured `(n, n′, m)`.
    pub counts: WindingCounts,
    /// Budget `(J₁−J₂)`-units left to the lines of curvature.
    pub slack: f64,
    /// Largest endpoint or unit-tangent mismatch at a joint.
    pub joint_defect: f64,
}

/// Pen on `{u³ = u³₁}` at the given azimuth, halfway across the band
/// `a₃ < u² < u²₀` and above the plane `{x³ = 0}`.
pub fn staude_pen(params: &StaudeParams, azimuth: f64) -> Result<Point> {
    let [a1, a2, a3] = params.axes;
    let u1 = a2 + (a1 - a2) * azimuth.sin().powi(2);
    let u2 = 0.5 * (a3 + params.u2_0);
    let p = crate::elliptic::EllipticPoint::new([u1, u2, params.u3_1], [azimuth.cos(), azimuth.sin(), 1.0]);
    crate::elliptic::to_cartesian(params.axes, &p)
}

fn check_params(p: &StaudeParams) -> Result<CharacteristicRadical> {
    let [_, _, a3] = p.axes;
    if !(p.u3_1 < p.u3_0 && p.u3_0 < a3) {
        return Err(Error::Range(format!("need u3_1 < u3_0 < a3, got {} and {}", p.u3_1, p.u3_0)));
    }
    CharacteristicRadical::new(p.axes, p.u2_0, p.u3_0)
}

/// Chart angle `φ₁` of a point, `u¹ = a₂ + (a₁ − a₂) sin²φ₁` with the
/// quadrant given by the signs of `x¹, x²`.
fn azimuth_angle(fam: &ConfocalFamily, x: &Point) -> Result<f64> {
    let a = fam.axes();
    let u1 = fam.coordinates(x)?[0];
    let s = ((u1 - a[1]) / (a[0] - a[1])).clamp(0.0, 1.0).sqrt();
    let c = (1.0 - s * s).sqrt();
    Ok((x[1].signum() * s).atan2(x[0].signum() * c))
}

/// Unwrapped `φ₁` along the segment `p → q`, returned at `p` relative to `q`.
fn line_turn(fam: &ConfocalFamily, p: &Point, q: &Point) -> Result<f64> {
    const SAMPLES: usize = 512;
    let mut prev = azimuth_angle(fam, q)?;
    let mut total = 0.0;
    for k in (0..SAMPLES).rev() {
        let x = p + (q - p).scale(k as f64 / SAMPLES as f64);
        let a = azimuth_angle(fam, &x)?;
        let mut d = a - prev;
        d -= TAU * (d / TAU).round();
        total += d;
        prev = a;
    }
    Ok(total)
}

/// Integrate a geodesic from `start` to its first tangency with the line
/// of curvature, `skip` tangencies being passed first.
fn geodesic_to_touch(rad: &CharacteristicRadical, start: &GeodesicState, opts: &OdeOptions) -> Result<GeodesicPath> {
    let mut probe = 4.0 * (rad.axes[0] - rad.u3_0).sqrt();
    for _ in 0..8 {
        let path = integrate_geodesic(rad, start, probe, opts)?;
        if let Some(e) = path.events.iter().find(|e| e.kind == Turning::U2AtU20 && e.s > start.s + 1e-12) {
            return integrate_geodesic(rad, start, e.s - start.s, opts);
        }
        probe *= 2.0;
    }
    Err(Error::NotFound { reason: "geodesic never touches the line of curvature".into(), grid: Vec::new() })
}

fn geodesic_segment(path: &GeodesicPath, reversed: bool) -> Segment {
    let mut points = path.points.clone();
    if reversed {
        points.reverse();
    }
    Segment { kind: SegmentKind::Geodesic, points, length: path.end().s - path.states[0].s, contacts: Vec::new() }
}

fn curvature_segment(rad: &CharacteristicRadical, from: f64, to: f64, branch: f64) -> Result<Segment> {
    const SAMPLES: usize = 64;
    let points = (0..=SAMPLES).map(|k| curvature_point(rad, from + (to - from) * k as f64 / SAMPLES as f64, branch)).collect();
    Ok(Segment { kind: SegmentKind::Curvature, points, length: curvature_arc_length(rad, from, to)?, contacts: Vec::new() })
}

fn curvature_tangent(rad: &CharacteristicRadical, phi1: f64, branch: f64, dir: f64) -> Point {
    let h = 1e-6;
    (curvature_point(rad, phi1 + dir * h, branch) - curvature_point(rad, phi1 - dir * h, branch)).normalize()
}

/// Staude thread from `pen` using the tangent lines with indices `pair`
/// among `tangent_lines_from_point`, the thread leaving along the first and
/// returning along the second. `split ∈ [0, 1]` is the share of the
/// curvature budget given to the first line-of-curvature arc.
pub fn assemble_staude_thread_with(
    params: &StaudeParams,
    pen: &Point,
    pair: (usize, usize),
    split: f64,
    opts: &OdeOptions,
) -> Result<StaudeThread> {
    let rad = check_params(params)?;
    let fam = ConfocalFamily::new(params.axes.to_vec())?;
    let zs = [params.u2_0, params.u3_0];
    let lines = tangent_lines_from_point(&params.axes, pen, &zs)?;
    let pick = |i: usize| -> Result<&Line> {
        lines.get(i).ok_or_else(|| Error::Range(format!("line index {i} out of {}", lines.len())))
    };
    let (la, lb) = (pick(pair.0)?, pick(pair.1)?);
    let mut halves = Vec::new();
    for l in [la, lb] {
        let hits = fam.intersect_line(params.u3_0, l)?;
        let contact = crate::billiards::contact_point(&fam, params.u3_0, l)?;
        if hits.is_empty() && contact.t <= 0.0 {
            return Err(Error::NoRealTangent("line does not reach the ellipsoid".into()));
        }
        let (st, cos) = state_from_tangent(&rad, &contact.point, &l.dir)?;
        let g = geodesic_to_touch(&rad, &st, opts)?;
        halves.push((contact, st, cos, g));
    }
    let (ta, sta, _, ga) = &halves[0];
    let (tb, stb, _, gb) = &halves[1];
    let dir = sta.dir[0];
    if stb.dir[0] != -dir {
        return Err(Error::Hypothesis("both tangent lines wrap the ellipsoid the same way".into()));
    }
    let turn_a = line_turn(&fam, pen, &ta.point)?;
    let turn_b = line_turn(&fam, pen, &tb.point)?;
    let pen_a = sta.phi[0] + turn_a;
    let pen_b = stb.phi[0] + turn_b;
    let offset_b = TAU * ((pen_a + dir * TAU - pen_b) / TAU).round();
    let (end_a, end_b) = (ga.end(), gb.end());
    let a_phi = end_a.phi[0];
    let b_phi = end_b.phi[0] + offset_b;
    let branch_a = end_a.phi[1].sin().signum();
    let branch_b = end_b.phi[1].sin().signum();
    let budget = dir * phase1(&rad, a_phi, b_phi)?;
    let k = if branch_a != branch_b { phase2(&rad, FRAC_PI_2, 3.0 * FRAC_PI_2)? } else { 0.0 };
    let slack = budget - k;
    if slack < -1e-9 {
        return Err(Error::InfeasibleThread(format!("curvature budget {slack:e} is negative")));
    }
    let slack = slack.max(0.0);
    let mut pieces = Vec::new();
    let mut tangents = vec![(gap(&sta.velocity(&rad), &la.dir))];
    let mut touches = 0;
    let mut crossings = 0;
    for (l, c) in [(la, ta), (lb, tb)] {
        let h = crate::billiards::contact_point(&fam, params.u2_0, l)?;
        if h.t > 0.0 && h.t < c.t {
            touches += 1;
        }
        if pen[1].signum() != c.point[1].signum() {
            crossings += 1;
        }
    }
    let x2_events = |g: &GeodesicPath| g.events.iter().filter(|e| e.kind == Turning::U1AtA2).count() as u32;
    let arc_crossings = |from: f64, to: f64| ((from.max(to) / PI).floor() - (from.min(to) / PI).floor()).abs() as u32;
    crossings += x2_events(ga) + x2_events(gb);
    pieces.push(Segment {
        kind: SegmentKind::Rectilinear,
        points: vec![pen.clone(), ta.point.clone()],
        length: ta.t,
        contacts: Vec::new(),
    });
    pieces.push(geodesic_segment(ga, false));
    tangents.push(gap(&end_a.velocity(&rad), &curvature_tangent(&rad, a_phi, branch_a, dir)));
    let last_phi;
    if branch_a != branch_b {
        let target = split.clamp(0.0, 1.0) * slack;
        let beta = if target <= 0.0 {
            a_phi
        } else {
            let f = |x: f64| dir * phase1(&rad, a_phi, x).unwrap_or(f64::NAN) - target;
            brent(f, a_phi, a_phi + dir * TAU, 1e-14, 200)
                .ok_or_else(|| Error::NotFound { reason: "split point of the curvature budget".into(), grid: Vec::new() })?
        };
        pieces.push(curvature_segment(&rad, a_phi, beta, branch_a)?);
        crossings += arc_crossings(a_phi, beta);
        let start = GeodesicState::from_angles(&rad, [beta, end_a.phi[1]], [dir, end_a.dir[1]], 0.0);
        tangents.push(gap(&start.velocity(&rad), &curvature_tangent(&rad, beta, branch_a, dir)));
        let g3 = geodesic_to_touch(&rad, &start, opts)?;
        crossings += x2_events(&g3);
        let gamma = g3.end().phi[0];
        tangents.push(gap(&g3.end().velocity(&rad), &curvature_tangent(&rad, gamma, branch_b, dir)));
        pieces.push(geodesic_segment(&g3, false));
        pieces.push(curvature_segment(&rad, gamma, b_phi, branch_b)?);
        crossings += arc_crossings(gamma, b_phi);
        touches += 2;
        last_phi = b_phi;
    } else {
        pieces.push(curvature_segment(&rad, a_phi, b_phi, branch_a)?);
        crossings += arc_crossings(a_phi, b_phi);
        touches += 1;
        last_phi = b_phi;
    }
    tangents.push(gap(&(-end_b.velocity(&rad)), &curvature_tangent(&rad, last_phi, branch_b, dir)));
    pieces.push(geodesic_segment(gb, true));
    tangents.push(gap(&stb.velocity(&rad), &lb.dir));
    pieces.push(Segment {
        kind: SegmentKind::Rectilinear,
        points: vec![tb.point.clone(), pen.clone()],
        length: tb.t,
        contacts: Vec::new(),
    });
    let total_length = pieces.iter().map(|p| p.length).sum();
    let joint_defect = tangents.into_iter().fold(endpoint_defect(&pieces), f64::max);
    let counts = WindingCounts { n: crossings, n_prime: touches, m: 1 };
    Ok(StaudeThread { params: *params, pen: pen.clone(), pieces, total_length, counts, slack, joint_defect })
}

fn gap(a: &Point, b: &Point) -> f64 {
    (a.normalize() - b.normalize()).norm()
}

/// Largest endpoint mismatch between consecutive pieces.
fn endpoint_defect(pieces: &[Segment]) -> f64 {
    pieces
        .windows(2)
        .map(|w| (w[0].points.last().unwrap() - &w[1].points[0]).norm())
        .fold(0.0, f64::max)
}

/// Index pair of the Staude lines: a tangent line and its image under the
/// half-turn about the normal of the pen ellipsoid, which flips both free
/// signs.
pub const STAUDE_PAIR: (usize, usize) = (0, 3);

/// Staude thread for the pen at `azimuth` on `{u³ = u³₁}` (see `staude_pen`),
/// with the curvature budget split evenly.
pub fn assemble_staude_thread(axes: [f64; 3], u2_0: f64, u3_0: f64, u3_1: f64, azimuth: f64) -> Result<StaudeThread> {
    let params = StaudeParams { axes, u2_0, u3_0, u3_1 };
    let pen = staude_pen(&params, azimuth)?;
    assemble_staude_thread_with(&params, &pen, STAUDE_PAIR, 0.5, &OdeOptions::default())
}

/// Curvature budget of a thread in units of `∫ (u − u³₀) du/√Δ`:
/// `2 (n J₁ − n′ J₂ + m J₃)`. Negative values mean no thread of this shape
/// exists for the pen ellipsoid.
pub fn curvature_budget(rad: &CharacteristicRadical, u3_1: f64, w: WindingCounts) -> Result<f64> {
    Ok(2.0 * crate::quadrature::thread_residual(rad, u3_1, w)?)
}

/// Length `n I₁[P] − n′ I₂[P] + m I₃[P]` with `P = (u − u²₀)(u − u³₀)` of a
/// thread whose line-of-curvature arcs take the prescribed `budgets`, the
/// last arc absorbing the rest of the curvature budget.
pub fn mixed_thread_length(rad: &CharacteristicRadical, u3_1: f64, w: WindingCounts, budgets: &[f64]) -> Result<f64> {
    if budgets.iter().any(|b| !(*b >= 0.0)) {
        return Err(Error::Range(format!("budgets must be nonnegative: {budgets:?}")));
    }
    let residual = curvature_budget(rad, u3_1, w)?;
    let rest = residual - budgets.iter().sum::<f64>();
    if rest < -1e-9 * residual.abs().max(1.0) {
        return Err(Error::ClosureResidual { residual: rest });
    }
    rad.combination(&rad.p_length(), u3_1, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{perimeter_formula, solve_closure, ClosureMode, PerimeterVariant};
    use proptest::prelude::*;

    fn staude_params() -> StaudeParams {
        StaudeParams { axes: [3.0, 2.0, 1.0], u2_0: 1.5, u3_0: 0.5, u3_1: -0.5 }
    }

    #[test]
    fn graves_example_on_the_major_axis() {
        let v = graves_vertex(2.0, 1.0, -2.0, 0.0).unwrap();
        assert!((v.theta1 + FRAC_PI_2 / 2.0).abs() < 1e-14);
        assert!((v.theta2 - FRAC_PI_2 / 2.0).abs() < 1e-14);
    }

    #[test]
    fn graves_contacts_are_tangent_by_polarity() {
        for k in 0..40 {
            let theta0 = 0.157 * k as f64 + 0.01;
            let v = graves_vertex(2.0, 1.0, -1.3, theta0).unwrap();
            let pole = v.on_vertex_ellipse(theta0);
            for th in [v.theta1, v.theta2] {
                assert!(v.tangency_residual(th).abs() < TC_TOL);
                let c = v.on_base(th);
                // c lies on the polar line of the vertex with respect to Q_0
                let polar = pole[0] * c[0] / v.a1 + pole[1] * c[1] / v.a2 - 1.0;
                assert!(polar.abs() < 1e-12, "polar residual {polar}");
            }
            let (p, q, m) = (v.on_vertex_ellipse(v.theta1), v.on_vertex_ellipse(v.theta2), v.on_base(theta0));
            let cross = (q[0] - p[0]) * (m[1] - p[1]) - (q[1] - p[1]) * (m[0] - p[0]);
            assert!(cross.abs() < 1e-9 * (q - &p).norm());
        }
    }

    #[test]
    fn graves_reflection_swaps_contacts() {
        for theta0 in [0.3, 1.1, 2.5, 4.0] {
            let v = graves_vertex(2.0, 1.0, -0.7, theta0).unwrap();
            let w = graves_vertex(2.0, 1.0, -0.7, -theta0).unwrap();
            let same = |a: f64, b: f64| (a - b - TAU * ((a - b) / TAU).round()).abs() < 1e-12;
            assert!(same(w.theta1, -v.theta2) && same(w.theta2, -v.theta1));
        }
    }

    #[test]
    fn graves_excess_is_constant() {
        for (a1, a2, z) in [(2.0, 1.0, -1.0), (5.0, 1.5, -0.3), (1.2, 1.0, -4.0)] {
            let mut tangent = 0.0;
            let values: Vec<f64> = (0..256)
                .map(|k| {
                    let theta0 = TAU * k as f64 / 256.0;
                    let v = graves_vertex(a1, a2, z, theta0).unwrap();
                    tangent += (v.on_vertex_ellipse(theta0) - v.on_base(v.theta1)).norm() / 256.0;
                    graves_excess(a1, a2, z, theta0).unwrap()
                })
                .collect();
            let spread = values.iter().cloned().fold(f64::MIN, f64::max) - values.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread < 1e-8 * tangent, "spread {spread:e} for {:?}", (a1, a2, z));
        }
    }

    #[test]
    fn graves_excess_is_positive_and_vanishes_at_zero() {
        let mut prev = 0.0;
        for z in [-1e-6, -1e-3, -0.1, -1.0, -10.0] {
            let e = graves_excess(2.0, 1.0, z, 0.4).unwrap();
            assert!(e > prev, "excess {e} at z = {z}");
            prev = e;
        }
        assert!(graves_excess(2.0, 1.0, -1e-10, 0.4).unwrap() < 1e-7);
        assert!(graves_vertex(2.0, 1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn staude_length_matches_the_formula() {
        let p = staude_params();
        let rad = CharacteristicRadical::new(p.axes, p.u2_0, p.u3_0).unwrap();
        let formula = perimeter_formula(&rad, p.u3_1, WindingCounts::new(2, 2, 1).unwrap(), PerimeterVariant::Staud).unwrap();
        for az in [0.4, 1.3, 2.2, 4.0] {
            let t = assemble_staude_thread(p.axes, p.u2_0, p.u3_0, p.u3_1, az).unwrap();
            assert!((t.total_length - formula).abs() < 1e-6 * formula, "az {az}: {} vs {formula}", t.total_length);
            assert!(t.joint_defect < 1e-7, "joint defect {:e}", t.joint_defect);
            assert_eq!(t.counts, WindingCounts::new(2, 2, 1).unwrap());
            assert!(t.pieces.iter().filter(|s| s.kind == SegmentKind::Rectilinear).count() == 2);
            assert!(t.pieces.iter().filter(|s| s.kind == SegmentKind::Curvature).count() <= 2);
        }
    }

    #[test]
    fn staude_length_is_constant_around_the_pen_ellipsoid() {
        let p = staude_params();
        let lengths: Vec<f64> = (0..16)
            .map(|k| assemble_staude_thread(p.axes, p.u2_0, p.u3_0, p.u3_1, 0.1 + TAU * k as f64 / 16.0).unwrap().total_length)
            .collect();
        let spread = lengths.iter().cloned().fold(f64::MIN, f64::max) - lengths.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-6 * lengths[0], "spread {spread:e}");
    }

    #[test]
    fn mirrored_pair_and_split_do_not_change_the_length() {
        let p = staude_params();
        let pen = staude_pen(&p, 1.3).unwrap();
        let opts = OdeOptions::default();
        let base = assemble_staude_thread_with(&p, &pen, STAUDE_PAIR, 0.5, &opts).unwrap().total_length;
        for (pair, split) in [((1, 2), 0.5), ((0, 3), 0.0), ((0, 3), 1.0), ((3, 0), 0.2)] {
            let t = assemble_staude_thread_with(&p, &pen, pair, split, &opts).unwrap();
            assert!((t.total_length - base).abs() < 1e-7 * base, "{pair:?} {split}: {}", t.total_length);
        }
    }

    #[test]
    fn staude_pieces_follow_their_constraints() {
        let p = staude_params();
        let t = assemble_staude_thread(p.axes, p.u2_0, p.u3_0, p.u3_1, 1.3).unwrap();
        let fam = ConfocalFamily::new(p.axes.to_vec()).unwrap();
        for piece in &t.pieces {
            match piece.kind {
                SegmentKind::Curvature => {
                    for x in &piece.points {
                        let u = fam.coordinates(x).unwrap();
                        assert!((u[1] - p.u2_0).abs() < 1e-8 && (u[2] - p.u3_0).abs() < 1e-8, "{u:?}");
                    }
                    // polyline oracle for the arc length
                    let poly: f64 = piece.points.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum();
                    assert!((poly - piece.length).abs() < 1e-3 * piece.length.max(1e-3));
                }
                SegmentKind::Geodesic => {
                    for x in piece.points.iter().step_by(7) {
                        assert!((fam.coordinates(x).unwrap()[2] - p.u3_0).abs() < 1e-8);
                    }
                }
                SegmentKind::Rectilinear => {
                    let line = Line::through(&piece.points[0], &piece.points[1]).unwrap();
                    assert!(fam.tangency_spectrum(&line).unwrap().mismatch(&[p.u2_0, p.u3_0]) < 1e-8);
                }
            }
        }
    }

    #[test]
    fn staude_budget_matches_the_half_turn_criterion() {
        let p = staude_params();
        let rad = CharacteristicRadical::new(p.axes, p.u2_0, p.u3_0).unwrap();
        let t = assemble_staude_thread(p.axes, p.u2_0, p.u3_0, p.u3_1, 0.7).unwrap();
        let budget = curvature_budget(&rad, p.u3_1, WindingCounts::new(2, 2, 1).unwrap()).unwrap();
        assert!((t.slack - budget).abs() < 1e-7 * budget, "{} vs {budget}", t.slack);
        assert!(crate::quadrature::half_turn_criterion(&rad).unwrap() > 0.0);
    }

    #[test]
    fn staude_rejects_bad_parameters() {
        assert!(assemble_staude_thread([3.0, 2.0, 1.0], 1.5, 0.5, 0.7, 0.3).is_err());
        assert!(assemble_staude_thread([3.0, 2.0, 1.0], 2.5, 0.5, -0.5, 0.3).is_err());
    }

    #[test]
    fn mixed_length_reductions() {
        let p = staude_params();
        let rad = CharacteristicRadical::new(p.axes, p.u2_0, p.u3_0).unwrap();
        let w = WindingCounts::new(2, 2, 1).unwrap();
        let staud = perimeter_formula(&rad, p.u3_1, w, PerimeterVariant::Staud).unwrap();
        let budget = curvature_budget(&rad, p.u3_1, w).unwrap();
        for split in [0.0, 0.3, 1.0] {
            let l = mixed_thread_length(&rad, p.u3_1, w, &[split * budget]).unwrap();
            assert!((l - staud).abs() < 1e-12 * staud);
        }
        assert!(matches!(mixed_thread_length(&rad, p.u3_1, w, &[budget + 1.0]), Err(Error::ClosureResidual { .. })));
        assert!(mixed_thread_length(&rad, p.u3_1, w, &[-1.0]).is_err());

        let w = WindingCounts::new(4, 6, 0).unwrap();
        let sol = solve_closure([3.0, 2.0, 1.0], 0.5, w, ClosureMode::ClosedGeodesic).unwrap();
        let rad = CharacteristicRadical::new([3.0, 2.0, 1.0], sol.u2_0, 0.5).unwrap();
        let l = mixed_thread_length(&rad, 0.0, w, &[]).unwrap();
        let darb1 = perimeter_formula(&rad, 0.0, w, PerimeterVariant::Darb1).unwrap();
        assert!((l - darb1).abs() < 1e-9 * darb1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn graves_excess_is_constant_for_random_parameters(a2 in 0.5f64..2.0, gap in 0.2f64..3.0, z in -3.0f64..-0.05, t in 0.0f64..TAU) {
            let a1 = a2 + gap;
            let e0 = graves_excess(a1, a2, z, 0.0).unwrap();
            let e1 = graves_excess(a1, a2, z, t).unwrap();
            prop_assert!((e0 - e1).abs() < 1e-9 * (1.0 + e0.abs()));
        }
    }
}
