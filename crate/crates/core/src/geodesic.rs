//! Geodesics on the ellipsoid `{u³ = u³₀}` whose tangents touch `{u² = u²₀}`.
//!
//! The integration runs in angle variables
//! `u¹ = a₂ + (a₁ − a₂) sin²φ₁`, `u² = a₃ + (u²₀ − a₃) sin²φ₂`,
//! which are smooth through the turning values.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;

use crate::elliptic::{metric_coeffs, EllipticPoint};
use crate::error::{Error, Result};
use crate::family::Point;
use crate::gauss;
use crate::ode::{dopri5, hermite, OdeOptions, Trajectory};
use crate::quadrature::{perimeter_formula, thread_residual, CharacteristicRadical, PerimeterVariant, WindingCounts};
use crate::rootfind::brent;

/// Closure residual below which a geodesic is integrated and its gap reported.
pub const CLOSURE_TOL: f64 = 1e-9;

/// Signs `ε_k` of the coordinate differentials and octant signs `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignState {
    pub eps: [f64; 3],
    pub sigma: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicState {
    /// `(u¹, u²)`; `u³ = u³₀`.
    pub u: [f64; 2],
    pub phi: [f64; 2],
    /// Direction of motion of `φ₁, φ₂`.
    pub dir: [f64; 2],
    pub signs: SignState,
    pub s: f64,
}

fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn coords(rad: &CharacteristicRadical, phi: [f64; 2]) -> [f64; 2] {
    let [a1, a2, a3] = rad.axes;
    [a2 + (a1 - a2) * phi[0].sin().powi(2), a3 + (rad.u2_0 - a3) * phi[1].sin().powi(2)]
}

impl GeodesicState {
    pub fn from_angles(rad: &CharacteristicRadical, phi: [f64; 2], dir: [f64; 2], s: f64) -> Self {
        let u = coords(rad, phi);
        let eps = [dir[0] * sgn((2.0 * phi[0]).sin()), dir[1] * sgn((2.0 * phi[1]).sin()), 1.0];
        let sigma = [sgn(phi[0].cos()), sgn(phi[0].sin()), sgn(phi[1].sin())];
        Self { u, phi, dir, signs: SignState { eps, sigma }, s }
    }

    /// Start from elliptic coordinates on the ellipsoid, octant signs and `ε₁, ε₂`.
    pub fn from_elliptic(rad: &CharacteristicRadical, u: [f64; 2], sigma: [f64; 3], eps: [f64; 2]) -> Result<Self> {
        let [a1, a2, a3] = rad.axes;
        if !(a2..=a1).contains(&u[0]) || !(a3..=rad.u2_0).contains(&u[1]) {
            return Err(Error::Range(format!("({}, {}) is outside [a2, a1] x [a3, u2_0]", u[0], u[1])));
        }
        let s1 = ((u[0] - a2) / (a1 - a2)).sqrt().min(1.0);
        let s2 = ((u[1] - a3) / (rad.u2_0 - a3)).sqrt().min(1.0);
        let phi1 = (sgn(sigma[1]) * s1).atan2(sgn(sigma[0]) * (1.0 - s1 * s1).sqrt());
        let phi2 = (sgn(sigma[2]) * s2).asin();
        let dir = [eps[0] * sgn((2.0 * phi1).sin()), eps[1] * sgn((2.0 * phi2).sin())];
        Ok(Self::from_angles(rad, [phi1, phi2], dir, 0.0))
    }

    pub fn elliptic(&self, rad: &CharacteristicRadical) -> EllipticPoint {
        EllipticPoint::new([self.u[0], self.u[1], rad.u3_0], self.signs.sigma)
    }

    pub fn cartesian(&self, rad: &CharacteristicRadical) -> Point {
        let (x, _) = cartesian_and_jacobian(rad, self.phi);
        DVector::from_row_slice(&x)
    }

    /// Unit tangent `dx/ds`.
    pub fn velocity(&self, rad: &CharacteristicRadical) -> Point {
        let (_, jac) = cartesian_and_jacobian(rad, self.phi);
        let d = rhs(rad, self.dir, &self.phi);
        DVector::from_fn(3, |i, _| jac[i][0] * d[0] + jac[i][1] * d[1])
    }
}

/// Cartesian point and `∂x/∂φ` in the angle chart.
fn cartesian_and_jacobian(rad: &CharacteristicRadical, phi: [f64; 2]) -> ([f64; 3], [[f64; 2]; 3]) {
    let [a1, a2, a3] = rad.axes;
    let (u20, u30) = (rad.u2_0, rad.u3_0);
    let [u1, u2] = coords(rad, phi);
    let (s1, c1) = phi[0].sin_cos();
    let (s2, c2) = phi[1].sin_cos();
    let du1 = (a1 - a2) * (2.0 * phi[0]).sin();
    let du2 = (u20 - a3) * (2.0 * phi[1]).sin();
    let r1 = ((a1 - u2) * (a1 - u30) / (a1 - a3)).sqrt();
    let r2 = ((a2 - u2) * (a2 - u30) / (a2 - a3)).sqrt();
    let r3 = ((u20 - a3) * (u1 - a3) * (a3 - u30) / ((a1 - a3) * (a2 - a3))).sqrt();
    let dr1 = -(a1 - u30) / ((a1 - a3) * 2.0 * r1);
    let dr2 = -(a2 - u30) / ((a2 - a3) * 2.0 * r2);
    let dr3 = r3 / (2.0 * (u1 - a3));
    (
        [c1 * r1, s1 * r2, s2 * r3],
        [[-s1 * r1, c1 * dr1 * du2], [c1 * r2, s1 * dr2 * du2], [s2 * dr3 * du1, c2 * r3]],
    )
}

fn rhs(rad: &CharacteristicRadical, dir: [f64; 2], phi: &[f64; 2]) -> [f64; 2] {
    let [a1, a2, a3] = rad.axes;
    let (u20, u30) = (rad.u2_0, rad.u3_0);
    let [u1, u2] = coords(rad, *phi);
    let d = u1 - u2;
    [
        dir[0] * ((u1 - u20) * (u1 - a3) / (u1 - u30)).sqrt() / d,
        dir[1] * ((a1 - u2) * (a2 - u2) / (u2 - u30)).sqrt() / d,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Turning {
    /// `u¹ = a₁`, crossing `{x¹ = 0}`.
    U1AtA1,
    /// `u¹ = a₂`, crossing `{x² = 0}`.
    U1AtA2,
    /// `u² = u²₀`, touching the line of curvature.
    U2AtU20,
    /// `u² = a₃`, crossing `{x³ = 0}`.
    U2AtA3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningEvent {
    pub s: f64,
    pub kind: Turning,
}

#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub rad: CharacteristicRadical,
    pub dir: [f64; 2],
    pub states: Vec<GeodesicState>,
    pub points: Vec<Point>,
    pub events: Vec<TurningEvent>,
    trajectory: Trajectory<2>,
}

impl GeodesicPath {
    pub fn state_at(&self, s: f64) -> GeodesicState {
        GeodesicState::from_angles(&self.rad, self.trajectory.eval(s), self.dir, s)
    }

    pub fn end(&self) -> &GeodesicState {
        self.states.last().expect("path holds its start")
    }

    /// Arc length at which `φ_k` has moved by `delta` (in the direction of motion).
    pub fn length_to_advance(&self, k: usize, delta: f64) -> Option<f64> {
        let target = self.states[0].phi[k] + self.dir[k] * delta;
        let steps = &self.trajectory.steps;
        let i = steps.iter().position(|st| self.dir[k] * (st.y[k] - target) >= 0.0)?;
        if i == 0 {
            return Some(steps[0].t);
        }
        let (a, b) = (&steps[i - 1], &steps[i]);
        brent(|t| hermite(a, b, t)[k] - target, a.t, b.t, 1e-15, 200)
    }
}

/// Integrate the geodesic through `start` for arc length `length`.
pub fn integrate_geodesic(
    rad: &CharacteristicRadical,
    start: &GeodesicState,
    length: f64,
    opts: &OdeOptions,
) -> Result<GeodesicPath> {
    if !length.is_finite() || length < 0.0 {
        return Err(Error::Range(format!("length {length} must be finite and nonnegative")));
    }
    let dir = start.dir;
    let tr = dopri5(|_, y: &[f64; 2]| rhs(rad, dir, y), start.s, start.phi, start.s + length, opts)?;
    let mut events = Vec::new();
    for w in tr.steps.windows(2) {
        for k in 0..2 {
            let (lo, hi) = (w[0].y[k] / FRAC_PI_2, w[1].y[k] / FRAC_PI_2);
            let (from, to) = if hi >= lo { (lo.floor() + 1.0, hi.floor()) } else { (hi.ceil(), lo.ceil() - 1.0) };
            let mut m = from;
            while m <= to {
                let target = m * FRAC_PI_2;
                let s = brent(|t| hermite(&w[0], &w[1], t)[k] - target, w[0].t, w[1].t, 1e-15, 200).unwrap_or(w[1].t);
                let even = (m as i64).rem_euclid(2) == 0;
                let kind = match (k, even) {
                    (0, true) => Turning::U1AtA2,
                    (0, false) => Turning::U1AtA1,
                    (_, true) => Turning::U2AtA3,
                    (_, false) => Turning::U2AtU20,
                };
                events.push(TurningEvent { s, kind });
                m += 1.0;
            }
        }
    }
    events.sort_by(|a, b| a.s.total_cmp(&b.s));
    let states: Vec<GeodesicState> =
        tr.steps.iter().map(|st| GeodesicState::from_angles(rad, st.y, dir, st.t)).collect();
    let points = states.iter().map(|st| st.cartesian(rad)).collect();
    Ok(GeodesicPath { rad: rad.clone(), dir, states, points, events, trajectory: tr })
}

/// `∫ g(φ) dφ` from `a` to `b`, split at multiples of π/2.
fn angle_integral<G: Fn(f64) -> f64>(g: G, a: f64, b: f64) -> Result<f64> {
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let first = (lo / FRAC_PI_2).floor() as i64 + 1;
    let last = (hi / FRAC_PI_2).ceil() as i64 - 1;
    let mut cuts = vec![lo];
    cuts.extend((first..=last).map(|m| m as f64 * FRAC_PI_2).filter(|&c| c > lo && c < hi));
    cuts.push(hi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += gauss::integrate(&g, w[0], w[1], 1e-13)?.value;
    }
    Ok(sign * total)
}

fn g1(rad: &CharacteristicRadical, p: f64) -> f64 {
    let [a1, a2, a3] = rad.axes;
    let u1 = a2 + (a1 - a2) * p.sin().powi(2);
    2.0 * ((u1 - rad.u3_0) / ((u1 - rad.u2_0) * (u1 - a3))).sqrt()
}

fn g2(rad: &CharacteristicRadical, p: f64) -> f64 {
    let [a1, a2, a3] = rad.axes;
    let u2 = a3 + (rad.u2_0 - a3) * p.sin().powi(2);
    2.0 * ((u2 - rad.u3_0) / ((a1 - u2) * (a2 - u2))).sqrt()
}

/// `∫ (u¹ − u³₀) |du¹| / √Δ` as `φ₁` runs from `a` to `b` (signed by `b − a`).
pub fn phase1(rad: &CharacteristicRadical, a: f64, b: f64) -> Result<f64> {
    angle_integral(|p| g1(rad, p), a, b)
}

/// `∫ (u² − u³₀) |du²| / √Δ` as `φ₂` runs from `a` to `b` (signed by `b − a`).
pub fn phase2(rad: &CharacteristicRadical, a: f64, b: f64) -> Result<f64> {
    angle_integral(|p| g2(rad, p), a, b)
}

/// Jacobi constant `ε₁∫(u¹−u³₀)du¹/√Δ − ε₂∫(u²−u³₀)du²/√Δ` accumulated from `base` to `state`.
pub fn jacobi_constant(rad: &CharacteristicRadical, state: &GeodesicState, base: &GeodesicState) -> Result<f64> {
    let c1 = phase1(rad, base.phi[0], state.phi[0])?;
    let c2 = phase2(rad, base.phi[1], state.phi[1])?;
    Ok(state.dir[0] * c1 - state.dir[1] * c2)
}

/// Chart state at a point of the ellipsoid moving along the tangent `v`.
///
/// Of the four directions of motion in the chart, the one whose velocity
/// is closest to `v` is kept; the returned value is that cosine.
pub fn state_from_tangent(rad: &CharacteristicRadical, x: &Point, v: &Point) -> Result<(GeodesicState, f64)> {
    let e = crate::elliptic::to_elliptic(rad.axes, x)?;
    let u = [e.u[0].clamp(rad.axes[1], rad.axes[0]), e.u[1].clamp(rad.axes[2], rad.u2_0)];
    let base = GeodesicState::from_elliptic(rad, u, e.signs, [1.0, 1.0])?;
    let vn = v.normalize();
    let mut best: Option<(f64, GeodesicState)> = None;
    for dir in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
        let st = GeodesicState::from_angles(rad, base.phi, dir, 0.0);
        let c = st.velocity(rad).dot(&vn);
        if best.as_ref().is_none_or(|b| c > b.0) {
            best = Some((c, st));
        }
    }
    let (c, st) = best.expect("four candidates");
    Ok((st, c))
}

/// Point of the line of curvature `(u², u³) = (u²₀, u³₀)` at angle `φ₁` on
/// the branch with the sign of `x³` given by `branch`.
pub fn curvature_point(rad: &CharacteristicRadical, phi1: f64, branch: f64) -> Point {
    GeodesicState::from_angles(rad, [phi1, branch.signum() * FRAC_PI_2], [1.0, 1.0], 0.0).cartesian(rad)
}

/// Arc length of the line of curvature between angles `a` and `b`,
/// `∫ √((u¹ − u²₀)(u¹ − u³₀)/(u¹ − a₃)) dφ₁`.
pub fn curvature_arc_length(rad: &CharacteristicRadical, a: f64, b: f64) -> Result<f64> {
    let [a1, a2, a3] = rad.axes;
    let f = |p: f64| {
        let u1 = a2 + (a1 - a2) * p.sin().powi(2);
        ((u1 - rad.u2_0) * (u1 - rad.u3_0) / (u1 - a3)).sqrt()
    };
    Ok(angle_integral(f, a, b)?.abs())
}

fn check_phi_domain(rad: &CharacteristicRadical, u: [f64; 3]) -> Result<()> {
    let [a1, a2, a3] = rad.axes;
    let ok = (a2..=a1).contains(&u[0]) && (a3..=rad.u2_0).contains(&u[1]) && u[2] <= rad.u3_0;
    if ok {
        Ok(())
    } else {
        Err(Error::Range(format!("{u:?} is outside the region where the integrand of Φ is real")))
    }
}

/// `Φ = ½ Σ ε_k ∫ √((u−u²₀)(u−u³₀)/Π(a_j−u)) du` from `base` to `p`.
pub fn phi(rad: &CharacteristicRadical, p: &EllipticPoint, eps: [f64; 3], base: &EllipticPoint) -> Result<f64> {
    check_phi_domain(rad, p.u)?;
    check_phi_domain(rad, base.u)?;
    let poly = rad.p_length();
    let mut total = 0.0;
    for k in 0..3 {
        if p.u[k] != base.u[k] {
            let v = rad.hyperelliptic(&poly, base.u[k], p.u[k])?;
            total += eps[k] * v.abs() * sgn(p.u[k] - base.u[k]);
        }
    }
    Ok(0.5 * total)
}

/// `∂Φ/∂u^k`.
pub fn phi_gradient(rad: &CharacteristicRadical, p: &EllipticPoint, eps: [f64; 3]) -> Result<[f64; 3]> {
    check_phi_domain(rad, p.u)?;
    let mut g = [0.0; 3];
    for k in 0..3 {
        let u = p.u[k];
        let num = (u - rad.u2_0) * (u - rad.u3_0);
        let den: f64 = rad.axes.iter().map(|a| a - u).product();
        g[k] = 0.5 * eps[k] * (num / den).max(0.0).sqrt();
    }
    Ok(g)
}

/// `|∇Φ|²` from the metric coefficients.
pub fn phi_gradient_norm_sq(rad: &CharacteristicRadical, p: &EllipticPoint) -> Result<f64> {
    let g = phi_gradient(rad, p, [1.0; 3])?;
    let h = metric_coeffs(rad.axes, p)?;
    Ok((0..3).map(|k| g[k] * g[k] / h[k]).sum())
}

#[derive(Debug, Clone)]
pub struct ClosedGeodesicReport {
    pub residual: f64,
    pub closed: bool,
    /// Length predicted by the thread-length relation.
    pub predicted_length: f64,
    /// Arc length at which `u¹` completes its `n` oscillations.
    pub measured_length: Option<f64>,
    /// Cartesian distance between start and end after the predicted length.
    pub closure_gap: Option<f64>,
    pub path: Option<GeodesicPath>,
}

/// Rationality residual `n J₁ − n′ J₂` and, when it vanishes, the closure gap.
pub fn closed_geodesic_check(
    axes: [f64; 3],
    u3_0: f64,
    u2_0: f64,
    w: WindingCounts,
    opts: &OdeOptions,
) -> Result<ClosedGeodesicReport> {
    if w.m != 0 {
        return Err(Error::Range(format!("closed geodesics need m = 0, got {}", w.m)));
    }
    let rad = CharacteristicRadical::new(axes, u2_0, u3_0)?;
    let residual = thread_residual(&rad, u3_0, w)?;
    let predicted_length = perimeter_formula(&rad, u3_0, w, PerimeterVariant::Darb1)?;
    let mut report =
        ClosedGeodesicReport { residual, closed: false, predicted_length, measured_length: None, closure_gap: None, path: None };
    if residual.abs() > CLOSURE_TOL {
        return Ok(report);
    }
    let start = GeodesicState::from_angles(&rad, [0.3, 0.4], [1.0, 1.0], 0.0);
    let path = integrate_geodesic(&rad, &start, predicted_length * 1.01, opts)?;
    let end = path.state_at(predicted_length);
    let gap = (end.cartesian(&rad) - start.cartesian(&rad)).norm();
    report.measured_length = path.length_to_advance(0, w.n as f64 * std::f64::consts::PI);
    report.closure_gap = Some(gap);
    report.closed = true;
    report.path = Some(path);
    Ok(report)
}

/// The four umbilics of the ellipsoid `{u³ = u³₀}`.
pub fn umbilics(axes: [f64; 3], u3_0: f64) -> [Point; 4] {
    let b = axes.map(|a| a - u3_0);
    let x1 = (b[0] * (b[0] - b[1]) / (b[0] - b[2])).sqrt();
    let x3 = (b[2] * (b[1] - b[2]) / (b[0] - b[2])).sqrt();
    [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].map(|(s1, s3)| DVector::from_row_slice(&[s1 * x1, 0.0, s3 * x3]))
}

/// Geodesic of `{u³ = u³₀}` by the Cartesian equation `x'' = −(v^T B v / |Bx|²) Bx`.
pub fn integrate_cartesian_geodesic(
    axes: [f64; 3],
    u3_0: f64,
    x0: &Point,
    v0: &Point,
    length: f64,
    opts: &OdeOptions,
) -> Result<Trajectory<6>> {
    let b = axes.map(|a| 1.0 / (a - u3_0));
    let res: f64 = (0..3).map(|i| b[i] * x0[i] * x0[i]).sum::<f64>() - 1.0;
    if res.abs() > 1e-9 {
        return Err(Error::OffQuadric { residual: res.abs(), tol: 1e-9 });
    }
    let n: [f64; 3] = std::array::from_fn(|i| b[i] * x0[i]);
    let vn: f64 = (0..3).map(|i| n[i] * v0[i]).sum();
    let nn: f64 = n.iter().map(|c| c * c).sum();
    let mut v: [f64; 3] = std::array::from_fn(|i| v0[i] - vn / nn * n[i]);
    let speed = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if speed == 0.0 {
        return Err(Error::Range("initial direction is normal to the ellipsoid".into()));
    }
    v.iter_mut().for_each(|c| *c /= speed);
    let y0 = [x0[0], x0[1], x0[2], v[0], v[1], v[2]];
    dopri5(
        |_, y: &[f64; 6]| {
            let bx = [b[0] * y[0], b[1] * y[1], b[2] * y[2]];
            let k = (b[0] * y[3] * y[3] + b[1] * y[4] * y[4] + b[2] * y[5] * y[5])
                / (bx[0] * bx[0] + bx[1] * bx[1] + bx[2] * bx[2]);
            [y[3], y[4], y[5], -k * bx[0], -k * bx[1], -k * bx[2]]
        },
        0.0,
        y0,
        length,
        opts,
    )
}

/// Length of a geodesic arc between opposite umbilics, `I₁[P] − I₂[P]` at `u²₀ = a₂`.
pub fn umbilic_length(axes: [f64; 3], u3_0: f64) -> Result<f64> {
    let [a1, a2, a3] = axes;
    let g = |u: f64| ((u - u3_0) / ((a1 - u) * (u - a3))).sqrt();
    let t1 = gauss::integrate(|t: f64| g(a2 + (a1 - a2) * t.sin().powi(2)) * (a1 - a2) * (2.0 * t).sin(), 0.0, FRAC_PI_2, 1e-13)?;
    let t2 = gauss::integrate(|t: f64| g(a3 + (a2 - a3) * t.sin().powi(2)) * (a2 - a3) * (2.0 * t).sin(), 0.0, FRAC_PI_2, 1e-13)?;
    Ok(t1.value + t2.value)
}
