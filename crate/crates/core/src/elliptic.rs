//! Elliptic coordinates `a₁ > u¹ > a₂ > u² > a₃ > u³` on R³.

use crate::error::{Error, Result};
use crate::family::Point;
use crate::poly::Poly;

/// Default separation between coordinates and axes.
pub const EPS_SEP: f64 = 1e-9;
/// Roots closer than this are reported as near a boundary chart.
pub const TIE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticPoint {
    pub u: [f64; 3],
    /// Octant signs of `(x¹, x², x³)`, each ±1.
    pub signs: [f64; 3],
}

impl EllipticPoint {
    pub fn new(u: [f64; 3], signs: [f64; 3]) -> Self {
        Self { u, signs }
    }
}

fn check_axes(axes: [f64; 3]) -> Result<()> {
    if !(axes[0] > axes[1] && axes[1] > axes[2]) {
        return Err(Error::Range(format!("axes {axes:?} must be strictly decreasing")));
    }
    Ok(())
}

/// Strict interlacing `a₁ > u¹ > a₂ > u² > a₃ > u³` with margin `eps`.
pub fn check_interlacing(axes: [f64; 3], u: [f64; 3], eps: f64) -> Result<()> {
    let [a1, a2, a3] = axes;
    let ok = a1 - u[0] > eps && u[0] - a2 > eps && a2 - u[1] > eps && u[1] - a3 > eps && a3 - u[2] > eps;
    if ok {
        Ok(())
    } else {
        Err(Error::Interlacing(format!("u = {u:?} for axes {axes:?}")))
    }
}

/// `(x^j)² = Π_k (a_j − u^k) / Π_{k≠j} (a_j − a_k)`.
fn squares(axes: [f64; 3], u: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for j in 0..3 {
        let num: f64 = u.iter().map(|uk| axes[j] - uk).product();
        let den: f64 = (0..3).filter(|&k| k != j).map(|k| axes[j] - axes[k]).product();
        out[j] = num / den;
    }
    out
}

fn assemble(sq: [f64; 3], signs: [f64; 3]) -> Point {
    Point::from_iterator(3, (0..3).map(|j| signs[j].signum() * sq[j].max(0.0).sqrt()))
}

pub fn to_cartesian(axes: [f64; 3], p: &EllipticPoint) -> Result<Point> {
    check_axes(axes)?;
    check_interlacing(axes, p.u, EPS_SEP)?;
    Ok(assemble(squares(axes, p.u), p.signs))
}

/// The monic cubic `Σ x_j² Π_{i≠j}(a_i − u) + Π (u − a_j)` whose roots are `u^k`.
pub fn coordinate_cubic(axes: [f64; 3], x: &Point) -> Poly {
    let mut p = Poly::from_roots(&axes);
    for j in 0..3 {
        let others: Vec<f64> = (0..3).filter(|&i| i != j).map(|i| axes[i]).collect();
        // Π_{i≠j}(a_i − u) = Π_{i≠j}(u − a_i) for two factors
        p = p.add(&Poly::from_roots(&others).scale(x[j] * x[j]));
    }
    p
}

pub fn to_elliptic(axes: [f64; 3], x: &Point) -> Result<EllipticPoint> {
    check_axes(axes)?;
    if x.len() != 3 {
        return Err(Error::Range("elliptic coordinates need a point in R³".into()));
    }
    for j in 0..3 {
        if x[j].abs() <= EPS_SEP {
            return Err(Error::CoordinatePlane { axis: j + 1 });
        }
    }
    let cubic = coordinate_cubic(axes, x);
    let mut roots = cubic.real_roots(1e-6);
    if roots.len() != 3 {
        return Err(Error::Interlacing(format!("cubic has {} real roots", roots.len())));
    }
    // one more Newton step each for full accuracy
    let d = cubic.derivative();
    for r in roots.iter_mut() {
        let dp = d.eval(*r);
        if dp != 0.0 {
            *r -= cubic.eval(*r) / dp;
        }
    }
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let signs = [x[0].signum(), x[1].signum(), x[2].signum()];
    Ok(EllipticPoint { u: [roots[0], roots[1], roots[2]], signs })
}

/// True when two coordinates, or a coordinate and an axis, are within `TIE_TOL`.
pub fn near_boundary(axes: [f64; 3], p: &EllipticPoint) -> bool {
    let v = [axes[0], p.u[0], axes[1], p.u[1], axes[2], p.u[2]];
    v.windows(2).any(|w| (w[0] - w[1]).abs() < TIE_TOL)
}

/// `h_k² = Π_{j≠k}(u^k − u^j) / (4 Π_j (a_j − u^k))`.
pub fn metric_coeffs(axes: [f64; 3], p: &EllipticPoint) -> Result<[f64; 3]> {
    check_axes(axes)?;
    check_interlacing(axes, p.u, EPS_SEP)?;
    Ok(metric_unchecked(axes, p.u))
}

pub(crate) fn metric_unchecked(axes: [f64; 3], u: [f64; 3]) -> [f64; 3] {
    let mut h = [0.0; 3];
    for k in 0..3 {
        let num: f64 = (0..3).filter(|&j| j != k).map(|j| u[k] - u[j]).product();
        let den: f64 = axes.iter().map(|a| a - u[k]).product();
        h[k] = num / (4.0 * den);
    }
    h
}

/// Degenerate limits of the elliptic chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// `u¹ = a₁`: the plane `x¹ = 0`. Free `(u², u³)`.
    U1ToA1,
    /// `u¹ = a₂`: the plane `x² = 0` outside the focal hyperbola. Free `(u², u³)`.
    U1ToA2,
    /// `u² = a₂`: the plane `x² = 0` between the focal hyperbola branches. Free `(u¹, u³)`.
    U2ToA2,
    /// `u² = a₃`: the plane `x³ = 0` outside the focal ellipse. Free `(u¹, u³)`.
    U2ToA3,
    /// `u³ = a₃`: the plane `x³ = 0` inside the focal ellipse. Free `(u¹, u²)`.
    U3ToA3,
    /// `u² = u³ = a₃`. Free `u¹`.
    FocalEllipse,
    /// `u¹ = u² = a₂`. Free `u³`.
    FocalHyperbola,
}

impl Chart {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "u1_to_a1" => Chart::U1ToA1,
            "u1_to_a2" => Chart::U1ToA2,
            "u2_to_a2" => Chart::U2ToA2,
            "u2_to_a3" => Chart::U2ToA3,
            "u3_to_a3" => Chart::U3ToA3,
            "focal_ellipse" => Chart::FocalEllipse,
            "focal_hyperbola" => Chart::FocalHyperbola,
            _ => return None,
        })
    }

    pub fn free_count(self) -> usize {
        match self {
            Chart::FocalEllipse | Chart::FocalHyperbola => 1,
            _ => 2,
        }
    }
}

/// Limit point of a boundary chart. Free coordinates are listed in
/// increasing index order and their ranges are closed.
pub fn boundary_chart(axes: [f64; 3], which: Chart, free: &[f64], signs: [f64; 3]) -> Result<Point> {
    check_axes(axes)?;
    if free.len() != which.free_count() {
        return Err(Error::Range(format!("{which:?} takes {} free coordinates", which.free_count())));
    }
    let [a1, a2, a3] = axes;
    let r1 = (a2, a1);
    let r2 = (a3, a2);
    let r3 = (f64::NEG_INFINITY, a3);
    let (u, ranges): ([f64; 3], Vec<(f64, (f64, f64))>) = match which {
        Chart::U1ToA1 => ([a1, free[0], free[1]], vec![(free[0], r2), (free[1], r3)]),
        Chart::U1ToA2 => ([a2, free[0], free[1]], vec![(free[0], r2), (free[1], r3)]),
        Chart::U2ToA2 => ([free[0], a2, free[1]], vec![(free[0], r1), (free[1], r3)]),
        Chart::U2ToA3 => ([free[0], a3, free[1]], vec![(free[0], r1), (free[1], r3)]),
        Chart::U3ToA3 => ([free[0], free[1], a3], vec![(free[0], r1), (free[1], r2)]),
        Chart::FocalEllipse => ([free[0], a3, a3], vec![(free[0], r1)]),
        Chart::FocalHyperbola => ([a2, a2, free[0]], vec![(free[0], r3)]),
    };
    for (v, (lo, hi)) in ranges {
        if !(v >= lo && v <= hi) {
            return Err(Error::Range(format!("{which:?}: free coordinate {v} outside [{lo}, {hi}]")));
        }
    }
    Ok(assemble(squares(axes, u), signs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::ConfocalFamily;
    use proptest::prelude::*;

    const AXES: [f64; 3] = [3.0, 2.0, 1.0];

    #[test]
    fn reference_point_squares() {
        let p = EllipticPoint::new([2.5, 1.5, 0.5], [1.0; 3]);
        let x = to_cartesian(AXES, &p).unwrap();
        assert!((x[0] * x[0] - 0.9375).abs() < 1e-14);
        assert!((x[1] * x[1] - 0.375).abs() < 1e-14);
        assert!((x[2] * x[2] - 0.1875).abs() < 1e-14);
        let f = ConfocalFamily::new(AXES.to_vec()).unwrap();
        for u in p.u {
            assert!(f.eval_q(u, &x).unwrap().abs() < 1e-12);
        }
        let back = to_elliptic(AXES, &x).unwrap();
        for k in 0..3 {
            assert!((back.u[k] - p.u[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn sign_flip_negates_one_coordinate() {
        let p = EllipticPoint::new([2.5, 1.5, 0.5], [1.0; 3]);
        let q = EllipticPoint::new([2.5, 1.5, 0.5], [1.0, -1.0, 1.0]);
        let (x, y) = (to_cartesian(AXES, &p).unwrap(), to_cartesian(AXES, &q).unwrap());
        assert_eq!(x[0], y[0]);
        assert_eq!(x[1], -y[1]);
        assert_eq!(x[2], y[2]);
    }

    #[test]
    fn sphere_asymptotics() {
        let u3 = -1e8;
        let x = to_cartesian(AXES, &EllipticPoint::new([2.5, 1.5, u3], [1.0; 3])).unwrap();
        assert!((x.norm_squared() / -u3 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn point_on_base_ellipsoid_has_zero_root() {
        let x = Point::from_row_slice(&[1.0, 0.8, (1.0f64 - 1.0 / 3.0 - 0.32).sqrt()]);
        let p = to_elliptic(AXES, &x).unwrap();
        assert!(p.u[2].abs() < 1e-12);
    }

    #[test]
    fn coordinate_plane_is_rejected() {
        let x = Point::from_row_slice(&[1.0, 0.0, 0.5]);
        assert!(matches!(to_elliptic(AXES, &x), Err(Error::CoordinatePlane { axis: 2 })));
    }

    #[test]
    fn metric_by_finite_differences() {
        let p = EllipticPoint::new([2.4, 1.3, -0.7], [1.0; 3]);
        let h = metric_coeffs(AXES, &p).unwrap();
        let x0 = to_cartesian(AXES, &p).unwrap();
        let d = 1e-6;
        for k in 0..3 {
            let mut q = p;
            q.u[k] += d;
            let x1 = to_cartesian(AXES, &q).unwrap();
            let est = (x1 - &x0).norm_squared() / (d * d);
            assert!((est - h[k]).abs() < 1e-4 * h[k].max(1.0), "k={k}: {est} vs {}", h[k]);
        }
    }

    #[test]
    fn metric_blows_up_like_inverse_gap() {
        let h = |g: f64| metric_coeffs(AXES, &EllipticPoint::new([3.0 - g, 1.5, 0.0], [1.0; 3])).unwrap()[0];
        let ratio = h(1e-4) / h(1e-5);
        assert!((ratio - 0.1).abs() < 1e-3);
    }

    #[test]
    fn focal_ellipse_vertex() {
        let x = boundary_chart(AXES, Chart::FocalEllipse, &[2.0], [1.0; 3]).unwrap();
        assert!((x[0] - 2f64.sqrt()).abs() < 1e-15 && x[1] == 0.0 && x[2] == 0.0);
    }

    #[test]
    fn focal_conics_satisfy_their_equations() {
        for u1 in [2.0, 2.3, 2.9, 3.0] {
            let x = boundary_chart(AXES, Chart::FocalEllipse, &[u1], [1.0; 3]).unwrap();
            assert!((x[0] * x[0] / 2.0 + x[1] * x[1] / 1.0 - 1.0).abs() < 1e-10);
            assert_eq!(x[2], 0.0);
        }
        for u3 in [1.0, 0.0, -5.0] {
            let x = boundary_chart(AXES, Chart::FocalHyperbola, &[u3], [1.0; 3]).unwrap();
            assert!((x[0] * x[0] / 1.0 - x[2] * x[2] / 1.0 - 1.0).abs() < 1e-10);
            assert_eq!(x[1], 0.0);
        }
    }

    #[test]
    fn u3_chart_lies_inside_focal_ellipse() {
        let x = boundary_chart(AXES, Chart::U3ToA3, &[2.5, 1.5], [1.0; 3]).unwrap();
        assert_eq!(x[2], 0.0);
        assert!(x[0] * x[0] / 2.0 + x[1] * x[1] / 1.0 < 1.0);
    }

    #[test]
    fn chart_matches_interior_limit() {
        let x = boundary_chart(AXES, Chart::U3ToA3, &[2.5, 1.5], [1.0; 3]).unwrap();
        let y = to_cartesian(AXES, &EllipticPoint::new([2.5, 1.5, 1.0 - 1e-8], [1.0; 3])).unwrap();
        assert!((x - y).norm() < 1e-3);
    }

    #[test]
    fn chart_range_is_checked() {
        assert!(matches!(
            boundary_chart(AXES, Chart::FocalEllipse, &[1.5], [1.0; 3]),
            Err(Error::Range(_))
        ));
    }

    fn interior() -> impl Strategy<Value = ([f64; 3], [f64; 3])> {
        (0.2f64..3.0, 0.2f64..3.0, 0.2f64..3.0, 0.001f64..0.999, 0.001f64..0.999, 0.001f64..20.0).prop_map(
            |(g1, g2, g3, s1, s2, s3)| {
                let a3 = g3;
                let a2 = a3 + g2;
                let a1 = a2 + g1;
                ([a1, a2, a3], [a2 + s1 * g1, a3 + s2 * g2, a3 - s3])
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn round_trip((axes, u) in interior(), s in proptest::collection::vec(proptest::bool::ANY, 3)) {
            let signs = [0, 1, 2].map(|k| if s[k] { 1.0 } else { -1.0 });
            let x = to_cartesian(axes, &EllipticPoint::new(u, signs)).unwrap();
            let p = to_elliptic(axes, &x).unwrap();
            for k in 0..3 {
                prop_assert!((p.u[k] - u[k]).abs() < 1e-9 * (1.0 + u[k].abs()), "{:?} vs {:?}", p.u, u);
            }
            prop_assert_eq!(p.signs, signs);
        }

        #[test]
        fn identity_holds_at_probe_values((axes, u) in interior(), probe in -10.0f64..10.0) {
            let x = to_cartesian(axes, &EllipticPoint::new(u, [1.0; 3])).unwrap();
            prop_assume!(axes.iter().chain(u.iter()).all(|v| (v - probe).abs() > 1e-3));
            let lhs: f64 = (0..3).map(|j| x[j] * x[j] / (axes[j] - probe)).sum::<f64>() - 1.0;
            let rhs: f64 = (0..3).map(|j| (probe - u[j]) / (axes[j] - probe)).product();
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs().max(rhs.abs())));
        }

        #[test]
        fn squares_and_metric_are_positive((axes, u) in interior()) {
            for v in squares(axes, u) {
                prop_assert!(v >= 0.0);
            }
            for h in metric_unchecked(axes, u) {
                prop_assert!(h > 0.0);
            }
        }
    }
}
