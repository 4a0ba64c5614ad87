//! Real diagonal confocal families `Q_z(x) = Σ x_j²/(a_j − z) − 1` in R² and R³.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly::{cluster, interpolate, quadratic_real_roots, Poly};

pub type Point = DVector<f64>;

/// Default separation between distinct axes and between `z` and a pole.
pub const EPS_SEP: f64 = 1e-9;
/// Residual tolerance used by `normal_hat`.
pub const ON_QUADRIC_TOL: f64 = 1e-8;
/// Tangency values closer than this are merged.
pub const MERGE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfocalFamily {
    axes: Vec<f64>,
    eps_sep: f64,
}

impl ConfocalFamily {
    /// `axes` are the squared semi-axes `a₁ > … > a_{n+1} > 0`.
    pub fn new(axes: Vec<f64>) -> Result<Self> {
        Self::with_separation(axes, EPS_SEP)
    }

    pub fn with_separation(axes: Vec<f64>, eps_sep: f64) -> Result<Self> {
        if axes.len() < 2 || axes.len() > 3 {
            return Err(Error::Range(format!("expected 2 or 3 axes, got {}", axes.len())));
        }
        if axes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::Range(format!("axes must be positive: {axes:?}")));
        }
        if axes.windows(2).any(|w| w[0] - w[1] <= eps_sep) {
            return Err(Error::Range(format!("axes must be strictly decreasing: {axes:?}")));
        }
        Ok(Self { axes, eps_sep })
    }

    pub fn axes(&self) -> &[f64] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn eps_sep(&self) -> f64 {
        self.eps_sep
    }

    pub fn check_z(&self, z: f64) -> Result<()> {
        match self.axes.iter().find(|a| (*a - z).abs() <= self.eps_sep) {
            Some(&pole) => Err(Error::Pole { z, pole }),
            None => Ok(()),
        }
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Range(format!("point has dimension {}, family {}", x.len(), self.dim())));
        }
        Ok(())
    }

    pub fn eval_q(&self, z: f64, x: &Point) -> Result<f64> {
        self.check_z(z)?;
        self.check_dim(x)?;
        Ok(self.axes.iter().zip(x.iter()).map(|(a, xi)| xi * xi / (a - z)).sum::<f64>() - 1.0)
    }

    /// `Q_z(x)` divided by `Σ x_j²/a_j`, for scale-free membership tests.
    pub fn eval_q_scaled(&self, z: f64, x: &Point) -> Result<f64> {
        let q = self.eval_q(z, x)?;
        let s: f64 = self.axes.iter().zip(x.iter()).map(|(a, xi)| xi * xi / a).sum();
        Ok(q / s.max(1.0))
    }

    /// Components `x_j/(a_j − z)`, without checking membership.
    pub fn normal_raw(&self, z: f64, x: &Point) -> Result<Point> {
        self.check_z(z)?;
        self.check_dim(x)?;
        Ok(Point::from_iterator(self.dim(), self.axes.iter().zip(x.iter()).map(|(a, xi)| xi / (a - z))))
    }

    /// Normal `x_j/(a_j − z)` at a point of `Q_z`.
    pub fn normal_hat(&self, z: f64, x: &Point) -> Result<Point> {
        let q = self.eval_q(z, x)?;
        if q.abs() > ON_QUADRIC_TOL {
            return Err(Error::OffQuadric { residual: q.abs(), tol: ON_QUADRIC_TOL });
        }
        self.normal_raw(z, x)
    }

    /// Real intersections of a line with `Q_z`, ascending in `t`.
    pub fn intersect_line(&self, z: f64, line: &Line) -> Result<Vec<(f64, Point)>> {
        self.check_z(z)?;
        self.check_dim(&line.base)?;
        let (alpha, beta, gamma) = self.line_coeffs(z, line);
        let ts = quadratic_real_roots(alpha, 2.0 * beta, gamma, 1e-12);
        Ok(ts.into_iter().map(|t| (t, line.at(t))).collect())
    }

    /// `Q_z(b + t d) = α t² + 2β t + γ`.
    fn line_coeffs(&self, z: f64, line: &Line) -> (f64, f64, f64) {
        let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, -1.0);
        for ((a, b), d) in self.axes.iter().zip(line.base.iter()).zip(line.dir.iter()) {
            let w = 1.0 / (a - z);
            alpha += d * d * w;
            beta += b * d * w;
            gamma += b * b * w;
        }
        (alpha, beta, gamma)
    }

    /// `Π_i (a_i − z) · (β² − αγ)` expanded through the 2×2 minors of `(b, d)`.
    pub fn cleared_discriminant(&self, line: &Line, z: f64) -> f64 {
        let n = self.dim();
        let a = &self.axes;
        let (b, d) = (&line.base, &line.dir);
        let prod_except = |skip: &[usize]| -> f64 {
            (0..n).filter(|i| !skip.contains(i)).map(|i| a[i] - z).product()
        };
        let mut s = 0.0;
        for j in 0..n {
            s += d[j] * d[j] * prod_except(&[j]);
        }
        for j in 0..n {
            for k in j + 1..n {
                let m = b[j] * d[k] - b[k] * d[j];
                s -= m * m * prod_except(&[j, k]);
            }
        }
        s
    }

    /// The cleared discriminant as a polynomial in `z′`, fitted through
    /// `n + 2` samples.
    pub fn discriminant_poly(&self, line: &Line) -> Poly {
        let n = self.dim();
        let (lo, hi) = (self.axes[n - 1], self.axes[0]);
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo) + 1.0);
        let samples = n + 1;
        let xs: Vec<f64> = (0..samples)
            .map(|k| c + r * (std::f64::consts::PI * (k as f64 + 0.5) / samples as f64).cos())
            .collect();
        let ys: Vec<f64> = xs.iter().map(|&z| self.cleared_discriminant(line, z)).collect();
        let mut p = interpolate(&xs, &ys);
        // the true degree is n − 1 in z′ for an (n)-dimensional ambient space
        p.coeffs.truncate(n);
        p
    }

    /// Real Ivory affinity `Q_from → Q_to`: `x_j ↦ x_j √((a_j − to)/(a_j − from))`.
    pub fn ivory(&self, x: &Point, from: f64, to: f64) -> Result<Point> {
        self.check_z(from)?;
        self.check_z(to)?;
        self.check_dim(x)?;
        let mut out = x.clone();
        for (j, a) in self.axes.iter().enumerate() {
            let r = (a - to) / (a - from);
            if r <= 0.0 {
                return Err(Error::Range(format!("Ivory affinity from z = {from} to z = {to} is not real")));
            }
            out[j] *= r.sqrt();
        }
        Ok(out)
    }

    /// Confocal coordinates of `x` with the unit normals of the family
    /// members through `x`, descending in the parameter.
    ///
    /// The parameters are the eigenvalues of `diag(a) − x xᵀ` and the
    /// eigenvectors are the normals `(a − u)⁻¹ x`.
    pub fn coordinate_frame(&self, x: &Point) -> Result<(Vec<f64>, Vec<Point>)> {
        self.check_dim(x)?;
        let n = self.dim();
        let s = DMatrix::from_diagonal(&DVector::from_column_slice(&self.axes)) - x * x.transpose();
        let eig = s.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
        let u = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let normals = order
            .iter()
            .map(|&i| {
                let v: Point = eig.eigenvectors.column(i).into_owned();
                // x · (a − u)⁻¹ x = 1 fixes the orientation
                let key = if x.dot(&v).abs() > 1e-300 { x.dot(&v) } else { v.iter().sum() };
                if key < 0.0 { -v } else { v }
            })
            .collect();
        Ok((u, normals))
    }

    /// Confocal coordinates of `x`, descending.
    pub fn coordinates(&self, x: &Point) -> Result<Vec<f64>> {
        Ok(self.coordinate_frame(x)?.0)
    }

    pub fn tangency_spectrum(&self, line: &Line) -> Result<TangencySpectrum> {
        self.check_dim(&line.base)?;
        let p = self.discriminant_poly(line);
        let scale = self.axes[0].powi(self.dim() as i32 - 1) * (1.0 + line.base.norm_squared());
        if p.coeffs.iter().all(|c| c.abs() <= 1e-12 * scale) {
            return Err(Error::DegenerateLine);
        }
        let roots = p.real_roots(1e-7);
        let expected = p.degree(1e-12).unwrap_or(0);
        let mut values = Vec::new();
        for (z, multiplicity) in cluster(&roots, MERGE_TOL) {
            let (alpha, beta, _) = if self.check_z(z).is_ok() {
                self.line_coeffs(z, line)
            } else {
                (1.0, 0.0, 0.0)
            };
            let t = -beta / alpha;
            values.push(Tangency { z, multiplicity, t, point: line.at(t) });
        }
        let real: usize = values.iter().map(|v| v.multiplicity).sum();
        Ok(TangencySpectrum { values, complex_count: expected.saturating_sub(real) })
    }
}

/// Specular reflection of `dir` in the hyperplane with the given normal.
pub fn reflect(dir: &Point, normal: &Point) -> Result<Point> {
    let nn = normal.norm();
    if nn == 0.0 || !nn.is_finite() {
        return Err(Error::ZeroNormal);
    }
    let n = normal / nn;
    Ok(dir - n.scale(2.0 * dir.dot(&n)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub base: Point,
    pub dir: Point,
}

impl Line {
    /// The direction is normalized; a zero direction is rejected.
    pub fn new(base: Point, dir: Point) -> Result<Self> {
        let n = dir.norm();
        if n == 0.0 || !n.is_finite() || base.len() != dir.len() {
            return Err(Error::Range("line direction must be a nonzero vector of matching dimension".into()));
        }
        Ok(Self { base, dir: dir / n })
    }

    pub fn through(p: &Point, q: &Point) -> Result<Self> {
        Self::new(p.clone(), q - p)
    }

    pub fn at(&self, t: f64) -> Point {
        &self.base + self.dir.scale(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tangency {
    pub z: f64,
    pub multiplicity: usize,
    /// Line parameter of the contact point.
    pub t: f64,
    pub point: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangencySpectrum {
    pub values: Vec<Tangency>,
    /// Number of tangencies at complex parameters (not reported).
    pub complex_count: usize,
}

impl TangencySpectrum {
    pub fn zs(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| std::iter::repeat_n(v.z, v.multiplicity)).collect()
    }

    /// Largest distance from each wanted value to the nearest reported one.
    pub fn mismatch(&self, wanted: &[f64]) -> f64 {
        wanted
            .iter()
            .map(|w| self.values.iter().map(|v| (v.z - w).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    #[test]
    fn eval_at_vertex_and_center() {
        let f = ConfocalFamily::new(vec![2.0, 1.0]).unwrap();
        assert!(f.eval_q(0.0, &p(&[2f64.sqrt(), 0.0])).unwrap().abs() < 1e-15);
        assert_eq!(f.eval_q(0.0, &p(&[0.0, 0.0])).unwrap(), -1.0);
    }

    #[test]
    fn eval_matches_exact_rational() {
        // 2/5 + 2/3 + 2/25 − 1 = 11/75
        let f = ConfocalFamily::new(vec![3.0, 2.0, 1.0]).unwrap();
        let v = f.eval_q(0.5, &p(&[1.0, 1.0, 0.2])).unwrap();
        assert!((v - 11.0 / 75.0).abs() < 1e-15);
    }

    #[test]
    fn pole_is_rejected() {
        let f = ConfocalFamily::new(vec![2.0, 1.0]).unwrap();
        assert!(matches!(f.eval_q(1.0, &p(&[0.0, 0.0])), Err(Error::Pole { .. })));
    }

    #[test]
    fn vertex_normals_are_axial() {
        let f = ConfocalFamily::new(vec![2.0, 1.0]).unwrap();
        let n = f.normal_hat(0.0, &p(&[2f64.sqrt(), 0.0])).unwrap().normalize();
        assert!((n - p(&[1.0, 0.0])).norm() < 1e-15);
        let n = f.normal_hat(-1.0, &p(&[3f64.sqrt(), 0.0])).unwrap().normalize();
        assert!((n - p(&[1.0, 0.0])).norm() < 1e-15);
        assert!(matches!(f.normal_hat(0.0, &p(&[0.0, 0.0])), Err(Error::OffQuadric { .. })));
    }

    #[test]
    fn normal_is_orthogonal_to_surface_tangents() {
        let f = ConfocalFamily::new(vec![3.0, 2.0, 1.0]).unwrap();
        let on = |th: f64, ph: f64| {
            p(&[3f64.sqrt() * th.cos() * ph.cos(), 2f64.sqrt() * th.sin() * ph.cos(), ph.sin()])
        };
        let (th, ph, h) = (0.7, 0.3, 1e-6);
        let x = on(th, ph);
        let n = f.normal_hat(0.0, &x).unwrap();
        let t1 = (on(th + h, ph) - on(th - h, ph)) / (2.0 * h);
        let t2 = (on(th, ph + h) - on(th, ph - h)) / (2.0 * h);
        assert!(n.dot(&t1).abs() / (n.norm() * t1.norm()) < 1e-6);
        assert!(n.dot(&t2).abs() / (n.norm() * t2.norm()) < 1e-6);
    }

    #[test]
    fn reflect_examples() {
        let r = reflect(&p(&[1.0, 0.0, 0.0]), &p(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(r, p(&[-1.0, 0.0, 0.0]));
        let r = reflect(&p(&[1.0, 0.0, 0.0]), &p(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(r, p(&[1.0, 0.0, 0.0]));
        assert!(matches!(reflect(&p(&[1.0, 0.0]), &p(&[0.0, 0.0])), Err(Error::ZeroNormal)));
    }

    #[test]
    fn axis_chord_and_tangent() {
        let f = ConfocalFamily::new(vec![2.0, 1.0]).unwrap();
        let line = Line::new(p(&[0.0, 0.0]), p(&[1.0, 0.0])).unwrap();
        let hits = f.intersect_line(0.0, &line).unwrap();
        assert!((hits[0].0 + 2f64.sqrt()).abs() < 1e-15 && (hits[1].0 - 2f64.sqrt()).abs() < 1e-15);
        let tangent = Line::new(p(&[0.0, 1.0]), p(&[1.0, 0.0])).unwrap();
        let hits = f.intersect_line(0.0, &tangent).unwrap();
        assert_eq!(hits.len(), 2);
        assert!(hits[0].0.abs() < 1e-12 && hits[1].0.abs() < 1e-12);
    }

    #[test]
    fn spectrum_of_tangent_at_minor_vertex() {
        let f = ConfocalFamily::new(vec![2.0, 1.0]).unwrap();
        let line = Line::new(p(&[0.0, 1.0]), p(&[1.0, 0.0])).unwrap();
        let s = f.tangency_spectrum(&line).unwrap();
        assert_eq!(s.zs().len(), 1);
        assert!(s.values[0].z.abs() < 1e-12);
        assert!(s.values[0].t.abs() < 1e-12);
    }

    /// Minimum of |Q_{z'}| along the line by golden-section search on the
    /// quadratic in t; the oracle for the spectrum values.
    fn min_abs_q(f: &ConfocalFamily, z: f64, line: &Line) -> f64 {
        let (mut lo, mut hi) = (-50.0, 50.0);
        let g = |t: f64| f.eval_q(z, &line.at(t)).unwrap();
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let (c, d) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
            if g(c) < g(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        g(0.5 * (lo + hi)).abs()
    }

    #[test]
    fn principal_tangent_has_two_real_values() {
        let f = ConfocalFamily::new(vec![3.0, 2.0, 1.0]).unwrap();
        let x = p(&[1.0, 0.8, (1.0f64 - 1.0 / 3.0 - 0.32).sqrt()]);
        assert!(f.eval_q(0.0, &x).unwrap().abs() < 1e-14);
        // principal directions at x are the normals of the two other
        // confocal quadrics through x
        let cubic = |u: f64| f.eval_q(u, &x).unwrap();
        let u1 = crate::rootfind::brent(cubic, 2.0 + 1e-8, 3.0 - 1e-8, 1e-15, 200).unwrap();
        let dir = f.normal_raw(u1, &x).unwrap();
        let line = Line::new(x.clone(), dir).unwrap();
        let s = f.tangency_spectrum(&line).unwrap();
        assert_eq!(s.zs().len(), 2);
        assert!(s.mismatch(&[0.0]) < 1e-10);
        for v in &s.values {
            assert!(min_abs_q(&f, v.z, &line) < 1e-9);
        }
    }

    fn random_family_and_line() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64)> {
        (
            (0.3f64..3.0, 0.3f64..3.0, 0.3f64..3.0),
            proptest::collection::vec(-3.0f64..3.0, 3),
            proptest::collection::vec(-1.0f64..1.0, 3),
            -20.0f64..20.0,
            proptest::bool::ANY,
        )
            .prop_map(|((g1, g2, g3), b, d, s, flip)| {
                let a3 = g3;
                let a2 = a3 + g2;
                let a1 = a2 + g1;
                (vec![a1, a2, a3], b, d, s, if flip { -1.0 } else { 1.0 })
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn spectrum_invariant_under_reparametrization((axes, b, d, s, sign) in random_family_and_line()) {
            let f = ConfocalFamily::new(axes).unwrap();
            let b = p(&b);
            let d = p(&d);
            prop_assume!(d.norm() > 0.2);
            let l1 = Line::new(b.clone(), d.clone()).unwrap();
            let l2 = Line::new(l1.at(s), d.scale(sign)).unwrap();
            let s1 = f.tangency_spectrum(&l1).unwrap();
            let s2 = f.tangency_spectrum(&l2).unwrap();
            prop_assert_eq!(s1.zs().len(), s2.zs().len());
            for (x, y) in s1.zs().iter().zip(s2.zs()) {
                prop_assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()), "{} vs {}", x, y);
            }
        }

        #[test]
        fn reflection_preserves_norm(d in proptest::collection::vec(-2.0f64..2.0, 3),
                                     n in proptest::collection::vec(-2.0f64..2.0, 3)) {
            let (d, n) = (p(&d), p(&n));
            prop_assume!(n.norm() > 1e-3);
            let r = reflect(&d, &n).unwrap();
            prop_assert!((r.norm() - d.norm()).abs() < 1e-12 * (1.0 + d.norm()));
            // r + d has no normal component; r − d is parallel to n
            let nh = n.normalize();
            prop_assert!((&r + &d).dot(&nh).abs() < 1e-12 * (1.0 + d.norm()));
            let diff = &r - &d;
            prop_assert!((&diff - nh.scale(diff.dot(&nh))).norm() < 1e-12 * (1.0 + d.norm()));
        }

        #[test]
        fn intersections_back_substitute((axes, b, d, _s, _sign) in random_family_and_line(), z in -5.0f64..0.25) {
            let f = ConfocalFamily::new(axes).unwrap();
            prop_assume!(f.check_z(z).is_ok());
            let d = p(&d);
            prop_assume!(d.norm() > 0.2);
            let line = Line::new(p(&b), d).unwrap();
            for (t, x) in f.intersect_line(z, &line).unwrap() {
                let scale = 1.0 + t * t;
                prop_assert!(f.eval_q(z, &x).unwrap().abs() < 1e-10 * scale);
            }
        }
    }
}
