//! Real polynomials in ascending-coefficient form.
//!
//! Roots of degree ≤ 2 come from closed forms; higher degrees go through the
//! eigenvalues of the companion matrix. Every root is polished by one Newton
//! step on the original coefficients.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// `c[0] + c[1] x + ... + c[d] x^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        let mut p = Poly::new(vec![1.0]);
        for &r in roots {
            p = p.mul(&Poly::new(vec![-r, 1.0]));
        }
        p
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |c: &[f64], k: usize| c.get(k).copied().unwrap_or(0.0);
        Poly::new(
            (0..n)
                .map(|k| get(&self.coeffs, k) + get(&other.coeffs, k))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Degree after dropping trailing coefficients below `tol` relative to the
    /// largest coefficient. `None` for the zero polynomial.
    pub fn degree(&self, tol: f64) -> Option<usize> {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return None;
        }
        self.coeffs.iter().rposition(|c| c.abs() > tol * scale)
    }

    /// Real roots in ascending order. Complex roots whose imaginary part is
    /// below `imag_tol` (relative to the root modulus) are treated as real.
    pub fn real_roots(&self, imag_tol: f64) -> Vec<f64> {
        let Some(deg) = self.degree(1e-14) else {
            return Vec::new();
        };
        let c = &self.coeffs[..=deg];
        let mut roots: Vec<f64> = match deg {
            0 => Vec::new(),
            1 => vec![-c[0] / c[1]],
            2 => quadratic_real_roots(c[2], c[1], c[0], imag_tol),
            _ => companion_roots(c)
                .into_iter()
                .filter(|z| z.im.abs() <= imag_tol * z.norm().max(1.0))
                .map(|z| z.re)
                .collect(),
        };
        let d = self.derivative();
        for r in roots.iter_mut() {
            let dp = d.eval(*r);
            if dp != 0.0 {
                let step = self.eval(*r) / dp;
                if step.is_finite() {
                    *r -= step;
                }
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots
    }
}

/// Real roots of `a x² + b x + c`, ascending, using the cancellation-free form.
/// A discriminant within `tol` of zero (relative to b²) yields a double root.
pub fn quadratic_real_roots(a: f64, b: f64, c: f64, tol: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    let scale = (b * b).max((4.0 * a * c).abs()).max(f64::MIN_POSITIVE);
    if disc < -tol * scale {
        return Vec::new();
    }
    let sq = disc.max(0.0).sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        (q / a, c / q)
    };
    if r1 <= r2 {
        vec![r1, r2]
    } else {
        vec![r2, r1]
    }
}

/// All complex roots via eigenvalues of the companion matrix.
pub fn companion_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -coeffs[i] / lead;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Interpolating polynomial through `(xs[i], ys[i])` in monomial form,
/// assembled from Newton divided differences.
pub fn interpolate(xs: &[f64], ys: &[f64]) -> Poly {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let mut dd = ys.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
        }
    }
    let mut p = Poly::new(vec![dd[n - 1]]);
    for i in (0..n - 1).rev() {
        p = p.mul(&Poly::new(vec![-xs[i], 1.0])).add(&Poly::new(vec![dd[i]]));
    }
    p
}

/// Merge values closer than `tol` into `(value, multiplicity)` pairs.
pub fn cluster(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some((c, m)) if (v - *c).abs() <= tol => {
                *c = (*c * *m as f64 + v) / (*m as f64 + 1.0);
                *m += 1;
            }
            _ => out.push((v, 1)),
        }
    }
    out
}
