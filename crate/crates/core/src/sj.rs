//! Symmetric Jordan canonical forms over C and the Ivory affinity.
//!
//! Matrices are realized densely; dimensions stay below 8.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

const POLE_TOL: f64 = 1e-12;
/// Scaled tolerance for membership and ruling hypotheses.
pub const HYPOTHESIS_TOL: f64 = 1e-9;
/// Scaled tolerance for the vertex predicates.
pub const VERTEX_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Principal square root: `sqrt(r) e^{iθ}` for `a = r e^{2iθ}`, `-π < 2θ ≤ π`.
pub fn principal_sqrt(a: Complex64) -> Complex64 {
    let a = if a.im == 0.0 { Complex64::new(a.re, 0.0) } else { a };
    let r = a.norm();
    if r == 0.0 {
        return ZERO;
    }
    let mut arg = a.im.atan2(a.re);
    if arg <= -std::f64::consts::PI {
        arg = std::f64::consts::PI;
    }
    Complex64::from_polar(r.sqrt(), 0.5 * arg)
}

/// Generalized binomial coefficient `(alpha choose k)`.
fn binom(alpha: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (alpha - j as f64) / (j + 1) as f64)
}

/// Bilinear square `v^T v` (no conjugation).
pub fn bilinear(u: &CVec, v: &CVec) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

fn hnorm(v: &CVec) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn unit(dim: usize, k: usize) -> CVec {
    let mut e = CVec::zeros(dim);
    e[k] = ONE;
    e
}

/// Isotropic vector `f_j = (e_{2j-1} + i e_{2j}) / sqrt 2` in C^dim (j is 1-based).
pub fn isotropic(dim: usize, j: usize) -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut f = CVec::zeros(dim);
    f[2 * j - 2] = Complex64::new(s, 0.0);
    f[2 * j - 1] = Complex64::new(0.0, s);
    f
}

fn sym_outer(u: &CVec, v: &CVec) -> CMat {
    u * v.transpose() + v * u.transpose()
}

/// The nilpotent symmetric Jordan block `J_p`.
pub fn jordan_block(p: usize) -> CMat {
    let mut m = CMat::zeros(p, p);
    let k = p / 2;
    for j in 1..k {
        let fj = isotropic(p, j);
        let fbar = isotropic(p, j + 1).map(|c| c.conj());
        m += sym_outer(&fj, &fbar);
    }
    if k >= 1 {
        let fk = isotropic(p, k);
        if p % 2 == 0 {
            m += &fk * fk.transpose();
        } else {
            m += sym_outer(&fk, &unit(p, p - 1));
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SjBlock {
    pub eigenvalue: Complex64,
    pub size: usize,
}

impl SjBlock {
    pub fn new(eigenvalue: Complex64, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Range("block size must be at least 1".into()));
        }
        Ok(Self { eigenvalue, size })
    }

    /// `a I_p + J_p`.
    pub fn realize(&self) -> CMat {
        CMat::identity(self.size, self.size) * self.eigenvalue + jordan_block(self.size)
    }

    /// `Σ c_k J_p^k`.
    pub fn polynomial(&self, coeffs: &[Complex64]) -> CMat {
        let j = jordan_block(self.size);
        let mut power = CMat::identity(self.size, self.size);
        let mut out = CMat::zeros(self.size, self.size);
        for c in coeffs {
            out += &power * *c;
            power = &power * &j;
        }
        out
    }

    fn check_branch(&self, z: Complex64) -> Result<Complex64> {
        let b = ONE - z * self.eigenvalue;
        if b.norm() <= POLE_TOL * (1.0 + (z * self.eigenvalue).norm()) {
            return Err(Error::BranchPole { eigenvalue: format!("{}", self.eigenvalue) });
        }
        Ok(b)
    }

    /// `sqrt(I - z(aI + J))` by the terminating binomial series.
    fn sqrt_shifted(&self, z: Complex64) -> Result<CMat> {
        let b = self.check_branch(z)?;
        let rb = principal_sqrt(b);
        let coeffs: Vec<Complex64> = (0..self.size)
            .map(|k| rb * binom(0.5, k) * (-z / b).powu(k as u32))
            .collect();
        Ok(self.polynomial(&coeffs))
    }
}

/// Block list of a symmetric Jordan canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct SjMatrix {
    pub blocks: Vec<SjBlock>,
}

impl SjMatrix {
    pub fn new(blocks: Vec<SjBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Range("an SJ matrix needs at least one block".into()));
        }
        Ok(Self { blocks })
    }

    /// Diagonal form `diag(1/a_j)` for real semiaxes squared.
    pub fn from_axes(axes: &[f64]) -> Result<Self> {
        if axes.iter().any(|a| *a == 0.0) {
            return Err(Error::Range("axes must be nonzero".into()));
        }
        Self::new(axes.iter().map(|a| SjBlock { eigenvalue: Complex64::new(1.0 / a, 0.0), size: 1 }).collect())
    }

    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    pub fn block_diag(&self, parts: &[CMat]) -> CMat {
        let n = self.dimension();
        let mut m = CMat::zeros(n, n);
        let mut off = 0;
        for (b, p) in self.blocks.iter().zip(parts) {
            m.view_mut((off, off), (b.size, b.size)).copy_from(p);
            off += b.size;
        }
        m
    }

    pub fn realize(&self) -> CMat {
        let parts: Vec<CMat> = self.blocks.iter().map(SjBlock::realize).collect();
        self.block_diag(&parts)
    }

    /// `R_z = I - zM`.
    pub fn r_matrix(&self, z: Complex64) -> CMat {
        let n = self.dimension();
        CMat::identity(n, n) - self.realize() * z
    }

    pub fn check_branch(&self, z: Complex64) -> Result<()> {
        for b in &self.blocks {
            b.check_branch(z)?;
        }
        Ok(())
    }
}

/// `sqrt(I - zM)` with the principal branch on each block.
pub fn sqrt_sj(m: &SjMatrix, z: Complex64) -> Result<CMat> {
    let parts = m.blocks.iter().map(|b| b.sqrt_shifted(z)).collect::<Result<Vec<_>>>()?;
    Ok(m.block_diag(&parts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadricKind {
    /// Quadric with center.
    Qc,
    /// Quadric without center.
    Qwc,
    /// Isotropic quadric without center.
    Iqwc,
}

/// `x^T(Ax + 2B) + C = 0` with `A` in SJ form.
#[derive(Debug, Clone)]
pub struct CanonicalQuadric {
    pub a: SjMatrix,
    pub b: CVec,
    pub c: Complex64,
    pub kind: QuadricKind,
    am: CMat,
}

impl CanonicalQuadric {
    /// Fills in `B` and `C` from the kind and checks the kernel structure of `A`.
    pub fn new(a: SjMatrix, kind: QuadricKind) -> Result<Self> {
        let n = a.dimension();
        let zero = |b: &SjBlock| b.eigenvalue.norm() <= POLE_TOL;
        let last = a.blocks.len() - 1;
        let (b, c) = match kind {
            QuadricKind::Qc => {
                if a.blocks.iter().any(zero) {
                    return Err(Error::Hypothesis("QC needs invertible A".into()));
                }
                (CVec::zeros(n), -ONE)
            }
            QuadricKind::Qwc => {
                let ok = a.blocks[last].size == 1
                    && zero(&a.blocks[last])
                    && !a.blocks[..last].iter().any(zero);
                if !ok {
                    return Err(Error::Hypothesis("QWC needs ker A = span(e_{n+1})".into()));
                }
                (-unit(n, n - 1), ZERO)
            }
            QuadricKind::Iqwc => {
                let ok = a.blocks[0].size >= 2 && zero(&a.blocks[0]) && !a.blocks[1..].iter().any(zero);
                if !ok {
                    return Err(Error::Hypothesis("IQWC needs ker A = span(f_1)".into()));
                }
                (-isotropic(n, 1).map(|c| c.conj()), ZERO)
            }
        };
        let am = a.realize();
        Ok(Self { a, b, c, kind, am })
    }

    /// Real centered quadric `Σ x_j²/a_j = 1`.
    pub fn from_axes(axes: &[f64]) -> Result<Self> {
        Self::new(SjMatrix::from_axes(axes)?, QuadricKind::Qc)
    }

    pub fn dim(&self) -> usize {
        self.a.dimension()
    }

    pub fn a_matrix(&self) -> &CMat {
        &self.am
    }

    pub fn r_inv(&self, z: Complex64) -> Result<CMat> {
        self.a.check_branch(z)?;
        self.a
            .r_matrix(z)
            .try_inverse()
            .ok_or_else(|| Error::BranchPole { eigenvalue: "singular R_z".into() })
    }

    /// `Q_z(x) = x^T A R_z^{-1} x + 2(R_z^{-1}B)^T x + C + z B^T R_z^{-1} B`.
    pub fn eval(&self, z: Complex64, x: &CVec) -> Result<Complex64> {
        let ri = self.r_inv(z)?;
        let rb = &ri * &self.b;
        let quad = bilinear(x, &(&self.am * (&ri * x)));
        Ok(quad + bilinear(&rb, x) * 2.0 + self.c + z * bilinear(&self.b, &rb))
    }

    /// `|Q_z(x)|` divided by `max(1, |x|²)`.
    pub fn residual(&self, z: Complex64, x: &CVec) -> Result<f64> {
        let q = self.eval(z, x)?;
        Ok(q.norm() / hnorm(x).powi(2).max(1.0))
    }

    /// `N̂_z = R_z^{-1}(Ax + B)` for `x` on `Q_z`.
    pub fn normal_hat(&self, z: Complex64, x: &CVec) -> Result<CVec> {
        Ok(self.r_inv(z)? * (&self.am * x + &self.b))
    }

    fn require_on(&self, x: &CVec, what: &str) -> Result<()> {
        let r = self.residual(ZERO, x)?;
        if r > HYPOTHESIS_TOL {
            return Err(Error::Hypothesis(format!("{what} is off the quadric (residual {r:e})")));
        }
        Ok(())
    }

    /// Coefficients `(α, β, γ)` of `Q_z(x + t v) = α t² + 2β t + γ`.
    pub fn line_coeffs(&self, z: Complex64, x: &CVec, v: &CVec) -> Result<(Complex64, Complex64, Complex64)> {
        let ri = self.r_inv(z)?;
        let arv = &self.am * (&ri * v);
        let alpha = bilinear(v, &arv);
        let beta = bilinear(&arv, x) + bilinear(&(&ri * &self.b), v);
        Ok((alpha, beta, self.eval(z, x)?))
    }
}

/// Translation term `C(z) = -(½ ∫_0^z (√R_w)^{-1} dw) B`.
pub fn c_of_z(q: &CanonicalQuadric, z: Complex64) -> Result<CVec> {
    q.a.check_branch(z)?;
    let n = q.dim();
    Ok(match q.kind {
        QuadricKind::Qc => CVec::zeros(n),
        QuadricKind::Qwc => unit(n, n - 1) * (z * 0.5),
        QuadricKind::Iqwc => {
            let block = q.a.blocks[0];
            let p = block.size;
            let coeffs: Vec<Complex64> = (0..p)
                .map(|k| z.powu(k as u32 + 1) * (0.5 * binom(-0.5, k) * (-1f64).powi(k as i32) / (k + 1) as f64))
                .collect();
            let head = block.polynomial(&coeffs) * isotropic(p, 1).map(|c| c.conj());
            let mut out = CVec::zeros(n);
            out.rows_mut(0, p).copy_from(&head);
            out
        }
    })
}

/// Ivory affinity `x_z = √R_z x_0 + C(z)`.
pub fn ivory_map(q: &CanonicalQuadric, z: Complex64, x0: &CVec) -> Result<CVec> {
    let r = q.residual(ZERO, x0)?;
    if r > HYPOTHESIS_TOL {
        return Err(Error::OffQuadric { residual: r, tol: HYPOTHESIS_TOL });
    }
    Ok(sqrt_sj(&q.a, z)? * x0 + c_of_z(q, z)?)
}

/// Inverse of [`ivory_map`]: `x_0 = (√R_z)^{-1}(x_z - C(z))`.
pub fn ivory_inverse(q: &CanonicalQuadric, z: Complex64, xz: &CVec) -> Result<CVec> {
    let s = sqrt_sj(&q.a, z)?;
    let rhs = xz - c_of_z(q, z)?;
    s.lu().solve(&rhs).ok_or_else(|| Error::BranchPole { eigenvalue: "singular sqrt R_z".into() })
}

/// The metric identities of the Ivory affinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    /// `|V_0^1|² = |V_1^0|²`.
    IvoryTheorem,
    /// `w_z^T w_z = |w_0|²` for a ruling `w_0`.
    Henrici,
    /// `(V_0^1)^T N̂_0^0 = (V_1^0)^T N̂_0^1`.
    TangencySymmetry,
    /// `(V_0^1)^T w_0^0 + (V_1^0)^T w_z^0 = -z (N̂_0^0)^T w_0^0`.
    SegmentRulingAngle,
    /// `(w_0^0)^T √R_z w_0^1 = (w_z^0)^T w_0^1`.
    RulingRulingAngle,
    /// `(w_z^0)^T ŵ_z^0 = (w_0^0)^T ŵ_0^0` when `(w_0^0)^T A ŵ_0^0 = 0`.
    PolarRulings,
    /// `√R_z V_1^0 = -V_0^1 - z N̂_0^0`.
    KeyLemma,
}

impl Identity {
    pub const ALL: [Identity; 7] = [
        Identity::IvoryTheorem,
        Identity::Henrici,
        Identity::TangencySymmetry,
        Identity::SegmentRulingAngle,
        Identity::RulingRulingAngle,
        Identity::PolarRulings,
        Identity::KeyLemma,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Identity::IvoryTheorem => "ivory_theorem",
            Identity::Henrici => "henrici",
            Identity::TangencySymmetry => "tangency_symmetry",
            Identity::SegmentRulingAngle => "segment_ruling_angle",
            Identity::RulingRulingAngle => "ruling_ruling_angle",
            Identity::PolarRulings => "polar_rulings",
            Identity::KeyLemma => "key_lemma",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.name() == s)
    }
}

/// Points and rulings fed to [`check_identity`].
#[derive(Debug, Clone)]
pub struct IdentitySample {
    pub x00: CVec,
    pub x01: CVec,
    /// Ruling at `x00`.
    pub w00: Option<CVec>,
    /// Ruling at `x01`.
    pub w01: Option<CVec>,
    /// Vector `A`-conjugate to `w00`.
    pub w00_polar: Option<CVec>,
}

fn scaled(lhs: Complex64, rhs: Complex64) -> f64 {
    (lhs - rhs).norm() / 1f64.max(lhs.norm()).max(rhs.norm())
}

fn scaled_vec(lhs: &CVec, rhs: &CVec) -> f64 {
    hnorm(&(lhs - rhs)) / 1f64.max(hnorm(lhs)).max(hnorm(rhs))
}

fn require_ruling(q: &CanonicalQuadric, x: &CVec, w: Option<&CVec>, what: &str) -> Result<CVec> {
    let w = w.ok_or_else(|| Error::Hypothesis(format!("{what} is missing")))?.clone();
    let scale = hnorm(&w).powi(2).max(1e-300);
    let n = &q.am * x + &q.b;
    let waw = bilinear(&w, &(&q.am * &w)).norm() / scale;
    let wn = bilinear(&w, &n).norm() / (hnorm(&w) * hnorm(&n).max(1.0));
    if waw > HYPOTHESIS_TOL || wn > HYPOTHESIS_TOL {
        return Err(Error::Hypothesis(format!("{what} is not a ruling (w^T A w = {waw:e}, w^T N = {wn:e})")));
    }
    Ok(w)
}

/// Scaled residual `|LHS - RHS| / max(1, |LHS|, |RHS|)` of one identity.
pub fn check_identity(id: Identity, s: &IdentitySample, q: &CanonicalQuadric, z: Complex64) -> Result<f64> {
    q.require_on(&s.x00, "x_0^0")?;
    let root = sqrt_sj(&q.a, z)?;
    let xz0 = ivory_map(q, z, &s.x00)?;
    let n00 = &q.am * &s.x00 + &q.b;
    let needs_second = matches!(
        id,
        Identity::IvoryTheorem | Identity::TangencySymmetry | Identity::SegmentRulingAngle | Identity::KeyLemma
    );
    let (v01, v10) = if needs_second {
        q.require_on(&s.x01, "x_0^1")?;
        let xz1 = ivory_map(q, z, &s.x01)?;
        (&xz1 - &s.x00, &xz0 - &s.x01)
    } else {
        (CVec::zeros(q.dim()), CVec::zeros(q.dim()))
    };
    Ok(match id {
        Identity::IvoryTheorem => scaled(bilinear(&v01, &v01), bilinear(&v10, &v10)),
        Identity::Henrici => {
            let w = require_ruling(q, &s.x00, s.w00.as_ref(), "w_0^0")?;
            let wz = &root * &w;
            scaled(bilinear(&wz, &wz), bilinear(&w, &w))
        }
        Identity::TangencySymmetry => {
            let n01 = &q.am * &s.x01 + &q.b;
            scaled(bilinear(&v01, &n00), bilinear(&v10, &n01))
        }
        Identity::SegmentRulingAngle => {
            let w = require_ruling(q, &s.x00, s.w00.as_ref(), "w_0^0")?;
            let wz = &root * &w;
            scaled(bilinear(&v01, &w) + bilinear(&v10, &wz), -z * bilinear(&n00, &w))
        }
        Identity::RulingRulingAngle => {
            q.require_on(&s.x01, "x_0^1")?;
            let w0 = require_ruling(q, &s.x00, s.w00.as_ref(), "w_0^0")?;
            let w1 = require_ruling(q, &s.x01, s.w01.as_ref(), "w_0^1")?;
            scaled(bilinear(&w0, &(&root * &w1)), bilinear(&(&root * &w0), &w1))
        }
        Identity::PolarRulings => {
            let w = require_ruling(q, &s.x00, s.w00.as_ref(), "w_0^0")?;
            let wh = s.w00_polar.clone().ok_or_else(|| Error::Hypothesis("polar ruling is missing".into()))?;
            let conj = bilinear(&w, &(&q.am * &wh)).norm() / (hnorm(&w) * hnorm(&wh)).max(1e-300);
            if conj > HYPOTHESIS_TOL {
                return Err(Error::Hypothesis(format!("w^T A ŵ = {conj:e} is not zero")));
            }
            scaled(bilinear(&(&root * &w), &(&root * &wh)), bilinear(&w, &wh))
        }
        Identity::KeyLemma => scaled_vec(&(&root * &v10), &(-&v01 - &n00 * z)),
    })
}

/// Basis of `{v : n^T v = 0}`.
pub fn tangent_basis(n: &CVec) -> Result<Vec<CVec>> {
    let (k, nk) = n
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(k, c)| (k, *c))
        .ok_or(Error::ZeroNormal)?;
    if nk.norm() == 0.0 {
        return Err(Error::ZeroNormal);
    }
    let dim = n.len();
    Ok((0..dim)
        .filter(|&j| j != k)
        .map(|j| {
            let mut v = unit(dim, j);
            v[k] = -n[j] / nk;
            v
        })
        .collect())
}

/// Reflection of `d` in the hyperplane bilinearly orthogonal to `n`.
pub fn reflect_c(d: &CVec, n: &CVec) -> Result<CVec> {
    let nn = bilinear(n, n);
    if nn.norm() <= 1e-300 {
        return Err(Error::Hypothesis("isotropic normal".into()));
    }
    Ok(d - n * (bilinear(n, d) * 2.0 / nn))
}

fn unit_bilinear(v: &CVec, what: &str) -> Result<CVec> {
    let l = principal_sqrt(bilinear(v, v));
    if l.norm() <= 1e-12 * hnorm(v).max(1e-300) {
        return Err(Error::Hypothesis(format!("{what} is isotropic")));
    }
    Ok(v / l)
}

/// Smallest, over the sign choice, of the largest tangent pairing with `u/|u| ± v/|v|`.
fn reflection_defect(basis: &[CVec], u: &CVec, v: &CVec, what: &str) -> Result<f64> {
    let (uu, vv) = (unit_bilinear(u, what)?, unit_bilinear(v, what)?);
    let worst = |s: f64| {
        let w = &uu + &vv * Complex64::new(s, 0.0);
        basis.iter().map(|t| bilinear(t, &w).norm() / hnorm(t)).fold(0.0, f64::max)
    };
    Ok(worst(1.0).min(worst(-1.0)))
}

fn collinearity_defect(u: &CVec, v: &CVec) -> f64 {
    let scale = (hnorm(u) * hnorm(v)).max(1e-300);
    let mut worst: f64 = 0.0;
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            worst = worst.max((u[i] * v[j] - u[j] * v[i]).norm() / scale);
        }
    }
    worst
}

/// Discriminant of `Q_{z'}(x_0^a + t V_a^b) = 0` in `t`.
fn tangency_discriminant(q: &CanonicalQuadric, zp: Complex64, xa: &CVec, v: &CVec) -> Result<Complex64> {
    let ri = q.r_inv(zp)?;
    let n = &q.am * xa + &q.b;
    let rn = &ri * &n;
    Ok(bilinear(v, &rn).powu(2) - zp * bilinear(v, &(&q.am * (&ri * v))) * bilinear(&n, &rn))
}

/// Vertex predicates at `x_z^0` and `x_0^0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexReport {
    pub reflect_at_xz0: bool,
    pub reflect_at_x00: bool,
    pub collinear: bool,
    pub discriminant_symmetry_residual: f64,
    pub reflect_defect_xz0: f64,
    pub reflect_defect_x00: f64,
    pub collinear_defect: f64,
}

/// Evaluates the vertex configuration of three points of `q` and their Ivory images.
pub fn vertex_configuration(
    q: &CanonicalQuadric,
    z: Complex64,
    x00: &CVec,
    x01: &CVec,
    x02: &CVec,
    zp: Complex64,
) -> Result<VertexReport> {
    for (x, what) in [(x00, "x_0^0"), (x01, "x_0^1"), (x02, "x_0^2")] {
        q.require_on(x, what)?;
    }
    for (x, what) in [(x01, "x_0^1"), (x02, "x_0^2")] {
        if hnorm(&(x - x00)) <= 1e-12 * hnorm(x00).max(1.0) {
            return Err(Error::Hypothesis(format!("{what} coincides with x_0^0")));
        }
    }
    let xz0 = ivory_map(q, z, x00)?;
    let xz1 = ivory_map(q, z, x01)?;
    let xz2 = ivory_map(q, z, x02)?;
    let v10 = &xz0 - x01;
    let v20 = &xz0 - x02;
    let v01 = &xz1 - x00;
    let v02 = &xz2 - x00;
    let basis_z = tangent_basis(&q.normal_hat(z, &xz0)?)?;
    let basis_0 = tangent_basis(&q.normal_hat(ZERO, x00)?)?;
    let dz = reflection_defect(&basis_z, &v10, &v20, "V_1^0 or V_2^0")?;
    let d0 = reflection_defect(&basis_0, &v01, &v02, "V_0^1 or V_0^2")?;
    let col = collinearity_defect(&v01, &v02);
    let d_a = tangency_discriminant(q, zp, x00, &v01)?;
    let d_b = tangency_discriminant(q, zp, x01, &v10)?;
    Ok(VertexReport {
        reflect_at_xz0: dz < VERTEX_TOL,
        reflect_at_x00: d0 < VERTEX_TOL,
        collinear: col < VERTEX_TOL,
        discriminant_symmetry_residual: scaled(d_a, d_b),
        reflect_defect_xz0: dz,
        reflect_defect_x00: d0,
        collinear_defect: col,
    })
}

/// Uniform complex number with real and imaginary parts in `[-scale, scale]`.
pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Complex64 {
    Complex64::new(rng.random_range(-scale..=scale), rng.random_range(-scale..=scale))
}

/// Random block partition of `dim` with block sizes at most `max_block`.
///
/// Eigenvalues have modulus in `[0.3, 2]`; with `nilpotent` one block may be zero.
pub fn random_sj_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_block: usize, nilpotent: bool) -> SjMatrix {
    let mut blocks = Vec::new();
    let mut left = dim;
    while left > 0 {
        let p = rng.random_range(1..=max_block.min(left));
        let eig = if nilpotent && rng.random_bool(0.25) {
            ZERO
        } else {
            Complex64::from_polar(rng.random_range(0.3..2.0), rng.random_range(-3.1..3.1))
        };
        blocks.push(SjBlock { eigenvalue: eig, size: p });
        left -= p;
    }
    SjMatrix { blocks }
}

/// Random `z` with `|1 - z a| ≥ margin` on every block.
pub fn random_admissible_z<R: Rng + ?Sized>(rng: &mut R, m: &SjMatrix, scale: f64, margin: f64) -> Complex64 {
    loop {
        let z = random_complex(rng, scale);
        if m.blocks.iter().all(|b| (ONE - z * b.eigenvalue).norm() >= margin) {
            return z;
        }
    }
}

/// Draws all coordinates but one uniformly and solves `Q_0 = 0` for the remaining one.
pub fn random_point<R: Rng + ?Sized>(q: &CanonicalQuadric, rng: &mut R) -> CVec {
    let n = q.dim();
    let a = &q.am;
    let k = (0..n).max_by(|&i, &j| a[(i, i)].norm().total_cmp(&a[(j, j)].norm())).unwrap_or(0);
    loop {
        let mut x = CVec::from_fn(n, |_, _| random_complex(rng, 1.0));
        x[k] = ZERO;
        let mut e = CVec::zeros(n);
        e[k] = ONE;
        let (alpha, beta, gamma) = match q.line_coeffs(ZERO, &x, &e) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let t = if alpha.norm() > 1e-8 {
            let disc = principal_sqrt(beta * beta - alpha * gamma);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (-beta + disc * sign) / alpha
        } else if beta.norm() > 1e-8 {
            -gamma / (beta * 2.0)
        } else {
            continue;
        };
        x[k] = t;
        if hnorm(&x) < 1e2 && q.residual(ZERO, &x).is_ok_and(|r| r < 1e-12) {
            return x;
        }
    }
}

/// A ruling at `x`: `w^T N̂ = 0` and `w^T A w = 0`. Needs dimension at least 3.
pub fn random_ruling<R: Rng + ?Sized>(q: &CanonicalQuadric, x: &CVec, rng: &mut R) -> Option<CVec> {
    let n = &q.am * x + &q.b;
    let basis = tangent_basis(&n).ok()?;
    if basis.len() < 2 {
        return None;
    }
    for _ in 0..32 {
        let mut base = basis[0].clone();
        for b in &basis[2..] {
            base += b * random_complex(rng, 1.0);
        }
        let d = &basis[1];
        let aa = bilinear(d, &(&q.am * d));
        let bb = bilinear(&base, &(&q.am * d));
        let cc = bilinear(&base, &(&q.am * &base));
        if aa.norm() < 1e-8 {
            continue;
        }
        let s = (-bb + principal_sqrt(bb * bb - aa * cc)) / aa;
        let w = &base + d * s;
        let len = hnorm(&w);
        if len > 1e-6 && len < 1e4 {
            return Some(w / Complex64::new(len, 0.0));
        }
    }
    None
}

/// A vector `A`-conjugate to `w`.
pub fn random_polar<R: Rng + ?Sized>(q: &CanonicalQuadric, w: &CVec, rng: &mut R) -> Option<CVec> {
    let aw = &q.am * w;
    let k = (0..aw.len()).max_by(|&i, &j| aw[i].norm().total_cmp(&aw[j].norm()))?;
    if aw[k].norm() < 1e-10 {
        return None;
    }
    let mut r = CVec::from_fn(w.len(), |_, _| random_complex(rng, 1.0));
    let l = bilinear(&aw, &r);
    r[k] -= l / aw[k];
    Some(r)
}

/// Random sample with rulings when the dimension allows them.
pub fn random_identity_sample<R: Rng + ?Sized>(q: &CanonicalQuadric, rng: &mut R) -> IdentitySample {
    let x00 = random_point(q, rng);
    let x01 = random_point(q, rng);
    let w00 = random_ruling(q, &x00, rng);
    let w01 = random_ruling(q, &x01, rng);
    let w00_polar = w00.as_ref().and_then(|w| random_polar(q, w, rng));
    IdentitySample { x00, x01, w00, w01, w00_polar }
}

/// Vertex triple built so that `V_1^0` is tangent to `x_0` at `x_0^1` and `V_2^0`
/// is the reflection of `V_1^0` in `x_z` at `x_z^0`.
#[derive(Debug, Clone)]
pub struct VertexSample {
    pub x00: CVec,
    pub x01: CVec,
    pub x02: CVec,
    /// Scaled discriminant of the reflected line against `x_0`; zero when tangent.
    pub tangency_defect: f64,
}

pub fn constructive_vertex<R: Rng + ?Sized>(q: &CanonicalQuadric, z: Complex64, rng: &mut R) -> Option<VertexSample> {
    for _ in 0..64 {
        let x01 = random_point(q, rng);
        let basis = tangent_basis(&q.normal_hat(ZERO, &x01).ok()?).ok()?;
        let v = basis.iter().fold(CVec::zeros(q.dim()), |acc, b| acc + b * random_complex(rng, 1.0));
        let (alpha, beta, gamma) = q.line_coeffs(z, &x01, &v).ok()?;
        if alpha.norm() < 1e-6 {
            continue;
        }
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let t = (-beta + principal_sqrt(beta * beta - alpha * gamma) * sign) / alpha;
        let xz0 = &x01 + &v * t;
        let Ok(x00) = ivory_inverse(q, z, &xz0) else { continue };
        let Ok(nz) = q.normal_hat(z, &xz0) else { continue };
        let Ok(d) = reflect_c(&(&xz0 - &x01), &nz) else { continue };
        let Ok((a2, b2, c2)) = q.line_coeffs(ZERO, &xz0, &d) else { continue };
        if a2.norm() < 1e-6 {
            continue;
        }
        let s = -b2 / a2;
        let x02 = &xz0 + &d * s;
        let scale = 1f64.max((b2 * b2).norm()).max((a2 * c2).norm());
        let tangency_defect = (b2 * b2 - a2 * c2).norm() / scale;
        let spread = hnorm(&(&x01 - &x00)).min(hnorm(&(&x02 - &x00)));
        if hnorm(&x00) < 1e2 && hnorm(&x02) < 1e2 && spread > 1e-3 {
            return Some(VertexSample { x00, x01, x02, tangency_defect });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_abs(m: &CMat) -> f64 {
        m.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn principal_branch_convention() {
        assert!((principal_sqrt(c(-4.0, 0.0)) - c(0.0, 2.0)).norm() < 1e-15);
        assert!((principal_sqrt(c(-4.0, -0.0)) - c(0.0, 2.0)).norm() < 1e-15);
        assert!((principal_sqrt(c(0.0, 2.0)) - c(1.0, 1.0)).norm() < 1e-15);
        let w = principal_sqrt(c(-1.0, -1e-3));
        assert!(w.im < 0.0);
    }

    #[test]
    fn jordan_blocks_are_symmetric_and_nilpotent_of_exact_order() {
        for p in 1..=7 {
            let j = jordan_block(p);
            assert!(max_abs(&(&j - j.transpose())) < 1e-15, "p={p}");
            let mut pow = CMat::identity(p, p);
            for _ in 0..p - 1 {
                pow = &pow * &j;
            }
            if p > 1 {
                assert!(max_abs(&pow) > 1e-3, "J_{p}^(p-1) vanished");
            }
            assert!(max_abs(&(&pow * &j)) < 1e-14, "J_{p}^{p} is not zero");
        }
    }

    #[test]
    fn conjugate_first_isotropic_vector_is_cyclic() {
        let p = 5;
        let j = jordan_block(p);
        let f1bar = isotropic(p, 1).map(|c| c.conj());
        let mut v = f1bar.clone();
        let mut basis = Vec::new();
        for _ in 0..p {
            basis.push(v.clone());
            v = &j * v;
        }
        let m = CMat::from_columns(&basis);
        assert!(m.determinant().norm() > 1e-6);
    }

    #[test]
    fn nilpotent_square_root() {
        let m = SjMatrix::new(vec![SjBlock::new(ZERO, 2).unwrap()]).unwrap();
        let s = sqrt_sj(&m, c(-1.0, 0.0)).unwrap();
        let want = CMat::identity(2, 2) + jordan_block(2) * c(0.5, 0.0);
        assert!(max_abs(&(s - want)) < 1e-15);
    }

    #[test]
    fn diagonal_square_root_is_entrywise() {
        let m = SjMatrix::from_axes(&[3.0, 2.0, 1.0]).unwrap();
        let s = sqrt_sj(&m, c(-0.5, 0.0)).unwrap();
        for (k, a) in [3.0, 2.0, 1.0].iter().enumerate() {
            assert!((s[(k, k)].re - (1.0f64 + 0.5 / a).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn branch_pole_is_reported() {
        let m = SjMatrix::from_axes(&[2.0, 1.0]).unwrap();
        assert!(matches!(sqrt_sj(&m, c(2.0, 0.0)), Err(Error::BranchPole { .. })));
        let q = CanonicalQuadric::from_axes(&[2.0, 1.0]).unwrap();
        assert!(matches!(c_of_z(&q, c(1.0, 0.0)), Err(Error::BranchPole { .. })));
    }

    #[test]
    fn translation_term_closed_forms() {
        let q = CanonicalQuadric::from_axes(&[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(c_of_z(&q, c(0.7, 0.2)).unwrap(), CVec::zeros(3));
        let qwc = CanonicalQuadric::new(
            SjMatrix::new(vec![
                SjBlock::new(c(0.5, 0.0), 1).unwrap(),
                SjBlock::new(c(1.0, 0.0), 1).unwrap(),
                SjBlock::new(ZERO, 1).unwrap(),
            ])
            .unwrap(),
            QuadricKind::Qwc,
        )
        .unwrap();
        let cz = c_of_z(&qwc, c(3.0, 0.0)).unwrap();
        assert!((cz[2] - c(1.5, 0.0)).norm() < 1e-15);
        assert!(cz[0].norm() + cz[1].norm() == 0.0);
    }

    fn translation_identities(q: &CanonicalQuadric, z: Complex64) -> (f64, f64) {
        let n = q.dim();
        let root = sqrt_sj(&q.a, z).unwrap();
        let cz = c_of_z(q, z).unwrap();
        let id = CMat::identity(n, n);
        let first = q.a_matrix() * &cz + (&id - &root) * &q.b;
        let second = (&id + &root) * &cz + &q.b * z;
        (hnorm(&first), hnorm(&second))
    }

    #[test]
    fn isotropic_translation_satisfies_both_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in 2..=4 {
            let mut blocks = vec![SjBlock::new(ZERO, p).unwrap()];
            blocks.push(SjBlock::new(c(0.8, -0.3), 1).unwrap());
            let q = CanonicalQuadric::new(SjMatrix::new(blocks).unwrap(), QuadricKind::Iqwc).unwrap();
            for _ in 0..20 {
                let z = random_admissible_z(&mut rng, &q.a, 2.0, 0.2);
                let (a, b) = translation_identities(&q, z);
                assert!(a < 1e-12 && b < 1e-12, "p={p} z={z}: {a:e} {b:e}");
            }
        }
    }

    #[test]
    fn ivory_map_scales_axes() {
        let q = CanonicalQuadric::from_axes(&[2.0, 1.0]).unwrap();
        let x0 = CVec::from_vec(vec![ZERO, ONE]);
        let xz = ivory_map(&q, c(-1.0, 0.0), &x0).unwrap();
        assert!(xz[0].norm() < 1e-15);
        assert!((xz[1] - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(ivory_map(&q, ZERO, &x0).unwrap(), x0);
        let off = CVec::from_vec(vec![ONE, ONE]);
        assert!(matches!(ivory_map(&q, c(-1.0, 0.0), &off), Err(Error::OffQuadric { .. })));
    }

    #[test]
    fn ivory_theorem_on_real_ellipse() {
        let q = CanonicalQuadric::from_axes(&[2.0, 1.0]).unwrap();
        let s = IdentitySample {
            x00: CVec::from_vec(vec![c(2f64.sqrt(), 0.0), ZERO]),
            x01: CVec::from_vec(vec![ZERO, ONE]),
            w00: None,
            w01: None,
            w00_polar: None,
        };
        let z = c(-1.0, 0.0);
        let xz1 = ivory_map(&q, z, &s.x01).unwrap();
        let xz0 = ivory_map(&q, z, &s.x00).unwrap();
        let d1 = bilinear(&(&xz1 - &s.x00), &(&xz1 - &s.x00));
        let d0 = bilinear(&(&xz0 - &s.x01), &(&xz0 - &s.x01));
        assert!((d1 - c(4.0, 0.0)).norm() < 1e-14);
        assert!((d0 - c(4.0, 0.0)).norm() < 1e-14);
        assert!(check_identity(Identity::IvoryTheorem, &s, &q, z).unwrap() < 1e-15);
    }

    #[test]
    fn henrici_at_zero_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = CanonicalQuadric::from_axes(&[3.0, 2.0, 1.0]).unwrap();
        let s = random_identity_sample(&q, &mut rng);
        assert_eq!(check_identity(Identity::Henrici, &s, &q, ZERO).unwrap(), 0.0);
    }

    #[test]
    fn missing_ruling_is_a_hypothesis_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = CanonicalQuadric::from_axes(&[3.0, 2.0, 1.0]).unwrap();
        let mut s = random_identity_sample(&q, &mut rng);
        s.w00 = Some(CVec::from_vec(vec![ONE, ZERO, ZERO]));
        assert!(matches!(check_identity(Identity::Henrici, &s, &q, c(-0.5, 0.0)), Err(Error::Hypothesis(_))));
    }

    fn random_quadric(rng: &mut ChaCha8Rng) -> CanonicalQuadric {
        let dim = rng.random_range(3..=5);
        match rng.random_range(0..3) {
            0 => CanonicalQuadric::new(random_sj_matrix(rng, dim, 3, false), QuadricKind::Qc).unwrap(),
            1 => {
                let mut m = random_sj_matrix(rng, dim - 1, 3, false);
                m.blocks.push(SjBlock { eigenvalue: ZERO, size: 1 });
                CanonicalQuadric::new(m, QuadricKind::Qwc).unwrap()
            }
            _ => {
                let p = rng.random_range(2..=dim.min(4));
                let mut m = SjMatrix { blocks: vec![SjBlock { eigenvalue: ZERO, size: p }] };
                if dim > p {
                    m.blocks.extend(random_sj_matrix(rng, dim - p, 2, false).blocks);
                }
                CanonicalQuadric::new(m, QuadricKind::Iqwc).unwrap()
            }
        }
    }

    #[test]
    fn identity_suite_randomized_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for id in Identity::ALL {
            let mut done = 0;
            while done < 1000 {
                let q = random_quadric(&mut rng);
                let z = random_admissible_z(&mut rng, &q.a, 1.5, 0.2);
                let s = random_identity_sample(&q, &mut rng);
                match check_identity(id, &s, &q, z) {
                    Ok(r) => {
                        assert!(r < 1e-10, "{} residual {r:e} kind {:?}", id.name(), q.kind);
                        done += 1;
                    }
                    Err(Error::Hypothesis(_)) => {}
                    Err(e) => panic!("{}: {e}", id.name()),
                }
            }
        }
    }

    #[test]
    fn vertex_configuration_on_constructed_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut done = 0;
        while done < 200 {
            let q = CanonicalQuadric::new(random_sj_matrix(&mut rng, 3, 2, false), QuadricKind::Qc).unwrap();
            let z = random_admissible_z(&mut rng, &q.a, 1.0, 0.3);
            let Some(v) = constructive_vertex(&q, z, &mut rng) else { continue };
            if v.tangency_defect > 1e-8 {
                panic!("reflected line not tangent: {:e}", v.tangency_defect);
            }
            let zp = random_admissible_z(&mut rng, &q.a, 1.0, 0.3);
            let r = vertex_configuration(&q, z, &v.x00, &v.x01, &v.x02, zp).unwrap();
            assert!(r.reflect_at_xz0, "{r:?}");
            assert!(r.reflect_at_x00, "{r:?}");
            assert!(r.collinear, "{r:?}");
            assert!(r.discriminant_symmetry_residual < 1e-9, "{r:?}");
            done += 1;
        }
    }

    #[test]
    fn coincident_points_are_trivially_configured() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = CanonicalQuadric::from_axes(&[3.0, 2.0, 1.0]).unwrap();
        let x00 = random_point(&q, &mut rng);
        let x01 = random_point(&q, &mut rng);
        let r = vertex_configuration(&q, c(-0.4, 0.1), &x00, &x01, &x01, c(0.3, 0.2)).unwrap();
        assert!(r.reflect_at_xz0 && r.reflect_at_x00 && r.collinear);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn square_root_squares_back(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = rng.random_range(1..=6);
            let m = random_sj_matrix(&mut rng, dim, 4, true);
            let z = random_admissible_z(&mut rng, &m, 2.0, 0.05);
            let s = sqrt_sj(&m, z).unwrap();
            let r = m.r_matrix(z);
            let res = max_abs(&(&s * &s - &r)) / max_abs(&r).max(1.0);
            prop_assert!(res < 1e-12, "residual {:e}", res);
        }

        #[test]
        fn same_partition_polynomials_commute(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = rng.random_range(1..=6);
            let m = random_sj_matrix(&mut rng, dim, 4, true);
            let make = |rng: &mut ChaCha8Rng| {
                let parts: Vec<CMat> = m.blocks.iter().map(|b| {
                    let coeffs: Vec<Complex64> = (0..b.size).map(|_| random_complex(rng, 1.0)).collect();
                    b.polynomial(&coeffs)
                }).collect();
                m.block_diag(&parts)
            };
            let p = make(&mut rng);
            let q = make(&mut rng);
            prop_assert!(max_abs(&(&p * &q - &q * &p)) < 1e-12);
            prop_assert!(max_abs(&(&p - p.transpose())) < 1e-12);
        }

        #[test]
        fn ivory_image_lies_on_confocal_and_inverts(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_quadric(&mut rng);
            let z = random_admissible_z(&mut rng, &q.a, 1.5, 0.2);
            let x0 = random_point(&q, &mut rng);
            let xz = ivory_map(&q, z, &x0).unwrap();
            prop_assert!(q.residual(z, &xz).unwrap() < 1e-10);
            let back = ivory_inverse(&q, z, &xz).unwrap();
            prop_assert!(hnorm(&(back - &x0)) < 1e-10 * hnorm(&x0).max(1.0));
        }

        #[test]
        fn translated_real_family_maps_back(a1 in 2.0f64..5.0, a2 in 0.5f64..1.9, zr in -2.0f64..0.4, zi in -0.5f64..0.5, t in 0.0f64..6.28) {
            let q = CanonicalQuadric::from_axes(&[a1, a2]).unwrap();
            let z = c(zr, zi);
            let x0 = CVec::from_vec(vec![c(a1.sqrt() * t.cos(), 0.0), c(a2.sqrt() * t.sin(), 0.0)]);
            let xz = ivory_map(&q, z, &x0).unwrap();
            let shifted = CanonicalQuadric::new(
                SjMatrix::new(vec![
                    SjBlock::new(ONE / (c(a1, 0.0) - z), 1).unwrap(),
                    SjBlock::new(ONE / (c(a2, 0.0) - z), 1).unwrap(),
                ]).unwrap(),
                QuadricKind::Qc,
            ).unwrap();
            let back = ivory_map(&shifted, -z, &xz).unwrap();
            prop_assert!(hnorm(&(back - x0)) < 1e-10);
        }

        #[test]
        fn discriminant_is_symmetric(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_quadric(&mut rng);
            let z = random_admissible_z(&mut rng, &q.a, 1.0, 0.3);
            let zp = random_admissible_z(&mut rng, &q.a, 1.0, 0.3);
            let x00 = random_point(&q, &mut rng);
            let x01 = random_point(&q, &mut rng);
            let v01 = ivory_map(&q, z, &x01).unwrap() - &x00;
            let v10 = ivory_map(&q, z, &x00).unwrap() - &x01;
            let a = tangency_discriminant(&q, zp, &x00, &v01).unwrap();
            let b = tangency_discriminant(&q, zp, &x01, &v10).unwrap();
            prop_assert!(scaled(a, b) < 1e-9, "{:e}", scaled(a, b));
        }
    }
}
