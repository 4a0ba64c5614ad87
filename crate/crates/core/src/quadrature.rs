//! Hyperelliptic integrals `∫ P(u) du / √Δ(u)` and the closure and length
//! relations built from them.
//!
//! Integrals between two simple roots of the radicand use
//! `u = m + h sin φ`; an interval with one singular end uses
//! `u = r ∓ L sin² ψ`. Both make the integrand analytic, after which
//! Gauss–Legendre with node doubling converges spectrally.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::gauss;
use crate::poly::Poly;
use crate::rootfind::brent;

/// Default pairwise separation between radical roots.
pub const EPS_SEP: f64 = 1e-9;
/// Relative change that stops node doubling.
pub const REL_TOL: f64 = 1e-11;

/// `sign · Π (u − roots[i])` with simple real roots.
#[derive(Debug, Clone, PartialEq)]
pub struct RootRadical {
    pub roots: Vec<f64>,
    pub sign: f64,
}

impl RootRadical {
    pub fn new(roots: Vec<f64>, sign: f64) -> Result<Self> {
        let mut sorted = roots.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in sorted.windows(2) {
            if w[1] - w[0] <= EPS_SEP {
                return Err(Error::Separation(format!("roots {} and {} collide", w[0], w[1])));
            }
        }
        Ok(Self { roots, sign })
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.roots.iter().fold(self.sign, |acc, r| acc * (u - r))
    }

    fn root_at(&self, x: f64) -> Option<usize> {
        let tol = 1e-12 * (1.0 + x.abs());
        self.roots.iter().position(|r| (r - x).abs() <= tol)
    }

    /// Product over the roots other than `skip`.
    fn rest(&self, u: f64, skip: &[usize]) -> f64 {
        self.roots
            .iter()
            .enumerate()
            .filter(|(i, _)| !skip.contains(i))
            .fold(1.0, |acc, (_, r)| acc * (u - r))
    }

    /// `∫_lo^hi P(u) du / √(radical)`; swapping the limits negates the value.
    pub fn integrate(&self, p: &Poly, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.integrate_detailed(p, lo, hi)?.value)
    }

    pub fn integrate_detailed(&self, p: &Poly, lo: f64, hi: f64) -> Result<gauss::Quadrature> {
        if lo == hi {
            return Ok(gauss::Quadrature { value: 0.0, nodes: 0, change: 0.0 });
        }
        if lo > hi {
            let mut q = self.integrate_detailed(p, hi, lo)?;
            q.value = -q.value;
            return Ok(q);
        }
        let (ilo, ihi) = (self.root_at(lo), self.root_at(hi));
        for (i, &r) in self.roots.iter().enumerate() {
            if Some(i) != ilo && Some(i) != ihi && r > lo && r < hi {
                return Err(Error::Interval { lo, hi });
            }
        }
        if self.eval(0.5 * (lo + hi)) <= 0.0 {
            return Err(Error::Interval { lo, hi });
        }
        let s = self.sign;
        match (ilo, ihi) {
            (Some(i), Some(j)) => {
                let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                let skip = [i, j];
                gauss::integrate(
                    |phi| {
                        let u = m + h * phi.sin();
                        p.eval(u) / (-s * self.rest(u, &skip)).sqrt()
                    },
                    -FRAC_PI_2,
                    FRAC_PI_2,
                    REL_TOL,
                )
            }
            (None, Some(j)) => {
                let l = hi - lo;
                let skip = [j];
                gauss::integrate(
                    |psi| {
                        let u = hi - l * psi.sin().powi(2);
                        2.0 * l.sqrt() * psi.cos() * p.eval(u) / (-s * self.rest(u, &skip)).sqrt()
                    },
                    0.0,
                    FRAC_PI_2,
                    REL_TOL,
                )
            }
            (Some(i), None) => {
                let l = hi - lo;
                let skip = [i];
                gauss::integrate(
                    |psi| {
                        let u = lo + l * psi.sin().powi(2);
                        2.0 * l.sqrt() * psi.cos() * p.eval(u) / (s * self.rest(u, &skip)).sqrt()
                    },
                    0.0,
                    FRAC_PI_2,
                    REL_TOL,
                )
            }
            (None, None) => gauss::integrate(|u| p.eval(u) / self.eval(u).sqrt(), lo, hi, REL_TOL),
        }
    }
}

/// `Δ(u) = (u − u²₀)(u − u³₀) Π (a_j − u)` for a triaxial family.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicRadical {
    pub axes: [f64; 3],
    pub u2_0: f64,
    pub u3_0: f64,
    radical: RootRadical,
}

impl CharacteristicRadical {
    pub fn new(axes: [f64; 3], u2_0: f64, u3_0: f64) -> Result<Self> {
        let [a1, a2, a3] = axes;
        if !(a1 > a2 && a2 > a3) {
            return Err(Error::Range(format!("axes {axes:?} must be strictly decreasing")));
        }
        if !(u2_0 > a3 && u2_0 < a2) {
            return Err(Error::Range(format!("u2_0 = {u2_0} must lie in ({a3}, {a2})")));
        }
        if u3_0 >= a3 {
            return Err(Error::Range(format!("u3_0 = {u3_0} must be below {a3}")));
        }
        let radical = RootRadical::new(vec![a1, a2, a3, u2_0, u3_0], -1.0)?;
        Ok(Self { axes, u2_0, u3_0, radical })
    }

    pub fn delta(&self, u: f64) -> f64 {
        self.radical.eval(u)
    }

    pub fn radical(&self) -> &RootRadical {
        &self.radical
    }

    pub fn hyperelliptic(&self, p: &Poly, lo: f64, hi: f64) -> Result<f64> {
        self.radical.integrate(p, lo, hi)
    }

    /// `∫_{a₂}^{a₁} P du / √Δ`.
    pub fn i1(&self, p: &Poly) -> Result<f64> {
        self.hyperelliptic(p, self.axes[1], self.axes[0])
    }

    /// `∫_{a₃}^{u²₀} P du / √Δ`.
    pub fn i2(&self, p: &Poly) -> Result<f64> {
        self.hyperelliptic(p, self.axes[2], self.u2_0)
    }

    /// `∫_{u³₁}^{u³₀} P du / √Δ`.
    pub fn i3(&self, p: &Poly, u3_1: f64) -> Result<f64> {
        if u3_1 > self.u3_0 {
            return Err(Error::Range(format!("u3_1 = {u3_1} must not exceed u3_0 = {}", self.u3_0)));
        }
        self.hyperelliptic(p, u3_1, self.u3_0)
    }

    /// `u − u³₀`.
    pub fn p_geodesic(&self) -> Poly {
        Poly::new(vec![-self.u3_0, 1.0])
    }

    /// `(u − u²₀)(u − u³₀)`.
    pub fn p_length(&self) -> Poly {
        Poly::from_roots(&[self.u2_0, self.u3_0])
    }

    /// `n I₁[P] − n′ I₂[P] + m I₃[P]`.
    pub fn combination(&self, p: &Poly, u3_1: f64, w: WindingCounts) -> Result<f64> {
        let mut s = 0.0;
        if w.n != 0 {
            s += w.n as f64 * self.i1(p)?;
        }
        if w.n_prime != 0 {
            s -= w.n_prime as f64 * self.i2(p)?;
        }
        if w.m != 0 {
            s += w.m as f64 * self.i3(p, u3_1)?;
        }
        Ok(s)
    }
}

/// Winding counts of a closed configuration: `n` crossings of `{x² = 0}`,
/// `n′` tangencies with the hyperboloid, `m` vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindingCounts {
    pub n: u32,
    pub n_prime: u32,
    pub m: u32,
}

impl WindingCounts {
    pub fn new(n: u32, n_prime: u32, m: u32) -> Result<Self> {
        if n % 2 != 0 || n_prime % 2 != 0 {
            return Err(Error::Range(format!("n = {n} and n' = {n_prime} must be even")));
        }
        Ok(Self { n, n_prime, m })
    }
}

/// The first two closure residuals (`P = 1` and `P = u`).
pub fn darboux_residuals(rad: &CharacteristicRadical, u3_1: f64, w: WindingCounts) -> Result<(f64, f64)> {
    Ok((
        rad.combination(&Poly::new(vec![1.0]), u3_1, w)?,
        rad.combination(&Poly::new(vec![0.0, 1.0]), u3_1, w)?,
    ))
}

/// The single closure residual with `P = u − u³₀`.
pub fn thread_residual(rad: &CharacteristicRadical, u3_1: f64, w: WindingCounts) -> Result<f64> {
    rad.combination(&rad.p_geodesic(), u3_1, w)
}

/// Which unknowns a closure search solves for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosureMode {
    /// Solve `(u²₀, u³₁)` for both Darboux residuals.
    Darboux2,
    /// Solve `u³₁` alone for the thread residual, `u²₀` given.
    Thread1 { u2_0: f64 },
    /// Solve `u²₀` for the thread residual with no vertices.
    ClosedGeodesic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureSolution {
    pub u2_0: f64,
    pub u3_1: f64,
    pub residual: f64,
}

/// Search boxes are kept this far inside the admissible open intervals.
const BOX_MARGIN: f64 = 1e-6;
/// Grid resolution of the two-parameter scan.
pub const GRID: usize = 32;

/// Lower end of the `u³₁` search range.
fn u3_1_floor(axes: [f64; 3], u3_0: f64) -> f64 {
    u3_0 - 8.0 * (axes[0] - axes[2]).max(axes[0])
}

pub fn solve_closure(axes: [f64; 3], u3_0: f64, w: WindingCounts, mode: ClosureMode) -> Result<ClosureSolution> {
    match mode {
        ClosureMode::Thread1 { u2_0 } => solve_thread1(axes, u2_0, u3_0, w),
        ClosureMode::ClosedGeodesic => solve_closed_geodesic(axes, u3_0, w),
        ClosureMode::Darboux2 => solve_darboux2(axes, u3_0, w),
    }
}

fn solve_thread1(axes: [f64; 3], u2_0: f64, u3_0: f64, w: WindingCounts) -> Result<ClosureSolution> {
    let rad = CharacteristicRadical::new(axes, u2_0, u3_0)?;
    let base = thread_residual(&rad, u3_0, w)?;
    if base == 0.0 {
        return Ok(ClosureSolution { u2_0, u3_1: u3_0, residual: 0.0 });
    }
    let f = |u: f64| thread_residual(&rad, u, w).unwrap_or(f64::NAN);
    let lo = u3_1_floor(axes, u3_0);
    let hi = u3_0;
    // Residual is monotone in u³₁ (the third integrand keeps one sign), so a
    // single bracket decides existence.
    let (flo, fhi) = (f(lo), base);
    if flo.signum() == fhi.signum() {
        return Err(Error::NotFound {
            reason: format!("thread residual keeps sign on [{lo}, {hi}]: {flo:e} .. {fhi:e}"),
            grid: vec![vec![lo, flo], vec![hi, fhi]],
        });
    }
    let u3_1 = brent(f, lo, hi, 1e-14, 200).ok_or_else(|| Error::NotFound {
        reason: "Brent iteration failed".into(),
        grid: vec![],
    })?;
    Ok(ClosureSolution { u2_0, u3_1, residual: thread_residual(&rad, u3_1, w)? })
}

fn solve_closed_geodesic(axes: [f64; 3], u3_0: f64, w: WindingCounts) -> Result<ClosureSolution> {
    if w.m != 0 {
        return Err(Error::Range("closed geodesics have no vertices (m = 0)".into()));
    }
    let [_, a2, a3] = axes;
    let f = |u2: f64| {
        CharacteristicRadical::new(axes, u2, u3_0)
            .and_then(|r| thread_residual(&r, u3_0, w))
            .unwrap_or(f64::NAN)
    };
    let span = a2 - a3;
    let samples = 64;
    let grid: Vec<Vec<f64>> = (0..=samples)
        .map(|k| {
            let u = a3 + span * (BOX_MARGIN + (1.0 - 2.0 * BOX_MARGIN) * k as f64 / samples as f64);
            vec![u, f(u)]
        })
        .collect();
    for pair in grid.windows(2) {
        let (x0, f0, x1, f1) = (pair[0][0], pair[0][1], pair[1][0], pair[1][1]);
        if f0.is_finite() && f1.is_finite() && f0.signum() != f1.signum() {
            if let Some(u2_0) = brent(f, x0, x1, 1e-15, 200) {
                return Ok(ClosureSolution { u2_0, u3_1: u3_0, residual: f(u2_0) });
            }
        }
    }
    Err(Error::NotFound { reason: "closed-geodesic residual keeps sign on the scanned range".into(), grid })
}

fn solve_darboux2(axes: [f64; 3], u3_0: f64, w: WindingCounts) -> Result<ClosureSolution> {
    let [_, a2, a3] = axes;
    let lo1 = u3_1_floor(axes, u3_0);
    let param = |i: f64, j: f64| {
        (
            a3 + (a2 - a3) * (BOX_MARGIN + (1.0 - 2.0 * BOX_MARGIN) * i),
            lo1 + (u3_0 - lo1) * (BOX_MARGIN + (1.0 - 2.0 * BOX_MARGIN) * j),
        )
    };
    let residual = |u2: f64, u31: f64| -> Option<(f64, f64)> {
        let rad = CharacteristicRadical::new(axes, u2, u3_0).ok()?;
        darboux_residuals(&rad, u31, w).ok()
    };
    let mut grid = Vec::with_capacity((GRID + 1) * (GRID + 1));
    let mut seeds = Vec::new();
    let mut values = vec![vec![None; GRID + 1]; GRID + 1];
    for (i, row) in values.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let (u2, u31) = param(i as f64 / GRID as f64, j as f64 / GRID as f64);
            let r = residual(u2, u31);
            if let Some((r1, r2)) = r {
                grid.push(vec![u2, u31, r1, r2]);
            }
            *cell = r;
        }
    }
    for i in 0..GRID {
        for j in 0..GRID {
            let corners = [values[i][j], values[i + 1][j], values[i][j + 1], values[i + 1][j + 1]];
            if corners.iter().any(|c| c.is_none()) {
                continue;
            }
            let cs: Vec<(f64, f64)> = corners.iter().map(|c| c.unwrap()).collect();
            let changes = |k: usize| {
                let v: Vec<f64> = cs.iter().map(|c| if k == 0 { c.0 } else { c.1 }).collect();
                v.iter().any(|x| *x > 0.0) && v.iter().any(|x| *x < 0.0)
            };
            if changes(0) && changes(1) {
                let (u2, u31) = param((i as f64 + 0.5) / GRID as f64, (j as f64 + 0.5) / GRID as f64);
                let norm = cs.iter().map(|c| c.0.hypot(c.1)).fold(f64::INFINITY, f64::min);
                seeds.push((norm, u2, u31));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for &(_, u2, u31) in &seeds {
        if let Some(sol) = newton2(&residual, u2, u31, (a3, a2), (lo1, u3_0)) {
            return Ok(sol);
        }
    }
    Err(Error::NotFound {
        reason: format!("no Darboux closure for {w:?} on a {GRID}x{GRID} grid ({} seed cells)", seeds.len()),
        grid,
    })
}

/// Damped Newton with a forward-difference Jacobian, kept inside the box.
fn newton2<F: Fn(f64, f64) -> Option<(f64, f64)>>(
    f: &F,
    x0: f64,
    y0: f64,
    xr: (f64, f64),
    yr: (f64, f64),
) -> Option<ClosureSolution> {
    let (mut x, mut y) = (x0, y0);
    let (mut r1, mut r2) = f(x, y)?;
    for _ in 0..60 {
        let norm = r1.hypot(r2);
        if norm < 1e-12 {
            break;
        }
        let hx = 1e-7 * (xr.1 - xr.0);
        let hy = 1e-7 * (yr.1 - yr.0);
        let (fx1, fx2) = f(x + hx, y).or_else(|| f(x - hx, y).map(|v| (2.0 * r1 - v.0, 2.0 * r2 - v.1)))?;
        let (fy1, fy2) = f(x, y + hy).or_else(|| f(x, y - hy).map(|v| (2.0 * r1 - v.0, 2.0 * r2 - v.1)))?;
        let (j11, j21) = ((fx1 - r1) / hx, (fx2 - r2) / hx);
        let (j12, j22) = ((fy1 - r1) / hy, (fy2 - r2) / hy);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (j22 * r1 - j12 * r2) / det;
        let dy = (-j21 * r1 + j11 * r2) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let (nx, ny) = (x - lambda * dx, y - lambda * dy);
            if nx > xr.0 && nx < xr.1 && ny > yr.0 && ny < yr.1 {
                if let Some((n1, n2)) = f(nx, ny) {
                    if n1.hypot(n2) < norm {
                        x = nx;
                        y = ny;
                        r1 = n1;
                        r2 = n2;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r1.hypot(r2) < 1e-9).then_some(ClosureSolution { u2_0: x, u3_1: y, residual: r1.hypot(r2) })
}

/// Which displayed length relation to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerimeterVariant {
    /// Polygon perimeter from `P = u²`.
    Darb,
    /// Thread length from `P = u(u − u³₀)`.
    Darb1,
    /// Staude thread, `(n, n′, m) = (2, 2, 1)`, `P = (u − u²₀)(u − u³₀)`.
    Staud,
    /// Mixed thread with line-of-curvature slack, `P = (u − u²₀)(u − u³₀)`.
    Staud1,
}

/// Euclidean length of the configuration described by `w`.
///
/// Along a common tangent `2 ds = Σ ±ε_k P(u^k) du^k / √Δ`, so the length is
/// half the sum of the signed sweeps. Each winding count stands for two
/// sweeps of its coordinate, except in `Staud1` where `m` counts single
/// sweeps of `u³`.
pub fn perimeter_formula(
    rad: &CharacteristicRadical,
    u3_1: f64,
    w: WindingCounts,
    variant: PerimeterVariant,
) -> Result<f64> {
    match variant {
        PerimeterVariant::Darb => rad.combination(&Poly::new(vec![0.0, 0.0, 1.0]), u3_1, w),
        PerimeterVariant::Darb1 => rad.combination(&Poly::new(vec![0.0, -rad.u3_0, 1.0]), u3_1, w),
        PerimeterVariant::Staud => {
            let p = rad.p_length();
            Ok(2.0 * rad.i1(&p)? - 2.0 * rad.i2(&p)? + rad.i3(&p, u3_1)?)
        }
        PerimeterVariant::Staud1 => {
            let p = rad.p_length();
            let mut s = w.n as f64 * rad.i1(&p)? - w.n_prime as f64 * rad.i2(&p)?;
            if w.m != 0 {
                s += 0.5 * w.m as f64 * rad.i3(&p, u3_1)?;
            }
            Ok(s)
        }
    }
}

/// `∫_{a₂}^{a₁} (u − u³₀) du/√Δ − ∫_{a₃}^{u²₀} (u − u³₀) du/√Δ`.
pub fn half_turn_criterion(rad: &CharacteristicRadical) -> Result<f64> {
    let p = rad.p_geodesic();
    Ok(rad.i1(&p)? - rad.i2(&p)?)
}
