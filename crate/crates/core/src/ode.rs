//! Adaptive Dormand–Prince 5(4) integration with dense output.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { atol: 1e-11, rtol: 0.0, max_step: f64::INFINITY, min_step: 1e-14, max_steps: 2_000_000 }
    }
}

/// One accepted step with the data needed for Hermite interpolation.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

/// Accepted steps including the initial point.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub steps: Vec<Step<N>>,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> &Step<N> {
        self.steps.last().expect("trajectory holds the initial point")
    }

    /// Cubic Hermite interpolation between the two steps enclosing `t`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let i = self.steps.partition_point(|s| s.t <= t).clamp(1, self.steps.len().max(2) - 1);
        if self.steps.len() == 1 {
            return self.steps[0].y;
        }
        hermite(&self.steps[i - 1], &self.steps[i], t)
    }
}

pub fn hermite<const N: usize>(a: &Step<N>, b: &Step<N>, t: f64) -> [f64; N] {
    let h = b.t - a.t;
    if h == 0.0 {
        return a.y;
    }
    let s = (t - a.t) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    std::array::from_fn(|k| h00 * a.y[k] + h10 * h * a.dy[k] + h01 * b.y[k] + h11 * h * b.dy[k])
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` to `t1` (`t1 > t0`).
pub fn dopri5<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], t1: f64, opts: &OdeOptions) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut t = t0;
    let mut y = y0;
    let mut k0 = f(t, &y);
    let mut steps = vec![Step { t, y, dy: k0 }];
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(Trajectory { steps });
    }
    let mut h = (0.01 * span).min(opts.max_step).max(opts.min_step);
    let mut count = 0;
    while t < t1 {
        count += 1;
        if count > opts.max_steps {
            return Err(Error::Stiffness(format!("step budget exhausted at t = {t}")));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let mut k = [[0.0; N]; 7];
        k[0] = k0;
        for s in 1..7 {
            let ys: [f64; N] = std::array::from_fn(|i| y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>());
            k[s] = f(t + C[s] * h, &ys);
        }
        let y5: [f64; N] = std::array::from_fn(|i| y[i] + h * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>());
        let mut err: f64 = 0.0;
        for i in 0..N {
            let e = h * (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>();
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max(e.abs() / sc);
        }
        if !err.is_finite() {
            h *= 0.25;
            if h < opts.min_step {
                return Err(Error::Stiffness(format!("non-finite derivative near t = {t}")));
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y5;
            k0 = k[6];
            steps.push(Step { t, y, dy: k0 });
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(opts.max_step);
        if h < opts.min_step && t < t1 {
            return Err(Error::Stiffness(format!("step size fell below {:e} at t = {t}", opts.min_step)));
        }
    }
    Ok(Trajectory { steps })
}
