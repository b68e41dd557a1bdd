//! Total-degree homotopy `H(x, t) = (1 - t) * gamma * G(x) + t * F(x)` with start system
//! `G_i = x_i^{d_i} - 1`, tracked in complex arithmetic from `t = 0` to `t = 1`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::SolverConfig;
use crate::poly::{CompiledPoly, Polynomial};

/// How a single path ended.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Endpoint {
    /// Reached `t = 1` and Newton on the target converged at a well-conditioned root.
    Regular(Vec<Complex64>),
    /// Reached `t = 1` at a point where the target Jacobian is singular.
    NearSingular(Vec<Complex64>),
    /// Step underflow close to `t = 1` at a finite point: a multiple root, or an unlucky
    /// `gamma` bringing two paths together.
    Underflow(Vec<Complex64>),
    /// Norm exceeded the divergence cutoff: solution at infinity.
    Diverged,
    /// Step-size underflow away from `t = 1`.
    Failed,
}

const TRACK_TOL: f64 = 1e-9;
const MAX_CORRECTOR_ITERS: usize = 3;
pub(crate) const MAX_STEP: f64 = 0.1;
const NEAR_END: f64 = 0.99;
const LARGE_NORM: f64 = 1e4;

pub(crate) struct Homotopy {
    target: Vec<CompiledPoly>,
    target_jac: Vec<Vec<CompiledPoly>>,
    degrees: Vec<u32>,
    gamma: Complex64,
}

fn cnorm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl Homotopy {
    pub(crate) fn new(polys: &[Polynomial], gamma: Complex64) -> Self {
        let n = polys.len();
        let target = polys.iter().map(CompiledPoly::new).collect();
        let target_jac = polys
            .iter()
            .map(|p| (0..n).map(|j| CompiledPoly::new(&p.differentiate(j))).collect())
            .collect();
        let degrees = polys.iter().map(|p| p.degree()).collect();
        Homotopy { target, target_jac, degrees, gamma }
    }

    pub(crate) fn start_points(&self) -> Vec<Vec<Complex64>> {
        let total: usize = self.degrees.iter().map(|&d| d as usize).product();
        (0..total)
            .map(|mut idx| {
                self.degrees
                    .iter()
                    .map(|&d| {
                        let k = idx % d as usize;
                        idx /= d as usize;
                        Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
                    })
                    .collect()
            })
            .collect()
    }

    fn start_value(&self, x: &[Complex64]) -> DVector<Complex64> {
        DVector::from_iterator(
            x.len(),
            x.iter().zip(&self.degrees).map(|(xi, &d)| xi.powu(d) - Complex64::new(1.0, 0.0)),
        )
    }

    fn target_value(&self, x: &[Complex64]) -> DVector<Complex64> {
        DVector::from_iterator(x.len(), self.target.iter().map(|p| p.eval_complex(x)))
    }

    fn value(&self, x: &[Complex64], t: f64) -> DVector<Complex64> {
        let g = self.start_value(x) * (self.gamma * (1.0 - t));
        g + self.target_value(x) * Complex64::new(t, 0.0)
    }

    fn target_jacobian(&self, x: &[Complex64]) -> DMatrix<Complex64> {
        let n = x.len();
        DMatrix::from_fn(n, n, |i, j| self.target_jac[i][j].eval_complex(x))
    }

    fn jacobian(&self, x: &[Complex64], t: f64) -> DMatrix<Complex64> {
        let n = x.len();
        let mut m = self.target_jacobian(x) * Complex64::new(t, 0.0);
        let w = self.gamma * (1.0 - t);
        for i in 0..n {
            let d = self.degrees[i];
            if d > 0 {
                m[(i, i)] += w * Complex64::new(d as f64, 0.0) * x[i].powu(d - 1);
            }
        }
        m
    }

    /// `dx/dt = -H_x^{-1} H_t`.
    fn velocity(&self, x: &[Complex64], t: f64) -> Option<DVector<Complex64>> {
        let ht = self.target_value(x) - self.start_value(x) * self.gamma;
        let hx = self.jacobian(x, t);
        hx.lu().solve(&(-ht))
    }

    fn predict(&self, x: &[Complex64], t: f64, dt: f64) -> Option<Vec<Complex64>> {
        let xv = DVector::from_column_slice(x);
        let k1 = self.velocity(x, t)?;
        let x2 = &xv + &k1 * Complex64::new(dt / 2.0, 0.0);
        let k2 = self.velocity(x2.as_slice(), t + dt / 2.0)?;
        let x3 = &xv + &k2 * Complex64::new(dt / 2.0, 0.0);
        let k3 = self.velocity(x3.as_slice(), t + dt / 2.0)?;
        let x4 = &xv + &k3 * Complex64::new(dt, 0.0);
        let k4 = self.velocity(x4.as_slice(), t + dt)?;
        let incr = (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4)
            * Complex64::new(dt / 6.0, 0.0);
        Some((xv + incr).iter().copied().collect())
    }

    fn correct(&self, x: Vec<Complex64>, t: f64) -> Option<Vec<Complex64>> {
        let mut x = DVector::from_vec(x);
        let mut prev_step = f64::INFINITY;
        for _ in 0..MAX_CORRECTOR_ITERS {
            let h = self.value(x.as_slice(), t);
            let hx = self.jacobian(x.as_slice(), t);
            let delta = hx.lu().solve(&(-h))?;
            let step = delta.norm();
            x += delta;
            if !step.is_finite() {
                return None;
            }
            if step <= TRACK_TOL * (1.0 + x.norm()) {
                return Some(x.iter().copied().collect());
            }
            // Newton must contract, otherwise the prediction was outside the basin.
            if step > 0.5 * prev_step {
                return None;
            }
            prev_step = step;
        }
        None
    }

    /// Newton on the target system; `Some` only when it converges at a well-conditioned root.
    fn finish(&self, x: &[Complex64]) -> (Vec<Complex64>, bool) {
        let mut x = DVector::from_column_slice(x);
        let mut converged = false;
        for _ in 0..20 {
            let f = self.target_value(x.as_slice());
            let j = self.target_jacobian(x.as_slice());
            let Some(delta) = j.lu().solve(&(-f)) else { break };
            let step = delta.norm();
            if !step.is_finite() {
                break;
            }
            x += delta;
            if step <= 1e-14 * (1.0 + x.norm()) {
                converged = true;
                break;
            }
        }
        let pts: Vec<Complex64> = x.iter().copied().collect();
        let j = self.target_jacobian(&pts);
        let sv = j.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let well_conditioned = smin > 0.0 && smax / smin <= crate::numeric::CONDITION_CUTOFF;
        (pts, converged && well_conditioned)
    }

    /// Tracks one path with steps in `t` capped at `max_step`.
    pub(crate) fn track(&self, start: Vec<Complex64>, cfg: &SolverConfig, max_step: f64) -> (Endpoint, usize) {
        let mut x = start;
        let mut t = 0.0f64;
        let mut dt = cfg.initial_step.min(max_step);
        let mut streak = 0;
        let mut steps = 0usize;
        while t < 1.0 {
            let h = dt.min(1.0 - t);
            let next = self.predict(&x, t, h).and_then(|p| self.correct(p, t + h));
            steps += 1;
            match next {
                Some(xn) => {
                    x = xn;
                    t = if 1.0 - (t + h) < 1e-15 { 1.0 } else { t + h };
                    streak += 1;
                    if streak >= 3 {
                        dt = (dt * 1.5).min(max_step);
                        streak = 0;
                    }
                    if cnorm(&x) > cfg.divergence_norm {
                        return (Endpoint::Diverged, steps);
                    }
                }
                None => {
                    dt *= 0.5;
                    streak = 0;
                    if dt < cfg.min_step {
                        let nrm = cnorm(&x);
                        return if t >= NEAR_END && nrm > LARGE_NORM {
                            (Endpoint::Diverged, steps)
                        } else if t >= NEAR_END && nrm.is_finite() {
                            (Endpoint::Underflow(x), steps)
                        } else {
                            (Endpoint::Failed, steps)
                        };
                    }
                }
            }
        }
        let (x, ok) = self.finish(&x);
        if cnorm(&x) > cfg.divergence_norm || !cnorm(&x).is_finite() {
            (Endpoint::Diverged, steps)
        } else if ok {
            (Endpoint::Regular(x), steps)
        } else {
            (Endpoint::NearSingular(x), steps)
        }
    }
}
