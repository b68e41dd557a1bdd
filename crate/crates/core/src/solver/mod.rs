//! Zero-dimensional polynomial solving by total-degree homotopy continuation.
//!
//! Every key-point family reduces to a square system whose real solutions in a box are
//! wanted. Paths are tracked in parallel; the merge (real filter, box filter, sort,
//! dedup) is sequential so results depend only on the seed.

mod homotopy;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keypoints::BoundingBox;
use crate::numeric::{svd, CONDITION_CUTOFF};
use crate::poly::{rational_from_f64, CompiledPoly, Polynomial, Rational};
use homotopy::{Endpoint, Homotopy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("system is not square: {equations} equations in {variables} variables")]
    NotSquare { equations: usize, variables: usize },
    #[error("total degree {degree} exceeds the cap of {cap}")]
    TotalDegreeCap { degree: u128, cap: u64 },
    #[error("box has dimension {got}, system has {expected} variables")]
    BoxDimension { expected: usize, got: usize },
    #[error("Newton refinement diverged")]
    Diverged,
    #[error("Jacobian is singular at the iterate (condition {condition:e})")]
    Singular { condition: f64 },
    #[error("Newton refinement did not reach tolerance in {0} iterations")]
    MaxIterations(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_total_degree: u64,
    /// Imaginary parts up to `imag_tol * (1 + |Re x|)` count as real.
    pub imag_tol: f64,
    /// Points closer than `dedup_radius * (1 + |x|)` are merged.
    pub dedup_radius: f64,
    pub box_tol: f64,
    pub residual_tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub divergence_norm: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_total_degree: 20_000,
            imag_tol: 1e-8,
            dedup_radius: 1e-8,
            box_tol: 1e-9,
            residual_tol: 1e-10,
            initial_step: 0.05,
            min_step: 1e-8,
            divergence_norm: 1e8,
        }
    }
}

/// Square polynomial system with an optional box filter for its real solutions.
#[derive(Clone, Debug)]
pub struct ZeroDimSystem {
    polys: Vec<Polynomial>,
    bounds: Option<BoundingBox>,
}

impl ZeroDimSystem {
    pub fn new(polys: Vec<Polynomial>, bounds: Option<BoundingBox>) -> Result<Self, SolverError> {
        let variables = polys.first().map(|p| p.nvars()).unwrap_or(0);
        if polys.len() != variables || polys.iter().any(|p| p.nvars() != variables) {
            return Err(SolverError::NotSquare { equations: polys.len(), variables });
        }
        if let Some(b) = &bounds {
            if b.dim() != variables {
                return Err(SolverError::BoxDimension { expected: variables, got: b.dim() });
            }
        }
        // Roots do not depend on the scale of each equation; the tolerances downstream do.
        let polys = polys.iter().map(|p| p.normalized()).collect();
        Ok(ZeroDimSystem { polys, bounds })
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn bounds(&self) -> Option<&BoundingBox> {
        self.bounds.as_ref()
    }

    pub fn nvars(&self) -> usize {
        self.polys.len()
    }

    /// Bezout number `prod deg(p_i)`.
    pub fn total_degree(&self) -> u128 {
        self.polys.iter().map(|p| p.degree() as u128).product()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStats {
    pub tracked: usize,
    pub converged: usize,
    pub diverged: usize,
    /// Step-size underflow away from `t = 1`.
    pub failed: usize,
    /// Ended at (or near) a point where the target Jacobian is singular.
    pub singular: usize,
    pub steps: usize,
}

impl PathStats {
    /// Fraction of paths lost to step-size underflow.
    pub fn failure_rate(&self) -> f64 {
        if self.tracked == 0 {
            0.0
        } else {
            self.failed as f64 / self.tracked as f64
        }
    }

    pub fn merge(&mut self, other: &PathStats) {
        self.tracked += other.tracked;
        self.converged += other.converged;
        self.diverged += other.diverged;
        self.failed += other.failed;
        self.singular += other.singular;
        self.steps += other.steps;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSet {
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub stats: PathStats,
    /// Real parts of finite endpoints at which the target Jacobian is (nearly) singular.
    /// They are not certified solutions; callers with overdetermined problems refine them.
    pub singular_endpoints: Vec<Vec<f64>>,
}

impl SolutionSet {
    pub fn warning(&self) -> Option<String> {
        (self.stats.failure_rate() > 0.2).then(|| {
            format!("{} of {} homotopy paths failed by step-size underflow", self.stats.failed, self.stats.tracked)
        })
    }
}

fn random_gamma(seed: u64) -> Complex64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(1.0, theta)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Sorts lexicographically in place, for a canonical order before deduplication.
pub fn sort_points(points: &mut [Vec<f64>]) {
    points.sort_by(|a, b| lex_cmp(a, b));
}

/// Greedy merge: keeps the first point and drops any later one within `radius` of a kept point.
pub fn dedup(points: &[Vec<f64>], radius: f64) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !kept.iter().any(|k| crate::numeric::distance(k, p) <= radius) {
            kept.push(p.clone());
        }
    }
    kept
}

/// Greedy merge with radius `rel * (1 + |x|)`.
pub fn dedup_relative(points: &[Vec<f64>], rel: f64) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in points {
        let r = rel * (1.0 + norm(p));
        if !kept.iter().any(|k| crate::numeric::distance(k, p) <= r) {
            kept.push(p.clone());
        }
    }
    kept
}

/// Result of a Newton refinement.
#[derive(Clone, Debug, PartialEq)]
pub struct Refined {
    pub point: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

struct RealSystem {
    f: Vec<CompiledPoly>,
    jac: Vec<Vec<CompiledPoly>>,
}

impl RealSystem {
    fn new(polys: &[Polynomial]) -> Self {
        let n = polys[0].nvars();
        RealSystem {
            f: polys.iter().map(CompiledPoly::new).collect(),
            jac: polys.iter().map(|p| (0..n).map(|j| CompiledPoly::new(&p.differentiate(j))).collect()).collect(),
        }
    }

    fn residual(&self, x: &[f64]) -> f64 {
        self.f.iter().map(|p| p.eval(x).abs()).fold(0.0, f64::max)
    }

    fn value(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.f.len(), self.f.iter().map(|p| p.eval(x)))
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.f.len(), x.len(), |i, j| self.jac[i][j].eval(x))
    }
}

const REFINE_MAX_ITER: usize = 30;

fn refine_with(sys: &RealSystem, q: &[f64], tol: f64) -> Result<Refined, SolverError> {
    let mut x = q.to_vec();
    let start_scale = 1.0 + norm(q);
    for it in 0..=REFINE_MAX_ITER {
        let residual = sys.residual(&x);
        if !residual.is_finite() {
            return Err(SolverError::Diverged);
        }
        let d = svd(&sys.jacobian(&x));
        let condition = d.condition();
        if !(condition <= CONDITION_CUTOFF) {
            return Err(SolverError::Singular { condition });
        }
        if residual <= tol {
            return Ok(Refined { point: x, residual, iterations: it });
        }
        if it == REFINE_MAX_ITER {
            break;
        }
        let delta = d.solve(&(-sys.value(&x)));
        for (xi, di) in x.iter_mut().zip(delta.iter()) {
            *xi += di;
        }
        if norm(&x) > 1e6 * start_scale {
            return Err(SolverError::Diverged);
        }
    }
    Err(SolverError::MaxIterations(REFINE_MAX_ITER))
}

/// Plain Newton on the square system until `||F||_inf <= tol`, at most 30 iterations.
/// Fails on a singular Jacobian, including at a point that already satisfies `tol`.
pub fn refine_root(sys: &ZeroDimSystem, q: &[f64], tol: f64) -> Result<Refined, SolverError> {
    refine_with(&RealSystem::new(&sys.polys), q, tol)
}

/// Gauss-Newton on a possibly overdetermined system, with residuals and Jacobians
/// evaluated exactly at each float iterate. Returns the best iterate and its exact
/// `||F||_inf` (rounded to f64).
pub fn refine_overdetermined(polys: &[Polynomial], q: &[f64], max_iter: usize) -> (Vec<f64>, f64) {
    let n = q.len();
    let jac: Vec<Vec<Polynomial>> = polys.iter().map(|p| (0..n).map(|j| p.differentiate(j)).collect()).collect();
    let exact = |x: &[f64]| -> Vec<f64> {
        let xr: Vec<Rational> = x.iter().map(|v| rational_from_f64(*v)).collect();
        polys.iter().map(|p| crate::poly::Coefficient::to_f64(&p.evaluate_exact(&xr))).collect()
    };
    let res_of = |v: &[f64]| v.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let mut x = q.to_vec();
    let mut vals = exact(&x);
    let mut best = (x.clone(), res_of(&vals));
    for _ in 0..max_iter {
        let xr: Vec<Rational> = x.iter().map(|v| rational_from_f64(*v)).collect();
        let j = DMatrix::from_fn(polys.len(), n, |i, k| crate::poly::Coefficient::to_f64(&jac[i][k].evaluate_exact(&xr)));
        let d = svd(&j);
        let b = DVector::from_iterator(vals.len(), vals.iter().map(|v| -v));
        let delta = d.solve_truncated(&b, 1e-10);
        let step = delta.norm();
        if !step.is_finite() {
            break;
        }
        for (xi, di) in x.iter_mut().zip(delta.iter()) {
            *xi += di;
        }
        vals = exact(&x);
        let r = res_of(&vals);
        if r < best.1 {
            best = (x.clone(), r);
        }
        if r == 0.0 || step <= f64::EPSILON * (1.0 + norm(&x)) {
            break;
        }
    }
    best
}

const RETRACK_ROUNDS: usize = 2;

fn subseed_round(seed: u64, round: u64) -> u64 {
    let mut z = seed ^ round.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Paths that hint at path jumping: lost mid-way, underflowed near the end, or ending on
/// a regular root already reached by another path. A nonzero count triggers retracking
/// with a fresh `gamma` and a smaller step cap.
fn suspicious_paths(ends: &[(Endpoint, usize)]) -> usize {
    let mut seen = std::collections::HashSet::new();
    let mut bad = 0;
    for (e, _) in ends {
        match e {
            Endpoint::Failed | Endpoint::Underflow(_) => bad += 1,
            Endpoint::Regular(x) => {
                let key: Vec<(i64, i64)> =
                    x.iter().map(|z| ((z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64)).collect();
                if !seen.insert(key) {
                    bad += 1;
                }
            }
            _ => {}
        }
    }
    bad
}

fn max_imag(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

/// Tracks all total-degree paths and returns the real, in-box, deduplicated solutions.
pub fn solve_zero_dim(sys: &ZeroDimSystem, seed: u64, cfg: &SolverConfig) -> Result<SolutionSet, SolverError> {
    let n = sys.nvars();
    let degree = sys.total_degree();
    if degree > cfg.max_total_degree as u128 {
        return Err(SolverError::TotalDegreeCap { degree, cap: cfg.max_total_degree });
    }
    if sys.polys.iter().any(|p| p.is_zero()) {
        // A vanishing equation makes the system positive-dimensional or trivially empty;
        // neither has isolated solutions to report.
        return Ok(SolutionSet { points: vec![], residuals: vec![], stats: PathStats::default(), singular_endpoints: vec![] });
    }
    let mut stats = PathStats::default();
    if degree == 0 {
        // Some equation is a nonzero constant: no solutions.
        return Ok(SolutionSet { points: vec![], residuals: vec![], stats, singular_endpoints: vec![] });
    }
    let mut max_step = homotopy::MAX_STEP;
    let mut best: Option<(usize, Vec<(Endpoint, usize)>)> = None;
    let mut spent = 0usize;
    for round in 0..=RETRACK_ROUNDS as u64 {
        let gamma = random_gamma(if round == 0 { seed } else { subseed_round(seed, round) });
        let h = Homotopy::new(&sys.polys, gamma);
        let ends: Vec<(Endpoint, usize)> = h.start_points().into_par_iter().map(|s| h.track(s, cfg, max_step)).collect();
        spent += ends.iter().map(|e| e.1).sum::<usize>();
        let bad = suspicious_paths(&ends);
        if best.as_ref().is_none_or(|(b, _)| bad < *b) {
            best = Some((bad, ends));
        }
        if bad == 0 {
            break;
        }
        max_step *= 0.5;
    }
    let ends = best.map(|b| b.1).unwrap_or_default();
    // Steps of discarded rounds are reported too.
    stats.steps += spent - ends.iter().map(|e| e.1).sum::<usize>();

    let real = RealSystem::new(&sys.polys);
    let mut candidates = Vec::new();
    let mut singular = Vec::new();
    for (end, steps) in ends {
        stats.tracked += 1;
        stats.steps += steps;
        match end {
            Endpoint::Regular(x) => {
                stats.converged += 1;
                let re: Vec<f64> = x.iter().map(|z| z.re).collect();
                if max_imag(&x) <= cfg.imag_tol * (1.0 + norm(&re)) {
                    candidates.push(re);
                }
            }
            Endpoint::NearSingular(x) | Endpoint::Underflow(x) => {
                stats.singular += 1;
                let re: Vec<f64> = x.iter().map(|z| z.re).collect();
                // Near a multiple root paths approach at rate (1 - t)^(1/m), so the
                // imaginary part is only loosely controlled; keep anything plausibly real.
                if max_imag(&x) <= 1e-2 * (1.0 + norm(&re)) {
                    singular.push(re);
                }
            }
            Endpoint::Diverged => stats.diverged += 1,
            Endpoint::Failed => stats.failed += 1,
        }
    }

    let in_box = |p: &[f64]| sys.bounds.as_ref().is_none_or(|b| b.contains(p, cfg.box_tol));
    let mut points: Vec<Vec<f64>> = Vec::new();
    for c in candidates {
        match refine_with(&real, &c, cfg.residual_tol) {
            Ok(r) if in_box(&r.point) => points.push(r.point),
            Ok(_) => {}
            Err(_) => singular.push(c),
        }
    }
    sort_points(&mut points);
    let points = dedup_relative(&points, cfg.dedup_radius);
    let residuals = points.iter().map(|p| real.residual(p)).collect();

    let slack = 1e-3;
    let mut singular: Vec<Vec<f64>> = singular
        .into_iter()
        .filter(|p| p.iter().all(|v| v.is_finite()))
        .filter(|p| sys.bounds.as_ref().is_none_or(|b| b.contains(p, slack)))
        .collect();
    sort_points(&mut singular);
    let singular_endpoints = dedup_relative(&singular, 1e-6);
    debug_assert_eq!(n, sys.polys.len());
    Ok(SolutionSet { points, residuals, stats, singular_endpoints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn system(exprs: &[&str], vars: &[&str], bounds: Option<BoundingBox>) -> ZeroDimSystem {
        ZeroDimSystem::new(exprs.iter().map(|e| parse_polynomial(e, vars).unwrap()).collect(), bounds).unwrap()
    }

    #[test]
    fn circle_and_line() {
        let sys = system(&["x^2 + y^2 - 1", "x - y"], &["x", "y"], None);
        let sol = solve_zero_dim(&sys, 7, &SolverConfig::default()).unwrap();
        assert_eq!(sol.stats.tracked, 2);
        assert_eq!(sol.points.len(), 2);
        let h = 0.5f64.sqrt();
        assert!((sol.points[0][0] + h).abs() < 1e-12 && (sol.points[0][1] + h).abs() < 1e-12);
        assert!((sol.points[1][0] - h).abs() < 1e-12 && (sol.points[1][1] - h).abs() < 1e-12);
        assert!(sol.residuals.iter().all(|r| *r <= 1e-10));
    }

    #[test]
    fn complex_only_solutions_are_dropped() {
        let sys = system(&["x^2 + y^2 + 1", "x - y"], &["x", "y"], None);
        let sol = solve_zero_dim(&sys, 1, &SolverConfig::default()).unwrap();
        assert!(sol.points.is_empty());
        assert_eq!(sol.stats.converged, 2);
    }

    #[test]
    fn box_filter() {
        let b = BoundingBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let sys = system(&["x^2 + y^2 - 1", "x - y"], &["x", "y"], Some(b));
        let sol = solve_zero_dim(&sys, 7, &SolverConfig::default()).unwrap();
        assert_eq!(sol.points.len(), 1);
    }

    #[test]
    fn singular_root_is_flagged() {
        let sys = system(&["x^2 - y^2", "-2*y"], &["x", "y"], None);
        let sol = solve_zero_dim(&sys, 3, &SolverConfig::default()).unwrap();
        assert!(sol.points.is_empty() || sol.points.iter().all(|p| norm(p) < 1e-6));
        let near: Vec<_> = sol.singular_endpoints.iter().chain(&sol.points).filter(|p| norm(p) < 1e-3).collect();
        assert!(!near.is_empty());
    }

    #[test]
    fn deterministic() {
        let sys = system(&["x^3 - 2*x*y + 1/3", "y^2 + x - 1"], &["x", "y"], None);
        let a = solve_zero_dim(&sys, 11, &SolverConfig::default()).unwrap();
        let b = solve_zero_dim(&sys, 11, &SolverConfig::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.stats.tracked == 6);
    }

    #[test]
    fn degree_cap() {
        let sys = system(&["x^200 - 1", "y^200 - 1"], &["x", "y"], None);
        assert!(matches!(
            solve_zero_dim(&sys, 0, &SolverConfig::default()),
            Err(SolverError::TotalDegreeCap { degree: 40000, .. })
        ));
    }

    #[test]
    fn refine_examples() {
        let sys = system(&["x^2 + y^2 - 1", "x - y"], &["x", "y"], None);
        let r = refine_root(&sys, &[0.7, 0.7], 1e-15).unwrap();
        assert!((r.point[0] - 0.5f64.sqrt()).abs() < 1e-14);
        let h = 0.5f64.sqrt();
        let r = refine_root(&sys, &[h + 1e-3, h - 1e-3], 1e-14).unwrap();
        assert!(r.iterations <= 5);
        let sing = system(&["x^2 - y^2", "-2*y"], &["x", "y"], None);
        assert!(matches!(refine_root(&sing, &[0.0, 0.0], 1e-12), Err(SolverError::Singular { .. })));
    }

    #[test]
    fn dedup_examples() {
        assert_eq!(dedup(&[vec![0.0, 0.0], vec![1e-9, 0.0]], 1e-6).len(), 1);
        assert_eq!(dedup(&[vec![0.0, 0.0], vec![1.0, 0.0]], 0.5).len(), 2);
        let many: Vec<Vec<f64>> = (0..100).map(|k| vec![0.5f64.sqrt() + k as f64 * 1e-12, 0.5f64.sqrt()]).collect();
        assert_eq!(dedup(&many, 1e-8).len(), 1);
    }

    #[test]
    fn overdetermined_refinement_reaches_singular_point() {
        let vars = ["x", "y"];
        let polys: Vec<_> = ["y^2 + x^3 - 3*x^4 + 3*x^5 - x^6", "-3*x^2 + 12*x^3 - 15*x^4 + 6*x^5", "2*y"]
            .iter()
            .map(|e| parse_polynomial(e, &vars).unwrap())
            .collect();
        let (p, r) = refine_overdetermined(&polys, &[1.0003, 1e-4], 200);
        assert!((p[0] - 1.0).abs() < 1e-6 && p[1].abs() < 1e-6, "{p:?}");
        assert!(r < 1e-10);
    }
}
