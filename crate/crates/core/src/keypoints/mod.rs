//! Key points of a curve inside a box: singular and pseudo-singular points, fencing
//! points on small spheres around them, boundary points, and witness points on closed
//! components.
//!
//! Every family is the real in-box solution set of a polynomial system handed to the
//! homotopy solver. Overdetermined systems are squared by random linear combinations
//! and the candidates are verified against the full system afterwards.

mod bounds;

pub use bounds::{BoundingBox, BoxError};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::tangent_frame;
use crate::poly::{minor_determinants, rational_from_f64, CurveSystem, Polynomial, Rational};
use crate::solver::{
    dedup_relative, refine_overdetermined, solve_zero_dim, sort_points, PathStats, SolverConfig, SolverError,
    ZeroDimSystem,
};
use crate::tracer::TracePoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularMode {
    ExactSingular,
    PseudoSingular,
}

/// All key points of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyPointReport {
    pub singular: Vec<Vec<f64>>,
    pub fencing: Vec<TracePoint>,
    pub boundary: Vec<TracePoint>,
    pub witness: Vec<Vec<f64>>,
    pub mode: SingularMode,
}

/// Output of one key-point computation with the solver statistics behind it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Found<T> {
    pub points: Vec<T>,
    pub stats: PathStats,
    pub warnings: Vec<String>,
}

impl<T> Found<T> {
    fn empty() -> Self {
        Found { points: Vec::new(), stats: PathStats::default(), warnings: Vec::new() }
    }
}

/// Deterministic sub-seed for the `k`-th solve of a run (splitmix64 finalizer).
pub fn subseed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_rationals(count: usize, seed: u64) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rational_from_f64(rng.gen_range(-1.0..1.0))).collect()
}

fn random_unit(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        // Box-Muller normals give a uniform direction.
        let v: Vec<f64> = (0..n)
            .map(|_| {
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let nv = crate::numeric::norm(&v);
        if nv > 1e-3 {
            return v.iter().map(|x| x / nv).collect();
        }
    }
}

fn combination(polys: &[Polynomial], weights: &[Rational]) -> Polynomial {
    let mut acc = Polynomial::zero(polys[0].nvars());
    for (p, w) in polys.iter().zip(weights) {
        acc = &acc + &p.scale(w);
    }
    acc
}

fn nonzero(polys: &[Polynomial]) -> Vec<Polynomial> {
    polys.iter().filter(|p| !p.is_zero()).cloned().collect()
}

const VERIFY_ITERS: usize = 100;

/// Solves each square system and returns all real candidates, including endpoints at
/// which the square system is singular (where singular points of the curve land).
fn collect_candidates(
    squares: &[Vec<Polynomial>],
    bounds: &BoundingBox,
    seed: u64,
    cfg: &SolverConfig,
    found: &mut Found<Vec<f64>>,
) -> Result<Vec<Vec<f64>>, SolverError> {
    let mut candidates = Vec::new();
    for (k, square) in squares.iter().enumerate() {
        if square.iter().any(|p| p.is_zero()) {
            continue;
        }
        let zsys = ZeroDimSystem::new(square.clone(), Some(bounds.clone()))?;
        let sol = solve_zero_dim(&zsys, subseed(seed, k as u64), cfg)?;
        found.stats.merge(&sol.stats);
        if let Some(w) = sol.warning() {
            found.warnings.push(w);
        }
        candidates.extend(sol.points);
        candidates.extend(sol.singular_endpoints);
    }
    Ok(candidates)
}

/// Keeps the candidates that refine onto a common zero of all of `full`.
fn verify(full: &[Polynomial], candidates: Vec<Vec<f64>>, bounds: &BoundingBox, cfg: &SolverConfig) -> Vec<Vec<f64>> {
    let full: Vec<Polynomial> = full.iter().map(|p| p.normalized()).collect();
    let full = &full[..];
    let mut cands = candidates;
    sort_points(&mut cands);
    let cands = dedup_relative(&cands, 1e-9);
    let mut kept: Vec<Vec<f64>> = cands
        .iter()
        .map(|c| refine_overdetermined(full, c, VERIFY_ITERS))
        .filter(|(p, r)| *r <= cfg.residual_tol && bounds.contains(p, cfg.box_tol))
        .map(|(p, _)| p)
        .collect();
    sort_points(&mut kept);
    dedup_relative(&kept, 1e-7)
}

/// Real singular points of the curve in `bounds`: common zeros of `F` and all maximal
/// minors of its Jacobian.
///
/// For plane curves the square systems `{f, D1}`, `{f, D2}` and `{D1, D2}` are solved; in
/// higher dimension `F` is completed by two independent random combinations of the
/// minors. Candidates are refined by Gauss-Newton on the full overdetermined system with
/// exactly evaluated residuals and kept only if every residual is at most
/// `cfg.residual_tol`.
pub fn singular_points(
    sys: &CurveSystem,
    bounds: &BoundingBox,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Found<Vec<f64>>, SolverError> {
    let n = sys.nvars();
    let deltas = minor_determinants(sys);
    let mut found = Found::empty();
    let live = nonzero(&deltas);
    if live.is_empty() {
        found.warnings.push("all Jacobian minors vanish identically; every curve point is singular".into());
        return Ok(found);
    }
    let f = sys.polys();
    let squares: Vec<Vec<Polynomial>> = if n == 2 {
        vec![
            vec![f[0].clone(), deltas[0].clone()],
            vec![f[0].clone(), deltas[1].clone()],
            vec![deltas[0].clone(), deltas[1].clone()],
        ]
    } else {
        (0..2u64)
            .map(|k| {
                let mut sq = f.to_vec();
                sq.push(combination(&deltas, &random_rationals(n, subseed(seed, 100 + k))));
                sq
            })
            .collect()
    };
    let candidates = collect_candidates(&squares, bounds, seed, cfg, &mut found)?;
    let mut full = f.to_vec();
    full.extend(live);
    found.points = verify(&full, candidates, bounds, cfg);
    Ok(found)
}

/// Critical points `q` of the systems `E_i = {g_j : j != i} + {minors}` with
/// `|g_i(q)| <= eps`, where `g_i(q)` is measured in the units of the input polynomial.
pub fn pseudo_singular_points(
    sys: &CurveSystem,
    bounds: &BoundingBox,
    eps: f64,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Found<Vec<f64>>, SolverError> {
    let n = sys.nvars();
    let deltas = minor_determinants(sys);
    let live = nonzero(&deltas);
    let mut found = Found::empty();
    if live.is_empty() {
        found.warnings.push("all Jacobian minors vanish identically".into());
        return Ok(found);
    }
    let g = sys.polys();
    let mut all = Vec::new();
    for i in 0..n - 1 {
        let others: Vec<Polynomial> = g.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.clone()).collect();
        let square: Vec<Polynomial> = if n == 2 {
            deltas.clone()
        } else {
            let mut sq = others.clone();
            for k in 0..2u64 {
                sq.push(combination(&deltas, &random_rationals(n, subseed(seed, 200 + 10 * i as u64 + k))));
            }
            sq
        };
        let candidates = collect_candidates(&[square], bounds, subseed(seed, 300 + i as u64), cfg, &mut found)?;
        let mut full = others;
        full.extend(live.iter().cloned());
        let scale = sys.value_scale()[i];
        let compiled = crate::poly::CompiledPoly::new(&g[i]);
        all.extend(verify(&full, candidates, bounds, cfg).into_iter().filter(|q| (compiled.eval(q) / scale).abs() <= eps));
    }
    sort_points(&mut all);
    found.points = dedup_relative(&all, 1e-7);
    Ok(found)
}

/// `F` plus `det [J; a^T] = 0`, expanded along the last row into the minors `Δ_k`.
/// Its zeros with `rank J = n - 1` are the critical points of `a . x` on the curve.
fn criticality_system(sys: &CurveSystem, a: &[f64]) -> Vec<Polynomial> {
    let n = sys.nvars();
    let mut det = Polynomial::zero(n);
    for (k, d) in minor_determinants(sys).iter().enumerate() {
        let sign = if (n - 1 + k).is_multiple_of(2) { 1.0 } else { -1.0 };
        det = &det + &d.scale(&rational_from_f64(sign * a[k]));
    }
    let mut out = sys.polys().to_vec();
    out.push(det);
    out
}

/// Critical points of a random linear function `a . x` on the curve. The Lagrange
/// condition `J^T lambda = a` is solved with `lambda` eliminated, which leaves the square
/// system `{F, det [J; a^T]}` in `x` alone. Every closed smooth component in the box
/// carries at least one. Retries once with a fresh direction if nothing is found.
pub fn witness_points(
    sys: &CurveSystem,
    bounds: &BoundingBox,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Found<Vec<f64>>, SolverError> {
    let n = sys.nvars();
    let mut found = Found::empty();
    for attempt in 0..2u64 {
        let a = random_unit(n, subseed(seed, 400 + attempt));
        let zsys = ZeroDimSystem::new(criticality_system(sys, &a), Some(bounds.clone()))?;
        let sol = solve_zero_dim(&zsys, subseed(seed, 500 + attempt), cfg)?;
        found.stats.merge(&sol.stats);
        if let Some(w) = sol.warning() {
            found.warnings.push(w);
        }
        let mut pts: Vec<Vec<f64>> =
            sol.points.iter().filter(|&x| bounds.contains(x, cfg.box_tol)).cloned().collect();
        sort_points(&mut pts);
        let pts = dedup_relative(&pts, cfg.dedup_radius);
        if !pts.is_empty() || attempt == 1 {
            found.points = pts;
            break;
        }
        found.warnings.push("no witness points found; retried with a new direction".into());
    }
    Ok(found)
}

fn sphere(n: usize, center: &[f64], radius: f64) -> Polynomial {
    let mut acc = Polynomial::constant(n, -(rational_from_f64(radius) * rational_from_f64(radius)));
    for (k, c) in center.iter().enumerate() {
        let d = &Polynomial::variable(n, k) - &Polynomial::constant(n, rational_from_f64(*c));
        acc = &acc + &(&d * &d);
    }
    acc
}

/// Intersections of the curve with the sphere `|x - center| = radius`, each with its
/// direction pointing away from `center`. In the plane they are ordered by angle.
pub fn fencing_points(
    sys: &CurveSystem,
    center: &[f64],
    radius: f64,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Found<TracePoint>, SolverError> {
    let n = sys.nvars();
    let mut polys = sys.polys().to_vec();
    polys.push(sphere(n, center, radius));
    let zsys = ZeroDimSystem::new(polys, None)?;
    let sol = solve_zero_dim(&zsys, seed, cfg)?;
    let mut found = Found::empty();
    found.stats = sol.stats.clone();
    if let Some(w) = sol.warning() {
        found.warnings.push(w);
    }
    let mut pts = sol.points;
    if n == 2 {
        let angle = |q: &Vec<f64>| (q[1] - center[1]).atan2(q[0] - center[0]);
        pts.sort_by(|a, b| angle(a).total_cmp(&angle(b)));
    }
    for q in pts {
        let s = tangent_frame(&sys.jacobian(&q)).map(|f| f.sigma_min).unwrap_or(0.0);
        let v: Vec<f64> = q.iter().zip(center).map(|(a, b)| a - b).collect();
        found.points.push(TracePoint::new(q, v, s));
    }
    Ok(found)
}

/// Intersections of the curve with the faces of `bounds`, each with its tangent oriented
/// into the box. Points whose tangent is parallel to the face are reported as grazing.
pub fn boundary_points(
    sys: &CurveSystem,
    bounds: &BoundingBox,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Found<TracePoint>, SolverError> {
    let n = sys.nvars();
    let mut found = Found::empty();
    let mut pts = Vec::new();
    for k in 0..n {
        for (side, value) in [bounds.lower()[k], bounds.upper()[k]].into_iter().enumerate() {
            let r = rational_from_f64(value);
            let face: Vec<Polynomial> = sys.polys().iter().map(|p| p.fix_variable(k, &r)).collect();
            let drop_k = |x: &[f64]| -> Vec<f64> { x.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, v)| *v).collect() };
            let face_box = BoundingBox::new(drop_k(bounds.lower()), drop_k(bounds.upper())).expect("face of a valid box");
            let zsys = ZeroDimSystem::new(face, Some(face_box))?;
            let sol = solve_zero_dim(&zsys, subseed(seed, 600 + 2 * k as u64 + side as u64), cfg)?;
            found.stats.merge(&sol.stats);
            if let Some(w) = sol.warning() {
                found.warnings.push(w);
            }
            for p in sol.points {
                let mut q = p;
                q.insert(k, value);
                pts.push(q);
            }
        }
    }
    sort_points(&mut pts);
    let pts = dedup_relative(&pts, cfg.dedup_radius.max(1e-12));
    let face_tol = 1e-12 + cfg.box_tol;
    for q in pts {
        let inward: Vec<f64> = (0..n)
            .map(|k| {
                let lo = (q[k] - bounds.lower()[k]).abs() <= face_tol * (1.0 + bounds.lower()[k].abs());
                let hi = (q[k] - bounds.upper()[k]).abs() <= face_tol * (1.0 + bounds.upper()[k].abs());
                (lo as i32 - hi as i32) as f64
            })
            .collect();
        let Ok(frame) = tangent_frame(&sys.jacobian(&q)) else {
            found.warnings.push(format!("non-finite Jacobian at boundary point {q:?}"));
            continue;
        };
        let mut v = frame.tangent;
        let along = crate::numeric::dot(&v, &inward);
        if along < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        if along.abs() <= 1e-8 {
            found.warnings.push(format!("grazing boundary point {q:?}: tangent is parallel to the face"));
        }
        found.points.push(TracePoint::new(q, v, frame.sigma_min));
    }
    Ok(found)
}

#[cfg(test)]
mod tests;
