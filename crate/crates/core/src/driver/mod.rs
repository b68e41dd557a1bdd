//! End-to-end pipeline: rescale, key points, clusters, the four tracing passes, and the
//! map back to the caller's coordinates.

mod verify;

pub use verify::{sign_change_samples, verify_epsilon, verify_epsilon_against, EpsilonReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{natural_clusters, Cluster};
use crate::keypoints::{
    boundary_points, fencing_points, pseudo_singular_points, singular_points, subseed, witness_points, BoundingBox,
    Found, KeyPointReport, SingularMode,
};
use crate::numeric::distance;
use crate::poly::{rescale_system, AffineMap, CurveSystem, SystemError};
use crate::solver::{PathStats, SolverConfig, SolverError};
use crate::tracer::{plot_main, plot_oval, Chain, DropRule, JumpReport, StepMode, Tag, TraceConfig, TracePoint, Tracer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientMode {
    /// Coefficients are exact: singular points are computed and kept in the output.
    Exact,
    /// Coefficients carry noise: pseudo-singular points stand in for singular ones.
    Perturbed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub eps: f64,
    pub rho: f64,
    pub mode: StepMode,
    pub coefficient_mode: CoefficientMode,
    pub seed: u64,
    pub corrector_tol: f64,
    pub imag_tol: f64,
    pub dedup_radius: f64,
    pub h_min: f64,
    /// `|g_i| <=` this (input units) qualifies a pseudo-singular point; defaults to `eps`.
    pub pseudo_threshold: Option<f64>,
    pub drop_rule: DropRule,
    /// Constant tracing step in input units, overriding the step rule.
    pub fixed_step: Option<f64>,
    pub max_total_degree: u64,
    /// Chains are simplified to within `simplify_fraction * eps` of the traced polyline;
    /// 0 keeps every traced vertex.
    pub simplify_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        let t = TraceConfig::default();
        RunConfig {
            eps: 0.1,
            rho: t.rho,
            mode: t.mode,
            coefficient_mode: CoefficientMode::Exact,
            seed: 0,
            corrector_tol: t.corrector_tol,
            imag_tol: s.imag_tol,
            dedup_radius: s.dedup_radius,
            h_min: t.h_min,
            pseudo_threshold: None,
            drop_rule: t.drop_rule,
            fixed_step: None,
            max_total_degree: s.max_total_degree,
            simplify_fraction: 0.01,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(DriverError::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.rho >= 1.6) {
            return Err(DriverError::Config(format!("rho must be at least 1.6, got {}", self.rho)));
        }
        for (name, v) in [("corrector_tol", self.corrector_tol), ("imag_tol", self.imag_tol), ("dedup_radius", self.dedup_radius), ("h_min", self.h_min)] {
            if !(v > 0.0) {
                return Err(DriverError::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..0.5).contains(&self.simplify_fraction) {
            return Err(DriverError::Config("simplify_fraction must lie in [0, 0.5)".into()));
        }
        if let Some(h) = self.fixed_step {
            if !(h > 0.0) {
                return Err(DriverError::Config("fixed_step must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            imag_tol: self.imag_tol,
            dedup_radius: self.dedup_radius,
            max_total_degree: self.max_total_degree,
            ..SolverConfig::default()
        }
    }

    /// Tracing configuration in the unit frame of `map`.
    pub fn trace_config(&self, map: &AffineMap) -> TraceConfig {
        TraceConfig {
            mode: self.mode,
            rho: self.rho,
            corrector_tol: self.corrector_tol,
            h_min: self.h_min,
            drop_rule: self.drop_rule,
            fixed_step: self.fixed_step.map(|h| h / map.radius),
            ..TraceConfig::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub paths: PathStats,
    pub steps: usize,
    pub rejected_steps: usize,
    pub try_chains: usize,
    pub resume_chains: usize,
    pub boundary_chains: usize,
    pub oval_chains: usize,
    pub front_points: usize,
    /// Front points started from or hit during the resume pass.
    pub front_consumed: usize,
    pub cluster_radius: f64,
    pub box_shrunk: bool,
}

/// The approximation and everything needed to audit it, in input coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxCurve {
    pub nvars: usize,
    pub bounds: BoundingBox,
    pub chains: Vec<Chain>,
    /// Singular points (exact mode only).
    pub singular_points: Vec<Vec<f64>>,
    pub clusters: Vec<Cluster>,
    pub key_points: KeyPointReport,
    pub jump_reports: Vec<JumpReport>,
    pub unused_witness: Vec<Vec<f64>>,
    pub notes: Vec<String>,
    pub stats: RunStats,
    pub config: RunConfig,
}

impl ApproxCurve {
    pub fn empty(nvars: usize, bounds: BoundingBox, config: RunConfig) -> Self {
        ApproxCurve {
            nvars,
            bounds,
            chains: Vec::new(),
            singular_points: Vec::new(),
            clusters: Vec::new(),
            key_points: KeyPointReport {
                singular: Vec::new(),
                fencing: Vec::new(),
                boundary: Vec::new(),
                witness: Vec::new(),
                mode: SingularMode::ExactSingular,
            },
            jump_reports: Vec::new(),
            unused_witness: Vec::new(),
            notes: Vec::new(),
            stats: RunStats::default(),
            config,
        }
    }
}

fn absorb<T>(found: Found<T>, stats: &mut RunStats, notes: &mut Vec<String>) -> Vec<T> {
    stats.paths.merge(&found.stats);
    notes.extend(found.warnings);
    found.points
}

fn near_face(b: &BoundingBox, p: &[f64], tol: f64) -> bool {
    b.distance_to_boundary(p) <= tol
}

fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 > 0.0 {
        (p.iter().zip(a).zip(&ab).map(|((pi, ai), d)| (pi - ai) * d).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c: Vec<f64> = a.iter().zip(&ab).map(|(ai, d)| ai + t * d).collect();
    distance(p, &c)
}

/// Douglas-Peucker simplification: keeps the endpoints and a subset of vertices such that
/// every dropped vertex lies within `tol` of the kept polyline.
pub fn simplify_polyline(points: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    simplified_indices(points, tol).into_iter().map(|i| points[i].clone()).collect()
}

fn simplified_indices(points: &[Vec<f64>], tol: f64) -> Vec<usize> {
    if points.len() <= 2 {
        return (0..points.len()).collect();
    }
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    let mut stack = vec![(0, points.len() - 1)];
    while let Some((a, b)) = stack.pop() {
        if b <= a + 1 {
            continue;
        }
        let (mut worst, mut at) = (0.0, a);
        for i in a + 1..b {
            let d = segment_distance(&points[i], &points[a], &points[b]);
            if d > worst {
                worst = d;
                at = i;
            }
        }
        if worst > tol {
            keep[at] = true;
            stack.push((a, at));
            stack.push((at, b));
        }
    }
    (0..points.len()).filter(|&i| keep[i]).collect()
}

/// Computes an `eps`-approximation of the curve `sys = 0` inside `bounds`.
pub fn approx_plot(sys: &CurveSystem, bounds: &BoundingBox, cfg: &RunConfig) -> Result<ApproxCurve, DriverError> {
    cfg.validate()?;
    let n = sys.nvars();
    if bounds.dim() != n {
        return Err(SystemError::BoxDimension { nvars: n, got: bounds.dim() }.into());
    }
    let scfg = cfg.solver_config();
    let (usys, map) = rescale_system(sys, bounds)?;
    let r = map.radius;
    let mut ubox = map.box_to_unit(bounds);
    let mut out_box = bounds.clone();
    let mut stats = RunStats::default();
    let mut notes = Vec::new();
    let seed = cfg.seed;

    // Singular or pseudo-singular points.
    let (s0, mode) = match cfg.coefficient_mode {
        CoefficientMode::Exact => (singular_points(&usys, &ubox, subseed(seed, 1), &scfg)?, SingularMode::ExactSingular),
        CoefficientMode::Perturbed => {
            let thr = cfg.pseudo_threshold.unwrap_or(cfg.eps);
            (pseudo_singular_points(&usys, &ubox, thr, subseed(seed, 1), &scfg)?, SingularMode::PseudoSingular)
        }
    };
    let s0 = absorb(s0, &mut stats, &mut notes);
    if s0.iter().any(|p| near_face(&ubox, p, 1e-9)) {
        out_box = bounds.shrink(1e-6);
        ubox = map.box_to_unit(&out_box);
        stats.box_shrunk = true;
        notes.push("a singular point lies on the box boundary; box shrunk by 1e-6 of its width".into());
    }
    let s0: Vec<Vec<f64>> = s0.into_iter().filter(|p| ubox.contains(p, 0.0)).collect();

    // Natural clusters and fencing points.
    let (uclusters, delta) = natural_clusters(&s0, cfg.eps / 2.0 / r);
    stats.cluster_radius = delta * r;
    let mut cwp: Vec<TracePoint> = Vec::new();
    for (k, c) in uclusters.iter().enumerate() {
        if ubox.distance_to_boundary(&c.center) < 3.0 * delta {
            notes.push(format!("cluster at {:?} lies within 3 delta of the box boundary", map.to_original(&c.center)));
        }
        let found = fencing_points(&usys, &c.center, delta, subseed(seed, 10 + k as u64), &scfg)?;
        for tp in absorb(found, &mut stats, &mut notes) {
            if ubox.contains(&tp.q, 0.0) {
                cwp.push(tp);
            } else {
                notes.push(format!("fencing point {:?} outside the box dropped", map.to_original(&tp.q)));
            }
        }
    }

    let mut bwp = absorb(boundary_points(&usys, &ubox, subseed(seed, 2), &scfg)?, &mut stats, &mut notes);

    let witness = absorb(witness_points(&usys, &ubox, subseed(seed, 3), &scfg)?, &mut stats, &mut notes);
    let mut rwp: Vec<Vec<f64>> =
        witness.iter().filter(|w| uclusters.iter().all(|c| distance(w, &c.center) > delta)).cloned().collect();

    if s0.is_empty() && cwp.is_empty() && bwp.is_empty() && rwp.is_empty() {
        notes.push("no real points detected in box".into());
    }

    // Tracing passes, in order.
    let tcfg = cfg.trace_config(&map);
    let tracer = Tracer::new(&usys, &ubox, delta, &tcfg);
    let mut chains = Vec::new();
    let mut jumps = Vec::new();

    let mut tally = |o: crate::tracer::TraceOutput, chains: &mut Vec<Chain>, jumps: &mut Vec<JumpReport>, notes: &mut Vec<String>| {
        stats.steps += o.steps;
        stats.rejected_steps += o.rejected_steps;
        notes.extend(o.warnings);
        jumps.extend(o.jumps);
        let count = o.chains.len();
        chains.extend(o.chains);
        (count, o.front)
    };

    let o = plot_main(&tracer, &mut cwp, &mut bwp, &mut rwp, Tag::Try);
    let (try_chains, mut front) = tally(o, &mut chains, &mut jumps, &mut notes);
    let front_points = front.len();
    let o = plot_main(&tracer, &mut front, &mut bwp, &mut rwp, Tag::Resume);
    let (resume_chains, _) = tally(o, &mut chains, &mut jumps, &mut notes);
    let front_consumed = front.iter().filter(|f| f.c > 0).count();
    let o = plot_main(&tracer, &mut bwp, &mut cwp, &mut rwp, Tag::Boundary);
    let (boundary_chains, _) = tally(o, &mut chains, &mut jumps, &mut notes);
    let mut wp: Vec<TracePoint> = cwp.iter().chain(bwp.iter()).cloned().collect();
    let o = plot_oval(&tracer, &mut rwp, &mut wp);
    let (oval_chains, _) = tally(o, &mut chains, &mut jumps, &mut notes);
    let (wc, wb) = wp.split_at(cwp.len());
    cwp.clone_from_slice(wc);
    bwp.clone_from_slice(wb);
    stats.try_chains = try_chains;
    stats.resume_chains = resume_chains;
    stats.boundary_chains = boundary_chains;
    stats.oval_chains = oval_chains;
    stats.front_points = front_points;
    stats.front_consumed = front_consumed;

    // Witness points already on the computed curve are dropped.
    let tol = tracer.hit_tol();
    let unused: Vec<Vec<f64>> = rwp
        .into_iter()
        .filter(|w| {
            !chains.iter().any(|c| c.vertices.windows(2).any(|s| segment_distance(w, &s[0], &s[1]) <= tol))
        })
        .collect();

    let simplify_tol = cfg.simplify_fraction * cfg.eps / r;
    if simplify_tol > 0.0 {
        for c in chains.iter_mut() {
            let idx = simplified_indices(&c.vertices, simplify_tol);
            c.vertices = idx.iter().map(|&i| c.vertices[i].clone()).collect();
            c.sigmas = idx.iter().filter_map(|&i| c.sigmas.get(i).copied()).collect();
        }
    }

    // Back to input coordinates.
    let to_orig = |p: &[f64]| out_box.clamp(&map.to_original(p));
    let to_orig_tp = |tp: &TracePoint| TracePoint { q: to_orig(&tp.q), ..tp.clone() };
    let chains = chains
        .into_iter()
        .map(|c| Chain { vertices: c.vertices.iter().map(|v| to_orig(v)).collect(), ..c })
        .collect();
    let clusters = uclusters
        .iter()
        .map(|c| Cluster {
            center: map.to_original(&c.center),
            members: c.members.iter().map(|m| map.to_original(m)).collect(),
            radius: c.radius * r,
        })
        .collect();
    let jump_reports = jumps.into_iter().map(|j| JumpReport { location: map.to_original(&j.location), ..j }).collect();
    let singular_orig: Vec<Vec<f64>> = s0.iter().map(|p| map.to_original(p)).collect();
    let key_points = KeyPointReport {
        singular: singular_orig.clone(),
        fencing: cwp.iter().map(to_orig_tp).collect(),
        boundary: bwp.iter().map(to_orig_tp).collect(),
        witness: witness.iter().map(|w| map.to_original(w)).collect(),
        mode,
    };
    let singular_points = match cfg.coefficient_mode {
        CoefficientMode::Exact => singular_orig,
        CoefficientMode::Perturbed => Vec::new(),
    };
    Ok(ApproxCurve {
        nvars: n,
        bounds: out_box.clone(),
        chains,
        singular_points,
        clusters,
        key_points,
        jump_reports,
        unused_witness: unused.iter().map(|w| map.to_original(w)).collect(),
        notes,
        stats,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests;
