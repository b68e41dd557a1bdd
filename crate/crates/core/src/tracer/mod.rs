//! Curve following: the main tracing loop over start objects (try / resume / boundary
//! passes) and the closed-component loop started from witness points.
//!
//! All coordinates here live in the unit frame produced by
//! [`rescale_system`](crate::poly::rescale_system).

mod step;

pub use step::{step_control, StepState};

use serde::{Deserialize, Serialize};

use crate::keypoints::BoundingBox;
use crate::numeric::{dot, jump_check, newton_correct, tangent_frame};
use crate::poly::CurveSystem;

/// Start or front object `(q, v, s, c)`: point, tracing direction, smallest singular
/// value of the Jacobian at `q`, and visit counter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub s: f64,
    pub c: u32,
}

impl TracePoint {
    /// Builds an unvisited object, normalizing `v`.
    pub fn new(q: Vec<f64>, v: Vec<f64>, s: f64) -> Self {
        let nv = crate::numeric::norm(&v);
        let v = if nv > 0.0 { v.iter().map(|x| x / nv).collect() } else { v };
        TracePoint { q, v, s, c: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndKind {
    Fencing,
    Boundary,
    Front,
    Closure,
    Stalled,
}

impl EndKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EndKind::Fencing => "fencing",
            EndKind::Boundary => "boundary",
            EndKind::Front => "front",
            EndKind::Closure => "closure",
            EndKind::Stalled => "stalled",
        }
    }
}

/// Traced polyline together with the smallest singular value measured at each vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub vertices: Vec<Vec<f64>>,
    pub closed: bool,
    pub start_kind: EndKind,
    pub end_kind: EndKind,
    pub sigmas: Vec<f64>,
}

impl Chain {
    fn start(q: &[f64], s: f64, kind: EndKind) -> Self {
        Chain { vertices: vec![q.to_vec()], closed: false, start_kind: kind, end_kind: EndKind::Stalled, sigmas: vec![s] }
    }

    fn push(&mut self, q: &[f64], s: f64) {
        if let Some(last) = self.vertices.last() {
            if crate::numeric::distance(last, q) == 0.0 {
                return;
            }
        }
        self.vertices.push(q.to_vec());
        self.sigmas.push(s);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub location: Vec<f64>,
    pub description: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    /// Step from `delta` and the singular value, adapted on corrector failure.
    Practical,
    /// Step `sigma / (2 mu rho)` with the jump criterion checked after every step.
    Robust,
}

/// When a try pass stops because the smallest singular value is decreasing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropRule {
    /// Stop as soon as `s < s'`.
    Literal,
    /// Stop once `s < 0.99 s'` has held for two consecutive steps.
    Hysteresis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceConfig {
    pub mode: StepMode,
    pub rho: f64,
    pub corrector_tol: f64,
    pub max_newton: usize,
    pub h_min: f64,
    pub drop_rule: DropRule,
    /// Overrides the step rule with a constant step (halved only on corrector failure).
    pub fixed_step: Option<f64>,
    pub max_steps_per_chain: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            mode: StepMode::Practical,
            rho: 1.6,
            corrector_tol: 1e-10,
            max_newton: 20,
            h_min: 1e-7,
            drop_rule: DropRule::Hysteresis,
            fixed_step: None,
            max_steps_per_chain: 10_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    Try,
    Resume,
    Boundary,
}

/// Geometry shared by every pass of one run.
pub struct Tracer<'a> {
    pub sys: &'a CurveSystem,
    pub bounds: &'a BoundingBox,
    pub delta: f64,
    pub cfg: &'a TraceConfig,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceOutput {
    pub chains: Vec<Chain>,
    pub front: Vec<TracePoint>,
    pub jumps: Vec<JumpReport>,
    pub warnings: Vec<String>,
    pub steps: usize,
    pub rejected_steps: usize,
}

/// Membership test `target.q in [a, b]` for an object approached against its direction.
pub fn segment_hit(target: &TracePoint, a: &[f64], b: &[f64], v_current: &[f64], tol: f64, tol_rel: f64) -> bool {
    dot(&target.v, v_current) < 0.0 && point_on_segment(&target.q, a, b, tol, tol_rel)
}

fn point_on_segment(p: &[f64], a: &[f64], b: &[f64], tol: f64, tol_rel: f64) -> bool {
    segment_offset(p, a, b, tol_rel).is_some_and(|d| d <= tol)
}

/// Distance from `p` to `[a, b]`, or `None` when `p` projects outside the segment
/// extended by `tol_rel` of its length at each end.
fn segment_offset(p: &[f64], a: &[f64], b: &[f64], tol_rel: f64) -> Option<f64> {
    let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let ap: Vec<f64> = p.iter().zip(a).map(|(x, y)| x - y).collect();
    let len2 = dot(&ab, &ab);
    if len2 == 0.0 {
        return Some(crate::numeric::norm(&ap));
    }
    let t = dot(&ap, &ab) / len2;
    if t < -tol_rel || t > 1.0 + tol_rel {
        return None;
    }
    let tc = t.clamp(0.0, 1.0);
    let closest: Vec<f64> = a.iter().zip(&ab).map(|(x, d)| x + tc * d).collect();
    Some(crate::numeric::distance(p, &closest))
}

/// Index of the object closest to `[a, b]` among those `segment_hit` accepts. Taking the
/// closest matters when neighbouring branches are nearer than the hit tolerance.
fn nearest_hit(objs: &[TracePoint], skip: Option<usize>, a: &[f64], b: &[f64], v: &[f64], tol: f64) -> Option<usize> {
    objs.iter()
        .enumerate()
        .filter(|&(i, o)| Some(i) != skip && dot(&o.v, v) < 0.0)
        .filter_map(|(i, o)| segment_offset(&o.q, a, b, TOL_REL).filter(|&d| d <= tol).map(|d| (i, d)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(i, _)| i)
}

const TOL_REL: f64 = 0.05;

/// One accepted predictor-corrector step.
struct Accepted {
    q: Vec<f64>,
    v: Vec<f64>,
    s: f64,
}

enum StepFailure {
    Stalled(String),
}

impl<'a> Tracer<'a> {
    pub fn new(sys: &'a CurveSystem, bounds: &'a BoundingBox, delta: f64, cfg: &'a TraceConfig) -> Self {
        Tracer { sys, bounds, delta, cfg }
    }

    pub fn hit_tol(&self) -> f64 {
        (2.0 * self.cfg.corrector_tol).max(0.05 * self.delta)
    }

    /// Tangent at `q` oriented along `dir`, with the smallest singular value.
    fn oriented_tangent(&self, q: &[f64], dir: &[f64]) -> Option<(Vec<f64>, f64)> {
        let frame = tangent_frame(&self.sys.jacobian(q)).ok()?;
        let mut t = frame.tangent;
        if dot(&t, dir) < 0.0 {
            t.iter_mut().for_each(|x| *x = -*x);
        }
        Some((t, frame.sigma_min))
    }

    fn advance(&self, q: &[f64], v: &[f64], state: &mut StepState, out: &mut TraceOutput) -> Result<Accepted, StepFailure> {
        let n = self.sys.nvars();
        loop {
            let h = match step_control(state, n, self.cfg) {
                Some(h) => h,
                None => return Err(StepFailure::Stalled(format!("step size fell below {:e}", self.cfg.h_min))),
            };
            let pred: Vec<f64> = q.iter().zip(v).map(|(x, d)| x + h * d).collect();
            let result = newton_correct(self.sys, &pred, v, self.cfg.corrector_tol, self.cfg.max_newton);
            let accepted = match result {
                Ok(corr) => match self.oriented_tangent(&corr.point, v) {
                    Some((t, s)) => {
                        let robust_ok = match self.cfg.mode {
                            StepMode::Robust if self.cfg.fixed_step.is_none() => jump_check(q, &corr.point, h, self.cfg.rho),
                            _ => true,
                        };
                        robust_ok.then_some(Accepted { q: corr.point, v: t, s })
                    }
                    None => None,
                },
                Err(_) => None,
            };
            match accepted {
                Some(a) => {
                    state.accept(a.s);
                    out.steps += 1;
                    return Ok(a);
                }
                None => {
                    out.rejected_steps += 1;
                    state.reject(h, self.cfg.h_min);
                }
            }
        }
    }

    fn clip_to_box(&self, inside: &[f64], outside: &[f64]) -> Vec<f64> {
        let t = self.bounds.exit_parameter(inside, outside).unwrap_or(1.0);
        let p: Vec<f64> = inside.iter().zip(outside).map(|(a, b)| a + t * (b - a)).collect();
        self.bounds.clamp(&p)
    }
}

fn kinds(tag: Tag) -> (EndKind, EndKind) {
    match tag {
        Tag::Try => (EndKind::Fencing, EndKind::Boundary),
        Tag::Resume => (EndKind::Front, EndKind::Boundary),
        Tag::Boundary => (EndKind::Boundary, EndKind::Fencing),
    }
}

/// Main tracing pass.
///
/// `starts` are traced in order (objects with `c > 0` are skipped); `targets` are the
/// objects whose crossing ends a chain. In a try pass `starts` are fencing points and
/// `targets` boundary points; in a resume pass `starts` are the front points of the
/// try pass; in a boundary pass `starts` are boundary points and `targets` fencing
/// points. Hitting an already visited object records a jump report.
pub fn plot_main(
    tracer: &Tracer,
    starts: &mut [TracePoint],
    targets: &mut [TracePoint],
    rwp: &mut Vec<Vec<f64>>,
    tag: Tag,
) -> TraceOutput {
    let mut out = TraceOutput::default();
    let (start_kind, target_kind) = kinds(tag);
    let tol = tracer.hit_tol();
    let cfg = tracer.cfg;
    for j in 0..starts.len() {
        if starts[j].c > 0 {
            continue;
        }
        starts[j].c = 1;
        let sp = starts[j].clone();
        let mut chain = Chain::start(&sp.q, sp.s, start_kind);
        let (mut v, mut s) = tracer.oriented_tangent(&sp.q, &sp.v).unwrap_or((sp.v.clone(), sp.s));
        let mut q = sp.q.clone();
        let mut state = StepState::new(s, tracer.delta);
        let mut drops = 0usize;
        let mut count = 0usize;
        loop {
            count += 1;
            if count > cfg.max_steps_per_chain {
                chain.end_kind = EndKind::Stalled;
                out.warnings.push(format!("chain from {:?} exceeded {} steps", sp.q, cfg.max_steps_per_chain));
                break;
            }
            let (q_prev, s_prev) = (q.clone(), s);
            let step = match tracer.advance(&q, &v, &mut state, &mut out) {
                Ok(a) => a,
                Err(StepFailure::Stalled(msg)) => {
                    chain.end_kind = EndKind::Stalled;
                    out.warnings.push(format!("chain stalled at {q:?}: {msg}"));
                    break;
                }
            };
            q = step.q;
            v = step.v;
            s = step.s;

            rwp.retain(|p| !point_on_segment(p, &q_prev, &q, tol, TOL_REL));

            if let Some(i) = nearest_hit(targets, None, &q_prev, &q, &v, tol) {
                if targets[i].c > 0 {
                    out.jumps.push(JumpReport {
                        location: targets[i].q.clone(),
                        description: format!("{} point visited {} times", target_kind.as_str(), targets[i].c + 1),
                    });
                } else {
                    chain.push(&targets[i].q, targets[i].s);
                }
                targets[i].c += 1;
                chain.end_kind = target_kind;
                break;
            }

            let hit = nearest_hit(starts, Some(j), &q_prev, &q, &v, tol);
            if let Some(i) = hit {
                if starts[i].c > 0 {
                    out.jumps.push(JumpReport {
                        location: starts[i].q.clone(),
                        description: format!("{} point visited {} times", start_kind.as_str(), starts[i].c + 1),
                    });
                } else {
                    chain.push(&starts[i].q, starts[i].s);
                }
                starts[i].c += 1;
                chain.end_kind = start_kind;
                break;
            }

            if !tracer.bounds.contains(&q, 0.0) {
                let exit = tracer.clip_to_box(&q_prev, &q);
                chain.push(&exit, s);
                chain.end_kind = EndKind::Boundary;
                if tag == Tag::Try || tag == Tag::Resume || targets.is_empty() {
                    out.warnings.push(format!("chain left the box at {exit:?} without meeting a boundary point"));
                }
                break;
            }

            if tag == Tag::Try {
                if let Some(i) = nearest_hit(&out.front, None, &q_prev, &q, &v, tol) {
                    let f = out.front.remove(i);
                    chain.push(&f.q, f.s);
                    chain.end_kind = EndKind::Front;
                    break;
                }
                let dropped = match cfg.drop_rule {
                    DropRule::Literal => s < s_prev,
                    DropRule::Hysteresis => {
                        drops = if s < 0.99 * s_prev { drops + 1 } else { 0 };
                        drops >= 2
                    }
                };
                if dropped {
                    chain.push(&q, s);
                    out.front.push(TracePoint { q: q.clone(), v: v.clone(), s, c: 0 });
                    chain.end_kind = EndKind::Front;
                    break;
                }
            }
            chain.push(&q, s);
        }
        out.chains.push(chain);
    }
    out
}

/// Traces closed components from the remaining witness points. `wp` holds the fencing
/// and boundary objects; crossing one ends the chain and bumps its counter.
pub fn plot_oval(tracer: &Tracer, rwp: &mut Vec<Vec<f64>>, wp: &mut [TracePoint]) -> TraceOutput {
    let mut out = TraceOutput::default();
    let tol = tracer.hit_tol();
    let cfg = tracer.cfg;
    while !rwp.is_empty() {
        let p = rwp.remove(0);
        let Some((mut v, mut s)) = tracer.oriented_tangent(&p, &[]) else {
            out.warnings.push(format!("no tangent at witness point {p:?}"));
            continue;
        };
        let mut chain = Chain::start(&p, s, EndKind::Closure);
        let mut q = p.clone();
        let mut state = StepState::new(s, tracer.delta);
        let mut k = 0usize;
        loop {
            k += 1;
            if k > cfg.max_steps_per_chain {
                chain.end_kind = EndKind::Stalled;
                out.warnings.push(format!("oval from {p:?} exceeded {} steps", cfg.max_steps_per_chain));
                break;
            }
            let q_prev = q.clone();
            let step = match tracer.advance(&q, &v, &mut state, &mut out) {
                Ok(a) => a,
                Err(StepFailure::Stalled(msg)) => {
                    chain.end_kind = EndKind::Stalled;
                    out.warnings.push(format!("oval stalled at {q:?}: {msg}"));
                    break;
                }
            };
            q = step.q;
            v = step.v;
            s = step.s;
            if k > 2 && point_on_segment(&p, &q_prev, &q, tol, TOL_REL) {
                chain.push(&p, chain.sigmas[0]);
                chain.closed = true;
                chain.end_kind = EndKind::Closure;
                break;
            }
            rwp.retain(|r| !point_on_segment(r, &q_prev, &q, tol, TOL_REL));
            if let Some(i) = nearest_hit(wp, None, &q_prev, &q, &v, tol) {
                if wp[i].c > 0 {
                    out.jumps.push(JumpReport {
                        location: wp[i].q.clone(),
                        description: format!("oval trace crossed a start point visited {} times", wp[i].c + 1),
                    });
                }
                wp[i].c += 1;
                chain.end_kind = if tracer.bounds.distance_to_boundary(&wp[i].q) <= tol { EndKind::Boundary } else { EndKind::Fencing };
                break;
            }
            if !tracer.bounds.contains(&q, 0.0) {
                let exit = tracer.clip_to_box(&q_prev, &q);
                chain.push(&exit, s);
                chain.end_kind = EndKind::Boundary;
                out.warnings.push(format!("oval trace left the box at {exit:?}"));
                break;
            }
            chain.push(&q, s);
        }
        out.chains.push(chain);
    }
    out
}
