//! Measured one-sided distances between an approximation and sampled curve points.

use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::ApproxCurve;
use crate::keypoints::BoundingBox;
use crate::numeric::{distance, norm, svd};
use crate::poly::CurveSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonReport {
    /// Sup over curve samples of the distance to the approximation; `None` when no curve
    /// samples are available (n >= 3 without a parametrization).
    pub curve_to_approx: Option<f64>,
    /// Sup over chain vertices of the distance to the curve.
    pub approx_to_curve: f64,
    pub samples: usize,
}

impl EpsilonReport {
    pub fn within(&self, eps: f64) -> bool {
        self.curve_to_approx.is_none_or(|d| d <= eps) && self.approx_to_curve <= eps
    }
}

/// Uniform hash grid over segments (points are zero-length segments).
struct SegmentGrid {
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
    segs: Vec<(Vec<f64>, Vec<f64>)>,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

fn seg_dist(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut t = 0.0;
    for i in 0..p.len() {
        let d = b[i] - a[i];
        ab2 += d * d;
        t += (p[i] - a[i]) * d;
    }
    let t = if ab2 > 0.0 { (t / ab2).clamp(0.0, 1.0) } else { 0.0 };
    p.iter().zip(a).zip(b).map(|((pi, ai), bi)| (pi - ai - t * (bi - ai)).powi(2)).sum::<f64>().sqrt()
}

impl SegmentGrid {
    fn new(segs: Vec<(Vec<f64>, Vec<f64>)>, cell: f64) -> Self {
        let n = segs.first().map_or(0, |s| s.0.len());
        let mut g = SegmentGrid { cell, buckets: HashMap::new(), segs: Vec::new(), lo: vec![i64::MAX; n], hi: vec![i64::MIN; n] };
        for (k, (a, b)) in segs.iter().enumerate() {
            let lo: Vec<i64> = a.iter().zip(b).map(|(x, y)| g.index(x.min(*y))).collect();
            let hi: Vec<i64> = a.iter().zip(b).map(|(x, y)| g.index(x.max(*y))).collect();
            for i in 0..n {
                g.lo[i] = g.lo[i].min(lo[i]);
                g.hi[i] = g.hi[i].max(hi[i]);
            }
            let mut idx = lo.clone();
            loop {
                g.buckets.entry(idx.clone()).or_default().push(k);
                let mut d = 0;
                while d < n {
                    idx[d] += 1;
                    if idx[d] <= hi[d] {
                        break;
                    }
                    idx[d] = lo[d];
                    d += 1;
                }
                if d == n {
                    break;
                }
            }
        }
        g.segs = segs;
        g
    }

    fn index(&self, x: f64) -> i64 {
        (x / self.cell).floor() as i64
    }

    fn nearest(&self, p: &[f64]) -> f64 {
        if self.segs.is_empty() {
            return f64::INFINITY;
        }
        let n = p.len();
        let c: Vec<i64> = p.iter().map(|&x| self.index(x)).collect();
        let max_ring = (0..n).map(|i| (c[i] - self.lo[i]).abs().max((self.hi[i] - c[i]).abs())).max().unwrap_or(0);
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            // Visit the shell of cells at Chebyshev distance `ring` from `c`.
            let mut off = vec![-ring; n];
            loop {
                if off.iter().any(|o| o.abs() == ring) {
                    let key: Vec<i64> = c.iter().zip(&off).map(|(a, b)| a + b).collect();
                    if let Some(list) = self.buckets.get(&key) {
                        for &k in list {
                            best = best.min(seg_dist(p, &self.segs[k].0, &self.segs[k].1));
                        }
                    }
                }
                let mut d = 0;
                while d < n {
                    off[d] += 1;
                    if off[d] <= ring {
                        break;
                    }
                    off[d] = -ring;
                    d += 1;
                }
                if d == n {
                    break;
                }
            }
            if best <= ring as f64 * self.cell {
                break;
            }
        }
        best
    }
}

fn approximation_segments(curve: &ApproxCurve) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut segs = Vec::new();
    for c in &curve.chains {
        if c.vertices.len() == 1 {
            segs.push((c.vertices[0].clone(), c.vertices[0].clone()));
        }
        for w in c.vertices.windows(2) {
            segs.push((w[0].clone(), w[1].clone()));
        }
    }
    for p in &curve.singular_points {
        segs.push((p.clone(), p.clone()));
    }
    segs
}

fn vertices_and_midpoints(curve: &ApproxCurve) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for c in &curve.chains {
        pts.extend(c.vertices.iter().cloned());
        for w in c.vertices.windows(2) {
            pts.push(w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect());
        }
    }
    pts
}

fn cell_size(bounds: &BoundingBox, count: usize) -> f64 {
    let n = bounds.dim();
    let vol: f64 = (0..n).map(|k| bounds.width(k)).product();
    (vol / count.max(1) as f64).powf(1.0 / n as f64).max(1e-12)
}

/// Distances against explicit curve samples (e.g. a fine parametrization).
pub fn verify_epsilon_against(curve: &ApproxCurve, samples: &[Vec<f64>]) -> EpsilonReport {
    let segs = approximation_segments(curve);
    let cell = cell_size(&curve.bounds, segs.len().max(16));
    let to_approx = SegmentGrid::new(segs, cell);
    let curve_to_approx = samples.iter().map(|s| to_approx.nearest(s)).fold(0.0, f64::max);

    let sample_grid = SegmentGrid::new(samples.iter().map(|s| (s.clone(), s.clone())).collect(), cell_size(&curve.bounds, samples.len()));
    let approx_to_curve = vertices_and_midpoints(curve).iter().map(|p| sample_grid.nearest(p)).fold(0.0, f64::max);
    EpsilonReport { curve_to_approx: Some(curve_to_approx), approx_to_curve, samples: samples.len() }
}

/// Sign-change samples of a planar curve `f = 0` on a grid of spacing about `resolution`:
/// every grid edge with a sign change contributes its root, located by bisection.
pub fn sign_change_samples(sys: &CurveSystem, bounds: &BoundingBox, resolution: f64) -> Vec<Vec<f64>> {
    assert_eq!(sys.nvars(), 2, "sign-change sampling is planar");
    let f = |x: f64, y: f64| sys.original_values(&[x, y])[0];
    let mx = (bounds.width(0) / resolution).ceil().max(1.0) as usize;
    let my = (bounds.width(1) / resolution).ceil().max(1.0) as usize;
    let (x0, y0) = (bounds.lower()[0], bounds.lower()[1]);
    let hx = bounds.width(0) / mx as f64;
    let hy = bounds.width(1) / my as f64;
    let vals: Vec<Vec<f64>> =
        (0..=mx).map(|i| (0..=my).map(|j| f(x0 + i as f64 * hx, y0 + j as f64 * hy)).collect()).collect();
    let bisect = |a: [f64; 2], b: [f64; 2], fa: f64| {
        let (mut a, mut b, mut fa) = (a, b, fa);
        for _ in 0..40 {
            let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let fm = f(m[0], m[1]);
            if fm == 0.0 {
                return m.to_vec();
            }
            if (fm > 0.0) == (fa > 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        vec![0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    };
    let mut out = Vec::new();
    for i in 0..=mx {
        for j in 0..=my {
            let p = [x0 + i as f64 * hx, y0 + j as f64 * hy];
            let v = vals[i][j];
            if v == 0.0 {
                out.push(p.to_vec());
                continue;
            }
            if i < mx {
                let w = vals[i + 1][j];
                if w != 0.0 && (v > 0.0) != (w > 0.0) {
                    out.push(bisect(p, [p[0] + hx, p[1]], v));
                }
            }
            if j < my {
                let w = vals[i][j + 1];
                if w != 0.0 && (v > 0.0) != (w > 0.0) {
                    out.push(bisect(p, [p[0], p[1] + hy], v));
                }
            }
        }
    }
    out
}

/// Minimum-norm Newton projection onto the curve; the distance moved, or `+inf` if the
/// iteration does not converge.
fn newton_projection_distance(sys: &CurveSystem, p: &[f64]) -> f64 {
    let mut x = p.to_vec();
    for _ in 0..50 {
        let r = DVector::from_vec(sys.eval(&x));
        if r.norm() <= 1e-12 * (1.0 + norm(&x)) {
            break;
        }
        let d = svd(&sys.jacobian(&x)).solve_truncated(&r, 1e-12);
        for (xi, di) in x.iter_mut().zip(d.iter()) {
            *xi -= di;
        }
        if d.norm() <= 1e-15 * (1.0 + norm(&x)) {
            break;
        }
    }
    if norm(&sys.eval(&x)) <= 1e-8 * (1.0 + norm(&x)) {
        distance(p, &x)
    } else {
        f64::INFINITY
    }
}

/// Measures both one-sided distances for `curve` against the curve of `sys` in `bounds`.
///
/// Planar systems are sampled by a sign-change grid with about `n_samples` nodes. For
/// `n >= 3` only the chain-to-curve direction is measured, by Newton projection.
pub fn verify_epsilon(curve: &ApproxCurve, sys: &CurveSystem, bounds: &BoundingBox, n_samples: usize) -> EpsilonReport {
    assert!(n_samples >= 1000, "verify_epsilon needs at least 1000 samples");
    if sys.nvars() == 2 {
        let res = (bounds.width(0) * bounds.width(1) / n_samples as f64).sqrt();
        let samples = sign_change_samples(sys, bounds, res);
        return verify_epsilon_against(curve, &samples);
    }
    let approx_to_curve =
        vertices_and_midpoints(curve).iter().map(|p| newton_projection_distance(sys, p)).fold(0.0, f64::max);
    EpsilonReport { curve_to_approx: None, approx_to_curve, samples: 0 }
}
