use std::fmt::Write as _;

use serde::Serialize;

use super::IoError;
use crate::cluster::Cluster;
use crate::driver::{ApproxCurve, RunConfig, RunStats};
use crate::tracer::JumpReport;

#[derive(Serialize)]
struct ChainOut<'a> {
    closed: bool,
    start_kind: &'static str,
    end_kind: &'static str,
    vertices: &'a [Vec<f64>],
}

#[derive(Serialize)]
struct StatsOut<'a> {
    #[serde(flatten)]
    run: &'a RunStats,
    fencing_points: usize,
    boundary_points: usize,
    witness_points: usize,
    unused_witness: &'a [Vec<f64>],
    notes: &'a [String],
}

#[derive(Serialize)]
struct CurveOut<'a> {
    nvars: usize,
    chains: Vec<ChainOut<'a>>,
    singular_points: &'a [Vec<f64>],
    clusters: &'a [Cluster],
    jump_reports: Vec<String>,
    stats: StatsOut<'a>,
    config_echo: &'a RunConfig,
}

pub(crate) fn describe_jump(j: &JumpReport) -> String {
    let coords: Vec<String> = j.location.iter().map(|v| format!("{v}")).collect();
    format!("{} at ({})", j.description, coords.join(", "))
}

/// JSON document of a run. Floats are written in shortest round-trip form, so parsing
/// the output reproduces every coordinate bit for bit.
pub fn export_json(curve: &ApproxCurve) -> Vec<u8> {
    let doc = CurveOut {
        nvars: curve.nvars,
        chains: curve
            .chains
            .iter()
            .map(|c| ChainOut {
                closed: c.closed,
                start_kind: c.start_kind.as_str(),
                end_kind: c.end_kind.as_str(),
                vertices: &c.vertices,
            })
            .collect(),
        singular_points: &curve.singular_points,
        clusters: &curve.clusters,
        jump_reports: curve.jump_reports.iter().map(describe_jump).collect(),
        stats: StatsOut {
            run: &curve.stats,
            fencing_points: curve.key_points.fencing.len(),
            boundary_points: curve.key_points.boundary.len(),
            witness_points: curve.key_points.witness.len(),
            unused_witness: &curve.unused_witness,
            notes: &curve.notes,
        },
        config_echo: &curve.config,
    };
    serde_json::to_vec_pretty(&doc).expect("curve serializes")
}

/// SVG drawing of a planar run: one path per chain, singular points as dots.
pub fn export_svg(curve: &ApproxCurve, width_px: u32, height_px: u32) -> Result<Vec<u8>, IoError> {
    if curve.nvars != 2 {
        return Err(IoError::Dimension { what: "SVG export", expected: "2", got: curve.nvars });
    }
    let (w, h) = (width_px.max(1) as f64, height_px.max(1) as f64);
    let lo = curve.bounds.lower();
    let (bw, bh) = (curve.bounds.width(0), curve.bounds.width(1));
    let px = |p: &[f64]| {
        let x = ((p[0] - lo[0]) / bw * w).clamp(0.0, w);
        let y = (h - (p[1] - lo[1]) / bh * h).clamp(0.0, h);
        (x, y)
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" height="{height_px}" viewBox="0 0 {width_px} {height_px}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{width_px}" height="{height_px}" fill="white" stroke="gray"/>"#);
    for c in &curve.chains {
        let mut d = String::new();
        for (k, v) in c.vertices.iter().enumerate() {
            let (x, y) = px(v);
            let _ = write!(d, "{}{x:.3} {y:.3} ", if k == 0 { "M" } else { "L" });
        }
        if c.closed {
            d.push('Z');
        }
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="black" stroke-width="1"/>"#, d.trim_end());
    }
    for p in &curve.singular_points {
        let (x, y) = px(p);
        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="red"/>"#);
    }
    s.push_str("</svg>\n");
    Ok(s.into_bytes())
}

/// Wavefront OBJ polylines, projected onto the variables `projection` (defaults to the
/// first three). Vertex indices are 1-based.
pub fn export_obj(curve: &ApproxCurve, projection: Option<[usize; 3]>) -> Result<Vec<u8>, IoError> {
    let proj = match projection {
        Some(p) => p,
        None if curve.nvars >= 3 => [0, 1, 2],
        None => return Err(IoError::Dimension { what: "OBJ export without projection", expected: "at least 3", got: curve.nvars }),
    };
    if let Some(&index) = proj.iter().find(|&&i| i >= curve.nvars) {
        return Err(IoError::Projection { index, nvars: curve.nvars });
    }
    let mut s = String::from("# curvetrace polylines\n");
    let mut next = 1usize;
    for c in &curve.chains {
        let first = next;
        for v in &c.vertices {
            let _ = writeln!(s, "v {} {} {}", v[proj[0]], v[proj[1]], v[proj[2]]);
        }
        next += c.vertices.len();
        if c.vertices.len() >= 2 {
            let idx: Vec<String> = (first..next).map(|i| i.to_string()).collect();
            let _ = writeln!(s, "l {}", idx.join(" "));
        }
    }
    for p in &curve.singular_points {
        let _ = writeln!(s, "v {} {} {}", p[proj[0]], p[proj[1]], p[proj[2]]);
        let _ = writeln!(s, "p {next}");
        next += 1;
    }
    Ok(s.into_bytes())
}
