use super::*;
use crate::tracer::EndKind;

fn circle() -> (CurveSystem, BoundingBox) {
    (CurveSystem::parse(&["x^2+y^2-1"], &["x", "y"]).unwrap(), BoundingBox::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap())
}

fn circle_samples(k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|i| {
        let t = std::f64::consts::TAU * i as f64 / k as f64;
        vec![t.cos(), t.sin()]
    }).collect()
}

#[test]
fn config_validation() {
    assert!(RunConfig::default().validate().is_ok());
    assert!(RunConfig { eps: 0.0, ..RunConfig::default() }.validate().is_err());
    assert!(RunConfig { rho: 1.5, ..RunConfig::default() }.validate().is_err());
    assert!(RunConfig { fixed_step: Some(-1.0), ..RunConfig::default() }.validate().is_err());
    assert!(RunConfig { simplify_fraction: 0.7, ..RunConfig::default() }.validate().is_err());
}

#[test]
fn config_json_defaults() {
    let c: RunConfig = serde_json::from_str(r#"{"eps": 0.3, "mode": "robust", "coefficient_mode": "perturbed"}"#).unwrap();
    assert_eq!(c.eps, 0.3);
    assert_eq!(c.mode, StepMode::Robust);
    assert_eq!(c.coefficient_mode, CoefficientMode::Perturbed);
    assert_eq!(c.rho, 1.6);
}

#[test]
fn box_dimension_mismatch_is_an_error() {
    let (sys, _) = circle();
    let b = BoundingBox::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
    assert!(matches!(approx_plot(&sys, &b, &RunConfig::default()), Err(DriverError::System(_))));
}

#[test]
fn circle_is_one_closed_chain() {
    let (sys, b) = circle();
    let cfg = RunConfig { eps: 0.2, ..RunConfig::default() };
    let c = approx_plot(&sys, &b, &cfg).unwrap();
    assert_eq!(c.chains.len(), 1);
    assert!(c.chains[0].closed);
    assert_eq!(c.chains[0].start_kind, EndKind::Closure);
    assert!(c.singular_points.is_empty() && c.key_points.boundary.is_empty());
    let rep = verify_epsilon_against(&c, &circle_samples(10_000));
    assert!(rep.within(0.2), "{rep:?}");
}

#[test]
fn outputs_lie_in_the_box() {
    let sys = CurveSystem::parse(&["x^2-y^2-1/4"], &["x", "y"]).unwrap();
    let b = BoundingBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let c = approx_plot(&sys, &b, &RunConfig { eps: 0.1, ..RunConfig::default() }).unwrap();
    assert_eq!(c.chains.len(), 2);
    for ch in &c.chains {
        assert_eq!((ch.start_kind, ch.end_kind), (EndKind::Boundary, EndKind::Boundary));
        for v in &ch.vertices {
            assert!(b.contains(v, 0.0), "{v:?}");
        }
    }
}

#[test]
fn empty_curve_notes_it() {
    let sys = CurveSystem::parse(&["x^2+y^2+1"], &["x", "y"]).unwrap();
    let b = BoundingBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let c = approx_plot(&sys, &b, &RunConfig::default()).unwrap();
    assert!(c.chains.is_empty());
    assert!(c.notes.iter().any(|n| n.contains("no real points")));
}

#[test]
fn perturbed_mode_drops_singular_points() {
    let sys = CurveSystem::parse(&["x^2-y^2"], &["x", "y"]).unwrap();
    let b = BoundingBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let exact = approx_plot(&sys, &b, &RunConfig::default()).unwrap();
    assert_eq!(exact.singular_points.len(), 1);
    let pert = approx_plot(&sys, &b, &RunConfig { coefficient_mode: CoefficientMode::Perturbed, ..RunConfig::default() }).unwrap();
    assert!(pert.singular_points.is_empty());
    assert_eq!(pert.key_points.mode, SingularMode::PseudoSingular);
    assert_eq!(pert.clusters.len(), 1);
}

#[test]
fn crossing_lines_give_four_fencing_chains() {
    let sys = CurveSystem::parse(&["x^2-y^2"], &["x", "y"]).unwrap();
    let b = BoundingBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let c = approx_plot(&sys, &b, &RunConfig::default()).unwrap();
    assert_eq!(c.key_points.fencing.len(), 4);
    assert_eq!(c.chains.len(), 4);
    assert!(c.chains.iter().all(|ch| ch.start_kind == EndKind::Fencing && ch.end_kind == EndKind::Boundary));
    assert!(c.jump_reports.is_empty());
    let rep = verify_epsilon(&c, &sys, &b, 40_000);
    assert!(rep.within(0.1), "{rep:?}");
}

#[test]
fn verify_detects_a_displaced_vertex() {
    let (sys, b) = circle();
    let eps = 0.2;
    let mut c = approx_plot(&sys, &b, &RunConfig { eps, ..RunConfig::default() }).unwrap();
    let v = &mut c.chains[0].vertices[3];
    let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
    for x in v.iter_mut() {
        *x *= (r + 2.0 * eps) / r;
    }
    let rep = verify_epsilon(&c, &sys, &b, 40_000);
    assert!(rep.approx_to_curve > eps, "{rep:?}");
}

#[test]
fn verify_empty_chains_on_nonempty_curve_is_infinite() {
    let (sys, b) = circle();
    let c = ApproxCurve::empty(2, b.clone(), RunConfig::default());
    let rep = verify_epsilon(&c, &sys, &b, 10_000);
    assert_eq!(rep.curve_to_approx, Some(f64::INFINITY));
}

#[test]
fn verify_space_curve_projects_vertices() {
    let sys = CurveSystem::parse(&["x^2+y^2+z^2-1", "z"], &["x", "y", "z"]).unwrap();
    let b = BoundingBox::new(vec![-2.0; 3], vec![2.0; 3]).unwrap();
    let c = approx_plot(&sys, &b, &RunConfig { eps: 0.2, ..RunConfig::default() }).unwrap();
    let rep = verify_epsilon(&c, &sys, &b, 1000);
    assert!(rep.curve_to_approx.is_none());
    assert!(rep.approx_to_curve <= 0.2);
}

#[test]
fn simplification_keeps_ends_and_tolerance() {
    let pts: Vec<Vec<f64>> = (0..=100).map(|i| {
        let t = i as f64 / 100.0;
        vec![t, 0.1 * (6.0 * t).sin()]
    }).collect();
    let tol = 1e-3;
    let s = simplify_polyline(&pts, tol);
    assert_eq!(s.first(), pts.first());
    assert_eq!(s.last(), pts.last());
    assert!(s.len() < pts.len());
    for p in &pts {
        let d = s.windows(2).map(|w| segment_distance(p, &w[0], &w[1])).fold(f64::INFINITY, f64::min);
        assert!(d <= tol + 1e-15);
    }
    assert_eq!(simplify_polyline(&pts[..2], tol).len(), 2);
}

#[test]
fn same_seed_same_output() {
    let sys = CurveSystem::parse(&["y^2-(-x^2+x)^3"], &["x", "y"]).unwrap();
    let b = BoundingBox::new(vec![-0.5, -0.5], vec![1.5, 0.5]).unwrap();
    let cfg = RunConfig { eps: 0.2, seed: 11, ..RunConfig::default() };
    assert_eq!(approx_plot(&sys, &b, &cfg).unwrap(), approx_plot(&sys, &b, &cfg).unwrap());
}
