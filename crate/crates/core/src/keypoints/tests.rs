use super::*;

const XY: [&str; 2] = ["x", "y"];

fn plane(expr: &str) -> CurveSystem {
    CurveSystem::parse(&[expr], &XY).unwrap()
}

fn square_box(lo: f64, hi: f64, n: usize) -> BoundingBox {
    BoundingBox::new(vec![lo; n], vec![hi; n]).unwrap()
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn node_singular_point() {
    let found = singular_points(&plane("x^2 - y^2"), &square_box(-2.0, 2.0, 2), 1, &cfg()).unwrap();
    assert_eq!(found.points.len(), 1);
    assert!(crate::numeric::norm(&found.points[0]) < 1e-8);
}

#[test]
fn two_cusps() {
    let sys = plane("y^2 - (-x^2+x)^3");
    let found = singular_points(&sys, &square_box(-1.0, 2.0, 2), 1, &cfg()).unwrap();
    assert_eq!(found.points.len(), 2, "{:?}", found.points);
    assert!(crate::numeric::distance(&found.points[0], &[0.0, 0.0]) < 1e-8);
    assert!(crate::numeric::distance(&found.points[1], &[1.0, 0.0]) < 1e-8);
    for p in &found.points {
        let s = tangent_frame(&sys.jacobian(p)).unwrap().sigma_min;
        assert!(s <= 1e-6);
    }
}

#[test]
fn smooth_circle_has_no_singular_points() {
    let found = singular_points(&plane("x^2 + y^2 - 1"), &square_box(-2.0, 2.0, 2), 1, &cfg()).unwrap();
    assert!(found.points.is_empty());
}

#[test]
fn space_curve_singular_points() {
    // Two spheres touching at (1, 0, 0): tangential intersection.
    let sys = CurveSystem::parse(&["x^2 + y^2 + z^2 - 1", "(x-2)^2 + y^2 + z^2 - 1"], &["x", "y", "z"]).unwrap();
    let found = singular_points(&sys, &square_box(-2.0, 3.0, 3), 5, &cfg()).unwrap();
    assert_eq!(found.points.len(), 1, "{:?}", found.points);
    assert!(crate::numeric::distance(&found.points[0], &[1.0, 0.0, 0.0]) < 1e-6);
}

#[test]
fn pseudo_singular_membership() {
    let sys = plane("x^2 - y^2 - 0.001");
    let b = square_box(-1.0, 1.0, 2);
    let found = pseudo_singular_points(&sys, &b, 0.01, 3, &cfg()).unwrap();
    assert_eq!(found.points.len(), 1);
    assert!(crate::numeric::norm(&found.points[0]) < 1e-10);
    assert!(pseudo_singular_points(&sys, &b, 1e-5, 3, &cfg()).unwrap().points.is_empty());
    let circle = plane("x^2 + y^2 - 1");
    assert!(pseudo_singular_points(&circle, &square_box(-2.0, 2.0, 2), 0.01, 3, &cfg()).unwrap().points.is_empty());
}

#[test]
fn circle_witness_points_are_antipodal() {
    let sys = plane("x^2 + y^2 - 1");
    let found = witness_points(&sys, &square_box(-2.0, 2.0, 2), 9, &cfg()).unwrap();
    assert_eq!(found.points.len(), 2);
    let (p, q) = (&found.points[0], &found.points[1]);
    assert!((p[0] + q[0]).abs() < 1e-10 && (p[1] + q[1]).abs() < 1e-10);
    assert!(sys.residual_inf(p) <= 1e-10);
}

#[test]
fn space_circle_witness_points() {
    let sys = CurveSystem::parse(&["x^2 + y^2 + z^2 - 1", "z"], &["x", "y", "z"]).unwrap();
    let found = witness_points(&sys, &square_box(-2.0, 2.0, 3), 4, &cfg()).unwrap();
    assert_eq!(found.points.len(), 2);
    let (p, q) = (&found.points[0], &found.points[1]);
    assert!(p[2].abs() < 1e-12 && q[2].abs() < 1e-12);
    assert!((0..3).all(|k| (p[k] + q[k]).abs() < 1e-10));
}

#[test]
fn empty_real_curve_has_no_witness_points() {
    let found = witness_points(&plane("x^2 + y^2 + 1"), &square_box(-2.0, 2.0, 2), 1, &cfg()).unwrap();
    assert!(found.points.is_empty());
}

#[test]
fn fencing_on_crossing_lines() {
    let r = 0.1;
    let found = fencing_points(&plane("x^2 - y^2"), &[0.0, 0.0], r, 2, &cfg()).unwrap();
    assert_eq!(found.points.len(), 4);
    let h = r / 2f64.sqrt();
    for tp in &found.points {
        assert!((tp.q[0].abs() - h).abs() < 1e-10 && (tp.q[1].abs() - h).abs() < 1e-10);
        assert!((crate::numeric::norm(&tp.q) - r).abs() < 1e-8);
        assert!(crate::numeric::dot(&tp.v, &tp.q) > 0.0);
        assert_eq!(tp.c, 0);
    }
}

#[test]
fn fencing_on_sextic() {
    let sys = plane("6*x*y^7 + 85*x^4*y^3 - 60*x^2*y^5 - 32*x^2*y^3 + 14*x^4 - 35*y^4");
    let found = fencing_points(&sys, &[0.0, 0.0], 0.2, 2, &cfg()).unwrap();
    assert_eq!(found.points.len(), 4);
}

#[test]
fn fencing_misses_curve() {
    let found = fencing_points(&plane("x^2 + y^2 - 1"), &[0.0, 0.0], 0.1, 2, &cfg()).unwrap();
    assert!(found.points.is_empty());
}

#[test]
fn circle_boundary_points() {
    let sys = plane("x^2 + y^2 - 1");
    let b = BoundingBox::new(vec![0.0, -2.0], vec![2.0, 2.0]).unwrap();
    let found = boundary_points(&sys, &b, 1, &cfg()).unwrap();
    assert_eq!(found.points.len(), 2);
    for tp in &found.points {
        assert!(tp.q[0].abs() < 1e-15 && (tp.q[1].abs() - 1.0).abs() < 1e-12);
        assert!(tp.v[0] > 0.0);
    }
    assert!(boundary_points(&sys, &square_box(-2.0, 2.0, 2), 1, &cfg()).unwrap().points.is_empty());
}

#[test]
fn quintic_corner_points_deduplicated() {
    let sys = plane("x^5 - y^2");
    let found = boundary_points(&sys, &square_box(-1.0, 1.0, 2), 1, &cfg()).unwrap();
    assert_eq!(found.points.len(), 2);
    assert_eq!(found.points[0].q, vec![1.0, -1.0]);
    assert_eq!(found.points[1].q, vec![1.0, 1.0]);
    for tp in &found.points {
        // Inward at the corner (1, +-1): both components point into the box.
        assert!(tp.v[0] < 0.0);
        assert!(tp.v[1] * tp.q[1] < 0.0);
    }
}
