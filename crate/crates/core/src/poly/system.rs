use nalgebra::DMatrix;
use thiserror::Error;

use super::{parse_polynomial, rational_from_f64, CompiledPoly, ParseError, Polynomial, Rational};
use crate::keypoints::BoundingBox;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("a curve in {nvars} variables needs {} polynomials, got {got}", nvars - 1)]
    WrongCount { nvars: usize, got: usize },
    #[error("at least two variables are required")]
    TooFewVariables,
    #[error("polynomial {index} has {got} variables, expected {nvars}")]
    VariableMismatch { index: usize, nvars: usize, got: usize },
    #[error("box dimension {got} does not match {nvars} variables")]
    BoxDimension { nvars: usize, got: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// The `n - 1` polynomials cutting out a curve in `n` variables, with their Jacobian.
///
/// Exact coefficients are kept for symbolic work (minors, exact residuals); float
/// snapshots back every numeric evaluation.
#[derive(Clone, Debug)]
pub struct CurveSystem {
    nvars: usize,
    polys: Vec<Polynomial>,
    jac: Vec<Vec<Polynomial>>,
    value_scale: Vec<f64>,
    fpolys: Vec<CompiledPoly>,
    fjac: Vec<Vec<CompiledPoly>>,
}

impl CurveSystem {
    pub fn new(polys: Vec<Polynomial>) -> Result<Self, SystemError> {
        let nvars = polys.first().map(|p| p.nvars()).unwrap_or(0);
        if polys.is_empty() {
            return Err(SystemError::TooFewVariables);
        }
        for (index, p) in polys.iter().enumerate() {
            if p.nvars() != nvars {
                return Err(SystemError::VariableMismatch { index, nvars, got: p.nvars() });
            }
        }
        if nvars < 2 {
            return Err(SystemError::TooFewVariables);
        }
        if polys.len() != nvars - 1 {
            return Err(SystemError::WrongCount { nvars, got: polys.len() });
        }
        let value_scale = vec![1.0; polys.len()];
        Ok(Self::assemble(polys, value_scale))
    }

    /// Parses each expression over `vars` and builds the system.
    pub fn parse(exprs: &[impl AsRef<str>], vars: &[&str]) -> Result<Self, SystemError> {
        if vars.len() < 2 {
            return Err(SystemError::TooFewVariables);
        }
        if exprs.len() != vars.len() - 1 {
            return Err(SystemError::WrongCount { nvars: vars.len(), got: exprs.len() });
        }
        let polys = exprs
            .iter()
            .map(|e| parse_polynomial(e.as_ref(), vars))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(polys)
    }

    fn assemble(polys: Vec<Polynomial>, value_scale: Vec<f64>) -> Self {
        let nvars = polys[0].nvars();
        let jac: Vec<Vec<Polynomial>> =
            polys.iter().map(|p| (0..nvars).map(|j| p.differentiate(j)).collect()).collect();
        let fpolys = polys.iter().map(CompiledPoly::new).collect();
        let fjac = jac.iter().map(|row| row.iter().map(CompiledPoly::new).collect()).collect();
        CurveSystem { nvars, polys, jac, value_scale, fpolys, fjac }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn jac(&self) -> &[Vec<Polynomial>] {
        &self.jac
    }

    /// Factor by which each polynomial's values were multiplied relative to the input
    /// (1 unless the system came out of [`rescale_system`]).
    pub fn value_scale(&self) -> &[f64] {
        &self.value_scale
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.fpolys.iter().map(|p| p.eval(x)).collect()
    }

    pub fn residual_inf(&self, x: &[f64]) -> f64 {
        self.fpolys.iter().map(|p| p.eval(x).abs()).fold(0.0, f64::max)
    }

    /// Numeric Jacobian at `x`, shape `(n - 1) x n`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.polys.len();
        DMatrix::from_fn(m, self.nvars, |i, j| self.fjac[i][j].eval(x))
    }

    /// Values in the units of the original input (undoes coefficient rescaling).
    pub fn original_values(&self, x: &[f64]) -> Vec<f64> {
        self.eval(x).iter().zip(&self.value_scale).map(|(v, s)| v / s).collect()
    }
}

fn determinant(m: &[Vec<Polynomial>]) -> Polynomial {
    let k = m.len();
    let nvars = m[0][0].nvars();
    match k {
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        _ => {
            let mut acc = Polynomial::zero(nvars);
            for col in 0..k {
                if m[0][col].is_zero() {
                    continue;
                }
                let sub: Vec<Vec<Polynomial>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, p)| p.clone()).collect())
                    .collect();
                let term = &m[0][col] * &determinant(&sub);
                acc = if col % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
    }
}

/// `Δ_i` = determinant of the Jacobian with column `i` removed, for `i = 0..n`.
pub fn minor_determinants(sys: &CurveSystem) -> Vec<Polynomial> {
    let n = sys.nvars();
    (0..n)
        .map(|skip| {
            let minor: Vec<Vec<Polynomial>> = sys
                .jac()
                .iter()
                .map(|row| row.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, p)| p.clone()).collect())
                .collect();
            determinant(&minor)
        })
        .collect()
}

/// Affine frame change `x = center + radius * u` taking the unit ball onto the ball
/// circumscribing the user's box.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        AffineMap { center: vec![0.0; n], radius: 1.0 }
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(xi, c)| (xi - c) / self.radius).collect()
    }

    pub fn to_original(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.center).map(|(ui, c)| c + self.radius * ui).collect()
    }

    pub fn box_to_unit(&self, b: &BoundingBox) -> BoundingBox {
        BoundingBox::new(self.to_unit(b.lower()), self.to_unit(b.upper())).expect("affine image of a box")
    }

    pub fn box_to_original(&self, b: &BoundingBox) -> BoundingBox {
        BoundingBox::new(self.to_original(b.lower()), self.to_original(b.upper())).expect("affine image of a box")
    }
}

const GRID_PER_AXIS: usize = 11;

fn unit_ball_grid(n: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..GRID_PER_AXIS).map(|k| -1.0 + 2.0 * k as f64 / (GRID_PER_AXIS - 1) as f64).collect();
    let total = GRID_PER_AXIS.pow(n as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut rest = idx;
        let z: Vec<f64> = (0..n)
            .map(|_| {
                let v = axis[rest % GRID_PER_AXIS];
                rest /= GRID_PER_AXIS;
                v
            })
            .collect();
        if z.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12 {
            out.push(z);
        }
    }
    out
}

/// Sampled estimate of `max_{z in D, j} ||grad J_ij(z)||` for one polynomial.
fn second_derivative_bound(p: &Polynomial, grid: &[Vec<f64>]) -> f64 {
    let n = p.nvars();
    let hess: Vec<Vec<CompiledPoly>> = (0..n)
        .map(|j| {
            let dj = p.differentiate(j);
            (0..n).map(|k| CompiledPoly::new(&dj.differentiate(k))).collect()
        })
        .collect();
    let mut best = 0.0f64;
    for z in grid {
        for row in &hess {
            let norm = row.iter().map(|h| h.eval(z).powi(2)).sum::<f64>().sqrt();
            best = best.max(norm);
        }
    }
    best
}

fn gradient_bound(p: &Polynomial, grid: &[Vec<f64>]) -> f64 {
    let grads: Vec<CompiledPoly> = (0..p.nvars()).map(|j| CompiledPoly::new(&p.differentiate(j))).collect();
    grid.iter()
        .flat_map(|z| grads.iter().map(move |g| g.eval(z).abs()))
        .fold(0.0, f64::max)
}

/// Moves the system into the unit frame of `bounds` and normalizes each polynomial so
/// the sampled second-derivative bound is 1.
///
/// The bound is estimated on an 11-per-axis grid clipped to the unit ball; it is an
/// estimate, not a certificate. Polynomials with vanishing second derivatives are
/// normalized by their largest gradient entry instead.
pub fn rescale_system(sys: &CurveSystem, bounds: &BoundingBox) -> Result<(CurveSystem, AffineMap), SystemError> {
    let n = sys.nvars();
    if bounds.dim() != n {
        return Err(SystemError::BoxDimension { nvars: n, got: bounds.dim() });
    }
    let center: Vec<f64> = bounds.lower().iter().zip(bounds.upper()).map(|(l, u)| 0.5 * (l + u)).collect();
    let radius = bounds
        .lower()
        .iter()
        .zip(bounds.upper())
        .map(|(l, u)| (0.5 * (u - l)).powi(2))
        .sum::<f64>()
        .sqrt();
    let map = AffineMap { center: center.clone(), radius };

    let shift: Vec<Rational> = center.iter().map(|&c| rational_from_f64(c)).collect();
    let scale: Vec<Rational> = vec![rational_from_f64(radius); n];
    let grid = unit_ball_grid(n);

    let mut polys = Vec::with_capacity(sys.polys().len());
    let mut value_scale = Vec::with_capacity(sys.polys().len());
    for (p, prev) in sys.polys().iter().zip(sys.value_scale()) {
        let moved = p.affine_substitute(&shift, &scale);
        let mut k = second_derivative_bound(&moved, &grid);
        if k == 0.0 {
            k = gradient_bound(&moved, &grid);
        }
        let factor = if k > 0.0 && k.is_finite() { 1.0 / k } else { 1.0 };
        polys.push(moved.scale(&rational_from_f64(factor)));
        value_scale.push(prev * factor);
    }
    Ok((CurveSystem::assemble(polys, value_scale), map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(exprs: &[&str], vars: &[&str]) -> CurveSystem {
        CurveSystem::parse(exprs, vars).unwrap()
    }

    #[test]
    fn plane_minors() {
        let s = sys(&["x^2 - y^2"], &["x", "y"]);
        let d = minor_determinants(&s);
        assert_eq!(d[0], parse_polynomial("-2*y", &["x", "y"]).unwrap());
        assert_eq!(d[1], parse_polynomial("2*x", &["x", "y"]).unwrap());
    }

    #[test]
    fn space_minors() {
        let v = ["x", "y", "z"];
        let s = sys(&["x^2 + y^2 + z^2 - 1", "z"], &v);
        let d = minor_determinants(&s);
        // plain (unsigned) minors of [[2x,2y,2z],[0,0,1]]
        assert_eq!(d[0], parse_polynomial("2*y", &v).unwrap());
        assert_eq!(d[1], parse_polynomial("2*x", &v).unwrap());
        assert!(d[2].is_zero());
    }

    #[test]
    fn zero_row_gives_zero_minors() {
        let v = ["x", "y", "z"];
        let s = sys(&["x^2 + y^2 + z^2 - 1", "0"], &v);
        assert!(minor_determinants(&s).iter().all(|p| p.is_zero()));
    }

    #[test]
    fn count_validation() {
        assert!(matches!(
            CurveSystem::parse(&["x", "y"], &["x", "y"]),
            Err(SystemError::WrongCount { nvars: 2, got: 2 })
        ));
        assert!(matches!(CurveSystem::parse(&[] as &[&str], &["x"]), Err(SystemError::TooFewVariables)));
    }

    #[test]
    fn rescale_unit_square() {
        let s = sys(&["x^2 + y^2 - 1"], &["x", "y"]);
        let b = BoundingBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let (r, map) = rescale_system(&s, &b).unwrap();
        assert!((map.radius - 2f64.sqrt()).abs() < 1e-15);
        let x = [0.3, -0.7];
        let back = map.to_original(&map.to_unit(&x));
        assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-12));
        // curve is preserved: (1, 0) maps onto the rescaled zero set
        let u = map.to_unit(&[1.0, 0.0]);
        assert!(r.eval(&u)[0].abs() < 1e-14);
    }

    #[test]
    fn rescale_sextic_box_into_unit_ball() {
        let s = sys(&["6*x*y^7+85*x^4*y^3-60*x^2*y^5-32*x^2*y^3+14*x^4-35*y^4"], &["x", "y"]);
        let b = BoundingBox::new(vec![-3.0, -4.0], vec![3.0, 2.0]).unwrap();
        let (_, map) = rescale_system(&s, &b).unwrap();
        for corner in b.corners() {
            let u = map.to_unit(&corner);
            assert!(u.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn already_unit_scale_factor() {
        // (x^2 + y^2)/2 - 1/4 has constant second derivatives of norm 1 in the unit frame
        // of a box whose circumscribed radius is 1.
        let h = 0.5f64.sqrt();
        let s = sys(&["1/2*x^2 + 1/2*y^2 - 1/4"], &["x", "y"]);
        let b = BoundingBox::new(vec![-h, -h], vec![h, h]).unwrap();
        let (r, _) = rescale_system(&s, &b).unwrap();
        let f = r.value_scale()[0];
        assert!((0.5..=1.0).contains(&f), "factor {f}");
    }
}
