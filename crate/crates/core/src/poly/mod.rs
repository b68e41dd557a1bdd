//! Sparse multivariate polynomials over exact rationals or binary floats.

mod parse;
mod system;

pub use parse::{parse_polynomial, ParseError};
pub use system::{minor_determinants, rescale_system, AffineMap, CurveSystem, SystemError};

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact coefficient type used for parsed input.
pub type Rational = BigRational;

/// Exponent vector of a single term.
pub type Monomial = Vec<u32>;

/// Coefficient ring for [`Polynomial`].
pub trait Coefficient:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_i64(v: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Coefficient for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Coefficient for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Converts a finite float to the exact rational it denotes.
pub fn rational_from_f64(v: f64) -> Rational {
    BigRational::from_float(v).expect("finite float")
}

/// Sparse polynomial in `nvars` variables. Terms with zero coefficient are never stored.
#[derive(Clone, PartialEq)]
pub struct Polynomial<C: Coefficient = Rational> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coefficient> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The polynomial `x_var`.
    pub fn variable(nvars: usize, var: usize) -> Self {
        assert!(var < nvars, "variable index out of range");
        let mut exps = vec![0; nvars];
        exps[var] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(exps, C::one());
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, summing repeats.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exps: &[u32]) -> C {
        self.terms.get(exps).cloned().unwrap_or_else(C::zero)
    }

    /// Adds `c * x^exps` in place.
    pub fn add_term(&mut self, exps: Monomial, c: C) {
        assert_eq!(exps.len(), self.nvars, "exponent vector length mismatch");
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&exps);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m[var]).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|(m, v)| (m.clone(), v.clone() * c.clone())))
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::constant(self.nvars, C::one());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Power-rule derivative with respect to variable `var`.
    pub fn differentiate(&self, var: usize) -> Self {
        assert!(var < self.nvars, "variable index out of range");
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let k = m[var];
            if k == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm[var] = k - 1;
            out.add_term(dm, c.clone() * C::from_i64(k as i64));
        }
        out
    }

    /// Re-embeds the polynomial in `nvars` variables (must not drop used variables).
    pub fn with_nvars(&self, nvars: usize) -> Self {
        let terms = self.terms.iter().map(|(m, c)| {
            let mut e = m.clone();
            if nvars >= self.nvars {
                e.resize(nvars, 0);
            } else {
                assert!(e[nvars..].iter().all(|&k| k == 0), "cannot drop a used variable");
                e.truncate(nvars);
            }
            (e, c.clone())
        });
        Self::from_terms(nvars, terms)
    }

    /// Substitutes `x_var := value`, returning a polynomial in the remaining `nvars - 1` variables.
    pub fn fix_variable(&self, var: usize, value: &C) -> Self {
        assert!(var < self.nvars);
        let mut out = Self::zero(self.nvars - 1);
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            for _ in 0..m[var] {
                coeff = coeff * value.clone();
            }
            let mut e = m.clone();
            e.remove(var);
            out.add_term(e, coeff);
        }
        out
    }

    /// Affine change of variables `x_j := shift_j + scale_j * x_j`.
    pub fn affine_substitute(&self, shift: &[C], scale: &[C]) -> Self {
        assert_eq!(shift.len(), self.nvars);
        assert_eq!(scale.len(), self.nvars);
        let n = self.nvars;
        let images: Vec<Self> = (0..n)
            .map(|j| {
                let mut p = Self::constant(n, shift[j].clone());
                let mut e = vec![0; n];
                e[j] = 1;
                p.add_term(e, scale[j].clone());
                p
            })
            .collect();
        let mut powers: Vec<Vec<Self>> = images.iter().map(|img| vec![Self::constant(n, C::one()), img.clone()]).collect();
        let mut out = Self::zero(n);
        for (m, c) in &self.terms {
            let mut term = Self::constant(n, c.clone());
            for (j, &k) in m.iter().enumerate() {
                while powers[j].len() <= k as usize {
                    let next = powers[j].last().unwrap() * &images[j];
                    powers[j].push(next);
                }
                if k > 0 {
                    term = &term * &powers[j][k as usize];
                }
            }
            out = &out + &term;
        }
        out
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        Polynomial::from_terms(self.nvars, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    /// Float snapshot of the coefficients.
    pub fn to_f64(&self) -> Polynomial<f64> {
        self.map_coefficients(|c| c.to_f64())
    }

    /// Evaluates at a real point with Neumaier-compensated term summation.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars, "point dimension mismatch");
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (m, c) in &self.terms {
            let mut t = c.to_f64();
            for (xi, &k) in x.iter().zip(m.iter()) {
                if k > 0 {
                    t *= xi.powi(k as i32);
                }
            }
            let s = sum + t;
            if sum.abs() >= t.abs() {
                comp += (sum - s) + t;
            } else {
                comp += (t - s) + sum;
            }
            sum = s;
        }
        sum + comp
    }

    /// Renders the polynomial using `names`; the output re-parses to the same term map.
    pub fn render(&self, names: &[&str]) -> String
    where
        C: fmt::Display,
    {
        assert_eq!(names.len(), self.nvars);
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                out.push_str(" + ");
            }
            out.push('(');
            out.push_str(&c.to_string());
            out.push(')');
            for (name, &k) in names.iter().zip(m.iter()) {
                match k {
                    0 => {}
                    1 => {
                        out.push('*');
                        out.push_str(name);
                    }
                    _ => {
                        out.push('*');
                        out.push_str(name);
                        out.push('^');
                        out.push_str(&k.to_string());
                    }
                }
            }
        }
        out
    }
}

impl Polynomial<Rational> {
    /// The same polynomial divided by its largest coefficient magnitude (zero stays zero).
    pub fn normalized(&self) -> Self {
        let max = self.terms.values().map(|c| c.abs()).max();
        match max {
            Some(m) if !m.is_zero() => self.scale(&m.recip()),
            _ => self.clone(),
        }
    }

    /// Exact evaluation at a rational point.
    pub fn evaluate_exact(&self, x: &[Rational]) -> Rational {
        assert_eq!(x.len(), self.nvars);
        let maxdeg: Vec<u32> = (0..self.nvars).map(|j| self.degree_in(j)).collect();
        let powers: Vec<Vec<Rational>> = x
            .iter()
            .zip(&maxdeg)
            .map(|(xi, &d)| {
                let mut v = Vec::with_capacity(d as usize + 1);
                v.push(Rational::one());
                for k in 1..=d as usize {
                    let next = &v[k - 1] * xi;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (j, &k) in m.iter().enumerate() {
                if k > 0 {
                    t *= &powers[j][k as usize];
                }
            }
            acc += t;
        }
        acc
    }
}

impl<C: Coefficient> fmt::Debug for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Polynomial").field("nvars", &self.nvars).field("terms", &self.terms).finish()
    }
}

impl<C: Coefficient> Add for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: &Polynomial<C>) -> Polynomial<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<C: Coefficient> Sub for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, rhs: &Polynomial<C>) -> Polynomial<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<C: Coefficient> Mul for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, rhs: &Polynomial<C>) -> Polynomial<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                out.add_term(m, ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<C: Coefficient> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        self.map_coefficients(|c| -c.clone())
    }
}

/// Float polynomial laid out for fast repeated evaluation over real or complex points.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    nvars: usize,
    terms: Vec<(Monomial, f64)>,
    max_deg: Vec<u32>,
}

impl CompiledPoly {
    pub fn new<C: Coefficient>(p: &Polynomial<C>) -> Self {
        let terms: Vec<(Monomial, f64)> = p.terms().map(|(m, c)| (m.clone(), c.to_f64())).collect();
        let max_deg = (0..p.nvars()).map(|j| p.degree_in(j)).collect();
        CompiledPoly { nvars: p.nvars(), terms, max_deg }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (m, c) in &self.terms {
            let mut t = *c;
            for (xi, &k) in x.iter().zip(m) {
                if k > 0 {
                    t *= xi.powi(k as i32);
                }
            }
            let s = sum + t;
            if sum.abs() >= t.abs() {
                comp += (sum - s) + t;
            } else {
                comp += (t - s) + sum;
            }
            sum = s;
        }
        sum + comp
    }

    pub fn eval_complex(&self, x: &[Complex64]) -> Complex64 {
        let powers: Vec<Vec<Complex64>> = x
            .iter()
            .zip(&self.max_deg)
            .map(|(xi, &d)| {
                let mut v = Vec::with_capacity(d as usize + 1);
                v.push(Complex64::new(1.0, 0.0));
                for k in 1..=d as usize {
                    let next = v[k - 1] * xi;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut t = Complex64::new(*c, 0.0);
            for (j, &k) in m.iter().enumerate() {
                if k > 0 {
                    t *= powers[j][k as usize];
                }
            }
            acc += t;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn differentiate_power_rule() {
        let p = parse_polynomial("x^2 - y^2", &["x", "y"]).unwrap();
        let dx = p.differentiate(0);
        let dy = p.differentiate(1);
        assert_eq!(dx, parse_polynomial("2*x", &["x", "y"]).unwrap());
        assert_eq!(dy, parse_polynomial("-2*y", &["x", "y"]).unwrap());
        let five = parse_polynomial("5", &["x", "y"]).unwrap();
        assert!(five.differentiate(0).is_zero());
    }

    #[test]
    fn evaluate_examples() {
        let p = parse_polynomial("x^2 - y^2", &["x", "y"]).unwrap();
        assert_eq!(p.evaluate(&[1.0, 1.0]), 0.0);
        assert_eq!(p.evaluate(&[2.0, 0.0]), 4.0);
        let c = parse_polynomial("x^5 - y^2", &["x", "y"]).unwrap();
        assert!((c.evaluate(&[0.09, 0.0]) - 5.9049e-6).abs() < 1e-18);
    }

    #[test]
    fn fix_and_substitute() {
        let p = parse_polynomial("x^2 + y^2 - 1", &["x", "y"]).unwrap();
        let face = p.fix_variable(0, &Rational::zero());
        assert_eq!(face, parse_polynomial("y^2 - 1", &["y"]).unwrap());
        // x := 1 + 2x, y := y
        let s = p.affine_substitute(&[Rational::one(), Rational::zero()], &[q(2, 1), Rational::one()]);
        assert_eq!(s, parse_polynomial("4*x^2 + 4*x + y^2", &["x", "y"]).unwrap());
    }

    #[test]
    fn exact_evaluation() {
        let p = parse_polynomial("y^2 - (-x^2+x)^3", &["x", "y"]).unwrap();
        assert_eq!(p.evaluate_exact(&[q(1, 2), Rational::zero()]), q(-1, 64));
    }

    #[test]
    fn compiled_matches_direct() {
        let p = parse_polynomial("3*x^3*y - 2*y^2 + 7/2", &["x", "y"]).unwrap();
        let cp = CompiledPoly::new(&p);
        let x = [0.3, -1.7];
        assert!((cp.eval(&x) - p.evaluate(&x)).abs() < 1e-14);
        let z = cp.eval_complex(&[Complex64::new(0.3, 0.0), Complex64::new(-1.7, 0.0)]);
        assert!((z.re - p.evaluate(&x)).abs() < 1e-13 && z.im.abs() < 1e-15);
    }

    #[test]
    fn with_nvars_embeds() {
        let p = parse_polynomial("x*y + 1", &["x", "y"]).unwrap();
        let e = p.with_nvars(4);
        assert_eq!(e.nvars(), 4);
        assert_eq!(e.evaluate(&[2.0, 3.0, 9.0, 9.0]), 7.0);
        assert_eq!(e.with_nvars(2), p);
    }
}
