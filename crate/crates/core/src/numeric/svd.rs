//! One-sided (Hestenes) Jacobi SVD for the small dense matrices met while tracing.

use nalgebra::{DMatrix, DVector};

const ORTHO_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

/// Thin factorization `A = U diag(s) V^T` with all `n` right singular vectors.
///
/// `singular_values` has one entry per column of `A`, sorted in descending order; when
/// `A` has fewer rows than columns the trailing entries are (numerically) zero and the
/// matching columns of `v` span the null space.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = w.column(p).norm_squared();
                let beta: f64 = w.column(q).norm_squared();
                let gamma: f64 = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut vs = DMatrix::<f64>::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        singular_values.push(s);
        vs.set_column(dst, &v.column(src));
        if s > 0.0 {
            u.set_column(dst, &(w.column(src) / s));
        }
    }
    Svd { u, singular_values, v: vs }
}

impl Svd {
    /// Ratio of largest to smallest singular value (infinite when singular).
    pub fn condition(&self) -> f64 {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        let smin = self.singular_values.last().copied().unwrap_or(0.0);
        if smin == 0.0 {
            f64::INFINITY
        } else {
            smax / smin
        }
    }

    /// Solves `A x = b` for square `A` through the factorization.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.v.ncols();
        let mut x = DVector::<f64>::zeros(n);
        for (k, &s) in self.singular_values.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            let coef = self.u.column(k).dot(b) / s;
            x += self.v.column(k) * coef;
        }
        x
    }

    /// Least-squares solution discarding singular values below `rel * s_max`.
    pub fn solve_truncated(&self, b: &DVector<f64>, rel: f64) -> DVector<f64> {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        let n = self.v.ncols();
        let mut x = DVector::<f64>::zeros(n);
        for (k, &s) in self.singular_values.iter().enumerate() {
            if s <= rel * smax || s == 0.0 {
                continue;
            }
            let coef = self.u.column(k).dot(b) / s;
            x += self.v.column(k) * coef;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_square_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, -2.0, 0.5, 3.0, 1.0, -1.0, 2.0, 5.0]);
        let d = svd(&a);
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(d.singular_values.clone()));
        let back = &d.u * sigma * d.v.transpose();
        assert!((back - &a).abs().max() < 1e-13);
        assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn wide_matrix_has_null_vector() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
        let d = svd(&a);
        assert!((d.singular_values[0] - 2.0).abs() < 1e-15);
        assert!((d.singular_values[1] - 1.0).abs() < 1e-15);
        assert!(d.singular_values[2].abs() < 1e-15);
        let null = d.v.column(2);
        assert!((null[2].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve_square() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![3.0, 5.0]);
        let x = svd(&a).solve(&b);
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }
}
