use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoxError {
    #[error("box bounds have mismatched dimensions ({0} vs {1})")]
    Dimension(usize, usize),
    #[error("box has zero or negative width in coordinate {0}")]
    Degenerate(usize),
    #[error("box bounds must be finite")]
    NonFinite,
}

/// Axis-aligned box `lower <= x <= upper` with positive width in every coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct BoundingBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, BoxError> {
        if lower.len() != upper.len() {
            return Err(BoxError::Dimension(lower.len(), upper.len()));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(BoxError::NonFinite);
        }
        if let Some(k) = lower.iter().zip(&upper).position(|(l, u)| !(u > l)) {
            return Err(BoxError::Degenerate(k));
        }
        Ok(BoundingBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    /// Membership with every face pushed outward by `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| *v >= l - tol && *v <= u + tol)
    }

    /// Componentwise clamp into the box.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.lower).zip(&self.upper).map(|((v, l), u)| v.clamp(*l, *u)).collect()
    }

    /// Shrinks every face inward by `frac` of that coordinate's width.
    pub fn shrink(&self, frac: f64) -> Self {
        let lower = self.lower.iter().zip(&self.upper).map(|(l, u)| l + frac * (u - l)).collect();
        let upper = self.lower.iter().zip(&self.upper).map(|(l, u)| u - frac * (u - l)).collect();
        BoundingBox::new(lower, upper).expect("shrink keeps a valid box")
    }

    /// Distance from `x` (assumed inside) to the nearest face.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .map(|((v, l), u)| (v - l).abs().min((u - v).abs()))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| (0..n).map(|k| if mask >> k & 1 == 1 { self.upper[k] } else { self.lower[k] }).collect())
            .collect()
    }

    /// Parameter `t` in `[0, 1]` where the segment `a -> b` first leaves the box, if it does.
    pub fn exit_parameter(&self, a: &[f64], b: &[f64]) -> Option<f64> {
        if self.contains(b, 0.0) {
            return None;
        }
        let mut t_exit = 1.0f64;
        for k in 0..self.dim() {
            let d = b[k] - a[k];
            if b[k] > self.upper[k] && d > 0.0 {
                t_exit = t_exit.min((self.upper[k] - a[k]) / d);
            }
            if b[k] < self.lower[k] && d < 0.0 {
                t_exit = t_exit.min((self.lower[k] - a[k]) / d);
            }
        }
        Some(t_exit.clamp(0.0, 1.0))
    }
}

impl TryFrom<Vec<[f64; 2]>> for BoundingBox {
    type Error = BoxError;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self, BoxError> {
        BoundingBox::new(v.iter().map(|p| p[0]).collect(), v.iter().map(|p| p[1]).collect())
    }
}

impl From<BoundingBox> for Vec<[f64; 2]> {
    fn from(b: BoundingBox) -> Self {
        b.lower.iter().zip(&b.upper).map(|(l, u)| [*l, *u]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate() {
        assert_eq!(BoundingBox::new(vec![0.0, 1.0], vec![1.0, 1.0]), Err(BoxError::Degenerate(1)));
        assert_eq!(BoundingBox::new(vec![0.0], vec![1.0, 1.0]), Err(BoxError::Dimension(1, 2)));
    }

    #[test]
    fn exit_parameter_hits_face() {
        let b = BoundingBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let t = b.exit_parameter(&[0.5, 0.0], &[1.5, 0.0]).unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        assert!(b.exit_parameter(&[0.0, 0.0], &[0.5, 0.5]).is_none());
    }

    #[test]
    fn serde_as_pairs() {
        let b: BoundingBox = serde_json::from_str("[[-3,3],[-4,2]]").unwrap();
        assert_eq!(b.lower(), &[-3.0, -4.0]);
        assert!(serde_json::from_str::<BoundingBox>("[[1,1]]").is_err());
    }
}
