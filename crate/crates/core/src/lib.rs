//! Polygonal approximation of real algebraic curves given implicitly by `n - 1`
//! polynomials in `n` variables, with singular points bypassed by small fencing spheres.

pub mod cluster;
pub mod driver;
pub mod io;
pub mod keypoints;
pub mod numeric;
pub mod poly;
pub mod solver;
pub mod tracer;
