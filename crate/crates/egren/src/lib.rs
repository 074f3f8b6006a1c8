//! Causal renormalization workbench: distribution kernels, scaling-degree
//! estimation, point and surface extensions, exact Minkowski causal
//! predicates, wavefront-set cone calculus, and Wick combinatorics.

pub mod expr;
pub mod extension;
pub mod fourier;
pub mod job;
pub mod kernel;
pub mod cones;
pub mod lp;
pub mod minkowski;
pub mod multi;
pub mod parallel;
pub mod quad;
pub mod scaling;
pub mod surface;
pub mod testfn;
pub mod wick;
pub mod words;
