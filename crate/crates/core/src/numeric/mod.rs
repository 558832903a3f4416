//! Numerical building blocks: compensated reductions, adaptive quadrature,
//! gamma functions, finite differences and small least-squares solves.

pub mod fd;
pub mod lsq;
pub mod quad;
pub mod special;
pub mod sum;
