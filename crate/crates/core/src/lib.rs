//! Numerical laboratory for volume-preserving partially hyperbolic maps of the 3-torus.

pub mod batch;
pub mod disintegration;
pub mod error;
pub mod foliation;
pub mod linalg;
pub mod maps;
pub mod rng;
pub mod tangent;
pub mod torus;

pub use error::{Error, Result};
pub use linalg::{Mat3, TangentVector};
pub use maps::{Direction, Family, MapFamily};
pub use torus::{circle_dist, reduce, torus_dist, Mat2Z, TorusPoint};
