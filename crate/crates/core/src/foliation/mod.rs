pub mod cover;
pub mod holonomy;
pub mod leaf;
pub mod rotation;
pub mod strong;

pub use cover::{density_cover, CoverReport};
pub use holonomy::{holonomy_between, stable_holonomy, HolonomyReport};
pub use leaf::{trace_center_leaf, CenterLeaf, Located, TraceOptions};
pub use rotation::{fixed_leaf_analysis, periodic_leaf, rotation_number, MorseSmaleReport, PeriodicLeaf, RotationNumberResult};
pub use strong::{stable_contraction, trace_strong_curve, InvariantCurve, StableContraction};
