//! Exact intersection theory on smooth complete toric 4-folds.
//!
//! Fans are built from primitive collections or from ray coordinates, and
//! the second Chern character `ch2(T_X)` is evaluated on every
//! torus-invariant surface with exact rational arithmetic.

pub mod atlas;
pub mod chern;
pub mod cli;
pub mod exactlin;
pub mod fan;

pub use atlas::{parse, shipped_database, AtlasDatabase, VarietyRecord};
pub use chern::{classify, Ch2Report, Classification, Intersections};
pub use exactlin::{Int, LatticePoint, Rat};
pub use fan::{build_fan, build_fan_from_rays, Cone, Fan, PrimitiveCollection};
