//! Escape-speed classification, logarithmic tracts, hair tracing and raster
//! topology for a small catalog of transcendental entire functions.

pub mod catalog;
pub mod dynamics;
pub mod hairs;
pub mod numeric;
pub mod raster;
pub mod roots;
pub mod semiconj;
pub mod transform;

pub use catalog::{FunctionSpec, SingularSet};
pub use dynamics::{
    classify_escape, default_ladder, find_attractors, iterate_orbit, modulus_ladder, Attractor,
    EscapeClass, EscapeLabel, ModulusLadder, Orbit,
};
pub use numeric::{LogSafe, Magnitude, LOG_HORIZON};
pub use roots::BoxRegion;
