//! Ambient geometry: the hyperbolic half-space closed forms, conformal
//! perturbations, and the validated model façade.

pub mod halfspace;
pub mod integrate;
pub mod model;
pub mod warped;

pub use halfspace::{ChartPoint, FermiPoint, GeodesicEnd, IdealPoint, Isometry, TangentVector};
pub use model::{AmbientModel, ModelKind, ModelSurfaceFamily};
pub use warped::WarpFactor;
