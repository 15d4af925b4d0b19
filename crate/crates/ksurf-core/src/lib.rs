//! Numerical machinery for surfaces of prescribed extrinsic curvature
//! (k-surfaces) in 3-manifolds of pinched negative curvature.
//!
//! The crate provides:
//!
//! - an ambient layer for the hyperbolic half-space model and certified
//!   conformal perturbations of it (`geometry`);
//! - triangulated immersed disks with fitted fundamental forms, shape
//!   operators and radial graphs over normal fields (`mesh`, `surface`);
//! - the discretized linearized curvature operator with Dirichlet boundary
//!   conditions and its sign certificate (`operator`, `linalg`);
//! - a damped Newton / homotopy continuation solver for lens problems
//!   (`lens`) and a monotone exhaustion solver for asymptotic Plateau
//!   problems over ideal disks (`plateau`);
//! - OBJ/JSON artifact export and a batch validation suite (`io`,
//!   `validate`).

pub mod audit;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lens;
pub mod linalg;
pub mod mesh;
pub mod operator;
pub mod plateau;
pub mod surface;
pub mod validate;
