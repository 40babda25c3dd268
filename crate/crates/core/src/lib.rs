//! Branched transportation on polyhedral 1-currents.
//!
//! The crate evaluates α-masses and general H-masses of finite segment
//! networks, builds the standard constructions used to compare traffic paths
//! (cones over atomic measures, dyadic grids, slices by sup-norm spheres,
//! good decompositions into weighted paths, grid-based cheap connections and
//! a simplicial flat norm), computes optimal traffic paths exactly on small
//! instances, and runs experiments on the stability of optimal networks.
//!
//! Start with [`currents::PolyhedralCurrent`] and [`measures::CostSpec`];
//! [`solver::solve`] computes `W^α` on small instances and [`lab`] hosts the
//! experiment drivers behind the `branchpath` binary.

pub mod connector;
pub mod currents;
pub mod decomposition;
pub mod error;
pub mod flatnorm;
pub mod geometry;
pub mod lab;
pub mod measures;
pub mod numeric;
pub mod solver;

pub use currents::{Edge, PolyhedralCurrent};
pub use error::{Error, Result};
pub use geometry::{Cube, Grid, Point};
pub use measures::{CostSpec, SignedAtomicMeasure};
