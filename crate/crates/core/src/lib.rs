//! Random self-similar dendrites generated by multiplicative cascades.
//!
//! A [`CascadeHandle`] is a lazy oracle for the weights `w(i)` of a cascade
//! indexed by finite words over `{1, 2, 3}`. On top of it the crate builds
//! the approximating graph trees of the dendrite, their resistance metric,
//! the self-similar measure, dimension estimators and percolation statistics.

pub mod addr;
pub mod cascade;
pub mod dendrite;
pub mod error;
pub mod harness;
pub mod law;
pub mod measure;
pub mod perc;
pub mod resist;
pub mod rng;
pub mod stats;

pub use addr::{Address, CutSet, Symbol};
pub use cascade::{Budget, CascadeHandle, MartingaleValue};
pub use error::{Error, Result};
pub use dendrite::{DendriteEdge, DendriteGraph, VertexId, VertexRole};
pub use law::ScalingLaw;
