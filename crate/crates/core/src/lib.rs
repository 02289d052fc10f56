//! Persistence-landmark embeddings of persistence diagrams, with certified
//! nearest-centroid and linear max-margin classification.
//!
//! The pipeline runs graphs through vertex-function filtrations
//! ([`graphfilt`]), embeds the resulting diagrams against multiscale landmark
//! grids ([`lattice`], [`embedding`]), summarizes class geometry
//! ([`stats`]), and classifies with certificate radii ([`certify`]) or a
//! one-vs-one linear model ([`linear`]). [`audit`] checks the distortion
//! certificates empirically and [`protocol`] wires everything into a
//! stratified cross-validation harness.

// `!(x > 0.0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod certify;
pub mod chi2;
pub mod diagram;
pub mod embedding;
pub mod error;
pub mod graphfilt;
pub mod lattice;
pub mod linear;
pub mod pairs;
pub mod protocol;
pub mod stats;

pub use diagram::{bottleneck, bottleneck_single, DiagramPoint, PersistenceDiagram, Site};
pub use embedding::{embed, EmbeddedVector, ScaleConfig};
pub use error::{PlaceError, Result};
