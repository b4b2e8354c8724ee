//! Closest-point search in lattices of Voronoi's first kind.
//!
//! Given an obtuse superbasis (or just its Selling matrix), [`decoder`]
//! finds a closest lattice point by at most `n` relevant-vector steps, each
//! computed exactly as an s-t minimum cut in [`flow`]. [`oracle`] holds the
//! exhaustive references used in testing, [`generator`] builds random and
//! named lattices, and [`verify`]/[`bench`] package the cross-checks and the
//! scaling measurement used by the CLI.
//!
//! With the default `parallel` feature, batch work runs on rayon; disable it
//! for a purely sequential build.

pub mod bench;
pub mod decoder;
pub mod flow;
pub mod format;
pub mod generator;
pub mod lattice;
pub mod oracle;
pub mod par;
pub mod verify;

pub use decoder::{closest_point, closest_point_with, decode_batch, DecodeError, DecodeResult, Target};
pub use flow::{BinaryQuadraticForm, CutResult, FlowNetwork};
pub use format::LatticeFile;
pub use lattice::{
    CoefficientVector, ExtendedCoordinates, Lattice, LatticeError, ObtuseSuperbasis,
    SellingMatrix, Tolerance,
};
pub use par::Execution;
