//! Circle packings on triangulated disks, their holomorphic quadratic
//! differentials, and the discrete minimal surfaces built from them.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the precision used by the command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod differentials;
pub mod geom;
pub mod harmonic;
pub mod invariants;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod minimal;
pub mod moebius;
pub mod packing;
pub mod report;
pub mod scalar;

pub use differentials::{GeneralQd, KoebeQd};
pub use geom::{CVec3, Vec3};
pub use mesh::{build_disk, hex_disk, MedialComplex, MeshError, TriangleComplex, TriangulatedDisk};
pub use moebius::{InfMoebius, MoebiusMap};
pub use packing::{CirclePacking, KoebePair, SolveOptions, SolveReport, SphericalLift};
pub use scalar::{Real, C};

pub type C64 = C<f64>;
pub type C32 = C<f32>;
pub type CirclePacking64 = CirclePacking<f64>;
pub type CirclePacking32 = CirclePacking<f32>;
pub type KoebeQd64 = KoebeQd<f64>;
pub type KoebeQd32 = KoebeQd<f32>;
pub type GeneralQd64 = GeneralQd<f64>;
pub type GeneralQd32 = GeneralQd<f32>;
pub type MoebiusMap64 = MoebiusMap<f64>;
pub type MoebiusMap32 = MoebiusMap<f32>;
