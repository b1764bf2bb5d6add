//! Simulation and verification of set-indexed partial-sum processes
//! S_n(A) = sum_i lambda(nA ∩ R_i) X_i of stationary random fields on
//! {1..n}^d, under standard normalization n^(d/2), norming constants b_n
//! and self-normalization U_n.

pub mod diagnostics;
pub mod entropy;
pub mod error;
pub mod field;
pub mod lattice;
pub mod process;
pub mod regions;
pub mod rng;
pub mod scalar;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use error::{Error, Result};
pub use field::{FieldSample, Law, TruncationPiece};
pub use lattice::Lattice;
pub use process::{Normalization, ProcessEvaluation};
pub use regions::{CellUnion, ClassSpec, CounterexampleParams, Region, WeightGrid};
pub use scalar::Scalar;

pub type Region64 = Region<f64>;
pub type Region32 = Region<f32>;
pub type Field64 = FieldSample<f64>;
pub type Field32 = FieldSample<f32>;
pub type WeightGrid64 = WeightGrid<f64>;
pub type WeightGrid32 = WeightGrid<f32>;
pub type Evaluation64 = ProcessEvaluation<f64>;
pub type Evaluation32 = ProcessEvaluation<f32>;
