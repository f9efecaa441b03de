//! Deformed-commutator phase signatures of pulsed optomechanics.
//!
//! The numerics are generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases below are what the CLI uses.

// `!(x > 0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod error;
pub mod lattice;
pub mod magnus;
pub mod matrix;
pub mod oracle;
pub mod phase;
pub mod pulsed;
pub mod quadrature;
pub mod real;
pub mod sum;

pub use error::{Error, Result};
pub use lattice::{ChainSpec, MomentumSample, NormalModes};
pub use magnus::{CouplingFunction, PermutationTable, QuadraturePlan};
pub use matrix::Matrix;
pub use phase::{Method, PhaseResult};
pub use pulsed::{IntervalSum, PulseSchedule, ScanResult};
pub use real::Real;

pub type ChainSpecF64 = ChainSpec<f64>;
pub type NormalModesF64 = NormalModes<f64>;
pub type MomentumSampleF64 = MomentumSample<f64>;
pub type MatrixF64 = Matrix<f64>;
pub type PulseScheduleF64 = PulseSchedule<f64>;
pub type IntervalSumF64 = IntervalSum<f64>;
pub type PhaseResultF64 = PhaseResult<f64>;
pub type ScanResultF64 = ScanResult<f64>;
pub type CouplingFunctionF64 = CouplingFunction<f64>;
pub type PermutationTableF64 = PermutationTable<f64>;
