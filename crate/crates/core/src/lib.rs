//! Cloud-RAN fronthaul planning and a parallel turbo-coding engine.
//!
//! The numeric core is generic over [`scalar::Scalar`] (capacity and budget
//! math) and [`scalar::LlrScalar`] (soft decoding); the aliases below pick
//! the usual concrete types.

pub mod codec;
pub mod fronthaul;
pub mod metrics;
pub mod pipeline;
pub mod scalar;
pub mod scheduler;
pub mod workload;

use num_rational::Rational64;

/// Soft value type used by the benchmark pipeline.
pub type Llr = f32;

pub type CellConfigF64 = fronthaul::CellConfig<f64>;
pub type CellConfigF32 = fronthaul::CellConfig<f32>;
/// Exact capacity arithmetic.
pub type ExactCellConfig = fronthaul::CellConfig<Rational64>;
pub type LinkBudgetF64 = fronthaul::LinkBudget<f64>;
pub type ExactLinkBudget = fronthaul::LinkBudget<Rational64>;
pub type LlrBlockF32 = codec::LlrBlock<Llr>;
pub type DecoderF32 = codec::TurboDecoder<Llr>;
pub type CodingPool = scheduler::Pool<Llr>;
