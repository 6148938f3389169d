//! Bit-accurate simulator for a mixed SRAM/eDRAM on-chip AI buffer.
//!
//! INT8 words are stored with the sign bit in a 6T SRAM cell and the seven
//! remaining bits in asymmetric 2T eDRAM gain cells, after a one-enhancement
//! encoding that makes near-zero data 1-dominant. Stored ones never decay;
//! stored zeros flip to one after a random, V_REF-dependent crossing time.
//!
//! - [`codec`]: encoder/decoder and bit statistics.
//! - [`retention`]: calibrated flip-probability model.
//! - [`array`]: mixed-cell array state machine with staggered refresh.
//! - [`energy`]: static, dynamic, refresh and area accounting.
//! - [`dataflow`]: systolic-array cycle and buffer-access counts.
//! - [`fault`]: retention-error injection into tensors and a tiny classifier.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod cli;
pub mod codec;
pub mod dataflow;
pub mod energy;
mod error;
pub mod fault;
pub mod retention;
pub mod tensor;
pub mod units;

pub use error::{Error, Result};
