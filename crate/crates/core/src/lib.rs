//! Joint transmit-waveform and receive-filter design for an ISAC base
//! station facing interrupted-sampling repeater jamming, together with the
//! echo simulation and CFAR detection chain used to evaluate the designs.

// `!(x > 0.0)` is how the validators reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comms;
pub mod config;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod radar;
pub mod rng;
pub mod schemes;
pub mod signal;

pub use error::{Error, Result};
