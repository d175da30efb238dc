//! Information-causality toolkit for no-signaling boxes.
//!
//! The crate is split along the lines of the computation:
//!
//! - [`nsbox`]: no-signaling boxes, correlators and validation.
//! - [`rac`]: random-access-code encodings, success probabilities and coding noise.
//! - [`infotheory`]: exact Shannon quantities and binary symmetric channel cascades.
//! - [`ic_bounds`]: information-causality reports and Tsirelson-type inequalities.
//! - [`sdp`]: the Gram-matrix SDP for XOR-type games with a dual certificate.
//! - [`circuit`]: trees of noisy box gates and reliability conditions.
//! - [`cli`]: the `tsirelson-lab` command line.

pub mod circuit;
pub mod cli;
pub mod error;
pub mod ic_bounds;
pub mod infotheory;
pub mod nsbox;
pub mod rac;
pub mod rng;
pub mod sdp;

pub use error::{Error, Result};
