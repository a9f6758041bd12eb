//! Entropy boundary layers for the compressible Euler equations near a characteristic wall.

// NaN-rejecting `!(x > 0.0)` guards and indexed stencil loops are used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod direct;
pub mod eos;
pub mod error;
pub mod grid;
pub mod ground_state;
pub mod io;
pub mod layer;
pub mod norms;
pub mod wkb;

pub use error::{Error, Result};
