//! Minimal double-precision neural network substrate with hand-written
//! forward and backward passes.
//!
//! Everything is deterministic: parameters live in an insertion-ordered
//! store, reductions run in fixed order, and randomness only enters through
//! explicitly seeded RNGs.

pub mod adam;
pub mod block;
pub mod conv;
pub mod gradcheck;
pub mod linear;
pub mod norm;
pub mod ops;
pub mod params;

pub use adam::Adam;
pub use block::{ConvBnRelu, ConvBnReluCache};
pub use conv::Conv2d;
pub use linear::Linear;
pub use norm::{BatchNorm, BnCache, Mode};
pub use params::{Init, Param, ParamSpec, ParamStore};
