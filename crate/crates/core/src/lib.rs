//! Oriented and densely packed object detection at desk scale.
//!
//! The crate bundles rotated-box geometry, a rotation convolution layer whose
//! sampling grid follows a per-location angle field, a multi-branch feature
//! selection module, dynamic refinement heads for classification and
//! regression, a CenterNet-style oriented detector with a small hourglass
//! backbone, a synthetic densely-packed scene generator, and rotated-box
//! evaluation metrics.

pub mod error;
pub mod nn;
pub mod obb;
pub mod rcl;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::FeatureMap;
