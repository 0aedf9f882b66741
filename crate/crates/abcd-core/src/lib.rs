//! Detection math for blood-cell microscopy at desk scale: attention and
//! fusion modules, IoU-family box losses with analytic gradients, anchor-free
//! decoding, NMS, the full mAP/F1/confusion-matrix evaluation protocol, and a
//! VOC-style data pipeline with box-consistent augmentation.

pub mod asff;
pub mod boxloss;
pub mod cbam;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod params;
pub mod tensor;

pub use error::{Error, Result};
