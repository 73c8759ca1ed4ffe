//! Desk-scale multi-task multi-label training engine.
//!
//! A shared convolutional backbone feeds pyramid-pooled heads for two groups
//! of binary attributes plus an auxiliary landmark-regression head. Training
//! combines per-attribute mean-squared-error losses and the landmark loss
//! into one weighted objective, re-weighting each attribute every P
//! iterations from the trend of its whole-validation-set loss, and adapts
//! each attribute's decision threshold from validation false-positive /
//! false-negative counts to counter class imbalance.
//!
//! Everything runs on a self-contained f64 tensor engine with exact
//! reverse-mode gradients; there is no external numeric dependency.

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod eval;
pub mod layer;
pub mod logging;
pub mod losses;
pub mod network;
pub mod scheduler;
pub mod spp;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use tensor::Tensor;
