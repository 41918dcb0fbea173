//! Optimizers shared by the open-loop and closed-loop stages.

pub mod boxqn;
pub mod operators;
pub mod rga;

pub use boxqn::{minimize_box, BoxQnOptions, BoxQnResult};
pub use rga::{GaResult, RgaConfig};
