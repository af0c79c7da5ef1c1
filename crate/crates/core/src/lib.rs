//! Synthetic counting benchmark tooling: scene generation over a vision-encoder
//! patch grid, deterministic rasterization, counting prompts, evaluation metrics,
//! and modality attention share (MAS) analysis with a small trainable attention
//! stack for end-to-end gradient experiments.

pub mod case;
pub mod grid;
pub mod mas;
pub mod metrics;
pub mod prompt;
pub mod raster;
pub mod scene;
pub mod toy;

pub use case::{CaseCode, Suffix};
pub use grid::PatchGrid;
pub use scene::{ObjectSpec, Scene, Shape};
