//! floorvis: monocular floor / obstacle detection for indoor robots.
//!
//! A single camera frame goes through superpixel segmentation (SLIC),
//! safe-zone feature sampling, SSD floor classification with region
//! growing, and floor-junction masking, producing a binary occupancy
//! mask. A separate homography module maps image pixels to ground-plane
//! coordinates (inverse perspective mapping).

pub mod color;
pub mod error;
pub mod features;
pub mod floor;
pub mod image;
pub mod io;
pub mod ipm;
pub mod junction;
pub mod pipeline;
pub mod slic;
pub mod smooth;

pub use error::{Error, Result};
pub use image::{FloatImage, GrayImage, ImageU8, OccupancyMask, BLACK, WHITE};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineResult};
