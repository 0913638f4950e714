pub mod assets;
pub mod classify;
pub mod compose;
pub mod draw;
pub mod error;
pub mod features;
pub mod fontio;
pub mod par;
pub mod pipeline;
pub mod raster;
pub mod rules;
pub mod strokes;
pub mod thinning;
pub mod topology;

pub use error::{Error, Result};
