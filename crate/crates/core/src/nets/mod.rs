//! The four sub-nets and their composition into the RAW-to-VIS pipeline.

mod blocks;
mod checkpoint;
mod colorize;
mod pipeline;
mod restore;
mod unet;

pub use blocks::{Act, ConvBlock};
pub use checkpoint::{
    blob_path, descriptor_path, load_checkpoint, save_checkpoint, CheckpointDescriptor,
    ParamIndexEntry, CHECKPOINT_FORMAT_VERSION,
};
pub use colorize::{ColorizationNet, ColorizeSpec};
pub use pipeline::{
    estimate_vis, raster_to_tensor, tensor_to_raster, PipeColorSpace, Pipeline, PipelineConfig,
    PipelineOutput,
};
pub use restore::{RestorationNet, RestoreSpec};
pub use unet::{UNet, UNetSpec};
