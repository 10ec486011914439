//! Checkpoints: little-endian f32 parameter blob plus a JSON topology
//! descriptor. The descriptor alone reconstructs the network; the blob
//! restores its exact weights.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pipeline::{Pipeline, PipelineConfig};
use crate::autodiff::Scalar;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamIndexEntry {
    pub name: String,
    pub shape: [usize; 4],
    /// Byte offset into the blob.
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointDescriptor {
    pub format_version: u32,
    pub config: PipelineConfig,
    pub params: Vec<ParamIndexEntry>,
}

pub fn descriptor_path(prefix: &Path) -> PathBuf {
    prefix.with_extension("json")
}

pub fn blob_path(prefix: &Path) -> PathBuf {
    prefix.with_extension("bin")
}

/// Write `<prefix>.json` and `<prefix>.bin`.
pub fn save_checkpoint<S: Scalar>(pipeline: &Pipeline<S>, prefix: &Path) -> Result<()> {
    let mut entries = Vec::new();
    let mut blob: Vec<u8> = Vec::new();
    for (name, tensor) in pipeline.params() {
        let shape = tensor.shape();
        entries.push(ParamIndexEntry {
            name,
            shape: [shape.n, shape.h, shape.w, shape.c],
            offset: blob.len(),
        });
        for &v in tensor.data().iter() {
            blob.extend_from_slice(&v.to_f32().to_le_bytes());
        }
    }
    let descriptor = CheckpointDescriptor {
        format_version: CHECKPOINT_FORMAT_VERSION,
        config: pipeline.config.clone(),
        params: entries,
    };
    if let Some(dir) = prefix.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(descriptor_path(prefix), serde_json::to_vec_pretty(&descriptor)?)?;
    fs::write(blob_path(prefix), blob)?;
    Ok(())
}

/// Rebuild the pipeline from `<prefix>.json` + `<prefix>.bin`.
pub fn load_checkpoint(prefix: &Path) -> Result<Pipeline<f32>> {
    let desc_file = descriptor_path(prefix);
    let text = fs::read(&desc_file)
        .map_err(|e| Error::Data(format!("missing checkpoint {}: {e}", desc_file.display())))?;
    let descriptor: CheckpointDescriptor = serde_json::from_slice(&text)?;
    if descriptor.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Data(format!(
            "checkpoint format {} unsupported (expected {CHECKPOINT_FORMAT_VERSION})",
            descriptor.format_version
        )));
    }
    let blob = fs::read(blob_path(prefix))
        .map_err(|e| Error::Data(format!("missing checkpoint blob: {e}")))?;

    let pipeline = Pipeline::<f32>::new(descriptor.config.clone());
    let params = pipeline.params();
    if params.len() != descriptor.params.len() {
        return Err(Error::Data(format!(
            "checkpoint has {} parameters, topology expects {}",
            descriptor.params.len(),
            params.len()
        )));
    }
    for ((name, tensor), entry) in params.iter().zip(&descriptor.params) {
        if name != &entry.name {
            return Err(Error::Data(format!(
                "parameter order mismatch: {name} vs {}",
                entry.name
            )));
        }
        let len = tensor.shape().len();
        let end = entry.offset + len * 4;
        if end > blob.len() {
            return Err(Error::Data(format!(
                "blob truncated: {name} needs bytes {}..{end}, blob has {}",
                entry.offset,
                blob.len()
            )));
        }
        let values: Vec<f32> = blob[entry.offset..end]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite weight in {name}")));
        }
        tensor.set_data(&values);
    }
    Ok(pipeline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::pipeline::PipelineConfig;

    fn tiny_config(seed: u64) -> PipelineConfig {
        PipelineConfig {
            depth: 2,
            base_features: 4,
            restore_features: 8,
            restore_blocks: 1,
            ..PipelineConfig::desk(seed)
        }
    }

    #[test]
    fn save_load_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("ckpt");
        let pipe = Pipeline::<f32>::new(tiny_config(42));
        save_checkpoint(&pipe, &prefix).unwrap();
        let loaded = load_checkpoint(&prefix).unwrap();
        let a = pipe.params();
        let b = loaded.params();
        assert_eq!(a.len(), b.len());
        for ((na, ta), (nb, tb)) in a.iter().zip(&b) {
            assert_eq!(na, nb);
            assert_eq!(ta.to_vec(), tb.to_vec(), "weights differ for {na}");
        }
        // a second save of the loaded pipeline is byte-identical
        let prefix2 = dir.path().join("ckpt2");
        save_checkpoint(&loaded, &prefix2).unwrap();
        assert_eq!(
            fs::read(blob_path(&prefix)).unwrap(),
            fs::read(blob_path(&prefix2)).unwrap()
        );
    }

    #[test]
    fn truncated_blob_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("ckpt");
        let pipe = Pipeline::<f32>::new(tiny_config(1));
        save_checkpoint(&pipe, &prefix).unwrap();
        let blob = fs::read(blob_path(&prefix)).unwrap();
        fs::write(blob_path(&prefix), &blob[..blob.len() / 2]).unwrap();
        assert!(matches!(load_checkpoint(&prefix), Err(Error::Data(_))));
    }

    #[test]
    fn missing_descriptor_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_checkpoint(&dir.path().join("nope")),
            Err(Error::Data(_))
        ));
    }
}
