//! On-disk dataset: scene folders with aligned captures, a JSON manifest,
//! and a train/test split by scene id.
//!
//! Layout:
//! ```text
//! <root>/manifest.json
//! <root>/scene_<id>/<phase>_<role>.f32   (+ .json sidecar, + .png preview)
//! ```
//! Every scene carries seven role images: mixed/vis/nir by day and
//! mixed/vis/vis_long/nir by night, plus one exact deviation map per phase
//! as auxiliary ground truth only the simulator can know.

mod load;
mod synth;
mod validate;

pub use load::{load_batch, load_sample, TrainSample};
pub use synth::{synthesize_dataset, DayIllumination, NightIllumination, SynthesisConfig};
pub use validate::{validate_manifest, ValidationReport, Violation};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor::Phase;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Role images a phase must carry.
pub fn required_roles(phase: Phase) -> &'static [&'static str] {
    match phase {
        Phase::Day => &["mixed", "vis", "nir"],
        Phase::Night => &["mixed", "vis", "vis_long", "nir"],
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneEntry {
    pub id: u64,
    pub phase: Phase,
    /// role -> path relative to the dataset root.
    pub roles: BTreeMap<String, String>,
    /// Auxiliary ground truth (deviation map), outside the 7-image count.
    pub aux: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<u64>,
    pub test: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scenes: Vec<SceneEntry>,
    pub split: Split,
    pub synthesis: SynthesisConfig,
    /// SHA-256 of the canonical synthesis-config JSON.
    pub config_hash: String,
}

impl Manifest {
    pub fn save(&self, root: &Path) -> Result<()> {
        let path = root.join(MANIFEST_FILE);
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = std::fs::read(&path)
            .map_err(|e| Error::Data(format!("missing manifest {}: {e}", path.display())))?;
        Ok(serde_json::from_slice(&text)?)
    }

    pub fn entry(&self, id: u64, phase: Phase) -> Option<&SceneEntry> {
        self.scenes.iter().find(|s| s.id == id && s.phase == phase)
    }

    /// Total role files across all scenes (the published count would be
    /// 714 for 102 scenes).
    pub fn role_file_count(&self) -> usize {
        self.scenes.iter().map(|s| s.roles.len()).sum()
    }
}

/// Train/test split by scene id: 14 test scenes when the dataset is at least
/// 102 scenes, otherwise ceil(15%). Splitting whole scenes (not individual
/// images) keeps day and night captures of one scene on the same side.
pub fn make_split(ids: &[u64], rng: &mut impl rand::Rng) -> Split {
    let n = ids.len();
    let n_test = if n >= 102 {
        14
    } else {
        ((n as f64) * 0.15).ceil() as usize
    }
    .min(n.saturating_sub(1))
    .max(1);
    let mut shuffled: Vec<u64> = ids.to_vec();
    // Fisher-Yates with the provided generator
    for i in (1..shuffled.len()).rev() {
        let j = rng.gen_range(0..=i);
        shuffled.swap(i, j);
    }
    let test: Vec<u64> = {
        let mut t: Vec<u64> = shuffled[..n_test].to_vec();
        t.sort_unstable();
        t
    };
    let train: Vec<u64> = {
        let mut t: Vec<u64> = shuffled[n_test..].to_vec();
        t.sort_unstable();
        t
    };
    Split { train, test }
}

/// Stable per-stream seed derivation from a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    // splitmix64 over the combined value
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn split_sizes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let ids: Vec<u64> = (0..102).collect();
        let s = make_split(&ids, &mut rng);
        assert_eq!(s.test.len(), 14);
        assert_eq!(s.train.len(), 88);
        let ids: Vec<u64> = (0..32).collect();
        let s = make_split(&ids, &mut rng);
        assert_eq!(s.test.len(), 5); // ceil(0.15 * 32)
        assert_eq!(s.train.len(), 27);
        let ids: Vec<u64> = (0..2).collect();
        let s = make_split(&ids, &mut rng);
        assert_eq!(s.test.len(), 1);
        assert_eq!(s.train.len(), 1);
    }

    #[test]
    fn split_is_disjoint() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let ids: Vec<u64> = (0..40).collect();
        let s = make_split(&ids, &mut rng);
        for id in &s.test {
            assert!(!s.train.contains(id));
        }
        assert_eq!(s.train.len() + s.test.len(), 40);
    }

    #[test]
    fn derive_seed_separates_streams() {
        let a = derive_seed(7, 0);
        let b = derive_seed(7, 1);
        let c = derive_seed(8, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(7, 0));
    }
}
