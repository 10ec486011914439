//! Dataset integrity checks. Returns a structured violation list and never
//! panics on malformed data.

use std::collections::HashSet;
use std::path::Path;

use serde::Serialize;

use super::{required_roles, Manifest};
use crate::image::io as raster_io;
use crate::sensor::NoiseMode;

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub scene: Option<u64>,
    pub phase: Option<String>,
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, scene: Option<u64>, phase: Option<&str>, kind: &str, detail: String) {
        self.violations.push(Violation {
            scene,
            phase: phase.map(str::to_string),
            kind: kind.to_string(),
            detail,
        });
    }
}

/// Check role completeness, dimension agreement, split disjointness and (for
/// noise-free datasets) the additivity invariant
/// `|mixed - (vis + nir + deviation)| <= 1/quant_levels` per pixel.
pub fn validate_manifest(root: &Path) -> ValidationReport {
    let mut report = ValidationReport::default();
    let manifest = match Manifest::load(root) {
        Ok(m) => m,
        Err(e) => {
            report.push(None, None, "manifest", e.to_string());
            return report;
        }
    };

    // split checks
    let train: HashSet<u64> = manifest.split.train.iter().copied().collect();
    let test: HashSet<u64> = manifest.split.test.iter().copied().collect();
    for id in train.intersection(&test) {
        report.push(Some(*id), None, "split", "scene id in both splits".into());
    }
    let all_ids: HashSet<u64> = manifest.scenes.iter().map(|s| s.id).collect();
    for id in all_ids.iter() {
        if !train.contains(id) && !test.contains(id) {
            report.push(Some(*id), None, "split", "scene id in neither split".into());
        }
    }

    let tol = 1.0 / manifest.synthesis.sensor.quant_levels() as f32 + 1e-6;
    for entry in &manifest.scenes {
        let phase = entry.phase.as_str();
        let mut rasters = Vec::new();
        for role in required_roles(entry.phase) {
            match entry.roles.get(*role) {
                None => {
                    report.push(Some(entry.id), Some(phase), "missing-role", format!("role {role} absent from manifest"));
                }
                Some(rel) => match raster_io::load_raster(&root.join(rel)) {
                    Err(e) => {
                        report.push(Some(entry.id), Some(phase), "missing-role", format!("role {role}: {e}"));
                    }
                    Ok(r) => rasters.push((role.to_string(), r)),
                },
            }
        }
        // dimension agreement
        if let Some((_, first)) = rasters.first() {
            let (h, w) = (first.height(), first.width());
            for (role, r) in &rasters {
                if r.height() != h || r.width() != w {
                    report.push(
                        Some(entry.id),
                        Some(phase),
                        "dimension",
                        format!("role {role} is {}x{}, expected {h}x{w}", r.height(), r.width()),
                    );
                }
            }
        }
        // additivity on noise-free data
        if manifest.synthesis.noise == NoiseMode::Off {
            let get = |name: &str| rasters.iter().find(|(r, _)| r == name).map(|(_, r)| r);
            let dev = entry
                .aux
                .get("deviation")
                .and_then(|rel| raster_io::load_raster(&root.join(rel)).ok());
            if let (Some(m), Some(v), Some(n), Some(d)) =
                (get("mixed"), get("vis"), get("nir"), dev.as_ref())
            {
                let mut worst = 0.0f32;
                for i in 0..m.data().len() {
                    let resid =
                        (m.data()[i] - v.data()[i] - n.data()[i] - d.data()[i]).abs();
                    worst = worst.max(resid);
                }
                if worst > tol {
                    report.push(
                        Some(entry.id),
                        Some(phase),
                        "additivity",
                        format!("max |mixed-(vis+nir+dev)| = {worst} > {tol}"),
                    );
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize_dataset, SynthesisConfig};

    #[test]
    fn fresh_dataset_is_clean() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthesisConfig::new(3, 16, 16, 11, NoiseMode::Off);
        synthesize_dataset(&cfg, dir.path()).unwrap();
        let rep = validate_manifest(dir.path());
        assert!(rep.is_clean(), "{:?}", rep.violations);
    }

    #[test]
    fn deleted_file_reported_with_scene_and_role() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthesisConfig::new(2, 16, 16, 12, NoiseMode::PoissonGaussian);
        let m = synthesize_dataset(&cfg, dir.path()).unwrap();
        let victim = &m.scenes[1];
        std::fs::remove_file(dir.path().join(&victim.roles["nir"])).unwrap();
        let rep = validate_manifest(dir.path());
        assert!(!rep.is_clean());
        assert!(rep
            .violations
            .iter()
            .any(|v| v.kind == "missing-role" && v.scene == Some(victim.id) && v.detail.contains("nir")));
    }

    #[test]
    fn overlapping_split_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthesisConfig::new(3, 16, 16, 13, NoiseMode::PoissonGaussian);
        let mut m = synthesize_dataset(&cfg, dir.path()).unwrap();
        let stray = m.split.test[0];
        m.split.train.push(stray);
        m.save(dir.path()).unwrap();
        let rep = validate_manifest(dir.path());
        assert!(rep.violations.iter().any(|v| v.kind == "split" && v.scene == Some(stray)));
    }

    #[test]
    fn corrupt_manifest_never_panics() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("manifest.json"), b"{ not json").unwrap();
        let rep = validate_manifest(dir.path());
        assert!(!rep.is_clean());
    }
}
