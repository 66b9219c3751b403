//! Auxiliary space on disk: `input.vtm`, `output.vtm` and `aux.json`.

use std::path::Path;

use focus_core::{AuxiliarySpace, TrainConfig, TrainStats};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vtm;

pub const INPUT_FILE: &str = "input.vtm";
pub const OUTPUT_FILE: &str = "output.vtm";
pub const SIDECAR_FILE: &str = "aux.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format_version: u32,
    pub rows: usize,
    pub dim: usize,
    pub trained_count: usize,
    pub trained_mask: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_config: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
}

pub fn save_aux(
    dir: &Path,
    space: &AuxiliarySpace,
    cfg: Option<&TrainConfig>,
    stats: Option<&TrainStats>,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    vtm::save(&space.input, &dir.join(INPUT_FILE))?;
    vtm::save(&space.output, &dir.join(OUTPUT_FILE))?;
    let sidecar = Sidecar {
        format_version: 1,
        rows: space.rows(),
        dim: space.input.dim(),
        trained_count: space.trained_mask.iter().filter(|&&t| t).count(),
        trained_mask: space.trained_mask.clone(),
        train_config: cfg.cloned(),
        epochs: stats.map(|s| s.epochs),
    };
    crate::write_json(&dir.join(SIDECAR_FILE), &sidecar)
}

/// Loads a saved space. A single matrix file is taken as `F` with every row trained.
pub fn load_aux(path: &Path) -> Result<AuxiliarySpace> {
    if path.is_file() {
        return Ok(AuxiliarySpace::from_vectors(vtm::load_any(path)?));
    }
    let input = vtm::load(&path.join(INPUT_FILE))?;
    let output = vtm::load(&path.join(OUTPUT_FILE))?;
    let sidecar_path = path.join(SIDECAR_FILE);
    let sidecar: Sidecar = crate::read_json(&sidecar_path)?;
    if sidecar.rows != input.rows() || sidecar.dim != input.dim() {
        return Err(Error::format(
            &sidecar_path,
            format!(
                "sidecar says {}x{}, input vectors are {}x{}",
                sidecar.rows,
                sidecar.dim,
                input.rows(),
                input.dim()
            ),
        ));
    }
    AuxiliarySpace::new(input, output, sidecar.trained_mask)
        .map_err(|source| Error::Input { path: path.to_path_buf(), source })
}
