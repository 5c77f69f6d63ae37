use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coreset::{CoreModel, Coreset, Partition};
use crate::{Error, Result};

/// On-disk form of a [`CoreModel`]. The spectrum is recomputed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub k: usize,
    pub n: usize,
    pub assignment: Vec<usize>,
    pub cores: Vec<usize>,
    pub part_sizes: Vec<usize>,
    /// Rescaled core kernel, row-major rows.
    pub core_kernel: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn from_model(model: &CoreModel) -> Self {
        let m = model.core_kernel().matrix();
        ModelFile {
            k: model.k(),
            n: model.n(),
            assignment: model.partition().assignment().to_vec(),
            cores: model.coreset().cores().to_vec(),
            part_sizes: model.part_sizes().to_vec(),
            core_kernel: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    pub fn into_model(self) -> Result<CoreModel> {
        let parts = self.cores.len();
        if self.assignment.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "model assignment has {} entries, n = {}",
                self.assignment.len(),
                self.n
            )));
        }
        let partition = Partition::from_assignment(self.assignment, parts)?;
        if partition.sizes() != self.part_sizes {
            return Err(Error::InvalidPartition(
                "part_sizes disagree with assignment".into(),
            ));
        }
        let coreset = Coreset::new(self.cores, &partition)?;
        if self.core_kernel.len() != parts || self.core_kernel.iter().any(|r| r.len() != parts) {
            return Err(Error::InvalidInput(format!(
                "core_kernel must be {parts}x{parts}"
            )));
        }
        let flat: Vec<f64> = self.core_kernel.into_iter().flatten().collect();
        let matrix = DMatrix::from_row_slice(parts, parts, &flat);
        CoreModel::from_core_kernel(partition, coreset, matrix, self.k)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

pub fn save_model(model: &CoreModel, path: &Path) -> Result<()> {
    ModelFile::from_model(model).save(path)
}

pub fn load_model(path: &Path) -> Result<CoreModel> {
    ModelFile::load(path)?.into_model()
}
