//! JSON state files: `{"dims": [..], "matrix": [[[re, im], ...], ...]}`, rows in order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DensityMatrix;
use crate::linalg::{c, CMat};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl From<&DensityMatrix> for StateFile {
    fn from(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let matrix = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        StateFile { dims: rho.dims().to_vec(), matrix }
    }
}

impl StateFile {
    pub fn to_state(&self) -> Result<DensityMatrix> {
        let dim = self.matrix.len();
        if self.matrix.iter().any(|row| row.len() != dim) {
            return Err(Error::DimensionMismatch("state file matrix is not square".into()));
        }
        let m = CMat::from_fn(dim, dim, |i, j| c(self.matrix[i][j][0], self.matrix[i][j][1]));
        DensityMatrix::new(self.dims.clone(), m)
    }
}

pub fn read_state_file(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    let text = fs::read_to_string(path)?;
    let file: StateFile = serde_json::from_str(&text)?;
    file.to_state()
}

pub fn write_state_file(path: impl AsRef<Path>, rho: &DensityMatrix) -> Result<()> {
    fs::write(path, serde_json::to_string(&StateFile::from(rho))?)?;
    Ok(())
}
