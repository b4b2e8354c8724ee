//! JSON lattice files.
//!
//! ```json
//! { "name": "fig2", "basis": [[2.0, 0.4], [-0.4, -2.0], [-1.6, 1.6]] }
//! { "selling": [[1.0, -1.0], [-1.0, 1.0]] }
//! ```
//!
//! Exactly one of `basis` (n+1 rows of m reals, superbasis order) and
//! `selling` ((n+1)×(n+1) rows) must be present.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{Lattice, LatticeError, ObtuseSuperbasis, SellingMatrix};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed lattice file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("lattice file needs exactly one of \"basis\" or \"selling\"")]
    Geometry,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selling: Option<Vec<Vec<f64>>>,
}

impl LatticeFile {
    pub fn from_superbasis(sb: &ObtuseSuperbasis, name: Option<String>) -> Self {
        Self {
            name,
            basis: Some(sb.vectors().to_vec()),
            selling: None,
        }
    }

    pub fn from_selling(q: &SellingMatrix, name: Option<String>) -> Self {
        Self {
            name,
            basis: None,
            selling: Some(q.to_rows()),
        }
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let file: Self = serde_json::from_str(text)?;
        if file.basis.is_some() == file.selling.is_some() {
            return Err(FormatError::Geometry);
        }
        Ok(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn to_lattice(&self, tol: f64) -> Result<Lattice, FormatError> {
        match (&self.basis, &self.selling) {
            (Some(basis), None) => {
                Ok(ObtuseSuperbasis::with_tolerance(basis.clone(), tol)?.into())
            }
            (None, Some(rows)) => Ok(SellingMatrix::from_gram_with_tolerance(rows, tol)?.into()),
            _ => Err(FormatError::Geometry),
        }
    }
}
