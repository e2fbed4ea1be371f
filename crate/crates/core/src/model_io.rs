//! JSON documents for fitted models.
//!
//! Models keep trajectory states by reference: the document records the data
//! file path and its SHA-256 digest, and loading re-reads and verifies the
//! file before rebuilding the model.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::{from_rows, to_rows};
use crate::trajdata::load_trajectories;
use crate::{
    c64, CMatrix, EigenDmdModel, Error, KernelFamily, KernelSpace, Matrix, QuadratureRule, Result,
    SingularDmdModel, SpacePair,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularDocument {
    pub family: KernelFamily,
    pub mu1: f64,
    pub mu2: f64,
    pub quadrature: QuadratureRule,
    pub rank: usize,
    pub zero_operator: bool,
    pub sigma: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    #[serde(rename = "V0")]
    pub v0: Vec<Vec<f64>>,
    #[serde(rename = "V0t")]
    pub v0t: Vec<Vec<f64>>,
    /// `n×r`; empty rows when modes are not defined for the kernel.
    pub xi: Vec<Vec<f64>>,
    pub data: DataRef,
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrixDoc {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDocument {
    pub family: KernelFamily,
    pub mu1: f64,
    pub mu2: f64,
    pub quadrature: QuadratureRule,
    #[serde(rename = "M")]
    pub m: usize,
    pub lambda_re: Vec<f64>,
    pub lambda_im: Vec<f64>,
    #[serde(rename = "V_bar")]
    pub v_bar: ComplexMatrixDoc,
    pub xi: ComplexMatrixDoc,
    #[serde(rename = "G_alpha")]
    pub g_alpha: Vec<Vec<f64>>,
    pub data: DataRef,
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ModelDocument {
    Singular(SingularDocument),
    Eigen(EigenDocument),
}

/// A loaded model of either kind.
#[derive(Debug, Clone)]
pub enum Model {
    Singular(SingularDmdModel),
    Eigen(EigenDmdModel),
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Records `path` (made absolute when possible) with its digest.
pub fn data_ref(path: impl AsRef<Path>) -> Result<DataRef> {
    let path = path.as_ref();
    let sha256 = sha256_file(path)?;
    let abs = fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
    Ok(DataRef { path: abs.to_string_lossy().into_owned(), sha256 })
}

fn complex_doc(m: faer::MatRef<'_, c64>) -> ComplexMatrixDoc {
    ComplexMatrixDoc {
        re: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect(),
        im: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect(),
    }
}

fn complex_from_doc(doc: &ComplexMatrixDoc, nrows: usize, ncols: usize) -> Result<CMatrix> {
    let re = from_rows(&doc.re, ncols)?;
    let im = from_rows(&doc.im, ncols)?;
    if re.nrows() != nrows || im.nrows() != nrows {
        return Err(Error::Model(format!("complex matrix has {} rows, expected {nrows}", re.nrows())));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| c64::new(re[(i, j)], im[(i, j)])))
}

fn matrix_from(rows: &[Vec<f64>], nrows: usize, ncols: usize, name: &str) -> Result<Matrix> {
    if rows.len() != nrows {
        return Err(Error::Model(format!("{name} has {} rows, expected {nrows}", rows.len())));
    }
    from_rows(rows, ncols)
}

impl SingularDocument {
    pub fn from_model(model: &SingularDmdModel, data: DataRef, config: serde_json::Value) -> Self {
        let pair = model.pair();
        Self {
            family: pair.family(),
            mu1: pair.domain().mu(),
            mu2: pair.range().mu(),
            quadrature: model.rule(),
            rank: model.rank(),
            zero_operator: model.is_zero_operator(),
            sigma: model.sigma().to_vec(),
            u: to_rows(model.u_hat()),
            v: to_rows(model.v_hat()),
            v0: to_rows(model.v0()),
            v0t: to_rows(model.v0_tilde()),
            xi: model.singular_modes().map(to_rows).unwrap_or_default(),
            data,
            config,
        }
    }
}

impl EigenDocument {
    pub fn from_model(model: &EigenDmdModel, data: DataRef, config: serde_json::Value) -> Self {
        let pair = model.pair();
        Self {
            family: pair.family(),
            mu1: pair.domain().mu(),
            mu2: pair.range().mu(),
            quadrature: model.rule(),
            m: model.trajectories().len(),
            lambda_re: model.lambda().iter().map(|z| z.re).collect(),
            lambda_im: model.lambda().iter().map(|z| z.im).collect(),
            v_bar: complex_doc(model.v_bar()),
            xi: complex_doc(model.modes()),
            g_alpha: to_rows(model.g_alpha()),
            data,
            config,
        }
    }
}

impl ModelDocument {
    pub fn data(&self) -> &DataRef {
        match self {
            Self::Singular(d) => &d.data,
            Self::Eigen(d) => &d.data,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Model(format!("serialization failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Model(format!("invalid model document: {e}")))
    }

    /// Rebuilds the model; `base` resolves a relative data path.
    pub fn into_model(self, base: Option<&Path>) -> Result<Model> {
        let data = self.data().clone();
        let mut path = PathBuf::from(&data.path);
        if path.is_relative() {
            if let Some(base) = base {
                path = base.join(path);
            }
        }
        let digest = sha256_file(&path)?;
        if digest != data.sha256 {
            return Err(Error::Model(format!(
                "data file {} does not match the recorded digest (expected {}, found {digest})",
                path.display(),
                data.sha256
            )));
        }
        let set = load_trajectories(&path)?;
        let m = set.len();
        match self {
            Self::Singular(d) => {
                let pair = SpacePair::new(KernelSpace::new(d.family, d.mu1)?, KernelSpace::new(d.family, d.mu2)?)?;
                let r1 = d.u.len();
                let r2 = d.v.len();
                let model = SingularDmdModel::from_parts(
                    pair,
                    d.quadrature,
                    set,
                    matrix_from(&d.v0, m, r1, "V0")?,
                    matrix_from(&d.v0t, m, r2, "V0t")?,
                    matrix_from(&d.u, r1, d.rank, "U")?,
                    matrix_from(&d.v, r2, d.rank, "V")?,
                    d.sigma,
                )?;
                Ok(Model::Singular(model))
            }
            Self::Eigen(d) => {
                let pair = SpacePair::new(KernelSpace::new(d.family, d.mu1)?, KernelSpace::new(d.family, d.mu2)?)?;
                if d.m != m {
                    return Err(Error::Model(format!("model expects {} trajectories, data has {m}", d.m)));
                }
                if d.lambda_re.len() != d.lambda_im.len() {
                    return Err(Error::Model("eigenvalue real and imaginary parts differ in length".into()));
                }
                let r = d.lambda_re.len();
                let lambda = d.lambda_re.iter().zip(&d.lambda_im).map(|(&re, &im)| c64::new(re, im)).collect();
                let n = set.dim();
                let model = EigenDmdModel::from_parts(
                    pair,
                    d.quadrature,
                    set,
                    lambda,
                    complex_from_doc(&d.v_bar, m, r)?,
                    complex_from_doc(&d.xi, n, r)?,
                    matrix_from(&d.g_alpha, m, m, "G_alpha")?,
                )?;
                Ok(Model::Eigen(model))
            }
        }
    }
}

pub fn save_document(doc: &ModelDocument, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, doc.to_json()? + "\n").map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn load_document(path: impl AsRef<Path>) -> Result<ModelDocument> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    ModelDocument::from_json(&text)
}

/// Loads a model document and its referenced data.
pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    load_document(path)?.into_model(path.parent())
}
