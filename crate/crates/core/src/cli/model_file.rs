//! JSON model description.
//!
//! ```json
//! {"name": "q", "dim": 2, "params": 2, "kind": "bloch",
//!  "builtin_name": "qubit-fixed-radius", "parameters": {"s0": 0.8}}
//! ```
//!
//! Explicit models list their points instead, with complex entries written
//! as `[re, im]` pairs:
//!
//! ```json
//! {"name": "m", "dim": 2, "params": 1, "kind": "explicit",
//!  "points": [{"theta": [0.0],
//!              "rho": [[[0.75, 0], [0, 0]], [[0, 0], [0.25, 0]]],
//!              "drho": [[[[0, 0], [0.5, 0]], [[0.5, 0], [0, 0]]]]}]}
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::model::{
    build_zoo_model, zoo_entry, zoo_parameters, BlochMap, ExplicitModel, ExplicitPoint, ModelKind, ParametricModel,
};

/// `d × d` matrix of `[re, im]` pairs.
pub type MatrixRecord = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub theta: Vec<f64>,
    pub rho: MatrixRecord,
    pub drho: Vec<MatrixRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub dim: usize,
    pub params: usize,
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin_name: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointRecord>,
}

pub fn matrix_to_record(m: &ComplexMatrix) -> MatrixRecord {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn record_to_matrix(r: &MatrixRecord, dim: usize, what: &str) -> Result<ComplexMatrix> {
    if r.len() != dim || r.iter().any(|row| row.len() != dim) {
        return Err(Error::Parse(format!("{what} must be a {dim}×{dim} array of [re, im] pairs")));
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |i, j| Complex64::new(r[i][j][0], r[i][j][1])))
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model file: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }

    /// Builds the described model, checking the declared dimension and parameter count.
    pub fn to_model(&self) -> Result<ParametricModel> {
        let model = match self.kind {
            ModelKind::Builtin | ModelKind::Bloch => {
                let builtin = self
                    .builtin_name
                    .as_deref()
                    .ok_or_else(|| Error::Parse(format!("{:?} model needs 'builtin_name'", self.kind)))?;
                let entry = zoo_entry(builtin)?;
                if entry.kind != self.kind {
                    return Err(Error::Parse(format!(
                        "'{builtin}' is a {:?} model, file declares {:?}",
                        entry.kind, self.kind
                    )));
                }
                if !self.points.is_empty() {
                    return Err(Error::Parse("only explicit models carry 'points'".into()));
                }
                build_zoo_model(builtin, &self.parameters)?
            }
            ModelKind::Explicit => {
                if self.builtin_name.is_some() || !self.parameters.is_empty() {
                    return Err(Error::Parse("explicit models take 'points', not 'builtin_name'/'parameters'".into()));
                }
                let points = self
                    .points
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let rho = record_to_matrix(&p.rho, self.dim, &format!("points[{k}].rho"))?;
                        let drho = p
                            .drho
                            .iter()
                            .enumerate()
                            .map(|(i, m)| record_to_matrix(m, self.dim, &format!("points[{k}].drho[{i}]")))
                            .collect::<Result<Vec<_>>>()?;
                        Ok(ExplicitPoint { theta: p.theta.clone(), rho, drho })
                    })
                    .collect::<Result<Vec<_>>>()?;
                ParametricModel::Explicit(ExplicitModel::new(self.name.clone(), self.dim, self.params, points)?)
            }
        };
        if model.dim() != self.dim || model.param_count() != self.params {
            return Err(Error::Parse(format!(
                "declared dim {} / params {} but the model has dim {} / params {}",
                self.dim,
                self.params,
                model.dim(),
                model.param_count()
            )));
        }
        Ok(model)
    }

    /// Describes a model; arbitrary Bloch maps cannot be written out.
    pub fn from_model(model: &ParametricModel) -> Result<Self> {
        let mut file = ModelFile {
            name: model.name(),
            dim: model.dim(),
            params: model.param_count(),
            kind: model.kind(),
            builtin_name: None,
            parameters: BTreeMap::new(),
            points: vec![],
        };
        match model {
            ParametricModel::Bloch(b) if matches!(b.map(), BlochMap::Custom { .. }) => {
                return Err(Error::Unsupported("custom Bloch maps have no file representation".into()))
            }
            ParametricModel::Explicit(e) => {
                file.points = e
                    .points()
                    .iter()
                    .map(|p| PointRecord {
                        theta: p.theta.clone(),
                        rho: matrix_to_record(&p.rho),
                        drho: p.drho.iter().map(matrix_to_record).collect(),
                    })
                    .collect();
            }
            _ => {
                file.builtin_name = Some(zoo_builtin_name(model));
                file.parameters = zoo_parameters(model);
            }
        }
        Ok(file)
    }
}

fn zoo_builtin_name(model: &ParametricModel) -> String {
    match model {
        ParametricModel::Bloch(b) => match b.map() {
            BlochMap::Full => "qubit-full",
            BlochMap::Equatorial => "qubit-equatorial",
            BlochMap::FixedRadius { .. } => "qubit-fixed-radius",
            BlochMap::Piecewise { .. } => "qubit-piecewise",
            BlochMap::Custom { .. } => unreachable!("custom maps are rejected earlier"),
        }
        .to_string(),
        _ => model.name(),
    }
}
