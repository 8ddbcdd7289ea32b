//! Nodal scalar fields over a mesh.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};

/// What a field represents; `Potential` fields may carry the `+inf` sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Solution,
    Potential,
    BoundaryData,
    Derived,
}

/// One value per mesh node.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub mesh: Arc<Mesh>,
    pub kind: FieldKind,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: Arc<Mesh>, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.nodes.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values for a mesh with {} nodes",
                values.len(),
                mesh.nodes.len()
            )));
        }
        if kind != FieldKind::Potential && values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite value in a non-potential field".into(),
            ));
        }
        Ok(ScalarField { mesh, kind, values })
    }

    pub fn constant(mesh: &Arc<Mesh>, kind: FieldKind, c: f64) -> Self {
        ScalarField { mesh: Arc::clone(mesh), kind, values: vec![c; mesh.nodes.len()] }
    }

    pub fn from_fn(mesh: &Arc<Mesh>, kind: FieldKind, f: impl Fn(Point) -> f64) -> Self {
        ScalarField {
            mesh: Arc::clone(mesh),
            kind,
            values: mesh.nodes.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Max nodal |self - other|.
    pub fn max_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
