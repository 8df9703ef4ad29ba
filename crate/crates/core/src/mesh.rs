use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Triangle mesh with one semantic label per vertex.
///
/// Triangles whose vertices carry different labels are dropped at
/// construction and counted in [`SemanticMesh::dropped_triangles`].
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    vertex_labels: Vec<u32>,
    dropped_triangles: usize,
}

impl SemanticMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, vertex_labels: Vec<u32>) -> Result<Self> {
        if vertex_labels.len() != vertices.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} vertices",
                vertex_labels.len(),
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput(format!("vertex {i} has non-finite coordinates")));
        }
        let n = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidInput(format!("triangle {t:?} references a vertex beyond {n}")));
        }
        let before = triangles.len();
        let triangles: Vec<[usize; 3]> = triangles
            .into_iter()
            .filter(|t| vertex_labels[t[0]] == vertex_labels[t[1]] && vertex_labels[t[1]] == vertex_labels[t[2]])
            .collect();
        let dropped_triangles = before - triangles.len();
        Ok(Self { vertices, triangles, vertex_labels, dropped_triangles })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_labels(&self) -> &[u32] {
        &self.vertex_labels
    }

    pub fn dropped_triangles(&self) -> usize {
        self.dropped_triangles
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Distinct labels in ascending order.
    pub fn labels(&self) -> Vec<u32> {
        let mut labels = self.vertex_labels.clone();
        labels.sort_unstable();
        labels.dedup();
        labels
    }
}
