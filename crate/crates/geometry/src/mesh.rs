use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{GeometryError, Result, Vec3};

/// Indexed triangle mesh with per-vertex unit normals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

pub const DEGENERATE_AREA: f64 = 1e-12;

impl TriMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, tri: [u32; 3]) -> [Vec3; 3] {
        tri.map(|i| self.vertices[i as usize])
    }

    pub fn triangle_area(&self, tri: [u32; 3]) -> f64 {
        let [a, b, c] = self.corners(tri);
        0.5 * (b - a).cross(c - a).norm()
    }

    pub fn surface_area(&self) -> f64 {
        self.triangles.iter().map(|&t| self.triangle_area(t)).sum()
    }

    /// Checks index ranges, normal count, and that no triangle is degenerate.
    pub fn validate(&self) -> Result<()> {
        if self.normals.len() != self.vertices.len() {
            return Err(GeometryError::invalid(
                "normals",
                format!(
                    "{} normals for {} vertices",
                    self.normals.len(),
                    self.vertices.len()
                ),
            ));
        }
        let n = self.vertices.len() as u32;
        for (i, &tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(GeometryError::invalid(
                    "triangles",
                    format!("triangle {i} indexes past {n} vertices"),
                ));
            }
            if self.triangle_area(tri) <= DEGENERATE_AREA {
                return Err(GeometryError::invalid(
                    "triangles",
                    format!("triangle {i} is degenerate"),
                ));
            }
        }
        Ok(())
    }

    /// Undirected edge -> number of incident triangles.
    pub fn edge_counts(&self) -> HashMap<(u32, u32), usize> {
        let mut counts = HashMap::with_capacity(self.triangles.len() * 3 / 2);
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Every edge bounds exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        !self.is_empty() && self.edge_counts().values().all(|&c| c == 2)
    }

    /// Appends `other`, re-basing its indices.
    pub fn append(&mut self, other: &TriMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.normals.extend_from_slice(&other.normals);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
    }

    /// Axis-aligned bounds `(min, max)`; `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (
                Vec3::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z)),
                Vec3::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z)),
            )
        }))
    }

    /// Fills `normals` with area-weighted averages of the incident faces.
    pub fn recompute_normals(&mut self) {
        let mut acc = vec![Vec3::ZERO; self.vertices.len()];
        for &tri in &self.triangles {
            let [a, b, c] = self.corners(tri);
            let n = (b - a).cross(c - a);
            for i in tri {
                acc[i as usize] += n;
            }
        }
        self.normals = acc
            .into_iter()
            .map(|n| n.try_normalize().unwrap_or(Vec3::Z))
            .collect();
    }
}
