use serde::{Deserialize, Serialize};

use crate::{GeometryError, Result, Vec3};

/// Pinhole perspective camera. Pixel (0, 0) is the top-left corner;
/// pixel centers sit at half-integer coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub eye: Vec3,
    pub target: Vec3,
    pub up: Vec3,
    pub vertical_fov: f64,
    pub image_size: (u32, u32),
}

/// Orthonormal view basis: `right`, `up`, `forward` (into the scene).
#[derive(Debug, Clone, Copy)]
pub struct ViewBasis {
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl Camera {
    /// Camera on a sphere around `target`; `elevation` is measured from the
    /// xy-plane and `up` is +z.
    pub fn orbit(
        target: Vec3,
        distance: f64,
        azimuth: f64,
        elevation: f64,
        vertical_fov: f64,
        image_size: (u32, u32),
    ) -> Camera {
        let (se, ce) = elevation.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Camera {
            eye: target + Vec3::new(ce * ca, ce * sa, se) * distance,
            target,
            up: Vec3::Z,
            vertical_fov,
            image_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dir = self.target - self.eye;
        if !(dir.norm() > 1e-12) {
            return Err(GeometryError::InvalidCamera("eye coincides with target".into()));
        }
        if !(self.vertical_fov > 0.0 && self.vertical_fov < std::f64::consts::PI) {
            return Err(GeometryError::InvalidCamera(format!(
                "vertical_fov {} outside (0, pi)",
                self.vertical_fov
            )));
        }
        if (self.up.norm() - 1.0).abs() > 1e-6 {
            return Err(GeometryError::InvalidCamera("up must be a unit vector".into()));
        }
        if dir.normalize().cross(self.up).norm() < 1e-9 {
            return Err(GeometryError::InvalidCamera("up is parallel to the view direction".into()));
        }
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return Err(GeometryError::InvalidCamera("image size must be non-zero".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> ViewBasis {
        let forward = (self.target - self.eye).normalize();
        let right = forward.cross(self.up).normalize();
        let up = right.cross(forward);
        ViewBasis { right, up, forward }
    }

    /// Focal length in pixels.
    pub fn focal_px(&self) -> f64 {
        0.5 * self.image_size.1 as f64 / (0.5 * self.vertical_fov).tan()
    }

    pub fn distance_to_target(&self) -> f64 {
        self.eye.distance(self.target)
    }

    /// Pixel coordinates and view depth of `p`; `None` if `p` is not in
    /// front of the camera.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64, f64)> {
        self.project_with(&self.basis(), p)
    }

    pub fn project_with(&self, basis: &ViewBasis, p: Vec3) -> Option<(f64, f64, f64)> {
        let rel = p - self.eye;
        let depth = rel.dot(basis.forward);
        if depth <= 1e-9 {
            return None;
        }
        let f = self.focal_px();
        let (w, h) = (self.image_size.0 as f64, self.image_size.1 as f64);
        let x = 0.5 * w + f * rel.dot(basis.right) / depth;
        let y = 0.5 * h - f * rel.dot(basis.up) / depth;
        Some((x, y, depth))
    }

    /// World-space ray direction through pixel coordinates `(x, y)`.
    pub fn ray_direction(&self, x: f64, y: f64) -> Vec3 {
        let b = self.basis();
        let f = self.focal_px();
        let (w, h) = (self.image_size.0 as f64, self.image_size.1 as f64);
        (b.forward * f + b.right * (x - 0.5 * w) - b.up * (y - 0.5 * h)).normalize()
    }
}
