//! Pinhole camera model and projection.
//!
//! Conventions: camera space has x right, y down, z forward (along the view
//! axis); pixel `(u, v)` comes from `u = fx·X/Z + cx`, `v = fy·Y/Z + cy`.
//! Depth is stored everywhere as *proximity*, the negated axial distance
//! `-Z`, so larger values are closer to the camera.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points with camera-space `Z` below this are treated as behind the camera.
pub const MIN_FORWARD_DISTANCE: f64 = 1e-9;

/// Calibrated pinhole camera with a world-to-camera rigid pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub focal: (f64, f64),
    pub principal: (f64, f64),
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub resolution: (usize, usize),
}

/// Result of projecting a world point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPoint {
    pub x: f64,
    pub y: f64,
    /// Negated axial camera distance; larger means closer.
    pub proximity: f64,
    /// True when the point is behind (or grazing) the camera plane.
    pub behind: bool,
}

impl Camera {
    pub fn new(
        focal: (f64, f64),
        principal: (f64, f64),
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        resolution: (usize, usize),
    ) -> Result<Camera> {
        let cam = Camera { focal, principal, rotation, translation, resolution };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal.0 > 0.0 && self.focal.1 > 0.0) {
            return Err(Error::InvalidCamera(format!("focal lengths must be positive, got {:?}", self.focal)));
        }
        if self.resolution.0 < 1 || self.resolution.1 < 1 {
            return Err(Error::InvalidCamera(format!("resolution must be at least 1x1, got {:?}", self.resolution)));
        }
        let r = self.rotation;
        let residual = (r * r.transpose() - Matrix3::identity()).norm();
        if residual > 1e-9 {
            return Err(Error::InvalidCamera(format!("pose rotation not orthonormal (residual {residual:.3e})")));
        }
        if !self.translation.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidCamera("non-finite pose translation".into()));
        }
        Ok(())
    }

    /// Camera placed at `eye`, looking at `target`, with `up` fixing the roll.
    pub fn look_at(
        eye: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
        focal: (f64, f64),
        resolution: (usize, usize),
    ) -> Result<Camera> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera("look_at eye and target coincide".into()))?;
        let right = forward
            .cross(&up)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera("look_at direction parallel to up".into()))?;
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -rotation * eye;
        let principal = (resolution.0 as f64 / 2.0, resolution.1 as f64 / 2.0);
        Camera::new(focal, principal, rotation, translation, resolution)
    }

    #[inline]
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Pinhole projection of a world point.
    pub fn project(&self, p: &Vector3<f64>) -> ProjectedPoint {
        let pc = self.to_camera(p);
        let behind = pc.z <= MIN_FORWARD_DISTANCE;
        let (x, y) = if behind {
            (f64::NAN, f64::NAN)
        } else {
            (self.focal.0 * pc.x / pc.z + self.principal.0, self.focal.1 * pc.y / pc.z + self.principal.1)
        };
        ProjectedPoint { x, y, proximity: -pc.z, behind }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Camera> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let json: CameraJson = serde_json::from_str(&text)
            .map_err(|e| Error::Json { path: path.into(), message: e.to_string() })?;
        json.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = CameraJson::from(self);
        let text = serde_json::to_string_pretty(&json)
            .map_err(|e| Error::Json { path: path.into(), message: e.to_string() })?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// On-disk camera format: focal, principal, 4x4 row-major pose, resolution.
#[derive(Debug, Serialize, Deserialize)]
struct CameraJson {
    focal: [f64; 2],
    principal: [f64; 2],
    pose: [[f64; 4]; 4],
    resolution: [usize; 2],
}

impl From<&Camera> for CameraJson {
    fn from(cam: &Camera) -> CameraJson {
        let mut pose = [[0.0; 4]; 4];
        for r in 0..3 {
            for c in 0..3 {
                pose[r][c] = cam.rotation[(r, c)];
            }
            pose[r][3] = cam.translation[r];
        }
        pose[3][3] = 1.0;
        CameraJson {
            focal: [cam.focal.0, cam.focal.1],
            principal: [cam.principal.0, cam.principal.1],
            pose,
            resolution: [cam.resolution.0, cam.resolution.1],
        }
    }
}

impl TryFrom<CameraJson> for Camera {
    type Error = Error;

    fn try_from(json: CameraJson) -> Result<Camera> {
        let p = json.pose;
        if p[3] != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidCamera("pose last row must be [0,0,0,1]".into()));
        }
        let rotation = Matrix3::new(
            p[0][0], p[0][1], p[0][2], //
            p[1][0], p[1][1], p[1][2], //
            p[2][0], p[2][1], p[2][2],
        );
        let translation = Vector3::new(p[0][3], p[1][3], p[2][3]);
        Camera::new(
            (json.focal[0], json.focal[1]),
            (json.principal[0], json.principal[1]),
            rotation,
            translation,
            (json.resolution[0], json.resolution[1]),
        )
    }
}
