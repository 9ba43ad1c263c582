//! Pinhole camera model, pixel back-projection, and thermal painting of
//! point clouds.
//!
//! A pixel `(x, y)` at depth `d` maps to the camera-frame point
//! `d * K^-1 [x, y, 1]^T`, which the camera pose then carries into the world
//! frame. Pixel centers sit on integer coordinates.

use nalgebra::{IsometryMatrix3, Matrix3, Point2, Point3, Rotation3, Translation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::PointCloud;

/// Native resolution of the wrist thermal camera.
pub const THERMAL_WIDTH: u32 = 160;
pub const THERMAL_HEIGHT: u32 = 120;

/// Default visibility tolerance between projected and observed depth, meters.
pub const DEFAULT_DEPTH_TOLERANCE: f64 = 0.005;

const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("pixel ({x}, {y}) outside {width}x{height} image")]
    PixelOutOfBounds { x: f64, y: f64, width: u32, height: u32 },
    #[error("point lies behind the camera (camera-frame depth {0})")]
    BehindCamera(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
}

/// How the stored pose relates camera and world frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseConvention {
    /// Pose maps camera-frame points into the world (camera pose in world).
    #[default]
    CamToWorld,
    /// Pose maps world points into the camera frame; its inverse is applied
    /// when back-projecting.
    WorldToCam,
}

/// Zero-skew pinhole intrinsics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Reads `K` from a 3x3 pinhole matrix; skew and the bottom row must be canonical.
    pub fn from_matrix(k: &Matrix3<f64>) -> Result<Self, ProjectionError> {
        let canonical = k[(0, 1)] == 0.0 && k[(1, 0)] == 0.0 && k[(2, 0)] == 0.0 && k[(2, 1)] == 0.0 && k[(2, 2)] == 1.0;
        if !canonical {
            return Err(ProjectionError::InvalidCamera("K must be [fx 0 cx; 0 fy cy; 0 0 1]".into()));
        }
        Ok(Self { fx: k[(0, 0)], fy: k[(1, 1)], cx: k[(0, 2)], cy: k[(1, 2)] })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub intrinsics: Intrinsics,
    pub pose: IsometryMatrix3<f64>,
    pub width: u32,
    pub height: u32,
    pub convention: PoseConvention,
}

impl CameraModel {
    pub fn new(
        intrinsics: Intrinsics,
        pose: IsometryMatrix3<f64>,
        width: u32,
        height: u32,
        convention: PoseConvention,
    ) -> Result<Self, ProjectionError> {
        let Intrinsics { fx, fy, cx, cy } = intrinsics;
        let bad = |m: String| Err(ProjectionError::InvalidCamera(m));
        if !(fx > 0.0 && fy > 0.0) {
            return bad(format!("focal lengths must be positive (fx={fx}, fy={fy})"));
        }
        if !(0.0..f64::from(width)).contains(&cx) || !(0.0..f64::from(height)).contains(&cy) {
            return bad(format!("principal point ({cx}, {cy}) outside {width}x{height}"));
        }
        let r = pose.rotation.matrix();
        let ortho_err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(ortho_err < ROTATION_TOLERANCE) || r.determinant() <= 0.0 {
            return bad(format!("rotation is not proper orthonormal (|RtR - I| = {ortho_err:e})"));
        }
        if !pose.translation.vector.iter().all(|v| v.is_finite()) {
            return bad("translation must be finite".into());
        }
        Ok(Self { intrinsics, pose, width, height, convention })
    }

    /// Transform taking camera-frame points into the world frame.
    pub fn cam_to_world(&self) -> IsometryMatrix3<f64> {
        match self.convention {
            PoseConvention::CamToWorld => self.pose,
            PoseConvention::WorldToCam => self.pose.inverse(),
        }
    }

    pub fn world_to_cam(&self) -> IsometryMatrix3<f64> {
        match self.convention {
            PoseConvention::CamToWorld => self.pose.inverse(),
            PoseConvention::WorldToCam => self.pose,
        }
    }

    /// The same camera after moving the whole scene by `t` (world frame).
    pub fn transformed(&self, t: &IsometryMatrix3<f64>) -> Self {
        let pose = match self.convention {
            PoseConvention::CamToWorld => t * self.pose,
            PoseConvention::WorldToCam => self.pose * t.inverse(),
        };
        Self { pose, ..self.clone() }
    }

    /// Nearest pixel for continuous coordinates, if inside the image.
    pub fn pixel_index(&self, pixel: &Point2<f64>) -> Option<(usize, usize)> {
        nearest_pixel(pixel, self.width, self.height)
    }
}

fn nearest_pixel(pixel: &Point2<f64>, width: u32, height: u32) -> Option<(usize, usize)> {
    let col = (pixel.x + 0.5).floor();
    let row = (pixel.y + 0.5).floor();
    let inside = (0.0..f64::from(width)).contains(&col) && (0.0..f64::from(height)).contains(&row);
    inside.then(|| (col as usize, row as usize))
}

/// World-frame point seen at `pixel` with camera-frame depth `depth`.
pub fn backproject(cam: &CameraModel, pixel: &Point2<f64>, depth: f64) -> Result<Point3<f64>, ProjectionError> {
    if !(depth > 0.0) {
        return Err(ProjectionError::NonPositiveDepth(depth));
    }
    if cam.pixel_index(pixel).is_none() {
        return Err(ProjectionError::PixelOutOfBounds { x: pixel.x, y: pixel.y, width: cam.width, height: cam.height });
    }
    let k = &cam.intrinsics;
    let ray = Vector3::new((pixel.x - k.cx) / k.fx, (pixel.y - k.cy) / k.fy, 1.0);
    Ok(cam.cam_to_world() * Point3::from(ray * depth))
}

/// Continuous pixel coordinates and camera-frame depth of a world point.
/// The pixel is not bounds-checked.
pub fn project(cam: &CameraModel, point: &Point3<f64>) -> Result<(Point2<f64>, f64), ProjectionError> {
    let p = cam.world_to_cam() * point;
    if !(p.z > 0.0) {
        return Err(ProjectionError::BehindCamera(p.z));
    }
    let k = &cam.intrinsics;
    let pixel = Point2::new(k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy);
    Ok((pixel, p.z))
}

/// Single-channel image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl Raster {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self, ProjectionError> {
        if values.len() != width as usize * height as usize {
            return Err(ProjectionError::InvalidImage(format!(
                "{} values for a {width}x{height} image",
                values.len()
            )));
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: u32, height: u32, value: f64) -> Self {
        Self { width, height, values: vec![value; width as usize * height as usize] }
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width as usize + col]
    }

    pub fn set(&mut self, col: usize, row: usize, v: f64) {
        self.values[row * self.width as usize + col] = v;
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

/// Temperatures in °C; every value finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalImage(pub Raster);

impl ThermalImage {
    pub fn new(raster: Raster) -> Result<Self, ProjectionError> {
        if let Some(v) = raster.values.iter().find(|v| !v.is_finite()) {
            return Err(ProjectionError::InvalidImage(format!("non-finite temperature {v}")));
        }
        Ok(Self(raster))
    }

    /// Smallest and largest temperature in the image.
    pub fn range(&self) -> (f64, f64) {
        self.0.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Camera-frame z depth in meters; 0 marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage(pub Raster);

impl DepthImage {
    pub fn new(raster: Raster) -> Result<Self, ProjectionError> {
        if let Some(v) = raster.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(ProjectionError::InvalidImage(format!("depth {v} is not a finite non-negative value")));
        }
        Ok(Self(raster))
    }
}

/// Samples the thermal image onto every cloud point visible from `cam`.
///
/// A point is painted when its nearest pixel is in view, the depth image is
/// valid there, and the projected depth agrees with it to `depth_tolerance`.
/// Other points keep whatever `thermal_raw` they already had.
pub fn paint_thermal(
    cloud: &PointCloud,
    cam: &CameraModel,
    thermal: &ThermalImage,
    depth: &DepthImage,
    depth_tolerance: f64,
) -> Result<PointCloud, ProjectionError> {
    if thermal.0.dims() != depth.0.dims() {
        return Err(ProjectionError::DimensionMismatch(format!(
            "thermal {:?} vs depth {:?}",
            thermal.0.dims(),
            depth.0.dims()
        )));
    }
    if thermal.0.dims() != (cam.width, cam.height) {
        return Err(ProjectionError::DimensionMismatch(format!(
            "images {:?} vs camera {}x{}",
            thermal.0.dims(),
            cam.width,
            cam.height
        )));
    }
    let mut out = cloud.clone();
    for point in &mut out.points {
        let Ok((pixel, z)) = project(cam, &point.position) else { continue };
        let Some((col, row)) = cam.pixel_index(&pixel) else { continue };
        let observed = depth.0.get(col, row);
        if observed > 0.0 && (z - observed).abs() <= depth_tolerance {
            point.thermal_raw = Some(thermal.0.get(col, row));
        }
    }
    Ok(out)
}

/// Maps a temperature onto a cyan-to-red ramp over `[t_min, t_max]`.
///
/// Under the default score weights, `t_min` scores -255, `t_max` +255 and the
/// midpoint is neutral.
pub fn thermal_to_rgb(t: f64, t_min: f64, t_max: f64) -> [u8; 3] {
    let span = t_max - t_min;
    let s = if span > 0.0 { ((t - t_min) / span).clamp(0.0, 1.0) } else { 0.5 };
    let hot = (255.0 * s).round() as u8;
    [hot, 255 - hot, 255 - hot]
}

/// Recolors every point carrying a temperature with [`thermal_to_rgb`].
pub fn colorize_thermal(cloud: &PointCloud, t_min: f64, t_max: f64) -> PointCloud {
    let mut out = cloud.clone();
    for p in &mut out.points {
        if let Some(t) = p.thermal_raw {
            p.rgb = thermal_to_rgb(t, t_min, t_max);
        }
    }
    out
}

/// Camera description as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraFile {
    #[serde(rename = "K")]
    pub k: [f64; 9],
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub pose_convention: PoseConvention,
}

impl TryFrom<CameraFile> for CameraModel {
    type Error = ProjectionError;

    fn try_from(f: CameraFile) -> Result<Self, Self::Error> {
        let k = Intrinsics::from_matrix(&Matrix3::from_row_slice(&f.k))?;
        let r = Rotation3::from_matrix_unchecked(Matrix3::from_row_slice(&f.r));
        let pose = IsometryMatrix3::from_parts(Translation3::new(f.t[0], f.t[1], f.t[2]), r);
        CameraModel::new(k, pose, f.width, f.height, f.pose_convention)
    }
}

impl From<&CameraModel> for CameraFile {
    fn from(cam: &CameraModel) -> Self {
        let row_major = |m: &Matrix3<f64>| {
            let mut a = [0.0; 9];
            for r in 0..3 {
                for c in 0..3 {
                    a[3 * r + c] = m[(r, c)];
                }
            }
            a
        };
        let t = cam.pose.translation.vector;
        CameraFile {
            k: row_major(&cam.intrinsics.matrix()),
            r: row_major(cam.pose.rotation.matrix()),
            t: [t.x, t.y, t.z],
            width: cam.width,
            height: cam.height,
            pose_convention: cam.convention,
        }
    }
}
