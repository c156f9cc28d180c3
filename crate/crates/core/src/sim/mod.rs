//! Analytic scenes, ray-cast depth rendering, synthetic disparity and a
//! simple block matcher.
//!
//! World axes are x east, y north, z up. Camera axes are x right, y down,
//! z forward; the camera looks along the observer heading.

mod block_match;
mod disparity;
mod grid_io;
mod render;
mod scene;
mod scene_file;
mod texture;

pub use block_match::{block_match, BlockMatchConfig, GrayImage};
pub use disparity::{synthesize_disparity, DisparityOptions};
pub use grid_io::{read_grid, read_grid_file, write_grid, write_grid_file};
pub use render::{render_depth, render_intensity, CameraPose, Render};
pub use scene::{
    Bounds, Cuboid, Cylinder, Polygon, Scene, SceneObject, Shape, Trajectory, Wall, HIT_EPSILON,
};
pub use scene_file::{load_scene_file, parse_scene_file, scene_file_string};
pub use texture::Texture;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kinematic point observer carrying the left camera.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObserverState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// Unit viewing direction.
    pub heading: Vector3<f64>,
    pub time: f64,
}

impl ObserverState {
    pub fn new(position: Vector3<f64>, heading: Vector3<f64>) -> Result<Self> {
        let n = heading.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("heading must be non-zero"));
        }
        let s = Self {
            position,
            velocity: Vector3::zeros(),
            heading: heading / n,
            time: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.heading.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("heading must be a unit vector"));
        }
        if self.heading.xy().norm() < 1e-9 {
            return Err(Error::DegenerateGeometry("heading is vertical".into()));
        }
        if self.position.iter().chain(self.velocity.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("observer state must be finite"));
        }
        Ok(())
    }

    /// Columns are the camera x (right), y (down), z (forward) axes in world
    /// coordinates.
    pub fn camera_axes(&self) -> Result<Matrix3<f64>> {
        self.validate()?;
        let z = self.heading;
        let x = z.cross(&Vector3::z()).normalize();
        let y = z.cross(&x);
        Ok(Matrix3::from_columns(&[x, y, z]))
    }

    pub fn camera_pose(&self) -> Result<CameraPose> {
        Ok(CameraPose {
            position: self.position,
            axes: self.camera_axes()?,
        })
    }

    pub fn rotated_about_z(&self, angle: f64) -> Self {
        let r = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), angle);
        Self {
            position: r * self.position,
            velocity: r * self.velocity,
            heading: r * self.heading,
            time: self.time,
        }
    }
}
