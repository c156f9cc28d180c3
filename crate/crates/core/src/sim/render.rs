use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::block_match::GrayImage;
use super::scene::{Scene, Shape};
use super::texture::Texture;
use crate::error::Result;
use crate::geometry::{DepthImage, RayGrid};

/// Camera centre and axes (columns x, y, z) in world coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    pub position: Vector3<f64>,
    pub axes: Matrix3<f64>,
}

impl CameraPose {
    pub fn to_camera(&self, world: &Vector3<f64>) -> Vector3<f64> {
        self.axes.transpose() * (world - self.position)
    }

    pub fn to_world(&self, camera: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.axes * camera
    }

    /// The same orientation moved by `offset` camera-frame metres.
    pub fn shifted(&self, offset: &Vector3<f64>) -> Self {
        Self {
            position: self.to_world(offset),
            axes: self.axes,
        }
    }
}

/// Ray-cast result for one camera.
#[derive(Clone, Debug)]
pub struct Render {
    pub depth: DepthImage,
    /// Index of the scene object seen at each pixel.
    pub object: Vec<Option<usize>>,
    /// The camera centre lies inside a solid; every pixel is invalid.
    pub contained: bool,
    pub pose: CameraPose,
    pub time: f64,
}

impl Render {
    /// World point seen at pixel index `i`.
    pub fn world_point(&self, rays: &RayGrid, i: usize) -> Option<Vector3<f64>> {
        let z = self.depth.get_index(i)?;
        Some(self.pose.to_world(&(rays.rays()[i] * z)))
    }
}

fn cast_all(pose: &CameraPose, rays: &RayGrid, shapes: &[Shape]) -> Vec<Option<(f64, usize)>> {
    rays.rays()
        .par_iter()
        .map(|r| Scene::cast(shapes, &pose.position, &(pose.axes * r)))
        .collect()
}

/// Per-pixel z-depth of the nearest surface along each ray, with moving
/// objects posed at `time`. Rays in the grid have unit forward component,
/// so the ray parameter is the depth.
pub fn render_depth(scene: &Scene, pose: &CameraPose, rays: &RayGrid, time: f64) -> Render {
    let size = rays.size();
    let mut depth = DepthImage::invalid(size);
    let mut object = vec![None; size.pixel_count()];
    let contained = scene.contains_point(&pose.position, time);
    if !contained {
        let shapes = scene.snapshot(time);
        for (i, hit) in cast_all(pose, rays, &shapes).into_iter().enumerate() {
            if let Some((s, id)) = hit {
                depth.set_index(i, Some(s));
                object[i] = Some(id);
            }
        }
    }
    Render {
        depth,
        object,
        contained,
        pose: *pose,
        time,
    }
}

/// Procedurally textured grey image; texture is attached to each object so
/// that it moves with it. Misses render as 0.
pub fn render_intensity(
    scene: &Scene,
    pose: &CameraPose,
    rays: &RayGrid,
    time: f64,
    texture: &Texture,
) -> Result<GrayImage> {
    let size = rays.size();
    if scene.contains_point(&pose.position, time) {
        return GrayImage::new(size, vec![0.0; size.pixel_count()]);
    }
    let shapes = scene.snapshot(time);
    let values = rays
        .rays()
        .par_iter()
        .map(|r| {
            let d = pose.axes * r;
            match Scene::cast(&shapes, &pose.position, &d) {
                Some((s, id)) => {
                    let p = pose.position + d * s - scene.objects()[id].displacement(time);
                    texture.sample(&p, id as u64)
                }
                None => 0.0,
            }
        })
        .collect();
    GrayImage::new(size, values)
}
