use nalgebra::{Vector2, Vector3};
use serde::Serialize;

use super::components::connected_components;
use crate::error::Result;
use crate::geometry::{CameraModel, DepthImage, ImageSize};

/// Inclusive pixel rectangle inside the image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Neighborhood {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Neighborhood {
    /// Square of side `2 half + 1` centred on `center`, clipped to the image.
    /// A centre outside the frame is first moved to the nearest frame pixel.
    pub fn around(center: Vector2<f64>, half: usize, size: ImageSize) -> Self {
        let cx = center.x.round().clamp(0.0, (size.width - 1) as f64) as usize;
        let cy = center.y.round().clamp(0.0, (size.height - 1) as f64) as usize;
        Self {
            x0: cx.saturating_sub(half),
            y0: cy.saturating_sub(half),
            x1: (cx + half).min(size.width - 1),
            y1: (cy + half).min(size.height - 1),
        }
    }

    pub fn full(size: ImageSize) -> Self {
        Self {
            x0: 0,
            y0: 0,
            x1: size.width - 1,
            y1: size.height - 1,
        }
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }
}

/// Pixel toward which a camera-frame direction points. Directions that do
/// not project in front of the camera map far outside the frame on their
/// side, so that [`Neighborhood::around`] anchors at that edge.
pub fn goal_pixel(camera: &CameraModel, direction: &Vector3<f64>) -> Vector2<f64> {
    if direction.z > 0.0 {
        if let Some(p) = camera.project_point(direction) {
            return p;
        }
    }
    let c = Vector2::new(camera.intrinsics.cx, camera.intrinsics.cy);
    let lateral = direction.xy();
    let lateral = if lateral.norm() > 0.0 {
        lateral.normalize()
    } else {
        Vector2::x()
    };
    c + lateral * 1e6
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FreeSpace {
    /// Unit camera-frame ray through the chosen free region.
    Free {
        direction: Vector3<f64>,
        centroid: Vector2<f64>,
        z_close: Option<f64>,
    },
    /// Nothing in the neighbourhood is beyond the clearance depth.
    Blocked { z_close: Option<f64> },
}

impl FreeSpace {
    pub fn z_close(&self) -> Option<f64> {
        match *self {
            FreeSpace::Free { z_close, .. } | FreeSpace::Blocked { z_close } => z_close,
        }
    }

    pub fn direction(&self) -> Option<Vector3<f64>> {
        match *self {
            FreeSpace::Free { direction, .. } => Some(direction),
            FreeSpace::Blocked { .. } => None,
        }
    }
}

/// Ray through the centroid of the largest 4-connected region of `N` whose
/// depth exceeds `clearance` (invalid pixels count as free), and the minimum
/// valid depth in `N`. Equal-sized regions are ranked by centroid distance to
/// `goal`.
pub fn free_space_direction(
    depth: &DepthImage,
    camera: &CameraModel,
    goal: Vector2<f64>,
    nbhd: &Neighborhood,
    clearance: f64,
) -> Result<FreeSpace> {
    let (nw, nh) = (nbhd.width(), nbhd.height());
    let mut mask = vec![false; nw * nh];
    let mut z_close: Option<f64> = None;
    for y in nbhd.y0..=nbhd.y1 {
        for x in nbhd.x0..=nbhd.x1 {
            let d = depth.get(x, y);
            if let Some(z) = d {
                z_close = Some(z_close.map_or(z, |m: f64| m.min(z)));
            }
            mask[(y - nbhd.y0) * nw + (x - nbhd.x0)] = d.is_none_or(|z| z > clearance);
        }
    }
    let comps = connected_components(&mask, ImageSize::new(nw, nh));
    let to_image = |c: (f64, f64)| Vector2::new(c.0 + nbhd.x0 as f64, c.1 + nbhd.y0 as f64);
    let best = comps.iter().max_by(|a, b| {
        a.len().cmp(&b.len()).then_with(|| {
            let da = (to_image(a.centroid) - goal).norm_squared();
            let db = (to_image(b.centroid) - goal).norm_squared();
            db.total_cmp(&da)
        })
    });
    let Some(best) = best else {
        return Ok(FreeSpace::Blocked { z_close });
    };
    let centroid = to_image(best.centroid);
    Ok(FreeSpace::Free {
        direction: camera.ray(centroid)?.normalize(),
        centroid,
        z_close,
    })
}
