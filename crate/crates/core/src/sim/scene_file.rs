//! Scene description files.
//!
//! ```toml
//! [bounds]                      # metres
//! min = [-10.0, -10.0, 0.0]
//! max = [10.0, 10.0, 4.0]
//!
//! [[object]]
//! type = "cylinder"
//! center = [3.0, 0.0]           # ground-plane axis position
//! base = 0.0
//! height = 3.0
//! radius = 0.2
//!
//! [[object]]
//! type = "box"
//! center = [5.0, 1.0, 0.5]
//! half_extents = [0.25, 0.25, 0.25]
//! yaw_deg = 45.0                # optional
//! waypoints = [{ t = 0.0, position = [5.0, 1.0, 0.5] }, { t = 10.0, position = [9.0, 1.0, 0.5] }]
//!
//! [[object]]
//! type = "wall"
//! center = [6.0, 0.0, 1.5]
//! normal = [-1.0, 0.0]          # horizontal; apertures use (u, v) = (along wall, up)
//! half_width = inf
//! half_height = inf
//! apertures = [[[-0.4, -0.3], [0.4, -0.3], [0.4, 0.3], [-0.4, 0.3]]]
//! ```
//!
//! Every object type accepts optional `waypoints` giving the reference point
//! (cylinder base centre, box centre, wall centre) over time in seconds.

use std::path::Path;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::scene::{Bounds, Cuboid, Cylinder, Polygon, Scene, SceneObject, Shape, Trajectory, Wall};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    bounds: RawBounds,
    #[serde(default)]
    object: Vec<RawObject>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    min: [f64; 3],
    max: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
struct RawWaypoint {
    t: f64,
    position: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawObject {
    Cylinder {
        center: [f64; 2],
        #[serde(default)]
        base: f64,
        height: f64,
        radius: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        waypoints: Vec<RawWaypoint>,
    },
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
        #[serde(default)]
        yaw_deg: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        waypoints: Vec<RawWaypoint>,
    },
    Wall {
        center: [f64; 3],
        normal: [f64; 2],
        half_width: f64,
        half_height: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        apertures: Vec<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        waypoints: Vec<RawWaypoint>,
    },
}

fn trajectory(waypoints: &[RawWaypoint]) -> Result<Option<Trajectory>> {
    if waypoints.is_empty() {
        return Ok(None);
    }
    Trajectory::new(
        waypoints
            .iter()
            .map(|w| (w.t, Vector3::from(w.position)))
            .collect(),
    )
    .map(Some)
}

fn raw_waypoints(t: &Option<Trajectory>) -> Vec<RawWaypoint> {
    t.as_ref().map_or_else(Vec::new, |t| {
        t.waypoints()
            .iter()
            .map(|(t, p)| RawWaypoint {
                t: *t,
                position: (*p).into(),
            })
            .collect()
    })
}

impl RawObject {
    fn build(&self) -> Result<SceneObject> {
        let (shape, waypoints) = match self {
            RawObject::Cylinder {
                center,
                base,
                height,
                radius,
                waypoints,
            } => (
                Shape::Cylinder(Cylinder::new(Vector2::from(*center), *base, *height, *radius)?),
                waypoints,
            ),
            RawObject::Box {
                center,
                half_extents,
                yaw_deg,
                waypoints,
            } => (
                Shape::Cuboid(Cuboid::new(
                    Vector3::from(*center),
                    Vector3::from(*half_extents),
                    yaw_deg.to_radians(),
                )?),
                waypoints,
            ),
            RawObject::Wall {
                center,
                normal,
                half_width,
                half_height,
                apertures,
                waypoints,
            } => {
                let apertures = apertures
                    .iter()
                    .map(|a| Polygon::new(a.iter().map(|v| Vector2::from(*v)).collect()))
                    .collect::<Result<Vec<_>>>()?;
                (
                    Shape::Wall(Wall::new(
                        Vector3::from(*center),
                        Vector2::from(*normal),
                        *half_width,
                        *half_height,
                        apertures,
                    )?),
                    waypoints,
                )
            }
        };
        Ok(SceneObject {
            shape,
            trajectory: trajectory(waypoints)?,
        })
    }

    fn from_object(o: &SceneObject) -> Self {
        let waypoints = raw_waypoints(&o.trajectory);
        match &o.shape {
            Shape::Cylinder(c) => RawObject::Cylinder {
                center: c.center.into(),
                base: c.base,
                height: c.height,
                radius: c.radius,
                waypoints,
            },
            Shape::Cuboid(b) => RawObject::Box {
                center: b.center.into(),
                half_extents: b.half_extents.into(),
                yaw_deg: b.yaw.to_degrees(),
                waypoints,
            },
            Shape::Wall(w) => RawObject::Wall {
                center: w.center.into(),
                normal: w.normal.into(),
                half_width: w.half_width,
                half_height: w.half_height,
                apertures: w
                    .apertures
                    .iter()
                    .map(|p| p.vertices.iter().map(|v| [v.x, v.y]).collect())
                    .collect(),
                waypoints,
            },
        }
    }
}

pub fn parse_scene_file(text: &str) -> Result<Scene> {
    let raw: RawScene = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let bounds = Bounds::new(Vector3::from(raw.bounds.min), Vector3::from(raw.bounds.max))?;
    let objects = raw
        .object
        .iter()
        .enumerate()
        .map(|(index, o)| {
            o.build().map_err(|e| Error::Record {
                index,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Scene::new(objects, bounds)
}

pub fn load_scene_file(path: impl AsRef<Path>) -> Result<Scene> {
    parse_scene_file(&std::fs::read_to_string(path)?)
}

pub fn scene_file_string(scene: &Scene) -> Result<String> {
    let b = scene.bounds();
    let raw = RawScene {
        bounds: RawBounds {
            min: b.min.into(),
            max: b.max.into(),
        },
        object: scene.objects().iter().map(RawObject::from_object).collect(),
    };
    toml::to_string(&raw).map_err(|e| Error::Parse(e.to_string()))
}
