use std::collections::VecDeque;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::baseline::{baseline_law, BaselineLimits, SlewLimiter, DEFAULT_BASELINE_GAIN, DEFAULT_SLEW_RATE};
use super::components::{connected_components, connected_regions, median};
use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{CameraModel, DepthImage, ImageSize, RayGrid};
use crate::sim::CameraPose;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImoConfig {
    /// Disparity uncertainty used for depth error bounds, px.
    pub disparity_error: f64,
    /// Residual added to the error bounds, m.
    pub residual_floor: f64,
    pub min_pixels: usize,
    /// Smallest depth gate around the object depth, m.
    pub depth_gate: f64,
    /// Bounding box growth between frames, px.
    pub search_margin: usize,
    /// Largest tolerated relative depth error `eps_z / Z`.
    pub accuracy: f64,
    /// Largest tolerated invalid fraction inside the search window.
    pub max_invalid_fraction: f64,
    /// Frame spacing used for detection, s.
    pub detection_window: f64,
    /// Largest disparity change of a tracked surface between frames, px.
    pub disparity_gate: f64,
    /// Largest disparity step between neighbours of one surface, px.
    pub surface_step: f64,
    /// Smallest share of unexplained pixels for a surface to be the object.
    pub min_moving_fraction: f64,
    pub baseline_gain: f64,
    pub limits: BaselineLimits,
    pub slew_rate: f64,
}

impl Default for ImoConfig {
    fn default() -> Self {
        Self {
            disparity_error: 0.5,
            residual_floor: 0.02,
            min_pixels: 12,
            depth_gate: 0.5,
            search_margin: 4,
            accuracy: 0.2,
            max_invalid_fraction: 0.5,
            detection_window: 1.0,
            disparity_gate: 1.0,
            surface_step: 1.0,
            min_moving_fraction: 0.5,
            baseline_gain: DEFAULT_BASELINE_GAIN,
            limits: BaselineLimits::default(),
            slew_rate: DEFAULT_SLEW_RATE,
        }
    }
}

impl ImoConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("disparity error", self.disparity_error)?;
        ensure_positive("depth gate", self.depth_gate)?;
        ensure_positive("accuracy", self.accuracy)?;
        ensure_positive("detection window", self.detection_window)?;
        ensure_positive("surface step", self.surface_step)?;
        ensure_positive("disparity gate", self.disparity_gate)?;
        if !(0.0..=1.0).contains(&self.min_moving_fraction) {
            return Err(Error::invalid("moving fraction must lie in [0, 1]"));
        }
        ensure_positive("baseline gain", self.baseline_gain)?;
        if !(self.residual_floor >= 0.0) || !(0.0..=1.0).contains(&self.max_invalid_fraction) {
            return Err(Error::invalid("residual floor and invalid fraction out of range"));
        }
        if self.min_pixels == 0 {
            return Err(Error::invalid("min_pixels must be > 0"));
        }
        Ok(())
    }

    fn eps(&self, z: f64, bf: f64) -> f64 {
        z * z * self.disparity_error / bf
    }

    fn gate(&self, z: f64, bf: f64) -> f64 {
        self.depth_gate.max(2.0 * self.eps(z, bf))
    }
}

/// One depth frame with the pose and `b f` it was taken with.
#[derive(Clone, Debug)]
pub struct DepthFrame {
    pub depth: DepthImage,
    pub pose: CameraPose,
    /// Baseline times focal length, m px.
    pub focal_baseline: f64,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImoDetection {
    pub mask: Vec<usize>,
    /// Inclusive `(x0, y0, x1, y1)`.
    pub bbox: (usize, usize, usize, usize),
    pub median_depth: f64,
}

/// The surface of `latest` made mostly of pixels whose depth is not
/// explained by ego-motion from `earlier`. Surfaces are regions whose
/// neighbouring disparities differ by at most `surface_step`.
/// `Ok(None)` is the no-object signal.
pub fn detect_imo(
    earlier: &DepthFrame,
    latest: &DepthFrame,
    camera: &CameraModel,
    rays: &RayGrid,
    config: &ImoConfig,
) -> Result<Option<ImoDetection>> {
    let size = rays.size();
    if earlier.depth.size() != size || latest.depth.size() != size {
        return Err(Error::invalid("depth frames must match the ray grid"));
    }
    ensure_positive("focal baseline", earlier.focal_baseline)?;
    ensure_positive("focal baseline", latest.focal_baseline)?;
    let (w, h) = (size.width, size.height);
    let mut flagged = vec![false; size.pixel_count()];
    for (i, flag) in flagged.iter_mut().enumerate() {
        let Some(z1) = latest.depth.get_index(i) else { continue };
        let world = latest.pose.to_world(&(rays.rays()[i] * z1));
        let c0 = earlier.pose.to_camera(&world);
        if c0.z <= 0.0 {
            continue;
        }
        let Some(p) = camera.project_point(&c0) else { continue };
        let (u, v) = (p.x.round(), p.y.round());
        if u < 0.0 || v < 0.0 || u >= w as f64 || v >= h as f64 {
            continue;
        }
        let (u, v) = (u as usize, v as usize);
        let mut best = f64::INFINITY;
        for y in v.saturating_sub(1)..=(v + 1).min(h - 1) {
            for x in u.saturating_sub(1)..=(u + 1).min(w - 1) {
                if let Some(z0) = earlier.depth.get(x, y) {
                    best = best.min((c0.z - z0).abs());
                }
            }
        }
        if best.is_finite() {
            let bound = config.eps(c0.z, earlier.focal_baseline)
                + config.eps(z1, latest.focal_baseline)
                + config.residual_floor;
            *flag = best > bound;
        }
    }
    let bf = latest.focal_baseline;
    let valid = latest.depth.mask();
    let z = latest.depth.values();
    let step = config.surface_step + 1e-9;
    let best = connected_regions(valid, size, |i, j| (bf / z[i] - bf / z[j]).abs() <= step)
        .into_iter()
        .filter_map(|c| {
            let moving = c.pixels.iter().filter(|&&i| flagged[i]).count();
            (moving >= config.min_pixels).then(|| (moving as f64 / c.len() as f64, c))
        })
        .filter(|(share, _)| *share >= config.min_moving_fraction)
        .max_by(|a, b| a.0.total_cmp(&b.0));
    let Some((_, core)) = best else {
        return Ok(None);
    };
    let mut depths: Vec<f64> = core.pixels.iter().map(|&i| z[i]).collect();
    Ok(Some(ImoDetection {
        median_depth: median(&mut depths),
        bbox: core.bbox,
        mask: core.pixels,
    }))
}

/// World position of an object seen at `pixels`: the mean viewing ray scaled
/// by the median depth. Returns the position and that depth.
pub fn object_estimate(
    pixels: &[usize],
    depth: &DepthImage,
    rays: &RayGrid,
    pose: &CameraPose,
) -> Option<(Vector3<f64>, f64)> {
    let mut depths: Vec<f64> = pixels.iter().filter_map(|&i| depth.get_index(i)).collect();
    if depths.is_empty() {
        return None;
    }
    let z = median(&mut depths);
    let ray = pixels.iter().map(|&i| rays.rays()[i]).sum::<Vector3<f64>>() / pixels.len() as f64;
    Some((pose.to_world(&(ray * z)), z))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImoTrack {
    pub mask: Vec<usize>,
    pub bbox: (usize, usize, usize, usize),
    /// `(time, world position)` samples.
    pub trajectory: Vec<(f64, Vector3<f64>)>,
    pub median_depth: f64,
    /// Baseline from the law at the median depth.
    pub baseline_command: f64,
}

impl ImoTrack {
    pub fn from_detection(det: ImoDetection, config: &ImoConfig) -> Result<Self> {
        Ok(Self {
            baseline_command: baseline_law(det.median_depth, config.baseline_gain, &config.limits)?,
            median_depth: det.median_depth,
            bbox: det.bbox,
            mask: det.mask,
            trajectory: Vec::new(),
        })
    }

    pub fn last_position(&self) -> Option<Vector3<f64>> {
        self.trajectory.last().map(|s| s.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossReason {
    /// Too few pixels near the expected depth.
    Vanished,
    /// Most of the search window has no valid depth.
    Unobservable,
    /// The depth error bound exceeds the accuracy threshold.
    Inaccurate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TrackUpdate {
    Tracked(ImoTrack),
    Lost { last: ImoTrack, reason: LossReason },
}

fn grown(bbox: (usize, usize, usize, usize), margin: usize, size: ImageSize) -> (usize, usize, usize, usize) {
    (
        bbox.0.saturating_sub(margin),
        bbox.1.saturating_sub(margin),
        (bbox.2 + margin).min(size.width - 1),
        (bbox.3 + margin).min(size.height - 1),
    )
}

/// Follows the object into a new frame: pixels inside the grown bounding box
/// within the depth gate of the last median depth, largest cluster kept.
pub fn track_imo(track: &ImoTrack, frame: &DepthFrame, rays: &RayGrid, config: &ImoConfig) -> Result<TrackUpdate> {
    let size = rays.size();
    if frame.depth.size() != size {
        return Err(Error::invalid("depth frame must match the ray grid"));
    }
    if let Some(&(t, _)) = track.trajectory.last() {
        if !(frame.time > t) {
            return Err(Error::invalid(format!("frame time {} does not follow {t}", frame.time)));
        }
    }
    let lost = |reason| {
        Ok(TrackUpdate::Lost {
            last: track.clone(),
            reason,
        })
    };
    let (x0, y0, x1, y1) = grown(track.bbox, config.search_margin, size);
    let bf = frame.focal_baseline;
    let gate = config.gate(track.median_depth, bf);
    let d_prev = bf / track.median_depth;
    let near = |z: f64| (z - track.median_depth).abs() <= gate || (bf / z - d_prev).abs() <= config.disparity_gate;
    let invalid = track.mask.iter().filter(|&&i| !frame.depth.mask()[i]).count();
    if invalid as f64 > config.max_invalid_fraction * track.mask.len() as f64 {
        return lost(LossReason::Unobservable);
    }
    let mut candidates = vec![false; size.pixel_count()];
    for y in y0..=y1 {
        for x in x0..=x1 {
            if let Some(z) = frame.depth.get(x, y) {
                candidates[y * size.width + x] = near(z);
            }
        }
    }
    let Some(best) = connected_components(&candidates, size)
        .into_iter()
        .max_by_key(|c| c.len())
        .filter(|c| c.len() >= config.min_pixels)
    else {
        return lost(LossReason::Vanished);
    };
    let Some((position, z)) = object_estimate(&best.pixels, &frame.depth, rays, &frame.pose) else {
        return lost(LossReason::Vanished);
    };
    if config.eps(z, frame.focal_baseline) / z > config.accuracy {
        return lost(LossReason::Inaccurate);
    }
    let mut next = track.clone();
    next.trajectory.push((frame.time, position));
    next.median_depth = z;
    next.baseline_command = baseline_law(z, config.baseline_gain, &config.limits)?;
    next.bbox = best.bbox;
    next.mask = best.pixels;
    Ok(TrackUpdate::Tracked(next))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImoCommand {
    pub baseline: f64,
    pub tracking: bool,
    pub detected: bool,
    pub loss: Option<LossReason>,
    pub median_depth: Option<f64>,
    pub position: Option<Vector3<f64>>,
    pub centroid: Option<Vector2<f64>>,
}

/// Detection over a sliding window, then frame-to-frame tracking, with the
/// baseline slewed toward the law at the tracked depth.
#[derive(Clone, Debug)]
pub struct ImoPolicy {
    config: ImoConfig,
    history: VecDeque<DepthFrame>,
    track: Option<ImoTrack>,
    slew: SlewLimiter,
}

impl ImoPolicy {
    pub fn new(config: ImoConfig, initial_baseline: f64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            slew: SlewLimiter::new(config.slew_rate, config.limits.clamp(initial_baseline))?,
            config,
            history: VecDeque::new(),
            track: None,
        })
    }

    pub fn track(&self) -> Option<&ImoTrack> {
        self.track.as_ref()
    }

    pub fn step(&mut self, frame: DepthFrame, camera: &CameraModel, rays: &RayGrid, dt: f64) -> Result<ImoCommand> {
        let mut detected = false;
        let mut loss = None;
        if let Some(track) = self.track.take() {
            match track_imo(&track, &frame, rays, &self.config)? {
                TrackUpdate::Tracked(t) => self.track = Some(t),
                TrackUpdate::Lost { reason, .. } => loss = Some(reason),
            }
        } else {
            let window = self.config.detection_window;
            while self.history.len() > 1 && frame.time - self.history[1].time >= window - 1e-9 {
                self.history.pop_front();
            }
            if let Some(old) = self.history.front().filter(|f| frame.time - f.time >= window - 1e-9) {
                if let Some(det) = detect_imo(old, &frame, camera, rays, &self.config)? {
                    let seed = ImoTrack::from_detection(det, &self.config)?;
                    let mut seeded = seed.clone();
                    seeded.trajectory.clear();
                    // the detection frame yields the first trajectory sample
                    if let Some((p, z)) = object_estimate(&seed.mask, &frame.depth, rays, &frame.pose) {
                        seeded.trajectory.push((frame.time, p));
                        seeded.median_depth = z;
                    }
                    if self.config.eps(seeded.median_depth, frame.focal_baseline) / seeded.median_depth
                        <= self.config.accuracy
                    {
                        detected = true;
                        self.track = Some(seeded);
                    }
                }
            }
        }
        if self.track.is_none() {
            self.history.push_back(frame.clone());
        } else {
            self.history.clear();
        }
        let target = match &self.track {
            Some(t) => t.baseline_command,
            None => self.slew.current(),
        };
        let baseline = self.slew.step(target, dt);
        let t = self.track.as_ref();
        Ok(ImoCommand {
            baseline,
            tracking: t.is_some(),
            detected,
            loss,
            median_depth: t.map(|t| t.median_depth),
            position: t.and_then(|t| t.last_position()),
            centroid: t.map(|t| {
                let w = rays.size().width;
                let n = t.mask.len() as f64;
                let (sx, sy) = t
                    .mask
                    .iter()
                    .fold((0.0, 0.0), |(a, b), &i| (a + (i % w) as f64, b + (i / w) as f64));
                Vector2::new(sx / n, sy / n)
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraIntrinsics;
    use nalgebra::Matrix3;

    const SIZE: ImageSize = ImageSize::new(48, 48);

    fn camera() -> CameraModel {
        CameraModel::pinhole(CameraIntrinsics::new(40.0, 40.0, 24.0, 24.0, 0.0).unwrap())
    }

    fn pose(z: f64) -> CameraPose {
        CameraPose {
            position: Vector3::new(0.0, 0.0, z),
            axes: Matrix3::identity(),
        }
    }

    /// Wall at 8 m with a square patch at `zb` covering pixels 16..32.
    fn frame(zb: Option<f64>, cam_z: f64, time: f64) -> DepthFrame {
        let v = (0..SIZE.pixel_count())
            .map(|i| {
                let (x, y) = (i % 48, i / 48);
                match zb {
                    Some(z) if (16..32).contains(&x) && (16..32).contains(&y) => z - cam_z,
                    _ => 8.0 - cam_z,
                }
            })
            .collect();
        DepthFrame {
            depth: DepthImage::from_values(SIZE, v).unwrap(),
            pose: pose(cam_z),
            focal_baseline: 20.0,
            time,
        }
    }

    #[test]
    fn static_scene_moving_observer() {
        let cam = camera();
        let rays = RayGrid::new(&cam, SIZE).unwrap();
        let a = frame(None, 0.0, 0.0);
        let b = frame(None, 0.5, 1.0);
        assert_eq!(detect_imo(&a, &b, &cam, &rays, &ImoConfig::default()).unwrap(), None);
    }

    #[test]
    fn receding_patch_detected() {
        let cam = camera();
        let rays = RayGrid::new(&cam, SIZE).unwrap();
        let a = frame(Some(2.0), 0.0, 0.0);
        let b = frame(Some(2.5), 0.0, 0.5);
        let det = detect_imo(&a, &b, &cam, &rays, &ImoConfig::default()).unwrap().unwrap();
        assert_eq!(det.mask.len(), 256);
        assert_eq!(det.bbox, (16, 16, 31, 31));
        assert_eq!(det.median_depth, 2.5);
    }

    #[test]
    fn empty_scene() {
        let cam = camera();
        let rays = RayGrid::new(&cam, SIZE).unwrap();
        let blank = |t| DepthFrame {
            depth: DepthImage::invalid(SIZE),
            pose: pose(0.0),
            focal_baseline: 20.0,
            time: t,
        };
        assert_eq!(detect_imo(&blank(0.0), &blank(1.0), &cam, &rays, &ImoConfig::default()).unwrap(), None);
    }

    #[test]
    fn stationary_track_is_constant() {
        let cam = camera();
        let rays = RayGrid::new(&cam, SIZE).unwrap();
        let cfg = ImoConfig::default();
        let det = detect_imo(&frame(Some(2.0), 0.0, 0.0), &frame(Some(2.5), 0.0, 0.5), &cam, &rays, &cfg)
            .unwrap()
            .unwrap();
        let mut track = ImoTrack::from_detection(det, &cfg).unwrap();
        for k in 1..6 {
            match track_imo(&track, &frame(Some(2.5), 0.0, 0.5 + k as f64 * 0.1), &rays, &cfg).unwrap() {
                TrackUpdate::Tracked(t) => track = t,
                other => panic!("{other:?}"),
            }
        }
        let first = track.trajectory[0].1;
        assert!(track.trajectory.iter().all(|s| (s.1 - first).norm() < 1e-12));
        assert!((first - Vector3::new(-0.5 / 40.0 * 2.5, -0.5 / 40.0 * 2.5, 2.5)).norm() < 1e-12);
        assert!((track.baseline_command - 0.3).abs() < 1e-12);
    }

    #[test]
    fn far_object_is_inaccurate() {
        let cam = camera();
        let rays = RayGrid::new(&cam, SIZE).unwrap();
        let cfg = ImoConfig::default();
        let det = ImoDetection {
            mask: (16..32).flat_map(|y| (16..32).map(move |x| y * SIZE.width + x)).collect(),
            bbox: (16, 16, 31, 31),
            median_depth: 7.0,
        };
        let track = ImoTrack::from_detection(det, &cfg).unwrap();
        // eps / Z = 7 * 0.5 / 10 = 0.35
        let mut f = frame(Some(7.0), 0.0, 1.0);
        f.focal_baseline = 10.0;
        assert!(matches!(
            track_imo(&track, &f, &rays, &cfg).unwrap(),
            TrackUpdate::Lost {
                reason: LossReason::Inaccurate,
                ..
            }
        ));
        let mut blind = frame(None, 0.0, 1.0);
        blind.depth = DepthImage::invalid(SIZE);
        assert!(matches!(
            track_imo(&track, &blind, &rays, &cfg).unwrap(),
            TrackUpdate::Lost {
                reason: LossReason::Unobservable,
                ..
            }
        ));
    }
}
