use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::baseline::{baseline_law, BaselineLimits, SlewLimiter, DEFAULT_BASELINE_GAIN, DEFAULT_SLEW_RATE};
use super::components::{median, pixel_median};
use super::pid::{PidGains, PidState};
use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{CameraModel, DepthImage, ImageSize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    /// Minimum fraction of valid pixels required for clustering.
    pub min_valid_fraction: f64,
    /// Clusters closer than this many pooled standard deviations are one mode.
    pub separation_factor: f64,
    /// Contour gradient threshold as a fraction of the mean separation.
    pub contour_fraction: f64,
    /// Mask overlap below which tracking falls back to detection.
    pub min_overlap: f64,
    pub max_iterations: usize,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            min_valid_fraction: 0.2,
            separation_factor: 3.0,
            contour_fraction: 0.5,
            min_overlap: 0.3,
            max_iterations: 100,
        }
    }
}

impl GapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_valid_fraction) || !(0.0..=1.0).contains(&self.min_overlap) {
            return Err(Error::invalid("gap fractions must lie in [0, 1]"));
        }
        ensure_positive("separation factor", self.separation_factor)?;
        ensure_positive("contour fraction", self.contour_fraction)?;
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cluster {
    Foreground,
    Background,
}

/// Near/far split of a gap scene and the point the policy aligns with.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapState {
    pub size: ImageSize,
    /// Row-major indices of the near cluster.
    pub foreground: Vec<usize>,
    /// Row-major indices of the far cluster.
    pub background: Vec<usize>,
    /// Pixels on a depth edge between the clusters.
    pub contour: Vec<usize>,
    pub foreground_mean: f64,
    pub background_mean: f64,
    pub pooled_std: f64,
    /// Median pixel of the larger cluster.
    pub safest_point: Vector2<f64>,
    pub safest_cluster: Cluster,
    /// Depths of the contour pixels on the near side.
    pub contour_depths: Vec<f64>,
}

impl GapState {
    pub fn separation(&self) -> f64 {
        self.background_mean - self.foreground_mean
    }

    pub fn cluster(&self, which: Cluster) -> &[usize] {
        match which {
            Cluster::Foreground => &self.foreground,
            Cluster::Background => &self.background,
        }
    }

    /// Median of the near-side contour depths, the distance to the gap rim.
    pub fn rim_depth(&self) -> Option<f64> {
        if self.contour_depths.is_empty() {
            None
        } else {
            Some(median(&mut self.contour_depths.clone()))
        }
    }

    /// Background mask as a dense boolean grid.
    pub fn background_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.size.pixel_count()];
        for &i in &self.background {
            m[i] = true;
        }
        m
    }
}

fn check_valid(depth: &DepthImage, config: &GapConfig) -> Result<()> {
    let total = depth.size().pixel_count();
    let valid = depth.valid_count();
    if (valid as f64) < config.min_valid_fraction * total as f64 || valid < 2 {
        return Err(Error::InsufficientData { valid, total });
    }
    Ok(())
}

/// Lloyd iterations for two means on a line from the given starting means.
fn two_means(values: &[f64], mut lo: f64, mut hi: f64, max_iter: usize) -> (f64, f64) {
    for _ in 0..max_iter {
        let split = (lo + hi) / 2.0;
        let (mut s0, mut n0, mut s1, mut n1) = (0.0, 0usize, 0.0, 0usize);
        for &v in values {
            if v <= split {
                s0 += v;
                n0 += 1;
            } else {
                s1 += v;
                n1 += 1;
            }
        }
        if n0 == 0 || n1 == 0 {
            break;
        }
        let (nlo, nhi) = (s0 / n0 as f64, s1 / n1 as f64);
        if nlo == lo && nhi == hi {
            break;
        }
        lo = nlo;
        hi = nhi;
    }
    (lo, hi)
}

fn build_state(depth: &DepthImage, lo: f64, hi: f64, config: &GapConfig) -> Result<GapState> {
    let size = depth.size();
    let split = (lo + hi) / 2.0;
    let mut foreground = Vec::new();
    let mut background = Vec::new();
    for i in 0..size.pixel_count() {
        if let Some(z) = depth.get_index(i) {
            if z <= split {
                foreground.push(i);
            } else {
                background.push(i);
            }
        }
    }
    let spread = |px: &[usize]| -> (f64, f64) {
        let n = px.len() as f64;
        let mean = px.iter().map(|&i| depth.values()[i]).sum::<f64>() / n;
        let ss = px.iter().map(|&i| (depth.values()[i] - mean).powi(2)).sum::<f64>();
        (mean, ss)
    };
    if foreground.is_empty() || background.is_empty() {
        return Err(Error::NoGap {
            separation: 0.0,
            spread: 0.0,
        });
    }
    let (mf, ssf) = spread(&foreground);
    let (mb, ssb) = spread(&background);
    let pooled = ((ssf + ssb) / (foreground.len() + background.len()) as f64).sqrt();
    let separation = mb - mf;
    if !(separation > 0.0) || separation < config.separation_factor * pooled {
        return Err(Error::NoGap {
            separation,
            spread: pooled,
        });
    }

    let threshold = config.contour_fraction * separation;
    let (w, h) = (size.width, size.height);
    let mut contour = Vec::new();
    let mut contour_depths = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let Some(z) = depth.get(x, y) else { continue };
            let mut grad: f64 = 0.0;
            let mut probe = |nx: usize, ny: usize| {
                if let Some(n) = depth.get(nx, ny) {
                    grad = grad.max((n - z).abs());
                }
            };
            if x > 0 {
                probe(x - 1, y);
            }
            if x + 1 < w {
                probe(x + 1, y);
            }
            if y > 0 {
                probe(x, y - 1);
            }
            if y + 1 < h {
                probe(x, y + 1);
            }
            if grad > threshold {
                contour.push(y * w + x);
                if z <= split {
                    contour_depths.push(z);
                }
            }
        }
    }

    let safest_cluster = if foreground.len() >= background.len() {
        Cluster::Foreground
    } else {
        Cluster::Background
    };
    let chosen = match safest_cluster {
        Cluster::Foreground => &foreground,
        Cluster::Background => &background,
    };
    let (sx, sy) = pixel_median(chosen, w);
    Ok(GapState {
        size,
        foreground,
        background,
        contour,
        foreground_mean: mf,
        background_mean: mb,
        pooled_std: pooled,
        safest_point: Vector2::new(sx, sy),
        safest_cluster,
        contour_depths,
    })
}

/// Splits valid depths into near and far clusters by 2-means started at the
/// extreme values.
pub fn detect_gap(depth: &DepthImage, config: &GapConfig) -> Result<GapState> {
    check_valid(depth, config)?;
    let values: Vec<f64> = depth.iter_valid().map(|(_, _, z)| z).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::NoGap {
            separation: 0.0,
            spread: 0.0,
        });
    }
    let (lo, hi) = two_means(&values, lo, hi, config.max_iterations);
    build_state(depth, lo, hi, config)
}

fn overlap(a: &[usize], b: &[usize]) -> f64 {
    // both sorted
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - common;
    if union == 0 {
        1.0
    } else {
        common as f64 / union as f64
    }
}

/// Re-clusters from the previous means and checks that both masks overlap
/// their predecessors; otherwise runs [`detect_gap`] afresh.
pub fn track_gap(previous: &GapState, depth: &DepthImage, config: &GapConfig) -> Result<GapState> {
    check_valid(depth, config)?;
    if depth.size() != previous.size {
        return Err(Error::invalid("depth image size changed between frames"));
    }
    let values: Vec<f64> = depth.iter_valid().map(|(_, _, z)| z).collect();
    let (lo, hi) = two_means(
        &values,
        previous.foreground_mean,
        previous.background_mean,
        config.max_iterations,
    );
    match build_state(depth, lo, hi, config) {
        Ok(state)
            if overlap(&state.foreground, &previous.foreground) >= config.min_overlap
                && overlap(&state.background, &previous.background) >= config.min_overlap =>
        {
            Ok(state)
        }
        Ok(_) | Err(Error::NoGap { .. }) => detect_gap(depth, config),
        Err(e) => Err(e),
    }
}

/// Which pixel the gap policy centres on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapTarget {
    /// The safest point, the median of the larger cluster.
    #[default]
    SafestPoint,
    /// The median of the far cluster, i.e. the opening itself.
    Aperture,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPolicyConfig {
    pub gap: GapConfig,
    pub target: GapTarget,
    pub gains: PidGains,
    pub baseline_gain: f64,
    pub limits: BaselineLimits,
    pub slew_rate: f64,
    /// Forward approach speed, m/s.
    pub forward_speed: f64,
    /// Lateral speed bound, m/s.
    pub max_lateral_speed: f64,
    pub dt: f64,
}

impl Default for GapPolicyConfig {
    fn default() -> Self {
        Self {
            gap: GapConfig::default(),
            target: GapTarget::default(),
            gains: PidGains::default(),
            baseline_gain: DEFAULT_BASELINE_GAIN,
            limits: BaselineLimits::default(),
            slew_rate: DEFAULT_SLEW_RATE,
            forward_speed: 0.3,
            max_lateral_speed: 0.3,
            dt: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapCommand {
    /// Camera-frame velocity (x right, y down, z forward), m/s.
    pub velocity: Vector3<f64>,
    pub baseline: f64,
    /// Ratcheted rim depth driving the baseline.
    pub z_ref: Option<f64>,
    pub detected: bool,
    pub redetected: bool,
}

/// Aligns the camera with the safest point while approaching, and shrinks
/// the baseline with the closest rim depth seen so far.
#[derive(Clone, Debug)]
pub struct GapPolicy {
    config: GapPolicyConfig,
    pid: PidState,
    slew: SlewLimiter,
    state: Option<GapState>,
    z_ref: Option<f64>,
}

impl GapPolicy {
    pub fn new(config: GapPolicyConfig, initial_baseline: f64) -> Result<Self> {
        config.gap.validate()?;
        ensure_positive("baseline gain", config.baseline_gain)?;
        ensure_positive("forward speed", config.forward_speed)?;
        ensure_positive("lateral speed bound", config.max_lateral_speed)?;
        Ok(Self {
            pid: PidState::new(config.gains, config.dt, 1.0)?,
            slew: SlewLimiter::new(config.slew_rate, config.limits.clamp(initial_baseline))?,
            config,
            state: None,
            z_ref: None,
        })
    }

    pub fn state(&self) -> Option<&GapState> {
        self.state.as_ref()
    }

    pub fn step(&mut self, depth: &DepthImage, camera: &CameraModel) -> Result<GapCommand> {
        let result = match &self.state {
            Some(prev) => track_gap(prev, depth, &self.config.gap).map(|s| (s, false)),
            None => detect_gap(depth, &self.config.gap).map(|s| (s, true)),
        };
        let (detected, redetected) = match result {
            Ok((state, fresh)) => {
                self.state = Some(state);
                (true, fresh)
            }
            Err(Error::NoGap { .. } | Error::InsufficientData { .. }) => {
                self.state = None;
                (false, false)
            }
            Err(e) => return Err(e),
        };

        let mut velocity = Vector3::new(0.0, 0.0, self.config.forward_speed);
        if let Some(state) = &self.state {
            let c = Vector2::new(camera.intrinsics.cx, camera.intrinsics.cy);
            let aim = match self.config.target {
                GapTarget::SafestPoint => state.safest_point,
                GapTarget::Aperture => {
                    let (x, y) = pixel_median(&state.background, state.size.width);
                    Vector2::new(x, y)
                }
            };
            let offset = (aim - c) / camera.intrinsics.fx;
            let u = self.pid.step(&Vector3::new(offset.x, offset.y, 0.0));
            let lim = self.config.max_lateral_speed;
            velocity.x = u.x.clamp(-lim, lim);
            velocity.y = u.y.clamp(-lim, lim);
            if let Some(z) = state.rim_depth() {
                self.z_ref = Some(self.z_ref.map_or(z, |r| r.min(z)));
            }
        }
        let target = match self.z_ref {
            Some(z) => baseline_law(z, self.config.baseline_gain, &self.config.limits)?,
            None => self.slew.current(),
        };
        let baseline = self.slew.step(target.min(self.slew.current()), self.config.dt);
        Ok(GapCommand {
            velocity,
            baseline,
            z_ref: self.z_ref,
            detected,
            redetected,
        })
    }
}
