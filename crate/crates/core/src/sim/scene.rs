use nalgebra::{Rotation3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest ray parameter treated as a hit.
pub const HIT_EPSILON: f64 = 1e-9;

/// Vertical cylinder standing on `base`, closed by flat caps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    /// Axis position in the ground plane, metres.
    pub center: Vector2<f64>,
    /// Height of the bottom cap, metres.
    pub base: f64,
    pub height: f64,
    pub radius: f64,
}

/// Box rotated by `yaw` (radians) about the vertical axis; `yaw = 0` is axis aligned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub center: Vector3<f64>,
    pub half_extents: Vector3<f64>,
    pub yaw: f64,
}

/// Simple polygon in wall coordinates `(u, v)`: `u` runs along the wall,
/// `v` is height above the wall centre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Vector2<f64>>,
}

/// Vertical zero-thickness wall, optionally pierced by apertures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub center: Vector3<f64>,
    /// Horizontal unit normal.
    pub normal: Vector2<f64>,
    /// Extent along `u`; may be infinite.
    pub half_width: f64,
    /// Extent along `v`; may be infinite.
    pub half_height: f64,
    pub apertures: Vec<Polygon>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Cylinder(Cylinder),
    Cuboid(Cuboid),
    Wall(Wall),
}

/// Piecewise-linear path of a shape's reference point, held constant
/// outside the waypoint times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    waypoints: Vec<(f64, Vector3<f64>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub shape: Shape,
    pub trajectory: Option<Trajectory>,
}

/// Axis-aligned region the scene lives in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    objects: Vec<SceneObject>,
    bounds: Bounds,
}

fn rot_z(angle: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), angle)
}

/// Euclidean norm of the positive parts of per-axis excesses.
fn outside_distance(excess: &[f64]) -> f64 {
    excess.iter().map(|e| e.max(0.0).powi(2)).sum::<f64>().sqrt()
}

fn rotate2(v: Vector2<f64>, angle: f64) -> Vector2<f64> {
    let (s, c) = angle.sin_cos();
    Vector2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

impl Cylinder {
    pub fn new(center: Vector2<f64>, base: f64, height: f64, radius: f64) -> Result<Self> {
        let c = Self {
            center,
            base,
            height,
            radius,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.height > 0.0) || !self.center.iter().chain([&self.base]).all(|v| v.is_finite()) {
            return Err(Error::invalid("cylinder needs finite position and positive radius and height"));
        }
        Ok(())
    }

    fn contains(&self, p: &Vector3<f64>) -> bool {
        (p.xy() - self.center).norm_squared() < self.radius * self.radius
            && p.z > self.base
            && p.z < self.base + self.height
    }

    fn distance(&self, p: &Vector3<f64>) -> f64 {
        let radial = (p.xy() - self.center).norm() - self.radius;
        let vertical = (self.base - p.z).max(p.z - self.base - self.height);
        outside_distance(&[radial, vertical])
    }

    fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        let mut best = f64::INFINITY;
        let oc = o.xy() - self.center;
        let dxy = d.xy();
        let a = dxy.norm_squared();
        let top = self.base + self.height;
        if a > 0.0 {
            let b = oc.dot(&dxy);
            let c = oc.norm_squared() - self.radius * self.radius;
            let disc = b * b - a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                for s in [(-b - sq) / a, (-b + sq) / a] {
                    let z = o.z + s * d.z;
                    if s > HIT_EPSILON && s < best && z >= self.base && z <= top {
                        best = s;
                    }
                }
            }
        }
        if d.z != 0.0 {
            for cap in [self.base, top] {
                let s = (cap - o.z) / d.z;
                if s > HIT_EPSILON && s < best {
                    let p = oc + dxy * s;
                    if p.norm_squared() <= self.radius * self.radius {
                        best = s;
                    }
                }
            }
        }
        best.is_finite().then_some(best)
    }
}

impl Cuboid {
    pub fn new(center: Vector3<f64>, half_extents: Vector3<f64>, yaw: f64) -> Result<Self> {
        let b = Self {
            center,
            half_extents,
            yaw,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn axis_aligned(min: Vector3<f64>, max: Vector3<f64>) -> Result<Self> {
        Self::new((min + max) / 2.0, (max - min) / 2.0, 0.0)
    }

    fn validate(&self) -> Result<()> {
        if !self.half_extents.iter().all(|h| h.is_finite() && *h > 0.0)
            || !self.center.iter().all(|v| v.is_finite())
            || !self.yaw.is_finite()
        {
            return Err(Error::invalid("box needs a finite centre and positive half extents"));
        }
        Ok(())
    }

    fn to_local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        rot_z(-self.yaw) * (p - self.center)
    }

    fn distance(&self, p: &Vector3<f64>) -> f64 {
        let l = self.to_local(p);
        let excess: Vec<f64> = (0..3).map(|i| l[i].abs() - self.half_extents[i]).collect();
        outside_distance(&excess)
    }

    fn contains(&self, p: &Vector3<f64>) -> bool {
        let l = self.to_local(p);
        (0..3).all(|i| l[i].abs() < self.half_extents[i])
    }

    fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        let lo = self.to_local(o);
        let ld = rot_z(-self.yaw) * d;
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for i in 0..3 {
            let h = self.half_extents[i];
            if ld[i] == 0.0 {
                if lo[i].abs() > h {
                    return None;
                }
                continue;
            }
            let a = (-h - lo[i]) / ld[i];
            let b = (h - lo[i]) / ld[i];
            t_near = t_near.max(a.min(b));
            t_far = t_far.min(a.max(b));
        }
        if t_far < t_near || t_far <= HIT_EPSILON {
            return None;
        }
        Some(if t_near > HIT_EPSILON { t_near } else { t_far })
    }

    /// Ground-plane footprint corners, counter-clockwise.
    pub fn footprint(&self) -> [Vector2<f64>; 4] {
        let h = self.half_extents.xy();
        [
            Vector2::new(-h.x, -h.y),
            Vector2::new(h.x, -h.y),
            Vector2::new(h.x, h.y),
            Vector2::new(-h.x, h.y),
        ]
        .map(|c| self.center.xy() + rotate2(c, self.yaw))
    }
}

fn segments_cross(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>, d: Vector2<f64>) -> bool {
    let orient = |p: Vector2<f64>, q: Vector2<f64>, r: Vector2<f64>| {
        (q - p).perp(&(r - p))
    };
    let on_segment = |p: Vector2<f64>, q: Vector2<f64>, r: Vector2<f64>| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

impl Polygon {
    pub fn new(vertices: Vec<Vector2<f64>>) -> Result<Self> {
        let p = Self { vertices };
        p.validate()?;
        Ok(p)
    }

    pub fn rectangle(center: Vector2<f64>, half_width: f64, half_height: f64) -> Result<Self> {
        Self::new(vec![
            center + Vector2::new(-half_width, -half_height),
            center + Vector2::new(half_width, -half_height),
            center + Vector2::new(half_width, half_height),
            center + Vector2::new(-half_width, half_height),
        ])
    }

    /// Rejects fewer than three vertices, zero area, and self-intersection.
    pub fn validate(&self) -> Result<()> {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 || v.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::invalid("aperture needs at least 3 finite vertices"));
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return Err(Error::invalid(format!(
                        "aperture is not simple: edges {i} and {j} intersect"
                    )));
                }
            }
        }
        if self.area().abs() < 1e-12 {
            return Err(Error::invalid("aperture has zero area"));
        }
        Ok(())
    }

    /// Signed shoelace area.
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        (0..v.len())
            .map(|i| v[i].perp(&v[(i + 1) % v.len()]))
            .sum::<f64>()
            / 2.0
    }

    /// Even-odd point test.
    pub fn contains(&self, p: Vector2<f64>) -> bool {
        let v = &self.vertices;
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    /// Distance from `p` to the nearest edge.
    pub fn boundary_distance(&self, p: Vector2<f64>) -> f64 {
        let v = &self.vertices;
        (0..v.len())
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % v.len()]);
                let ab = b - a;
                let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                (p - (a + ab * t)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Vector2<f64> {
        let v = &self.vertices;
        let a = self.area();
        let mut c = Vector2::zeros();
        for i in 0..v.len() {
            let (p, q) = (v[i], v[(i + 1) % v.len()]);
            c += (p + q) * p.perp(&q);
        }
        c / (6.0 * a)
    }
}

impl Wall {
    pub fn new(
        center: Vector3<f64>,
        normal: Vector2<f64>,
        half_width: f64,
        half_height: f64,
        apertures: Vec<Polygon>,
    ) -> Result<Self> {
        let n = normal.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("wall normal must be non-zero"));
        }
        let w = Self {
            center,
            normal: normal / n,
            half_width,
            half_height,
            apertures,
        };
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<()> {
        if !self.center.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("wall centre must be finite"));
        }
        if !(self.half_width > 0.0 && self.half_height > 0.0) {
            return Err(Error::invalid("wall extents must be positive"));
        }
        if (self.normal.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("wall normal must be a unit vector"));
        }
        for a in &self.apertures {
            a.validate()?;
        }
        Ok(())
    }

    /// Unit vector along the wall, `up x normal`.
    pub fn u_axis(&self) -> Vector3<f64> {
        Vector3::new(-self.normal.y, self.normal.x, 0.0)
    }

    pub fn normal3(&self) -> Vector3<f64> {
        Vector3::new(self.normal.x, self.normal.y, 0.0)
    }

    /// Wall coordinates of a world point.
    pub fn local(&self, p: &Vector3<f64>) -> Vector2<f64> {
        let r = p - self.center;
        Vector2::new(r.dot(&self.u_axis()), r.z)
    }

    /// World point of wall coordinates.
    pub fn world(&self, uv: Vector2<f64>) -> Vector3<f64> {
        self.center + self.u_axis() * uv.x + Vector3::z() * uv.y
    }

    fn distance(&self, p: &Vector3<f64>) -> f64 {
        let off_plane = (p - self.center).dot(&self.normal3()).abs();
        let uv = self.local(p);
        let outside = outside_distance(&[uv.x.abs() - self.half_width, uv.y.abs() - self.half_height]);
        let in_plane = if outside > 0.0 {
            outside
        } else {
            self.apertures
                .iter()
                .find(|a| a.contains(uv))
                .map_or(0.0, |a| a.boundary_distance(uv))
        };
        off_plane.hypot(in_plane)
    }

    fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        let n = self.normal3();
        let denom = d.dot(&n);
        if denom == 0.0 {
            return None;
        }
        let s = (self.center - o).dot(&n) / denom;
        if !(s > HIT_EPSILON) {
            return None;
        }
        let uv = self.local(&(o + d * s));
        if uv.x.abs() > self.half_width || uv.y.abs() > self.half_height {
            return None;
        }
        if self.apertures.iter().any(|a| a.contains(uv)) {
            return None;
        }
        Some(s)
    }
}

impl Shape {
    fn validate(&self) -> Result<()> {
        match self {
            Shape::Cylinder(c) => c.validate(),
            Shape::Cuboid(b) => b.validate(),
            Shape::Wall(w) => w.validate(),
        }
    }

    /// Point carried by a trajectory.
    pub fn reference(&self) -> Vector3<f64> {
        match self {
            Shape::Cylinder(c) => Vector3::new(c.center.x, c.center.y, c.base),
            Shape::Cuboid(b) => b.center,
            Shape::Wall(w) => w.center,
        }
    }

    pub fn translated(&self, delta: &Vector3<f64>) -> Self {
        let mut s = self.clone();
        match &mut s {
            Shape::Cylinder(c) => {
                c.center += delta.xy();
                c.base += delta.z;
            }
            Shape::Cuboid(b) => b.center += delta,
            Shape::Wall(w) => w.center += delta,
        }
        s
    }

    pub fn rotated_about_z(&self, angle: f64) -> Self {
        let r = rot_z(angle);
        let mut s = self.clone();
        match &mut s {
            Shape::Cylinder(c) => c.center = rotate2(c.center, angle),
            Shape::Cuboid(b) => {
                b.center = r * b.center;
                b.yaw += angle;
            }
            Shape::Wall(w) => {
                w.center = r * w.center;
                w.normal = rotate2(w.normal, angle);
            }
        }
        s
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        match self {
            Shape::Cylinder(c) => c.contains(p),
            Shape::Cuboid(b) => b.contains(p),
            Shape::Wall(_) => false,
        }
    }

    /// Distance from `p` to the surface; zero inside a solid.
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        match self {
            Shape::Cylinder(c) => c.distance(p),
            Shape::Cuboid(b) => b.distance(p),
            Shape::Wall(w) => w.distance(p),
        }
    }

    /// Ray parameter `s` of the nearest hit of `o + s d`.
    pub fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        match self {
            Shape::Cylinder(c) => c.intersect(o, d),
            Shape::Cuboid(b) => b.intersect(o, d),
            Shape::Wall(w) => w.intersect(o, d),
        }
    }

    /// Corners of a finite axis-aligned enclosure; infinite for unbounded walls.
    fn extent(&self) -> (Vector3<f64>, Vector3<f64>) {
        match self {
            Shape::Cylinder(c) => {
                let r = Vector3::new(c.radius, c.radius, 0.0);
                let lo = Vector3::new(c.center.x, c.center.y, c.base);
                (lo - r, lo + r + Vector3::z() * c.height)
            }
            Shape::Cuboid(b) => {
                let fp = b.footprint();
                let xs = fp.iter().map(|p| p.x);
                let ys = fp.iter().map(|p| p.y);
                let min = Vector3::new(
                    xs.clone().fold(f64::INFINITY, f64::min),
                    ys.clone().fold(f64::INFINITY, f64::min),
                    b.center.z - b.half_extents.z,
                );
                let max = Vector3::new(
                    xs.fold(f64::NEG_INFINITY, f64::max),
                    ys.fold(f64::NEG_INFINITY, f64::max),
                    b.center.z + b.half_extents.z,
                );
                (min, max)
            }
            Shape::Wall(w) => (w.center, w.center),
        }
    }
}

impl Trajectory {
    pub fn new(waypoints: Vec<(f64, Vector3<f64>)>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::invalid("trajectory needs at least one waypoint"));
        }
        if waypoints.iter().any(|(t, p)| !t.is_finite() || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid("trajectory waypoints must be finite"));
        }
        if waypoints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::invalid("trajectory times must increase strictly"));
        }
        Ok(Self { waypoints })
    }

    /// Uniform straight-line motion from `start` at `velocity` for `t` in `[t0, t1]`.
    pub fn linear(start: Vector3<f64>, velocity: Vector3<f64>, t0: f64, t1: f64) -> Result<Self> {
        Self::new(vec![(t0, start), (t1, start + velocity * (t1 - t0))])
    }

    pub fn waypoints(&self) -> &[(f64, Vector3<f64>)] {
        &self.waypoints
    }

    fn segment(&self, t: f64) -> Option<usize> {
        let w = &self.waypoints;
        if w.len() < 2 || t < w[0].0 || t >= w[w.len() - 1].0 {
            return None;
        }
        Some(w.partition_point(|(wt, _)| *wt <= t) - 1)
    }

    pub fn position(&self, t: f64) -> Vector3<f64> {
        let w = &self.waypoints;
        match self.segment(t) {
            Some(i) => {
                let (t0, p0) = w[i];
                let (t1, p1) = w[i + 1];
                p0 + (p1 - p0) * ((t - t0) / (t1 - t0))
            }
            None if t < w[0].0 => w[0].1,
            None => w[w.len() - 1].1,
        }
    }

    pub fn velocity(&self, t: f64) -> Vector3<f64> {
        match self.segment(t) {
            Some(i) => {
                let (t0, p0) = self.waypoints[i];
                let (t1, p1) = self.waypoints[i + 1];
                (p1 - p0) / (t1 - t0)
            }
            None => Vector3::zeros(),
        }
    }

    fn rotated_about_z(&self, angle: f64) -> Self {
        let r = rot_z(angle);
        Self {
            waypoints: self.waypoints.iter().map(|(t, p)| (*t, r * p)).collect(),
        }
    }
}

impl SceneObject {
    pub fn fixed(shape: Shape) -> Self {
        Self {
            shape,
            trajectory: None,
        }
    }

    pub fn moving(shape: Shape, trajectory: Trajectory) -> Self {
        Self {
            shape,
            trajectory: Some(trajectory),
        }
    }

    /// Offset of the shape from its stored pose at time `t`.
    pub fn displacement(&self, t: f64) -> Vector3<f64> {
        match &self.trajectory {
            Some(tr) => tr.position(t) - self.shape.reference(),
            None => Vector3::zeros(),
        }
    }

    pub fn velocity(&self, t: f64) -> Vector3<f64> {
        self.trajectory.as_ref().map_or(Vector3::zeros(), |tr| tr.velocity(t))
    }

    pub fn shape_at(&self, t: f64) -> Shape {
        match &self.trajectory {
            Some(_) => self.shape.translated(&self.displacement(t)),
            None => self.shape.clone(),
        }
    }
}

impl Bounds {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Result<Self> {
        if !(0..3).all(|i| min[i] < max[i]) {
            return Err(Error::invalid("bounds need min < max on every axis"));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    fn rotated_about_z(&self, angle: f64) -> Self {
        let r = rot_z(angle);
        let corners = [
            Vector3::new(self.min.x, self.min.y, 0.0),
            Vector3::new(self.max.x, self.min.y, 0.0),
            Vector3::new(self.max.x, self.max.y, 0.0),
            Vector3::new(self.min.x, self.max.y, 0.0),
        ]
        .map(|c| r * c);
        let mut min = self.min;
        let mut max = self.max;
        min.x = corners.iter().map(|c| c.x).fold(f64::INFINITY, f64::min);
        min.y = corners.iter().map(|c| c.y).fold(f64::INFINITY, f64::min);
        max.x = corners.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max);
        max.y = corners.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max);
        Self { min, max }
    }
}

impl Scene {
    pub fn new(objects: Vec<SceneObject>, bounds: Bounds) -> Result<Self> {
        let scene = Self { objects, bounds };
        scene.validate()?;
        Ok(scene)
    }

    pub fn empty(bounds: Bounds) -> Self {
        Self {
            objects: vec![],
            bounds,
        }
    }

    /// Checks every shape, that shapes and waypoints lie within the bounds,
    /// and that apertures are simple.
    pub fn validate(&self) -> Result<()> {
        Bounds::new(self.bounds.min, self.bounds.max)?;
        for (i, obj) in self.objects.iter().enumerate() {
            let ctx = |e: Error| Error::invalid(format!("object {i}: {e}"));
            obj.shape.validate().map_err(ctx)?;
            let (lo, hi) = obj.shape.extent();
            if !self.bounds.contains(&lo) || !self.bounds.contains(&hi) {
                return Err(Error::invalid(format!("object {i} extends outside the scene bounds")));
            }
            if let Some(tr) = &obj.trajectory {
                for (t, p) in &tr.waypoints {
                    let moved = obj.shape.translated(&(p - obj.shape.reference()));
                    let (lo, hi) = moved.extent();
                    if !self.bounds.contains(&lo) || !self.bounds.contains(&hi) {
                        return Err(Error::invalid(format!(
                            "object {i} leaves the scene bounds at t = {t}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn push(&mut self, object: SceneObject) -> Result<usize> {
        self.objects.push(object);
        if let Err(e) = self.validate() {
            self.objects.pop();
            return Err(e);
        }
        Ok(self.objects.len() - 1)
    }

    /// Shapes posed at time `t`.
    pub fn snapshot(&self, t: f64) -> Vec<Shape> {
        self.objects.iter().map(|o| o.shape_at(t)).collect()
    }

    /// Nearest hit `(s, object index)` of `o + s d` against posed shapes.
    pub fn cast(shapes: &[Shape], o: &Vector3<f64>, d: &Vector3<f64>) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, s) in shapes.iter().enumerate() {
            if let Some(t) = s.intersect(o, d) {
                if best.is_none_or(|(b, _)| t < b) {
                    best = Some((t, i));
                }
            }
        }
        best
    }

    pub fn contains_point(&self, p: &Vector3<f64>, t: f64) -> bool {
        self.objects.iter().any(|o| o.shape_at(t).contains(p))
    }

    /// Distance from `p` to the nearest surface at time `t`.
    pub fn distance(&self, p: &Vector3<f64>, t: f64) -> f64 {
        self.objects
            .iter()
            .map(|o| o.shape_at(t).distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn has_moving(&self) -> bool {
        self.objects.iter().any(|o| o.trajectory.is_some())
    }

    /// The whole scene rotated about the world vertical axis through the origin.
    pub fn rotated_about_z(&self, angle: f64) -> Self {
        Self {
            objects: self
                .objects
                .iter()
                .map(|o| SceneObject {
                    shape: o.shape.rotated_about_z(angle),
                    trajectory: o.trajectory.as_ref().map(|t| t.rotated_about_z(angle)),
                })
                .collect(),
            bounds: self.bounds.rotated_about_z(angle),
        }
    }
}
