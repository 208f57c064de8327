//! Workspaces, robot models, collision checking and obstacle point clouds.
//!
//! The operating region is the box `[-20, 20]^dim`. Obstacles are closed
//! axis-aligned boxes; touching an obstacle counts as a collision. The rigid
//! planar robot is a rectangle whose heading is stored pre-scaled to
//! `[-20, 20]` so that all configuration components share one numeric range.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::rng_from_seed;

/// Half side of the operating region along every axis.
pub const REGION_HALF_EXTENT: f64 = 20.0;

/// Radians per unit of the scaled heading component.
pub const ANGLE_SCALE: f64 = PI / REGION_HALF_EXTENT;

/// Number of points in an obstacle point cloud.
pub const CLOUD_SIZE: usize = 1400;

/// Slack added to exact segment tests so interpolated points that land an ulp
/// off the segment never disagree with the exact answer.
const EXACT_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AabbObstacle {
    pub center: Vec<f64>,
    pub half_extents: Vec<f64>,
}

impl AabbObstacle {
    pub fn new(center: Vec<f64>, half_extents: Vec<f64>) -> Result<Self> {
        check_dim(center.len(), half_extents.len())?;
        if half_extents.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidArgument(
                "obstacle half extents must be positive".into(),
            ));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("obstacle center must be finite".into()));
        }
        Ok(AabbObstacle {
            center,
            half_extents,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.center[axis] - self.half_extents[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.center[axis] + self.half_extents[axis]
    }

    pub fn volume(&self) -> f64 {
        self.half_extents.iter().map(|h| 2.0 * h).product()
    }

    /// Closed point-in-box test with every face pushed out by `margin`.
    pub fn contains(&self, p: &[f64], margin: f64) -> bool {
        self.center
            .iter()
            .zip(&self.half_extents)
            .zip(p)
            .all(|((c, h), x)| (x - c).abs() <= h + margin)
    }

    /// True when the two closed boxes share at least one point.
    pub fn intersects(&self, other: &AabbObstacle) -> bool {
        (0..self.dim()).all(|a| {
            self.lower(a) <= other.upper(a) && other.lower(a) <= self.upper(a)
        })
    }

    /// Exact closed segment-vs-box test (slab method).
    pub fn intersects_segment(&self, a: &[f64], b: &[f64], margin: f64) -> bool {
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        for axis in 0..self.dim() {
            let lo = self.lower(axis) - margin;
            let hi = self.upper(axis) + margin;
            let d = b[axis] - a[axis];
            if d == 0.0 {
                if a[axis] < lo || a[axis] > hi {
                    return false;
                }
                continue;
            }
            let mut ta = (lo - a[axis]) / d;
            let mut tb = (hi - a[axis]) / d;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

/// A bounded 2D or 3D world populated with box obstacles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    pub dim: usize,
    /// Half extent of the operating region per axis.
    pub bounds: Vec<f64>,
    pub obstacles: Vec<AabbObstacle>,
    pub seed: u64,
}

impl Workspace {
    pub fn new(dim: usize, obstacles: Vec<AabbObstacle>, seed: u64) -> Result<Self> {
        let ws = Workspace {
            dim,
            bounds: vec![REGION_HALF_EXTENT; dim],
            obstacles,
            seed,
        };
        ws.validate()?;
        Ok(ws)
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Workspace::new(dim, Vec::new(), 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::InvalidArgument(format!(
                "workspace dim must be 2 or 3, got {}",
                self.dim
            )));
        }
        check_dim(self.dim, self.bounds.len())?;
        if self.bounds.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::InvalidArgument("bounds must be positive".into()));
        }
        for obs in &self.obstacles {
            check_dim(self.dim, obs.dim())?;
            AabbObstacle::new(obs.center.clone(), obs.half_extents.clone())?;
            for axis in 0..self.dim {
                if obs.lower(axis) < -self.bounds[axis] || obs.upper(axis) > self.bounds[axis] {
                    return Err(Error::InvalidArgument(format!(
                        "obstacle at {:?} leaves the operating region",
                        obs.center
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn in_bounds(&self, p: &[f64], margin: f64) -> bool {
        p.iter()
            .zip(&self.bounds)
            .all(|(x, b)| x.abs() <= b - margin)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ws: Workspace = serde_json::from_str(&text)?;
        ws.validate()?;
        Ok(ws)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// A robot configuration; the length depends on the robot model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Config(pub Vec<f64>);

impl Config {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        Config(values.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &Config) -> f64 {
        distance(&self.0, &other.0)
    }
}

impl From<Vec<f64>> for Config {
    fn from(v: Vec<f64>) -> Self {
        Config(v)
    }
}

impl AsRef<[f64]> for Config {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobotModel {
    Point2,
    Point3,
    /// Rectangle of the given length (along its heading) and width.
    Rigid2 { length: f64, width: f64 },
}

impl RobotModel {
    pub fn rigid2() -> Self {
        RobotModel::Rigid2 {
            length: 4.0,
            width: 1.0,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "point2" => Ok(RobotModel::Point2),
            "point3" => Ok(RobotModel::Point3),
            "rigid2" => Ok(RobotModel::rigid2()),
            other => Err(Error::InvalidArgument(format!("unknown robot model {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RobotModel::Point2 => "point2",
            RobotModel::Point3 => "point3",
            RobotModel::Rigid2 { .. } => "rigid2",
        }
    }

    /// Length of a configuration vector.
    pub fn config_dim(&self) -> usize {
        match self {
            RobotModel::Point2 => 2,
            RobotModel::Point3 | RobotModel::Rigid2 { .. } => 3,
        }
    }

    /// Dimension of the workspace the robot lives in.
    pub fn workspace_dim(&self) -> usize {
        match self {
            RobotModel::Point2 | RobotModel::Rigid2 { .. } => 2,
            RobotModel::Point3 => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let RobotModel::Rigid2 { length, width } = self {
            if !(*length > 0.0 && *width > 0.0) {
                return Err(Error::InvalidArgument(
                    "rigid body dimensions must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Default edge collision resolution.
    pub fn default_resolution(&self) -> f64 {
        match self {
            RobotModel::Rigid2 { .. } => 0.2,
            _ => 0.1,
        }
    }

    /// Largest distance any body point travels per unit of configuration
    /// space motion.
    fn sweep_factor(&self) -> f64 {
        match self {
            RobotModel::Rigid2 { length, width } => {
                1.0 + 0.5 * length.hypot(*width) * ANGLE_SCALE
            }
            _ => 1.0,
        }
    }
}

/// Oriented rectangle footprint of a rigid2 robot.
#[derive(Clone, Copy, Debug)]
pub struct RectFootprint {
    pub center: [f64; 2],
    /// Unit heading axis.
    pub u: [f64; 2],
    /// Unit lateral axis.
    pub v: [f64; 2],
    pub half_length: f64,
    pub half_width: f64,
}

impl RectFootprint {
    pub fn at(q: &[f64], length: f64, width: f64) -> Self {
        let theta = q[2] * ANGLE_SCALE;
        let (s, c) = theta.sin_cos();
        RectFootprint {
            center: [q[0], q[1]],
            u: [c, s],
            v: [-s, c],
            half_length: 0.5 * length,
            half_width: 0.5 * width,
        }
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        let mut out = [[0.0; 2]; 4];
        for (k, (a, b)) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
            .into_iter()
            .enumerate()
        {
            for i in 0..2 {
                out[k][i] = self.center[i]
                    + a * self.half_length * self.u[i]
                    + b * self.half_width * self.v[i];
            }
        }
        out
    }

    /// Separating-axis test against a box grown by `margin` on every face.
    pub fn overlaps_box(&self, obs: &AabbObstacle, margin: f64) -> bool {
        let hx = obs.half_extents[0] + margin;
        let hy = obs.half_extents[1] + margin;
        let d = [obs.center[0] - self.center[0], obs.center[1] - self.center[1]];
        // Box axes.
        let rx = self.half_length * self.u[0].abs() + self.half_width * self.v[0].abs();
        if d[0].abs() > hx + rx {
            return false;
        }
        let ry = self.half_length * self.u[1].abs() + self.half_width * self.v[1].abs();
        if d[1].abs() > hy + ry {
            return false;
        }
        // Rectangle axes.
        let du = d[0] * self.u[0] + d[1] * self.u[1];
        let bu = hx * self.u[0].abs() + hy * self.u[1].abs();
        if du.abs() > self.half_length + bu {
            return false;
        }
        let dv = d[0] * self.v[0] + d[1] * self.v[1];
        let bv = hx * self.v[0].abs() + hy * self.v[1].abs();
        if dv.abs() > self.half_width + bv {
            return false;
        }
        true
    }
}

fn config_free_with_margin(ws: &Workspace, rm: &RobotModel, q: &[f64], margin: f64) -> bool {
    match rm {
        RobotModel::Point2 | RobotModel::Point3 => {
            ws.in_bounds(q, margin) && !ws.obstacles.iter().any(|o| o.contains(q, margin))
        }
        RobotModel::Rigid2 { length, width } => {
            if q[2].abs() > REGION_HALF_EXTENT {
                return false;
            }
            let rect = RectFootprint::at(q, *length, *width);
            if !rect.corners().iter().all(|c| ws.in_bounds(c, margin)) {
                return false;
            }
            !ws.obstacles.iter().any(|o| rect.overlaps_box(o, margin))
        }
    }
}

fn check_model(ws: &Workspace, rm: &RobotModel, q: &[f64]) -> Result<()> {
    check_dim(rm.config_dim(), q.len())?;
    check_dim(rm.workspace_dim(), ws.dim)
}

/// True iff the robot placed at `q` lies inside the region and touches no
/// obstacle.
pub fn is_config_free(ws: &Workspace, rm: &RobotModel, q: &Config) -> Result<bool> {
    check_model(ws, rm, q.as_slice())?;
    Ok(config_free_with_margin(ws, rm, q.as_slice(), 0.0))
}

/// Visits the configurations interpolated between `a` and `b` at spacing at
/// most `resolution`, endpoints included. The endpoints are put in a canonical
/// order first so the visited set does not depend on direction.
fn for_each_interpolated(a: &[f64], b: &[f64], resolution: f64, mut f: impl FnMut(&[f64]) -> bool) -> bool {
    let (a, b) = if a.partial_cmp(b) == Some(std::cmp::Ordering::Greater) {
        (b, a)
    } else {
        (a, b)
    };
    let len = distance(a, b);
    let steps = (len / resolution).ceil().max(1.0) as usize;
    let mut q = vec![0.0; a.len()];
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        for (k, qk) in q.iter_mut().enumerate() {
            *qk = a[k] + t * (b[k] - a[k]);
        }
        if !f(&q) {
            return false;
        }
    }
    true
}

/// True iff every configuration sampled along the straight segment `a → b`
/// at spacing at most `resolution` is free.
pub fn is_motion_free(
    ws: &Workspace,
    rm: &RobotModel,
    a: &Config,
    b: &Config,
    resolution: f64,
) -> Result<bool> {
    if !(resolution > 0.0) {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    check_model(ws, rm, a.as_slice())?;
    check_model(ws, rm, b.as_slice())?;
    Ok(for_each_interpolated(a.as_slice(), b.as_slice(), resolution, |q| {
        config_free_with_margin(ws, rm, q, 0.0)
    }))
}

/// Edge validator used by the planners.
///
/// Its verdict is continuous: an accepted motion is free along the whole
/// segment, so it also passes [`is_motion_free`] at any resolution. Point
/// robots use an exact segment test. The rigid robot is checked at the given
/// resolution against obstacles grown by half the largest body-point
/// displacement between consecutive checks.
#[derive(Clone, Copy, Debug)]
pub struct MotionValidator<'a> {
    ws: &'a Workspace,
    robot: RobotModel,
    resolution: f64,
    margin: f64,
}

impl<'a> MotionValidator<'a> {
    pub fn new(ws: &'a Workspace, robot: RobotModel, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::InvalidArgument("resolution must be positive".into()));
        }
        check_dim(robot.workspace_dim(), ws.dim)?;
        robot.validate()?;
        let margin = 0.5 * resolution * robot.sweep_factor() + EXACT_SLACK;
        Ok(MotionValidator {
            ws,
            robot,
            resolution,
            margin,
        })
    }

    pub fn workspace(&self) -> &'a Workspace {
        self.ws
    }

    pub fn robot(&self) -> RobotModel {
        self.robot
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn config_free(&self, q: &[f64]) -> bool {
        config_free_with_margin(self.ws, &self.robot, q, 0.0)
    }

    pub fn motion_free(&self, a: &[f64], b: &[f64]) -> bool {
        match self.robot {
            RobotModel::Point2 | RobotModel::Point3 => {
                self.ws.in_bounds(a, 0.0)
                    && self.ws.in_bounds(b, 0.0)
                    && !self
                        .ws
                        .obstacles
                        .iter()
                        .any(|o| o.intersects_segment(a, b, EXACT_SLACK))
            }
            RobotModel::Rigid2 { .. } => {
                if a == b {
                    return self.config_free(a);
                }
                let margin = self.margin;
                for_each_interpolated(a, b, self.resolution, |q| {
                    config_free_with_margin(self.ws, &self.robot, q, margin)
                })
            }
        }
    }
}

/// Obstacle-space samples of one workspace, stored row-major as 32-bit floats.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub dim: usize,
    pub points: Vec<f32>,
}

const CLOUD_HEADER: usize = 8;

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f32] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Flattened cloud divided by `scale`, as fed to the encoder.
    pub fn to_input(&self, scale: f64) -> Vec<f64> {
        self.points.iter().map(|&v| v as f64 / scale).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CLOUD_HEADER + 4 * self.points.len());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.points {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < CLOUD_HEADER {
            return Err(Error::Format("point cloud header truncated".into()));
        }
        let n = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        if dim == 0 || bytes.len() != CLOUD_HEADER + 4 * n * dim {
            return Err(Error::Format(format!(
                "point cloud body has {} bytes, header announces {n}x{dim}",
                bytes.len() - CLOUD_HEADER
            )));
        }
        let points = bytes[CLOUD_HEADER..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(PointCloud { dim, points })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        PointCloud::from_bytes(&bytes)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let header = ["x", "y", "z"][..self.dim].join(",");
        let mut text = header + "\n";
        for i in 0..self.len() {
            let row: Vec<String> = self.point(i).iter().map(|v| v.to_string()).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Draws `n` points uniformly over the obstacle volumes of `ws`.
///
/// Each draw picks an obstacle with probability proportional to its volume.
/// Points are then emitted obstacle by obstacle, in workspace order, so a
/// given slot of the flattened cloud tends to describe the same block.
pub fn sample_point_cloud(ws: &Workspace, n: usize, seed: u64) -> Result<PointCloud> {
    if ws.obstacles.is_empty() {
        return Err(Error::NoObstacles);
    }
    if n == 0 {
        return Err(Error::InvalidArgument("point count must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let volumes: Vec<f64> = ws.obstacles.iter().map(AabbObstacle::volume).collect();
    let pick = WeightedIndex::new(&volumes)
        .map_err(|e| Error::InvalidArgument(format!("obstacle volumes: {e}")))?;
    let mut counts = vec![0usize; ws.obstacles.len()];
    for _ in 0..n {
        counts[pick.sample(&mut rng)] += 1;
    }
    let mut points = Vec::with_capacity(n * ws.dim);
    for (obs, &count) in ws.obstacles.iter().zip(&counts) {
        for _ in 0..count {
            for axis in 0..ws.dim {
                let v = rng.gen_range(obs.lower(axis)..=obs.upper(axis)) as f32;
                // Rounding to f32 may step just outside a face.
                let v = v.clamp(obs.lower(axis) as f32, obs.upper(axis) as f32);
                points.push(v);
            }
        }
    }
    Ok(PointCloud {
        dim: ws.dim,
        points,
    })
}

/// Sum of Euclidean distances between consecutive configurations.
pub fn path_cost(path: &[Config]) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("path is empty".into()));
    }
    Ok(path.windows(2).map(|w| w[0].distance(&w[1])).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn block(center: &[f64], half: f64) -> AabbObstacle {
        AabbObstacle::new(center.to_vec(), vec![half; center.len()]).unwrap()
    }

    fn one_block_ws() -> Workspace {
        Workspace::new(2, vec![block(&[0.0, 0.0], 2.0)], 1).unwrap()
    }

    #[test]
    fn empty_workspace_is_free() {
        let ws = Workspace::empty(2).unwrap();
        for q in [[0.0, 0.0], [19.9, -19.9], [-5.0, 3.0]] {
            assert!(is_config_free(&ws, &RobotModel::Point2, &Config::new(q)).unwrap());
        }
        assert!(!is_config_free(&ws, &RobotModel::Point2, &Config::new([20.5, 0.0])).unwrap());
    }

    #[test]
    fn obstacle_center_collides() {
        let ws = one_block_ws();
        assert!(!is_config_free(&ws, &RobotModel::Point2, &Config::new([0.0, 0.0])).unwrap());
        assert!(is_config_free(&ws, &RobotModel::Point2, &Config::new([2.1, 0.0])).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let ws = one_block_ws();
        let err = is_config_free(&ws, &RobotModel::Point2, &Config::new([0.0, 0.0, 0.0]));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let err = is_config_free(&ws, &RobotModel::Point3, &Config::new([0.0, 0.0, 0.0]));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    /// Oracle: dense perimeter sampling of the rectangle, each point tested
    /// against the boxes. Misses full containment of a box inside the
    /// rectangle, which cannot happen for the sizes used here.
    fn rect_collides_by_perimeter(ws: &Workspace, q: &[f64], length: f64, width: f64, samples: usize) -> bool {
        let rect = RectFootprint::at(q, length, width);
        let c = rect.corners();
        let per_edge = samples / 4;
        for e in 0..4 {
            let (p, r) = (c[e], c[(e + 1) % 4]);
            for k in 0..per_edge {
                let t = k as f64 / per_edge as f64;
                let x = [p[0] + t * (r[0] - p[0]), p[1] + t * (r[1] - p[1])];
                if ws.obstacles.iter().any(|o| o.contains(&x, 0.0)) {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn rigid_rectangle_near_face() {
        // Face of the block at x = 2; rectangle center 0.6 beyond the face
        // plus its half width.
        let ws = one_block_ws();
        let robot = RobotModel::rigid2();
        let cx = 2.0 + 0.5 + 0.6;
        let upright = [cx, 0.0, 10.0]; // heading pi/2: long axis along y
        let flat = [cx, 0.0, 0.0]; // long axis along x, reaches into the block
        for (q, expect_free) in [(upright, true), (flat, false)] {
            let oracle = rect_collides_by_perimeter(&ws, &q, 4.0, 1.0, 10_000);
            assert_eq!(oracle, !expect_free);
            assert_eq!(is_config_free(&ws, &robot, &Config::new(q)).unwrap(), expect_free);
        }
        // A tilted pose whose corner dips into the block.
        let tilted = [cx + 0.8, 0.0, 20.0 * 0.45 / std::f64::consts::PI * 1.0];
        let oracle = rect_collides_by_perimeter(&ws, &tilted, 4.0, 1.0, 10_000);
        assert_eq!(is_config_free(&ws, &robot, &Config::new(tilted)).unwrap(), !oracle);
    }

    #[test]
    fn rigid_matches_perimeter_oracle_on_random_poses() {
        let ws = Workspace::new(
            2,
            vec![block(&[0.0, 0.0], 2.0), block(&[7.0, 5.0], 1.5), block(&[-6.0, -8.0], 3.0)],
            0,
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (length, width) = (4.0, 1.0);
        let robot = RobotModel::Rigid2 { length, width };
        for _ in 0..400 {
            let q = [
                rng.gen_range(-12.0..12.0),
                rng.gen_range(-12.0..12.0),
                rng.gen_range(-20.0..20.0),
            ];
            let oracle = rect_collides_by_perimeter(&ws, &q, length, width, 10_000);
            assert_eq!(is_config_free(&ws, &robot, &Config::new(q)).unwrap(), !oracle, "{q:?}");
        }
    }

    #[test]
    fn point_matches_random_surface_oracle() {
        // Point robots have a single surface point, so the oracle degenerates
        // to a plain containment scan.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let obstacles = (0..3)
                .map(|_| block(&[rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0)], rng.gen_range(0.5..4.0)))
                .collect();
            let ws = Workspace::new(2, obstacles, 0).unwrap();
            for _ in 0..500 {
                let q = [rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)];
                let oracle = ws.obstacles.iter().any(|o| {
                    (0..2).all(|a| q[a] >= o.lower(a) && q[a] <= o.upper(a))
                });
                assert_eq!(is_config_free(&ws, &RobotModel::Point2, &Config::new(q)).unwrap(), !oracle);
            }
        }
    }

    #[test]
    fn motion_cases() {
        let ws = one_block_ws();
        let p = RobotModel::Point2;
        let a = Config::new([-5.0, 0.0]);
        assert!(is_motion_free(&ws, &p, &a, &a, 0.1).unwrap());
        let b = Config::new([5.0, 0.0]);
        assert!(!is_motion_free(&ws, &p, &a, &b, 0.1).unwrap());
        assert!(matches!(
            is_motion_free(&ws, &p, &a, &b, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn grazing_corner_agrees_with_finer_check() {
        // Segment passing the corner (2, 2) at a distance below resolution/2.
        let ws = one_block_ws();
        let p = RobotModel::Point2;
        for offset in [0.04, 0.01, -0.01, -0.04] {
            let a = Config::new([-3.0, 7.0 + offset]);
            let b = Config::new([7.0, -3.0 + offset]);
            let coarse_validator = MotionValidator::new(&ws, p, 0.1).unwrap();
            let fine = is_motion_free(&ws, &p, &a, &b, 0.01).unwrap();
            let coarse = is_motion_free(&ws, &p, &a, &b, 0.1).unwrap();
            // The exact validator agrees with the refined discretisation.
            assert_eq!(coarse_validator.motion_free(a.as_slice(), b.as_slice()), fine, "offset {offset}");
            // Whenever the coarse check rejects, the refined one does too.
            if !coarse {
                assert!(!fine);
            }
        }
    }

    #[test]
    fn rigid_validator_is_conservative() {
        let ws = one_block_ws();
        let robot = RobotModel::rigid2();
        let v = MotionValidator::new(&ws, robot, 0.2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut accepted = 0;
        for _ in 0..300 {
            let a = [rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0), rng.gen_range(-20.0..20.0)];
            let b = [
                (a[0] + rng.gen_range(-3.0..3.0_f64)).clamp(-17.0, 17.0),
                (a[1] + rng.gen_range(-3.0..3.0_f64)).clamp(-17.0, 17.0),
                (a[2] + rng.gen_range(-3.0..3.0_f64)).clamp(-20.0, 20.0),
            ];
            if v.motion_free(&a, &b) {
                accepted += 1;
                assert!(is_motion_free(&ws, &robot, &Config::new(a), &Config::new(b), 0.002).unwrap());
            }
        }
        assert!(accepted > 50);
    }

    #[test]
    fn cloud_inside_single_obstacle() {
        let ws = Workspace::new(2, vec![block(&[3.0, -4.0], 2.5)], 2).unwrap();
        let pc = sample_point_cloud(&ws, CLOUD_SIZE, 1).unwrap();
        assert_eq!(pc.len(), 1400);
        assert_eq!(pc.points.len(), 1400 * 2);
        for i in 0..pc.len() {
            let p: Vec<f64> = pc.point(i).iter().map(|&v| v as f64).collect();
            assert!(ws.obstacles[0].contains(&p, 0.0));
        }
    }

    #[test]
    fn cloud_split_follows_volume() {
        // Volumes 3:1 (areas 12 and 4).
        let ws = Workspace::new(
            2,
            vec![
                AabbObstacle::new(vec![-10.0, 0.0], vec![3.0, 2.0]).unwrap(),
                AabbObstacle::new(vec![10.0, 0.0], vec![1.0, 2.0]).unwrap(),
            ],
            0,
        )
        .unwrap();
        let n = 1400.0;
        let (p, sigma) = (0.75, (1400.0_f64 * 0.75 * 0.25).sqrt());
        for seed in 0..5 {
            let pc = sample_point_cloud(&ws, 1400, seed).unwrap();
            let left = (0..pc.len()).filter(|&i| pc.point(i)[0] < 0.0).count() as f64;
            assert!((left - n * p).abs() <= 3.0 * sigma, "seed {seed}: {left}");
        }
    }

    #[test]
    fn cloud_errors_and_determinism() {
        let ws = Workspace::empty(2).unwrap();
        assert!(matches!(sample_point_cloud(&ws, 10, 0), Err(Error::NoObstacles)));
        let ws = one_block_ws();
        assert_eq!(sample_point_cloud(&ws, 50, 4).unwrap(), sample_point_cloud(&ws, 50, 4).unwrap());
        let pc = sample_point_cloud(&ws, 50, 4).unwrap();
        assert_eq!(PointCloud::from_bytes(&pc.to_bytes()).unwrap(), pc);
        assert!(PointCloud::from_bytes(&pc.to_bytes()[..100]).is_err());
    }

    #[test]
    fn cost_examples() {
        let p = vec![Config::new([0.0, 0.0]), Config::new([3.0, 4.0])];
        assert_eq!(path_cost(&p).unwrap(), 5.0);
        assert_eq!(path_cost(&p[..1]).unwrap(), 0.0);
        assert!(path_cost(&[]).is_err());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let path: Vec<Config> = (0..5)
            .map(|_| Config::new([rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)]))
            .collect();
        let mut oracle = 0.0;
        for i in 0..4 {
            let dx = path[i + 1].0[0] - path[i].0[0];
            let dy = path[i + 1].0[1] - path[i].0[1];
            oracle += dx.hypot(dy);
        }
        assert!((path_cost(&path).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn workspace_rejects_out_of_bounds_obstacle() {
        assert!(Workspace::new(2, vec![block(&[19.0, 0.0], 2.0)], 0).is_err());
        assert!(Workspace::new(4, vec![], 0).is_err());
    }

    fn arb_point() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-20.0..20.0_f64, 2)
    }

    proptest! {
        #[test]
        fn motion_check_is_symmetric(a in arb_point(), b in arb_point(), res in 0.05..2.0_f64) {
            let ws = Workspace::new(2, vec![block(&[0.0, 0.0], 3.0), block(&[10.0, 10.0], 2.0)], 0).unwrap();
            let (a, b) = (Config(a), Config(b));
            let ab = is_motion_free(&ws, &RobotModel::Point2, &a, &b, res).unwrap();
            let ba = is_motion_free(&ws, &RobotModel::Point2, &b, &a, res).unwrap();
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn cost_properties(pts in prop::collection::vec(arb_point(), 1..8), m in arb_point()) {
            let path: Vec<Config> = pts.into_iter().map(Config).collect();
            let c = path_cost(&path).unwrap();
            prop_assert!(c >= 0.0);
            let rev: Vec<Config> = path.iter().rev().cloned().collect();
            prop_assert!((c - path_cost(&rev).unwrap()).abs() < 1e-9);
            let a = path[0].clone();
            let b = path[path.len() - 1].clone();
            let direct = path_cost(&[a.clone(), b.clone()]).unwrap();
            let via = path_cost(&[a, Config(m), b]).unwrap();
            prop_assert!(direct <= via + 1e-9);
        }
    }
}
