//! Tabletop world: procedural object models, grippers, and the top-down
//! partial point-cloud observation.
//!
//! Objects are point-sampled surfaces in a canonical frame (the centroid of
//! the lowest-decile points sits at z = 0), placed on a rectangular table.
//! The camera is an orthographic top-down z-buffer over the table footprint:
//! for every 4 mm grid cell the highest surface point is kept, then the
//! visible set is reduced to exactly [`CLOUD_SIZE`] points by farthest-point
//! sampling.

use crate::geometry::{Pose, Rotation, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Table footprint half-extents; the push-target edge is the line x = +TABLE_X.
pub const TABLE_X: f64 = 0.4;
pub const TABLE_Y: f64 = 0.6;
/// The camera window extends this far past the push-target edge so that
/// overhanging object parts stay observable after a push.
pub const RENDER_MARGIN_X: f64 = 0.12;
/// Orthographic z-buffer grid pitch.
pub const GRID_PITCH: f64 = 0.004;
/// Fixed size of every rendered observation.
pub const CLOUD_SIZE: usize = 256;
/// Canonical surface sample count per object model.
pub const MODEL_POINTS: usize = 2048;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("shape parameters outside the category range: {0}")]
    BadShapeParams(String),
    #[error("object cannot be placed with the required table margin")]
    PlacementInfeasible,
    #[error("no visible points to render")]
    EmptyScene,
}

/// Per-point provenance label in observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartLabel {
    Fixed,
    Movable,
    Table,
    GripperAssistant,
    GripperPrimary,
}

impl PartLabel {
    pub fn to_u8(self) -> u8 {
        match self {
            PartLabel::Fixed => 0,
            PartLabel::Movable => 1,
            PartLabel::Table => 2,
            PartLabel::GripperAssistant => 3,
            PartLabel::GripperPrimary => 4,
        }
    }

    pub fn from_u8(v: u8) -> Option<PartLabel> {
        match v {
            0 => Some(PartLabel::Fixed),
            1 => Some(PartLabel::Movable),
            2 => Some(PartLabel::Table),
            3 => Some(PartLabel::GripperAssistant),
            4 => Some(PartLabel::GripperPrimary),
            _ => None,
        }
    }

    /// Labels that belong to the manipulated object itself.
    pub fn is_object(self) -> bool {
        matches!(self, PartLabel::Fixed | PartLabel::Movable)
    }
}

/// Point cloud with per-point part labels and optional per-point scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCloud {
    pub points: Vec<Vec3>,
    pub labels: Vec<PartLabel>,
    pub scores: Option<Vec<f64>>,
}

impl LabeledCloud {
    pub fn new(points: Vec<Vec3>, labels: Vec<PartLabel>) -> Self {
        debug_assert_eq!(points.len(), labels.len());
        LabeledCloud { points, labels, scores: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(Vec3::is_finite)
    }

    /// Indices of points whose label satisfies the predicate.
    pub fn indices_where(&self, pred: impl Fn(PartLabel) -> bool) -> Vec<usize> {
        (0..self.len()).filter(|&i| pred(self.labels[i])).collect()
    }

    /// Centroid of object-labeled points, or of all points when none carry
    /// an object label.
    pub fn object_centroid(&self) -> Vec3 {
        let idx = self.indices_where(PartLabel::is_object);
        let take: Vec<usize> = if idx.is_empty() { (0..self.len()).collect() } else { idx };
        let mut c = Vec3::ZERO;
        for &i in &take {
            c = c.add(self.points[i]);
        }
        c.scale(1.0 / take.len() as f64)
    }
}

/// Maps every point of a cloud by a rigid transform; labels and scores are
/// carried over unchanged.
pub fn transform_points(t: &Pose, cloud: &LabeledCloud) -> LabeledCloud {
    LabeledCloud {
        points: cloud.points.iter().map(|p| t.apply(*p)).collect(),
        labels: cloud.labels.clone(),
        scores: cloud.scores.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Plate,
    Bottle,
    ThinBox,
    Bowl,
    Lighter,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Plate,
        Category::Bottle,
        Category::ThinBox,
        Category::Bowl,
        Category::Lighter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Plate => "plate",
            Category::Bottle => "bottle",
            Category::ThinBox => "thin_box",
            Category::Bowl => "bowl",
            Category::Lighter => "lighter",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        match s {
            "plate" => Some(Category::Plate),
            "bottle" => Some(Category::Bottle),
            "thin_box" | "thinbox" | "box" => Some(Category::ThinBox),
            "bowl" => Some(Category::Bowl),
            "lighter" => Some(Category::Lighter),
            _ => None,
        }
    }

    /// Task family this category belongs to.
    pub fn default_task(self) -> TaskKind {
        match self {
            Category::Plate => TaskKind::PlateLifting,
            Category::Bottle | Category::Lighter => TaskKind::Articulated,
            Category::ThinBox | Category::Bowl => TaskKind::EdgePushing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Articulated,
    EdgePushing,
    PlateLifting,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [
        TaskKind::Articulated,
        TaskKind::EdgePushing,
        TaskKind::PlateLifting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Articulated => "articulated",
            TaskKind::EdgePushing => "edge_pushing",
            TaskKind::PlateLifting => "plate_lifting",
        }
    }

    pub fn parse(s: &str) -> Option<TaskKind> {
        match s {
            "articulated" => Some(TaskKind::Articulated),
            "edge_pushing" | "edge" => Some(TaskKind::EdgePushing),
            "plate_lifting" | "plate" => Some(TaskKind::PlateLifting),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            TaskKind::Articulated => 0,
            TaskKind::EdgePushing => 1,
            TaskKind::PlateLifting => 2,
        }
    }
}

/// Category-specific dimensions, all in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ShapeParams {
    /// Shallow concave dish: flat base disc plus a conical rim band rising to
    /// `0.25 * radius` at the outer edge.
    Plate { radius: f64, thickness: f64 },
    /// Cylindrical body with a narrower cylindrical cap on top.
    Bottle { body_radius: f64, height: f64 },
    /// Rectangular slab.
    ThinBox { sx: f64, sy: f64, sz: f64 },
    /// Spherical-cap shell, open side up in the canonical frame.
    Bowl { radius: f64, depth: f64 },
    /// Small block with a pressable button on the canonical top face.
    Lighter { width: f64, depth: f64, height: f64 },
}

impl ShapeParams {
    /// Draws parameters uniformly within the category range.
    pub fn sample(category: Category, rng: &mut ChaCha8Rng) -> ShapeParams {
        let u = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| lo + rng.gen::<f64>() * (hi - lo);
        match category {
            Category::Plate => ShapeParams::Plate {
                radius: u(rng, 0.06, 0.12),
                thickness: u(rng, 0.006, 0.012),
            },
            Category::Bottle => ShapeParams::Bottle {
                body_radius: u(rng, 0.025, 0.035),
                height: u(rng, 0.10, 0.20),
            },
            Category::ThinBox => ShapeParams::ThinBox {
                sx: u(rng, 0.08, 0.25),
                sy: u(rng, 0.08, 0.25),
                sz: u(rng, 0.008, 0.02),
            },
            Category::Bowl => ShapeParams::Bowl {
                radius: u(rng, 0.05, 0.10),
                depth: u(rng, 0.03, 0.05),
            },
            Category::Lighter => ShapeParams::Lighter {
                width: u(rng, 0.022, 0.03),
                depth: u(rng, 0.012, 0.018),
                height: u(rng, 0.06, 0.09),
            },
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |msg: &str| Err(SceneError::BadShapeParams(msg.to_string()));
        match *self {
            ShapeParams::Plate { radius, thickness } => {
                if !(0.06..=0.12).contains(&radius) {
                    return bad("plate radius must be in [0.06, 0.12] m");
                }
                if !(0.003..=0.02).contains(&thickness) {
                    return bad("plate thickness must be in [0.003, 0.02] m");
                }
            }
            ShapeParams::Bottle { body_radius, height } => {
                if !(0.02..=0.04).contains(&body_radius) {
                    return bad("bottle body radius must be in [0.02, 0.04] m");
                }
                if !(0.10..=0.20).contains(&height) {
                    return bad("bottle height must be in [0.10, 0.20] m");
                }
            }
            ShapeParams::ThinBox { sx, sy, sz } => {
                if !(0.08..=0.25).contains(&sx) || !(0.08..=0.25).contains(&sy) {
                    return bad("box sides must be in [0.08, 0.25] m");
                }
                if !(0.004..=0.02).contains(&sz) {
                    return bad("box thickness must be at most 0.02 m");
                }
            }
            ShapeParams::Bowl { radius, depth } => {
                if !(0.05..=0.10).contains(&radius) {
                    return bad("bowl radius must be in [0.05, 0.10] m");
                }
                if !(0.02..=0.06).contains(&depth) || depth >= radius {
                    return bad("bowl depth must be in [0.02, 0.06] m and below the radius");
                }
            }
            ShapeParams::Lighter { width, depth, height } => {
                if !(0.015..=0.035).contains(&width)
                    || !(0.008..=0.025).contains(&depth)
                    || !(0.05..=0.10).contains(&height)
                {
                    return bad("lighter dimensions outside range");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// Articulation between the fixed body and its movable functional part,
/// expressed in the object's canonical frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArticulationJoint {
    pub kind: JointKind,
    /// Unit direction of increasing joint value.
    pub axis: Vec3,
    pub origin: Vec3,
    /// [lo, hi] in meters (prismatic) or radians (revolute).
    pub limits: (f64, f64),
    pub value: f64,
}

impl ArticulationJoint {
    pub fn range(&self) -> f64 {
        self.limits.1 - self.limits.0
    }

    /// Displacement applied to a canonical movable point at the current value.
    pub fn displace(&self, p: Vec3) -> Vec3 {
        match self.kind {
            JointKind::Prismatic => p.add(self.axis.scale(self.value)),
            JointKind::Revolute => {
                let rot = Rotation::from_axis_angle(self.axis, self.value)
                    .unwrap_or_else(|_| Rotation::identity());
                rot.apply(p.sub(self.origin)).add(self.origin)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectState {
    OnTable,
    Grasped,
    Fallen,
}

/// A point-sampled object with canonical-frame geometry and a world pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    pub category: Category,
    pub shape: ShapeParams,
    pub shape_seed: u64,
    pub canonical_points: Vec<Vec3>,
    /// Outward surface normal per point, canonical frame.
    pub normals: Vec<Vec3>,
    pub labels: Vec<PartLabel>,
    pub joint: Option<ArticulationJoint>,
    /// Joint value at spawn time; success is measured against this.
    pub joint_initial: f64,
    /// Direction the functional part faces, canonical frame, unit length.
    pub functional_axis: Vec3,
    pub pose: Pose,
    pub state: ObjectState,
}

impl ObjectModel {
    /// Canonical point with the articulation displacement applied to movable
    /// points.
    pub fn articulated_point(&self, i: usize) -> Vec3 {
        let p = self.canonical_points[i];
        match (&self.joint, self.labels[i]) {
            (Some(j), PartLabel::Movable) => j.displace(p),
            _ => p,
        }
    }

    pub fn world_point(&self, i: usize) -> Vec3 {
        self.pose.apply(self.articulated_point(i))
    }

    pub fn world_normal(&self, i: usize) -> Vec3 {
        let n = match (&self.joint, self.labels[i]) {
            (Some(j), PartLabel::Movable) if j.kind == JointKind::Revolute => {
                Rotation::from_axis_angle(j.axis, j.value)
                    .map(|r| r.apply(self.normals[i]))
                    .unwrap_or(self.normals[i])
            }
            _ => self.normals[i],
        };
        self.pose.rotation.apply(n)
    }

    pub fn world_points(&self) -> Vec<Vec3> {
        (0..self.canonical_points.len()).map(|i| self.world_point(i)).collect()
    }

    pub fn world_centroid(&self) -> Vec3 {
        let mut c = Vec3::ZERO;
        for i in 0..self.canonical_points.len() {
            c = c.add(self.world_point(i));
        }
        c.scale(1.0 / self.canonical_points.len() as f64)
    }

    pub fn canonical_centroid(&self) -> Vec3 {
        let mut c = Vec3::ZERO;
        for p in &self.canonical_points {
            c = c.add(*p);
        }
        c.scale(1.0 / self.canonical_points.len() as f64)
    }

    /// World direction of the functional axis.
    pub fn world_functional_axis(&self) -> Vec3 {
        self.pose.rotation.apply(self.functional_axis)
    }

    /// World-frame direction of increasing joint value.
    pub fn world_joint_direction(&self) -> Option<Vec3> {
        self.joint.as_ref().map(|j| self.pose.rotation.apply(j.axis))
    }

    /// Mean z of the lowest-decile world points.
    pub fn lowest_decile_height(&self) -> f64 {
        let mut zs: Vec<f64> = self.world_points().iter().map(|p| p.z()).collect();
        zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = (zs.len() / 10).max(1);
        zs[..n].iter().sum::<f64>() / n as f64
    }

    /// Fraction of the lowest-decile points whose (x, y) lies inside the
    /// table footprint.
    pub fn support_fraction(&self) -> f64 {
        let pts = self.world_points();
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| pts[a].z().partial_cmp(&pts[b].z()).unwrap().then(a.cmp(&b)));
        let n = (pts.len() / 10).max(1);
        let inside = order[..n]
            .iter()
            .filter(|&&i| {
                pts[i].x().abs() <= TABLE_X && pts[i].y().abs() <= TABLE_Y
            })
            .count();
        inside as f64 / n as f64
    }

    pub fn max_world_x(&self) -> f64 {
        self.world_points().iter().map(|p| p.x()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Outer rim radius and canonical rim height, for categories that have a
    /// well-defined rim circle.
    pub fn rim(&self) -> Option<(f64, f64)> {
        match self.shape {
            ShapeParams::Plate { radius, .. } => Some((radius, 0.25 * radius)),
            ShapeParams::Bowl { radius, depth } => Some((radius, depth)),
            _ => None,
        }
    }
}

/// Deterministic procedural object generation. The same (category, params,
/// seed) triple always yields the bit-identical point set.
pub fn generate_object(
    category: Category,
    shape: ShapeParams,
    seed: u64,
) -> Result<ObjectModel, SceneError> {
    shape.validate()?;
    let matches_category = matches!(
        (category, shape),
        (Category::Plate, ShapeParams::Plate { .. })
            | (Category::Bottle, ShapeParams::Bottle { .. })
            | (Category::ThinBox, ShapeParams::ThinBox { .. })
            | (Category::Bowl, ShapeParams::Bowl { .. })
            | (Category::Lighter, ShapeParams::Lighter { .. })
    );
    if !matches_category {
        return Err(SceneError::BadShapeParams(format!(
            "shape params do not match category {}",
            category.name()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let (mut points, normals, mut labels, joint, functional_axis) = match shape {
        ShapeParams::Plate { radius, thickness } => {
            sample_plate(radius, thickness, &mut rng)
        }
        ShapeParams::Bottle { body_radius, height } => {
            sample_bottle(body_radius, height, &mut rng)
        }
        ShapeParams::ThinBox { sx, sy, sz } => sample_box_shell(sx, sy, sz, &mut rng),
        ShapeParams::Bowl { radius, depth } => sample_bowl(radius, depth, &mut rng),
        ShapeParams::Lighter { width, depth, height } => {
            sample_lighter(width, depth, height, &mut rng)
        }
    };

    // Canonical frame: centroid of the lowest-decile points at z = 0.
    let mut zs: Vec<f64> = points.iter().map(|p| p.z()).collect();
    zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = (zs.len() / 10).max(1);
    let offset = zs[..n].iter().sum::<f64>() / n as f64;
    for p in &mut points {
        *p = Vec3::new(p.x(), p.y(), p.z() - offset);
    }
    let joint = joint.map(|mut j: ArticulationJoint| {
        j.origin = j.origin.sub(Vec3::new(0.0, 0.0, offset));
        j
    });
    debug_assert_eq!(points.len(), labels.len());
    labels.truncate(points.len());

    Ok(ObjectModel {
        category,
        shape,
        shape_seed: seed,
        canonical_points: points,
        normals,
        labels,
        joint,
        joint_initial: joint.map(|j| j.value).unwrap_or(0.0),
        functional_axis,
        pose: Pose::identity(),
        state: ObjectState::OnTable,
    })
}

fn unit_disc(rng: &mut ChaCha8Rng, r_in: f64, r_out: f64) -> (f64, f64) {
    // Area-uniform radius in an annulus, plus an angle.
    let u: f64 = rng.gen();
    let r = (r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt();
    let phi = rng.gen::<f64>() * std::f64::consts::TAU;
    (r, phi)
}

type SampledSurface = (Vec<Vec3>, Vec<Vec3>, Vec<PartLabel>, Option<ArticulationJoint>, Vec3);

fn sample_plate(radius: f64, thickness: f64, rng: &mut ChaCha8Rng) -> SampledSurface {
    let base_r = 0.55 * radius;
    let rim_h = 0.25 * radius;
    // Region areas (planar approximation is fine for sampling weights).
    let a_base = std::f64::consts::PI * base_r * base_r;
    let a_band = std::f64::consts::PI * (radius * radius - base_r * base_r);
    let weights = [a_base, a_base, a_band, a_band];
    let total: f64 = weights.iter().sum();
    let slope = (rim_h - thickness) / (radius - base_r);
    let band_n = 1.0 / (1.0 + slope * slope).sqrt();
    let mut points = Vec::with_capacity(MODEL_POINTS);
    let mut normals = Vec::with_capacity(MODEL_POINTS);
    for _ in 0..MODEL_POINTS {
        let pick = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut region = 0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if pick <= acc {
                region = i;
                break;
            }
        }
        let (p, n) = match region {
            // base underside / base top
            0 => {
                let (r, phi) = unit_disc(rng, 0.0, base_r);
                (
                    Vec3::new(r * phi.cos(), r * phi.sin(), 0.0),
                    Vec3::new(0.0, 0.0, -1.0),
                )
            }
            1 => {
                let (r, phi) = unit_disc(rng, 0.0, base_r);
                (Vec3::new(r * phi.cos(), r * phi.sin(), thickness), Vec3::Z)
            }
            // rim band top / underside, rising linearly to the rim height
            _ => {
                let (r, phi) = unit_disc(rng, base_r, radius);
                let frac = (r - base_r) / (radius - base_r);
                let z_top = thickness + frac * (rim_h - thickness);
                let z = if region == 2 { z_top } else { z_top - thickness };
                let sign = if region == 2 { 1.0 } else { -1.0 };
                (
                    Vec3::new(r * phi.cos(), r * phi.sin(), z),
                    Vec3::new(
                        -sign * slope * band_n * phi.cos(),
                        -sign * slope * band_n * phi.sin(),
                        sign * band_n,
                    ),
                )
            }
        };
        points.push(p);
        normals.push(n);
    }
    let labels = vec![PartLabel::Fixed; points.len()];
    (points, normals, labels, None, Vec3::Z)
}

fn sample_bottle(body_radius: f64, height: f64, rng: &mut ChaCha8Rng) -> SampledSurface {
    let cap_h = 0.025;
    let cap_r = 0.8 * body_radius;
    let body_h = height - cap_h;
    let a_body_side = std::f64::consts::TAU * body_radius * body_h;
    let a_bottom = std::f64::consts::PI * body_radius * body_radius;
    let a_shoulder = std::f64::consts::PI * (body_radius * body_radius - cap_r * cap_r);
    let a_cap_side = std::f64::consts::TAU * cap_r * cap_h;
    let a_cap_top = std::f64::consts::PI * cap_r * cap_r;
    let weights = [a_body_side, a_bottom, a_shoulder, a_cap_side, a_cap_top];
    let total: f64 = weights.iter().sum();
    let mut points = Vec::with_capacity(MODEL_POINTS);
    let mut normals = Vec::with_capacity(MODEL_POINTS);
    let mut labels = Vec::with_capacity(MODEL_POINTS);
    for _ in 0..MODEL_POINTS {
        let pick = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut region = 0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if pick <= acc {
                region = i;
                break;
            }
        }
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        let (p, n, label) = match region {
            0 => {
                let z = rng.gen::<f64>() * body_h;
                (
                    Vec3::new(body_radius * phi.cos(), body_radius * phi.sin(), z),
                    Vec3::new(phi.cos(), phi.sin(), 0.0),
                    PartLabel::Fixed,
                )
            }
            1 => {
                let (r, phi) = unit_disc(rng, 0.0, body_radius);
                (
                    Vec3::new(r * phi.cos(), r * phi.sin(), 0.0),
                    Vec3::new(0.0, 0.0, -1.0),
                    PartLabel::Fixed,
                )
            }
            2 => {
                let (r, phi) = unit_disc(rng, cap_r, body_radius);
                (
                    Vec3::new(r * phi.cos(), r * phi.sin(), body_h),
                    Vec3::Z,
                    PartLabel::Fixed,
                )
            }
            3 => {
                let z = body_h + rng.gen::<f64>() * cap_h;
                (
                    Vec3::new(cap_r * phi.cos(), cap_r * phi.sin(), z),
                    Vec3::new(phi.cos(), phi.sin(), 0.0),
                    PartLabel::Movable,
                )
            }
            _ => {
                let (r, phi) = unit_disc(rng, 0.0, cap_r);
                (
                    Vec3::new(r * phi.cos(), r * phi.sin(), body_h + cap_h),
                    Vec3::Z,
                    PartLabel::Movable,
                )
            }
        };
        points.push(p);
        normals.push(n);
        labels.push(label);
    }
    let joint = ArticulationJoint {
        kind: JointKind::Prismatic,
        axis: Vec3::Z,
        origin: Vec3::new(0.0, 0.0, body_h),
        limits: (0.0, cap_h),
        value: 0.0,
    };
    (points, normals, labels, Some(joint), Vec3::Z)
}

fn sample_box_shell(sx: f64, sy: f64, sz: f64, rng: &mut ChaCha8Rng) -> SampledSurface {
    let (points, normals) = sample_cuboid(
        Vec3::new(-sx / 2.0, -sy / 2.0, 0.0),
        Vec3::new(sx / 2.0, sy / 2.0, sz),
        MODEL_POINTS,
        rng,
    );
    let labels = vec![PartLabel::Fixed; points.len()];
    (points, normals, labels, None, Vec3::Z)
}

/// Area-weighted uniform samples on the six faces of an axis-aligned cuboid,
/// with outward face normals.
fn sample_cuboid(min: Vec3, max: Vec3, n: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec3>, Vec<Vec3>) {
    let d = max.sub(min);
    let (dx, dy, dz) = (d.x(), d.y(), d.z());
    let weights = [dy * dz, dy * dz, dx * dz, dx * dz, dx * dy, dx * dy];
    let total: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut face = 0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if pick <= acc {
                face = i;
                break;
            }
        }
        let (u, v) = (rng.gen::<f64>(), rng.gen::<f64>());
        let (p, nrm) = match face {
            0 => (Vec3::new(min.x(), min.y() + u * dy, min.z() + v * dz), Vec3::new(-1.0, 0.0, 0.0)),
            1 => (Vec3::new(max.x(), min.y() + u * dy, min.z() + v * dz), Vec3::X),
            2 => (Vec3::new(min.x() + u * dx, min.y(), min.z() + v * dz), Vec3::new(0.0, -1.0, 0.0)),
            3 => (Vec3::new(min.x() + u * dx, max.y(), min.z() + v * dz), Vec3::Y),
            4 => (Vec3::new(min.x() + u * dx, min.y() + v * dy, min.z()), Vec3::new(0.0, 0.0, -1.0)),
            _ => (Vec3::new(min.x() + u * dx, min.y() + v * dy, max.z()), Vec3::Z),
        };
        out.push(p);
        normals.push(nrm);
    }
    (out, normals)
}

fn sample_bowl(radius: f64, depth: f64, rng: &mut ChaCha8Rng) -> SampledSurface {
    // Spherical cap: apex at z = 0, opening plane at z = depth.
    let wall = 0.006;
    let s = (radius * radius + depth * depth) / (2.0 * depth);
    let s_in = s - wall;
    let rim_r_in = {
        let z = depth;
        let t = s_in * s_in - (s - z) * (s - z);
        t.max(0.0).sqrt()
    };
    // Sphere surface area is uniform in z.
    let a_outer = std::f64::consts::TAU * s * depth;
    let a_inner = std::f64::consts::TAU * s_in * (depth - wall).max(0.0);
    let a_rim = std::f64::consts::PI * (radius * radius - rim_r_in * rim_r_in);
    let weights = [a_outer, a_inner, a_rim];
    let total: f64 = weights.iter().sum();
    let mut points = Vec::with_capacity(MODEL_POINTS);
    let mut normals = Vec::with_capacity(MODEL_POINTS);
    let center = Vec3::new(0.0, 0.0, s);
    for _ in 0..MODEL_POINTS {
        let pick = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut region = 0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if pick <= acc {
                region = i;
                break;
            }
        }
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        let (p, n) = match region {
            0 => {
                let z = rng.gen::<f64>() * depth;
                let r = (s * s - (s - z) * (s - z)).max(0.0).sqrt();
                let p = Vec3::new(r * phi.cos(), r * phi.sin(), z);
                (p, p.sub(center).normalized())
            }
            1 => {
                let z = wall + rng.gen::<f64>() * (depth - wall).max(0.0);
                let r = (s_in * s_in - (s - z) * (s - z)).max(0.0).sqrt();
                let p = Vec3::new(r * phi.cos(), r * phi.sin(), z);
                (p, center.sub(p).normalized())
            }
            _ => {
                let (r, phi) = unit_disc(rng, rim_r_in, radius);
                (Vec3::new(r * phi.cos(), r * phi.sin(), depth), Vec3::Z)
            }
        };
        points.push(p);
        normals.push(n);
    }
    let labels = vec![PartLabel::Fixed; points.len()];
    // Rim direction: the opening faces +z canonically, so the functional rim
    // direction is -z once the bowl rests inverted.
    (points, normals, labels, None, Vec3::new(0.0, 0.0, -1.0))
}

fn sample_lighter(width: f64, depth: f64, height: f64, rng: &mut ChaCha8Rng) -> SampledSurface {
    let button_travel = 0.004;
    let (bw, bd, bh) = (0.014_f64.min(width * 0.6), 0.01_f64.min(depth * 0.7), 0.006);
    let body_n = (MODEL_POINTS as f64 * 0.92) as usize;
    let (mut points, mut normals) = sample_cuboid(
        Vec3::new(-width / 2.0, -depth / 2.0, 0.0),
        Vec3::new(width / 2.0, depth / 2.0, height),
        body_n,
        rng,
    );
    let mut labels = vec![PartLabel::Fixed; points.len()];
    let (button, button_normals) = sample_cuboid(
        Vec3::new(-bw / 2.0, -bd / 2.0, height),
        Vec3::new(bw / 2.0, bd / 2.0, height + bh),
        MODEL_POINTS - body_n,
        rng,
    );
    labels.extend(std::iter::repeat(PartLabel::Movable).take(button.len()));
    points.extend(button);
    normals.extend(button_normals);
    let joint = ArticulationJoint {
        kind: JointKind::Prismatic,
        // Pressing drives the button into the body.
        axis: Vec3::new(0.0, 0.0, -1.0),
        origin: Vec3::new(0.0, 0.0, height),
        limits: (0.0, button_travel),
        value: 0.0,
    };
    (points, normals, labels, Some(joint), Vec3::Z)
}

/// Which of the two grippers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GripperId {
    Assistant,
    Primary,
}

impl GripperId {
    pub fn label(self) -> PartLabel {
        match self {
            GripperId::Assistant => PartLabel::GripperAssistant,
            GripperId::Primary => PartLabel::GripperPrimary,
        }
    }
}

/// Axis-aligned box in the gripper frame.
#[derive(Debug, Clone, Copy)]
pub struct LocalBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl LocalBox {
    pub fn contains(&self, p: Vec3) -> bool {
        p.x() >= self.min.x()
            && p.x() <= self.max.x()
            && p.y() >= self.min.y()
            && p.y() <= self.max.y()
            && p.z() >= self.min.z()
            && p.z() <= self.max.z()
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x(), a.y(), a.z()),
            Vec3::new(b.x(), a.y(), a.z()),
            Vec3::new(a.x(), b.y(), a.z()),
            Vec3::new(b.x(), b.y(), a.z()),
            Vec3::new(a.x(), a.y(), b.z()),
            Vec3::new(b.x(), a.y(), b.z()),
            Vec3::new(a.x(), b.y(), b.z()),
            Vec3::new(b.x(), b.y(), b.z()),
        ]
    }
}

/// Rigid attachment of the target object to a gripper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    /// Object pose expressed in the gripper frame.
    pub relative: Pose,
    /// Whether the closing region held any movable-part points at attach
    /// time; a held functional part cannot be articulated.
    pub holds_movable: bool,
}

/// Parallel-jaw gripper. Frame: forward = +x, left = +y, up = +z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gripper {
    pub pose: Pose,
    pub max_opening: f64,
    pub finger_depth: f64,
    pub finger_height: f64,
    pub attachment: Option<Attachment>,
}

pub const FINGER_THICKNESS: f64 = 0.008;
pub const PALM_DEPTH: f64 = 0.03;

impl Gripper {
    pub fn at_home(x: f64) -> Gripper {
        Gripper {
            pose: Pose::from_translation(Vec3::new(x, 0.0, 0.4)),
            max_opening: 0.08,
            finger_depth: 0.04,
            finger_height: 0.02,
            attachment: None,
        }
    }

    /// Solid body volumes in the gripper frame: two fingers flanking the
    /// closing channel and the palm behind it.
    pub fn body_boxes(&self) -> [LocalBox; 3] {
        let half_open = self.max_opening / 2.0;
        let hh = self.finger_height / 2.0;
        [
            LocalBox {
                min: Vec3::new(0.0, half_open, -hh),
                max: Vec3::new(self.finger_depth, half_open + FINGER_THICKNESS, hh),
            },
            LocalBox {
                min: Vec3::new(0.0, -half_open - FINGER_THICKNESS, -hh),
                max: Vec3::new(self.finger_depth, -half_open, hh),
            },
            LocalBox {
                min: Vec3::new(-PALM_DEPTH, -half_open - FINGER_THICKNESS, -hh),
                max: Vec3::new(0.0, half_open + FINGER_THICKNESS, hh),
            },
        ]
    }

    /// Closing region between the fingers.
    pub fn closing_box(&self) -> LocalBox {
        LocalBox {
            min: Vec3::new(0.0, -self.max_opening / 2.0, -self.finger_height / 2.0),
            max: Vec3::new(self.finger_depth, self.max_opening / 2.0, self.finger_height / 2.0),
        }
    }

    /// Deterministic surface samples of the body boxes in world coordinates
    /// with outward normals, used for rendering the gripper into
    /// observations.
    pub fn surface_points(&self) -> Vec<(Vec3, Vec3)> {
        let pitch = 0.005;
        let mut out = Vec::new();
        for b in self.body_boxes() {
            let d = b.max.sub(b.min);
            let nx = (d.x() / pitch).ceil().max(1.0) as usize;
            let ny = (d.y() / pitch).ceil().max(1.0) as usize;
            let nz = (d.z() / pitch).ceil().max(1.0) as usize;
            for i in 0..=nx {
                for j in 0..=ny {
                    for k in 0..=nz {
                        // keep surface cells only
                        if i != 0 && i != nx && j != 0 && j != ny && k != 0 && k != nz {
                            continue;
                        }
                        let mut n = Vec3::ZERO;
                        if i == 0 {
                            n = n.add(Vec3::new(-1.0, 0.0, 0.0));
                        } else if i == nx {
                            n = n.add(Vec3::X);
                        }
                        if j == 0 {
                            n = n.add(Vec3::new(0.0, -1.0, 0.0));
                        } else if j == ny {
                            n = n.add(Vec3::Y);
                        }
                        if k == 0 {
                            n = n.add(Vec3::new(0.0, 0.0, -1.0));
                        } else if k == nz {
                            n = n.add(Vec3::Z);
                        }
                        let p = Vec3::new(
                            b.min.x() + d.x() * i as f64 / nx as f64,
                            b.min.y() + d.y() * j as f64 / ny as f64,
                            b.min.z() + d.z() * k as f64 / nz as f64,
                        );
                        out.push((self.pose.apply(p), self.pose.rotation.apply(n.normalized())));
                    }
                }
            }
        }
        out
    }
}

/// The full desk scene: one table, up to one target object, two grippers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableScene {
    pub task: TaskKind,
    pub objects: Vec<ObjectModel>,
    pub assistant: Gripper,
    pub primary: Gripper,
    pub seed: u64,
}

impl TableScene {
    pub fn gripper(&self, id: GripperId) -> &Gripper {
        match id {
            GripperId::Assistant => &self.assistant,
            GripperId::Primary => &self.primary,
        }
    }

    pub fn gripper_mut(&mut self, id: GripperId) -> &mut Gripper {
        match id {
            GripperId::Assistant => &mut self.assistant,
            GripperId::Primary => &mut self.primary,
        }
    }

    pub fn target(&self) -> Option<&ObjectModel> {
        self.objects.first()
    }

    pub fn target_mut(&mut self) -> Option<&mut ObjectModel> {
        self.objects.first_mut()
    }

    /// Stable content hash over poses, joint values, and states; used to
    /// verify that rejected actions leave the scene untouched.
    pub fn state_hash(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        fn feed_pose<H: Hasher>(h: &mut H, p: &Pose) {
            for row in p.rotation.m {
                for v in row {
                    v.to_bits().hash(h);
                }
            }
            for v in p.translation.0 {
                v.to_bits().hash(h);
            }
        }
        for o in &self.objects {
            feed_pose(&mut h, &o.pose);
            if let Some(j) = &o.joint {
                j.value.to_bits().hash(&mut h);
            }
            (o.state as u8).hash(&mut h);
        }
        for g in [&self.assistant, &self.primary] {
            feed_pose(&mut h, &g.pose);
            g.attachment.is_some().hash(&mut h);
        }
        h.finish()
    }
}

/// Places an object on the table with a uniform random yaw and the stable
/// resting orientation of its category, and parks both grippers at their
/// home poses (+-0.8, 0, 0.4).
pub fn spawn_scene(
    task: TaskKind,
    mut object: ObjectModel,
    seed: u64,
) -> Result<TableScene, SceneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51ed_2701_89ab_cdef);
    let yaw = rng.gen::<f64>() * std::f64::consts::TAU;
    let base = match object.category {
        Category::Plate | Category::ThinBox => Rotation::identity(),
        // Lying on the side: the canonical +z axis becomes horizontal.
        Category::Bottle | Category::Lighter => Rotation::rot_y(std::f64::consts::FRAC_PI_2),
        // Inverted: opening faces the table.
        Category::Bowl => Rotation::rot_x(std::f64::consts::PI),
    };
    let rotation = Rotation::rot_z(yaw).mul(&base);
    let ox = (rng.gen::<f64>() - 0.5) * 0.10;
    let oy = (rng.gen::<f64>() - 0.5) * 0.10;

    object.pose = Pose::new(rotation, Vec3::new(ox, oy, 0.0));
    let drop = object.lowest_decile_height();
    object.pose.translation = Vec3::new(ox, oy, -drop);
    object.state = ObjectState::OnTable;
    object.joint_initial = object.joint.map(|j| j.value).unwrap_or(0.0);

    let margin = 0.05;
    for p in object.world_points() {
        if p.x().abs() > TABLE_X - margin || p.y().abs() > TABLE_Y - margin {
            return Err(SceneError::PlacementInfeasible);
        }
    }

    Ok(TableScene {
        task,
        objects: vec![object],
        assistant: Gripper::at_home(-0.8),
        primary: Gripper::at_home(0.8),
        seed,
    })
}

/// Minimum upward normal component for a surface sample to face the camera.
const UP_FACING_MIN: f64 = 0.05;
/// Splat radius for point-sample occlusion: a point is hidden when another
/// surface point lies within this horizontal radius and sufficiently above.
const SPLAT_RADIUS: f64 = 0.009;
const OCCLUSION_GAP: f64 = 0.004;

/// Orthographic top-down z-buffer render over the table footprint (extended
/// past the push edge by [`RENDER_MARGIN_X`]). Down- and side-facing surface
/// samples are culled, per 4 mm cell the highest remaining point is kept,
/// and splat occlusion removes points buried under nearby higher surfaces.
/// The visible set is then reduced (or padded by repeating points) to
/// exactly [`CLOUD_SIZE`] points with farthest-point sampling.
pub fn render_partial_cloud(
    scene: &TableScene,
    include_table: bool,
) -> Result<LabeledCloud, SceneError> {
    let nx = ((2.0 * TABLE_X + RENDER_MARGIN_X) / GRID_PITCH).round() as usize;
    let ny = (2.0 * TABLE_Y / GRID_PITCH).round() as usize;
    let mut best: Vec<Option<(Vec3, PartLabel, f64)>> = vec![None; nx * ny];

    let cell_of = |p: Vec3| -> Option<(usize, usize)> {
        if p.x() < -TABLE_X || p.x() > TABLE_X + RENDER_MARGIN_X || p.y().abs() > TABLE_Y {
            return None;
        }
        let ix = (((p.x() + TABLE_X) / GRID_PITCH) as usize).min(nx - 1);
        let iy = (((p.y() + TABLE_Y) / GRID_PITCH) as usize).min(ny - 1);
        Some((ix, iy))
    };
    let consider = |p: Vec3,
                    n: Vec3,
                    label: PartLabel,
                    best: &mut Vec<Option<(Vec3, PartLabel, f64)>>| {
        if n.z() < UP_FACING_MIN {
            return;
        }
        let Some((ix, iy)) = cell_of(p) else { return };
        let cell = &mut best[iy * nx + ix];
        match cell {
            Some((_, _, z)) if *z >= p.z() => {}
            _ => *cell = Some((p, label, p.z())),
        }
    };

    for obj in &scene.objects {
        if obj.state == ObjectState::Fallen {
            continue;
        }
        for i in 0..obj.canonical_points.len() {
            consider(obj.world_point(i), obj.world_normal(i), obj.labels[i], &mut best);
        }
    }
    for (g, id) in [(&scene.assistant, GripperId::Assistant), (&scene.primary, GripperId::Primary)] {
        for (p, n) in g.surface_points() {
            consider(p, n, id.label(), &mut best);
        }
    }
    if include_table {
        for iy in 0..ny {
            for ix in 0..(2.0 * TABLE_X / GRID_PITCH).round() as usize {
                let p = Vec3::new(
                    -TABLE_X + (ix as f64 + 0.5) * GRID_PITCH,
                    -TABLE_Y + (iy as f64 + 0.5) * GRID_PITCH,
                    0.0,
                );
                consider(p, Vec3::Z, PartLabel::Table, &mut best);
            }
        }
    }

    // Occluder grid: highest surface sample per cell over ALL samples
    // (including side- and down-facing ones), since any solid surface above
    // a point blocks the camera ray.
    let mut occ: Vec<Option<(f64, f64, f64)>> = vec![None; nx * ny];
    {
        let feed = |p: Vec3, occ: &mut Vec<Option<(f64, f64, f64)>>| {
            let Some((ix, iy)) = cell_of(p) else { return };
            let cell = &mut occ[iy * nx + ix];
            match cell {
                Some((z, _, _)) if *z >= p.z() => {}
                _ => *cell = Some((p.z(), p.x(), p.y())),
            }
        };
        for obj in &scene.objects {
            if obj.state == ObjectState::Fallen {
                continue;
            }
            for i in 0..obj.canonical_points.len() {
                feed(obj.world_point(i), &mut occ);
            }
        }
        for g in [&scene.assistant, &scene.primary] {
            for (p, _) in g.surface_points() {
                feed(p, &mut occ);
            }
        }
    }

    // Splat occlusion: drop a cell winner when a nearby sample sits
    // sufficiently above it (sparse samples stand in for solid surface).
    let reach = (SPLAT_RADIUS / GRID_PITCH).ceil() as isize;
    let occluded = |p: Vec3| -> bool {
        let Some((ix, iy)) = cell_of(p) else { return true };
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let (jx, jy) = (ix as isize + dx, iy as isize + dy);
                if jx < 0 || jy < 0 || jx >= nx as isize || jy >= ny as isize {
                    continue;
                }
                if let Some((qz, qx, qy)) = &occ[jy as usize * nx + jx as usize] {
                    let dxy = Vec3::new(qx - p.x(), qy - p.y(), 0.0).norm();
                    if dxy <= SPLAT_RADIUS && *qz >= p.z() + OCCLUSION_GAP {
                        return true;
                    }
                }
            }
        }
        false
    };

    let mut visible: Vec<(Vec3, PartLabel)> = best
        .iter()
        .flatten()
        .map(|(p, l, _)| (*p, *l))
        .filter(|(p, _)| !occluded(*p))
        .collect();
    if visible.is_empty() {
        return Err(SceneError::EmptyScene);
    }

    if visible.len() <= CLOUD_SIZE {
        let m = visible.len();
        let mut i = 0;
        while visible.len() < CLOUD_SIZE {
            visible.push(visible[i % m]);
            i += 1;
        }
    } else {
        visible = farthest_point_sample(&visible, CLOUD_SIZE);
    }

    let (points, labels) = visible.into_iter().unzip();
    Ok(LabeledCloud::new(points, labels))
}

fn farthest_point_sample(pts: &[(Vec3, PartLabel)], n: usize) -> Vec<(Vec3, PartLabel)> {
    let mut chosen = Vec::with_capacity(n);
    let mut dist = vec![f64::INFINITY; pts.len()];
    let mut current = 0usize;
    chosen.push(pts[0]);
    for _ in 1..n {
        let base = pts[current].0;
        let mut best_i = 0;
        let mut best_d = f64::NEG_INFINITY;
        for (i, d) in dist.iter_mut().enumerate() {
            let nd = pts[i].0.sub(base).norm();
            if nd < *d {
                *d = nd;
            }
            if *d > best_d {
                best_d = *d;
                best_i = i;
            }
        }
        current = best_i;
        chosen.push(pts[current]);
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plate() -> ObjectModel {
        generate_object(
            Category::Plate,
            ShapeParams::Plate { radius: 0.10, thickness: 0.01 },
            7,
        )
        .unwrap()
    }

    #[test]
    fn plate_points_within_radius_all_fixed() {
        let p = plate();
        for (pt, label) in p.canonical_points.iter().zip(&p.labels) {
            let r = (pt.x() * pt.x() + pt.y() * pt.y()).sqrt();
            assert!(r <= 0.10 + 1e-9);
            assert_eq!(*label, PartLabel::Fixed);
        }
        assert_eq!(p.canonical_points.len(), MODEL_POINTS);
    }

    #[test]
    fn bottle_movable_is_exactly_the_cap() {
        let b = generate_object(
            Category::Bottle,
            ShapeParams::Bottle { body_radius: 0.03, height: 0.15 },
            3,
        )
        .unwrap();
        let joint = b.joint.unwrap();
        assert_eq!(joint.kind, JointKind::Prismatic);
        assert_eq!(joint.limits.0, 0.0);
        assert!((joint.limits.1 - 0.025).abs() < 1e-12);
        // Movable points all lie in the cap band (top 25 mm of the shape),
        // fixed points all below it.
        let cap_lo = b
            .canonical_points
            .iter()
            .zip(&b.labels)
            .filter(|(_, l)| **l == PartLabel::Movable)
            .map(|(p, _)| p.z())
            .fold(f64::INFINITY, f64::min);
        for (p, l) in b.canonical_points.iter().zip(&b.labels) {
            if *l == PartLabel::Fixed {
                assert!(p.z() <= cap_lo + 1e-9);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_object(
            Category::Bowl,
            ShapeParams::Bowl { radius: 0.08, depth: 0.04 },
            11,
        )
        .unwrap();
        let b = generate_object(
            Category::Bowl,
            ShapeParams::Bowl { radius: 0.08, depth: 0.04 },
            11,
        )
        .unwrap();
        assert_eq!(a.canonical_points, b.canonical_points);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn bad_shape_params_rejected() {
        assert!(matches!(
            generate_object(
                Category::Plate,
                ShapeParams::Plate { radius: 0.3, thickness: 0.01 },
                0,
            ),
            Err(SceneError::BadShapeParams(_))
        ));
        assert!(matches!(
            generate_object(
                Category::Plate,
                ShapeParams::Bottle { body_radius: 0.03, height: 0.15 },
                0,
            ),
            Err(SceneError::BadShapeParams(_))
        ));
    }

    #[test]
    fn spawned_plate_sits_flat_inside_footprint() {
        for seed in 0..20 {
            let scene = spawn_scene(TaskKind::PlateLifting, plate(), seed).unwrap();
            let obj = scene.target().unwrap();
            for p in obj.world_points() {
                assert!(p.z() > -1e-6 && p.z() < 0.030 + 1e-6);
                assert!(p.x().abs() <= TABLE_X && p.y().abs() <= TABLE_Y);
            }
            assert!(obj.lowest_decile_height().abs() <= 1e-3);
        }
    }

    #[test]
    fn spawned_bottle_lies_with_horizontal_axis() {
        let b = generate_object(
            Category::Bottle,
            ShapeParams::Bottle { body_radius: 0.03, height: 0.15 },
            5,
        )
        .unwrap();
        let scene = spawn_scene(TaskKind::Articulated, b, 9).unwrap();
        let axis = scene.target().unwrap().world_functional_axis();
        assert!(axis.z().abs() <= 1e-6);
    }

    #[test]
    fn spawn_yaws_are_distinct_across_seeds() {
        let mut yaws = Vec::new();
        for seed in 0..100 {
            let scene = spawn_scene(TaskKind::PlateLifting, plate(), seed).unwrap();
            let r = scene.target().unwrap().pose.rotation;
            yaws.push(f64::atan2(r.m[1][0], r.m[0][0]));
        }
        yaws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in yaws.windows(2) {
            assert!(w[1] - w[0] > 1e-12);
        }
    }

    #[test]
    fn render_has_fixed_size_and_respects_grid() {
        let scene = spawn_scene(TaskKind::PlateLifting, plate(), 2).unwrap();
        let cloud = render_partial_cloud(&scene, false).unwrap();
        assert_eq!(cloud.len(), CLOUD_SIZE);
        assert!(cloud.is_finite());
        // Every rendered point must be a true surface point of the scene.
        let surface = scene.target().unwrap().world_points();
        for p in &cloud.points {
            let nearest = surface.iter().map(|s| s.sub(*p).norm()).fold(f64::INFINITY, f64::min);
            assert!(nearest <= GRID_PITCH);
        }
    }

    #[test]
    fn render_only_top_faces_of_flat_box() {
        let b = generate_object(
            Category::ThinBox,
            ShapeParams::ThinBox { sx: 0.15, sy: 0.12, sz: 0.015 },
            4,
        )
        .unwrap();
        let scene = spawn_scene(TaskKind::EdgePushing, b, 3).unwrap();
        let cloud = render_partial_cloud(&scene, false).unwrap();
        // Only top-face points may appear: every rendered point sits at the
        // slab's top plane (side faces are vertical, the bottom is occluded).
        let surface = scene.target().unwrap().world_points();
        let top = surface.iter().map(|p| p.z()).fold(f64::NEG_INFINITY, f64::max);
        for p in &cloud.points {
            assert!(p.z() > top - 1e-6, "side/bottom point leaked: {:?}", p);
        }
    }

    #[test]
    fn occluded_object_is_invisible() {
        // A small box fully under a larger box: no rendered point may carry
        // the small box's points.
        let big = generate_object(
            Category::ThinBox,
            ShapeParams::ThinBox { sx: 0.2, sy: 0.2, sz: 0.02 },
            1,
        )
        .unwrap();
        let small = generate_object(
            Category::ThinBox,
            ShapeParams::ThinBox { sx: 0.08, sy: 0.08, sz: 0.008 },
            2,
        )
        .unwrap();
        let mut scene = spawn_scene(TaskKind::EdgePushing, small, 0).unwrap();
        // center both at the origin; raise the big box above the small one
        let mut small_obj = scene.objects[0].clone();
        small_obj.pose = Pose::from_translation(Vec3::ZERO);
        let mut big_obj = big;
        big_obj.pose = Pose::from_translation(Vec3::new(0.0, 0.0, 0.05));
        scene.objects = vec![small_obj.clone(), big_obj];
        let cloud = render_partial_cloud(&scene, false).unwrap();
        let small_pts = small_obj.world_points();
        for p in &cloud.points {
            let near_small = small_pts.iter().any(|s| s.sub(*p).norm() < 1e-9);
            assert!(!near_small);
        }
    }

    #[test]
    fn empty_scene_errors() {
        let mut scene = spawn_scene(TaskKind::PlateLifting, plate(), 2).unwrap();
        scene.objects.clear();
        assert_eq!(render_partial_cloud(&scene, false), Err(SceneError::EmptyScene));
    }

    #[test]
    fn transform_points_cases() {
        let cloud = LabeledCloud::new(
            vec![Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO],
            vec![PartLabel::Fixed, PartLabel::Movable],
        );
        let same = transform_points(&Pose::identity(), &cloud);
        assert_eq!(same, cloud);

        let shifted = transform_points(&Pose::from_translation(Vec3::X), &cloud);
        assert!(shifted.points[1].sub(Vec3::X).norm() < 1e-12);

        let rot = Pose::new(Rotation::rot_z(std::f64::consts::FRAC_PI_2), Vec3::ZERO);
        let turned = transform_points(&rot, &cloud);
        assert!(turned.points[0].sub(Vec3::Y).norm() < 1e-12);
        assert_eq!(turned.labels, cloud.labels);
    }

    #[test]
    fn transform_points_inverse_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cloud = LabeledCloud::new(
            (0..50)
                .map(|_| Vec3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()))
                .collect(),
            vec![PartLabel::Fixed; 50],
        );
        let t = Pose::new(
            crate::geometry::random_rotation(&mut rng),
            Vec3::new(0.2, -0.3, 0.1),
        );
        let back = transform_points(&t.inverse(), &transform_points(&t, &cloud));
        for (a, b) in back.points.iter().zip(&cloud.points) {
            assert!(a.sub(*b).norm() < 1e-9);
        }
    }
}
