//! SE(3)/SO(3) algebra for gripper and object frames.
//!
//! Rotations are stored as full 3x3 matrices; composition is plain matrix
//! multiplication, so there is no sign or double-cover ambiguity. Quaternions
//! appear only in tests as an independent oracle. Everything here is pure and
//! double precision.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Orthonormality / determinant tolerance for [`Rotation`] validity checks.
pub const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate 6d rotation input (zero or collinear vectors)")]
    DegenerateInput,
    #[error("axis vector has near-zero norm")]
    ZeroAxis,
}

/// 3-vector in meters (or dimensionless for directions).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0, 0.0, 0.0]);
    pub const X: Vec3 = Vec3([1.0, 0.0, 0.0]);
    pub const Y: Vec3 = Vec3([0.0, 1.0, 0.0]);
    pub const Z: Vec3 = Vec3([0.0, 0.0, 1.0]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn add(&self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    pub fn sub(&self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }

    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn dot(&self, o: Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(&self, o: Vec3) -> Vec3 {
        Vec3([
            self.0[1] * o.0[2] - self.0[2] * o.0[1],
            self.0[2] * o.0[0] - self.0[0] * o.0[2],
            self.0[0] * o.0[1] - self.0[1] * o.0[0],
        ])
    }

    pub fn norm(&self) -> f64 {
        self.dot(*self).sqrt()
    }

    pub fn normalized(&self) -> Vec3 {
        let n = self.norm();
        self.scale(1.0 / n)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Angle to another vector in radians, clamped against round-off.
    pub fn angle_to(&self, o: Vec3) -> f64 {
        let c = self.dot(o) / (self.norm() * o.norm());
        c.clamp(-1.0, 1.0).acos()
    }
}

/// 3x3 rotation matrix, row-major. Columns are the rotated frame axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub m: [[f64; 3]; 3],
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Rotation { m }
    }

    /// Build from the three column vectors (frame axes).
    pub fn from_columns(x: Vec3, y: Vec3, z: Vec3) -> Self {
        Rotation {
            m: [
                [x.0[0], y.0[0], z.0[0]],
                [x.0[1], y.0[1], z.0[1]],
                [x.0[2], y.0[2], z.0[2]],
            ],
        }
    }

    pub fn column(&self, c: usize) -> Vec3 {
        Vec3([self.m[0][c], self.m[1][c], self.m[2][c]])
    }

    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation {
            m: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        }
    }

    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation {
            m: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        }
    }

    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Rotation of `angle` radians about an arbitrary unit axis (Rodrigues).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, GeometryError> {
        if axis.norm() < 1e-9 {
            return Err(GeometryError::ZeroAxis);
        }
        let a = axis.normalized();
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let (x, y, z) = (a.0[0], a.0[1], a.0[2]);
        Ok(Rotation {
            m: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
        })
    }

    /// Shortest rotation mapping unit vector `from` onto unit vector `to`.
    /// Antiparallel inputs rotate by pi about an arbitrary perpendicular axis.
    pub fn between(from: Vec3, to: Vec3) -> Result<Self, GeometryError> {
        if from.norm() < 1e-9 || to.norm() < 1e-9 {
            return Err(GeometryError::ZeroAxis);
        }
        let f = from.normalized();
        let t = to.normalized();
        let c = f.dot(t).clamp(-1.0, 1.0);
        let axis = f.cross(t);
        if axis.norm() < 1e-12 {
            if c > 0.0 {
                return Ok(Rotation::identity());
            }
            // pick any axis perpendicular to f
            let pick = if f.0[0].abs() < 0.9 { Vec3::X } else { Vec3::Y };
            let perp = f.cross(pick).normalized();
            return Rotation::from_axis_angle(perp, std::f64::consts::PI);
        }
        Rotation::from_axis_angle(axis.normalized(), c.acos())
    }

    pub fn mul(&self, o: &Rotation) -> Rotation {
        let mut m = [[0.0; 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[r][k] * o.m[k][c]).sum();
            }
        }
        Rotation { m }
    }

    pub fn transpose(&self) -> Rotation {
        let mut m = [[0.0; 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = self.m[c][r];
            }
        }
        Rotation { m }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        Vec3([
            self.m[0][0] * v.0[0] + self.m[0][1] * v.0[1] + self.m[0][2] * v.0[2],
            self.m[1][0] * v.0[0] + self.m[1][1] * v.0[1] + self.m[1][2] * v.0[2],
            self.m[2][0] * v.0[0] + self.m[2][1] * v.0[1] + self.m[2][2] * v.0[2],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max deviation of R^T R from the identity plus the determinant error.
    pub fn orthonormality_error(&self) -> f64 {
        let rtr = self.transpose().mul(self);
        let mut err: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                let target = if r == c { 1.0 } else { 0.0 };
                err = err.max((rtr.m[r][c] - target).abs());
            }
        }
        err.max((self.det() - 1.0).abs())
    }

    pub fn is_valid(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite()) && self.orthonormality_error() <= ROTATION_TOL
    }

    /// First two columns, the continuous 6-number encoding of this rotation.
    pub fn to_rot6d(&self) -> Rot6D {
        Rot6D {
            a: self.column(0),
            b: self.column(1),
        }
    }

    pub fn flat(&self) -> [f64; 9] {
        [
            self.m[0][0], self.m[0][1], self.m[0][2],
            self.m[1][0], self.m[1][1], self.m[1][2],
            self.m[2][0], self.m[2][1], self.m[2][2],
        ]
    }

    pub fn from_flat(v: &[f64]) -> Rotation {
        Rotation {
            m: [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]],
        }
    }
}

/// Rigid transform: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation: Vec3::ZERO,
        }
    }

    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Pose { rotation, translation }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation: t,
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.apply(p).add(self.translation)
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: rt.apply(self.translation).scale(-1.0),
        }
    }

    /// Row-major 4x4 homogeneous matrix, for serialization.
    pub fn to_matrix16(&self) -> [f64; 16] {
        let m = &self.rotation.m;
        let t = &self.translation.0;
        [
            m[0][0], m[0][1], m[0][2], t[0],
            m[1][0], m[1][1], m[1][2], t[1],
            m[2][0], m[2][1], m[2][2], t[2],
            0.0, 0.0, 0.0, 1.0,
        ]
    }

    pub fn from_matrix16(v: &[f64]) -> Pose {
        Pose {
            rotation: Rotation {
                m: [[v[0], v[1], v[2]], [v[4], v[5], v[6]], [v[8], v[9], v[10]]],
            },
            translation: Vec3([v[3], v[7], v[11]]),
        }
    }
}

/// Transform composition: `compose(a, b)` maps a point as `a(b(x))`.
pub fn compose(a: &Pose, b: &Pose) -> Pose {
    Pose {
        rotation: a.rotation.mul(&b.rotation),
        translation: a.rotation.apply(b.translation).add(a.translation),
    }
}

/// Angular discrepancy between two rotations:
/// arccos((Tr(d^T d*) - 1) / 2), argument clamped to [-1, 1] because the
/// trace can exceed the bound by ~1e-16 of round-off.
pub fn geodesic_distance(d: &Rotation, d_star: &Rotation) -> f64 {
    let t = d.transpose().mul(d_star).trace();
    (((t - 1.0) / 2.0).clamp(-1.0, 1.0)).acos()
}

/// Anticipatory gripper orientation: carries the final-stage gripper rotation
/// back through the object's pose change, so the gripper-object relative
/// rotation is identical before and after the preparatory motion.
///
/// Returns `R_obj_init * R_obj_fin^T * R_grp_fin`.
pub fn anticipatory_gripper_rotation(
    r_obj_init: &Rotation,
    r_obj_fin: &Rotation,
    r_grp_fin: &Rotation,
) -> Rotation {
    r_obj_init.mul(&r_obj_fin.transpose()).mul(r_grp_fin)
}

/// Gripper pose that realizes a desired object pose while preserving the
/// gripper-object relative transform established at grasp time.
///
/// Returns `T_obj_reorient * inverse(T_obj_grasped) * T_grp_grasped`.
pub fn reorient_gripper_pose(
    t_obj_reorient: &Pose,
    t_obj_grasped: &Pose,
    t_grp_grasped: &Pose,
) -> Pose {
    compose(&compose(t_obj_reorient, &t_obj_grasped.inverse()), t_grp_grasped)
}

/// Two 3-vectors that decode to a rotation by Gram-Schmidt. The network-facing
/// continuous parameterization of SO(3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rot6D {
    pub a: Vec3,
    pub b: Vec3,
}

impl Rot6D {
    pub fn identity() -> Self {
        Rot6D { a: Vec3::X, b: Vec3::Y }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Rot6D {
            a: Vec3([v[0], v[1], v[2]]),
            b: Vec3([v[3], v[4], v[5]]),
        }
    }

    pub fn flat(&self) -> [f64; 6] {
        [
            self.a.0[0], self.a.0[1], self.a.0[2],
            self.b.0[0], self.b.0[1], self.b.0[2],
        ]
    }
}

/// Gram-Schmidt decode: x = normalize(a); z = normalize(x cross b); y = z cross x.
/// Columns of the result are (x, y, z).
pub fn rot6d_decode(v: &Rot6D) -> Result<Rotation, GeometryError> {
    if v.a.norm() < 1e-8 {
        return Err(GeometryError::DegenerateInput);
    }
    let x = v.a.normalized();
    let zc = x.cross(v.b);
    if zc.norm() < 1e-8 {
        return Err(GeometryError::DegenerateInput);
    }
    let z = zc.normalized();
    let y = z.cross(x);
    Ok(Rotation::from_columns(x, y, z))
}

/// Haar-uniform random rotation via a normalized 4-Gaussian quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation {
    let normal = rand_distr::StandardNormal;
    let q: [f64; 4] = [
        rng.sample(normal),
        rng.sample(normal),
        rng.sample(normal),
        rng.sample(normal),
    ];
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    Rotation {
        m: [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ],
    }
}

/// Unit vector at most `max_angle` from `axis`, uniform over the spherical cap.
pub fn perturb_within_cone<R: Rng>(
    axis: Vec3,
    max_angle: f64,
    rng: &mut R,
) -> Result<Vec3, GeometryError> {
    if axis.norm() < 1e-9 {
        return Err(GeometryError::ZeroAxis);
    }
    let a = axis.normalized();
    if max_angle <= 0.0 {
        return Ok(a);
    }
    // Uniform on the cap: cos(theta) uniform in [cos(max), 1].
    let cos_max = max_angle.cos();
    let cos_t: f64 = 1.0 - rng.gen::<f64>() * (1.0 - cos_max);
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let phi = rng.gen::<f64>() * std::f64::consts::TAU;
    let local = Vec3([sin_t * phi.cos(), sin_t * phi.sin(), cos_t]);
    let frame = Rotation::between(Vec3::Z, a)?;
    Ok(frame.apply(local))
}
