//! Quasi-static kinematic stepping: grasping, pushing, lifting, joint
//! actuation, the plate press, and the task success predicates.
//!
//! All motion is teleported in small steps with exact geometric predicates;
//! there are no forces. Rejected actions (collision, no contact) leave the
//! scene bit-identical. Pushing is translation-only: the object moves by the
//! pusher travel beyond first contact, then support under the lowest-decile
//! points decides whether it stays on the table.

use crate::geometry::{compose, Pose, Rotation, Vec3};
use crate::scene::{
    Attachment, Category, GripperId, ObjectState, PartLabel, TableScene, TaskKind, TABLE_X,
    TABLE_Y,
};
use serde::{Deserialize, Serialize};

/// Result of a simulator action. The scene is updated in place; every
/// non-mutating outcome (Collision, NoContact, Unstable on entry checks)
/// leaves it untouched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionOutcome {
    Ok,
    NoContact,
    Collision,
    Unstable,
    JointMoved(f64),
    Fallen,
}

impl ActionOutcome {
    pub fn succeeded(&self) -> bool {
        match self {
            ActionOutcome::Ok => true,
            ActionOutcome::JointMoved(d) => *d > 0.0,
            _ => false,
        }
    }
}

/// Tunable simulator thresholds. Success thresholds are choices of this
/// artifact, not published values, so they live in config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub approach_standoff: f64,
    pub approach_step: f64,
    pub attach_min_points: usize,
    pub support_threshold: f64,
    pub joint_contact_radius: f64,
    pub joint_angle_gate: f64,
    pub joint_success_fraction: f64,
    pub success_lift_height: f64,
    pub press_angle: f64,
    pub press_rim_fraction: f64,
    pub press_down_gate: f64,
    pub pregrasp_insertion: f64,
    pub edge_tip_past_contact: f64,
    pub grasp_vertical_offset: f64,
    pub assistant_lift: f64,
    pub primary_lift: f64,
    pub default_push_overshoot: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            approach_standoff: 0.15,
            approach_step: 0.005,
            attach_min_points: 5,
            support_threshold: 0.5,
            joint_contact_radius: 0.008,
            joint_angle_gate: 30f64.to_radians(),
            joint_success_fraction: 0.20,
            success_lift_height: 0.10,
            press_angle: 12f64.to_radians(),
            press_rim_fraction: 0.8,
            press_down_gate: 30f64.to_radians(),
            pregrasp_insertion: 0.02,
            edge_tip_past_contact: 0.015,
            grasp_vertical_offset: 0.005,
            assistant_lift: 0.10,
            primary_lift: 0.15,
            default_push_overshoot: 0.03,
        }
    }
}

/// True when the gripper body at `pose` penetrates the table slab or any
/// object point it is not itself holding.
fn gripper_collides(scene: &TableScene, id: GripperId, pose: &Pose) -> bool {
    let gripper = scene.gripper(id);
    let boxes = gripper.body_boxes();
    let inv = pose.inverse();

    // Table slab: any body corner below the table top, over the footprint.
    for b in &boxes {
        for corner in b.corners() {
            let w = pose.apply(corner);
            if w.z() < -1e-12 && w.x().abs() <= TABLE_X && w.y().abs() <= TABLE_Y {
                return true;
            }
        }
    }

    let held_by_self = gripper.attachment.is_some();
    for obj in &scene.objects {
        if obj.state == ObjectState::Fallen {
            continue;
        }
        // The object rigidly held by this gripper moves with it and was
        // collision-free at attach time.
        if held_by_self && obj.state == ObjectState::Grasped {
            continue;
        }
        for i in 0..obj.canonical_points.len() {
            let local = inv.apply(obj.world_point(i));
            if boxes.iter().any(|b| b.contains(local)) {
                return true;
            }
        }
    }
    false
}

/// Indices of target-object points inside the closing region of a gripper
/// placed at `pose`.
fn points_in_closing(scene: &TableScene, id: GripperId, pose: &Pose) -> Vec<usize> {
    let closing = scene.gripper(id).closing_box();
    let inv = pose.inverse();
    let Some(obj) = scene.target() else { return Vec::new() };
    (0..obj.canonical_points.len())
        .filter(|&i| closing.contains(inv.apply(obj.world_point(i))))
        .collect()
}

/// The antipodal proxy: enough points in the closing region, with points on
/// both signs of the local y axis.
fn attach_predicate(scene: &TableScene, cfg: &SimConfig, id: GripperId, pose: &Pose) -> bool {
    let inside = points_in_closing(scene, id, pose);
    if inside.len() < cfg.attach_min_points {
        return false;
    }
    let Some(obj) = scene.target() else { return false };
    let inv = pose.inverse();
    let mut neg = false;
    let mut pos = false;
    for &i in &inside {
        let y = inv.apply(obj.world_point(i)).y();
        neg |= y < 0.0;
        pos |= y > 0.0;
    }
    neg && pos
}

fn drop_to_table(scene: &mut TableScene, cfg: &SimConfig) {
    let threshold = cfg.support_threshold;
    if let Some(obj) = scene.target_mut() {
        let dz = obj.lowest_decile_height();
        obj.pose.translation = obj.pose.translation.sub(Vec3::new(0.0, 0.0, dz));
        obj.state = if obj.support_fraction() >= threshold {
            ObjectState::OnTable
        } else {
            ObjectState::Fallen
        };
    }
}

/// Teleports the gripper toward `target` along its forward axis from a
/// standoff, in small steps, and closes on whatever object points fall
/// inside the channel. Attaches on the antipodal predicate.
pub fn attempt_grasp(
    scene: &mut TableScene,
    cfg: &SimConfig,
    id: GripperId,
    target: &Pose,
) -> ActionOutcome {
    let Some(obj) = scene.target() else { return ActionOutcome::NoContact };
    if obj.state == ObjectState::Fallen {
        return ActionOutcome::NoContact;
    }

    let forward = target.rotation.column(0);
    let steps = (cfg.approach_standoff / cfg.approach_step).round() as usize;
    for k in 0..=steps {
        let back = cfg.approach_standoff - k as f64 * cfg.approach_step;
        let pose = Pose::new(
            target.rotation,
            target.translation.sub(forward.scale(back.max(0.0))),
        );
        if gripper_collides(scene, id, &pose) {
            return ActionOutcome::Collision;
        }
    }

    if !attach_predicate(scene, cfg, id, target) {
        return ActionOutcome::NoContact;
    }

    let inside = points_in_closing(scene, id, target);
    let holds_movable = {
        let obj = scene.target().unwrap();
        inside.iter().any(|&i| obj.labels[i] == PartLabel::Movable)
    };
    let relative = compose(&target.inverse(), &scene.target().unwrap().pose);
    scene.gripper_mut(id).pose = *target;
    scene.gripper_mut(id).attachment = Some(Attachment { relative, holds_movable });
    if let Some(obj) = scene.target_mut() {
        obj.state = ObjectState::Grasped;
    }
    ActionOutcome::Ok
}

/// Earliest sweep parameter at which any target-object point enters a body
/// box of the gripper translated along `dir`, or None when the swept volume
/// misses the object entirely over `[0, distance]`.
fn first_contact(
    scene: &TableScene,
    id: GripperId,
    start: &Pose,
    dir: Vec3,
    distance: f64,
) -> Option<f64> {
    let gripper = scene.gripper(id);
    let obj = scene.target()?;
    let inv_rot = start.rotation.transpose();
    let d_local = inv_rot.apply(dir);
    let mut best: Option<f64> = None;
    for b in gripper.body_boxes() {
        for i in 0..obj.canonical_points.len() {
            let q = inv_rot.apply(obj.world_point(i).sub(start.translation));
            // Solve q - s*d_local inside [min, max] per axis.
            let mut lo = 0.0f64;
            let mut hi = distance;
            let mut feasible = true;
            for axis in 0..3 {
                let (bmin, bmax) = (b.min.0[axis], b.max.0[axis]);
                let (qa, da) = (q.0[axis], d_local.0[axis]);
                if da.abs() < 1e-12 {
                    if qa < bmin || qa > bmax {
                        feasible = false;
                        break;
                    }
                } else {
                    let mut s0 = (qa - bmax) / da;
                    let mut s1 = (qa - bmin) / da;
                    if s0 > s1 {
                        std::mem::swap(&mut s0, &mut s1);
                    }
                    lo = lo.max(s0);
                    hi = hi.min(s1);
                    if lo > hi {
                        feasible = false;
                        break;
                    }
                }
            }
            if feasible {
                best = Some(best.map_or(lo, |b: f64| b.min(lo)));
            }
        }
    }
    best
}

/// Horizontal quasi-static push: the object translates (no rotation) by the
/// pusher travel beyond first contact, then the support fraction decides
/// whether it stays on the table.
pub fn push(
    scene: &mut TableScene,
    cfg: &SimConfig,
    id: GripperId,
    contact_pose: &Pose,
    direction: Vec3,
    distance: f64,
) -> ActionOutcome {
    debug_assert!(direction.z().abs() <= 1e-6, "push direction must be horizontal");
    debug_assert!(distance > 0.0 && distance <= 0.5);
    if scene.target().map_or(true, |o| o.state == ObjectState::Fallen) {
        return ActionOutcome::NoContact;
    }

    let Some(s_star) = first_contact(scene, id, contact_pose, direction, distance) else {
        return ActionOutcome::NoContact;
    };
    let travel = distance - s_star;
    if travel <= 0.0 {
        return ActionOutcome::NoContact;
    }

    let threshold = cfg.support_threshold;
    let grasped = scene.target().map(|o| o.state == ObjectState::Grasped).unwrap_or(false);
    if let Some(obj) = scene.target_mut() {
        obj.pose.translation = obj.pose.translation.add(direction.scale(travel));
        if !grasped {
            obj.state = if obj.support_fraction() >= threshold {
                ObjectState::OnTable
            } else {
                ObjectState::Fallen
            };
        }
    }
    scene.gripper_mut(id).pose = Pose::new(
        contact_pose.rotation,
        contact_pose.translation.add(direction.scale(distance)),
    );
    if scene.target().map(|o| o.state) == Some(ObjectState::Fallen) {
        ActionOutcome::Fallen
    } else {
        ActionOutcome::Ok
    }
}

/// Moves a gripper to an absolute pose. An attached object moves rigidly
/// with it; the grasp is re-validated at the new pose and the object drops
/// back to the table if the grasp no longer holds.
pub fn move_gripper(
    scene: &mut TableScene,
    cfg: &SimConfig,
    id: GripperId,
    target: &Pose,
) -> ActionOutcome {
    // Table collision at the target pose.
    let boxes = scene.gripper(id).body_boxes();
    for b in &boxes {
        for corner in b.corners() {
            let w = target.apply(corner);
            if w.z() < -1e-12 && w.x().abs() <= TABLE_X && w.y().abs() <= TABLE_Y {
                return ActionOutcome::Collision;
            }
        }
    }

    let attachment = scene.gripper(id).attachment;
    scene.gripper_mut(id).pose = *target;
    let Some(att) = attachment else { return ActionOutcome::Ok };

    if let Some(obj) = scene.target_mut() {
        obj.pose = compose(target, &att.relative);
    }
    if attach_predicate(scene, cfg, id, target) {
        ActionOutcome::Ok
    } else {
        scene.gripper_mut(id).attachment = None;
        drop_to_table(scene, cfg);
        ActionOutcome::Unstable
    }
}

/// Vertical lift by `dz`, with grasp re-validation.
pub fn lift(scene: &mut TableScene, cfg: &SimConfig, id: GripperId, dz: f64) -> ActionOutcome {
    let pose = scene.gripper(id).pose;
    let target = Pose::new(pose.rotation, pose.translation.add(Vec3::new(0.0, 0.0, dz)));
    move_gripper(scene, cfg, id, &target)
}

/// Actuates the target object's articulation: contact must land within
/// `joint_contact_radius` of a movable point and the motion direction within
/// `joint_angle_gate` of the joint's world free direction. The joint value
/// advances by the projected travel, clamped to the limits. A movable part
/// pinned inside a gripper's closing grip cannot be articulated.
pub fn actuate_joint(
    scene: &mut TableScene,
    cfg: &SimConfig,
    _id: GripperId,
    contact_point: Vec3,
    motion_dir: Vec3,
    travel: f64,
) -> ActionOutcome {
    let locked = [&scene.assistant, &scene.primary]
        .iter()
        .any(|g| g.attachment.map(|a| a.holds_movable).unwrap_or(false));
    let Some(obj) = scene.target() else { return ActionOutcome::NoContact };
    let Some(joint) = obj.joint else { return ActionOutcome::NoContact };
    if obj.state == ObjectState::Fallen || locked {
        return ActionOutcome::NoContact;
    }

    let near_movable = (0..obj.canonical_points.len()).any(|i| {
        obj.labels[i] == PartLabel::Movable
            && obj.world_point(i).sub(contact_point).norm() <= cfg.joint_contact_radius
    });
    if !near_movable {
        return ActionOutcome::NoContact;
    }

    let free_dir = obj.world_joint_direction().unwrap();
    let angle = motion_dir.angle_to(free_dir);
    if angle > cfg.joint_angle_gate {
        return ActionOutcome::NoContact;
    }

    let projected = travel * angle.cos();
    let obj = scene.target_mut().unwrap();
    let j = obj.joint.as_mut().unwrap();
    let new_value = (j.value + projected).clamp(j.limits.0, j.limits.1);
    let delta = new_value - j.value;
    j.value = new_value;
    ActionOutcome::JointMoved(delta)
}

/// Kinematic plate press: a valid press on the outer rim tilts the plate by
/// `press_angle` about the rim contact line under the press point, lifting
/// the opposite side. Invalid contact (off the rim band, or not pressing
/// downward) changes nothing.
pub fn press_tilt(
    scene: &mut TableScene,
    cfg: &SimConfig,
    id: GripperId,
    contact_pose: &Pose,
) -> ActionOutcome {
    let Some(obj) = scene.target() else { return ActionOutcome::NoContact };
    if obj.category != Category::Plate || obj.state != ObjectState::OnTable {
        return ActionOutcome::NoContact;
    }
    let Some((rim_radius, _)) = obj.rim() else { return ActionOutcome::NoContact };

    // Downward gate on the gripper forward axis.
    let forward = contact_pose.rotation.column(0);
    if forward.angle_to(Vec3::new(0.0, 0.0, -1.0)) > cfg.press_down_gate {
        scene.gripper_mut(id).pose = *contact_pose;
        return ActionOutcome::NoContact;
    }
    // Rim-band gate in the plate frame.
    let local = obj.pose.inverse().apply(contact_pose.translation);
    let radial = (local.x() * local.x() + local.y() * local.y()).sqrt();
    if radial < cfg.press_rim_fraction * rim_radius {
        scene.gripper_mut(id).pose = *contact_pose;
        return ActionOutcome::NoContact;
    }

    // Axis: the horizontal rim tangent under the press point, at table level.
    let center = obj.world_centroid();
    let to_press = Vec3::new(
        contact_pose.translation.x() - center.x(),
        contact_pose.translation.y() - center.y(),
        0.0,
    );
    if to_press.norm() < 1e-9 {
        return ActionOutcome::NoContact;
    }
    let u = to_press.normalized();
    let pivot = Vec3::new(
        center.x() + rim_radius * u.x(),
        center.y() + rim_radius * u.y(),
        0.0,
    );
    let tangent = Vec3::Z.cross(u).normalized();

    // Pick the rotation sign that lifts the far side.
    let far = Vec3::new(center.x() - rim_radius * u.x(), center.y() - rim_radius * u.y(), 0.0);
    let mut tilt = Rotation::from_axis_angle(tangent, cfg.press_angle).unwrap();
    if tilt.apply(far.sub(pivot)).add(pivot).z() < 0.0 {
        tilt = Rotation::from_axis_angle(tangent, -cfg.press_angle).unwrap();
    }
    let press = Pose::new(tilt, pivot.sub(tilt.apply(pivot)));

    let obj = scene.target_mut().unwrap();
    obj.pose = compose(&press, &obj.pose);
    scene.gripper_mut(id).pose = *contact_pose;
    ActionOutcome::Ok
}

/// Task success predicates on a terminal scene.
pub fn check_success(scene: &TableScene, cfg: &SimConfig, task: TaskKind) -> bool {
    let Some(obj) = scene.target() else { return false };
    match task {
        TaskKind::Articulated => match obj.joint {
            Some(j) => {
                obj.state != ObjectState::Fallen
                    && (j.value - obj.joint_initial).abs()
                        >= cfg.joint_success_fraction * j.range()
            }
            None => false,
        },
        TaskKind::EdgePushing | TaskKind::PlateLifting => {
            scene.primary.attachment.is_some()
                && obj.state == ObjectState::Grasped
                && obj.world_centroid().z() >= cfg.success_lift_height
        }
    }
}

// ---------------------------------------------------------------------------
// Execution primitives shared by the heuristic policies and learned rollouts:
// they turn a (contact point, gripper orientation) action into concrete
// simulator calls, with the per-task insertion conventions.
// ---------------------------------------------------------------------------

/// Top-down pre-grasp: the closing channel is centered `pregrasp_insertion`
/// past the contact point along the forward axis.
pub fn pregrasp_pose(cfg: &SimConfig, p: Vec3, d: &Rotation) -> Pose {
    let x = d.column(0);
    Pose::new(*d, p.sub(x.scale(cfg.pregrasp_insertion)))
}

/// Side grasp at an exposed edge or rim: fingertips reach a fixed distance
/// past the contact along the forward axis, and the channel center is
/// shifted slightly against local "up" so thin material straddles it.
pub fn edge_grasp_pose(cfg: &SimConfig, p: Vec3, d: &Rotation) -> Pose {
    let x = d.column(0);
    let y = d.column(1);
    let gripper_depth = 0.04;
    let origin = p
        .sub(x.scale(gripper_depth - cfg.edge_tip_past_contact))
        .sub(y.scale(cfg.grasp_vertical_offset * y.z().signum()));
    Pose::new(*d, origin)
}

/// Executes the assistant's preparatory action for the scene's task.
pub fn execute_pre_action(
    scene: &mut TableScene,
    cfg: &SimConfig,
    p: Vec3,
    d: &Rotation,
    push_overshoot: f64,
) -> ActionOutcome {
    match scene.task {
        TaskKind::Articulated => {
            let pose = pregrasp_pose(cfg, p, d);
            let out = attempt_grasp(scene, cfg, GripperId::Assistant, &pose);
            if out != ActionOutcome::Ok {
                return out;
            }
            lift(scene, cfg, GripperId::Assistant, cfg.assistant_lift)
        }
        TaskKind::EdgePushing => {
            let max_x = match scene.target() {
                Some(o) => o.max_world_x(),
                None => return ActionOutcome::NoContact,
            };
            let distance = (TABLE_X - max_x + push_overshoot).clamp(0.01, 0.5);
            push(scene, cfg, GripperId::Assistant, &Pose::new(*d, p), Vec3::X, distance)
        }
        TaskKind::PlateLifting => press_tilt(scene, cfg, GripperId::Assistant, &Pose::new(*d, p)),
    }
}

/// Executes the primary arm's goal-directed action for the scene's task.
pub fn execute_goal_action(
    scene: &mut TableScene,
    cfg: &SimConfig,
    p: Vec3,
    d: &Rotation,
) -> ActionOutcome {
    match scene.task {
        TaskKind::Articulated => {
            let travel = scene
                .target()
                .and_then(|o| o.joint)
                .map(|j| j.range())
                .unwrap_or(0.0);
            actuate_joint(scene, cfg, GripperId::Primary, p, d.column(0), travel)
        }
        TaskKind::EdgePushing | TaskKind::PlateLifting => {
            let pose = edge_grasp_pose(cfg, p, d);
            let out = attempt_grasp(scene, cfg, GripperId::Primary, &pose);
            if out != ActionOutcome::Ok {
                return out;
            }
            lift(scene, cfg, GripperId::Primary, cfg.primary_lift)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_object, spawn_scene, ShapeParams};

    fn cfg() -> SimConfig {
        SimConfig::default()
    }

    fn plate_scene(seed: u64) -> TableScene {
        let obj = generate_object(
            Category::Plate,
            ShapeParams::Plate { radius: 0.10, thickness: 0.01 },
            7,
        )
        .unwrap();
        spawn_scene(TaskKind::PlateLifting, obj, seed).unwrap()
    }

    fn box_scene(seed: u64) -> TableScene {
        let obj = generate_object(
            Category::ThinBox,
            ShapeParams::ThinBox { sx: 0.15, sy: 0.12, sz: 0.01 },
            3,
        )
        .unwrap();
        spawn_scene(TaskKind::EdgePushing, obj, seed).unwrap()
    }

    fn centered_box_scene(sx: f64, sy: f64, sz: f64) -> TableScene {
        let obj = generate_object(Category::ThinBox, ShapeParams::ThinBox { sx, sy, sz }, 3).unwrap();
        let mut scene = spawn_scene(TaskKind::EdgePushing, obj, 1).unwrap();
        let drop = {
            let o = scene.target_mut().unwrap();
            o.pose = Pose::identity();
            o.lowest_decile_height()
        };
        scene.target_mut().unwrap().pose.translation = Vec3::new(0.0, 0.0, -drop);
        scene
    }

    #[test]
    fn grasp_far_away_is_no_contact_and_side_effect_free() {
        let mut scene = plate_scene(1);
        let before = scene.state_hash();
        let target = Pose::from_translation(Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(attempt_grasp(&mut scene, &cfg(), GripperId::Primary, &target), ActionOutcome::NoContact);
        assert_eq!(scene.state_hash(), before);
    }

    #[test]
    fn fingertips_below_table_collide() {
        let mut scene = plate_scene(2);
        let before = scene.state_hash();
        // Forward axis pointing down, fingertips 1 cm below the table top,
        // over the footprint but away from the object.
        let down = Rotation::rot_y(std::f64::consts::FRAC_PI_2);
        let target = Pose::new(down, Vec3::new(-0.3, 0.4, 0.03));
        assert_eq!(attempt_grasp(&mut scene, &cfg(), GripperId::Primary, &target), ActionOutcome::Collision);
        assert_eq!(scene.state_hash(), before);
    }

    #[test]
    fn straddling_plate_edge_attaches() {
        // A parallel-jaw pose straddling a 10 mm slab: grasp from the +x side
        // pointing -x, fingers separated vertically.
        let mut scene = centered_box_scene(0.15, 0.12, 0.01);
        // Move the box so part of it overhangs free space (off the table edge
        // is not needed to test the closing predicate; grasp the slab high
        // enough that the lower finger stays above the table by lifting the
        // object first).
        let obj = scene.target_mut().unwrap();
        obj.pose.translation = obj.pose.translation.add(Vec3::new(0.0, 0.0, 0.12));
        let max_x = scene.target().unwrap().max_world_x();
        let d = Rotation::from_columns(
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 1.0, 0.0),
        );
        assert!(d.is_valid());
        // contact on the slab's top surface right at the exposed edge
        let p = Vec3::new(max_x - 0.004, 0.0, 0.13);
        let pose = edge_grasp_pose(&cfg(), p, &d);
        let out = attempt_grasp(&mut scene, &cfg(), GripperId::Primary, &pose);
        assert_eq!(out, ActionOutcome::Ok);
        assert!(scene.primary.attachment.is_some());

        // Brute-force oracle: recount points in the closing box and the sign
        // split around local y.
        let closing = scene.primary.closing_box();
        let inv = pose.inverse();
        let obj = scene.target().unwrap();
        let locals: Vec<Vec3> = obj
            .world_points()
            .into_iter()
            .map(|w| inv.apply(w))
            .filter(|l| closing.contains(*l))
            .collect();
        assert!(locals.len() >= 5);
        assert!(locals.iter().any(|l| l.y() > 0.0) && locals.iter().any(|l| l.y() < 0.0));
    }

    #[test]
    fn push_without_contact_leaves_scene_unchanged() {
        let mut scene = box_scene(4);
        let before = scene.state_hash();
        let pose = Pose::from_translation(Vec3::new(-0.35, 0.5, 0.3));
        let out = push(&mut scene, &cfg(), GripperId::Assistant, &pose, Vec3::X, 0.05);
        assert_eq!(out, ActionOutcome::NoContact);
        assert_eq!(scene.state_hash(), before);
    }

    #[test]
    fn push_translates_by_travel_beyond_first_contact() {
        let mut scene = centered_box_scene(0.15, 0.12, 0.012);
        let top = scene
            .target()
            .unwrap()
            .world_points()
            .iter()
            .map(|p| p.z())
            .fold(f64::NEG_INFINITY, f64::max);
        // Pusher already touching the top surface (downward fingers buried
        // to the contact): first contact at s = 0, full travel transmitted.
        let down = Rotation::rot_y(std::f64::consts::FRAC_PI_2);
        let contact = Pose::new(down, Vec3::new(0.0, 0.0, top));
        let before = scene.target().unwrap().world_centroid();
        let out = push(&mut scene, &cfg(), GripperId::Assistant, &contact, Vec3::X, 0.10);
        assert_eq!(out, ActionOutcome::Ok);
        let after = scene.target().unwrap().world_centroid();
        assert!((after.x() - before.x() - 0.10).abs() < 1e-9);
        assert!((after.y() - before.y()).abs() < 1e-12);
        assert!((scene.target().unwrap().support_fraction() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn push_past_edge_drops_object() {
        let mut scene = centered_box_scene(0.10, 0.10, 0.012);
        let top = scene
            .target()
            .unwrap()
            .world_points()
            .iter()
            .map(|p| p.z())
            .fold(f64::NEG_INFINITY, f64::max);
        let down = Rotation::rot_y(std::f64::consts::FRAC_PI_2);
        let contact = Pose::new(down, Vec3::new(0.0, 0.0, top));
        // Push until ~60% of the footprint clears the edge.
        let distance = TABLE_X - 0.05 + 0.06;
        let out = push(&mut scene, &cfg(), GripperId::Assistant, &contact, Vec3::X, distance);
        assert_eq!(out, ActionOutcome::Fallen);
        assert_eq!(scene.target().unwrap().state, ObjectState::Fallen);
        assert!(scene.target().unwrap().support_fraction() < 0.5);
    }

    #[test]
    fn free_gripper_move_leaves_object_untouched() {
        let mut scene = plate_scene(5);
        let obj_before = scene.target().unwrap().pose;
        let target = Pose::from_translation(Vec3::new(0.2, 0.1, 0.3));
        assert_eq!(move_gripper(&mut scene, &cfg(), GripperId::Primary, &target), ActionOutcome::Ok);
        assert_eq!(scene.target().unwrap().pose, obj_before);
        assert_eq!(scene.primary.pose, target);
    }

    #[test]
    fn attached_object_moves_rigidly_on_lift() {
        let mut scene = centered_box_scene(0.15, 0.12, 0.01);
        {
            let obj = scene.target_mut().unwrap();
            obj.pose.translation = obj.pose.translation.add(Vec3::new(0.0, 0.0, 0.12));
        }
        let max_x = scene.target().unwrap().max_world_x();
        let d = Rotation::from_columns(
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 1.0, 0.0),
        );
        let pose = edge_grasp_pose(&cfg(), Vec3::new(max_x - 0.004, 0.0, 0.13), &d);
        assert_eq!(attempt_grasp(&mut scene, &cfg(), GripperId::Primary, &pose), ActionOutcome::Ok);
        let before = scene.target().unwrap().world_centroid();
        assert_eq!(lift(&mut scene, &cfg(), GripperId::Primary, 0.15), ActionOutcome::Ok);
        let after = scene.target().unwrap().world_centroid();
        assert!((after.z() - before.z() - 0.15).abs() < 1e-9);
        assert_eq!(scene.target().unwrap().state, ObjectState::Grasped);
    }

    #[test]
    fn one_sided_grasp_detaches_on_lift() {
        let mut scene = centered_box_scene(0.15, 0.12, 0.01);
        // Force an attachment whose channel holds points on only one side of
        // local y: gripper hovering with the slab below the channel center.
        let d = Rotation::from_columns(
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 1.0, 0.0),
        );
        let max_x = scene.target().unwrap().max_world_x();
        // Channel center 2 cm above the slab: all slab points on negative y.
        let pose = Pose::new(d, Vec3::new(max_x + 0.015, 0.0, 0.035));
        let relative = compose(&pose.inverse(), &scene.target().unwrap().pose);
        scene.primary.pose = pose;
        scene.primary.attachment = Some(Attachment { relative, holds_movable: false });
        scene.target_mut().unwrap().state = ObjectState::Grasped;
        let out = lift(&mut scene, &cfg(), GripperId::Primary, 0.15);
        assert_eq!(out, ActionOutcome::Unstable);
        assert!(scene.primary.attachment.is_none());
        assert_eq!(scene.target().unwrap().state, ObjectState::OnTable);
        assert!(scene.target().unwrap().lowest_decile_height().abs() < 1e-3);
    }

    fn bottle_scene(seed: u64) -> TableScene {
        let obj = generate_object(
            Category::Bottle,
            ShapeParams::Bottle { body_radius: 0.025, height: 0.15 },
            9,
        )
        .unwrap();
        spawn_scene(TaskKind::Articulated, obj, seed).unwrap()
    }

    #[test]
    fn actuate_joint_gates() {
        let mut scene = bottle_scene(6);
        let obj = scene.target().unwrap();
        let joint_dir = obj.world_joint_direction().unwrap();
        let cap_point = (0..obj.canonical_points.len())
            .find(|&i| obj.labels[i] == PartLabel::Movable)
            .map(|i| obj.world_point(i))
            .unwrap();
        let body_point = (0..obj.canonical_points.len())
            .filter(|&i| obj.labels[i] == PartLabel::Fixed)
            .map(|i| obj.world_point(i))
            .max_by(|a, b| {
                a.sub(cap_point).norm().partial_cmp(&b.sub(cap_point).norm()).unwrap()
            })
            .unwrap();
        let range = scene.target().unwrap().joint.unwrap().range();

        // Contact on the fixed part: no actuation.
        let out = actuate_joint(&mut scene, &cfg(), GripperId::Primary, body_point, joint_dir, range);
        assert_eq!(out, ActionOutcome::NoContact);

        // Motion at 90 degrees to the joint axis: gated out.
        let ortho = joint_dir.cross(Vec3::Z);
        let ortho = if ortho.norm() < 1e-9 { Vec3::Y } else { ortho.normalized() };
        let out = actuate_joint(&mut scene, &cfg(), GripperId::Primary, cap_point, ortho, range);
        assert_eq!(out, ActionOutcome::NoContact);

        // Aligned motion over the full range: moves the whole range.
        let out = actuate_joint(&mut scene, &cfg(), GripperId::Primary, cap_point, joint_dir, range);
        match out {
            ActionOutcome::JointMoved(d) => assert!((d - range).abs() < 1e-12),
            other => panic!("expected JointMoved, got {:?}", other),
        }
        assert!(check_success(&scene, &cfg(), TaskKind::Articulated));
    }

    #[test]
    fn held_movable_part_blocks_actuation() {
        let mut scene = bottle_scene(8);
        scene.assistant.attachment = Some(Attachment {
            relative: Pose::identity(),
            holds_movable: true,
        });
        scene.target_mut().unwrap().state = ObjectState::Grasped;
        let obj = scene.target().unwrap();
        let cap_point = (0..obj.canonical_points.len())
            .find(|&i| obj.labels[i] == PartLabel::Movable)
            .map(|i| obj.world_point(i))
            .unwrap();
        let dir = obj.world_joint_direction().unwrap();
        let out = actuate_joint(&mut scene, &cfg(), GripperId::Primary, cap_point, dir, 0.02);
        assert_eq!(out, ActionOutcome::NoContact);
    }

    #[test]
    fn success_predicates() {
        let scene = plate_scene(7);
        assert!(!check_success(&scene, &cfg(), TaskKind::PlateLifting));

        let mut art = bottle_scene(7);
        assert!(!check_success(&art, &cfg(), TaskKind::Articulated));
        let range = art.target().unwrap().joint.unwrap().range();
        art.target_mut().unwrap().joint.as_mut().unwrap().value = 0.25 * range;
        assert!(check_success(&art, &cfg(), TaskKind::Articulated));

        // Plate held by the assistant at height: wrong arm, no success.
        let mut wrong = plate_scene(8);
        wrong.assistant.attachment = Some(Attachment {
            relative: Pose::identity(),
            holds_movable: false,
        });
        {
            let o = wrong.target_mut().unwrap();
            o.state = ObjectState::Grasped;
            o.pose.translation = o.pose.translation.add(Vec3::new(0.0, 0.0, 0.2));
        }
        assert!(!check_success(&wrong, &cfg(), TaskKind::PlateLifting));
    }

    #[test]
    fn press_tilt_raises_far_side_and_keeps_support() {
        let mut scene = plate_scene(9);
        let obj = scene.target().unwrap();
        let (rim_r, rim_h) = obj.rim().unwrap();
        let center = obj.world_centroid();
        let press_pt = Vec3::new(center.x() + rim_r, center.y(), rim_h);
        let down = Rotation::rot_y(std::f64::consts::FRAC_PI_2);
        let out = press_tilt(&mut scene, &cfg(), GripperId::Assistant, &Pose::new(down, press_pt));
        assert_eq!(out, ActionOutcome::Ok);
        let obj = scene.target().unwrap();
        let top = obj.world_points().iter().map(|p| p.z()).fold(f64::NEG_INFINITY, f64::max);
        assert!(top > rim_h + 0.01, "far side should lift, top={}", top);
        let bottom = obj.world_points().iter().map(|p| p.z()).fold(f64::INFINITY, f64::min);
        assert!(bottom > -2e-3, "nothing may sink below the table, bottom={}", bottom);
        assert_eq!(obj.state, ObjectState::OnTable);
    }

    #[test]
    fn press_off_rim_is_rejected() {
        let mut scene = plate_scene(10);
        let before = scene.target().unwrap().pose;
        let center = scene.target().unwrap().world_centroid();
        let down = Rotation::rot_y(std::f64::consts::FRAC_PI_2);
        let out = press_tilt(
            &mut scene,
            &cfg(),
            GripperId::Assistant,
            &Pose::new(down, Vec3::new(center.x(), center.y(), 0.01)),
        );
        assert_eq!(out, ActionOutcome::NoContact);
        assert_eq!(scene.target().unwrap().pose, before);
    }

    #[test]
    fn determinism_identical_action_sequences() {
        let run = || {
            let mut scene = centered_box_scene(0.15, 0.12, 0.012);
            let top = scene
                .target()
                .unwrap()
                .world_points()
                .iter()
                .map(|p| p.z())
                .fold(f64::NEG_INFINITY, f64::max);
            let down = Rotation::rot_y(std::f64::consts::FRAC_PI_2);
            let contact = Pose::new(down, Vec3::new(0.0, 0.0, top));
            push(&mut scene, &cfg(), GripperId::Assistant, &contact, Vec3::X, 0.31);
            scene.state_hash()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn labels_and_cardinality_conserved() {
        let mut scene = bottle_scene(11);
        let (n, labels): (usize, Vec<PartLabel>) = {
            let o = scene.target().unwrap();
            (o.canonical_points.len(), o.labels.clone())
        };
        let obj = scene.target().unwrap();
        let cap_point = (0..obj.canonical_points.len())
            .find(|&i| obj.labels[i] == PartLabel::Movable)
            .map(|i| obj.world_point(i))
            .unwrap();
        let dir = obj.world_joint_direction().unwrap();
        actuate_joint(&mut scene, &cfg(), GripperId::Primary, cap_point, dir, 0.01);
        let o = scene.target().unwrap();
        assert_eq!(o.canonical_points.len(), n);
        assert_eq!(o.labels, labels);
    }

    #[test]
    fn on_table_objects_keep_enough_support() {
        // After any push, an OnTable object retains support >= 0.5.
        for seed in 0..10u64 {
            let mut scene = centered_box_scene(0.12, 0.10, 0.012);
            let top = scene
                .target()
                .unwrap()
                .world_points()
                .iter()
                .map(|p| p.z())
                .fold(f64::NEG_INFINITY, f64::max);
            let down = Rotation::rot_y(std::f64::consts::FRAC_PI_2);
            let contact = Pose::new(down, Vec3::new(0.0, 0.0, top));
            let dist = 0.34 + 0.02 * (seed as f64 / 10.0);
            push(&mut scene, &cfg(), GripperId::Assistant, &contact, Vec3::X, dist);
            let o = scene.target().unwrap();
            if o.state == ObjectState::OnTable {
                assert!(o.support_fraction() >= 0.5);
            }
        }
    }

}
