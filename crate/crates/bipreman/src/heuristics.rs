//! Hand-crafted manipulation strategies with ground-truth scene access.
//! They serve two roles: the demonstration generator for the learning
//! pipeline, and the rule-based baseline in evaluations.
//!
//! Every gripper axis they emit carries a small randomized deviation (10
//! degrees by default) for diversity. With `explore_prob > 0` the contact
//! choices occasionally leave the rule's preferred region, which produces
//! the failure demonstrations the affordance supervision needs; the
//! evaluation baseline runs with exploration off.

use crate::dataset::{ActionRecord, Episode, StageName, StageObs};
use crate::geometry::{
    perturb_within_cone, random_rotation, reorient_gripper_pose, Pose, Rotation, Vec3,
};
use crate::scene::{
    render_partial_cloud, spawn_scene, Category, GripperId, LabeledCloud, ObjectModel,
    ObjectState, PartLabel, SceneError, TableScene, TaskKind, TABLE_X,
};
use crate::sim::{
    self, check_success, execute_goal_action, execute_pre_action, ActionOutcome, SimConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HeuristicError {
    #[error("no fixed-link point visible to pre-grasp")]
    NoFixedLink,
    #[error("object is not grasped by the assistant")]
    NotGrasped,
    #[error("no movable-part point visible")]
    NoMovableVisible,
    #[error("object is not resting on the table")]
    ObjectNotOnTable,
    #[error("no object point overhangs the table edge")]
    NoOverhang,
    #[error("target object is not a plate")]
    NotAPlate,
    #[error("render failed: {0}")]
    Render(SceneError),
}

impl From<SceneError> for HeuristicError {
    fn from(e: SceneError) -> Self {
        HeuristicError::Render(e)
    }
}

/// Per-category rule data: the canonical gripper left axis used for
/// pre-grasps, expressed in the object frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryRule {
    pub category: Category,
    pub canonical_left: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// Cone half-angle of the randomized axis deviations.
    pub deviation_max: f64,
    /// Fingertip depth below the rim contact when pressing a plate.
    pub press_depth: f64,
    /// Push overshoot is drawn uniformly from [0, this].
    pub push_overshoot_max: f64,
    /// Probability of sampling a contact outside the rule's preferred
    /// region (failure-demonstration branch). Zero for the pure baseline.
    pub explore_prob: f64,
    /// Probability that the goal motion direction follows the articulation's
    /// functional direction; otherwise it is a uniform random direction.
    pub aligned_prob: f64,
    /// Target object centroid after reorientation, with uniform jitter.
    pub reorient_centroid: Vec3,
    pub reorient_jitter: f64,
    pub category_rules: Vec<CategoryRule>,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            deviation_max: 10f64.to_radians(),
            press_depth: 0.01,
            push_overshoot_max: 0.06,
            explore_prob: 0.0,
            aligned_prob: 0.7,
            reorient_centroid: Vec3::new(0.15, 0.0, 0.25),
            reorient_jitter: 0.02,
            category_rules: vec![
                // Elongated objects: left axis perpendicular to the body
                // axis so the fingers straddle the cross-section.
                CategoryRule { category: Category::Bottle, canonical_left: Vec3::Y },
                CategoryRule { category: Category::Lighter, canonical_left: Vec3::Y },
                CategoryRule { category: Category::Plate, canonical_left: Vec3::X },
                CategoryRule { category: Category::ThinBox, canonical_left: Vec3::X },
                CategoryRule { category: Category::Bowl, canonical_left: Vec3::X },
            ],
        }
    }
}

impl HeuristicConfig {
    /// Exploration-enabled variant used for data generation.
    pub fn for_generation() -> Self {
        HeuristicConfig { explore_prob: 0.3, ..Default::default() }
    }

    pub fn canonical_left(&self, category: Category) -> Vec3 {
        self.category_rules
            .iter()
            .find(|r| r.category == category)
            .map(|r| r.canonical_left)
            .unwrap_or(Vec3::Y)
    }
}

/// Contact point plus full gripper orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspPlan {
    pub contact: Vec3,
    pub orientation: Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushPlan {
    pub contact_pose: Pose,
    pub direction: Vec3,
    pub distance: f64,
    pub overshoot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalPlan {
    pub contact: Vec3,
    pub direction: Vec3,
    pub orientation: Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatePlan {
    pub press: Pose,
    pub grasp: GraspPlan,
    pub pressed: bool,
}

/// Right-handed frame from a forward axis and a rough left axis.
fn frame_from_forward_left(forward: Vec3, left_raw: Vec3) -> Rotation {
    let x = forward.normalized();
    let mut proj = left_raw.sub(x.scale(left_raw.dot(x)));
    if proj.norm() < 1e-6 {
        let pick = if x.x().abs() < 0.9 { Vec3::X } else { Vec3::Z };
        proj = pick.sub(x.scale(pick.dot(x)));
    }
    let y = proj.normalized();
    let z = x.cross(y);
    Rotation::from_columns(x, y, z)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.gen::<f64>() * 2.0 - 1.0;
    let phi = rng.gen::<f64>() * std::f64::consts::TAU;
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

fn pick<'a, T>(items: &'a [T], rng: &mut ChaCha8Rng) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[rng.gen_range(0..items.len())])
    }
}

/// Downward forward axis with the configured deviation.
fn downward_axis(cfg: &HeuristicConfig, rng: &mut ChaCha8Rng) -> Vec3 {
    perturb_within_cone(Vec3::new(0.0, 0.0, -1.0), cfg.deviation_max, rng).unwrap()
}

/// Pre-grasp for articulated objects: contact on a fixed (non-articulated)
/// link, forward axis roughly downward, left axis from the category's
/// canonical direction carried into the world frame by the object pose.
pub fn articulated_pregrasp(
    scene: &TableScene,
    cfg: &HeuristicConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GraspPlan, HeuristicError> {
    let cloud = render_partial_cloud(scene, false)?;
    let fixed = cloud.indices_where(|l| l == PartLabel::Fixed);
    if fixed.is_empty() {
        return Err(HeuristicError::NoFixedLink);
    }
    let explore = rng.gen::<f64>() < cfg.explore_prob;
    let pool = if explore { cloud.indices_where(PartLabel::is_object) } else { fixed };
    let contact = cloud.points[*pick(&pool, rng).unwrap()];

    let object = scene.target().ok_or(HeuristicError::NoFixedLink)?;
    let forward = downward_axis(cfg, rng);
    let left_world = object.pose.rotation.apply(cfg.canonical_left(object.category));
    let left = perturb_within_cone(left_world, cfg.deviation_max, rng).unwrap();
    Ok(GraspPlan { contact, orientation: frame_from_forward_left(forward, left) })
}

/// Desired object pose after reorientation: centroid near the shared
/// workspace point, functional axis turned toward the primary arm base (+x)
/// within the sampled deviation.
pub fn reorient_target(
    scene: &TableScene,
    cfg: &HeuristicConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Pose, HeuristicError> {
    if scene.assistant.attachment.is_none() {
        return Err(HeuristicError::NotGrasped);
    }
    let object = scene.target().ok_or(HeuristicError::NotGrasped)?;
    let jitter = |rng: &mut ChaCha8Rng| (rng.gen::<f64>() * 2.0 - 1.0) * cfg.reorient_jitter;
    let target_centroid = cfg
        .reorient_centroid
        .add(Vec3::new(jitter(rng), jitter(rng), jitter(rng)));

    let current_axis = object.world_functional_axis();
    let align = Rotation::between(current_axis, Vec3::X)
        .unwrap_or_else(|_| Rotation::identity());
    let dev_angle = rng.gen::<f64>() * cfg.deviation_max;
    let dev = Rotation::from_axis_angle(random_unit(rng), dev_angle)
        .unwrap_or_else(|_| Rotation::identity());
    let rotation = dev.mul(&align).mul(&object.pose.rotation);

    // Canonical centroid with the current articulation state applied.
    let n = object.canonical_points.len();
    let mut c = Vec3::ZERO;
    for i in 0..n {
        c = c.add(object.articulated_point(i));
    }
    let canonical_centroid = c.scale(1.0 / n as f64);
    let translation = target_centroid.sub(rotation.apply(canonical_centroid));
    Ok(Pose::new(rotation, translation))
}

/// Goal action for articulated objects: contact on the movable link, motion
/// along the articulation's functional direction with probability
/// `aligned_prob`, otherwise a uniform random direction.
pub fn articulated_goal_action(
    scene: &TableScene,
    cfg: &HeuristicConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GoalPlan, HeuristicError> {
    let cloud = render_partial_cloud(scene, false)?;
    let movable = cloud.indices_where(|l| l == PartLabel::Movable);
    if movable.is_empty() {
        return Err(HeuristicError::NoMovableVisible);
    }
    let explore = rng.gen::<f64>() < cfg.explore_prob;
    let pool = if explore { cloud.indices_where(PartLabel::is_object) } else { movable };
    let contact = cloud.points[*pick(&pool, rng).unwrap()];

    let object = scene.target().ok_or(HeuristicError::NoMovableVisible)?;
    let direction = if rng.gen::<f64>() < cfg.aligned_prob {
        let free = object
            .world_joint_direction()
            .unwrap_or(Vec3::new(0.0, 0.0, -1.0));
        perturb_within_cone(free, cfg.deviation_max, rng).unwrap()
    } else {
        random_unit(rng)
    };
    // Left and up axes are arbitrary for a pushing/pulling motion.
    let orientation = frame_from_forward_left(direction, random_unit(rng));
    Ok(GoalPlan { contact, direction, orientation })
}

/// Preparatory push toward the table edge at x = +TABLE_X: contact from the
/// rendered object points, forward axis roughly downward, left axis roughly
/// along the edge line, push distance closing the gap plus a sampled
/// overshoot.
pub fn edge_push_action(
    scene: &TableScene,
    cfg: &HeuristicConfig,
    rng: &mut ChaCha8Rng,
) -> Result<PushPlan, HeuristicError> {
    let object = scene.target().ok_or(HeuristicError::ObjectNotOnTable)?;
    if object.state != ObjectState::OnTable {
        return Err(HeuristicError::ObjectNotOnTable);
    }
    let cloud = render_partial_cloud(scene, false)?;
    let pool = cloud.indices_where(PartLabel::is_object);
    if pool.is_empty() {
        return Err(HeuristicError::ObjectNotOnTable);
    }
    let contact = cloud.points[*pick(&pool, rng).unwrap()];

    let forward = downward_axis(cfg, rng);
    let left = perturb_within_cone(Vec3::Y, cfg.deviation_max, rng).unwrap();
    let orientation = frame_from_forward_left(forward, left);
    let overshoot = rng.gen::<f64>() * cfg.push_overshoot_max;
    let distance = (TABLE_X - object.max_world_x() + overshoot).clamp(0.01, 0.5);
    Ok(PushPlan {
        contact_pose: Pose::new(orientation, contact),
        direction: Vec3::X,
        distance,
        overshoot,
    })
}

/// Goal grasp at the exposed edge. Thin objects: forward axis horizontal,
/// pointing back over the table into the overhang, left axis vertical.
/// Bowls: forward axis tilted upward toward the rim from below.
pub fn edge_grasp_action(
    scene: &TableScene,
    cfg: &HeuristicConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GraspPlan, HeuristicError> {
    let object = scene.target().ok_or(HeuristicError::NoOverhang)?;
    let world = object.world_points();
    let overhang: Vec<Vec3> = world.iter().copied().filter(|p| p.x() > TABLE_X).collect();
    if overhang.is_empty() {
        return Err(HeuristicError::NoOverhang);
    }

    let explore = rng.gen::<f64>() < cfg.explore_prob;
    let contact = if explore {
        *pick(&world, rng).unwrap()
    } else {
        // Prefer contacts with enough clearance past the edge for the
        // fingertips; fall back to any overhanging point.
        let clear: Vec<Vec3> = overhang
            .iter()
            .copied()
            .filter(|p| p.x() > TABLE_X + 0.012)
            .collect();
        if clear.is_empty() { *pick(&overhang, rng).unwrap() } else { *pick(&clear, rng).unwrap() }
    };

    let orientation = match object.category {
        Category::Bowl => {
            let center = object.world_centroid();
            let mut radial = Vec3::new(contact.x() - center.x(), contact.y() - center.y(), 0.0);
            if radial.norm() < 1e-9 {
                radial = Vec3::X;
            }
            let u = radial.normalized();
            // From below and outside, tilted up toward the rim.
            let beta = (20.0 + rng.gen::<f64>() * 25.0).to_radians();
            let forward = u.scale(-beta.cos()).add(Vec3::Z.scale(beta.sin()));
            let left_raw = u.scale(beta.sin()).add(Vec3::Z.scale(beta.cos()));
            let forward = perturb_within_cone(forward, cfg.deviation_max, rng).unwrap();
            frame_from_forward_left(forward, left_raw)
        }
        _ => {
            let forward =
                perturb_within_cone(Vec3::new(-1.0, 0.0, 0.0), cfg.deviation_max, rng).unwrap();
            let left = perturb_within_cone(Vec3::Z, cfg.deviation_max, rng).unwrap();
            frame_from_forward_left(forward, left)
        }
    };
    Ok(GraspPlan { contact, orientation })
}

/// Press point and orientation on the plate's outer rim: forward axis
/// roughly straight down, left axis along the rim tangent.
pub fn plate_press_action(
    scene: &TableScene,
    cfg: &HeuristicConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GraspPlan, HeuristicError> {
    let object = scene.target().ok_or(HeuristicError::NotAPlate)?;
    if object.category != Category::Plate {
        return Err(HeuristicError::NotAPlate);
    }
    let (rim_radius, rim_height) = object.rim().unwrap();

    let explore = rng.gen::<f64>() < cfg.explore_prob;
    let (contact, tangent) = if explore {
        let cloud = render_partial_cloud(scene, false)?;
        let pool = cloud.indices_where(PartLabel::is_object);
        let p = cloud.points[*pick(&pool, rng).unwrap()];
        let center = object.world_centroid();
        let radial = Vec3::new(p.x() - center.x(), p.y() - center.y(), 0.0);
        let t = if radial.norm() < 1e-9 { Vec3::Y } else { Vec3::Z.cross(radial.normalized()) };
        (p, t)
    } else {
        // Uniform point on the outer rim circle, sampled parametrically.
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        let canonical = Vec3::new(rim_radius * phi.cos(), rim_radius * phi.sin(), rim_height);
        let contact = object.pose.apply(canonical);
        let center = object.world_centroid();
        let radial = Vec3::new(contact.x() - center.x(), contact.y() - center.y(), 0.0);
        (contact, Vec3::Z.cross(radial.normalized()))
    };

    let forward = downward_axis(cfg, rng);
    let left = perturb_within_cone(tangent, cfg.deviation_max, rng).unwrap();
    Ok(GraspPlan { contact, orientation: frame_from_forward_left(forward, left) })
}

/// Grasp point among the top-10%-z plate points (the lifted side after the
/// press): forward axis along the inward edge normal, up axis along the
/// local rim tangent.
pub fn plate_grasp_action(
    scene: &TableScene,
    cfg: &HeuristicConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GraspPlan, HeuristicError> {
    let object = scene.target().ok_or(HeuristicError::NotAPlate)?;
    if object.category != Category::Plate {
        return Err(HeuristicError::NotAPlate);
    }
    let cloud = render_partial_cloud(scene, false)?;
    let object_idx = cloud.indices_where(PartLabel::is_object);
    if object_idx.is_empty() {
        return Err(HeuristicError::NotAPlate);
    }

    let explore = rng.gen::<f64>() < cfg.explore_prob;
    let contact = if explore {
        cloud.points[*pick(&object_idx, rng).unwrap()]
    } else {
        // Top 10% by z-value threshold; with all-equal heights the whole
        // plate qualifies (degenerate flat-plate case).
        let mut zs: Vec<f64> = object_idx.iter().map(|&i| cloud.points[i].z()).collect();
        zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let threshold = zs[((zs.len() as f64 * 0.9) as usize).min(zs.len() - 1)];
        let top: Vec<usize> =
            object_idx.iter().copied().filter(|&i| cloud.points[i].z() >= threshold).collect();
        cloud.points[*pick(&top, rng).unwrap()]
    };

    let center = object.world_centroid();
    let mut inward = Vec3::new(center.x() - contact.x(), center.y() - contact.y(), 0.0);
    if inward.norm() < 1e-9 {
        inward = Vec3::X;
    }
    let forward = perturb_within_cone(inward.normalized(), cfg.deviation_max, rng).unwrap();
    let tangent = Vec3::Z.cross(inward.normalized());
    // up axis along the tangent; derive left = up x forward
    let up = tangent.sub(forward.scale(tangent.dot(forward))).normalized();
    let left = up.cross(forward);
    Ok(GraspPlan { contact, orientation: Rotation::from_columns(forward, left, up) })
}

/// Combined plate strategy: picks the press, executes the kinematic tilt,
/// then selects the grasp on the tilted plate.
pub fn plate_actions(
    scene: &mut TableScene,
    cfg: &HeuristicConfig,
    sim_cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<PlatePlan, HeuristicError> {
    let press = plate_press_action(scene, cfg, rng)?;
    let outcome = sim::press_tilt(
        scene,
        sim_cfg,
        GripperId::Assistant,
        &Pose::new(press.orientation, press.contact),
    );
    let grasp = plate_grasp_action(scene, cfg, rng)?;
    Ok(PlatePlan {
        press: Pose::new(press.orientation, press.contact),
        grasp,
        pressed: outcome == ActionOutcome::Ok,
    })
}

fn record_obs(scene: &TableScene, stage: StageName, obs: &mut Vec<StageObs>) {
    if let Ok(cloud) = render_partial_cloud(scene, false) {
        obs.push(StageObs { stage, cloud: crate::dataset::quantize_cloud(&cloud) });
    }
}

fn blank_episode(id: u64, task: TaskKind, object: &ObjectModel, scene_seed: u64) -> Episode {
    Episode {
        id,
        task,
        category: object.category,
        shape: object.shape,
        shape_seed: object.shape_seed,
        scene_seed,
        observations: Vec::new(),
        pre_action: None,
        goal_action: None,
        reorient_transform: None,
        obj_pose_init: Pose::identity(),
        obj_pose_grasped: None,
        obj_pose_fin: None,
        grp_assist_grasped: None,
        grp_assist_fin: None,
        grp_primary_fin: None,
        success: false,
    }
}

/// Runs one full heuristic demonstration: spawn, preparatory action,
/// (articulated) reorientation, goal action, success check. Simulator
/// rejections become failed episodes, never errors.
pub fn run_heuristic_episode(
    id: u64,
    task: TaskKind,
    object: &ObjectModel,
    scene_seed: u64,
    cfg: &HeuristicConfig,
    sim_cfg: &SimConfig,
) -> Result<Episode, SceneError> {
    let mut scene = spawn_scene(task, object.clone(), scene_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scene_seed ^ 0xc3a5_c85c_97cb_3127);
    let mut ep = blank_episode(id, task, object, scene_seed);
    ep.obj_pose_init = scene.target().unwrap().pose;
    record_obs(&scene, StageName::Initial, &mut ep.observations);

    let done = |scene: &TableScene, mut ep: Episode| {
        ep.success = check_success(scene, sim_cfg, task);
        Ok(ep)
    };

    match task {
        TaskKind::Articulated => {
            let plan = match articulated_pregrasp(&scene, cfg, &mut rng) {
                Ok(p) => p,
                Err(_) => return done(&scene, ep),
            };
            ep.pre_action =
                Some(ActionRecord { point: plan.contact, orientation: plan.orientation });
            let out = execute_pre_action(&mut scene, sim_cfg, plan.contact, &plan.orientation, 0.0);
            if out != ActionOutcome::Ok {
                return done(&scene, ep);
            }
            ep.obj_pose_grasped = Some(scene.target().unwrap().pose);
            ep.grp_assist_grasped = Some(scene.assistant.pose);
            record_obs(&scene, StageName::Grasped, &mut ep.observations);

            let target = match reorient_target(&scene, cfg, &mut rng) {
                Ok(t) => t,
                Err(_) => return done(&scene, ep),
            };
            let grp_target = reorient_gripper_pose(
                &target,
                &scene.target().unwrap().pose,
                &scene.assistant.pose,
            );
            let out = sim::move_gripper(&mut scene, sim_cfg, GripperId::Assistant, &grp_target);
            if out != ActionOutcome::Ok {
                return done(&scene, ep);
            }
            let fin_pose = scene.target().unwrap().pose;
            ep.obj_pose_fin = Some(fin_pose);
            ep.grp_assist_fin = Some(scene.assistant.pose);
            ep.reorient_transform =
                Some(crate::geometry::compose(&fin_pose, &ep.obj_pose_init.inverse()));
            record_obs(&scene, StageName::Exec, &mut ep.observations);

            let goal = match articulated_goal_action(&scene, cfg, &mut rng) {
                Ok(g) => g,
                Err(_) => return done(&scene, ep),
            };
            ep.goal_action =
                Some(ActionRecord { point: goal.contact, orientation: goal.orientation });
            ep.grp_primary_fin = Some(Pose::new(goal.orientation, goal.contact));
            execute_goal_action(&mut scene, sim_cfg, goal.contact, &goal.orientation);
            done(&scene, ep)
        }
        TaskKind::EdgePushing => {
            let plan = match edge_push_action(&scene, cfg, &mut rng) {
                Ok(p) => p,
                Err(_) => return done(&scene, ep),
            };
            ep.pre_action = Some(ActionRecord {
                point: plan.contact_pose.translation,
                orientation: plan.contact_pose.rotation,
            });
            let out = execute_pre_action(
                &mut scene,
                sim_cfg,
                plan.contact_pose.translation,
                &plan.contact_pose.rotation,
                plan.overshoot,
            );
            if !matches!(out, ActionOutcome::Ok) {
                return done(&scene, ep);
            }
            let fin_pose = scene.target().unwrap().pose;
            ep.obj_pose_fin = Some(fin_pose);
            ep.reorient_transform =
                Some(crate::geometry::compose(&fin_pose, &ep.obj_pose_init.inverse()));
            record_obs(&scene, StageName::Exec, &mut ep.observations);

            let goal = match edge_grasp_action(&scene, cfg, &mut rng) {
                Ok(g) => g,
                Err(_) => return done(&scene, ep),
            };
            ep.goal_action =
                Some(ActionRecord { point: goal.contact, orientation: goal.orientation });
            execute_goal_action(&mut scene, sim_cfg, goal.contact, &goal.orientation);
            ep.grp_primary_fin = Some(scene.primary.pose);
            done(&scene, ep)
        }
        TaskKind::PlateLifting => {
            let press = match plate_press_action(&scene, cfg, &mut rng) {
                Ok(p) => p,
                Err(_) => return done(&scene, ep),
            };
            ep.pre_action =
                Some(ActionRecord { point: press.contact, orientation: press.orientation });
            execute_pre_action(&mut scene, sim_cfg, press.contact, &press.orientation, 0.0);
            let fin_pose = scene.target().unwrap().pose;
            ep.obj_pose_fin = Some(fin_pose);
            ep.reorient_transform =
                Some(crate::geometry::compose(&fin_pose, &ep.obj_pose_init.inverse()));
            record_obs(&scene, StageName::Exec, &mut ep.observations);

            let goal = match plate_grasp_action(&scene, cfg, &mut rng) {
                Ok(g) => g,
                Err(_) => return done(&scene, ep),
            };
            ep.goal_action =
                Some(ActionRecord { point: goal.contact, orientation: goal.orientation });
            execute_goal_action(&mut scene, sim_cfg, goal.contact, &goal.orientation);
            ep.grp_primary_fin = Some(scene.primary.pose);
            done(&scene, ep)
        }
    }
}

/// Uniform-random-action baseline: random contact points from the rendered
/// cloud, Haar-random gripper orientations, random reorientation targets,
/// executed through the same primitives as every other policy.
pub fn run_random_episode(
    id: u64,
    task: TaskKind,
    object: &ObjectModel,
    scene_seed: u64,
    policy_seed: u64,
    sim_cfg: &SimConfig,
) -> Result<Episode, SceneError> {
    let mut scene = spawn_scene(task, object.clone(), scene_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(policy_seed ^ 0x9027_5df3_1b6a_44e1);
    let mut ep = blank_episode(id, task, object, scene_seed);
    ep.obj_pose_init = scene.target().unwrap().pose;
    record_obs(&scene, StageName::Initial, &mut ep.observations);

    let random_point = |cloud: &LabeledCloud, rng: &mut ChaCha8Rng| {
        cloud.points[rng.gen_range(0..cloud.len())]
    };
    let init_cloud = ep.observation(StageName::Initial).cloned();
    let Some(init_cloud) = init_cloud else {
        ep.success = false;
        return Ok(ep);
    };

    let p = random_point(&init_cloud, &mut rng);
    let d = random_rotation(&mut rng);
    ep.pre_action = Some(ActionRecord { point: p, orientation: d });
    let overshoot = rng.gen::<f64>() * 0.06;
    let out = execute_pre_action(&mut scene, sim_cfg, p, &d, overshoot);
    if !matches!(out, ActionOutcome::Ok) {
        ep.success = check_success(&scene, sim_cfg, task);
        return Ok(ep);
    }

    if task == TaskKind::Articulated {
        // Random reorientation: arbitrary pose in the shared workspace.
        let target = Pose::new(
            random_rotation(&mut rng),
            Vec3::new(
                rng.gen::<f64>() * 0.4 - 0.1,
                rng.gen::<f64>() * 0.4 - 0.2,
                0.1 + rng.gen::<f64>() * 0.3,
            ),
        );
        let grp_target =
            reorient_gripper_pose(&target, &scene.target().unwrap().pose, &scene.assistant.pose);
        let out = sim::move_gripper(&mut scene, sim_cfg, GripperId::Assistant, &grp_target);
        if out != ActionOutcome::Ok {
            ep.success = check_success(&scene, sim_cfg, task);
            return Ok(ep);
        }
    }
    ep.obj_pose_fin = Some(scene.target().unwrap().pose);
    record_obs(&scene, StageName::Exec, &mut ep.observations);

    if let Some(exec_cloud) = ep.observation(StageName::Exec).cloned() {
        let p = random_point(&exec_cloud, &mut rng);
        let d = random_rotation(&mut rng);
        ep.goal_action = Some(ActionRecord { point: p, orientation: d });
        execute_goal_action(&mut scene, sim_cfg, p, &d);
    }
    ep.success = check_success(&scene, sim_cfg, task);
    Ok(ep)
}
