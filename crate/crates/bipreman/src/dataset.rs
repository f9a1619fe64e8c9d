//! Episode records, empirical affordance ground truth, anticipatory-frame
//! supervision, persistence, and train/unseen splits.
//!
//! Ground-truth affordance is the smoothed empirical success probability of
//! recorded interactions: the score of a query point is the success fraction
//! among its k nearest recorded contacts. Goal-stage contacts are compared in
//! execution-frame coordinates centered on the object (the preparatory
//! motion standardizes that frame, and gravity-dependent structure like a
//! tilted plate must survive), while pre-stage contacts are compared in the
//! object's canonical frame (initial poses are random, so only object-
//! relative structure is meaningful).

use crate::geometry::{compose, Pose, Rotation, Vec3};
use crate::scene::{Category, LabeledCloud, PartLabel, ShapeParams, TaskKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const CLOUD_MAGIC: &[u8; 4] = b"BPMC";
pub const CLOUD_VERSION: u32 = 1;
/// Neighbor count for ground-truth smoothing.
pub const DEFAULT_K: usize = 16;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("fewer than {needed} episodes touch this object (got {got})")]
    InsufficientData { needed: usize, got: usize },
    #[error("episode lacks the full pose trajectory")]
    IncompleteTrajectory,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageName {
    /// Spawn-time observation, before any arm moves.
    Initial,
    /// After the assistant's pre-grasp and lift (articulated tasks).
    Grasped,
    /// The execution-stage observation the primary arm acts on.
    Exec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageObs {
    pub stage: StageName,
    pub cloud: LabeledCloud,
}

/// A recorded 6-DoF action: contact point plus gripper orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub point: Vec3,
    pub orientation: Rotation,
}

/// One demonstration or rollout. Failed episodes are truncated at the
/// failing stage; success episodes carry the full trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: u64,
    pub task: TaskKind,
    pub category: Category,
    pub shape: ShapeParams,
    pub shape_seed: u64,
    pub scene_seed: u64,
    pub observations: Vec<StageObs>,
    /// Assistant preparatory action, in the Initial observation frame.
    pub pre_action: Option<ActionRecord>,
    /// Primary goal action, in the Exec observation frame.
    pub goal_action: Option<ActionRecord>,
    /// Desired object transformation: maps the initial object configuration
    /// to the execution-stage configuration (world frame).
    pub reorient_transform: Option<Pose>,
    pub obj_pose_init: Pose,
    pub obj_pose_grasped: Option<Pose>,
    pub obj_pose_fin: Option<Pose>,
    pub grp_assist_grasped: Option<Pose>,
    pub grp_assist_fin: Option<Pose>,
    pub grp_primary_fin: Option<Pose>,
    pub success: bool,
}

impl Episode {
    pub fn observation(&self, stage: StageName) -> Option<&LabeledCloud> {
        self.observations.iter().find(|o| o.stage == stage).map(|o| &o.cloud)
    }

    /// Transform carrying execution-stage world points back to the initial
    /// frame.
    pub fn fin_to_init(&self) -> Option<Pose> {
        let fin = self.obj_pose_fin?;
        Some(compose(&self.obj_pose_init, &fin.inverse()))
    }

    /// Object key: episodes of the same procedural object instance.
    pub fn object_key(&self) -> (Category, u64) {
        (self.category, self.shape_seed)
    }
}

/// Rounds cloud coordinates to f32, the storage precision, so in-memory
/// episodes are bit-identical to their saved-and-reloaded form.
pub fn quantize_cloud(cloud: &LabeledCloud) -> LabeledCloud {
    LabeledCloud {
        points: cloud
            .points
            .iter()
            .map(|p| Vec3::new(p.x() as f32 as f64, p.y() as f32 as f64, p.z() as f32 as f64))
            .collect(),
        labels: cloud.labels.clone(),
        scores: cloud.scores.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffordanceStage {
    Goal,
    Anticipatory,
    Pre,
}

/// Per-point success-probability scores over a reference cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffordanceMap {
    pub cloud: LabeledCloud,
    pub scores: Vec<f64>,
    pub stage: AffordanceStage,
}

impl AffordanceMap {
    /// Cloud with the scores attached, for PLY export.
    pub fn to_scored_cloud(&self) -> LabeledCloud {
        let mut c = self.cloud.clone();
        c.scores = Some(self.scores.clone());
        c
    }

    /// Score of the map point nearest to `p`.
    pub fn score_at(&self, p: Vec3) -> f64 {
        let mut best = (f64::INFINITY, 0usize);
        for (i, q) in self.cloud.points.iter().enumerate() {
            let d = q.sub(p).norm();
            if d < best.0 {
                best = (d, i);
            }
        }
        self.scores[best.1]
    }
}

/// A recorded interaction in the comparison frame of its stage.
struct Interaction {
    point: Vec3,
    success: bool,
    episode_id: u64,
}

fn stage_interactions(episodes: &[&Episode], stage: AffordanceStage) -> Vec<Interaction> {
    let mut out = Vec::new();
    for ep in episodes {
        match stage {
            AffordanceStage::Goal | AffordanceStage::Anticipatory => {
                let (Some(action), Some(exec)) = (ep.goal_action, ep.observation(StageName::Exec))
                else {
                    continue;
                };
                out.push(Interaction {
                    point: action.point.sub(exec.object_centroid()),
                    success: ep.success,
                    episode_id: ep.id,
                });
            }
            AffordanceStage::Pre => {
                let Some(action) = ep.pre_action else { continue };
                out.push(Interaction {
                    point: ep.obj_pose_init.inverse().apply(action.point),
                    success: ep.success,
                    episode_id: ep.id,
                });
            }
        }
    }
    out
}

/// Smoothed empirical success probability: for each query point, the success
/// fraction among the k nearest recorded interactions (ties broken by
/// episode id). Points that do not belong to the object score zero.
fn knn_scores(interactions: &[Interaction], queries: &[(Vec3, bool)], k: usize) -> Vec<f64> {
    let mut scores = Vec::with_capacity(queries.len());
    for &(q, is_object) in queries {
        if !is_object || interactions.is_empty() {
            scores.push(0.0);
            continue;
        }
        let mut order: Vec<usize> = (0..interactions.len()).collect();
        order.sort_by(|&a, &b| {
            let da = interactions[a].point.sub(q).norm();
            let db = interactions[b].point.sub(q).norm();
            da.partial_cmp(&db)
                .unwrap()
                .then(interactions[a].episode_id.cmp(&interactions[b].episode_id))
                .then(a.cmp(&b))
        });
        let take = k.min(order.len());
        let hits = order[..take].iter().filter(|&&i| interactions[i].success).count();
        scores.push(hits as f64 / take as f64);
    }
    scores
}

/// Builds the ground-truth affordance map for one episode's stage cloud from
/// the per-object episode set. `stage` selects goal-stage contacts (scored
/// on the reference episode's execution observation) or pre-stage contacts
/// (scored on its initial observation).
pub fn build_affordance_gt(
    episodes: &[&Episode],
    stage: AffordanceStage,
    reference: &Episode,
    k: usize,
) -> Result<AffordanceMap, DatasetError> {
    if episodes.len() < k {
        return Err(DatasetError::InsufficientData { needed: k, got: episodes.len() });
    }
    let interactions = stage_interactions(episodes, stage);
    let (cloud, queries): (LabeledCloud, Vec<(Vec3, bool)>) = match stage {
        AffordanceStage::Goal | AffordanceStage::Anticipatory => {
            let exec = reference
                .observation(StageName::Exec)
                .ok_or(DatasetError::IncompleteTrajectory)?
                .clone();
            let c = exec.object_centroid();
            let q = exec
                .points
                .iter()
                .zip(&exec.labels)
                .map(|(p, l)| (p.sub(c), l.is_object()))
                .collect();
            (exec, q)
        }
        AffordanceStage::Pre => {
            let init = reference
                .observation(StageName::Initial)
                .ok_or(DatasetError::IncompleteTrajectory)?
                .clone();
            let inv = reference.obj_pose_init.inverse();
            let q = init
                .points
                .iter()
                .zip(&init.labels)
                .map(|(p, l)| (inv.apply(*p), l.is_object()))
                .collect();
            (init, q)
        }
    };
    let scores = knn_scores(&interactions, &queries, k);
    Ok(AffordanceMap {
        cloud,
        scores,
        stage: if stage == AffordanceStage::Pre {
            AffordanceStage::Pre
        } else {
            AffordanceStage::Goal
        },
    })
}

/// Carries an execution-stage map to the anticipatory frame: every point is
/// transformed, every score is reused unchanged.
pub fn map_to_anticipatory(gt: &AffordanceMap, fin_to_init: &Pose) -> AffordanceMap {
    AffordanceMap {
        cloud: crate::scene::transform_points(fin_to_init, &gt.cloud),
        scores: gt.scores.clone(),
        stage: AffordanceStage::Anticipatory,
    }
}

/// Anticipatory gripper-orientation ground truth: the final-stage gripper
/// orientation carried back through the object's pose change.
pub fn anticipatory_orientation_gt(ep: &Episode) -> Result<Rotation, DatasetError> {
    if !ep.success {
        return Err(DatasetError::IncompleteTrajectory);
    }
    let fin = ep.obj_pose_fin.ok_or(DatasetError::IncompleteTrajectory)?;
    let goal = ep.goal_action.ok_or(DatasetError::IncompleteTrajectory)?;
    Ok(crate::geometry::anticipatory_gripper_rotation(
        &ep.obj_pose_init.rotation,
        &fin.rotation,
        &goal.orientation,
    ))
}

/// Groups a corpus by procedural object instance.
pub fn group_by_object(episodes: &[Episode]) -> BTreeMap<(Category, u64), Vec<&Episode>> {
    let mut map: BTreeMap<(Category, u64), Vec<&Episode>> = BTreeMap::new();
    for ep in episodes {
        map.entry(ep.object_key()).or_default().push(ep);
    }
    map
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{:02x}", b)).collect()
}

fn encode_cloud(points: &[Vec3]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(16 + points.len() * 12);
    buf.extend_from_slice(CLOUD_MAGIC);
    buf.extend_from_slice(&CLOUD_VERSION.to_le_bytes());
    buf.extend_from_slice(&(points.len() as u32).to_le_bytes());
    buf.extend_from_slice(&0u32.to_le_bytes());
    for p in points {
        for c in p.0 {
            buf.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    buf
}

fn decode_cloud(bytes: &[u8]) -> Result<Vec<Vec3>, DatasetError> {
    if bytes.len() < 16 || &bytes[0..4] != CLOUD_MAGIC {
        return Err(DatasetError::CorruptManifest("bad cloud magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CLOUD_VERSION {
        return Err(DatasetError::CorruptManifest(format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() != 16 + n * 12 {
        return Err(DatasetError::CorruptManifest(format!(
            "cloud payload length {} does not match point count {n}",
            bytes.len()
        )));
    }
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let at = 16 + i * 12;
        let read =
            |o: usize| f32::from_le_bytes(bytes[at + o..at + o + 4].try_into().unwrap()) as f64;
        points.push(Vec3::new(read(0), read(4), read(8)));
    }
    Ok(points)
}

#[derive(Serialize, Deserialize)]
struct StageEntry {
    stage: StageName,
    file: String,
    labels: Vec<u8>,
    sha256: String,
}

#[derive(Serialize, Deserialize)]
struct ActionEntry {
    point: [f64; 3],
    orientation: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EpisodeManifest {
    id: u64,
    task: TaskKind,
    category: Category,
    shape: ShapeParams,
    shape_seed: u64,
    scene_seed: u64,
    success: bool,
    stages: Vec<StageEntry>,
    pre_action: Option<ActionEntry>,
    goal_action: Option<ActionEntry>,
    reorient_transform: Option<Vec<f64>>,
    obj_pose_init: Vec<f64>,
    obj_pose_grasped: Option<Vec<f64>>,
    obj_pose_fin: Option<Vec<f64>>,
    grp_assist_grasped: Option<Vec<f64>>,
    grp_assist_fin: Option<Vec<f64>>,
    grp_primary_fin: Option<Vec<f64>>,
}

fn action_entry(a: &ActionRecord) -> ActionEntry {
    ActionEntry { point: a.point.0, orientation: a.orientation.flat().to_vec() }
}

fn action_record(e: &ActionEntry) -> ActionRecord {
    ActionRecord { point: Vec3(e.point), orientation: Rotation::from_flat(&e.orientation) }
}

fn pose16(p: &Pose) -> Vec<f64> {
    p.to_matrix16().to_vec()
}

fn stage_file(stage: StageName) -> &'static str {
    match stage {
        StageName::Initial => "stage_initial.bin",
        StageName::Grasped => "stage_grasped.bin",
        StageName::Exec => "stage_exec.bin",
    }
}

/// Writes one episode directory: `manifest.json` plus one binary cloud file
/// per stage, with the SHA-256 of every binary recorded in the manifest.
pub fn save_episode(ep: &Episode, dir: &Path) -> Result<(), DatasetError> {
    std::fs::create_dir_all(dir)?;
    let mut stages = Vec::new();
    for obs in &ep.observations {
        let file = stage_file(obs.stage).to_string();
        let bytes = encode_cloud(&obs.cloud.points);
        let sha = sha256_hex(&bytes);
        let mut f = std::fs::File::create(dir.join(&file))?;
        f.write_all(&bytes)?;
        stages.push(StageEntry {
            stage: obs.stage,
            file,
            labels: obs.cloud.labels.iter().map(|l| l.to_u8()).collect(),
            sha256: sha,
        });
    }
    let manifest = EpisodeManifest {
        id: ep.id,
        task: ep.task,
        category: ep.category,
        shape: ep.shape,
        shape_seed: ep.shape_seed,
        scene_seed: ep.scene_seed,
        success: ep.success,
        stages,
        pre_action: ep.pre_action.as_ref().map(action_entry),
        goal_action: ep.goal_action.as_ref().map(action_entry),
        reorient_transform: ep.reorient_transform.as_ref().map(pose16),
        obj_pose_init: pose16(&ep.obj_pose_init),
        obj_pose_grasped: ep.obj_pose_grasped.as_ref().map(pose16),
        obj_pose_fin: ep.obj_pose_fin.as_ref().map(pose16),
        grp_assist_grasped: ep.grp_assist_grasped.as_ref().map(pose16),
        grp_assist_fin: ep.grp_assist_fin.as_ref().map(pose16),
        grp_primary_fin: ep.grp_primary_fin.as_ref().map(pose16),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

pub fn load_episode(dir: &Path) -> Result<Episode, DatasetError> {
    let mut json = String::new();
    std::fs::File::open(dir.join("manifest.json"))?.read_to_string(&mut json)?;
    let m: EpisodeManifest = serde_json::from_str(&json)?;
    let mut observations = Vec::new();
    for entry in &m.stages {
        let bytes = std::fs::read(dir.join(&entry.file))?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(DatasetError::CorruptManifest(format!(
                "checksum mismatch for {}",
                entry.file
            )));
        }
        let points = decode_cloud(&bytes)?;
        if points.len() != entry.labels.len() {
            return Err(DatasetError::CorruptManifest("label count mismatch".into()));
        }
        let labels = entry
            .labels
            .iter()
            .map(|&b| {
                PartLabel::from_u8(b)
                    .ok_or_else(|| DatasetError::CorruptManifest(format!("bad label byte {b}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        observations.push(StageObs { stage: entry.stage, cloud: LabeledCloud::new(points, labels) });
    }
    Ok(Episode {
        id: m.id,
        task: m.task,
        category: m.category,
        shape: m.shape,
        shape_seed: m.shape_seed,
        scene_seed: m.scene_seed,
        observations,
        pre_action: m.pre_action.as_ref().map(action_record),
        goal_action: m.goal_action.as_ref().map(action_record),
        reorient_transform: m.reorient_transform.as_deref().map(Pose::from_matrix16),
        obj_pose_init: Pose::from_matrix16(&m.obj_pose_init),
        obj_pose_grasped: m.obj_pose_grasped.as_deref().map(Pose::from_matrix16),
        obj_pose_fin: m.obj_pose_fin.as_deref().map(Pose::from_matrix16),
        grp_assist_grasped: m.grp_assist_grasped.as_deref().map(Pose::from_matrix16),
        grp_assist_fin: m.grp_assist_fin.as_deref().map(Pose::from_matrix16),
        grp_primary_fin: m.grp_primary_fin.as_deref().map(Pose::from_matrix16),
        success: m.success,
    })
}

/// Loads every episode directory under `<root>/episodes`, in name order.
pub fn load_corpus(root: &Path) -> Result<Vec<Episode>, DatasetError> {
    let mut dirs: Vec<_> = std::fs::read_dir(root.join("episodes"))?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| load_episode(d)).collect()
}

// ---------------------------------------------------------------------------
// Train / unseen splits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub category: Category,
    pub train: Vec<u64>,
    pub unseen: Vec<u64>,
}

/// Object-level split: every object instance is assigned exactly once, with
/// train:unseen counts at a 3:1 ratio (rounded).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub entries: Vec<SplitEntry>,
}

impl SplitManifest {
    pub fn entry(&self, category: Category) -> Option<&SplitEntry> {
        self.entries.iter().find(|e| e.category == category)
    }
}

pub fn make_split(objects: &[(Category, Vec<u64>)], seed: u64) -> SplitManifest {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5b1f_37a0_11c3_99d7);
    let mut entries = Vec::new();
    for (category, seeds) in objects {
        let mut shuffled = seeds.clone();
        shuffled.shuffle(&mut rng);
        let n_train = (3 * shuffled.len() + 2) / 4;
        let (train, unseen) = shuffled.split_at(n_train);
        entries.push(SplitEntry {
            category: *category,
            train: train.to_vec(),
            unseen: unseen.to_vec(),
        });
    }
    SplitManifest { seed, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geodesic_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_cloud(n: usize, seed: u64) -> LabeledCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| {
                Vec3::new(rng.gen::<f64>() * 0.2, rng.gen::<f64>() * 0.2, rng.gen::<f64>() * 0.05)
            })
            .collect();
        LabeledCloud::new(points, vec![PartLabel::Fixed; n])
    }

    fn toy_episode(id: u64, seed: u64, success: bool, goal_point: Vec3) -> Episode {
        let exec = toy_cloud(64, seed);
        let init = toy_cloud(64, seed.wrapping_add(1));
        Episode {
            id,
            task: TaskKind::PlateLifting,
            category: Category::Plate,
            shape: ShapeParams::Plate { radius: 0.1, thickness: 0.01 },
            shape_seed: 7,
            scene_seed: seed,
            observations: vec![
                StageObs { stage: StageName::Initial, cloud: init },
                StageObs { stage: StageName::Exec, cloud: exec },
            ],
            pre_action: Some(ActionRecord {
                point: Vec3::new(0.05, 0.05, 0.01),
                orientation: Rotation::identity(),
            }),
            goal_action: Some(ActionRecord {
                point: goal_point,
                orientation: Rotation::identity(),
            }),
            reorient_transform: None,
            obj_pose_init: Pose::identity(),
            obj_pose_grasped: None,
            obj_pose_fin: Some(Pose::identity()),
            grp_assist_grasped: None,
            grp_assist_fin: None,
            grp_primary_fin: None,
            success,
        }
    }

    #[test]
    fn knn_scores_trivial_fractions() {
        let all_success: Vec<Interaction> = (0..16)
            .map(|i| Interaction {
                point: Vec3::new(i as f64 * 0.01, 0.0, 0.0),
                success: true,
                episode_id: i,
            })
            .collect();
        let s = knn_scores(&all_success, &[(Vec3::ZERO, true)], 16);
        assert_eq!(s, vec![1.0]);

        let balanced: Vec<Interaction> = (0..16)
            .map(|i| Interaction {
                point: Vec3::new(i as f64 * 0.01, 0.0, 0.0),
                success: i % 2 == 0,
                episode_id: i,
            })
            .collect();
        let s = knn_scores(&balanced, &[(Vec3::ZERO, true)], 16);
        assert_eq!(s, vec![0.5]);

        // non-object points score zero
        let s = knn_scores(&balanced, &[(Vec3::ZERO, false)], 16);
        assert_eq!(s, vec![0.0]);
    }

    #[test]
    fn affordance_gt_matches_bruteforce_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let episodes: Vec<Episode> = (0..50)
            .map(|i| {
                let p = Vec3::new(
                    rng.gen::<f64>() * 0.2,
                    rng.gen::<f64>() * 0.2,
                    rng.gen::<f64>() * 0.05,
                );
                toy_episode(i, 100 + i, rng.gen::<f64>() < 0.5, p)
            })
            .collect();
        let refs: Vec<&Episode> = episodes.iter().collect();
        let map =
            build_affordance_gt(&refs, AffordanceStage::Goal, &episodes[0], DEFAULT_K).unwrap();

        // Exhaustive oracle recount for every query point.
        let exec = episodes[0].observation(StageName::Exec).unwrap();
        let center = exec.object_centroid();
        for (qi, q) in exec.points.iter().enumerate() {
            let qc = q.sub(center);
            let mut dists: Vec<(f64, u64, bool)> = episodes
                .iter()
                .map(|e| {
                    let c = e.observation(StageName::Exec).unwrap().object_centroid();
                    let p = e.goal_action.unwrap().point.sub(c);
                    (p.sub(qc).norm(), e.id, e.success)
                })
                .collect();
            dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let expect =
                dists[..DEFAULT_K].iter().filter(|d| d.2).count() as f64 / DEFAULT_K as f64;
            assert!((map.scores[qi] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn insufficient_data_is_reported() {
        let episodes: Vec<Episode> =
            (0..3).map(|i| toy_episode(i, i, true, Vec3::ZERO)).collect();
        let refs: Vec<&Episode> = episodes.iter().collect();
        let err = build_affordance_gt(&refs, AffordanceStage::Goal, &episodes[0], DEFAULT_K);
        assert!(matches!(err, Err(DatasetError::InsufficientData { .. })));
    }

    #[test]
    fn map_to_anticipatory_identity_and_rotation() {
        let ep = toy_episode(0, 5, true, Vec3::new(0.1, 0.1, 0.02));
        let refs: Vec<&Episode> = std::iter::repeat(&ep).take(16).collect();
        let gt = build_affordance_gt(&refs, AffordanceStage::Goal, &ep, 16).unwrap();

        let same = map_to_anticipatory(&gt, &Pose::identity());
        assert_eq!(same.scores, gt.scores);
        assert_eq!(same.cloud.points, gt.cloud.points);
        assert_eq!(same.stage, AffordanceStage::Anticipatory);

        // Pure rotation: the score of a rotated point equals the original's.
        let rot = Pose::new(Rotation::rot_z(1.1), Vec3::ZERO);
        let turned = map_to_anticipatory(&gt, &rot);
        for (i, p) in gt.cloud.points.iter().enumerate() {
            let moved = rot.apply(*p);
            assert!(turned.cloud.points[i].sub(moved).norm() < 1e-12);
            assert_eq!(turned.scores[i], gt.scores[i]);
        }

        // Round trip within 1e-9, scores bit-equal.
        let back = map_to_anticipatory(&turned, &rot.inverse());
        for (a, b) in back.cloud.points.iter().zip(&gt.cloud.points) {
            assert!(a.sub(*b).norm() < 1e-9);
        }
        assert_eq!(back.scores, gt.scores);
    }

    #[test]
    fn anticipatory_orientation_gt_delegates_to_geometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ep = toy_episode(0, 9, true, Vec3::ZERO);
        let init = crate::geometry::random_rotation(&mut rng);
        let fin = crate::geometry::random_rotation(&mut rng);
        let grp = crate::geometry::random_rotation(&mut rng);
        ep.obj_pose_init = Pose::new(init, Vec3::ZERO);
        ep.obj_pose_fin = Some(Pose::new(fin, Vec3::new(0.1, 0.0, 0.2)));
        ep.goal_action = Some(ActionRecord { point: Vec3::ZERO, orientation: grp });
        let got = anticipatory_orientation_gt(&ep).unwrap();
        let expect = crate::geometry::anticipatory_gripper_rotation(&init, &fin, &grp);
        assert_eq!(got.m, expect.m);
        assert!(geodesic_distance(&got, &got) < 1e-6);

        ep.success = false;
        assert!(matches!(
            anticipatory_orientation_gt(&ep),
            Err(DatasetError::IncompleteTrajectory)
        ));
    }

    #[test]
    fn save_load_roundtrip_is_byte_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let mut ep = toy_episode(3, 11, true, Vec3::new(0.1, 0.0, 0.01));
        for obs in &mut ep.observations {
            obs.cloud = quantize_cloud(&obs.cloud);
        }
        let d1 = tmp.path().join("a");
        let d2 = tmp.path().join("b");
        save_episode(&ep, &d1).unwrap();
        let loaded = load_episode(&d1).unwrap();
        assert_eq!(loaded, ep);
        save_episode(&loaded, &d2).unwrap();
        for f in ["manifest.json", "stage_initial.bin", "stage_exec.bin"] {
            let a = std::fs::read(d1.join(f)).unwrap();
            let b = std::fs::read(d2.join(f)).unwrap();
            assert_eq!(a, b, "file {f} differs");
        }
    }

    #[test]
    fn truncated_cloud_file_is_corrupt() {
        let tmp = tempfile::tempdir().unwrap();
        let mut ep = toy_episode(4, 12, false, Vec3::ZERO);
        for obs in &mut ep.observations {
            obs.cloud = quantize_cloud(&obs.cloud);
        }
        let dir = tmp.path().join("ep");
        save_episode(&ep, &dir).unwrap();
        let path = dir.join("stage_initial.bin");
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        assert!(matches!(load_episode(&dir), Err(DatasetError::CorruptManifest(_))));
    }

    #[test]
    fn split_ratio_and_uniqueness() {
        let seeds: Vec<u64> = (0..20).collect();
        let split = make_split(&[(Category::Plate, seeds.clone())], 5);
        let e = split.entry(Category::Plate).unwrap();
        assert_eq!(e.train.len(), 15);
        assert_eq!(e.unseen.len(), 5);
        let mut all: Vec<u64> = e.train.iter().chain(&e.unseen).copied().collect();
        all.sort();
        assert_eq!(all, seeds);

        let again = make_split(&[(Category::Plate, seeds)], 5);
        assert_eq!(split, again);
    }
}
