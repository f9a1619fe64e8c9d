//! Bimanual preparatory manipulation at desk scale.
//!
//! One arm (the assistant) reconfigures an object — pre-grasping, pushing,
//! reorienting — so the other arm (the primary) can execute a goal-directed
//! action that was initially infeasible. This crate contains the whole
//! pipeline: a kinematic two-gripper tabletop simulator, hand-crafted
//! demonstration heuristics, episode datasets with empirical affordance
//! ground truth, a small exact-gradient network stack, the four-stage
//! affordance/cVAE policy, and the command-line harness that ties them
//! together.

pub mod dataset;
pub mod geometry;
pub mod harness;
pub mod heuristics;
pub mod nn;
pub mod pipeline;
pub mod ply;
pub mod sim;
pub mod scene;

pub use geometry::{Pose, Rotation, Vec3};
pub use scene::{Category, LabeledCloud, PartLabel, TableScene, TaskKind};
