//! Structure systems, scale features and the learned pose relationship.

mod meb;
mod pc;
mod relation;
mod rotation;

pub use meb::{aabb_diagonal, meb_diagonal};
pub use pc::{canonicalize_axes, pc_from_all_objects, pc_from_mask, pc_from_points, PcSystem};
pub use relation::{
    learn_relationship, reference_frame, DeltaF, ReferenceFrame, RelationF, TrainingObservation,
};
pub use rotation::{
    estimate_rotation, euler_xyz, is_rotation, mean_rotation, rot_x, rot_y, rot_z,
    rotation_from_euler_xyz, EulerXyz, GIMBAL_MARGIN_DEG,
};
