//! Landmark shape models and model assemblies.

mod assembly;
mod contour;
mod landmarks;
mod model;
mod procrustes;
mod voxelize;

pub use assembly::{assemble_model, check_disjoint, ModelAssembly, PlacedObject, Relationship};
pub use contour::{extract_slice_contours, slice_contour, slice_extent, SliceAxis, SliceContour};
pub use landmarks::{equal_space_landmarks, landmark_object, sampled_slices, StartRule};
pub use model::{build_object_model, flatten, unflatten, ObjectKind, ObjectModel};
pub use procrustes::{
    align_shapes, is_collinear, umeyama, SimilarityTransform, GPA_MAX_ITERATIONS, GPA_TOLERANCE,
};
pub use voxelize::{
    default_shell_band, overlap_count, point_triangle_distance, voxelize_shape, StackMesh, VoxelSet,
};
