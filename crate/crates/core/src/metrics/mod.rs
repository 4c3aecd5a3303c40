//! Layout scores and trajectory-based behavioral measures.

pub mod detour;
pub mod heatmap;
pub mod occupancy;
mod spatial;
pub mod trajectory;

pub use detour::{count_distinct_trajectories, detour_signature, DetourSignature, Side};
pub use heatmap::{mean_speed_heatmap, HeatmapGrid};
pub use occupancy::volumetric_occupancy_ratio;
pub use spatial::{collision_free_score, colliding_pairs, in_boundary_score, is_inside};
pub use trajectory::{BodyDims, Sample, TrajectoryEpisode};
