//! Share of a manipulation box swept by a participant's body over an episode.

use crate::anthropometry::ManipulationBox;
use crate::error::{Error, Result};
use crate::geometry::{OrientedFootprint, Vec2};
use crate::par;

use super::trajectory::TrajectoryEpisode;

/// One frame's body volume: an oriented footprint plus a vertical extent.
#[derive(Debug, Clone, Copy)]
pub struct BodyFrame {
    pub footprint: OrientedFootprint,
    pub z0: f64,
    pub z1: f64,
}

pub fn body_frames(episode: &TrajectoryEpisode) -> Result<Vec<BodyFrame>> {
    let body = episode.body.ok_or_else(|| {
        Error::Config(format!(
            "episode `{}` has no body dimensions; pass a profile",
            episode.participant
        ))
    })?;
    Ok(episode
        .samples
        .iter()
        .zip(episode.headings())
        .map(|(s, yaw)| {
            let z0 = s.z.unwrap_or(0.0);
            BodyFrame {
                footprint: OrientedFootprint::new(s.xy(), 0.5 * body.breadth, 0.5 * body.depth, yaw),
                z0,
                z1: z0 + body.stature,
            }
        })
        .collect())
}

/// Cells per axis and their size when tiling `extent` with cells no larger than `voxel`.
fn tiling(extent: f64, voxel: f64) -> (usize, f64) {
    let n = ((extent / voxel).ceil() as usize).max(1);
    (n, extent / n as f64)
}

/// Vol(M ∩ B) / Vol(B), with M the union of per-frame body boxes and both
/// volumes counted on voxel centers of `voxel` size inside B.
///
/// Works column by column: the frames whose footprint covers a column center
/// contribute z-intervals, and the voxels whose centers fall in their union
/// are occupied.
pub fn volumetric_occupancy_ratio(episode: &TrajectoryEpisode, target: &ManipulationBox, voxel: f64) -> Result<f64> {
    if !(voxel > 0.0) {
        return Err(Error::Config(format!("voxel size must be > 0, got {voxel}")));
    }
    if episode.samples.is_empty() {
        return Ok(0.0);
    }
    let frames = body_frames(episode)?;
    let ext = target.extent();
    if ext.iter().any(|e| !(*e > 0.0)) {
        return Ok(0.0);
    }
    let (nx, dx) = tiling(ext[0], voxel);
    let (ny, dy) = tiling(ext[1], voxel);
    let (nz, dz) = tiling(ext[2], voxel);

    let per_row = par::map_range(nx, |i| {
        let x = target.min[0] + (i as f64 + 0.5) * dx;
        let mut occupied = 0usize;
        let mut spans: Vec<(f64, f64)> = Vec::new();
        for j in 0..ny {
            let y = target.min[1] + (j as f64 + 0.5) * dy;
            let p = Vec2::new(x, y);
            spans.clear();
            spans.extend(frames.iter().filter(|f| f.footprint.contains(p)).map(|f| (f.z0, f.z1)));
            if spans.is_empty() {
                continue;
            }
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut merged: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
            for &(a, b) in &spans {
                match merged.last_mut() {
                    Some(last) if a <= last.1 => last.1 = last.1.max(b),
                    _ => merged.push((a, b)),
                }
            }
            for k in 0..nz {
                let z = target.min[2] + (k as f64 + 0.5) * dz;
                if merged.iter().any(|&(a, b)| z >= a && z <= b) {
                    occupied += 1;
                }
            }
        }
        occupied
    });
    let occupied: usize = per_row.iter().sum();
    Ok(occupied as f64 / (nx * ny * nz) as f64)
}
