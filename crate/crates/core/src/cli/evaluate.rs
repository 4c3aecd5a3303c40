//! Metrics report for a finished layout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anthropometry::{manipulation_box, AnthropometricProfile};
use crate::config::LayoutConfig;
use crate::error::{Error, Result};
use crate::geometry::OrientedFootprint;
use crate::manifest::InputRef;
use crate::metrics::heatmap::{write_pgm, write_raw};
use crate::metrics::{
    collision_free_score, colliding_pairs, count_distinct_trajectories, detour_signature, in_boundary_score,
    is_inside, mean_speed_heatmap, volumetric_occupancy_ratio, BodyDims, DetourSignature, TrajectoryEpisode,
};
use crate::optimizer::{PlacedAsset, SceneLayout};
use crate::relations::{Lexicon, ObjectAsset, RuleBackend};

pub const REPORT_FORMAT: &str = "anthro-layout/report";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyReport {
    pub target: String,
    pub ratio: f64,
    pub voxel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub file: PathBuf,
    pub participant: String,
    pub samples: usize,
    pub duration: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<OccupancyReport>,
    pub signature: DetourSignature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSummary {
    pub resolution: usize,
    pub sigma: f64,
    pub visited_cells: usize,
    pub max_mean_speed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pgm: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorReport {
    pub episodes: Vec<EpisodeReport>,
    pub distinct_trajectories: usize,
    pub heatmap: HeatmapSummary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format: String,
    pub version: u32,
    pub layout: InputRef,
    pub collision_free: f64,
    pub in_boundary: f64,
    pub colliding_pairs: Vec<(String, String)>,
    pub outside_room: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub behavior: Option<BehaviorReport>,
}

#[derive(Debug, Clone, Default)]
pub struct EvaluateRequest {
    pub layout: PathBuf,
    pub trajectories: Vec<PathBuf>,
    pub profile: Option<PathBuf>,
    /// Asset whose manipulation box is scored; by default the asset nearest
    /// to each episode's last sample.
    pub target: Option<String>,
    pub voxel: f64,
    pub config: Option<PathBuf>,
    /// Writes `<prefix>.pgm` and `<prefix>.raw` when set.
    pub heatmap: Option<PathBuf>,
}

fn nearest_asset<'a>(layout: &'a SceneLayout, episode: &TrajectoryEpisode) -> Option<&'a PlacedAsset> {
    let end = episode.samples.last()?.xy();
    layout
        .assets
        .iter()
        .min_by(|a, b| (a.pose().position() - end).norm().total_cmp(&(b.pose().position() - end).norm()))
}

fn occupancy(
    layout: &SceneLayout,
    episode: &TrajectoryEpisode,
    profile: &AnthropometricProfile,
    target: Option<&str>,
    voxel: f64,
) -> Result<Option<OccupancyReport>> {
    let placed = match target {
        Some(id) => Some(
            layout
                .assets
                .iter()
                .find(|a| a.id == id)
                .ok_or_else(|| Error::Config(format!("target `{id}` is not in the layout")))?,
        ),
        None => nearest_asset(layout, episode),
    };
    let Some(placed) = placed else { return Ok(None) };
    let asset = ObjectAsset::new(&placed.id, &placed.category, placed.width, placed.depth, placed.height);
    let role = RuleBackend::new(Lexicon::bundled()).describe(&asset).0.role();
    let target_box = manipulation_box(&asset, &placed.pose(), role, profile)?;
    let ratio = volumetric_occupancy_ratio(episode, &target_box, voxel)?;
    Ok(Some(OccupancyReport {
        target: placed.id.clone(),
        ratio,
        voxel,
    }))
}

fn write_heatmap(prefix: &Path, grid: &crate::metrics::HeatmapGrid) -> Result<(PathBuf, PathBuf)> {
    let pgm = prefix.with_extension("pgm");
    let raw = prefix.with_extension("raw");
    let mut bytes = Vec::new();
    write_pgm(grid, None, &mut bytes)?;
    super::write_atomic(&pgm, &bytes)?;
    bytes.clear();
    write_raw(grid, &mut bytes)?;
    super::write_atomic(&raw, &bytes)?;
    Ok((pgm, raw))
}

pub fn evaluate(req: &EvaluateRequest) -> Result<EvaluationReport> {
    let (layout_ref, text) = InputRef::read(&req.layout)?;
    let layout = SceneLayout::from_json(&text)?;
    let config = match &req.config {
        Some(p) => LayoutConfig::from_json(&InputRef::read(p)?.1)?,
        None => LayoutConfig::default(),
    };
    let footprints = layout.footprints();
    let ids: Vec<&str> = layout.assets.iter().map(|a| a.id.as_str()).collect();
    let mut report = EvaluationReport {
        format: REPORT_FORMAT.to_string(),
        version: 1,
        layout: layout_ref,
        collision_free: collision_free_score(&footprints),
        in_boundary: in_boundary_score(&footprints, &layout.room),
        colliding_pairs: colliding_pairs(&footprints)
            .into_iter()
            .map(|(i, j)| (ids[i].to_string(), ids[j].to_string()))
            .collect(),
        outside_room: footprints
            .iter()
            .zip(&ids)
            .filter(|(f, _)| !is_inside(f, &layout.room))
            .map(|(_, id)| id.to_string())
            .collect(),
        behavior: None,
    };
    if req.trajectories.is_empty() {
        return Ok(report);
    }

    let profile = match &req.profile {
        Some(p) => Some(AnthropometricProfile::from_json(&InputRef::read(p)?.1)?),
        None => None,
    };
    let mut episodes = Vec::with_capacity(req.trajectories.len());
    for path in &req.trajectories {
        let mut e = TrajectoryEpisode::load(path)?;
        if let (None, Some(p)) = (e.body, &profile) {
            e = e.with_body(BodyDims::from_profile(p));
        }
        episodes.push(e);
    }

    let mut warnings = Vec::new();
    if profile.is_none() {
        warnings.push("no profile given: occupancy skipped".to_string());
    }
    let obstacles: Vec<(String, OrientedFootprint)> =
        ids.iter().map(|s| s.to_string()).zip(footprints.iter().copied()).collect();
    let mut episode_reports = Vec::with_capacity(episodes.len());
    for (e, path) in episodes.iter().zip(&req.trajectories) {
        let occupancy = match &profile {
            Some(p) => occupancy(&layout, e, p, req.target.as_deref(), req.voxel)?,
            None => None,
        };
        episode_reports.push(EpisodeReport {
            file: path.clone(),
            participant: e.participant.clone(),
            samples: e.samples.len(),
            duration: e.samples.last().map_or(0.0, |s| s.t) - e.samples.first().map_or(0.0, |s| s.t),
            occupancy,
            signature: detour_signature(e, &obstacles, &config.metrics),
        });
    }

    let grid = mean_speed_heatmap(
        &episodes,
        &layout.room,
        config.metrics.heatmap_resolution,
        config.metrics.heatmap_sigma,
    )?;
    let (pgm, raw) = match &req.heatmap {
        Some(prefix) => {
            let (a, b) = write_heatmap(prefix, &grid)?;
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    let max_mean_speed = grid.mean.iter().filter(|v| !v.is_nan()).fold(0.0_f64, |a, b| a.max(*b));
    report.behavior = Some(BehaviorReport {
        distinct_trajectories: count_distinct_trajectories(&episodes, &obstacles, &config.metrics),
        episodes: episode_reports,
        heatmap: HeatmapSummary {
            resolution: grid.resolution,
            sigma: grid.sigma,
            visited_cells: grid.visited_cells(),
            max_mean_speed,
            pgm,
            raw,
        },
        warnings,
    });
    Ok(report)
}
