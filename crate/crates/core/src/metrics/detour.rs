//! Distinct-trajectory counting by detour signature.
//!
//! A signature lists, in path order, every obstacle the path comes within
//! the proximity threshold of, and on which side the path passed it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::MetricsConfig;
use crate::geometry::{OrientedFootprint, Vec2};

use super::trajectory::TrajectoryEpisode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// The obstacle lay to the left of the direction of travel.
    Left,
    Right,
}

pub type DetourSignature = Vec<(String, Side)>;

/// Distance between segment `a -> b` and a box centered at the origin with
/// the given half extents (all in box-local coordinates), plus the segment
/// parameter in [0, 1] where it is attained.
fn segment_box_distance(a: Vec2, b: Vec2, hw: f64, hd: f64) -> (f64, f64) {
    let d = b - a;
    // Liang–Barsky clip against the box.
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let mut hit = true;
    for (p, q) in [(-d.x, a.x + hw), (d.x, hw - a.x), (-d.y, a.y + hd), (d.y, hd - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                hit = false;
                break;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if hit && t0 <= t1 {
        return (0.0, 0.5 * (t0 + t1));
    }
    let point_box = |p: Vec2| {
        let dx = (p.x.abs() - hw).max(0.0);
        let dy = (p.y.abs() - hd).max(0.0);
        dx.hypot(dy)
    };
    let mut best = (point_box(a), 0.0);
    let eb = point_box(b);
    if eb < best.0 {
        best = (eb, 1.0);
    }
    let len2 = d.dot(d);
    for c in [Vec2::new(-hw, -hd), Vec2::new(hw, -hd), Vec2::new(hw, hd), Vec2::new(-hw, hd)] {
        let t = ((c - a).dot(d) / len2).clamp(0.0, 1.0);
        let dist = (a + d.scale(t) - c).norm();
        if dist < best.0 {
            best = (dist, t);
        }
    }
    best
}

/// Signature of one episode against named obstacle footprints.
pub fn detour_signature(
    episode: &TrajectoryEpisode,
    obstacles: &[(String, OrientedFootprint)],
    cfg: &MetricsConfig,
) -> DetourSignature {
    let inflate = match (cfg.inflate_by_half_breadth, episode.body) {
        (true, Some(b)) => 0.5 * b.breadth,
        _ => 0.0,
    };
    let segments: Vec<(Vec2, Vec2)> = episode
        .samples
        .windows(2)
        .map(|w| (w[0].xy(), w[1].xy()))
        .filter(|(a, b)| (*b - *a).norm() > 0.0)
        .collect();
    let mut hits: Vec<(usize, f64, &str, Side)> = Vec::new();
    for (id, f) in obstacles {
        let (u, v) = f.axes();
        let local = |p: Vec2| {
            let r = p - f.center;
            Vec2::new(r.dot(u), r.dot(v))
        };
        let mut best: Option<(f64, usize, f64)> = None;
        for (k, &(a, b)) in segments.iter().enumerate() {
            let (dist, t) = segment_box_distance(local(a), local(b), f.half_width + inflate, f.half_depth + inflate);
            if best.map_or(true, |(bd, _, _)| dist < bd) {
                best = Some((dist, k, t));
            }
        }
        let Some((dist, k, t)) = best else { continue };
        if dist > cfg.detour_proximity {
            continue;
        }
        let (a, b) = segments[k];
        let p = a + (b - a).scale(t);
        let side = if (b - a).cross(f.center - p) > 0.0 {
            Side::Left
        } else {
            Side::Right
        };
        hits.push((k, t, id, side));
    }
    hits.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.cmp(y.2)));
    hits.into_iter().map(|(_, _, id, s)| (id.to_string(), s)).collect()
}

/// Number of distinct detour signatures among the episodes of one task.
pub fn count_distinct_trajectories(
    episodes: &[TrajectoryEpisode],
    obstacles: &[(String, OrientedFootprint)],
    cfg: &MetricsConfig,
) -> usize {
    let sigs: BTreeSet<DetourSignature> = crate::par::map(episodes, |e| detour_signature(e, obstacles, cfg))
        .into_iter()
        .collect();
    sigs.len()
}
