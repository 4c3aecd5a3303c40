//! Compiles inferred relations into a differentiable penalty program.
//!
//! Poses are a flat vector `[x0, y0, yaw0, x1, y1, yaw1, ...]` over assets
//! sorted by id, so input order never affects the program.

pub mod dump;
pub mod penalty;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::anthropometry::{
    band_from_envelope, derive_distance_band, AnthropometricProfile, DimensionMap, DistanceBand, Mode,
    Rationale,
};
use crate::config::{LayoutConfig, WeightConfig};
use crate::error::{Error, Result};
use crate::geometry::{overlap_ratio, OrientedFootprint, Pose, Room, Vec2, Wall};
use crate::relations::{ObjectAsset, OperationalRole, Relation, RelationKind, RelationTarget, SceneInference};

use penalty::Local;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetSlot {
    pub id: String,
    pub half_width: f64,
    pub half_depth: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermParams {
    Distance { band: DistanceBand },
    AlignWith { theta: f64 },
    PointTowards { theta: f64 },
    AgainstWall { wall: Wall },
    OnTopOf { height: f64 },
    Collision,
    Boundary,
}

impl TermParams {
    pub fn name(&self) -> &'static str {
        match self {
            TermParams::Distance { .. } => "distance",
            TermParams::AlignWith { .. } => "align_with",
            TermParams::PointTowards { .. } => "point_towards",
            TermParams::AgainstWall { .. } => "against_wall",
            TermParams::OnTopOf { .. } => "on_top_of",
            TermParams::Collision => "collision",
            TermParams::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTerm {
    #[serde(flatten)]
    pub params: TermParams,
    /// Asset indices; the first is the subject.
    pub participants: Vec<usize>,
    pub weight: f64,
    /// Relation the term came from, e.g. `facing_access(chair_1 -> desk_1)`,
    /// or `pairwise` / `room` for the generic terms.
    pub origin: String,
}

/// `top` rests on `support` with its base `height` above the support's top face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stacking {
    pub top: usize,
    pub support: usize,
    pub height: f64,
}

/// A semantic group by asset index, in placement order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSlot {
    pub id: String,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintProgram {
    pub mode: Mode,
    pub room: Room,
    pub assets: Vec<AssetSlot>,
    pub groups: Vec<GroupSlot>,
    pub terms: Vec<PenaltyTerm>,
    /// Assets whose poses are held fixed; their gradient entries are zero.
    pub frozen: BTreeSet<usize>,
    pub stacking: Vec<Stacking>,
    /// Relative weight of the bounding-circle part of collision terms.
    #[serde(default)]
    pub circle_separation: f64,
    /// Tightening used while optimizing: footprints grow by half of it for
    /// collisions, distance bands and the room shrink by it. 0 in compiled
    /// programs; every tightened penalty bounds its exact value from above.
    #[serde(default)]
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub total: f64,
    /// Unweighted violation per term.
    pub values: Vec<f64>,
    pub gradient: Vec<f64>,
}

fn relation_label(r: &Relation) -> String {
    match &r.target {
        RelationTarget::Object(o) => format!("{}({} -> {})", r.kind, r.subject, o),
        RelationTarget::Wall(w) => format!("{}({} -> {} wall)", r.kind, r.subject, w.as_str()),
    }
}

fn role_for(inference: &SceneInference, asset: &ObjectAsset) -> OperationalRole {
    if inference.descriptions.contains_key(&asset.id) {
        inference.role_of(&asset.id)
    } else if !asset.movable_parts.is_empty() {
        OperationalRole::Openable
    } else {
        OperationalRole::Other
    }
}

/// Builds the penalty program for a scene.
///
/// Term order: relation terms (groups in placement order, then inter-group
/// relations), then one collision term per unordered pair, then one boundary
/// term per asset.
pub fn compile(
    assets: &[ObjectAsset],
    inference: &SceneInference,
    room: &Room,
    mode: Mode,
    profile: Option<&AnthropometricProfile>,
    map: &DimensionMap,
    config: &LayoutConfig,
) -> Result<ConstraintProgram> {
    if !room.is_valid() {
        return Err(Error::Config("room extents must be > 0".into()));
    }
    let mut warnings = Vec::new();
    let profile = match (mode, profile) {
        (Mode::Baseline, Some(_)) => {
            warnings.push("baseline mode ignores the supplied anthropometric profile".to_string());
            None
        }
        (Mode::Baseline, None) => None,
        (m, None) => return Err(Error::Config(format!("profile required for mode {m}"))),
        (_, Some(p)) => {
            p.validate()?;
            Some(p)
        }
    };

    let mut sorted: Vec<&ObjectAsset> = assets.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let index: BTreeMap<&str, usize> = sorted.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
    let lookup = |id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| Error::Schema(vec![format!("relation references unknown asset `{id}`")]))
    };

    let w0 = config.weights.base;
    let mut terms = Vec::new();
    let mut stacking = Vec::new();
    let mut stacked_pairs = BTreeSet::new();

    for rel in inference.all_relations() {
        let origin = relation_label(rel);
        let s = lookup(&rel.subject)?;
        let theta = rel.theta.unwrap_or(0.0);
        let mut push = |params: TermParams, participants: Vec<usize>| {
            terms.push(PenaltyTerm {
                params,
                participants,
                weight: w0,
                origin: origin.clone(),
            })
        };
        match &rel.target {
            RelationTarget::Wall(w) => match rel.kind {
                RelationKind::AgainstWall => push(TermParams::AgainstWall { wall: *w }, vec![s]),
                k => return Err(Error::Schema(vec![format!("`{k}` cannot target a wall")])),
            },
            RelationTarget::Object(oid) => {
                let o = lookup(oid)?;
                match rel.kind {
                    kind if kind.is_distance() => {
                        let rationale = kind.rationale().expect("distance kinds have a rationale");
                        let tau = rel.tau.unwrap_or(match rationale {
                            Rationale::Accessibility => config.tau.accessibility,
                            Rationale::Clearance => config.tau.clearance,
                        });
                        let (sa, oa) = (sorted[s], sorted[o]);
                        let band = match profile {
                            None => {
                                let envelope = config.baseline_envelopes.get(&kind).copied().ok_or_else(|| {
                                    Error::Config(format!("baseline_envelopes has no entry for `{kind}`"))
                                })?;
                                band_from_envelope(rationale, sa, oa, envelope, tau, "generic")
                            }
                            Some(p) => {
                                derive_distance_band(kind, role_for(inference, sa), sa, oa, p, tau, map, mode)?
                            }
                        };
                        push(TermParams::Distance { band }, vec![s, o]);
                        if kind == RelationKind::FacingAccess {
                            push(TermParams::PointTowards { theta }, vec![s, o]);
                        }
                    }
                    RelationKind::AlignWith => push(TermParams::AlignWith { theta }, vec![s, o]),
                    RelationKind::PointTowards => push(TermParams::PointTowards { theta }, vec![s, o]),
                    RelationKind::OnTopOf => {
                        let height = rel.height.unwrap_or(0.0);
                        push(TermParams::OnTopOf { height }, vec![s, o]);
                        stacking.push(Stacking {
                            top: s,
                            support: o,
                            height,
                        });
                        stacked_pairs.insert((s.min(o), s.max(o)));
                    }
                    RelationKind::AgainstWall => {
                        return Err(Error::Schema(vec![format!("{origin}: against_wall needs a wall")]))
                    }
                    _ => unreachable!("distance kinds handled above"),
                }
            }
        }
    }

    let n = sorted.len();
    for i in 0..n {
        for j in i + 1..n {
            if !stacked_pairs.contains(&(i, j)) {
                terms.push(PenaltyTerm {
                    params: TermParams::Collision,
                    participants: vec![i, j],
                    weight: w0,
                    origin: "pairwise".into(),
                });
            }
        }
    }
    for i in 0..n {
        terms.push(PenaltyTerm {
            params: TermParams::Boundary,
            participants: vec![i],
            weight: w0,
            origin: "room".into(),
        });
    }

    let mut groups = Vec::new();
    let mut grouped = BTreeSet::new();
    for g in &inference.groups {
        let mut members = g.members.iter().map(|m| lookup(m)).collect::<Result<Vec<_>>>()?;
        members.sort_unstable();
        grouped.extend(members.iter().copied());
        groups.push(GroupSlot {
            id: g.group_id.clone(),
            members,
        });
    }
    for i in (0..n).filter(|i| !grouped.contains(i)) {
        groups.push(GroupSlot {
            id: sorted[i].id.clone(),
            members: vec![i],
        });
    }

    Ok(ConstraintProgram {
        mode,
        room: *room,
        groups,
        assets: sorted
            .iter()
            .map(|a| AssetSlot {
                id: a.id.clone(),
                half_width: a.half_width(),
                half_depth: a.half_depth(),
                height: a.height,
            })
            .collect(),
        terms,
        frozen: BTreeSet::new(),
        stacking,
        circle_separation: config.weights.circle_separation,
        margin: 0.0,
        warnings,
    })
}

impl ConstraintProgram {
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.assets.binary_search_by(|a| a.id.as_str().cmp(id)).ok()
    }

    pub fn dim(&self) -> usize {
        3 * self.assets.len()
    }

    pub fn footprint(&self, poses: &[f64], i: usize) -> OrientedFootprint {
        let a = &self.assets[i];
        OrientedFootprint::new(
            Vec2::new(poses[3 * i], poses[3 * i + 1]),
            a.half_width,
            a.half_depth,
            poses[3 * i + 2],
        )
    }

    fn center(poses: &[f64], i: usize) -> Vec2 {
        Vec2::new(poses[3 * i], poses[3 * i + 1])
    }

    /// Value and per-participant gradient of one term (unweighted).
    pub fn term_local(&self, term: &PenaltyTerm, poses: &[f64]) -> Local {
        let p = &term.participants;
        match &term.params {
            TermParams::Distance { band } => {
                let m = self.margin;
                let (lo, hi) = if band.width() > 2.0 * m {
                    (band.d_min + m, band.d_max - m)
                } else {
                    let mid = 0.5 * (band.d_min + band.d_max);
                    (mid, mid)
                };
                penalty::distance(Self::center(poses, p[0]), Self::center(poses, p[1]), lo, hi)
            }
            TermParams::AlignWith { theta } => {
                penalty::align_with(poses[3 * p[0] + 2], poses[3 * p[1] + 2], *theta)
            }
            TermParams::PointTowards { theta } => penalty::point_towards(
                Self::center(poses, p[0]),
                poses[3 * p[0] + 2],
                Self::center(poses, p[1]),
                *theta,
            ),
            TermParams::AgainstWall { wall } => {
                penalty::against_wall(&self.footprint(poses, p[0]), &self.room, *wall)
            }
            TermParams::OnTopOf { .. } => penalty::on_top_of(Self::center(poses, p[0]), Self::center(poses, p[1])),
            TermParams::Collision => {
                let grow = |mut f: OrientedFootprint| {
                    f.half_width += 0.5 * self.margin;
                    f.half_depth += 0.5 * self.margin;
                    f
                };
                let (a, b) = (grow(self.footprint(poses, p[0])), grow(self.footprint(poses, p[1])));
                let mut l = penalty::collision(&a, &b);
                if self.circle_separation > 0.0 {
                    let c = penalty::circle_clearance(&a, &b);
                    l.value += self.circle_separation * c.value;
                    for (g, cg) in l.grad.iter_mut().flatten().zip(c.grad.iter().flatten()) {
                        *g += self.circle_separation * cg;
                    }
                }
                l
            }
            TermParams::Boundary => penalty::boundary(&self.footprint(poses, p[0]), &self.room, self.margin),
        }
    }

    fn check_poses(&self, poses: &[f64]) -> Result<()> {
        if poses.len() != self.dim() {
            return Err(Error::Evaluation(format!(
                "pose vector has {} entries, expected {}",
                poses.len(),
                self.dim()
            )));
        }
        if let Some(k) = poses.iter().position(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!(
                "non-finite pose component {} of asset `{}`",
                k % 3,
                self.assets[k / 3].id
            )));
        }
        Ok(())
    }

    /// Total weighted penalty, per-term values and gradient with the stored weights.
    pub fn evaluate(&self, poses: &[f64]) -> Result<Evaluation> {
        let weights: Vec<f64> = self.terms.iter().map(|t| t.weight).collect();
        self.evaluate_with(poses, &weights)
    }

    pub fn evaluate_with(&self, poses: &[f64], weights: &[f64]) -> Result<Evaluation> {
        self.check_poses(poses)?;
        let mut total = 0.0;
        let mut values = Vec::with_capacity(self.terms.len());
        let mut gradient = vec![0.0; self.dim()];
        for (term, &w) in self.terms.iter().zip(weights) {
            let local = self.term_local(term, poses);
            total += w * local.value;
            values.push(local.value);
            for (slot, &i) in term.participants.iter().enumerate() {
                for k in 0..3 {
                    gradient[3 * i + k] += w * local.grad[slot][k];
                }
            }
        }
        for &i in &self.frozen {
            gradient[3 * i..3 * i + 3].fill(0.0);
        }
        if !total.is_finite() {
            return Err(Error::Evaluation("penalty is not finite".into()));
        }
        Ok(Evaluation {
            total,
            values,
            gradient,
        })
    }

    /// Collision terms get the boosted weight while their pair overlaps by
    /// more than the threshold; everything else keeps the base weight.
    pub fn adaptive_weights(&self, poses: &[f64], cfg: &WeightConfig) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| match t.params {
                TermParams::Collision => {
                    let (i, j) = (t.participants[0], t.participants[1]);
                    let r = overlap_ratio(&self.footprint(poses, i), &self.footprint(poses, j));
                    if r > cfg.overlap_threshold {
                        cfg.collision_boost
                    } else {
                        cfg.base
                    }
                }
                _ => t.weight,
            })
            .collect()
    }

    /// Program for one placement stage: keeps terms touching `active` whose
    /// other participants are active or already `placed`, and freezes
    /// everything that is not active.
    pub fn restrict(&self, active: &BTreeSet<usize>, placed: &BTreeSet<usize>) -> ConstraintProgram {
        let terms = self
            .terms
            .iter()
            .filter(|t| {
                t.participants.iter().any(|p| active.contains(p))
                    && t.participants.iter().all(|p| active.contains(p) || placed.contains(p))
            })
            .cloned()
            .collect();
        ConstraintProgram {
            terms,
            frozen: (0..self.assets.len()).filter(|i| !active.contains(i)).collect(),
            ..self.clone()
        }
    }

    /// Base heights implied by the stacking relations.
    pub fn base_heights(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.assets.len()];
        // Chains are short; relax until stable, bounded by the asset count.
        for _ in 0..self.assets.len() {
            let mut changed = false;
            for s in &self.stacking {
                let want = z[s.support] + self.assets[s.support].height + s.height;
                if z[s.top] != want {
                    z[s.top] = want;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        z
    }

    pub fn poses_from_vec(&self, v: &[f64]) -> Vec<Pose> {
        let z = self.base_heights();
        (0..self.assets.len())
            .map(|i| Pose {
                z_base: z[i],
                ..Pose::new(v[3 * i], v[3 * i + 1], v[3 * i + 2])
            })
            .collect()
    }

    pub fn vec_from_poses(poses: &[Pose]) -> Vec<f64> {
        poses.iter().flat_map(|p| [p.x, p.y, p.yaw]).collect()
    }

    /// Center distances of the distance terms, paired with their bands.
    pub fn distance_report(&self, poses: &[f64]) -> Vec<(usize, f64, &DistanceBand)> {
        self.terms
            .iter()
            .enumerate()
            .filter_map(|(k, t)| match &t.params {
                TermParams::Distance { band } => {
                    let d = (Self::center(poses, t.participants[0]) - Self::center(poses, t.participants[1])).norm();
                    Some((k, d, band))
                }
                _ => None,
            })
            .collect()
    }

    /// Fraction of distance terms within their band widened by `slack`; 1.0 when there are none.
    pub fn band_satisfaction(&self, poses: &[f64], slack: f64) -> f64 {
        let rep = self.distance_report(poses);
        if rep.is_empty() {
            return 1.0;
        }
        rep.iter().filter(|(_, d, b)| b.contains(*d, slack)).count() as f64 / rep.len() as f64
    }
}
