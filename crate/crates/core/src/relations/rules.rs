//! Deterministic category-lexicon backend.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    classify_relations, ActionScore, FunctionalDescription, InferenceBackend, InteractionPattern,
    ObjectAsset, Relation, RelationKind, RelationTarget, SceneInference, SemanticGroup,
};
use crate::error::{Error, Result};
use crate::geometry::{bounding_circle_radius, Room, Wall};

pub const BUNDLED_LEXICON: &str = include_str!("../../data/lexicon.json");

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CategoryEntry {
    #[serde(default)]
    pub summary: String,
    #[serde(default)]
    pub has_openable_part: bool,
    #[serde(default)]
    pub is_seat: bool,
    #[serde(default)]
    pub requires_frontal_access: bool,
    #[serde(default)]
    pub viewing_target: bool,
    #[serde(default)]
    pub against_wall: bool,
    #[serde(default)]
    pub actions: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationTemplate {
    pub kind: RelationKind,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub height: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affinity {
    pub subject: String,
    pub object: String,
    /// Subjects a single object may take on under this rule.
    pub capacity: usize,
    pub relations: Vec<RelationTemplate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub version: u32,
    pub categories: BTreeMap<String, CategoryEntry>,
    pub affinities: Vec<Affinity>,
    /// Footprint gap under which lone assets join a neighbor sharing an action, meters.
    pub proximity_threshold: f64,
}

impl Lexicon {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let lex: Self = serde_json::from_str(s)?;
        if !(lex.proximity_threshold >= 0.0) {
            return Err(Error::Config("proximity_threshold must be >= 0".into()));
        }
        Ok(lex)
    }

    pub fn entry(&self, category: &str) -> Option<&CategoryEntry> {
        self.categories.get(&normalize_category(category))
    }
}

pub fn normalize_category(c: &str) -> String {
    c.trim().to_ascii_lowercase().replace([' ', '-'], "_")
}

#[derive(Debug, Clone)]
pub struct RuleBackend {
    pub lexicon: Lexicon,
}

impl Default for RuleBackend {
    fn default() -> Self {
        Self {
            lexicon: Lexicon::bundled(),
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = i;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index wins for stable roots
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

fn instantiate(t: &RelationTemplate, subject: &str, object: &str) -> Relation {
    Relation {
        kind: t.kind,
        subject: subject.to_string(),
        target: RelationTarget::Object(object.to_string()),
        theta: t.theta,
        height: t.height,
        tau: t.tau,
    }
}

fn nearest_wall(asset: &ObjectAsset, room: &Room) -> Option<Wall> {
    let p = asset.initial_pose?;
    let d = [p.y, room.width - p.x, room.depth - p.y, p.x];
    (0..4)
        .min_by(|&a, &b| d[a].total_cmp(&d[b]))
        .and_then(Wall::from_index)
}

impl RuleBackend {
    pub fn new(lexicon: Lexicon) -> Self {
        Self { lexicon }
    }

    /// Description and interaction pattern from the lexicon and part metadata.
    pub fn describe(&self, asset: &ObjectAsset) -> (FunctionalDescription, InteractionPattern) {
        let entry = self.lexicon.entry(&asset.category).cloned().unwrap_or_default();
        let openable_meta = !asset.movable_parts.is_empty()
            && asset.movable_parts.iter().any(|p| p.part != "seat");
        let seat_meta = asset.movable_parts.iter().any(|p| p.part == "seat");
        let desc = FunctionalDescription {
            summary: if entry.summary.is_empty() {
                format!("{} with no lexicon entry", asset.category)
            } else {
                entry.summary.clone()
            },
            has_openable_part: entry.has_openable_part || openable_meta,
            is_seat: entry.is_seat || seat_meta,
            requires_frontal_access: entry.requires_frontal_access,
            viewing_target: entry.viewing_target,
        };
        let mut top_actions: Vec<ActionScore> = entry
            .actions
            .iter()
            .map(|(label, confidence)| ActionScore {
                label: label.clone(),
                confidence: *confidence,
            })
            .collect();
        top_actions.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then(a.label.cmp(&b.label)));
        top_actions.truncate(InteractionPattern::MAX_ACTIONS);
        (desc, InteractionPattern { top_actions })
    }
}

impl InferenceBackend for RuleBackend {
    fn infer(&self, assets: &[ObjectAsset], room: &Room, _criteria: &str) -> Result<SceneInference> {
        let mut order: Vec<&ObjectAsset> = assets.iter().collect();
        order.sort_by(|a, b| a.id.cmp(&b.id));
        let cats: Vec<String> = order.iter().map(|a| normalize_category(&a.category)).collect();
        let n = order.len();

        let mut descriptions = BTreeMap::new();
        let mut patterns = BTreeMap::new();
        for a in &order {
            let (d, p) = self.describe(a);
            descriptions.insert(a.id.clone(), d);
            patterns.insert(a.id.clone(), p);
        }

        let mut uf = UnionFind::new(n);
        let mut relations = Vec::new();
        let mut linked = vec![false; n];
        let mut matched_subject = vec![false; n];

        for aff in &self.lexicon.affinities {
            let mut load = vec![0usize; n];
            for s in 0..n {
                if cats[s] != aff.subject || matched_subject[s] {
                    continue;
                }
                let candidates = (0..n).filter(|&o| o != s && cats[o] == aff.object && load[o] < aff.capacity);
                let pick = match order[s].initial_pose {
                    Some(ps) => candidates.min_by(|&a, &b| {
                        let da = order[a].initial_pose.map_or(f64::INFINITY, |p| (p.position() - ps.position()).norm());
                        let db = order[b].initial_pose.map_or(f64::INFINITY, |p| (p.position() - ps.position()).norm());
                        da.total_cmp(&db).then(a.cmp(&b))
                    }),
                    None => candidates.min(),
                };
                let Some(o) = pick else { continue };
                load[o] += 1;
                matched_subject[s] = true;
                linked[s] = true;
                linked[o] = true;
                uf.union(s, o);
                for t in &aff.relations {
                    relations.push(instantiate(t, &order[s].id, &order[o].id));
                }
            }
        }

        // lone assets join the nearest neighbor that shares an action
        let threshold = self.lexicon.proximity_threshold;
        for s in 0..n {
            if linked[s] {
                continue;
            }
            let Some(ps) = order[s].initial_pose else { continue };
            let rs = bounding_circle_radius(&order[s].footprint(&ps));
            let acts: BTreeSet<&str> = patterns[&order[s].id].labels().collect();
            let best = (0..n)
                .filter(|&o| o != s)
                .filter_map(|o| {
                    let po = order[o].initial_pose?;
                    let ro = bounding_circle_radius(&order[o].footprint(&po));
                    let gap = ((po.position() - ps.position()).norm() - rs - ro).max(0.0);
                    let shares = patterns[&order[o].id].labels().any(|l| acts.contains(l));
                    (gap < threshold && shares).then_some((gap, o))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((_, o)) = best {
                uf.union(s, o);
            }
        }

        let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let r = uf.find(i);
            components.entry(r).or_default().push(i);
        }
        let mut groups: Vec<SemanticGroup> = components
            .values()
            .map(|members| {
                let anchor = members
                    .iter()
                    .copied()
                    .max_by(|&a, &b| {
                        order[a]
                            .footprint_area()
                            .total_cmp(&order[b].footprint_area())
                            .then(b.cmp(&a))
                    })
                    .expect("non-empty component");
                SemanticGroup::new(
                    &format!("group_{}", order[anchor].id),
                    members.iter().map(|&m| order[m].id.clone()).collect(),
                )
            })
            .collect();
        for g in &mut groups {
            g.compute_priority(assets);
        }
        groups = super::group_order(groups);

        // walls: nearest to the input pose, else cycled in id order
        let mut cycle = 0usize;
        for (i, a) in order.iter().enumerate() {
            let against = self.lexicon.entry(&cats[i]).is_some_and(|e| e.against_wall);
            if !against {
                continue;
            }
            let wall = nearest_wall(a, room).unwrap_or_else(|| {
                let w = Wall::ALL[cycle % 4];
                cycle += 1;
                w
            });
            relations.push(Relation::against_wall(&a.id, wall));
        }

        let anchor_of = |g: &SemanticGroup| -> String {
            g.members
                .iter()
                .max_by(|a, b| {
                    let fa = assets.iter().find(|x| &x.id == *a).map_or(0.0, |x| x.footprint_area());
                    let fb = assets.iter().find(|x| &x.id == *b).map_or(0.0, |x| x.footprint_area());
                    fa.total_cmp(&fb).then(b.cmp(a))
                })
                .cloned()
                .unwrap_or_default()
        };
        let anchors: Vec<String> = groups.iter().map(anchor_of).collect();
        let is_storage = |id: &str| descriptions.get(id).is_some_and(|d: &FunctionalDescription| d.has_openable_part);
        let first_seat = |g: &SemanticGroup| {
            g.members
                .iter()
                .find(|m| descriptions.get(*m).is_some_and(|d: &FunctionalDescription| d.is_seat))
                .cloned()
        };

        // storage groups keep operating clearance from the main work group
        if let Some(primary) = anchors.iter().position(|a| !is_storage(a)) {
            for (gi, anchor) in anchors.iter().enumerate() {
                if gi != primary && is_storage(anchor) {
                    relations.push(Relation::between(
                        RelationKind::OperationalClearance,
                        anchor,
                        &anchors[primary],
                    ));
                }
            }
        }
        // passage between the occupants of consecutive seated work areas
        let seats: Vec<String> = groups.iter().filter_map(first_seat).collect();
        for w in seats.windows(2) {
            relations.push(Relation::between(RelationKind::ClearancePassage, &w[1], &w[0]));
        }

        let inter_relations = classify_relations(&mut groups, relations);
        let conflicts = super::detect_conflicts(
            groups.iter().flat_map(|g| g.intra_relations.iter()).chain(inter_relations.iter()),
        );
        Ok(SceneInference {
            groups,
            inter_relations,
            descriptions,
            patterns,
            conflicts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::infer_relations;

    fn room() -> Room {
        Room::new(5.5, 5.5, 2.5)
    }

    #[test]
    fn desk_and_chair_form_one_group() {
        let assets = vec![
            ObjectAsset::new("desk", "desk", 1.2, 0.6, 0.75),
            ObjectAsset::new("chair", "office_chair", 0.55, 0.55, 0.9),
        ];
        let inf = infer_relations(&assets, &room(), "", &RuleBackend::default()).unwrap();
        assert_eq!(inf.groups.len(), 1);
        let rels = &inf.groups[0].intra_relations;
        assert_eq!(rels.len(), 2);
        assert_eq!(rels[0], Relation::between(RelationKind::FacingAccess, "chair", "desk"));
        assert_eq!(
            rels[1],
            Relation::between(RelationKind::AlignWith, "chair", "desk").with_theta(0.0)
        );
        assert!(inf.inter_relations.is_empty());
    }

    #[test]
    fn single_bed_has_no_pairwise_relations() {
        let assets = vec![ObjectAsset::new("bed", "bed", 1.6, 2.0, 0.5)];
        let inf = infer_relations(&assets, &room(), "", &RuleBackend::default()).unwrap();
        assert_eq!(inf.groups.len(), 1);
        assert_eq!(inf.all_relations().count(), 0);
    }

    #[test]
    fn chest_keeps_clearance_from_desk_group() {
        let assets = vec![
            ObjectAsset::new("desk", "desk", 1.4, 0.7, 0.75),
            ObjectAsset::new("chair", "office_chair", 0.55, 0.55, 0.9),
            ObjectAsset::new("chest", "chest", 0.9, 0.45, 0.85).with_part("drawer", 0.4),
        ];
        let inf = infer_relations(&assets, &room(), "", &RuleBackend::default()).unwrap();
        assert_eq!(inf.groups.len(), 2);
        assert!(inf
            .inter_relations
            .contains(&Relation::between(RelationKind::OperationalClearance, "chest", "desk")));
    }

    #[test]
    fn rule_backend_is_pure() {
        let assets: Vec<ObjectAsset> = serde_json::from_str(include_str!("../../data/scenes/office10.json"))
            .map(|v: serde_json::Value| serde_json::from_value(v["assets"].clone()).unwrap())
            .unwrap();
        let a = infer_relations(&assets, &room(), "", &RuleBackend::default()).unwrap();
        let b = infer_relations(&assets, &room(), "", &RuleBackend::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let mut rev = assets.clone();
        rev.reverse();
        let c = infer_relations(&rev, &room(), "", &RuleBackend::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn two_desks_pair_one_chair_each() {
        let assets = vec![
            ObjectAsset::new("desk_a", "desk", 1.2, 0.6, 0.75),
            ObjectAsset::new("desk_b", "desk", 1.2, 0.6, 0.75),
            ObjectAsset::new("chair_a", "office_chair", 0.55, 0.55, 0.9),
            ObjectAsset::new("chair_b", "office_chair", 0.55, 0.55, 0.9),
        ];
        let inf = infer_relations(&assets, &room(), "", &RuleBackend::default()).unwrap();
        assert_eq!(inf.groups.len(), 2);
        assert!(inf.groups.iter().all(|g| g.members.len() == 2));
        assert_eq!(
            inf.inter_relations,
            vec![Relation::between(RelationKind::ClearancePassage, "chair_b", "chair_a")]
        );
    }
}
