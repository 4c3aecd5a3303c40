//! Functional descriptions, interaction patterns, semantic groups and the
//! relations between them, plus the backends that infer them.

mod model;
pub mod payload;
pub mod remote;
pub mod rules;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Room;

pub use model::*;
pub use payload::{validate_backend_payload, BackendPayload};
pub use remote::RemoteBackend;
pub use rules::{Lexicon, RuleBackend};

/// Everything a backend infers about one scene.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneInference {
    pub groups: Vec<SemanticGroup>,
    pub inter_relations: Vec<Relation>,
    #[serde(default)]
    pub descriptions: BTreeMap<String, FunctionalDescription>,
    #[serde(default)]
    pub patterns: BTreeMap<String, InteractionPattern>,
    /// Relation conflicts detected but deliberately left unresolved.
    #[serde(default)]
    pub conflicts: Vec<String>,
}

impl SceneInference {
    pub fn all_relations(&self) -> impl Iterator<Item = &Relation> {
        self.groups
            .iter()
            .flat_map(|g| g.intra_relations.iter())
            .chain(self.inter_relations.iter())
    }

    pub fn role_of(&self, id: &str) -> OperationalRole {
        self.descriptions
            .get(id)
            .map_or(OperationalRole::Other, FunctionalDescription::role)
    }

    pub fn group_of(&self, id: &str) -> Option<&SemanticGroup> {
        self.groups.iter().find(|g| g.members.iter().any(|m| m == id))
    }

    /// Checks grouping and reference invariants against the scene's assets.
    pub fn validate(&self, assets: &[ObjectAsset]) -> Result<()> {
        let ids: BTreeSet<&str> = assets.iter().map(|a| a.id.as_str()).collect();
        let mut errs = Vec::new();
        let mut seen = BTreeMap::new();
        for g in &self.groups {
            if g.members.is_empty() {
                errs.push(format!("group `{}` has no members", g.group_id));
            }
            for m in &g.members {
                if !ids.contains(m.as_str()) {
                    errs.push(format!("group `{}` references unknown asset `{m}`", g.group_id));
                }
                if let Some(prev) = seen.insert(m.as_str(), g.group_id.as_str()) {
                    errs.push(format!("asset `{m}` is in groups `{prev}` and `{}`", g.group_id));
                }
            }
            for r in &g.intra_relations {
                if r.participants().any(|p| !g.members.iter().any(|m| m == p)) {
                    errs.push(format!(
                        "intra relation {}({}) leaves group `{}`",
                        r.kind, r.subject, g.group_id
                    ));
                }
            }
        }
        for id in &ids {
            if !seen.contains_key(id) {
                errs.push(format!("asset `{id}` is not grouped"));
            }
        }
        for r in self.all_relations() {
            errs.extend(r.violations());
            for p in r.participants() {
                if !ids.contains(p) {
                    errs.push(format!("relation {}({}) references unknown asset `{p}`", r.kind, r.subject));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(errs))
        }
    }
}

pub trait InferenceBackend {
    fn infer(&self, assets: &[ObjectAsset], room: &Room, criteria: &str) -> Result<SceneInference>;
}

/// Runs a backend and checks its output; groups come back in placement order.
pub fn infer_relations(
    assets: &[ObjectAsset],
    room: &Room,
    criteria: &str,
    backend: &dyn InferenceBackend,
) -> Result<SceneInference> {
    validate_assets(assets)?;
    let mut inf = backend.infer(assets, room, criteria)?;
    inf.validate(assets)?;
    for g in &mut inf.groups {
        g.compute_priority(assets);
    }
    inf.groups = group_order(std::mem::take(&mut inf.groups));
    if inf.conflicts.is_empty() {
        inf.conflicts = detect_conflicts(inf.all_relations());
    }
    Ok(inf)
}

/// Sorts groups: largest anchor footprint first, then more members, then id.
pub fn group_order(mut groups: Vec<SemanticGroup>) -> Vec<SemanticGroup> {
    let key = |g: &SemanticGroup| {
        g.priority_key.unwrap_or(PriorityKey {
            largest_area: 0.0,
            member_count: g.members.len(),
        })
    };
    groups.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        kb.largest_area
            .total_cmp(&ka.largest_area)
            .then(kb.member_count.cmp(&ka.member_count))
            .then_with(|| a.group_id.cmp(&b.group_id))
    });
    groups
}

/// Splits relations into per-group intra relations and the inter-group rest.
pub fn classify_relations(groups: &mut [SemanticGroup], relations: Vec<Relation>) -> Vec<Relation> {
    let mut inter = Vec::new();
    for r in relations {
        let home = groups
            .iter()
            .position(|g| r.participants().all(|p| g.members.iter().any(|m| m == p)));
        match home {
            Some(i) => groups[i].intra_relations.push(r),
            None => inter.push(r),
        }
    }
    inter
}

/// Reports relation sets that cannot all be satisfied; nothing is removed.
pub fn detect_conflicts<'a>(relations: impl Iterator<Item = &'a Relation>) -> Vec<String> {
    let mut walls: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut stacked: BTreeSet<&str> = BTreeSet::new();
    let mut facing: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in relations {
        match (&r.target, r.kind) {
            (RelationTarget::Wall(w), RelationKind::AgainstWall) => {
                walls.entry(&r.subject).or_default().insert(format!("{w:?}").to_lowercase());
            }
            (RelationTarget::Object(_), RelationKind::OnTopOf) => {
                stacked.insert(&r.subject);
            }
            (RelationTarget::Object(o), RelationKind::PointTowards | RelationKind::FacingAccess) => {
                facing.entry(&r.subject).or_default().insert(o);
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    for (s, ws) in &walls {
        if ws.len() > 1 {
            out.push(format!("`{s}` is placed against several walls: {ws:?}"));
        }
        if stacked.contains(s) {
            out.push(format!("`{s}` is both against a wall and stacked on another object"));
        }
    }
    for (s, targets) in &facing {
        if targets.len() > 1 {
            out.push(format!("`{s}` is asked to face several targets: {targets:?}"));
        }
    }
    out
}
