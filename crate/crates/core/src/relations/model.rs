use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OrientedFootprint, Pose, Wall};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovablePart {
    pub part: String,
    #[serde(default)]
    pub motion_axis: String,
    #[serde(default)]
    pub swing_extent: f64,
}

/// One furniture item. Width runs along local `X`, depth along local `Y` (front).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectAsset {
    pub id: String,
    pub category: String,
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub movable_parts: Vec<MovablePart>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub image_refs: Vec<PathBuf>,
    /// Pose of the asset in the input arrangement, if any. Only used for grouping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_pose: Option<Pose>,
}

impl ObjectAsset {
    pub fn new(id: &str, category: &str, width: f64, depth: f64, height: f64) -> Self {
        Self {
            id: id.to_string(),
            category: category.to_string(),
            width,
            depth,
            height,
            movable_parts: Vec::new(),
            image_refs: Vec::new(),
            initial_pose: None,
        }
    }

    pub fn with_part(mut self, part: &str, extent: f64) -> Self {
        self.movable_parts.push(MovablePart {
            part: part.to_string(),
            motion_axis: "y".to_string(),
            swing_extent: extent,
        });
        self
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width
    }

    pub fn half_depth(&self) -> f64 {
        0.5 * self.depth
    }

    pub fn footprint_area(&self) -> f64 {
        self.width * self.depth
    }

    pub fn footprint(&self, pose: &Pose) -> OrientedFootprint {
        OrientedFootprint::new(pose.position(), self.half_width(), self.half_depth(), pose.yaw)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.id.is_empty() {
            errs.push("asset id must be non-empty".to_string());
        }
        for (name, v) in [("width", self.width), ("depth", self.depth), ("height", self.height)] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("asset `{}`: {name} must be positive, got {v}", self.id));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(errs))
        }
    }
}

/// Checks per-asset invariants and id uniqueness across a scene.
pub fn validate_assets(assets: &[ObjectAsset]) -> Result<()> {
    let mut errs = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for a in assets {
        if let Err(Error::Schema(e)) = a.validate() {
            errs.extend(e);
        }
        if !seen.insert(a.id.as_str()) {
            errs.push(format!("duplicate asset id `{}`", a.id));
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Schema(errs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionScore {
    pub label: String,
    pub confidence: f64,
}

/// Up to five atomic actions, most confident first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InteractionPattern {
    pub top_actions: Vec<ActionScore>,
}

impl InteractionPattern {
    pub const MAX_ACTIONS: usize = 5;

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.top_actions.iter().map(|a| a.label.as_str())
    }

    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.top_actions.len() > Self::MAX_ACTIONS {
            errs.push(format!("top_actions exceeds {}", Self::MAX_ACTIONS));
        }
        for a in &self.top_actions {
            if !(0.0..=1.0).contains(&a.confidence) {
                errs.push(format!("confidence of `{}` outside [0, 1]", a.label));
            }
        }
        if self
            .top_actions
            .windows(2)
            .any(|w| w[1].confidence > w[0].confidence)
        {
            errs.push("top_actions confidences must be non-increasing".to_string());
        }
        errs
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FunctionalDescription {
    pub summary: String,
    pub has_openable_part: bool,
    pub is_seat: bool,
    pub requires_frontal_access: bool,
    pub viewing_target: bool,
}

/// Which operational envelope governs interaction with an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationalRole {
    Seat,
    Openable,
    Other,
}

impl FunctionalDescription {
    pub fn role(&self) -> OperationalRole {
        if self.is_seat {
            OperationalRole::Seat
        } else if self.has_openable_part {
            OperationalRole::Openable
        } else {
            OperationalRole::Other
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    FacingAccess,
    AdjacentUse,
    ClearancePassage,
    OperationalClearance,
    AgainstWall,
    AlignWith,
    PointTowards,
    OnTopOf,
}

impl RelationKind {
    pub const ALL: [RelationKind; 8] = [
        RelationKind::FacingAccess,
        RelationKind::AdjacentUse,
        RelationKind::ClearancePassage,
        RelationKind::OperationalClearance,
        RelationKind::AgainstWall,
        RelationKind::AlignWith,
        RelationKind::PointTowards,
        RelationKind::OnTopOf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::FacingAccess => "facing_access",
            RelationKind::AdjacentUse => "adjacent_use",
            RelationKind::ClearancePassage => "clearance_passage",
            RelationKind::OperationalClearance => "operational_clearance",
            RelationKind::AgainstWall => "against_wall",
            RelationKind::AlignWith => "align_with",
            RelationKind::PointTowards => "point_towards",
            RelationKind::OnTopOf => "on_top_of",
        }
    }

    pub fn parse(s: &str) -> Option<RelationKind> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Relations compiled into a center-distance band.
    pub fn is_distance(self) -> bool {
        matches!(
            self,
            RelationKind::FacingAccess
                | RelationKind::AdjacentUse
                | RelationKind::ClearancePassage
                | RelationKind::OperationalClearance
        )
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationTarget {
    Object(String),
    Wall(Wall),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub kind: RelationKind,
    pub subject: String,
    #[serde(flatten)]
    pub target: RelationTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

/// Largest accepted tolerance buffer, meters.
pub const MAX_TAU: f64 = 1.0;

impl Relation {
    pub fn between(kind: RelationKind, subject: &str, object: &str) -> Self {
        Self {
            kind,
            subject: subject.to_string(),
            target: RelationTarget::Object(object.to_string()),
            theta: None,
            height: None,
            tau: None,
        }
    }

    pub fn against_wall(subject: &str, wall: Wall) -> Self {
        Self {
            kind: RelationKind::AgainstWall,
            subject: subject.to_string(),
            target: RelationTarget::Wall(wall),
            theta: None,
            height: None,
            tau: None,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    pub fn with_height(mut self, h: f64) -> Self {
        self.height = Some(h);
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn object_id(&self) -> Option<&str> {
        match &self.target {
            RelationTarget::Object(id) => Some(id),
            RelationTarget::Wall(_) => None,
        }
    }

    /// Asset ids this relation touches.
    pub fn participants(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.subject.as_str()).chain(self.object_id())
    }

    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let tag = format!("{}({})", self.kind, self.subject);
        match (&self.target, self.kind) {
            (RelationTarget::Wall(_), RelationKind::AgainstWall) => {}
            (RelationTarget::Wall(_), k) => errs.push(format!("{tag}: {k} requires an object target")),
            (RelationTarget::Object(_), RelationKind::AgainstWall) => {
                errs.push(format!("{tag}: against_wall requires a wall target"))
            }
            (RelationTarget::Object(o), _) => {
                if *o == self.subject {
                    errs.push(format!("{tag}: subject and object must differ"));
                }
            }
        }
        if self.kind == RelationKind::OnTopOf {
            match self.height {
                Some(h) if h.is_finite() && h >= 0.0 => {}
                _ => errs.push(format!("{tag}: on_top_of requires height h >= 0")),
            }
        }
        if let Some(t) = self.theta {
            if !t.is_finite() {
                errs.push(format!("{tag}: theta must be finite"));
            }
        }
        if let Some(t) = self.tau {
            if !(t.is_finite() && (0.0..=MAX_TAU).contains(&t)) {
                errs.push(format!("{tag}: tau {t} outside [0, {MAX_TAU}]"));
            }
        }
        errs
    }
}

/// Ordering key for sequential placement: larger anchors first, then larger groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorityKey {
    pub largest_area: f64,
    pub member_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticGroup {
    pub group_id: String,
    pub members: Vec<String>,
    #[serde(default)]
    pub intra_relations: Vec<Relation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority_key: Option<PriorityKey>,
}

impl SemanticGroup {
    pub fn new(group_id: &str, members: Vec<String>) -> Self {
        Self {
            group_id: group_id.to_string(),
            members,
            intra_relations: Vec::new(),
            priority_key: None,
        }
    }

    pub fn compute_priority(&mut self, assets: &[ObjectAsset]) {
        let largest_area = self
            .members
            .iter()
            .filter_map(|m| assets.iter().find(|a| &a.id == m))
            .map(|a| a.footprint_area())
            .fold(0.0, f64::max);
        self.priority_key = Some(PriorityKey {
            largest_area,
            member_count: self.members.len(),
        });
    }
}
