//! Layout files: the optimizer's output and the evaluator's input.

use serde::{Deserialize, Serialize};

use crate::anthropometry::Mode;
use crate::constraints::dump::check_header;
use crate::error::{Error, Result};
use crate::geometry::{OrientedFootprint, Pose, Room, Vec2};
use crate::manifest::RunStamp;

pub const LAYOUT_FORMAT: &str = "anthro-layout/layout";
pub const LAYOUT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedAsset {
    pub id: String,
    pub category: String,
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    pub x: f64,
    pub y: f64,
    pub z_base: f64,
    pub yaw: f64,
}

impl PlacedAsset {
    pub fn pose(&self) -> Pose {
        Pose {
            x: self.x,
            y: self.y,
            yaw: self.yaw,
            z_base: self.z_base,
        }
    }

    pub fn footprint(&self) -> OrientedFootprint {
        OrientedFootprint::new(Vec2::new(self.x, self.y), 0.5 * self.width, 0.5 * self.depth, self.yaw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collision_free: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_penalty: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mode: Mode,
    pub seed: u64,
    pub config_hash: String,
    pub total_penalty: f64,
    /// Unweighted violation of every program term, in program order.
    pub term_violations: Vec<f64>,
    /// Best total reached by each group, in placement order.
    pub group_totals: Vec<(String, f64)>,
    pub candidates: Vec<CandidateSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conflicts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLayout {
    pub format: String,
    pub version: u32,
    pub room: Room,
    pub assets: Vec<PlacedAsset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

impl SceneLayout {
    pub fn new(room: Room, assets: Vec<PlacedAsset>) -> Self {
        Self {
            format: LAYOUT_FORMAT.to_string(),
            version: LAYOUT_VERSION,
            room,
            assets,
            diagnostics: None,
            run: None,
        }
    }

    pub fn footprints(&self) -> Vec<OrientedFootprint> {
        self.assets.iter().map(PlacedAsset::footprint).collect()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        check_header(&v, LAYOUT_FORMAT, LAYOUT_VERSION)?;
        let layout: Self = serde_json::from_value(v)?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !self.room.is_valid() {
            errs.push("room extents must be > 0".to_string());
        }
        for a in &self.assets {
            let vals = [a.width, a.depth, a.height, a.x, a.y, a.z_base, a.yaw];
            if vals.iter().any(|v| !v.is_finite()) {
                errs.push(format!("asset `{}` has a non-finite field", a.id));
            }
            if !(a.width > 0.0 && a.depth > 0.0 && a.height > 0.0) {
                errs.push(format!("asset `{}` needs positive dimensions", a.id));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(errs))
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("layout serializes");
        s.push('\n');
        s
    }
}
