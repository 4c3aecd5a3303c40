//! Human-inspectable view of a program evaluated at a given layout.

use serde::{Deserialize, Serialize};

use super::{AssetSlot, ConstraintProgram, TermParams};
use crate::anthropometry::{DistanceBand, Mode};
use crate::error::{Error, Result};
use crate::geometry::Room;
use crate::manifest::RunStamp;

pub const PROGRAM_FORMAT: &str = "anthro-layout/program";
pub const PROGRAM_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRow {
    pub index: usize,
    pub kind: String,
    pub participants: Vec<String>,
    pub weight: f64,
    pub value: f64,
    pub weighted: f64,
    pub origin: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<DistanceBand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramDump {
    pub format: String,
    pub version: u32,
    pub mode: Mode,
    pub room: Room,
    pub assets: Vec<AssetSlot>,
    pub frozen: Vec<String>,
    pub warnings: Vec<String>,
    pub total: f64,
    pub terms: Vec<TermRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

/// Values below this count as satisfied.
const SATISFIED: f64 = 1e-9;

impl ProgramDump {
    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        check_header(&v, PROGRAM_FORMAT, PROGRAM_VERSION)?;
        Ok(serde_json::from_value(v)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("dump serializes");
        s.push('\n');
        s
    }
}

/// Fails unless `v` carries the expected `format` and `version` fields.
pub fn check_header(v: &serde_json::Value, format: &str, version: u32) -> Result<()> {
    let got_format = v.get("format").and_then(|f| f.as_str()).unwrap_or("<missing>");
    let got_version = v.get("version").and_then(|f| f.as_u64());
    if got_format != format || got_version != Some(u64::from(version)) {
        let shown = got_version.map_or_else(|| "<missing>".to_string(), |n| n.to_string());
        return Err(Error::Format(format!("expected {format} v{version}, got {got_format} v{shown}")));
    }
    Ok(())
}

pub fn dump(program: &ConstraintProgram, poses: &[f64]) -> Result<ProgramDump> {
    let eval = program.evaluate(poses)?;
    let distances: std::collections::BTreeMap<usize, f64> =
        program.distance_report(poses).into_iter().map(|(k, d, _)| (k, d)).collect();
    let terms = program
        .terms
        .iter()
        .enumerate()
        .map(|(k, t)| TermRow {
            index: k,
            kind: t.params.name().to_string(),
            participants: t.participants.iter().map(|&i| program.assets[i].id.clone()).collect(),
            weight: t.weight,
            value: eval.values[k],
            weighted: t.weight * eval.values[k],
            origin: t.origin.clone(),
            band: match &t.params {
                TermParams::Distance { band } => Some(band.clone()),
                _ => None,
            },
            distance: distances.get(&k).copied(),
            satisfied: eval.values[k] <= SATISFIED,
        })
        .collect();
    Ok(ProgramDump {
        format: PROGRAM_FORMAT.to_string(),
        version: PROGRAM_VERSION,
        mode: program.mode,
        room: program.room,
        assets: program.assets.clone(),
        frozen: program.frozen.iter().map(|&i| program.assets[i].id.clone()).collect(),
        warnings: program.warnings.clone(),
        total: eval.total,
        terms,
        run: None,
    })
}
