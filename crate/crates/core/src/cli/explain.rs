//! Plain-text table of every term in a program, evaluated at a layout.

use std::fmt::Write as _;
use std::path::Path;

use crate::anthropometry::Rationale;
use crate::constraints::dump::{check_header, dump, ProgramDump, TermRow, PROGRAM_FORMAT};
use crate::constraints::ConstraintProgram;
use crate::error::{Error, Result};
use crate::optimizer::layout::{LAYOUT_FORMAT, LAYOUT_VERSION};
use crate::optimizer::SceneLayout;

use super::pipeline::{embedded_manifest, prepare};

/// Poses of `layout` in the program's asset order.
fn layout_poses(program: &ConstraintProgram, layout: &SceneLayout) -> Result<Vec<f64>> {
    let mut v = vec![0.0; program.dim()];
    for (i, slot) in program.assets.iter().enumerate() {
        let a = layout
            .assets
            .iter()
            .find(|a| a.id == slot.id)
            .ok_or_else(|| Error::Schema(vec![format!("layout lacks asset `{}`", slot.id)]))?;
        v[3 * i..3 * i + 3].copy_from_slice(&[a.x, a.y, a.yaw]);
    }
    Ok(v)
}

/// Loads a program dump, or rebuilds one from a layout's embedded manifest.
pub fn load_dump(path: &Path) -> Result<ProgramDump> {
    let text = std::fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    match v.get("format").and_then(|f| f.as_str()) {
        Some(PROGRAM_FORMAT) => ProgramDump::from_json(&text),
        Some(LAYOUT_FORMAT) => {
            check_header(&v, LAYOUT_FORMAT, LAYOUT_VERSION)?;
            let layout = SceneLayout::from_json(&text)?;
            let manifest = embedded_manifest(path)?;
            let prepared = prepare(&manifest)?;
            let poses = layout_poses(&prepared.program, &layout)?;
            let mut d = dump(&prepared.program, &poses)?;
            d.run = layout.run;
            Ok(d)
        }
        other => Err(Error::Format(format!(
            "expected {PROGRAM_FORMAT} or {LAYOUT_FORMAT}, got {}",
            other.unwrap_or("<missing>")
        ))),
    }
}

fn rationale(row: &TermRow) -> String {
    match &row.band {
        Some(b) => {
            let kind = match b.rationale {
                Rationale::Accessibility => "access",
                Rationale::Clearance => "clearance",
            };
            format!(
                "{kind}: {}={:.3} tau={:.2} band=[{:.3}, {:.3}]",
                b.provenance.dimension, b.provenance.dimension_value, b.tau, b.d_min, b.d_max
            )
        }
        None => "-".to_string(),
    }
}

/// One row per term, then warnings and the program total.
pub fn render(d: &ProgramDump) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode {}  room {} x {} m  terms {}", d.mode, d.room.width, d.room.depth, d.terms.len());
    let _ = writeln!(
        out,
        "{:>4}  {:<14} {:<34} {:>6} {:>12} {:>12} {:>8}  {:<3}  {}",
        "#", "kind", "participants", "weight", "residual", "weighted", "dist", "ok", "origin / rationale"
    );
    for r in &d.terms {
        let dist = r.distance.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
        let _ = writeln!(
            out,
            "{:>4}  {:<14} {:<34} {:>6} {:>12.6e} {:>12.6e} {:>8}  {:<3}  {} | {}",
            r.index,
            r.kind,
            r.participants.join(","),
            r.weight,
            r.value,
            r.weighted,
            dist,
            if r.satisfied { "yes" } else { "no" },
            r.origin,
            rationale(r)
        );
    }
    for w in &d.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    let violated = d.terms.iter().filter(|r| !r.satisfied).count();
    let _ = writeln!(out, "violated {violated}  total {:e}", d.total);
    out
}
