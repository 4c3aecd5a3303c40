//! Recorded participant trajectories and their on-disk formats.
//!
//! JSON: `{"participant", "fps", "body"?: {breadth, depth, stature}, "samples": [{t, x, y, z?}]}`.
//! CSV: an optional `# participant=<id> fps=<hz>` line, then a `t,x,y[,z]` header and rows.

use serde::{Deserialize, Serialize};

use crate::anthropometry::AnthropometricProfile;
use crate::error::{Error, Result};
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Floor height under the participant; 0 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

impl Sample {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, x, y, z: None }
    }

    pub fn xy(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Per-frame body box: breadth across the heading, depth along it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyDims {
    pub breadth: f64,
    pub depth: f64,
    pub stature: f64,
}

impl BodyDims {
    pub fn from_profile(p: &AnthropometricProfile) -> Self {
        Self {
            breadth: p.body_breadth,
            depth: p.body_depth,
            stature: p.stature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEpisode {
    pub participant: String,
    pub fps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodyDims>,
    pub samples: Vec<Sample>,
}

impl TrajectoryEpisode {
    pub fn new(participant: &str, fps: f64, samples: Vec<Sample>) -> Self {
        Self {
            participant: participant.to_string(),
            fps,
            body: None,
            samples,
        }
    }

    pub fn with_body(mut self, body: BodyDims) -> Self {
        self.body = Some(body);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.fps.is_finite() && self.fps > 0.0) {
            errs.push(format!("fps must be > 0, got {}", self.fps));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if ![s.t, s.x, s.y, s.z.unwrap_or(0.0)].iter().all(|v| v.is_finite()) {
                errs.push(format!("sample {i} has a non-finite value"));
            }
        }
        for (i, w) in self.samples.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                errs.push(format!("timestamps must increase strictly (samples {i} and {})", i + 1));
                break;
            }
        }
        if let Some(b) = &self.body {
            if !(b.breadth > 0.0 && b.depth > 0.0 && b.stature > 0.0) {
                errs.push("body dimensions must be > 0".to_string());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(
                errs.into_iter().map(|e| format!("episode `{}`: {e}", self.participant)).collect(),
            ))
        }
    }

    /// Heading per sample: the direction of the most recent movement up to
    /// and including that sample, or 0 before any movement. Only past
    /// samples matter, so appending samples never changes earlier headings.
    pub fn headings(&self) -> Vec<f64> {
        let mut last = 0.0;
        let mut out = Vec::with_capacity(self.samples.len());
        for (i, s) in self.samples.iter().enumerate() {
            if i > 0 {
                let d = s.xy() - self.samples[i - 1].xy();
                if d.norm() > 0.0 {
                    // front (−sin yaw, cos yaw) along d
                    last = (-d.x).atan2(d.y);
                }
            }
            out.push(last);
        }
        out
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let e: Self = serde_json::from_str(s)?;
        e.validate()?;
        Ok(e)
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let mut participant = String::from("participant");
        let mut fps = None;
        for line in s.lines().take_while(|l| l.starts_with('#')) {
            for tok in line.trim_start_matches('#').split([' ', ',', '\t']) {
                match tok.split_once('=') {
                    Some(("participant", v)) => participant = v.to_string(),
                    Some(("fps", v)) => {
                        fps = Some(v.parse::<f64>().map_err(|_| Error::Schema(vec![format!("bad fps `{v}`")]))?)
                    }
                    _ => {}
                }
            }
        }
        let fps = fps.ok_or_else(|| Error::Schema(vec!["CSV trajectory needs a `# fps=<hz>` line".into()]))?;
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(s.as_bytes());
        let mut samples = Vec::new();
        for (i, row) in rdr.deserialize::<Sample>().enumerate() {
            samples.push(row.map_err(|e| Error::Schema(vec![format!("row {}: {e}", i + 1)]))?);
        }
        let e = Self::new(&participant, fps, samples);
        e.validate()?;
        Ok(e)
    }

    /// Parses by extension: `.csv` as CSV, anything else as JSON.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Self::from_csv(&text)
        } else {
            Self::from_json(&text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let csv = "# participant=p7 fps=30\nt,x,y\n0.0,1.0,1.0\n0.0333,1.1,1.0\n";
        let e = TrajectoryEpisode::from_csv(csv).unwrap();
        assert_eq!(e.participant, "p7");
        assert_eq!(e.fps, 30.0);
        assert_eq!(e.samples[1], Sample::new(0.0333, 1.1, 1.0));
    }

    #[test]
    fn non_increasing_time_rejected() {
        let e = TrajectoryEpisode::new("p", 10.0, vec![Sample::new(0.0, 0.0, 0.0), Sample::new(0.0, 1.0, 0.0)]);
        assert!(e.validate().is_err());
        let e = TrajectoryEpisode::new("p", 0.0, vec![]);
        assert!(e.validate().is_err());
    }

    #[test]
    fn headings_follow_travel() {
        let e = TrajectoryEpisode::new(
            "p",
            10.0,
            vec![
                Sample::new(0.0, 0.0, 0.0),
                Sample::new(0.1, 0.0, 0.0),
                Sample::new(0.2, 1.0, 0.0),
                Sample::new(0.3, 1.0, 1.0),
            ],
        );
        let h = e.headings();
        assert_eq!(&h[..2], &[0.0, 0.0]);
        // +X travel: front (−sin, cos) = (1, 0) → yaw −π/2
        assert!((h[2] + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(h[3].abs() < 1e-12);
    }
}
