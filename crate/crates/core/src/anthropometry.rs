//! Body-dimension profiles and their translation into distance bands and
//! manipulation boxes.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{front_direction, Pose, Vec2};
use crate::relations::{ObjectAsset, OperationalRole, RelationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    BodyBreadth,
    BodyDepth,
    ForwardReach,
    LateralReach,
    ExtendedArmReach,
    ButtockToeLength,
    Stature,
}

impl Dimension {
    pub const ALL: [Dimension; 7] = [
        Dimension::BodyBreadth,
        Dimension::BodyDepth,
        Dimension::ForwardReach,
        Dimension::LateralReach,
        Dimension::ExtendedArmReach,
        Dimension::ButtockToeLength,
        Dimension::Stature,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::BodyBreadth => "body_breadth",
            Dimension::BodyDepth => "body_depth",
            Dimension::ForwardReach => "forward_reach",
            Dimension::LateralReach => "lateral_reach",
            Dimension::ExtendedArmReach => "extended_arm_reach",
            Dimension::ButtockToeLength => "buttock_toe_length",
            Dimension::Stature => "stature",
        }
    }

    pub fn parse(s: &str) -> Option<Dimension> {
        Self::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Named body dimensions in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnthropometricProfile {
    pub body_breadth: f64,
    pub body_depth: f64,
    pub forward_reach: f64,
    pub lateral_reach: f64,
    pub extended_arm_reach: f64,
    pub buttock_toe_length: f64,
    pub stature: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
}

impl AnthropometricProfile {
    pub fn get(&self, dim: Dimension) -> f64 {
        match dim {
            Dimension::BodyBreadth => self.body_breadth,
            Dimension::BodyDepth => self.body_depth,
            Dimension::ForwardReach => self.forward_reach,
            Dimension::LateralReach => self.lateral_reach,
            Dimension::ExtendedArmReach => self.extended_arm_reach,
            Dimension::ButtockToeLength => self.buttock_toe_length,
            Dimension::Stature => self.stature,
        }
    }

    pub fn set(&mut self, dim: Dimension, v: f64) {
        let slot = match dim {
            Dimension::BodyBreadth => &mut self.body_breadth,
            Dimension::BodyDepth => &mut self.body_depth,
            Dimension::ForwardReach => &mut self.forward_reach,
            Dimension::LateralReach => &mut self.lateral_reach,
            Dimension::ExtendedArmReach => &mut self.extended_arm_reach,
            Dimension::ButtockToeLength => &mut self.buttock_toe_length,
            Dimension::Stature => &mut self.stature,
        };
        *slot = v;
    }

    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for d in Dimension::ALL {
            let v = self.get(d);
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{d} must be positive, got {v}"));
            }
        }
        for (k, v) in &self.extras {
            if !(v.is_finite() && *v > 0.0) {
                errs.push(format!("{k} must be positive, got {v}"));
            }
        }
        if self.forward_reach > self.extended_arm_reach {
            errs.push("forward_reach exceeds extended_arm_reach".to_string());
        }
        if self.stature <= self.body_breadth {
            errs.push("stature must exceed body_breadth".to_string());
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(errs))
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    /// Team profile: per-dimension maximum across members.
    pub fn group_maximum(members: &[AnthropometricProfile]) -> Option<AnthropometricProfile> {
        let (first, rest) = members.split_first()?;
        let mut out = first.clone();
        for p in rest {
            for d in Dimension::ALL {
                out.set(d, out.get(d).max(p.get(d)));
            }
            for (k, v) in &p.extras {
                let e = out.extras.entry(k.clone()).or_insert(*v);
                *e = e.max(*v);
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileBounds {
    pub p5: f64,
    pub p95: f64,
}

/// Per-dimension 5th/95th percentile bounds, meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PercentileTable {
    pub dimensions: BTreeMap<String, PercentileBounds>,
}

impl PercentileTable {
    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s)?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for d in Dimension::ALL {
            if !self.dimensions.contains_key(d.as_str()) {
                errs.push(format!("percentile table is missing `{d}`"));
            }
        }
        for (k, b) in &self.dimensions {
            if !(b.p5.is_finite() && b.p95.is_finite() && b.p5 > 0.0) {
                errs.push(format!("`{k}`: bounds must be positive and finite"));
            } else if b.p5 > b.p95 {
                errs.push(format!("`{k}`: p5 {} exceeds p95 {}", b.p5, b.p95));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    fn bounds(&self, dim: Dimension) -> Result<PercentileBounds> {
        self.dimensions
            .get(dim.as_str())
            .copied()
            .ok_or_else(|| Error::Config(format!("percentile table is missing `{dim}`")))
    }
}

const SAMPLE_RETRIES: usize = 256;

fn draw(rng: &mut ChaCha8Rng, b: PercentileBounds) -> f64 {
    if b.p5 == b.p95 {
        b.p5
    } else {
        rng.gen_range(b.p5..=b.p95)
    }
}

/// Draws a synthetic profile uniformly within the table's percentile bounds.
///
/// Dimensions tied by ordering invariants are redrawn together until the
/// invariants hold, up to a fixed retry budget.
pub fn sample_profile(table: &PercentileTable, seed: u64) -> Result<AnthropometricProfile> {
    table.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profile = AnthropometricProfile {
        body_breadth: 0.0,
        body_depth: 0.0,
        forward_reach: 0.0,
        lateral_reach: 0.0,
        extended_arm_reach: 0.0,
        buttock_toe_length: 0.0,
        stature: 0.0,
        extras: BTreeMap::new(),
    };
    for d in Dimension::ALL {
        profile.set(d, draw(&mut rng, table.bounds(d)?));
    }
    for (k, b) in &table.dimensions {
        if Dimension::parse(k).is_none() {
            profile.extras.insert(k.clone(), draw(&mut rng, *b));
        }
    }

    let reach = (table.bounds(Dimension::ForwardReach)?, table.bounds(Dimension::ExtendedArmReach)?);
    let mut tries = 0;
    while profile.forward_reach > profile.extended_arm_reach {
        if tries == SAMPLE_RETRIES {
            return Err(Error::Sampling(
                "could not satisfy forward_reach <= extended_arm_reach".to_string(),
            ));
        }
        profile.forward_reach = draw(&mut rng, reach.0);
        profile.extended_arm_reach = draw(&mut rng, reach.1);
        tries += 1;
    }
    let body = (table.bounds(Dimension::Stature)?, table.bounds(Dimension::BodyBreadth)?);
    tries = 0;
    while profile.stature <= profile.body_breadth {
        if tries == SAMPLE_RETRIES {
            return Err(Error::Sampling("could not satisfy stature > body_breadth".to_string()));
        }
        profile.stature = draw(&mut rng, body.0);
        profile.body_breadth = draw(&mut rng, body.1);
        tries += 1;
    }
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationale {
    Accessibility,
    Clearance,
}

impl RelationKind {
    /// Distance relations split into minimum-access and envelope-bounded bands.
    pub fn rationale(self) -> Option<Rationale> {
        match self {
            RelationKind::FacingAccess | RelationKind::AdjacentUse => Some(Rationale::Accessibility),
            RelationKind::ClearancePassage | RelationKind::OperationalClearance => {
                Some(Rationale::Clearance)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Po,
    Ho,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Po => "po",
            Mode::Ho => "ho",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Mode::Baseline),
            "po" => Ok(Mode::Po),
            "ho" => Ok(Mode::Ho),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RoleDimensions {
    default: Dimension,
    #[serde(default)]
    seat: Option<Dimension>,
    #[serde(default)]
    openable: Option<Dimension>,
}

impl RoleDimensions {
    fn pick(&self, role: OperationalRole) -> Dimension {
        match role {
            OperationalRole::Seat => self.seat.unwrap_or(self.default),
            OperationalRole::Openable => self.openable.unwrap_or(self.default),
            OperationalRole::Other => self.default,
        }
    }
}

/// Versioned relation-kind to body-dimension table, per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionMap {
    pub version: u32,
    modes: BTreeMap<Mode, BTreeMap<RelationKind, RoleDimensions>>,
}

pub const BUNDLED_DIMENSION_MAP: &str = include_str!("../data/dimension_map.json");

impl DimensionMap {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_DIMENSION_MAP).expect("bundled dimension map is valid")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let map: Self = serde_json::from_str(s)?;
        for mode in [Mode::Po, Mode::Ho] {
            let table = map
                .modes
                .get(&mode)
                .ok_or_else(|| Error::Config(format!("dimension map lacks mode `{mode}`")))?;
            for kind in RelationKind::ALL.into_iter().filter(|k| k.is_distance()) {
                if !table.contains_key(&kind) {
                    return Err(Error::Config(format!(
                        "dimension map mode `{mode}` lacks `{kind}`"
                    )));
                }
            }
        }
        Ok(map)
    }

    /// Governing dimension for a distance relation.
    pub fn select(&self, mode: Mode, kind: RelationKind, role: OperationalRole) -> Result<Dimension> {
        if mode == Mode::Baseline {
            return Err(Error::Config(
                "baseline mode uses generic bands, not body dimensions".to_string(),
            ));
        }
        self.modes
            .get(&mode)
            .and_then(|t| t.get(&kind))
            .map(|r| r.pick(role))
            .ok_or_else(|| Error::Schema(vec![format!("no dimension mapping for `{kind}` in mode `{mode}`")]))
    }

    /// Returns a copy where `mode`'s entries are replaced by those of `from`.
    pub fn with_mode_copied(&self, mode: Mode, from: Mode) -> Self {
        let mut out = self.clone();
        if let Some(t) = self.modes.get(&from) {
            out.modes.insert(mode, t.clone());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandProvenance {
    /// Body dimension the band was derived from, or `generic` for baseline bands.
    pub dimension: String,
    pub dimension_value: f64,
    /// Half-extent used for each participant along the approach axis.
    pub approach_axis: String,
    pub clamped: bool,
}

/// Admissible center-to-center distance range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceBand {
    pub d_min: f64,
    pub d_max: f64,
    pub rationale: Rationale,
    pub tau: f64,
    pub provenance: BandProvenance,
}

impl DistanceBand {
    pub fn width(&self) -> f64 {
        self.d_max - self.d_min
    }

    pub fn contains(&self, d: f64, slack: f64) -> bool {
        d >= self.d_min - slack && d <= self.d_max + slack
    }
}

/// Composes a band from the half-extent sum and the governing envelope.
///
/// Accessibility bands start at the access distance and extend outward by
/// `tau`; clearance bands end at the clearance distance and extend inward.
/// `d_min` never drops below the half-extent sum.
pub fn band_from_envelope(
    rationale: Rationale,
    subject: &ObjectAsset,
    object: &ObjectAsset,
    envelope: f64,
    tau: f64,
    dimension: &str,
) -> DistanceBand {
    let contact = subject.half_depth() + object.half_depth();
    let target = contact + envelope;
    let (raw_min, d_max) = match rationale {
        Rationale::Accessibility => (target, target + tau),
        Rationale::Clearance => (target - tau, target),
    };
    let d_min = raw_min.max(contact);
    DistanceBand {
        d_min,
        d_max,
        rationale,
        tau,
        provenance: BandProvenance {
            dimension: dimension.to_string(),
            dimension_value: envelope,
            approach_axis: "depth".to_string(),
            clamped: d_min != raw_min,
        },
    }
}

pub fn derive_distance_band(
    kind: RelationKind,
    role: OperationalRole,
    subject: &ObjectAsset,
    object: &ObjectAsset,
    profile: &AnthropometricProfile,
    tau: f64,
    map: &DimensionMap,
    mode: Mode,
) -> Result<DistanceBand> {
    let rationale = kind
        .rationale()
        .ok_or_else(|| Error::Schema(vec![format!("`{kind}` is not a distance relation")]))?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Invariant(format!("tau must be >= 0, got {tau}")));
    }
    let dim = map.select(mode, kind, role)?;
    Ok(band_from_envelope(
        rationale,
        subject,
        object,
        profile.get(dim),
        tau,
        dim.as_str(),
    ))
}

/// Axis-aligned world-frame box a person occupies while operating an object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulationBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub depth_dimension: Dimension,
    /// Set when the target had no operational metadata and forward reach was used.
    pub fallback: bool,
}

impl ManipulationBox {
    pub fn extent(&self) -> [f64; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn volume(&self) -> f64 {
        self.extent().iter().product()
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// Builds the manipulation box in front of `target`.
///
/// Depth is the operational reach for the target's role, width spans the
/// target plus a lateral-reach margin on each side, height is stature.
pub fn manipulation_box(
    target: &ObjectAsset,
    pose: &Pose,
    role: OperationalRole,
    profile: &AnthropometricProfile,
) -> Result<ManipulationBox> {
    profile.validate()?;
    let (depth_dimension, fallback) = match role {
        OperationalRole::Openable => (Dimension::ExtendedArmReach, false),
        OperationalRole::Seat => (Dimension::ButtockToeLength, false),
        OperationalRole::Other => (Dimension::ForwardReach, true),
    };
    let depth = profile.get(depth_dimension);
    let half_span = target.half_width() + profile.lateral_reach;
    let front = front_direction(pose);
    let right = Vec2::new(front.y, -front.x);
    let face = pose.position() + front.scale(target.half_depth());
    let corners = [
        face - right.scale(half_span),
        face + right.scale(half_span),
        face + right.scale(half_span) + front.scale(depth),
        face - right.scale(half_span) + front.scale(depth),
    ];
    let mut min = [f64::INFINITY, f64::INFINITY, pose.z_base];
    let mut max = [f64::NEG_INFINITY, f64::NEG_INFINITY, pose.z_base + profile.stature];
    for c in corners {
        min[0] = min[0].min(c.x);
        min[1] = min[1].min(c.y);
        max[0] = max[0].max(c.x);
        max[1] = max[1].max(c.y);
    }
    Ok(ManipulationBox {
        min,
        max,
        depth_dimension,
        fallback,
    })
}
