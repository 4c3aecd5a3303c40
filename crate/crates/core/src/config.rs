//! Tunable settings. Every value here is a plain default that can be
//! overridden from a JSON config file; none of them is load-bearing for
//! correctness.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::relations::RelationKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationsScope {
    /// Each group gets the full iteration budget.
    PerGroup,
    /// The budget is split evenly across groups.
    PerScene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub iterations: usize,
    pub iterations_scope: IterationsScope,
    /// Adaptive-moment step for x and y, meters.
    pub position_step: f64,
    /// Adaptive-moment step for yaw, radians.
    pub yaw_step: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub candidate_count: usize,
    /// After each group, translate active assets that protrude from the room
    /// back inside (when their corner bounds fit).
    pub settle_into_room: bool,
    /// Meters by which the optimizer tightens collision, band and room
    /// limits so that residuals land on the feasible side.
    pub contact_margin: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            iterations: 400,
            iterations_scope: IterationsScope::PerGroup,
            position_step: 0.01,
            yaw_step: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            candidate_count: 5,
            settle_into_room: false,
            contact_margin: 0.001,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.iterations == 0 {
            errs.push("iterations must be > 0");
        }
        if !(self.position_step > 0.0 && self.yaw_step > 0.0) {
            errs.push("step sizes must be > 0");
        }
        if self.candidate_count == 0 {
            errs.push("candidate_count must be >= 1");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            errs.push("moment decays must lie in [0, 1)");
        }
        if !(self.contact_margin >= 0.0) {
            errs.push("contact_margin must be >= 0");
        }
        if !(self.epsilon > 0.0) {
            errs.push("epsilon must be > 0");
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub base: f64,
    /// Collision weight while a pair overlaps by more than `overlap_threshold`.
    pub collision_boost: f64,
    pub overlap_threshold: f64,
    /// Weight of an extra bounding-circle clearance penalty inside each
    /// collision term. 0 keeps collision purely box-based.
    pub circle_separation: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            base: 1.0,
            collision_boost: 10.0,
            overlap_threshold: 0.5,
            circle_separation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauDefaults {
    pub accessibility: f64,
    pub clearance: f64,
}

impl Default for TauDefaults {
    fn default() -> Self {
        Self {
            accessibility: 0.10,
            clearance: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Closest-approach distance under which an obstacle enters a detour signature, meters.
    pub detour_proximity: f64,
    /// Inflate obstacles by half the participant's body breadth.
    pub inflate_by_half_breadth: bool,
    pub heatmap_resolution: usize,
    /// Gaussian smoothing sigma, meters.
    pub heatmap_sigma: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            detour_proximity: 0.5,
            inflate_by_half_breadth: true,
            heatmap_resolution: 1024,
            heatmap_sigma: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub optimizer: OptimizerConfig,
    pub weights: WeightConfig,
    pub tau: TauDefaults,
    /// Generic envelope per distance relation for the baseline mode, meters.
    pub baseline_envelopes: BTreeMap<RelationKind, f64>,
    /// Optional precedence for resolving relation conflicts. Empty means report only.
    pub conflict_priority: Vec<RelationKind>,
    pub metrics: MetricsConfig,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::default(),
            weights: WeightConfig::default(),
            tau: TauDefaults::default(),
            baseline_envelopes: BTreeMap::from([
                (RelationKind::FacingAccess, 0.45),
                (RelationKind::AdjacentUse, 0.10),
                (RelationKind::ClearancePassage, 0.60),
                (RelationKind::OperationalClearance, 0.60),
            ]),
            conflict_priority: Vec::new(),
            metrics: MetricsConfig::default(),
        }
    }
}

impl LayoutConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        for kind in RelationKind::ALL.into_iter().filter(|k| k.is_distance()) {
            match self.baseline_envelopes.get(&kind) {
                Some(v) if *v >= 0.0 => {}
                _ => {
                    return Err(Error::Config(format!(
                        "baseline_envelopes needs a non-negative value for `{kind}`"
                    )))
                }
            }
        }
        if !(self.weights.base >= 0.0 && self.weights.collision_boost >= 0.0 && self.weights.circle_separation >= 0.0) {
            return Err(Error::Config("weights must be >= 0".into()));
        }
        if !(self.tau.accessibility >= 0.0 && self.tau.clearance >= 0.0) {
            return Err(Error::Config("tau defaults must be >= 0".into()));
        }
        if self.metrics.heatmap_resolution == 0 || !(self.metrics.heatmap_sigma >= 0.0) {
            return Err(Error::Config("heatmap resolution must be > 0 and sigma >= 0".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
