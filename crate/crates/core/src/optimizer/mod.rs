//! Sequential per-group descent with multi-seed candidate selection.

pub mod layout;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{IterationsScope, LayoutConfig, OptimizerConfig};
use crate::constraints::ConstraintProgram;
use crate::error::{Error, Result};
use crate::geometry::normalize_yaw;
use crate::metrics::collision_free_score;
use crate::par;
use crate::relations::ObjectAsset;

pub use layout::{CandidateSummary, Diagnostics, PlacedAsset, SceneLayout};

/// Adaptive-moment descent with separate step sizes for position and yaw.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    position_step: f64,
    yaw_step: f64,
}

impl Adam {
    pub fn new(dim: usize, cfg: &OptimizerConfig) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
            position_step: cfg.position_step,
            yaw_step: cfg.yaw_step,
        }
    }

    /// Forgets the moment estimates, e.g. after the objective's weights change.
    pub fn reset(&mut self) {
        self.m.fill(0.0);
        self.v.fill(0.0);
        self.t = 0;
    }

    /// One update of `x` along `-grad`, skipping the pose slots in `frozen`.
    pub fn step(&mut self, x: &mut [f64], grad: &[f64], frozen: &BTreeSet<usize>) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for k in 0..x.len() {
            if frozen.contains(&(k / 3)) {
                continue;
            }
            let g = grad[k];
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
            let lr = if k % 3 == 2 { self.yaw_step } else { self.position_step };
            x[k] -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + self.epsilon);
        }
    }
}

/// Random start: centers uniform in the room inset by each asset's bounding
/// radius, yaw a random quarter turn plus up to 0.1 rad of noise.
pub fn initialize(program: &ConstraintProgram, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let room = program.room;
    let mut out = Vec::with_capacity(program.dim());
    for a in &program.assets {
        let r = a.half_width.hypot(a.half_depth);
        let (x_lo, x_hi) = (r, room.width - r);
        let (y_lo, y_hi) = (r, room.depth - r);
        if x_lo > x_hi || y_lo > y_hi {
            return Err(Error::Infeasible(format!(
                "asset `{}` (bounding radius {r:.3} m) does not fit in a {} x {} m room",
                a.id, room.width, room.depth
            )));
        }
        let x = if x_lo == x_hi { x_lo } else { rng.gen_range(x_lo..=x_hi) };
        let y = if y_lo == y_hi { y_lo } else { rng.gen_range(y_lo..=y_hi) };
        let quarter = rng.gen_range(0..4u32);
        let noise = rng.gen_range(-0.1..=0.1);
        out.extend([x, y, quarter as f64 * FRAC_PI_2 + noise]);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupOutcome {
    pub poses: Vec<f64>,
    pub initial_total: f64,
    pub best_total: f64,
}

fn base_total(program: &ConstraintProgram, values: &[f64]) -> f64 {
    program.terms.iter().zip(values).map(|(t, v)| t.weight * v).sum()
}

fn check_gradient(program: &ConstraintProgram, poses: &[f64], grad: &[f64]) -> Result<()> {
    if grad.iter().all(|g| g.is_finite()) {
        return Ok(());
    }
    let culprit = program
        .terms
        .iter()
        .find(|t| {
            let l = program.term_local(t, poses);
            l.grad.iter().flatten().any(|g| !g.is_finite())
        })
        .map_or_else(|| "unknown term".to_string(), |t| format!("{} term {}", t.params.name(), t.origin));
    Err(Error::Evaluation(format!("non-finite gradient from {culprit}")))
}

/// Runs `iterations` descent steps on a program slice and returns the best
/// iterate seen under the slice's base weights. Collision weights are
/// re-derived from the current overlap at every step; when they change the
/// moment estimates restart, since gradients from the old weighting would
/// otherwise throttle the step size for hundreds of iterations.
pub fn optimize_group(
    program: &ConstraintProgram,
    poses: &[f64],
    config: &LayoutConfig,
    iterations: usize,
) -> Result<GroupOutcome> {
    let mut x = poses.to_vec();
    let mut adam = Adam::new(x.len(), &config.optimizer);
    let mut best = x.clone();
    let mut initial_total = f64::NAN;
    let mut best_total = f64::INFINITY;
    let mut last_weights: Vec<f64> = Vec::new();
    for it in 0..=iterations {
        let weights = program.adaptive_weights(&x, &config.weights);
        if weights != last_weights {
            adam.reset();
            last_weights.clone_from(&weights);
        }
        let eval = program.evaluate_with(&x, &weights)?;
        let total = base_total(program, &eval.values);
        if it == 0 {
            initial_total = total;
        }
        if total < best_total {
            best_total = total;
            best.copy_from_slice(&x);
        }
        if it == iterations || total == 0.0 {
            break;
        }
        check_gradient(program, &x, &eval.gradient)?;
        adam.step(&mut x, &eval.gradient, &program.frozen);
    }
    Ok(GroupOutcome {
        poses: best,
        initial_total,
        best_total,
    })
}

/// Shifts asset `i` so its corner bounds lie inside the room, if they fit.
pub fn settle_into_room(program: &ConstraintProgram, poses: &mut [f64], i: usize) {
    let (lo, hi) = program.footprint(poses, i).aabb();
    let room = program.room;
    let shift = |lo: f64, hi: f64, extent: f64| {
        if hi - lo > extent {
            0.0
        } else if lo < 0.0 {
            -lo
        } else if hi > extent {
            extent - hi
        } else {
            0.0
        }
    };
    poses[3 * i] += shift(lo.x, hi.x, room.width);
    poses[3 * i + 1] += shift(lo.y, hi.y, room.depth);
}

/// One optimized candidate for a given seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub seed: u64,
    pub poses: Vec<f64>,
    pub total: f64,
    pub values: Vec<f64>,
    pub group_totals: Vec<(String, f64)>,
    pub collision_free: f64,
}

fn iterations_per_group(program: &ConstraintProgram, cfg: &OptimizerConfig) -> usize {
    match cfg.iterations_scope {
        IterationsScope::PerGroup => cfg.iterations,
        IterationsScope::PerScene => (cfg.iterations / program.groups.len().max(1)).max(1),
    }
}

/// Places groups one after another; each finished group is frozen for the rest.
pub fn optimize_scene(program: &ConstraintProgram, config: &LayoutConfig, seed: u64) -> Result<Candidate> {
    let mut poses = initialize(program, seed)?;
    let working = ConstraintProgram {
        margin: config.optimizer.contact_margin,
        ..program.clone()
    };
    let iterations = iterations_per_group(program, &config.optimizer);
    let mut placed = BTreeSet::new();
    let mut group_totals = Vec::with_capacity(program.groups.len());
    for g in &program.groups {
        let active: BTreeSet<usize> = g.members.iter().copied().collect();
        let mut slice = working.restrict(&active, &placed);
        slice.frozen.extend(program.frozen.iter().copied());
        let out = optimize_group(&slice, &poses, config, iterations).map_err(|e| Error::Group {
            group_id: g.id.clone(),
            source: Box::new(e),
        })?;
        poses = out.poses;
        if config.optimizer.settle_into_room {
            for &i in &active {
                settle_into_room(program, &mut poses, i);
            }
        }
        group_totals.push((g.id.clone(), out.best_total));
        placed.extend(active);
    }
    // Canonical yaw, so the layout file reproduces these values exactly.
    for yaw in poses.iter_mut().skip(2).step_by(3) {
        *yaw = normalize_yaw(*yaw);
    }
    let eval = program.evaluate(&poses)?;
    let footprints: Vec<_> = (0..program.assets.len()).map(|i| program.footprint(&poses, i)).collect();
    Ok(Candidate {
        seed,
        total: eval.total,
        values: eval.values,
        poses,
        group_totals,
        collision_free: collision_free_score(&footprints),
    })
}

/// Highest collision-free score first, then lower total penalty, then lower seed.
pub fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.collision_free
        .total_cmp(&a.collision_free)
        .then(a.total.total_cmp(&b.total))
        .then(a.seed.cmp(&b.seed))
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub best: Candidate,
    pub summaries: Vec<CandidateSummary>,
}

/// Optimizes seeds `seed .. seed + candidate_count` and keeps the best.
/// Candidates run in parallel; the result does not depend on thread count.
pub fn select_candidate(program: &ConstraintProgram, config: &LayoutConfig) -> Result<Selection> {
    let cfg = &config.optimizer;
    cfg.validate()?;
    let runs = par::map_range(cfg.candidate_count, |k| {
        let seed = cfg.seed.wrapping_add(k as u64);
        (seed, optimize_scene(program, config, seed))
    });
    let mut summaries = Vec::with_capacity(runs.len());
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (seed, r) in runs {
        match r {
            Ok(c) => {
                summaries.push(CandidateSummary {
                    seed,
                    collision_free: Some(c.collision_free),
                    total_penalty: Some(c.total),
                    error: None,
                });
                ok.push(c);
            }
            Err(e) => {
                errors.push(format!("seed {seed}: {e}"));
                summaries.push(CandidateSummary {
                    seed,
                    collision_free: None,
                    total_penalty: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let best = ok
        .into_iter()
        .min_by(candidate_order)
        .ok_or(Error::AllCandidatesFailed(errors))?;
    Ok(Selection { best, summaries })
}

/// Packs a candidate into a layout file, assets in program order.
pub fn build_layout(
    program: &ConstraintProgram,
    assets: &[ObjectAsset],
    selection: &Selection,
    config: &LayoutConfig,
    conflicts: Vec<String>,
) -> SceneLayout {
    let poses = program.poses_from_vec(&selection.best.poses);
    let placed = program
        .assets
        .iter()
        .zip(&poses)
        .map(|(slot, pose)| {
            let category = assets
                .iter()
                .find(|a| a.id == slot.id)
                .map_or_else(String::new, |a| a.category.clone());
            PlacedAsset {
                id: slot.id.clone(),
                category,
                width: 2.0 * slot.half_width,
                depth: 2.0 * slot.half_depth,
                height: slot.height,
                x: pose.x,
                y: pose.y,
                z_base: pose.z_base,
                yaw: pose.yaw,
            }
        })
        .collect();
    let best = &selection.best;
    let mut layout = SceneLayout::new(program.room, placed);
    layout.diagnostics = Some(Diagnostics {
        mode: program.mode,
        seed: best.seed,
        config_hash: config.hash(),
        total_penalty: best.total,
        term_violations: best.values.clone(),
        group_totals: best.group_totals.clone(),
        candidates: selection.summaries.clone(),
        warnings: program.warnings.clone(),
        conflicts,
    });
    layout
}
