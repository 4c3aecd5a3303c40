//! Scene files and the manifest-driven generate pipeline.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anthropometry::{sample_profile, AnthropometricProfile, DimensionMap, Mode, PercentileTable};
use crate::config::LayoutConfig;
use crate::constraints::dump::{dump, ProgramDump};
use crate::constraints::{compile, ConstraintProgram};
use crate::error::{Error, Result};
use crate::geometry::Room;
use crate::manifest::{BackendSource, InputRef, ProfileSource, RunManifest, RunStamp};
use crate::optimizer::{build_layout, select_candidate, SceneLayout};
use crate::relations::{
    infer_relations, InferenceBackend, Lexicon, ObjectAsset, RemoteBackend, RuleBackend, SceneInference,
};

pub const TOOL: &str = env!("CARGO_PKG_NAME");

/// Input scene: a room, its assets, free-text criteria and optionally
/// pre-computed relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub room: Room,
    #[serde(default)]
    pub criteria: String,
    pub assets: Vec<ObjectAsset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relations: Option<SceneInference>,
}

impl SceneFile {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Serves relations stored in the scene file.
struct StoredRelations(SceneInference);

impl InferenceBackend for StoredRelations {
    fn infer(&self, _assets: &[ObjectAsset], _room: &Room, _criteria: &str) -> Result<SceneInference> {
        Ok(self.0.clone())
    }
}

/// What the user asked for on the command line, before files are hashed.
#[derive(Debug, Clone)]
pub struct GenerateRequest {
    pub scene: PathBuf,
    pub mode: Mode,
    pub profile: Option<PathBuf>,
    pub percentiles: Option<PathBuf>,
    pub backend: Option<BackendChoice>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub candidates: Option<usize>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendChoice {
    Scene,
    Rules,
    Remote,
}

fn load_config(file: Option<&InputRef>, text: Option<String>) -> Result<LayoutConfig> {
    match (file, text) {
        (Some(_), Some(t)) => LayoutConfig::from_json(&t),
        (Some(f), None) => LayoutConfig::from_json(&f.reread()?),
        (None, _) => Ok(LayoutConfig::default()),
    }
}

fn apply_overrides(config: &mut LayoutConfig, m: &RunManifest) {
    config.optimizer.seed = m.seed;
    config.optimizer.candidate_count = m.candidates;
    config.optimizer.iterations = m.iterations;
}

/// Hashes every input and fixes every setting into a manifest.
pub fn build_manifest(req: &GenerateRequest) -> Result<RunManifest> {
    let (scene, scene_text) = InputRef::read(&req.scene)?;
    let parsed = SceneFile::from_json(&scene_text)?;
    let (config_ref, config_text) = match &req.config {
        Some(p) => {
            let (r, t) = InputRef::read(p)?;
            (Some(r), Some(t))
        }
        None => (None, None),
    };
    let mut config = load_config(config_ref.as_ref(), config_text)?;
    let seed = req.seed.unwrap_or(config.optimizer.seed);
    let candidates = req.candidates.unwrap_or(config.optimizer.candidate_count);
    let iterations = req.iterations.unwrap_or(config.optimizer.iterations);
    let profile = match (&req.profile, &req.percentiles) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("give either --profile or --percentiles, not both".into()));
        }
        (Some(p), None) => ProfileSource::File {
            file: InputRef::read(p)?.0,
        },
        (None, Some(t)) => ProfileSource::Sampled {
            table: InputRef::read(t)?.0,
            seed,
        },
        (None, None) => ProfileSource::None,
    };
    let choice = req.backend.unwrap_or(if parsed.relations.is_some() {
        BackendChoice::Scene
    } else {
        BackendChoice::Rules
    });
    let backend = match choice {
        BackendChoice::Scene if parsed.relations.is_none() => {
            return Err(Error::Config("--backend scene needs a `relations` block in the scene".into()));
        }
        BackendChoice::Scene => BackendSource::Scene,
        BackendChoice::Rules => BackendSource::Rules,
        BackendChoice::Remote => BackendSource::Remote {
            endpoint: RemoteBackend::from_env()?.endpoint,
        },
    };
    let mut manifest = RunManifest {
        tool: TOOL.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scene,
        mode: req.mode,
        profile,
        backend,
        seed,
        candidates,
        iterations,
        config: config_ref,
        config_hash: String::new(),
    };
    apply_overrides(&mut config, &manifest);
    config.validate()?;
    manifest.config_hash = config.hash();
    Ok(manifest)
}

/// Everything derived from a manifest up to the compiled program.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scene: SceneFile,
    pub config: LayoutConfig,
    pub inference: SceneInference,
    pub profile: Option<AnthropometricProfile>,
    pub program: ConstraintProgram,
}

fn load_profile(source: &ProfileSource) -> Result<Option<AnthropometricProfile>> {
    match source {
        ProfileSource::None => Ok(None),
        ProfileSource::File { file } => AnthropometricProfile::from_json(&file.reread()?).map(Some),
        ProfileSource::Sampled { table, seed } => {
            let t = PercentileTable::from_json(&table.reread()?)?;
            sample_profile(&t, *seed).map(Some)
        }
    }
}

/// Re-reads the manifest's inputs (failing if any changed) and compiles the program.
pub fn prepare(manifest: &RunManifest) -> Result<Prepared> {
    let scene = SceneFile::from_json(&manifest.scene.reread()?)?;
    let mut config = load_config(manifest.config.as_ref(), None)?;
    apply_overrides(&mut config, manifest);
    config.validate()?;
    if config.hash() != manifest.config_hash {
        return Err(Error::Config("effective configuration does not match the manifest's config_hash".into()));
    }
    let profile = load_profile(&manifest.profile)?;
    let backend: Box<dyn InferenceBackend> = match &manifest.backend {
        BackendSource::Scene => Box::new(StoredRelations(scene.relations.clone().ok_or_else(|| {
            Error::Config("manifest names scene relations but the scene has none".into())
        })?)),
        BackendSource::Rules => Box::new(RuleBackend::new(Lexicon::bundled())),
        BackendSource::Remote { endpoint } => {
            let mut b = RemoteBackend::from_env().unwrap_or_else(|_| RemoteBackend::new(endpoint.clone()));
            b.endpoint = endpoint.clone();
            Box::new(b)
        }
    };
    let inference = infer_relations(&scene.assets, &scene.room, &scene.criteria, backend.as_ref())?;
    let program = compile(
        &scene.assets,
        &inference,
        &scene.room,
        manifest.mode,
        profile.as_ref(),
        &DimensionMap::bundled(),
        &config,
    )?;
    Ok(Prepared {
        scene,
        config,
        inference,
        profile,
        program,
    })
}

/// Layout and program dump produced by one run, both stamped with the manifest.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub layout: SceneLayout,
    pub program: ProgramDump,
}

pub fn run_manifest(manifest: &RunManifest) -> Result<Outputs> {
    let p = prepare(manifest)?;
    let selection = select_candidate(&p.program, &p.config)?;
    let mut layout = build_layout(
        &p.program,
        &p.scene.assets,
        &selection,
        &p.config,
        p.inference.conflicts.clone(),
    );
    let stamp = RunStamp::new(manifest.clone());
    layout.run = Some(stamp.clone());
    let mut program = dump(&p.program, &selection.best.poses)?;
    program.run = Some(stamp);
    Ok(Outputs { layout, program })
}

/// Pulls the verified manifest out of a layout or program dump.
pub fn embedded_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let run = v
        .get("run")
        .cloned()
        .ok_or_else(|| Error::Format(format!("{} carries no run manifest", path.display())))?;
    let stamp: RunStamp = serde_json::from_value(run)?;
    stamp.verify()?;
    Ok(stamp.manifest)
}

/// Default dump path next to a layout: `room.json` -> `room.program.json`.
pub fn default_dump_path(layout: &Path) -> PathBuf {
    let stem = layout.file_stem().map_or_else(|| "layout".into(), |s| s.to_string_lossy().into_owned());
    layout.with_file_name(format!("{stem}.program.json"))
}
