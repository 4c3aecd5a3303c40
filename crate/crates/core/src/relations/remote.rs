//! HTTP client for a remote relation-inference service.
//!
//! Wire protocol: one `POST` per request with a JSON body
//! `{stage, focus, assets, room, image_refs, criteria, instructions}`.
//! The `describe` stage is sent once per asset and answered with a
//! [`BackendPayload`]; the `group` stage is sent once per scene and answered
//! with `{"groups": [...]}`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use serde::Serialize;

use super::payload::{validate_backend_payload, validate_grouping_payload, BackendPayload};
use super::{classify_relations, InferenceBackend, ObjectAsset, SceneInference};
use crate::error::{Error, Result};
use crate::geometry::Room;

pub const ENV_ENDPOINT: &str = "ANTHRO_BACKEND_URL";
pub const ENV_TIMEOUT_MS: &str = "ANTHRO_BACKEND_TIMEOUT_MS";
pub const ENV_RETRIES: &str = "ANTHRO_BACKEND_RETRIES";

const DESCRIBE_TEMPLATE: &str = include_str!("../../data/prompts/describe.txt");
const GROUP_TEMPLATE: &str = include_str!("../../data/prompts/group.txt");

#[derive(Debug, Serialize)]
pub struct BackendRequest<'a> {
    pub stage: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub focus: Option<&'a str>,
    pub assets: &'a [ObjectAsset],
    pub room: &'a Room,
    pub image_refs: Vec<PathBuf>,
    pub criteria: &'a str,
    pub instructions: String,
}

#[derive(Debug, Clone)]
pub struct RemoteBackend {
    pub endpoint: String,
    pub timeout: Duration,
    pub retries: u32,
    pub describe_template: String,
    pub group_template: String,
}

impl RemoteBackend {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(30),
            retries: 2,
            describe_template: DESCRIBE_TEMPLATE.to_string(),
            group_template: GROUP_TEMPLATE.to_string(),
        }
    }

    /// Reads endpoint, timeout and retry count from the environment.
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .map_err(|_| Error::Config(format!("{ENV_ENDPOINT} is not set")))?;
        let mut b = Self::new(endpoint);
        if let Ok(ms) = std::env::var(ENV_TIMEOUT_MS) {
            let ms: u64 = ms
                .parse()
                .map_err(|_| Error::Config(format!("{ENV_TIMEOUT_MS} must be an integer")))?;
            b.timeout = Duration::from_millis(ms);
        }
        if let Ok(r) = std::env::var(ENV_RETRIES) {
            b.retries = r
                .parse()
                .map_err(|_| Error::Config(format!("{ENV_RETRIES} must be an integer")))?;
        }
        Ok(b)
    }

    fn render(template: &str, focus: &str, room: &Room, criteria: &str) -> String {
        template
            .replace("{focus}", focus)
            .replace("{room}", &format!("{} x {} x {} m", room.width, room.depth, room.height))
            .replace("{criteria}", criteria)
    }

    fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(true)
            .build()
            .into()
    }

    /// Sends one request, retrying transport failures and 5xx responses.
    fn post(&self, agent: &ureq::Agent, req: &BackendRequest<'_>, asset_id: &str) -> Result<String> {
        let mut last = String::new();
        for _ in 0..=self.retries {
            match agent.post(&self.endpoint).send_json(req) {
                Ok(mut resp) => {
                    return resp.body_mut().read_to_string().map_err(|e| Error::Inference {
                        asset_id: asset_id.to_string(),
                        message: format!("reading response: {e}"),
                        retryable: true,
                    })
                }
                Err(ureq::Error::StatusCode(code)) if code < 500 => {
                    return Err(Error::Inference {
                        asset_id: asset_id.to_string(),
                        message: format!("backend rejected request with status {code}"),
                        retryable: false,
                    })
                }
                Err(e) => {
                    log::warn!("backend request for `{asset_id}` failed: {e}");
                    last = e.to_string();
                }
            }
        }
        Err(Error::Inference {
            asset_id: asset_id.to_string(),
            message: format!("gave up after {} attempts: {last}", self.retries + 1),
            retryable: true,
        })
    }
}

impl InferenceBackend for RemoteBackend {
    fn infer(&self, assets: &[ObjectAsset], room: &Room, criteria: &str) -> Result<SceneInference> {
        let agent = self.agent();
        let mut descriptions = BTreeMap::new();
        let mut patterns = BTreeMap::new();
        let mut relations = Vec::new();
        for a in assets {
            let req = BackendRequest {
                stage: "describe",
                focus: Some(&a.id),
                assets,
                room,
                image_refs: a.image_refs.clone(),
                criteria,
                instructions: Self::render(&self.describe_template, &a.id, room, criteria),
            };
            let raw = self.post(&agent, &req, &a.id)?;
            let BackendPayload {
                id,
                description,
                interaction,
                relations: rels,
            } = validate_backend_payload(&raw).map_err(|e| match e {
                Error::Schema(errs) => Error::Schema(errs.into_iter().map(|m| format!("asset `{}`: {m}", a.id)).collect()),
                other => other,
            })?;
            if id != a.id {
                return Err(Error::Schema(vec![format!(
                    "asset `{}`: payload answers for `{id}`",
                    a.id
                )]));
            }
            descriptions.insert(id.clone(), description);
            patterns.insert(id, interaction);
            relations.extend(rels);
        }

        let req = BackendRequest {
            stage: "group",
            focus: None,
            assets,
            room,
            image_refs: Vec::new(),
            criteria,
            instructions: Self::render(&self.group_template, "", room, criteria),
        };
        let scene_tag = assets.first().map_or("", |a| a.id.as_str());
        let raw = self.post(&agent, &req, scene_tag)?;
        let mut groups = validate_grouping_payload(&raw)?.groups;
        let inter_relations = classify_relations(&mut groups, relations);
        Ok(SceneInference {
            groups,
            inter_relations,
            descriptions,
            patterns,
            conflicts: Vec::new(),
        })
    }
}
