//! Structured payloads exchanged with a remote inference backend.
//!
//! Parsing is all-or-nothing: every schema violation in a payload is
//! collected and reported together, and nothing is accepted partially.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{
    ActionScore, FunctionalDescription, InteractionPattern, Relation, RelationKind, RelationTarget,
    SemanticGroup,
};
use crate::error::{Error, Result};
use crate::geometry::Wall;

/// Per-object inference result: function, interaction pattern, and the
/// relations in which the object is the subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendPayload {
    pub id: String,
    pub description: FunctionalDescription,
    pub interaction: InteractionPattern,
    pub relations: Vec<Relation>,
}

struct Collector {
    errs: Vec<String>,
}

impl Collector {
    fn push(&mut self, e: impl Into<String>) {
        self.errs.push(e.into());
    }

    fn obj<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(o) => Some(o),
            None => {
                self.push(format!("{path}: expected an object"));
                None
            }
        }
    }

    fn string(&mut self, o: &Map<String, Value>, key: &str, path: &str) -> Option<String> {
        match o.get(key) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.push(format!("{path}.{key}: expected a string"));
                None
            }
            None => {
                self.push(format!("{path}.{key}: missing"));
                None
            }
        }
    }

    fn boolean(&mut self, o: &Map<String, Value>, key: &str, path: &str) -> bool {
        match o.get(key) {
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.push(format!("{path}.{key}: expected a boolean"));
                false
            }
            None => {
                self.push(format!("{path}.{key}: missing"));
                false
            }
        }
    }

    fn opt_number(&mut self, o: &Map<String, Value>, key: &str, path: &str) -> Option<f64> {
        match o.get(key) {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => n.as_f64(),
            Some(_) => {
                self.push(format!("{path}.{key}: expected a number"));
                None
            }
        }
    }

    fn array<'a>(&mut self, o: &'a Map<String, Value>, key: &str, path: &str) -> &'a [Value] {
        match o.get(key) {
            Some(Value::Array(a)) => a,
            Some(_) => {
                self.push(format!("{path}.{key}: expected an array"));
                &[]
            }
            None => {
                self.push(format!("{path}.{key}: missing"));
                &[]
            }
        }
    }
}

fn parse_description(c: &mut Collector, v: &Value) -> FunctionalDescription {
    let path = "description";
    let Some(o) = c.obj(v, path) else {
        return FunctionalDescription::default();
    };
    FunctionalDescription {
        summary: c.string(o, "summary", path).unwrap_or_default(),
        has_openable_part: c.boolean(o, "has_openable_part", path),
        is_seat: c.boolean(o, "is_seat", path),
        requires_frontal_access: c.boolean(o, "requires_frontal_access", path),
        viewing_target: c.boolean(o, "viewing_target", path),
    }
}

fn parse_interaction(c: &mut Collector, v: &Value) -> InteractionPattern {
    let path = "interaction";
    let Some(o) = c.obj(v, path) else {
        return InteractionPattern::default();
    };
    let mut top_actions = Vec::new();
    for (i, a) in c.array(o, "top_actions", path).iter().enumerate() {
        let p = format!("{path}.top_actions[{i}]");
        let Some(ao) = c.obj(a, &p) else { continue };
        let label = c.string(ao, "label", &p);
        let confidence = match ao.get("confidence") {
            Some(Value::Number(n)) => n.as_f64(),
            Some(_) => {
                c.push(format!("{p}.confidence: expected a number"));
                None
            }
            None => {
                c.push(format!("{p}.confidence: missing confidence"));
                None
            }
        };
        if let (Some(label), Some(confidence)) = (label, confidence) {
            top_actions.push(ActionScore { label, confidence });
        }
    }
    let pattern = InteractionPattern { top_actions };
    for e in pattern.violations() {
        c.push(e);
    }
    pattern
}

fn parse_relation(c: &mut Collector, v: &Value, path: &str) -> Option<Relation> {
    let o = c.obj(v, path)?;
    let before = c.errs.len();
    let kind = match o.get("kind") {
        Some(Value::String(s)) => {
            let k = RelationKind::parse(s);
            if k.is_none() {
                c.push(format!("{path}.kind: unknown relation kind `{s}`"));
            }
            k
        }
        _ => {
            c.push(format!("{path}.kind: missing or not a string"));
            None
        }
    };
    let subject = c.string(o, "subject", path);
    let target = match (o.get("object"), o.get("wall")) {
        (Some(Value::String(s)), None) => Some(RelationTarget::Object(s.clone())),
        (None, Some(w)) => match serde_json::from_value::<Wall>(w.clone()) {
            Ok(w) => Some(RelationTarget::Wall(w)),
            Err(_) => {
                c.push(format!("{path}.wall: expected one of south, east, north, west"));
                None
            }
        },
        (Some(_), Some(_)) => {
            c.push(format!("{path}: give either `object` or `wall`, not both"));
            None
        }
        (Some(_), None) => {
            c.push(format!("{path}.object: expected a string"));
            None
        }
        (None, None) => {
            c.push(format!("{path}: missing `object` or `wall`"));
            None
        }
    };
    let theta = c.opt_number(o, "theta", path);
    let height = c.opt_number(o, "height", path);
    let tau = c.opt_number(o, "tau", path);
    let rel = Relation {
        kind: kind?,
        subject: subject?,
        target: target?,
        theta,
        height,
        tau,
    };
    for e in rel.violations() {
        c.push(format!("{path}: {e}"));
    }
    (c.errs.len() == before).then_some(rel)
}

/// Parses one object-level backend payload.
pub fn validate_backend_payload(raw: &str) -> Result<BackendPayload> {
    let v: Value = serde_json::from_str(raw).map_err(|e| Error::Schema(vec![format!("not valid JSON: {e}")]))?;
    let mut c = Collector { errs: Vec::new() };
    let Some(o) = c.obj(&v, "payload") else {
        return Err(Error::Schema(c.errs));
    };
    let id = c.string(o, "id", "payload").unwrap_or_default();
    let description = match o.get("description") {
        Some(d) => parse_description(&mut c, d),
        None => {
            c.push("payload.description: missing");
            FunctionalDescription::default()
        }
    };
    let interaction = match o.get("interaction") {
        Some(i) => parse_interaction(&mut c, i),
        None => {
            c.push("payload.interaction: missing");
            InteractionPattern::default()
        }
    };
    let mut relations = Vec::new();
    for (i, r) in c.array(o, "relations", "payload").iter().enumerate() {
        if let Some(rel) = parse_relation(&mut c, r, &format!("relations[{i}]")) {
            relations.push(rel);
        }
    }
    if c.errs.is_empty() {
        Ok(BackendPayload {
            id,
            description,
            interaction,
            relations,
        })
    } else {
        Err(Error::Schema(c.errs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingPayload {
    pub groups: Vec<SemanticGroup>,
}

/// Parses a grouping response: `{"groups": [{"group_id", "members"}]}`.
pub fn validate_grouping_payload(raw: &str) -> Result<GroupingPayload> {
    let v: Value = serde_json::from_str(raw).map_err(|e| Error::Schema(vec![format!("not valid JSON: {e}")]))?;
    let mut c = Collector { errs: Vec::new() };
    let Some(o) = c.obj(&v, "payload") else {
        return Err(Error::Schema(c.errs));
    };
    let mut groups = Vec::new();
    for (i, g) in c.array(o, "groups", "payload").iter().enumerate() {
        let path = format!("groups[{i}]");
        let Some(go) = c.obj(g, &path) else { continue };
        let id = c.string(go, "group_id", &path);
        let mut members = Vec::new();
        for (j, m) in c.array(go, "members", &path).iter().enumerate() {
            match m.as_str() {
                Some(s) => members.push(s.to_string()),
                None => c.push(format!("{path}.members[{j}]: expected a string")),
            }
        }
        if members.is_empty() {
            c.push(format!("{path}.members: must be non-empty"));
        }
        if let Some(id) = id {
            groups.push(SemanticGroup::new(&id, members));
        }
    }
    if c.errs.is_empty() {
        Ok(GroupingPayload { groups })
    } else {
        Err(Error::Schema(c.errs))
    }
}
