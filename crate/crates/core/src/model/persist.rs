//! Canonical `.mcj` documents.
//!
//! A document is a UTF-8 JSON object tagged by `kind`:
//!
//! ```json
//! {"kind": "class_diagram", "package_name": "Bank", "classes": [...], "associations": [...]}
//! {"kind": "activity", "name": "Online Shopping", "body": [...], "closed": false, "open_depth": 1}
//! ```
//!
//! Unknown fields are rejected. Saving always emits the same pretty-printed
//! layout with a trailing newline, so `save(load(x)) == x` for canonical files.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ActivityModel, Association, ClassDecl, ClassDiagram, Completion, Identifier, ModelError, Step};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Model {
    Class(ClassDiagram),
    Activity(ActivityModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Class(_) => "class_diagram",
            Model::Activity(_) => "activity",
        }
    }

    pub fn as_class(&self) -> Option<&ClassDiagram> {
        match self {
            Model::Class(d) => Some(d),
            Model::Activity(_) => None,
        }
    }

    pub fn as_activity(&self) -> Option<&ActivityModel> {
        match self {
            Model::Activity(a) => Some(a),
            Model::Class(_) => None,
        }
    }
}

impl From<ClassDiagram> for Model {
    fn from(d: ClassDiagram) -> Self {
        Model::Class(d)
    }
}

impl From<ActivityModel> for Model {
    fn from(a: ActivityModel) -> Self {
        Model::Activity(a)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassDocument {
    kind: String,
    package_name: Identifier,
    #[serde(default)]
    classes: Vec<ClassDecl>,
    #[serde(default)]
    associations: Vec<Association>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActivityDocument {
    kind: String,
    name: Identifier,
    body: Vec<Step>,
    #[serde(default = "yes")]
    closed: bool,
    #[serde(default, skip_serializing_if = "is_zero")]
    open_depth: usize,
}

fn yes() -> bool {
    true
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

pub fn save_model(model: &Model) -> Vec<u8> {
    let mut out = match model {
        Model::Class(d) => serde_json::to_vec_pretty(&ClassDocument {
            kind: model.kind().to_string(),
            package_name: d.package_name.clone(),
            classes: d.classes.clone(),
            associations: d.associations.clone(),
        }),
        Model::Activity(a) => {
            let (closed, open_depth) = match a.completion {
                Completion::Closed => (true, 0),
                Completion::Open { depth } => (false, depth),
            };
            serde_json::to_vec_pretty(&ActivityDocument {
                kind: model.kind().to_string(),
                name: a.name.clone(),
                body: a.body.clone(),
                closed,
                open_depth,
            })
        }
    }
    .expect("model documents always serialize");
    out.push(b'\n');
    out
}

pub fn load_model(bytes: &[u8]) -> Result<Model, ModelError> {
    if bytes.starts_with(&[0xEF, 0xBB, 0xBF]) {
        return Err(ModelError::Parse {
            offset: 0,
            reason: "byte order mark is not allowed".into(),
        });
    }
    let text = std::str::from_utf8(bytes).map_err(|e| ModelError::Parse {
        offset: e.valid_up_to(),
        reason: "invalid UTF-8".into(),
    })?;
    let value: Value = serde_json::from_str(text).map_err(|e| ModelError::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        reason: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| ModelError::Schema {
        field: "<document>".into(),
        reason: "expected a JSON object".into(),
    })?;
    let kind = match obj.get("kind").and_then(Value::as_str) {
        Some(k @ ("class_diagram" | "activity")) => k.to_string(),
        Some(other) => {
            return Err(ModelError::Schema {
                field: "kind".into(),
                reason: format!("unknown kind `{other}`"),
            })
        }
        None => {
            return Err(ModelError::Schema {
                field: "kind".into(),
                reason: "missing or not a string".into(),
            })
        }
    };

    if kind == "class_diagram" {
        let doc: ClassDocument = typed(value)?;
        return Ok(Model::Class(ClassDiagram {
            package_name: doc.package_name,
            classes: doc.classes,
            associations: doc.associations,
        }));
    }

    let doc: ActivityDocument = typed(value)?;
    let completion = match (doc.closed, doc.open_depth) {
        (true, 0) => Completion::Closed,
        (true, _) => {
            return Err(ModelError::Schema {
                field: "open_depth".into(),
                reason: "a closed workflow has no open point".into(),
            })
        }
        (false, depth) => Completion::Open { depth },
    };
    let model = ActivityModel {
        name: doc.name,
        body: doc.body,
        completion,
    };
    model.validate().map_err(|e| ModelError::Schema {
        field: "body".into(),
        reason: e.to_string(),
    })?;
    Ok(Model::Activity(model))
}

fn typed<T: serde::de::DeserializeOwned>(value: Value) -> Result<T, ModelError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let reason = e.inner().to_string();
        ModelError::Schema {
            field: schema_field(&path, &reason),
            reason,
        }
    })
}

pub fn load_class_diagram(bytes: &[u8]) -> Result<ClassDiagram, ModelError> {
    match load_model(bytes)? {
        Model::Class(d) => Ok(d),
        Model::Activity(_) => Err(ModelError::Schema {
            field: "kind".into(),
            reason: "expected a class_diagram document".into(),
        }),
    }
}

pub fn load_activity(bytes: &[u8]) -> Result<ActivityModel, ModelError> {
    match load_model(bytes)? {
        Model::Activity(a) => Ok(a),
        Model::Class(_) => Err(ModelError::Schema {
            field: "kind".into(),
            reason: "expected an activity document".into(),
        }),
    }
}

fn schema_field(path: &str, reason: &str) -> String {
    let named = ["missing field `", "unknown field `"]
        .iter()
        .find_map(|prefix| reason.strip_prefix(prefix))
        .and_then(|rest| rest.split('`').next());
    match (path, named) {
        ("." | "", Some(name)) => name.to_string(),
        (p, Some(name)) if p == name || p.ends_with(&format!(".{name}")) => p.to_string(),
        (p, Some(name)) => format!("{p}.{name}"),
        ("." | "", None) => "<document>".to_string(),
        (p, None) => p.to_string(),
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BANK: &str = r#"{
  "kind": "class_diagram",
  "package_name": "Bank",
  "classes": [
    {
      "name": "bank",
      "attributes": [
        "id"
      ]
    },
    {
      "name": "client",
      "attributes": []
    }
  ],
  "associations": [
    {
      "source": "bank",
      "target": "client"
    }
  ]
}
"#;

    #[test]
    fn round_trips_canonical_bytes() {
        let model = load_model(BANK.as_bytes()).unwrap();
        assert_eq!(String::from_utf8(save_model(&model)).unwrap(), BANK);
    }

    #[test]
    fn truncated_json_is_a_parse_error() {
        let err = load_model(&BANK.as_bytes()[..40]).unwrap_err();
        match err {
            ModelError::Parse { offset, .. } => assert!(offset <= 40),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_error_offset_points_at_the_problem() {
        let text = "{\n  \"kind\": \"activity\",\n  oops\n}";
        match load_model(text.as_bytes()).unwrap_err() {
            ModelError::Parse { offset, .. } => assert_eq!(&text[offset..offset + 1], "o"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_package_name_is_a_schema_error() {
        let text = r#"{"kind": "class_diagram", "classes": []}"#;
        match load_model(text.as_bytes()).unwrap_err() {
            ModelError::Schema { field, .. } => assert_eq!(field, "package_name"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"kind": "class_diagram", "package_name": "x", "colour": 1}"#;
        match load_model(text.as_bytes()).unwrap_err() {
            ModelError::Schema { field, .. } => assert_eq!(field, "colour"),
            other => panic!("unexpected {other:?}"),
        }
        let nested = r#"{"kind": "class_diagram", "package_name": "x",
            "classes": [{"name": "a", "stereotype": "entity"}]}"#;
        match load_model(nested.as_bytes()).unwrap_err() {
            ModelError::Schema { field, .. } => assert_eq!(field, "classes[0].stereotype"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_identifier_is_a_schema_error() {
        let text = r#"{"kind": "class_diagram", "package_name": "  "}"#;
        match load_model(text.as_bytes()).unwrap_err() {
            ModelError::Schema { field, .. } => assert_eq!(field, "package_name"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bom_and_unknown_kind() {
        let mut bytes = vec![0xEF, 0xBB, 0xBF];
        bytes.extend_from_slice(BANK.as_bytes());
        assert!(matches!(load_model(&bytes), Err(ModelError::Parse { offset: 0, .. })));
        let text = r#"{"kind": "petri_net"}"#;
        assert!(matches!(
            load_model(text.as_bytes()),
            Err(ModelError::Schema { field, .. }) if field == "kind"
        ));
    }

    #[test]
    fn activity_round_trip_and_validation() {
        let text = r#"{
  "kind": "activity",
  "name": "Online Shopping",
  "body": [
    {
      "action": "search item"
    },
    {
      "choice": [
        "found",
        "not found"
      ]
    },
    {
      "if": {
        "guard": "found",
        "then": [
          {
            "action": "view item"
          }
        ]
      }
    }
  ],
  "closed": false,
  "open_depth": 1
}
"#;
        let model = load_model(text.as_bytes()).unwrap();
        let activity = model.as_activity().unwrap();
        assert_eq!(activity.completion, Completion::Open { depth: 1 });
        assert_eq!(String::from_utf8(save_model(&model)).unwrap(), text);

        let bad = r#"{"kind": "activity", "name": "m", "body": []}"#;
        assert!(matches!(
            load_model(bad.as_bytes()),
            Err(ModelError::Schema { field, .. }) if field == "body"
        ));
    }
}
