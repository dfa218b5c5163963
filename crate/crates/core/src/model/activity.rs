use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Identifier, ModelError};

/// Free text of an action, choice option, or guard.
///
/// Stored canonically: words separated by single spaces, none of the
/// workflow grammar's reserved symbols (`=>`, `/`, `{`, `}`, `.`).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(String);

const RESERVED: [&str; 5] = ["=>", "/", "{", "}", "."];

impl Label {
    pub fn new(raw: &str) -> Result<Self, ModelError> {
        let text = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        if text.is_empty() {
            return Err(ModelError::InvalidActivity("empty label".into()));
        }
        if let Some(sym) = RESERVED.iter().find(|s| text.contains(*s)) {
            return Err(ModelError::InvalidActivity(format!(
                "label `{text}` contains reserved symbol `{sym}`"
            )));
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub(crate) fn first_word(&self) -> &str {
        self.0.split(' ').next().unwrap_or("")
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Label::new(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Action(Label),
    Choice(Vec<Label>),
    #[serde(rename = "if")]
    Conditional {
        guard: Label,
        then: Vec<Step>,
        #[serde(rename = "else", default, skip_serializing_if = "Option::is_none")]
        otherwise: Option<Vec<Step>>,
    },
}

impl Step {
    pub fn action(label: &str) -> Result<Self, ModelError> {
        Ok(Step::Action(Label::new(label)?))
    }

    pub fn choice(options: &[&str]) -> Result<Self, ModelError> {
        Ok(Step::Choice(
            options
                .iter()
                .map(|o| Label::new(o))
                .collect::<Result<_, _>>()?,
        ))
    }

    pub fn conditional(
        guard: &str,
        then: Vec<Step>,
        otherwise: Option<Vec<Step>>,
    ) -> Result<Self, ModelError> {
        Ok(Step::Conditional {
            guard: Label::new(guard)?,
            then,
            otherwise,
        })
    }

    /// Count of steps in this subtree, including nested ones.
    pub fn size(&self) -> usize {
        match self {
            Step::Action(_) | Step::Choice(_) => 1,
            Step::Conditional {
                then, otherwise, ..
            } => {
                1 + then.iter().map(Step::size).sum::<usize>()
                    + otherwise
                        .iter()
                        .flatten()
                        .map(Step::size)
                        .sum::<usize>()
            }
        }
    }

    /// Every action label in the subtree, choice options and guards excluded.
    fn collect_actions<'a>(&'a self, out: &mut Vec<&'a Label>) {
        match self {
            Step::Action(l) => out.push(l),
            Step::Choice(opts) => out.extend(opts.iter()),
            Step::Conditional {
                then, otherwise, ..
            } => {
                for s in then.iter().chain(otherwise.iter().flatten()) {
                    s.collect_actions(out);
                }
            }
        }
    }
}

/// Whether the workflow is finished and, if not, where it continues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Closed,
    /// Continues after the last step, `depth` conditional branches deep: at
    /// depth 0 after the last top-level step, at depth 1 inside the active
    /// branch (else if present, otherwise then) of the trailing conditional,
    /// and so on.
    Open { depth: usize },
}

impl Completion {
    pub fn is_closed(&self) -> bool {
        matches!(self, Completion::Closed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityModel {
    pub name: Identifier,
    pub body: Vec<Step>,
    pub completion: Completion,
}

impl ActivityModel {
    pub fn closed(name: Identifier, body: Vec<Step>) -> Self {
        Self {
            name,
            body,
            completion: Completion::Closed,
        }
    }

    pub fn open(name: Identifier, body: Vec<Step>, depth: usize) -> Self {
        Self {
            name,
            body,
            completion: Completion::Open { depth },
        }
    }

    pub fn is_closed(&self) -> bool {
        self.completion.is_closed()
    }

    pub fn step_count(&self) -> usize {
        self.body.iter().map(Step::size).sum()
    }

    pub fn action_labels(&self) -> Vec<&Label> {
        let mut out = Vec::new();
        for s in &self.body {
            s.collect_actions(&mut out);
        }
        out
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.name.display().contains(':') || RESERVED.iter().any(|s| self.name.display().contains(s)) {
            return Err(ModelError::InvalidActivity(format!(
                "workflow name `{}` contains a reserved symbol",
                self.name.display()
            )));
        }
        validate_seq(&self.body)?;
        if let Completion::Open { depth } = self.completion {
            let mut seq = &self.body;
            for level in 0..depth {
                match seq.last() {
                    Some(Step::Conditional {
                        then, otherwise, ..
                    }) => seq = otherwise.as_ref().unwrap_or(then),
                    _ => {
                        return Err(ModelError::InvalidActivity(format!(
                            "open point at depth {depth} needs a trailing conditional at level {level}"
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}

fn validate_seq(seq: &[Step]) -> Result<(), ModelError> {
    if seq.is_empty() {
        return Err(ModelError::InvalidActivity("empty sequence".into()));
    }
    for step in seq {
        match step {
            Step::Action(label) => {
                if label.first_word() == "if" {
                    return Err(ModelError::InvalidActivity(format!(
                        "action `{label}` starts with the keyword `if`"
                    )));
                }
            }
            Step::Choice(options) => {
                if options.len() < 2 {
                    return Err(ModelError::InvalidActivity(
                        "choice needs at least two options".into(),
                    ));
                }
                if let Some(o) = options.iter().find(|o| o.first_word() == "if") {
                    return Err(ModelError::InvalidActivity(format!(
                        "choice option `{o}` starts with the keyword `if`"
                    )));
                }
            }
            Step::Conditional {
                then, otherwise, ..
            } => {
                validate_seq(then)?;
                if let Some(other) = otherwise {
                    validate_seq(other)?;
                }
            }
        }
    }
    Ok(())
}
