//! Model-to-text mapping: few-shot prompts for each completion task.

mod activity;
mod shots;

use std::collections::HashSet;
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{ActivityModel, Association, ClassDiagram, Identifier, ModelError};

pub use activity::serialize_activity;
pub use shots::{Shot, ShotLibrary};

pub const DEFAULT_MODEL_NAME: &str = "text-davinci-002";
pub const DEFAULT_TEMPERATURE: f64 = 0.7;

pub const CLASS_INSTRUCTION: &str = "Generate related concepts:";
pub const ATTRIBUTE_INSTRUCTION: &str =
    "Generate missing attributes for each class in this class diagram:";
pub const ASSOCIATION_INSTRUCTION: &str = "Generate the association name for each pair of classes:";
/// The double space is deliberate; see [`ActivityPromptOptions`].
pub const ACTIVITY_INSTRUCTION: &str = "Complete the  workflow:";

/// Pairs per class-prompt query.
pub const MIN_QUERY_PAIRS: usize = 2;
pub const MAX_QUERY_PAIRS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    ClassPairs,
    Attributes,
    AssociationName,
    Activity,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::ClassPairs,
        TaskKind::Attributes,
        TaskKind::AssociationName,
        TaskKind::Activity,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::ClassPairs => "class_pairs",
            TaskKind::Attributes => "attributes",
            TaskKind::AssociationName => "association_name",
            TaskKind::Activity => "activity",
        }
    }

    pub fn instruction(&self) -> &'static str {
        match self {
            TaskKind::ClassPairs => CLASS_INSTRUCTION,
            TaskKind::Attributes => ATTRIBUTE_INSTRUCTION,
            TaskKind::AssociationName => ASSOCIATION_INSTRUCTION,
            TaskKind::Activity => ACTIVITY_INSTRUCTION,
        }
    }

    pub fn default_max_tokens(&self) -> u32 {
        match self {
            TaskKind::ClassPairs | TaskKind::Attributes => 20,
            TaskKind::AssociationName => 1,
            TaskKind::Activity => 50,
        }
    }

    /// Recognizes the task from the first line of a rendered prompt.
    pub fn from_instruction(line: &str) -> Option<TaskKind> {
        let line = line.trim();
        TaskKind::ALL.into_iter().find(|t| {
            t.instruction() == line
                || (*t == TaskKind::Activity && line == "Complete the workflow:")
        })
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_name: String,
}

impl Hyperparams {
    pub fn for_task(task: TaskKind) -> Self {
        Self {
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: task.default_max_tokens(),
            model_name: DEFAULT_MODEL_NAME.to_string(),
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(PromptError::InvalidHyperparams(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(PromptError::InvalidHyperparams(
                "max_tokens must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub task: TaskKind,
    pub instruction: String,
    pub shots: Vec<Shot>,
    pub query: String,
    pub hyperparams: Hyperparams,
    pub warnings: Vec<String>,
}

impl Prompt {
    fn new(task: TaskKind, instruction: &str, shots: &[Shot], query: String) -> Self {
        let mut warnings = Vec::new();
        if shots.is_empty() {
            warnings.push(format!("no {task} shots; prompt is zero-shot"));
        }
        Self {
            task,
            instruction: instruction.to_string(),
            shots: shots.to_vec(),
            query,
            hyperparams: Hyperparams::for_task(task),
            warnings,
        }
    }

    /// Instruction, shots and query, one per line, no trailing newline.
    pub fn render(&self) -> String {
        let mut out = self.instruction.clone();
        for shot in &self.shots {
            out.push('\n');
            out.push_str(&shot.text);
        }
        out.push('\n');
        out.push_str(&self.query);
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("the diagram has no associations to build a query from")]
    NoAssociations,
    #[error("class `{0}` is not in the diagram")]
    UnknownClass(String),
    #[error("empty pair subset")]
    EmptySubset,
    #[error("n_prompts must be at least 1")]
    NoPrompts,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("invalid {task} shot on line {line}: {reason}")]
    InvalidShot {
        task: TaskKind,
        line: usize,
        reason: String,
    },
    #[error("cannot read shot library: {0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Draws `n_prompts` subsets of the diagram's associations, each of 2–4
/// pairs (fewer when the diagram has fewer), in diagram order.
///
/// Subsets repeat only once every distinct subset of the drawn size is
/// exhausted or a few redraws fail.
pub fn sample_query_subsets(
    diagram: &ClassDiagram,
    n_prompts: usize,
    rng_seed: u64,
) -> Result<Vec<Vec<Association>>, PromptError> {
    let available = diagram.associations.len();
    if available == 0 {
        return Err(PromptError::NoAssociations);
    }
    if n_prompts == 0 {
        return Err(PromptError::NoPrompts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut subsets = Vec::with_capacity(n_prompts);
    for _ in 0..n_prompts {
        let mut picked = Vec::new();
        for _attempt in 0..8 {
            let size = rng
                .random_range(MIN_QUERY_PAIRS..=MAX_QUERY_PAIRS)
                .min(available);
            let mut idx = index::sample(&mut rng, available, size).into_vec();
            idx.sort_unstable();
            picked = idx;
            if !seen.contains(&picked) {
                break;
            }
        }
        seen.insert(picked.clone());
        subsets.push(
            picked
                .into_iter()
                .map(|i| diagram.associations[i].clone())
                .collect(),
        );
    }
    Ok(subsets)
}

pub fn class_query(diagram: &ClassDiagram, subset: &[Association]) -> String {
    let pairs = subset
        .iter()
        .map(|a| format!("[{}, {}]", a.source.display(), a.target.display()))
        .collect::<Vec<_>>()
        .join(", ");
    format!("{}: {}", diagram.package_name.display(), pairs)
}

pub fn build_class_prompt(
    shots: &[Shot],
    diagram: &ClassDiagram,
    subset: &[Association],
) -> Result<Prompt, PromptError> {
    if subset.is_empty() {
        return Err(PromptError::EmptySubset);
    }
    Ok(Prompt::new(
        TaskKind::ClassPairs,
        CLASS_INSTRUCTION,
        shots,
        class_query(diagram, subset),
    ))
}

pub fn attribute_query(diagram: &ClassDiagram, target: &Identifier) -> Result<String, PromptError> {
    let target_decl = diagram
        .class(target)
        .ok_or_else(|| PromptError::UnknownClass(target.display().to_string()))?;
    let group = |c: &crate::model::ClassDecl| {
        let attrs = c
            .attributes
            .iter()
            .map(Identifier::display)
            .collect::<Vec<_>>()
            .join(",");
        format!("{}: [{}]", c.name.display(), attrs)
    };
    let mut groups = diagram
        .classes
        .iter()
        .filter(|c| &c.name != target)
        .map(group)
        .collect::<Vec<_>>();
    groups.push(group(target_decl));
    Ok(format!(
        "package {}: {}",
        diagram.package_name.display(),
        groups.join("; ")
    ))
}

pub fn build_attribute_prompt(
    shots: &[Shot],
    diagram: &ClassDiagram,
    target: &Identifier,
) -> Result<Prompt, PromptError> {
    Ok(Prompt::new(
        TaskKind::Attributes,
        ATTRIBUTE_INSTRUCTION,
        shots,
        attribute_query(diagram, target)?,
    ))
}

pub fn build_association_name_prompt(shots: &[Shot], pair: (&Identifier, &Identifier)) -> Prompt {
    Prompt::new(
        TaskKind::AssociationName,
        ASSOCIATION_INSTRUCTION,
        shots,
        format!("{}, {} =>", pair.0.display(), pair.1.display()),
    )
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActivityPromptOptions {
    /// Collapse the instruction's double space to a single one.
    pub normalize_instruction: bool,
}

pub fn build_activity_prompt(shots: &[Shot], partial: &ActivityModel) -> Result<Prompt, PromptError> {
    build_activity_prompt_with(shots, partial, &ActivityPromptOptions::default())
}

pub fn build_activity_prompt_with(
    shots: &[Shot],
    partial: &ActivityModel,
    options: &ActivityPromptOptions,
) -> Result<Prompt, PromptError> {
    partial.validate()?;
    let instruction = if options.normalize_instruction {
        ACTIVITY_INSTRUCTION.split_whitespace().collect::<Vec<_>>().join(" ")
    } else {
        ACTIVITY_INSTRUCTION.to_string()
    };
    Ok(Prompt::new(
        TaskKind::Activity,
        &instruction,
        shots,
        serialize_activity(partial, true),
    ))
}
