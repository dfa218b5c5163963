use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{PromptError, TaskKind};
use crate::parse::parse_activity;
use crate::prompt::serialize_activity;

pub const SHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub task: TaskKind,
    pub text: String,
}

impl Shot {
    pub fn new(task: TaskKind, text: impl Into<String>) -> Self {
        Self {
            task,
            text: text.into(),
        }
    }
}

/// One shot list per task, loaded once and shared read-only.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShotLibrary {
    pub class_pairs: Vec<Shot>,
    pub attributes: Vec<Shot>,
    pub association_names: Vec<Shot>,
    pub activity: Vec<Shot>,
}

const BUNDLED_CLASS_PAIRS: &str = include_str!("../../shots/class_pairs.txt");
const BUNDLED_ATTRIBUTES: &str = include_str!("../../shots/attributes.txt");
const BUNDLED_ASSOCIATION_NAMES: &str = include_str!("../../shots/association_name.txt");
const BUNDLED_ACTIVITY: &str = include_str!("../../shots/activity.txt");

impl ShotLibrary {
    pub fn bundled() -> Self {
        static LIB: OnceLock<ShotLibrary> = OnceLock::new();
        LIB.get_or_init(|| {
            Self::from_texts(
                BUNDLED_CLASS_PAIRS,
                BUNDLED_ATTRIBUTES,
                BUNDLED_ASSOCIATION_NAMES,
                BUNDLED_ACTIVITY,
            )
            .expect("bundled shot files are valid")
        })
        .clone()
    }

    pub fn from_texts(
        class_pairs: &str,
        attributes: &str,
        association_names: &str,
        activity: &str,
    ) -> Result<Self, PromptError> {
        Ok(Self {
            class_pairs: parse_shot_file(TaskKind::ClassPairs, class_pairs)?,
            attributes: parse_shot_file(TaskKind::Attributes, attributes)?,
            association_names: parse_shot_file(TaskKind::AssociationName, association_names)?,
            activity: parse_shot_file(TaskKind::Activity, activity)?,
        })
    }

    /// Loads `<task>.txt` files from `dir`; tasks without a file keep the
    /// bundled shots.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut lib = Self::bundled();
        for task in TaskKind::ALL {
            let path = dir.join(format!("{}.txt", task.as_str()));
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path)
                .map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?;
            *lib.for_task_mut(task) = parse_shot_file(task, &text)?;
        }
        Ok(lib)
    }

    pub fn for_task(&self, task: TaskKind) -> &[Shot] {
        match task {
            TaskKind::ClassPairs => &self.class_pairs,
            TaskKind::Attributes => &self.attributes,
            TaskKind::AssociationName => &self.association_names,
            TaskKind::Activity => &self.activity,
        }
    }

    fn for_task_mut(&mut self, task: TaskKind) -> &mut Vec<Shot> {
        match task {
            TaskKind::ClassPairs => &mut self.class_pairs,
            TaskKind::Attributes => &mut self.attributes,
            TaskKind::AssociationName => &mut self.association_names,
            TaskKind::Activity => &mut self.activity,
        }
    }
}

/// Parses a shot file: one shot per line, `#` comments, blank lines ignored.
/// A `# version: N` comment pins the file format.
pub fn parse_shot_file(task: TaskKind, text: &str) -> Result<Vec<Shot>, PromptError> {
    let mut shots = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.trim_start().strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("version:") {
                let version: u32 = v.trim().parse().map_err(|_| PromptError::InvalidShot {
                    task,
                    line: i + 1,
                    reason: format!("bad version `{}`", v.trim()),
                })?;
                if version != SHOT_FORMAT_VERSION {
                    return Err(PromptError::InvalidShot {
                        task,
                        line: i + 1,
                        reason: format!("unsupported shot format version {version}"),
                    });
                }
            }
            continue;
        }
        check_shot(task, line).map_err(|reason| PromptError::InvalidShot {
            task,
            line: i + 1,
            reason,
        })?;
        shots.push(Shot::new(task, line));
    }
    Ok(shots)
}

fn grammar(task: TaskKind) -> &'static Regex {
    static PAIRS: OnceLock<Regex> = OnceLock::new();
    static ATTRS: OnceLock<Regex> = OnceLock::new();
    static NAMES: OnceLock<Regex> = OnceLock::new();
    const PAIR: &str = r"\[[^\[\],]+,[^\[\],]+\]";
    const GROUP: &str = r"[^:\[\];=]+:\s*\[[^\[\]]*\]";
    match task {
        TaskKind::ClassPairs => PAIRS.get_or_init(|| {
            Regex::new(&format!(r"^[^:\[\]]+:\s*{PAIR}(\s*,\s*{PAIR})*$")).unwrap()
        }),
        TaskKind::Attributes => ATTRS.get_or_init(|| {
            let groups = format!(r"{GROUP}(\s*;\s*{GROUP})*");
            Regex::new(&format!(r"^package [^:]+:\s*{groups}\s*=>\s*{groups}$")).unwrap()
        }),
        TaskKind::AssociationName | TaskKind::Activity => {
            NAMES.get_or_init(|| Regex::new(r"^[^,=]+,\s*[^,=]+\s*=>\s*\S+$").unwrap())
        }
    }
}

fn check_shot(task: TaskKind, line: &str) -> Result<(), String> {
    if task == TaskKind::Activity {
        let model = parse_activity(line).map_err(|e| e.to_string())?;
        if !model.is_closed() {
            return Err("activity shots must be closed workflows".into());
        }
        let canonical = serialize_activity(&model, false);
        if canonical != line {
            return Err(format!("not in canonical form; expected `{canonical}`"));
        }
        return Ok(());
    }
    if grammar(task).is_match(line) {
        Ok(())
    } else {
        Err(format!("does not match the {task} line grammar"))
    }
}
