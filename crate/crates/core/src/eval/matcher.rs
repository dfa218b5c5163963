use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::model::Identifier;

/// Which notion of "same concept" the harness uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MatchPolicy {
    Exact,
    Stemmed,
    SynonymTable { path: PathBuf },
    Interactive { verdicts: PathBuf },
}

impl fmt::Display for MatchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchPolicy::Exact => f.write_str("exact"),
            MatchPolicy::Stemmed => f.write_str("stemmed"),
            MatchPolicy::SynonymTable { path } => write!(f, "synonyms:{}", path.display()),
            MatchPolicy::Interactive { verdicts } => write!(f, "interactive:{}", verdicts.display()),
        }
    }
}

/// Strips one plural or gerund suffix from a normalized identifier.
///
/// `ies` becomes `y`; `sses`, `ches`, `shes`, `xes`, `zes` lose `es`; a
/// final `s` is dropped unless preceded by `s`, `u` or `i`; `ing` is dropped
/// when at least three characters remain, undoubling a final doubled
/// consonant (`shipping` to `ship`). Words of three characters or fewer are
/// left alone.
pub fn stem(word: &str) -> String {
    let w = word;
    if w.len() <= 3 {
        return w.to_string();
    }
    if let Some(base) = w.strip_suffix("ies").filter(|b| b.len() >= 2) {
        return format!("{base}y");
    }
    for suffix in ["sses", "ches", "shes", "xes", "zes"] {
        if w.ends_with(suffix) {
            return w[..w.len() - 2].to_string();
        }
    }
    if let Some(base) = w.strip_suffix("ing").filter(|b| b.len() >= 3) {
        let bytes = base.as_bytes();
        let n = bytes.len();
        if n >= 2
            && bytes[n - 1] == bytes[n - 2]
            && !b"aeioulsz".contains(&bytes[n - 1])
        {
            return base[..n - 1].to_string();
        }
        return base.to_string();
    }
    if let Some(base) = w.strip_suffix('s') {
        if !base.ends_with(['s', 'u', 'i']) {
            return base.to_string();
        }
    }
    w.to_string()
}

fn stem_id(id: &Identifier) -> String {
    stem(id.normalized())
}

/// Groups of interchangeable names, one comma-separated group per line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymTable {
    group_of: HashMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynonymError {
    #[error("cannot read synonym table {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("line {line}: `{token}` is not a valid identifier")]
    BadEntry { line: usize, token: String },
}

impl SynonymTable {
    pub fn parse(text: &str) -> Result<Self, SynonymError> {
        let mut group_of: HashMap<String, Vec<usize>> = HashMap::new();
        let mut group = 0;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            for token in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let id = Identifier::normalized_only(token).map_err(|_| SynonymError::BadEntry {
                    line: i + 1,
                    token: token.to_string(),
                })?;
                let groups = group_of.entry(stem_id(&id)).or_default();
                if !groups.contains(&group) {
                    groups.push(group);
                }
            }
            group += 1;
        }
        Ok(Self { group_of })
    }

    pub fn load(path: &Path) -> Result<Self, SynonymError> {
        let text = std::fs::read_to_string(path).map_err(|e| SynonymError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn synonyms(&self, a: &Identifier, b: &Identifier) -> bool {
        match (self.group_of.get(&stem_id(a)), self.group_of.get(&stem_id(b))) {
            (Some(ga), Some(gb)) => ga.iter().any(|g| gb.contains(g)),
            _ => false,
        }
    }
}

/// A human (or scripted) decision on whether two names are equivalent.
pub trait Judge: Send {
    fn judge(&mut self, candidate: &Identifier, truth: &Identifier) -> bool;
}

impl<F: FnMut(&Identifier, &Identifier) -> bool + Send> Judge for F {
    fn judge(&mut self, candidate: &Identifier, truth: &Identifier) -> bool {
        self(candidate, truth)
    }
}

/// Recorded verdicts keyed by `candidate|truth` (normalized).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictStore {
    pub verdicts: BTreeMap<String, bool>,
}

impl VerdictStore {
    fn key(candidate: &Identifier, truth: &Identifier) -> String {
        format!("{}|{}", candidate.normalized(), truth.normalized())
    }

    pub fn get(&self, candidate: &Identifier, truth: &Identifier) -> Option<bool> {
        self.verdicts.get(&Self::key(candidate, truth)).copied()
    }

    pub fn insert(&mut self, candidate: &Identifier, truth: &Identifier, verdict: bool) {
        self.verdicts.insert(Self::key(candidate, truth), verdict);
    }

    pub fn load(path: &Path) -> Result<Self, SynonymError> {
        if !path.exists() {
            return Ok(Self::default());
        }
        let io = |reason: String| SynonymError::Io {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| io(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("verdicts serialize");
        text.push('\n');
        std::fs::write(path, text)
    }
}

/// Exact matches pass without asking; other pairs are looked up in the
/// store, then put to the judge and recorded. Without a judge, unknown
/// pairs do not match.
pub struct InteractiveMatcher {
    store: Mutex<VerdictStore>,
    judge: Option<Mutex<Box<dyn Judge>>>,
    asked: Mutex<usize>,
}

impl InteractiveMatcher {
    pub fn replay(store: VerdictStore) -> Self {
        Self {
            store: Mutex::new(store),
            judge: None,
            asked: Mutex::new(0),
        }
    }

    pub fn with_judge(store: VerdictStore, judge: Box<dyn Judge>) -> Self {
        Self {
            store: Mutex::new(store),
            judge: Some(Mutex::new(judge)),
            asked: Mutex::new(0),
        }
    }

    pub fn verdicts(&self) -> VerdictStore {
        self.store.lock().unwrap().clone()
    }

    /// How many times the judge was consulted.
    pub fn prompts_asked(&self) -> usize {
        *self.asked.lock().unwrap()
    }

    fn matches(&self, candidate: &Identifier, truth: &Identifier) -> bool {
        if candidate == truth {
            return true;
        }
        if let Some(v) = self.store.lock().unwrap().get(candidate, truth) {
            return v;
        }
        let Some(judge) = &self.judge else {
            return false;
        };
        let verdict = judge.lock().unwrap().judge(candidate, truth);
        *self.asked.lock().unwrap() += 1;
        self.store.lock().unwrap().insert(candidate, truth, verdict);
        verdict
    }
}

/// Runtime form of a [`MatchPolicy`].
pub enum Matcher {
    Exact,
    Stemmed,
    Synonyms(SynonymTable),
    Interactive(InteractiveMatcher),
}

impl Matcher {
    pub fn from_policy(policy: &MatchPolicy) -> Result<Self, SynonymError> {
        Ok(match policy {
            MatchPolicy::Exact => Matcher::Exact,
            MatchPolicy::Stemmed => Matcher::Stemmed,
            MatchPolicy::SynonymTable { path } => Matcher::Synonyms(SynonymTable::load(path)?),
            MatchPolicy::Interactive { verdicts } => {
                Matcher::Interactive(InteractiveMatcher::replay(VerdictStore::load(verdicts)?))
            }
        })
    }

    pub fn mode(&self) -> &'static str {
        match self {
            Matcher::Exact => "exact",
            Matcher::Stemmed => "stemmed",
            Matcher::Synonyms(_) => "synonym_table",
            Matcher::Interactive(_) => "interactive",
        }
    }

    pub fn matches(&self, candidate: &Identifier, truth: &Identifier) -> bool {
        match self {
            Matcher::Exact => candidate == truth,
            Matcher::Stemmed => stem_id(candidate) == stem_id(truth),
            Matcher::Synonyms(table) => {
                stem_id(candidate) == stem_id(truth) || table.synonyms(candidate, truth)
            }
            Matcher::Interactive(m) => m.matches(candidate, truth),
        }
    }
}

pub fn semantic_match(candidate: &Identifier, truth: &Identifier, matcher: &Matcher) -> bool {
    matcher.matches(candidate, truth)
}
