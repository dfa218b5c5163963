//! Cross-prompt frequency ranking.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{Association, AttributeSuggestion, Identifier};

/// Equality and ordering key used when tallying suggestions.
pub trait RankKey {
    /// Normalized key; items with equal keys are the same suggestion.
    fn rank_key(&self) -> String;

    /// Picks the representative among items sharing a key (smallest wins).
    fn display_key(&self) -> String {
        self.rank_key()
    }
}

impl RankKey for Identifier {
    fn rank_key(&self) -> String {
        self.normalized().to_string()
    }

    fn display_key(&self) -> String {
        self.display().to_string()
    }
}

impl RankKey for (Identifier, Identifier) {
    fn rank_key(&self) -> String {
        let (a, b) = (self.0.normalized(), self.1.normalized());
        if a <= b {
            format!("{a},{b}")
        } else {
            format!("{b},{a}")
        }
    }

    fn display_key(&self) -> String {
        format!("{},{}", self.0.display(), self.1.display())
    }
}

impl RankKey for Association {
    fn rank_key(&self) -> String {
        let (a, b) = self.endpoints();
        format!("{},{}", a.normalized(), b.normalized())
    }

    fn display_key(&self) -> String {
        format!("{},{}", self.source.display(), self.target.display())
    }
}

impl RankKey for AttributeSuggestion {
    fn rank_key(&self) -> String {
        format!("{}.{}", self.class.normalized(), self.attribute.normalized())
    }

    fn display_key(&self) -> String {
        format!("{}.{}", self.class.display(), self.attribute.display())
    }
}

impl RankKey for String {
    fn rank_key(&self) -> String {
        self.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedSuggestion<T> {
    pub item: T,
    pub frequency: u32,
    pub rank: u32,
}

/// Counts each item once per prompt, then orders by frequency (descending)
/// and key. Ranks are dense: equal frequencies share a rank.
pub fn rank_by_frequency<T>(per_prompt_results: &[Vec<T>]) -> Vec<RankedSuggestion<T>>
where
    T: RankKey + Clone,
{
    let mut tally: BTreeMap<String, (T, String, u32)> = BTreeMap::new();
    for set in per_prompt_results {
        let mut seen = HashSet::new();
        for item in set {
            let key = item.rank_key();
            let first_in_prompt = seen.insert(key.clone());
            let display = item.display_key();
            tally
                .entry(key)
                .and_modify(|(rep, rep_display, n)| {
                    if first_in_prompt {
                        *n += 1;
                    }
                    if display < *rep_display {
                        *rep = item.clone();
                        *rep_display = display.clone();
                    }
                })
                .or_insert_with(|| (item.clone(), display, 1));
        }
    }
    // BTreeMap iteration is key order, so a stable sort by frequency keeps
    // the key tiebreak.
    let mut entries: Vec<(String, T, u32)> = tally
        .into_iter()
        .map(|(k, (item, _, n))| (k, item, n))
        .collect();
    entries.sort_by(|a, b| b.2.cmp(&a.2));

    let mut out = Vec::with_capacity(entries.len());
    let mut rank = 0;
    let mut last = None;
    for (_, item, frequency) in entries {
        if last != Some(frequency) {
            rank += 1;
            last = Some(frequency);
        }
        out.push(RankedSuggestion {
            item,
            frequency,
            rank,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    MinFrequency(u32),
    TopN(usize),
    All,
}

impl SelectionPolicy {
    /// `MinFrequency(2)` once three or more prompts ran, otherwise `All`.
    pub fn default_for(n_prompts: usize) -> Self {
        if n_prompts >= 3 {
            SelectionPolicy::MinFrequency(2)
        } else {
            SelectionPolicy::All
        }
    }
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionPolicy::MinFrequency(k) => write!(f, "min:{k}"),
            SelectionPolicy::TopN(n) => write!(f, "top:{n}"),
            SelectionPolicy::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid policy `{0}`; expected `all`, `min:K` (K >= 1) or `top:N`")]
pub struct PolicyParseError(pub String);

impl FromStr for SelectionPolicy {
    type Err = PolicyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PolicyParseError(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        if lower == "all" {
            return Ok(SelectionPolicy::All);
        }
        let (kind, value) = lower.split_once(':').ok_or_else(err)?;
        match kind {
            "min" => match value.parse() {
                Ok(k) if k >= 1 => Ok(SelectionPolicy::MinFrequency(k)),
                _ => Err(err()),
            },
            "top" => value.parse().map(SelectionPolicy::TopN).map_err(|_| err()),
            _ => Err(err()),
        }
    }
}

pub fn select<T: Clone>(ranked: &[RankedSuggestion<T>], policy: SelectionPolicy) -> Vec<T> {
    select_ranked(ranked, policy)
        .into_iter()
        .map(|r| r.item)
        .collect()
}

/// Like [`select`] but keeps frequencies and ranks.
pub fn select_ranked<T: Clone>(
    ranked: &[RankedSuggestion<T>],
    policy: SelectionPolicy,
) -> Vec<RankedSuggestion<T>> {
    match policy {
        SelectionPolicy::All => ranked.to_vec(),
        SelectionPolicy::TopN(n) => ranked.iter().take(n).cloned().collect(),
        SelectionPolicy::MinFrequency(k) => ranked
            .iter()
            .filter(|r| r.frequency >= k)
            .cloned()
            .collect(),
    }
}
