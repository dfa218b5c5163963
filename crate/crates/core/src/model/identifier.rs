use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ModelError;

/// A model element name.
///
/// The display form is kept verbatim for rendering prompts; every comparison
/// (equality, hashing, ordering) goes through the normalized form, which is
/// lowercase and contains only `[a-z0-9_]`.
#[derive(Clone)]
pub struct Identifier {
    display: String,
    normalized: String,
}

/// Lowercases, drops whitespace and every character outside `[a-z0-9_]`.
pub fn normalize_identifier(raw: &str) -> Result<Identifier, ModelError> {
    Identifier::new(raw)
}

pub(crate) fn normalize_str(raw: &str) -> String {
    raw.chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || *c == '_')
        .collect()
}

impl Identifier {
    pub fn new(raw: &str) -> Result<Self, ModelError> {
        let display = raw.trim();
        let normalized = normalize_str(display);
        if normalized.is_empty() {
            return Err(ModelError::EmptyIdentifier(raw.to_string()));
        }
        Ok(Self {
            display: display.to_string(),
            normalized,
        })
    }

    /// Identifier whose display form is its normalized form.
    pub fn normalized_only(raw: &str) -> Result<Self, ModelError> {
        let id = Self::new(raw)?;
        Ok(Self {
            display: id.normalized.clone(),
            normalized: id.normalized,
        })
    }

    pub fn display(&self) -> &str {
        &self.display
    }

    pub fn normalized(&self) -> &str {
        &self.normalized
    }

    pub fn contains_digit(&self) -> bool {
        self.normalized.bytes().any(|b| b.is_ascii_digit())
    }
}

impl PartialEq for Identifier {
    fn eq(&self, other: &Self) -> bool {
        self.normalized == other.normalized
    }
}

impl Eq for Identifier {}

impl Hash for Identifier {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.normalized.hash(state);
    }
}

impl PartialOrd for Identifier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Identifier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.normalized.cmp(&other.normalized)
    }
}

impl fmt::Debug for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.display == self.normalized {
            write!(f, "{:?}", self.normalized)
        } else {
            write!(f, "{:?}({:?})", self.normalized, self.display)
        }
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display)
    }
}

impl Serialize for Identifier {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.display)
    }
}

impl<'de> Deserialize<'de> for Identifier {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Identifier::new(&raw).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<&str> for Identifier {
    type Error = ModelError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Identifier::new(value)
    }
}
