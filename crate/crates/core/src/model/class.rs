use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Identifier;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDecl {
    pub name: Identifier,
    #[serde(default)]
    pub attributes: Vec<Identifier>,
}

impl ClassDecl {
    pub fn new(name: Identifier) -> Self {
        Self {
            name,
            attributes: Vec::new(),
        }
    }

    pub fn with_attributes(name: Identifier, attributes: Vec<Identifier>) -> Self {
        Self { name, attributes }
    }

    pub fn has_attribute(&self, attribute: &Identifier) -> bool {
        self.attributes.contains(attribute)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Association {
    pub source: Identifier,
    pub target: Identifier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<Identifier>,
}

impl Association {
    pub fn new(source: Identifier, target: Identifier) -> Self {
        Self {
            source,
            target,
            name: None,
        }
    }

    pub fn named(source: Identifier, target: Identifier, name: Identifier) -> Self {
        Self {
            source,
            target,
            name: Some(name),
        }
    }

    /// Unordered endpoint pair, smaller normalized name first.
    pub fn endpoints(&self) -> (&Identifier, &Identifier) {
        if self.source <= self.target {
            (&self.source, &self.target)
        } else {
            (&self.target, &self.source)
        }
    }

    pub fn same_pair(&self, other: &Association) -> bool {
        self.endpoints() == other.endpoints()
    }

    pub fn mentions(&self, class: &Identifier) -> bool {
        &self.source == class || &self.target == class
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDiagram {
    pub package_name: Identifier,
    pub classes: Vec<ClassDecl>,
    pub associations: Vec<Association>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    DuplicateClass { class: String },
    DuplicateAttribute { class: String, attribute: String },
    DanglingAssociation { class: String },
    DuplicateAssociation { source: String, target: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateClass { class } => write!(f, "duplicate class `{class}`"),
            Violation::DuplicateAttribute { class, attribute } => {
                write!(f, "duplicate attribute `{attribute}` in class `{class}`")
            }
            Violation::DanglingAssociation { class } => {
                write!(f, "association references absent class `{class}`")
            }
            Violation::DuplicateAssociation { source, target } => {
                write!(f, "duplicate association between `{source}` and `{target}`")
            }
        }
    }
}

/// Accepted (or proposed) additions to a class diagram.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSuggestionSet {
    #[serde(default)]
    pub classes: Vec<Scored<Identifier>>,
    #[serde(default)]
    pub associations: Vec<Scored<Association>>,
    #[serde(default)]
    pub attributes: Vec<Scored<AttributeSuggestion>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSuggestion {
    pub class: Identifier,
    pub attribute: Identifier,
}

/// An item together with its cross-prompt frequency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scored<T> {
    pub item: T,
    #[serde(default = "one")]
    pub frequency: u32,
}

fn one() -> u32 {
    1
}

impl<T> Scored<T> {
    pub fn new(item: T, frequency: u32) -> Self {
        Self { item, frequency }
    }
}

impl ClassSuggestionSet {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.associations.is_empty() && self.attributes.is_empty()
    }

    pub fn class_names(&self) -> Vec<&Identifier> {
        self.classes.iter().map(|s| &s.item).collect()
    }
}

impl ClassDiagram {
    pub fn new(package_name: Identifier) -> Self {
        Self {
            package_name,
            classes: Vec::new(),
            associations: Vec::new(),
        }
    }

    pub fn class(&self, name: &Identifier) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| &c.name == name)
    }

    fn class_mut(&mut self, name: &Identifier) -> Option<&mut ClassDecl> {
        self.classes.iter_mut().find(|c| &c.name == name)
    }

    pub fn has_class(&self, name: &Identifier) -> bool {
        self.class(name).is_some()
    }

    pub fn has_association(&self, pair: &Association) -> bool {
        self.associations.iter().any(|a| a.same_pair(pair))
    }

    pub fn class_names(&self) -> Vec<&Identifier> {
        self.classes.iter().map(|c| &c.name).collect()
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    /// Diagram restricted to `keep` classes, with every association among them.
    pub fn induced(&self, keep: &HashSet<Identifier>) -> ClassDiagram {
        ClassDiagram {
            package_name: self.package_name.clone(),
            classes: self
                .classes
                .iter()
                .filter(|c| keep.contains(&c.name))
                .cloned()
                .collect(),
            associations: self
                .associations
                .iter()
                .filter(|a| keep.contains(&a.source) && keep.contains(&a.target))
                .cloned()
                .collect(),
        }
    }
}

pub fn validate(diagram: &ClassDiagram) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for class in &diagram.classes {
        if !seen.insert(&class.name) {
            violations.push(Violation::DuplicateClass {
                class: class.name.normalized().to_string(),
            });
        }
        let mut attrs = HashSet::new();
        for attr in &class.attributes {
            if !attrs.insert(attr) {
                violations.push(Violation::DuplicateAttribute {
                    class: class.name.normalized().to_string(),
                    attribute: attr.normalized().to_string(),
                });
            }
        }
    }

    let mut pairs = HashSet::new();
    for assoc in &diagram.associations {
        for end in [&assoc.source, &assoc.target] {
            if !seen.contains(end) {
                let v = Violation::DanglingAssociation {
                    class: end.normalized().to_string(),
                };
                if !violations.contains(&v) {
                    violations.push(v);
                }
            }
        }
        let (a, b) = assoc.endpoints();
        if !pairs.insert((a.clone(), b.clone(), assoc.name.clone())) {
            violations.push(Violation::DuplicateAssociation {
                source: a.normalized().to_string(),
                target: b.normalized().to_string(),
            });
        }
    }
    violations
}

/// Adds accepted elements to `diagram`, skipping anything already present.
///
/// Association endpoints that are neither in the diagram nor among the
/// accepted classes are added as classes, so the result stays valid.
/// Accepting a name for an existing unnamed association names it.
pub fn merge_suggestions(diagram: &ClassDiagram, accepted: &ClassSuggestionSet) -> ClassDiagram {
    let mut merged = diagram.clone();
    for class in &accepted.classes {
        if !merged.has_class(&class.item) {
            merged.classes.push(ClassDecl::new(class.item.clone()));
        }
    }
    for assoc in &accepted.associations {
        let assoc = &assoc.item;
        for end in [&assoc.source, &assoc.target] {
            if !merged.has_class(end) {
                merged.classes.push(ClassDecl::new(end.clone()));
            }
        }
        let existing = merged
            .associations
            .iter_mut()
            .filter(|a| a.same_pair(assoc))
            .collect::<Vec<_>>();
        match (&assoc.name, existing.is_empty()) {
            (_, true) => merged.associations.push(assoc.clone()),
            (None, false) => {}
            (Some(name), false) => {
                if existing.iter().any(|a| a.name.as_ref() == Some(name)) {
                    continue;
                }
                if let Some(unnamed) = existing.into_iter().find(|a| a.name.is_none()) {
                    unnamed.name = Some(name.clone());
                } else {
                    merged.associations.push(assoc.clone());
                }
            }
        }
    }
    for attr in &accepted.attributes {
        if let Some(class) = merged.class_mut(&attr.item.class) {
            if !class.has_attribute(&attr.item.attribute) {
                class.attributes.push(attr.item.attribute.clone());
            }
        }
    }
    merged
}
