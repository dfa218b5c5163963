//! Typed partial and complete models plus their `.mcj` persistence.

mod activity;
mod class;
mod identifier;
mod persist;

pub use activity::{ActivityModel, Completion, Label, Step};
pub use class::{
    merge_suggestions, validate, Association, AttributeSuggestion, ClassDecl, ClassDiagram,
    ClassSuggestionSet, Scored, Violation,
};
pub use identifier::{normalize_identifier, Identifier};
pub use persist::{load_activity, load_class_diagram, load_model, save_model, Model};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("identifier `{0}` is empty after normalization")]
    EmptyIdentifier(String),
    #[error("malformed document at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("schema violation in `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error("invalid activity model: {0}")]
    InvalidActivity(String),
}
