pub mod model;
pub mod parse;
pub mod prompt;
pub mod provider;
pub mod rank;
pub mod service;
pub mod eval;
