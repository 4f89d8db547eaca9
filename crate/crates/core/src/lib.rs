pub mod corpus;
pub mod llm;
pub mod met;
pub mod metrics;
pub mod patch;
pub mod pipeline;
pub mod prompt;
pub mod rules;
pub mod syntax;
pub mod taxonomy;
pub mod templates;
