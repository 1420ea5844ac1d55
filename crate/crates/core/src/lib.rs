//! Concept extraction and completeness analysis for collaboratively written
//! user stories.
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`story`] parses `As a <role>, I want <goal> so that <benefit>` sentences
//!    and owns the story/project data model together with JSON and CSV
//!    import/export.
//! 2. [`nlp`] tokenizes, tags and lemmatizes stories, chunks noun phrases,
//!    groups them by substring containment and detects CRUD verbs.
//! 3. [`embedding`] embeds cluster representatives, builds the cosine
//!    similarity matrix and pairs related terms into a [`embedding::ConceptMapping`].
//! 4. [`graph`] commits mappings into versioned per-user and per-project
//!    concept graphs and answers traversal queries over the active version.
//! 5. [`suggest`] runs the quality and completeness heuristics over those
//!    graphs.
//! 6. [`metrics`] computes project-level graph metrics and the Mann-Whitney U
//!    test.
//!
//! [`pipeline`] wires the stages together for a single suggestion request.

pub mod embedding;
pub mod graph;
pub mod ids;
pub mod metrics;
pub mod nlp;
pub mod pipeline;
pub mod story;
pub mod suggest;

pub use ids::{ProjectId, StoryId, UserId};
