//! Quality and completeness suggestions over concept graphs, plus the
//! dislike feedback attached to them.

mod completeness;
mod quality;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{DEFAULT_MAX_DEPTH, DEFAULT_TOP_N};
use crate::ids::{ProjectId, StoryId, UserId};
use crate::nlp::CrudCategory;

pub use completeness::completeness_suggestions;
pub use quality::quality_suggestions;

/// Most concepts listed in one suggestion.
pub const MAX_CONCEPTS: usize = 5;
/// Most suggestions emitted per kind.
pub const MAX_PER_KIND: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SuggestionCategory {
    Quality,
    Completeness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SuggestionKind {
    Isolated,
    NonAtomic,
    Crud,
    CloseToCompleteness,
    PopZero,
    PopOne,
    PopTwo,
    PopThree,
    FeelingLucky,
    AllIsWell,
}

impl SuggestionKind {
    pub fn category(self) -> SuggestionCategory {
        match self {
            Self::Isolated | Self::NonAtomic | Self::Crud => SuggestionCategory::Quality,
            _ => SuggestionCategory::Completeness,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Self::Isolated => "ISOLATED",
            Self::NonAtomic => "NON_ATOMIC",
            Self::Crud => "CRUD",
            Self::CloseToCompleteness => "CLOSE_TO_COMPLETENESS",
            Self::PopZero => "POP_ZERO",
            Self::PopOne => "POP_ONE",
            Self::PopTwo => "POP_TWO",
            Self::PopThree => "POP_THREE",
            Self::FeelingLucky => "FEELING_LUCKY",
            Self::AllIsWell => "ALL_IS_WELL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StoryRef {
    pub story_id: StoryId,
    pub span_start: usize,
    pub span_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Suggestion {
    pub id: String,
    pub category: SuggestionCategory,
    pub kind: SuggestionKind,
    pub message: String,
    pub concepts: Vec<String>,
    pub story_refs: Vec<StoryRef>,
    pub missing_crud: Vec<CrudCategory>,
    pub hidden: bool,
}

impl Suggestion {
    /// Builds a suggestion whose id is a digest of everything but the
    /// message and the hidden flag, so regenerating the same advice keeps
    /// its id and its feedback.
    pub fn new(
        ctx: &SuggestionContext,
        kind: SuggestionKind,
        message: String,
        concepts: Vec<String>,
        story_refs: Vec<StoryRef>,
        missing_crud: Vec<CrudCategory>,
    ) -> Self {
        let mut h = Sha256::new();
        for part in [ctx.project.as_str(), ctx.user.as_str(), kind.tag()] {
            h.update(part.as_bytes());
            h.update([0x1f]);
        }
        for c in &concepts {
            h.update(c.as_bytes());
            h.update([0x1e]);
        }
        for r in &story_refs {
            h.update(format!("{}:{}:{}", r.story_id, r.span_start, r.span_end).as_bytes());
            h.update([0x1e]);
        }
        for c in &missing_crud {
            h.update(c.to_string().as_bytes());
        }
        let id = hex::encode(&h.finalize()[..12]);
        Self {
            id,
            category: kind.category(),
            kind,
            message,
            concepts,
            story_refs,
            missing_crud,
            hidden: false,
        }
    }
}

/// Who is asking and how far the graph comparison looks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuggestionContext {
    pub project: ProjectId,
    pub user: UserId,
    pub top_n: usize,
    pub max_depth: usize,
}

impl SuggestionContext {
    pub fn new(project: impl Into<ProjectId>, user: impl Into<UserId>) -> Self {
        Self {
            project: project.into(),
            user: user.into(),
            top_n: DEFAULT_TOP_N,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionSet {
    pub quality: Vec<Suggestion>,
    pub completeness: Vec<Suggestion>,
    /// Set when completeness could not be assessed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
}

impl SuggestionSet {
    pub fn all(&self) -> impl Iterator<Item = &Suggestion> {
        self.quality.iter().chain(&self.completeness)
    }

    fn all_mut(&mut self) -> impl Iterator<Item = &mut Suggestion> {
        self.quality.iter_mut().chain(self.completeness.iter_mut())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionFeedback {
    pub suggestion_id: String,
    pub user_id: UserId,
    pub disliked: bool,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SuggestError {
    #[error("unknown suggestion {0}")]
    UnknownSuggestion(String),
}

/// Issued suggestions and one feedback record per (suggestion, user).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionBook {
    issued: BTreeMap<String, Suggestion>,
    feedback: Vec<SuggestionFeedback>,
}

impl SuggestionBook {
    pub fn issue(&mut self, set: &SuggestionSet) {
        for s in set.all() {
            self.issued.insert(s.id.clone(), s.clone());
        }
    }

    pub fn get(&self, id: &str) -> Option<&Suggestion> {
        self.issued.get(id)
    }

    pub fn record_feedback(
        &mut self,
        suggestion_id: &str,
        user_id: &UserId,
        disliked: bool,
        at: DateTime<Utc>,
    ) -> Result<SuggestionFeedback, SuggestError> {
        if !self.issued.contains_key(suggestion_id) {
            return Err(SuggestError::UnknownSuggestion(suggestion_id.to_owned()));
        }
        let record = SuggestionFeedback {
            suggestion_id: suggestion_id.to_owned(),
            user_id: user_id.clone(),
            disliked,
            at,
        };
        match self
            .feedback
            .iter_mut()
            .find(|f| f.suggestion_id == suggestion_id && f.user_id == *user_id)
        {
            Some(existing) => *existing = record.clone(),
            None => self.feedback.push(record.clone()),
        }
        Ok(record)
    }

    pub fn feedback(&self) -> &[SuggestionFeedback] {
        &self.feedback
    }

    pub fn is_disliked(&self, suggestion_id: &str, user_id: &UserId) -> bool {
        self.feedback
            .iter()
            .any(|f| f.suggestion_id == suggestion_id && f.user_id == *user_id && f.disliked)
    }

    /// Marks `user`'s disliked suggestions hidden and, unless
    /// `include_hidden`, removes them.
    pub fn present(&self, mut set: SuggestionSet, user: &UserId, include_hidden: bool) -> SuggestionSet {
        for s in set.all_mut() {
            s.hidden = self.is_disliked(&s.id, user);
        }
        if !include_hidden {
            set.quality.retain(|s| !s.hidden);
            set.completeness.retain(|s| !s.hidden);
        }
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set() -> SuggestionSet {
        let ctx = SuggestionContext::new("p", "u");
        SuggestionSet {
            quality: vec![Suggestion::new(&ctx, SuggestionKind::Isolated, "m".into(), vec!["table".into()], vec![], vec![])],
            completeness: vec![],
            notice: None,
        }
    }

    #[test]
    fn ids_ignore_message_text() {
        let ctx = SuggestionContext::new("p", "u");
        let a = Suggestion::new(&ctx, SuggestionKind::PopZero, "one".into(), vec!["x".into()], vec![], vec![]);
        let b = Suggestion::new(&ctx, SuggestionKind::PopZero, "two".into(), vec!["x".into()], vec![], vec![]);
        let c = Suggestion::new(&ctx, SuggestionKind::PopOne, "one".into(), vec!["x".into()], vec![], vec![]);
        assert_eq!(a.id, b.id);
        assert_ne!(a.id, c.id);
        assert_eq!(c.category, SuggestionCategory::Completeness);
    }

    #[test]
    fn dislike_hides_or_filters() {
        let mut book = SuggestionBook::default();
        let s = set();
        book.issue(&s);
        let id = s.quality[0].id.clone();
        let u = UserId::from("u");
        book.record_feedback(&id, &u, true, Utc::now()).unwrap();
        book.record_feedback(&id, &u, true, Utc::now()).unwrap();
        assert_eq!(book.feedback().len(), 1);
        let shown = book.present(s.clone(), &u, true);
        assert!(shown.quality[0].hidden);
        assert!(book.present(s.clone(), &u, false).quality.is_empty());
        assert!(!book.present(s.clone(), &UserId::from("other"), false).quality.is_empty());
        book.record_feedback(&id, &u, false, Utc::now()).unwrap();
        assert!(!book.present(s, &u, true).quality[0].hidden);
        assert_eq!(
            book.record_feedback("nope", &u, true, Utc::now()),
            Err(SuggestError::UnknownSuggestion("nope".into()))
        );
    }

    #[test]
    fn payload_shape() {
        let v = serde_json::to_value(&set().quality[0]).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["category", "concepts", "hidden", "id", "kind", "message", "missingCrud", "storyRefs"]);
        assert_eq!(v["kind"], "ISOLATED");
        assert_eq!(v["category"], "QUALITY");
    }
}
