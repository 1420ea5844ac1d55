//! User-story data model, format validation and import/export.

mod io;
mod parse;
mod store;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{ProjectId, StoryId, UserId};

pub use io::{export_stories, import_stories, ImportError, ImportOrStoryError, ImportReport, RowError, StoryFormat};
pub use parse::{parse_user_story, FormatError, FormatMode, ParsedStory};
pub use store::{StoryError, StoryStore};

/// Half-open byte range `[start, end)` into a story's raw text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

/// Byte ranges of the three template segments inside `raw_text`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segments {
    pub role: Span,
    pub goal: Span,
    pub benefit: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserStory {
    pub id: StoryId,
    pub project_id: ProjectId,
    pub author_id: UserId,
    pub raw_text: String,
    pub role: String,
    pub goal: String,
    pub benefit: Option<String>,
    pub segments: Segments,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    #[serde(default)]
    pub deleted: bool,
}

impl UserStory {
    /// Parses `text` and builds a fresh, non-deleted story stamped with the
    /// given ownership and time information.
    pub fn create(
        id: StoryId,
        project_id: ProjectId,
        author_id: UserId,
        text: &str,
        at: DateTime<Utc>,
        mode: FormatMode,
    ) -> Result<Self, FormatError> {
        let parsed = parse_user_story(text, mode)?;
        Ok(Self::from_parsed(id, project_id, author_id, text, parsed, at))
    }

    pub fn from_parsed(
        id: StoryId,
        project_id: ProjectId,
        author_id: UserId,
        text: &str,
        parsed: ParsedStory,
        at: DateTime<Utc>,
    ) -> Self {
        Self {
            id,
            project_id,
            author_id,
            raw_text: text.to_owned(),
            role: parsed.role,
            goal: parsed.goal,
            benefit: parsed.benefit,
            segments: parsed.segments,
            created_at: at,
            updated_at: at,
            deleted: false,
        }
    }

    /// Replaces the text in place. The story keeps its id and creation time.
    pub fn retext(&mut self, text: &str, at: DateTime<Utc>, mode: FormatMode) -> Result<(), FormatError> {
        let parsed = parse_user_story(text, mode)?;
        self.raw_text = text.to_owned();
        self.role = parsed.role;
        self.goal = parsed.goal;
        self.benefit = parsed.benefit;
        self.segments = parsed.segments;
        self.updated_at = at;
        Ok(())
    }

    /// Segment spans in document order: role, goal and (if present) benefit.
    pub fn segment_spans(&self) -> impl Iterator<Item = (SegmentKind, Span)> + '_ {
        [
            Some((SegmentKind::Role, self.segments.role)),
            Some((SegmentKind::Goal, self.segments.goal)),
            self.segments.benefit.map(|s| (SegmentKind::Benefit, s)),
        ]
        .into_iter()
        .flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Role,
    Goal,
    Benefit,
}

/// A team workspace. The scenario text is fixed when the project is created.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: ProjectId,
    pub name: String,
    pub scenario_text: String,
    pub member_ids: BTreeSet<UserId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stakeholder {
    pub id: UserId,
    pub display_name: String,
}
