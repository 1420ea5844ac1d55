use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{parse_user_story, FormatError, FormatMode, StoryError, StoryStore, UserStory};
use crate::ids::{ProjectId, StoryId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoryFormat {
    Json,
    Csv,
}

impl FromStr for StoryFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unsupported story format {other:?}")),
        }
    }
}

/// Container-level import failure. Row-level problems are reported in
/// [`ImportReport::errors`] instead.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImportError {
    #[error("empty payload")]
    Empty,
    #[error("malformed {format:?} payload: {message}")]
    Malformed { format: StoryFormat, message: String },
    #[error("csv header has no `text` column")]
    MissingTextColumn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based data row (the CSV header is not counted).
    pub row: usize,
    pub error: FormatError,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub stories: Vec<UserStory>,
    pub errors: Vec<RowError>,
}

/// One exported story. Field names are part of the JSON/CSV contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExportRecord {
    id: String,
    project: String,
    author: String,
    text: String,
    created_at: String,
}

const CSV_HEADER: [&str; 5] = ["id", "project", "author", "text", "created_at"];

/// Parses a JSON or CSV payload into stories stamped with `project_id`,
/// `author_id` and `at`. Ids come from `next_id`. Nothing is persisted here;
/// see [`StoryStore::import`].
pub fn import_stories(
    payload: &[u8],
    format: StoryFormat,
    project_id: &ProjectId,
    author_id: &UserId,
    at: DateTime<Utc>,
    mode: FormatMode,
    mut next_id: impl FnMut() -> StoryId,
) -> Result<ImportReport, ImportError> {
    if payload.iter().all(u8::is_ascii_whitespace) {
        return Err(ImportError::Empty);
    }
    let rows = match format {
        StoryFormat::Json => json_rows(payload)?,
        StoryFormat::Csv => csv_rows(payload)?,
    };
    let mut report = ImportReport::default();
    for (i, row) in rows.into_iter().enumerate() {
        let parsed = row.and_then(|text| parse_user_story(&text, mode).map(|p| (text, p)));
        match parsed {
            Ok((text, p)) => report.stories.push(UserStory::from_parsed(
                next_id(),
                project_id.clone(),
                author_id.clone(),
                &text,
                p,
                at,
            )),
            Err(error) => report.errors.push(RowError { row: i + 1, error }),
        }
    }
    Ok(report)
}

fn json_rows(payload: &[u8]) -> Result<Vec<Result<String, FormatError>>, ImportError> {
    let malformed = |message: String| ImportError::Malformed { format: StoryFormat::Json, message };
    let value: Value = serde_json::from_slice(payload).map_err(|e| malformed(e.to_string()))?;
    let Value::Array(items) = value else {
        return Err(malformed("expected a top-level array".into()));
    };
    Ok(items
        .into_iter()
        .map(|item| match item {
            Value::String(text) => Ok(text),
            Value::Object(mut obj) => match obj.remove("text") {
                Some(Value::String(text)) => Ok(text),
                other => Err(FormatError {
                    text: other.map(|v| v.to_string()).unwrap_or_default(),
                    reason: "row has no string `text` field".into(),
                }),
            },
            other => Err(FormatError {
                text: other.to_string(),
                reason: "row is neither an object nor a string".into(),
            }),
        })
        .collect())
}

fn csv_rows(payload: &[u8]) -> Result<Vec<Result<String, FormatError>>, ImportError> {
    let malformed = |message: String| ImportError::Malformed { format: StoryFormat::Csv, message };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(payload);
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    let text_col = headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case("text"))
        .ok_or(ImportError::MissingTextColumn)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        rows.push(match record.get(text_col) {
            Some(text) => Ok(text.to_owned()),
            None => Err(FormatError {
                text: record.iter().collect::<Vec<_>>().join(","),
                reason: "row has no `text` field".into(),
            }),
        });
    }
    Ok(rows)
}

/// Serializes the non-deleted stories of a project (optionally a single
/// author's) in creation order.
pub fn export_stories(
    store: &StoryStore,
    project_id: &ProjectId,
    author_id: Option<&UserId>,
    format: StoryFormat,
    include_deleted: bool,
) -> Result<Vec<u8>, StoryError> {
    if store.project(project_id).is_none() {
        return Err(StoryError::UnknownProject(project_id.clone()));
    }
    let records: Vec<ExportRecord> = store
        .stories(project_id, author_id, include_deleted)
        .into_iter()
        .map(|s| ExportRecord {
            id: s.id.to_string(),
            project: s.project_id.to_string(),
            author: s.author_id.to_string(),
            text: s.raw_text.clone(),
            created_at: s.created_at.to_rfc3339_opts(SecondsFormat::Millis, true),
        })
        .collect();
    Ok(match format {
        StoryFormat::Json => serde_json::to_vec(&records).expect("records serialize"),
        StoryFormat::Csv => {
            let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            writer.write_record(CSV_HEADER).expect("in-memory write");
            for r in &records {
                writer.serialize(r).expect("in-memory write");
            }
            writer.into_inner().expect("in-memory flush")
        }
    })
}

impl StoryStore {
    /// Imports a payload and persists every valid row; invalid rows are
    /// reported back. Stories are inserted only if the author is a member.
    #[allow(clippy::too_many_arguments)]
    pub fn import(
        &mut self,
        payload: &[u8],
        format: StoryFormat,
        project_id: &ProjectId,
        author_id: &UserId,
        at: DateTime<Utc>,
        mode: FormatMode,
        next_id: impl FnMut() -> StoryId,
    ) -> Result<ImportReport, ImportOrStoryError> {
        self.require_member(project_id, author_id)?;
        let report = import_stories(payload, format, project_id, author_id, at, mode, next_id)?;
        for story in &report.stories {
            self.insert_story(story.clone())?;
        }
        Ok(report)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImportOrStoryError {
    #[error(transparent)]
    Import(#[from] ImportError),
    #[error(transparent)]
    Story(#[from] StoryError),
}
