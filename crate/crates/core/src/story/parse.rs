use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Segments, Span};

/// Whether the `so that <benefit>` clause is mandatory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatMode {
    #[default]
    Strict,
    Lenient,
}

impl FormatMode {
    pub fn from_strict(strict: bool) -> Self {
        if strict {
            Self::Strict
        } else {
            Self::Lenient
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedStory {
    pub role: String,
    pub goal: String,
    pub benefit: Option<String>,
    pub segments: Segments,
}

/// Rejected story text. The original text is kept verbatim so a client can put
/// it back into the entry box.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{reason}: {text:?}")]
pub struct FormatError {
    pub text: String,
    pub reason: String,
}

impl FormatError {
    fn new(text: &str, reason: impl Into<String>) -> Self {
        Self {
            text: text.to_owned(),
            reason: reason.into(),
        }
    }
}

const HEAD: &str = r"(?is)^\s*as\s+an?\s+(?P<role>.+?)\s*,\s*i\s+want\s+(?:to\s+)?(?P<goal>.+?)";
const TAIL: &str = r"[\s.!]*$";

static STRICT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"{HEAD}\s*,?\s+so\s+that\s+(?P<benefit>.+?){TAIL}")).expect("strict story pattern")
});

static LENIENT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"{HEAD}(?:\s*,?\s+so\s+that\s+(?P<benefit>.+?))?{TAIL}")).expect("lenient story pattern")
});

/// Parses `As a[n] <role>, I want [to] <goal>[,] so that <benefit>`.
///
/// Keywords are matched case-insensitively; the captured segments keep their
/// original casing. Trailing sentence punctuation is not part of any segment.
pub fn parse_user_story(text: &str, mode: FormatMode) -> Result<ParsedStory, FormatError> {
    if text.trim().is_empty() {
        return Err(FormatError::new(text, "empty story"));
    }
    let pattern = match mode {
        FormatMode::Strict => &*STRICT,
        FormatMode::Lenient => &*LENIENT,
    };
    let Some(caps) = pattern.captures(text) else {
        let reason = match mode {
            FormatMode::Strict => "expected `As a <role>, I want <goal> so that <benefit>`",
            FormatMode::Lenient => "expected `As a <role>, I want <goal>`",
        };
        return Err(FormatError::new(text, reason));
    };

    let role = trimmed_span(&caps, "role").ok_or_else(|| FormatError::new(text, "empty role"))?;
    let goal = trimmed_span(&caps, "goal").ok_or_else(|| FormatError::new(text, "empty goal"))?;
    let benefit = match caps.name("benefit") {
        Some(_) => Some(trimmed_span(&caps, "benefit").ok_or_else(|| FormatError::new(text, "empty benefit"))?),
        None => None,
    };

    Ok(ParsedStory {
        role: role.slice(text).to_owned(),
        goal: goal.slice(text).to_owned(),
        benefit: benefit.map(|s| s.slice(text).to_owned()),
        segments: Segments { role, goal, benefit },
    })
}

/// Span of a capture with surrounding whitespace and punctuation removed, or
/// `None` if nothing alphanumeric is left.
fn trimmed_span(caps: &Captures<'_>, name: &str) -> Option<Span> {
    let m = caps.name(name)?;
    let s = m.as_str();
    let is_edge = |c: char| c.is_whitespace() || (c.is_ascii_punctuation() && c != '\'' && c != '"');
    let trimmed_start = s.len() - s.trim_start_matches(is_edge).len();
    let inner = s.trim_matches(is_edge);
    if !inner.chars().any(char::is_alphanumeric) {
        return None;
    }
    let start = m.start() + trimmed_start;
    Some(Span::new(start, start + inner.len()))
}
