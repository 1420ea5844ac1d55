use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{tokenize_story, NlpResources, PosTag, Token};
use crate::ids::StoryId;
use crate::story::{SegmentKind, Span, UserStory};

/// Finds noun chunks in a tagged token sequence.
pub trait Chunker: Send + Sync {
    /// Non-overlapping token ranges, in order.
    fn chunk(&self, tokens: &[Token]) -> Vec<Range<usize>>;
}

/// Greedy longest-match chunker for
///
/// ```text
/// nominal := ADJ ((and|or)? ADJ)* NOUN+ | NOUN+
/// np      := DET? nominal (PREP DET? nominal)*
/// chunk   := np ((and|or) DET? np)*
/// ```
///
/// Chunks never cross punctuation.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleChunker;

impl Chunker for RuleChunker {
    fn chunk(&self, tokens: &[Token]) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            match coordination(tokens, i) {
                Some(end) => {
                    out.push(i..end);
                    i = end;
                }
                None => i += 1,
            }
        }
        out
    }
}

fn is(tokens: &[Token], i: usize, tag: PosTag) -> bool {
    tokens.get(i).is_some_and(|t| t.pos == tag)
}

/// Whether token `i` continues the chunk that ends at `i - 1`.
fn joins(tokens: &[Token], i: usize) -> bool {
    tokens.get(i).is_some_and(|t| !t.after_break)
}

fn is_coordinator(tokens: &[Token], i: usize) -> bool {
    is(tokens, i, PosTag::Conj) && matches!(tokens[i].lower().as_str(), "and" | "or")
}

fn nominal(tokens: &[Token], start: usize) -> Option<usize> {
    let mut j = start;
    if is(tokens, j, PosTag::Adj) {
        j += 1;
        loop {
            if joins(tokens, j) && is(tokens, j, PosTag::Adj) {
                j += 1;
            } else if joins(tokens, j) && is_coordinator(tokens, j) && joins(tokens, j + 1) && is(tokens, j + 1, PosTag::Adj) {
                j += 2;
            } else {
                break;
            }
        }
        if !(joins(tokens, j) && is(tokens, j, PosTag::Noun)) {
            return None;
        }
    } else if !is(tokens, j, PosTag::Noun) {
        return None;
    }
    j += 1;
    while joins(tokens, j) && is(tokens, j, PosTag::Noun) {
        j += 1;
    }
    Some(j)
}

/// `DET? nominal` starting at `start`, where `start` must not be separated
/// from its left context when `attached`.
fn determined(tokens: &[Token], start: usize, attached: bool) -> Option<usize> {
    if attached && !joins(tokens, start) {
        return None;
    }
    if is(tokens, start, PosTag::Det) {
        if !joins(tokens, start + 1) {
            return None;
        }
        nominal(tokens, start + 1)
    } else {
        nominal(tokens, start)
    }
}

fn noun_phrase(tokens: &[Token], start: usize, attached: bool) -> Option<usize> {
    let mut end = determined(tokens, start, attached)?;
    while joins(tokens, end) && is(tokens, end, PosTag::Prep) {
        match determined(tokens, end + 1, true) {
            Some(e) => end = e,
            None => break,
        }
    }
    Some(end)
}

fn coordination(tokens: &[Token], start: usize) -> Option<usize> {
    let mut end = noun_phrase(tokens, start, false)?;
    while joins(tokens, end) && is_coordinator(tokens, end) {
        match noun_phrase(tokens, end + 1, true) {
            Some(e) => end = e,
            None => break,
        }
    }
    Some(end)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounPhrase {
    /// Lower-cased words of the chunk without determiners.
    pub text: String,
    /// Chunk tokens without determiners.
    pub tokens: Vec<Token>,
    pub story_id: StoryId,
    pub segment: SegmentKind,
    /// Byte range in the story's raw text, first to last kept token.
    pub span: Span,
}

impl NounPhrase {
    fn from_chunk(tokens: &[Token], story_id: &StoryId, segment: SegmentKind) -> Option<Self> {
        let kept: Vec<Token> = tokens.iter().filter(|t| t.pos != PosTag::Det).cloned().collect();
        if kept.is_empty() || kept.iter().all(|t| t.pos == PosTag::Pron) {
            return None;
        }
        let text = kept.iter().map(Token::lower).collect::<Vec<_>>().join(" ");
        let span = Span::new(kept[0].span.start, kept[kept.len() - 1].span.end);
        Some(Self {
            text,
            tokens: kept,
            story_id: story_id.clone(),
            segment,
            span,
        })
    }

    /// Lemma key used to group inflected variants (`profiles` → `profile`).
    pub fn lemma_key(&self) -> String {
        self.tokens.iter().map(|t| t.lemma.as_str()).collect::<Vec<_>>().join(" ")
    }

    pub fn contains_coordinator(&self) -> bool {
        self.tokens
            .iter()
            .any(|t| t.pos == PosTag::Conj && matches!(t.lower().as_str(), "and" | "or"))
    }
}

/// Tokens and noun phrases of one story segment.
#[derive(Debug, Clone)]
pub struct SegmentAnalysis {
    pub kind: SegmentKind,
    pub tokens: Vec<Token>,
    /// Each phrase with the token range of the chunk it came from.
    pub phrases: Vec<(Range<usize>, NounPhrase)>,
}

#[derive(Debug, Clone)]
pub struct StoryAnalysis {
    pub story_id: StoryId,
    pub segments: Vec<SegmentAnalysis>,
}

impl StoryAnalysis {
    pub fn new(story: &UserStory, resources: &NlpResources, chunker: &dyn Chunker) -> Self {
        let segments = tokenize_story(resources, story)
            .map(|(kind, tokens)| {
                let phrases = chunker
                    .chunk(&tokens)
                    .into_iter()
                    .filter_map(|r| NounPhrase::from_chunk(&tokens[r.clone()], &story.id, kind).map(|p| (r, p)))
                    .collect();
                SegmentAnalysis { kind, tokens, phrases }
            })
            .collect();
        Self {
            story_id: story.id.clone(),
            segments,
        }
    }

    pub fn noun_phrases(&self) -> impl Iterator<Item = &NounPhrase> {
        self.segments.iter().flat_map(|s| s.phrases.iter().map(|(_, p)| p))
    }

    pub fn segment(&self, kind: SegmentKind) -> Option<&SegmentAnalysis> {
        self.segments.iter().find(|s| s.kind == kind)
    }
}

/// Noun phrases from the role, goal and benefit of `story`, using the builtin
/// resources and [`RuleChunker`].
pub fn extract_noun_phrases(story: &UserStory) -> Vec<NounPhrase> {
    StoryAnalysis::new(story, NlpResources::builtin(), &RuleChunker)
        .noun_phrases()
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use chrono::Utc;
    use proptest::prelude::*;

    use super::*;
    use crate::nlp::normalize_phrase;
    use crate::story::FormatMode;

    fn story(text: &str) -> UserStory {
        UserStory::create("s".into(), "p".into(), "u".into(), text, Utc::now(), FormatMode::Lenient).unwrap()
    }

    fn goal_phrases(goal: &str) -> Vec<String> {
        let st = story(&format!("As a user, I want to {goal}"));
        extract_noun_phrases(&st)
            .into_iter()
            .filter(|p| p.segment == SegmentKind::Goal)
            .map(|p| p.text)
            .collect()
    }

    #[test]
    fn goal_examples() {
        assert_eq!(goal_phrases("change the item label size"), ["item label size"]);
        assert_eq!(goal_phrases("see shipping offers"), ["shipping offers"]);
        assert!(goal_phrases("do it").is_empty());
    }

    #[test]
    fn prepositional_and_coordinated_phrases() {
        assert_eq!(goal_phrases("see the price of the item"), ["price of item"]);
        assert_eq!(goal_phrases("invite users and admins"), ["users and admins"]);
        assert_eq!(goal_phrases("list new and old books"), ["new and old books"]);
        assert_eq!(goal_phrases("create and delete accounts"), ["accounts"]);
        assert_eq!(goal_phrases("sort items, labels"), ["items", "labels"]);
    }

    #[test]
    fn all_segments_contribute() {
        let st = story("As a user, I want to view my profile so that I can keep track of my progress.");
        let texts: Vec<String> = extract_noun_phrases(&st).into_iter().map(|p| p.text).collect();
        assert_eq!(texts, ["user", "profile", "track of progress"]);
    }

    fn story_text() -> impl Strategy<Value = String> {
        let words = prop::sample::select(vec![
            "the", "a", "my", "new", "old", "item", "items", "label", "menu", "price", "of", "for", "and", "or",
            "view", "add", "delete", "books", "user", "it", "I", "can", "see", "shipping", "offers", "big", ",",
        ]);
        (
            prop::collection::vec(words.clone(), 1..8),
            prop::collection::vec(words, 1..8),
        )
            .prop_map(|(g, b)| format!("As a member, I want to {} so that {}.", g.join(" "), b.join(" ")))
    }

    proptest! {
        #[test]
        fn span_slices_normalize_to_phrase_text(text in story_text()) {
            if let Ok(st) = UserStory::create("s".into(), "p".into(), "u".into(), &text, Utc::now(), FormatMode::Strict) {
                for p in extract_noun_phrases(&st) {
                    prop_assert!(!p.text.is_empty());
                    prop_assert_eq!(normalize_phrase(p.span.slice(&st.raw_text)), p.text);
                }
            }
        }
    }
}
