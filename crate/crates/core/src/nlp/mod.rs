//! Pre-processing, noun-phrase extraction, substring clustering and CRUD
//! verb detection.
//!
//! Everything here is a pure function of its inputs and the loaded
//! [`NlpResources`].

mod chunk;
mod cluster;
mod crud;
mod lexicon;

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::story::{SegmentKind, Span, UserStory};

pub use chunk::{extract_noun_phrases, Chunker, NounPhrase, RuleChunker, StoryAnalysis};
pub use cluster::{cluster_substrings, cluster_texts, is_contiguous_subsequence, PhraseCluster};
pub use crud::{extract_crud_mentions, CrudCategory, CrudGlossary, CrudMention, GlossaryError};
pub use lexicon::{Lemmatizer, PosLexicon, PosTag};

const BUILTIN_LEXICON: &str = include_str!("../../data/pos_lexicon.tsv");
const BUILTIN_LEMMAS: &str = include_str!("../../data/lemma_exceptions.tsv");
const BUILTIN_GLOSSARY: &str = include_str!("../../data/crud_glossary.txt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResourceError {
    #[error("{resource} line {line}: {message}")]
    Syntax {
        resource: &'static str,
        line: usize,
        message: String,
    },
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
}

impl ResourceError {
    fn syntax(resource: &'static str, line: usize, message: impl Into<String>) -> Self {
        Self::Syntax {
            resource,
            line,
            message: message.into(),
        }
    }
}

/// Lexical data used by the tagger, lemmatizer and CRUD detector.
#[derive(Debug, Clone)]
pub struct NlpResources {
    pub lexicon: PosLexicon,
    pub lemmatizer: Lemmatizer,
    pub glossary: CrudGlossary,
}

static BUILTIN: LazyLock<NlpResources> = LazyLock::new(|| NlpResources {
    lexicon: PosLexicon::parse(BUILTIN_LEXICON).expect("builtin lexicon"),
    lemmatizer: Lemmatizer::parse(BUILTIN_LEMMAS).expect("builtin lemma table"),
    glossary: CrudGlossary::parse(BUILTIN_GLOSSARY).expect("builtin glossary"),
});

impl NlpResources {
    /// The data files shipped in `data/`.
    pub fn builtin() -> &'static NlpResources {
        &BUILTIN
    }

    /// Loads any of the three files from disk, falling back to the builtin
    /// copy for those not given.
    pub fn load(
        lexicon: Option<&std::path::Path>,
        lemmas: Option<&std::path::Path>,
        glossary: Option<&std::path::Path>,
    ) -> Result<Self, ResourceError> {
        let read = |p: &std::path::Path| {
            std::fs::read_to_string(p).map_err(|e| ResourceError::Io {
                path: p.display().to_string(),
                message: e.to_string(),
            })
        };
        let builtin = Self::builtin();
        Ok(Self {
            lexicon: match lexicon {
                Some(p) => PosLexicon::parse(&read(p)?)?,
                None => builtin.lexicon.clone(),
            },
            lemmatizer: match lemmas {
                Some(p) => Lemmatizer::parse(&read(p)?)?,
                None => builtin.lemmatizer.clone(),
            },
            glossary: match glossary {
                Some(p) => CrudGlossary::parse(&read(p)?)?,
                None => builtin.glossary.clone(),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// The word exactly as written.
    pub surface: String,
    /// Lower-cased lemma.
    pub lemma: String,
    pub pos: PosTag,
    /// Byte offsets into the text that was tokenized.
    pub span: Span,
    /// Punctuation separates this token from the previous one.
    pub after_break: bool,
}

impl Token {
    pub fn lower(&self) -> String {
        self.surface.to_lowercase()
    }
}

static WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{Alphabetic}\p{N}]+(?:['’\-][\p{Alphabetic}\p{N}]+)*").expect("word pattern"));

/// Where tagging starts: goals open with a verb, everything else with a
/// noun-phrase subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagContext {
    Clause,
    VerbInitial,
}

impl From<SegmentKind> for TagContext {
    fn from(kind: SegmentKind) -> Self {
        match kind {
            SegmentKind::Goal => Self::VerbInitial,
            SegmentKind::Role | SegmentKind::Benefit => Self::Clause,
        }
    }
}

/// Case-folds, strips punctuation, lemmatizes and tags `text` using the
/// builtin resources. Stop words are kept.
pub fn preprocess(text: &str) -> Vec<Token> {
    NlpResources::builtin().tokenize(text, Span::new(0, text.len()), TagContext::Clause)
}

impl NlpResources {
    /// Tokenizes and tags `text[span]`. Token spans index into `text`.
    pub fn tokenize(&self, text: &str, span: Span, context: TagContext) -> Vec<Token> {
        let segment = span.slice(text);
        let mut tokens: Vec<Token> = Vec::new();
        let mut last_end = 0;
        for m in WORD.find_iter(segment) {
            let gap = &segment[last_end..m.start()];
            let after_break = !tokens.is_empty() && gap.chars().any(|c| !c.is_whitespace());
            last_end = m.end();
            let surface = m.as_str();
            let lemma = self.lemmatizer.lemma(surface);
            let pos = self.tag(&tokens, surface, &lemma, context, after_break);
            tokens.push(Token {
                surface: surface.to_owned(),
                lemma,
                pos,
                span: Span::new(span.start + m.start(), span.start + m.end()),
                after_break,
            });
        }
        tokens
    }

    fn tag(&self, prev: &[Token], surface: &str, lemma: &str, context: TagContext, after_break: bool) -> PosTag {
        let lower = surface.to_lowercase();
        let verb_slot = self.verb_licensed(prev, context) && !after_break;
        let tags = match self.lexicon.tags(&lower) {
            Some(tags) => tags,
            None => match self.lexicon.tags(lemma) {
                // inflected participles: "registered users", "booking history"
                Some(tags) if tags.contains(&PosTag::Verb) && (lower.ends_with("ed") || lower.ends_with("ing")) => {
                    return guess_unknown(&lower, prev.last(), verb_slot);
                }
                Some(tags) => tags,
                None => return guess_unknown(&lower, prev.last(), verb_slot),
            },
        };
        if tags.len() == 1 {
            return tags[0];
        }
        // coordinated words share the tag of their left conjunct
        if let [.., before, conj] = prev {
            if conj.pos == PosTag::Conj && tags.contains(&before.pos) {
                return before.pos;
            }
        }
        if verb_slot && tags.contains(&PosTag::Verb) {
            return PosTag::Verb;
        }
        // singular subject + third person verb: "the menu stays fresh"
        if let (TagContext::Clause, Some(p)) = (context, prev.last()) {
            let singular_noun = p.pos == PosTag::Noun && p.lower() == p.lemma;
            if singular_noun && lower.ends_with('s') && lower != lemma && tags.contains(&PosTag::Verb) {
                return PosTag::Verb;
            }
        }
        if let Some(p) = prev.last() {
            let nominal_slot = matches!(
                p.pos,
                PosTag::Det | PosTag::Adj | PosTag::Prep | PosTag::Noun | PosTag::Verb
            );
            if nominal_slot && tags.contains(&PosTag::Noun) {
                return PosTag::Noun;
            }
        }
        tags[0]
    }

    /// Positions where an ambiguous or unknown word is read as a verb: the
    /// start of a goal, after a pronoun or modal, and after an infinitival
    /// `to`.
    fn verb_licensed(&self, prev: &[Token], context: TagContext) -> bool {
        match prev {
            [] => context == TagContext::VerbInitial,
            [.., before, last] if last.lower() == "to" => {
                matches!(before.pos, PosTag::Verb | PosTag::Adj | PosTag::Other)
            }
            [last] if last.lower() == "to" => true,
            [.., last] => matches!(last.pos, PosTag::Pron | PosTag::Other),
        }
    }
}

fn guess_unknown(lower: &str, prev: Option<&Token>, verb_slot: bool) -> PosTag {
    if lower.chars().all(|c| c.is_numeric()) {
        return PosTag::Other;
    }
    if lower.len() > 4 && lower.ends_with("ly") {
        return PosTag::Other;
    }
    let after_aux = prev.is_some_and(|p| p.lemma == "be" || p.lemma == "have");
    if lower.ends_with("ing") {
        return if verb_slot || after_aux { PosTag::Verb } else { PosTag::Noun };
    }
    if lower.ends_with("ed") {
        return if verb_slot || after_aux { PosTag::Verb } else { PosTag::Adj };
    }
    const ADJ_SUFFIXES: [&str; 8] = ["ous", "ful", "able", "ible", "ive", "less", "ical", "ish"];
    if ADJ_SUFFIXES.iter().any(|s| lower.len() > s.len() + 2 && lower.ends_with(s)) {
        return PosTag::Adj;
    }
    if verb_slot {
        PosTag::Verb
    } else {
        PosTag::Noun
    }
}

/// Lower-cases `text`, drops punctuation and determiners and joins the
/// remaining words with single spaces. Phrase texts are in this form.
pub fn normalize_phrase(text: &str) -> String {
    let lexicon = &NlpResources::builtin().lexicon;
    WORD.find_iter(text)
        .map(|m| m.as_str().to_lowercase())
        .filter(|w| !lexicon.is_determiner(w))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Tokens of every template segment of a story.
pub fn tokenize_story<'a>(
    resources: &'a NlpResources,
    story: &'a UserStory,
) -> impl Iterator<Item = (SegmentKind, Vec<Token>)> + 'a {
    story
        .segment_spans()
        .map(|(kind, span)| (kind, resources.tokenize(&story.raw_text, span, kind.into())))
}
