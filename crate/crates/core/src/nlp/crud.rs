use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lexicon::data_lines;
use super::{NlpResources, PosTag, ResourceError, RuleChunker, StoryAnalysis};
use crate::ids::StoryId;
use crate::story::{SegmentKind, Span, UserStory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CrudCategory {
    Create,
    Read,
    Update,
    Delete,
}

impl CrudCategory {
    pub const ALL: [CrudCategory; 4] = [Self::Create, Self::Read, Self::Update, Self::Delete];
}

impl FromStr for CrudCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "create" => Ok(Self::Create),
            "read" => Ok(Self::Read),
            "update" => Ok(Self::Update),
            "delete" => Ok(Self::Delete),
            other => Err(format!("unknown CRUD category {other:?}")),
        }
    }
}

impl fmt::Display for CrudCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Create => "CREATE",
            Self::Read => "READ",
            Self::Update => "UPDATE",
            Self::Delete => "DELETE",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GlossaryError {
    #[error("glossary has no verbs for {0}")]
    MissingCategory(CrudCategory),
}

/// Verb lemmas that stand for each CRUD operation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrudGlossary {
    verbs: BTreeMap<CrudCategory, BTreeSet<String>>,
}

impl CrudGlossary {
    /// Parses `category: verb, verb, ...` lines. Repeated categories merge.
    pub fn parse(source: &str) -> Result<Self, ResourceError> {
        let mut verbs: BTreeMap<CrudCategory, BTreeSet<String>> = BTreeMap::new();
        for (n, line) in data_lines(source) {
            let (category, list) = line
                .split_once(':')
                .ok_or_else(|| ResourceError::syntax("crud glossary", n, "expected `category: verb, ...`"))?;
            let category = CrudCategory::from_str(category).map_err(|e| ResourceError::syntax("crud glossary", n, e))?;
            let entry = verbs.entry(category).or_default();
            for verb in list.split(',').map(str::trim).filter(|v| !v.is_empty()) {
                entry.insert(verb.to_lowercase());
            }
        }
        Ok(Self { verbs })
    }

    pub fn from_verbs(entries: impl IntoIterator<Item = (CrudCategory, Vec<&'static str>)>) -> Self {
        Self {
            verbs: entries
                .into_iter()
                .map(|(c, vs)| (c, vs.into_iter().map(str::to_owned).collect()))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), GlossaryError> {
        match CrudCategory::ALL
            .into_iter()
            .find(|c| self.verbs.get(c).is_none_or(BTreeSet::is_empty))
        {
            Some(c) => Err(GlossaryError::MissingCategory(c)),
            None => Ok(()),
        }
    }

    pub fn contains(&self, category: CrudCategory, verb_lemma: &str) -> bool {
        self.verbs.get(&category).is_some_and(|v| v.contains(verb_lemma))
    }

    /// Categories whose verb list contains `verb_lemma`.
    pub fn categories_of<'a>(&'a self, verb_lemma: &'a str) -> impl Iterator<Item = CrudCategory> + 'a {
        self.verbs
            .iter()
            .filter(move |(_, vs)| vs.contains(verb_lemma))
            .map(|(c, _)| *c)
    }

    pub fn verbs(&self, category: CrudCategory) -> impl Iterator<Item = &str> {
        self.verbs.get(&category).into_iter().flatten().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrudMention {
    /// Text of the noun phrase the verb acts on.
    pub term: String,
    /// Lemma form of `term`, used to group mentions across stories.
    pub term_key: String,
    pub category: CrudCategory,
    pub verb_lemma: String,
    pub story_id: StoryId,
    pub term_span: Span,
    pub verb_span: Span,
}

impl StoryAnalysis {
    /// CRUD verbs of the goal segment, each attached to the nearest noun
    /// phrase that follows it.
    pub fn crud_mentions(&self, glossary: &CrudGlossary) -> Result<Vec<CrudMention>, GlossaryError> {
        glossary.validate()?;
        let Some(goal) = self.segment(SegmentKind::Goal) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for (i, token) in goal.tokens.iter().enumerate() {
            if token.pos != PosTag::Verb {
                continue;
            }
            let Some((_, phrase)) = goal.phrases.iter().find(|(range, _)| range.start > i) else {
                continue;
            };
            for category in glossary.categories_of(&token.lemma) {
                out.push(CrudMention {
                    term: phrase.text.clone(),
                    term_key: phrase.lemma_key(),
                    category,
                    verb_lemma: token.lemma.clone(),
                    story_id: self.story_id.clone(),
                    term_span: phrase.span,
                    verb_span: token.span,
                });
            }
        }
        Ok(out)
    }
}

pub fn extract_crud_mentions(story: &UserStory, glossary: &CrudGlossary) -> Result<Vec<CrudMention>, GlossaryError> {
    StoryAnalysis::new(story, NlpResources::builtin(), &RuleChunker).crud_mentions(glossary)
}

#[cfg(test)]
mod tests {
    use chrono::Utc;
    use proptest::prelude::*;

    use super::*;
    use crate::story::FormatMode;

    fn story(goal: &str) -> UserStory {
        let text = format!("As a user, I want to {goal} so that I am happy");
        UserStory::create("s".into(), "p".into(), "u".into(), &text, Utc::now(), FormatMode::Strict).unwrap()
    }

    fn glossary() -> &'static CrudGlossary {
        &NlpResources::builtin().glossary
    }

    #[test]
    fn builtin_glossary_has_ten_verbs_per_category() {
        for c in CrudCategory::ALL {
            assert!(glossary().verbs(c).count() >= 10, "{c}");
        }
    }

    #[test]
    fn view_profile_is_read() {
        let m = extract_crud_mentions(&story("view my profile"), glossary()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].term, "profile");
        assert_eq!(m[0].category, CrudCategory::Read);
        assert_eq!(m[0].verb_lemma, "view");
    }

    #[test]
    fn non_crud_verbs_are_ignored() {
        assert!(extract_crud_mentions(&story("sing a song"), glossary()).unwrap().is_empty());
    }

    #[test]
    fn coordinated_verbs_share_their_object() {
        let m = extract_crud_mentions(&story("create and delete accounts"), glossary()).unwrap();
        let got: Vec<(CrudCategory, &str)> = m.iter().map(|m| (m.category, m.term.as_str())).collect();
        assert_eq!(got, [(CrudCategory::Create, "accounts"), (CrudCategory::Delete, "accounts")]);
        assert!(m.iter().all(|m| m.term_key == "account"));
    }

    #[test]
    fn incomplete_glossary_is_rejected() {
        let g = CrudGlossary::parse("create: add\nread: view\nupdate: edit\n").unwrap();
        assert_eq!(
            extract_crud_mentions(&story("view my profile"), &g),
            Err(GlossaryError::MissingCategory(CrudCategory::Delete))
        );
        let g = CrudGlossary::parse("create: add\nread: view\nupdate: edit\ndelete:\n").unwrap();
        assert!(g.validate().is_err());
        assert!(CrudGlossary::parse("crate: add\n").is_err());
    }

    proptest! {
        #[test]
        fn mentions_only_cite_glossary_verbs(
            words in prop::collection::vec(
                prop::sample::select(vec!["view", "add", "remove", "edit", "sing", "the", "profile", "books", "and", "menu", "list", "songs"]),
                1..8,
            )
        ) {
            let st = story(&words.join(" "));
            for m in extract_crud_mentions(&st, glossary()).unwrap() {
                prop_assert!(glossary().contains(m.category, &m.verb_lemma));
                prop_assert!(m.term_span.start > m.verb_span.start);
            }
        }
    }
}
