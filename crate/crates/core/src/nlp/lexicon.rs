use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ResourceError;

/// Coarse part-of-speech tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Adj,
    Det,
    Verb,
    Prep,
    Conj,
    Pron,
    Other,
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "NOUN" => Self::Noun,
            "ADJ" => Self::Adj,
            "DET" => Self::Det,
            "VERB" => Self::Verb,
            "PREP" => Self::Prep,
            "CONJ" => Self::Conj,
            "PRON" => Self::Pron,
            "OTHER" => Self::Other,
            other => return Err(format!("unknown tag {other:?}")),
        })
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Noun => "NOUN",
            Self::Adj => "ADJ",
            Self::Det => "DET",
            Self::Verb => "VERB",
            Self::Prep => "PREP",
            Self::Conj => "CONJ",
            Self::Pron => "PRON",
            Self::Other => "OTHER",
        };
        f.write_str(s)
    }
}

/// Word → candidate tags, first tag is the context-free default.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    entries: HashMap<String, Vec<PosTag>>,
}

impl PosLexicon {
    /// Parses `word<TAB>TAG[,TAG...]` lines. `#` starts a comment line.
    pub fn parse(source: &str) -> Result<Self, ResourceError> {
        let mut entries = HashMap::new();
        for (n, line) in data_lines(source) {
            let (word, tags) = line
                .split_once('\t')
                .ok_or_else(|| ResourceError::syntax("pos lexicon", n, "expected word<TAB>tags"))?;
            let tags = tags
                .split(',')
                .map(PosTag::from_str)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ResourceError::syntax("pos lexicon", n, e))?;
            entries.insert(word.trim().to_lowercase(), tags);
        }
        Ok(Self { entries })
    }

    pub fn tags(&self, word: &str) -> Option<&[PosTag]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    /// Closed-class determiners (articles, demonstratives, possessives).
    pub fn is_determiner(&self, word: &str) -> bool {
        self.tags(word).is_some_and(|t| t == [PosTag::Det])
    }
}

/// Suffix-rule lemmatizer backed by an exception table.
///
/// The lemma is the fixpoint of one rewrite step (table lookup, else a suffix
/// rule), so `lemma(lemma(w)) == lemma(w)` for every word.
#[derive(Debug, Clone, Default)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

impl Lemmatizer {
    /// Parses `form<TAB>lemma` lines.
    pub fn parse(source: &str) -> Result<Self, ResourceError> {
        let mut exceptions = HashMap::new();
        for (n, line) in data_lines(source) {
            let (form, lemma) = line
                .split_once('\t')
                .ok_or_else(|| ResourceError::syntax("lemma table", n, "expected form<TAB>lemma"))?;
            let lemma = lemma.trim().to_lowercase();
            if lemma.is_empty() || lemma.contains(char::is_whitespace) {
                return Err(ResourceError::syntax("lemma table", n, "lemma must be a single word"));
            }
            exceptions.insert(form.trim().to_lowercase(), lemma);
        }
        Ok(Self { exceptions })
    }

    pub fn lemma(&self, word: &str) -> String {
        let mut current = word.to_lowercase();
        // each rule application shortens the word; the bound only guards
        // against cycles in a hand-edited table
        for _ in 0..16 {
            let next = self.step(&current);
            if next == current {
                break;
            }
            current = next;
        }
        current
    }

    fn step(&self, w: &str) -> String {
        if let Some(lemma) = self.exceptions.get(w) {
            return lemma.clone();
        }
        if let Some(stem) = w.strip_suffix("'s").or_else(|| w.strip_suffix("’s")) {
            if !stem.is_empty() {
                return stem.to_owned();
            }
        }
        if !w.chars().all(|c| c.is_alphabetic()) || w.chars().count() <= 3 {
            return w.to_owned();
        }
        if let Some(stem) = w.strip_suffix("ies") {
            if stem.len() >= 2 {
                return format!("{stem}y");
            }
        }
        if let Some(stem) = w.strip_suffix("es") {
            if ["s", "x", "z", "ch", "sh"].iter().any(|s| stem.ends_with(s)) && stem.len() >= 2 {
                return stem.to_owned();
            }
        }
        if let Some(stem) = w.strip_suffix('s') {
            if !["s", "u", "i"].iter().any(|s| stem.ends_with(s)) {
                return stem.to_owned();
            }
            return w.to_owned();
        }
        for suffix in ["ing", "ed"] {
            if let Some(stem) = w.strip_suffix(suffix) {
                if stem.chars().count() >= 3 && stem.chars().any(is_vowel) && !stem.ends_with('e') {
                    return undouble(stem);
                }
            }
        }
        w.to_owned()
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// `shipp` → `ship`, `stopp` → `stop`; `call`, `add`, `pass` keep their double letter.
fn undouble(stem: &str) -> String {
    let chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n >= 3 && chars[n - 1] == chars[n - 2] && "bgmnprt".contains(chars[n - 1]) {
        chars[..n - 1].iter().collect()
    } else {
        stem.to_owned()
    }
}

pub(crate) fn data_lines(source: &str) -> impl Iterator<Item = (usize, &str)> {
    source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}
