use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::NounPhrase;
use crate::ids::StoryId;

/// Noun phrases grouped under their shortest common sub-phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseCluster {
    pub representative: String,
    /// All member texts, the representative included.
    pub members: BTreeSet<String>,
    /// Stories in which any member occurs.
    pub story_refs: BTreeSet<StoryId>,
    /// Stories per member text.
    pub member_stories: BTreeMap<String, BTreeSet<StoryId>>,
}

impl PhraseCluster {
    /// Members other than the representative.
    pub fn related(&self) -> impl Iterator<Item = &String> {
        self.members.iter().filter(move |m| **m != self.representative)
    }
}

/// True if `needle`'s words occur contiguously, in order, in `haystack`.
pub fn is_contiguous_subsequence(needle: &[&str], haystack: &[&str]) -> bool {
    !needle.is_empty() && needle.len() <= haystack.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Groups phrases by word-level containment.
///
/// Distinct texts are visited by ascending word count, then
/// lexicographically. A phrase joins the cluster of the shortest existing
/// representative contained in it (ties lexicographic), otherwise it founds
/// a cluster of its own.
pub fn cluster_substrings(phrases: &[NounPhrase]) -> Vec<PhraseCluster> {
    cluster_texts(phrases.iter().map(|p| (p.text.as_str(), &p.story_id)))
}

pub fn cluster_texts<'a>(phrases: impl IntoIterator<Item = (&'a str, &'a StoryId)>) -> Vec<PhraseCluster> {
    let mut stories: BTreeMap<&str, BTreeSet<StoryId>> = BTreeMap::new();
    for (text, story) in phrases {
        stories.entry(text).or_default().insert(story.clone());
    }
    let mut order: Vec<(&str, Vec<&str>)> = stories
        .keys()
        .map(|t| (*t, t.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, words)| !words.is_empty())
        .collect();
    order.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| a.0.cmp(b.0)));

    // representatives in visiting order, which is also (length, lexicographic) order
    let mut reps: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut clusters: Vec<PhraseCluster> = Vec::new();
    for (text, words) in order {
        let home = reps
            .iter()
            .find(|(_, rep)| is_contiguous_subsequence(rep, &words))
            .map(|(idx, _)| *idx);
        let idx = match home {
            Some(idx) => idx,
            None => {
                clusters.push(PhraseCluster {
                    representative: text.to_owned(),
                    members: BTreeSet::new(),
                    story_refs: BTreeSet::new(),
                    member_stories: BTreeMap::new(),
                });
                reps.push((clusters.len() - 1, words));
                clusters.len() - 1
            }
        };
        let cluster = &mut clusters[idx];
        cluster.members.insert(text.to_owned());
        cluster.story_refs.extend(stories[text].iter().cloned());
        cluster.member_stories.insert(text.to_owned(), stories[text].clone());
    }
    clusters
}
