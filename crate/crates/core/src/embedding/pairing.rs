use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{KeywordExtractor, ProviderError, SimilarityMatrix};
use crate::ids::StoryId;
use crate::nlp::PhraseCluster;

/// Member recorded for a term that matched nothing.
pub const PLACEHOLDER: &str = "";

/// Representative → related member phrases, plus the stories behind every
/// phrase.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermClusters {
    pub members: BTreeMap<String, Vec<String>>,
    pub provenance: BTreeMap<String, BTreeSet<StoryId>>,
}

impl TermClusters {
    pub fn new(members: BTreeMap<String, Vec<String>>) -> Self {
        Self {
            members,
            provenance: BTreeMap::new(),
        }
    }

    /// A representative is backed by every story of its cluster, a member
    /// by the stories it occurs in.
    pub fn from_clusters(clusters: &[PhraseCluster]) -> Self {
        let mut out = Self::default();
        for c in clusters {
            out.members
                .insert(c.representative.clone(), c.related().cloned().collect());
            for (member, stories) in &c.member_stories {
                out.provenance.entry(member.clone()).or_default().extend(stories.iter().cloned());
            }
            out.provenance
                .entry(c.representative.clone())
                .or_default()
                .extend(c.story_refs.iter().cloned());
        }
        out
    }

    /// Representatives in lexicographic order.
    pub fn representatives(&self) -> impl Iterator<Item = &String> {
        self.members.keys()
    }
}

/// Chooses the parent under which a matched term is filed.
pub trait SelectKeyword {
    fn select(&self, parent: &str, term: &str) -> Result<String, ProviderError>;
}

impl SelectKeyword for KeywordExtractor<'_> {
    fn select(&self, parent: &str, term: &str) -> Result<String, ProviderError> {
        self.extract(parent, term)
    }
}

impl<F: Fn(&str, &str) -> String> SelectKeyword for F {
    fn select(&self, parent: &str, term: &str) -> Result<String, ProviderError> {
        Ok(self(parent, term))
    }
}

/// Parent term → related terms, with supporting stories per term.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptMapping {
    pub entries: BTreeMap<String, Vec<String>>,
    pub provenance: BTreeMap<String, BTreeSet<StoryId>>,
}

impl ConceptMapping {
    pub fn parents(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    /// Parents whose only members are placeholders or the parent itself.
    pub fn unmatched(&self) -> impl Iterator<Item = &String> {
        self.entries
            .iter()
            .filter(|(k, v)| v.iter().all(|m| m == PLACEHOLDER || m == *k))
            .map(|(k, _)| k)
    }

    /// Every concept named by the mapping, placeholders excluded.
    pub fn concepts(&self) -> BTreeSet<&str> {
        self.entries
            .iter()
            .flat_map(|(k, v)| std::iter::once(k).chain(v))
            .filter(|t| t.as_str() != PLACEHOLDER)
            .map(String::as_str)
            .collect()
    }

    /// Parents that are also filed as a member under a different parent.
    pub fn forest_violations(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for (parent, members) in &self.entries {
            for m in members {
                if m != parent && self.entries.contains_key(m) {
                    out.push((m.as_str(), parent.as_str()));
                }
            }
        }
        out
    }

    pub fn stories_of(&self, concept: &str) -> impl Iterator<Item = &StoryId> {
        self.provenance.get(concept).into_iter().flatten()
    }
}

/// Files every representative under its most similar distinct term.
///
/// Representatives are visited in lexicographic order. For each term `T` the
/// first term `P` (in matrix order) with the strictly highest score above
/// `threshold` is kept, then `selector` renames `P` to a keyword. `T` is
/// appended under that keyword, or under itself with a [`PLACEHOLDER`]
/// member when nothing matched. The cluster members are merged in
/// afterwards, lists are deduplicated and entries left empty are dropped.
///
/// A keyword parent that is not itself a representative is backed by the
/// stories of its members.
pub fn pair_terms(
    clusters: &TermClusters,
    matrix: &SimilarityMatrix,
    threshold: f64,
    selector: &dyn SelectKeyword,
) -> Result<ConceptMapping, ProviderError> {
    let mut d: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for term in clusters.representatives() {
        let mut best_score = f64::NEG_INFINITY;
        let mut parent = "";
        if let Some(i) = matrix.position(term) {
            for (j, other) in matrix.terms().iter().enumerate() {
                if other == term {
                    continue;
                }
                let score = matrix.at(i, j);
                if score > best_score && score > threshold {
                    best_score = score;
                    parent = other;
                }
            }
        }
        let parent = selector.select(parent, term)?;
        if parent.is_empty() {
            d.entry(term.clone()).or_default().push(PLACEHOLDER.to_owned());
        } else {
            d.entry(parent).or_default().push(term.clone());
        }
    }
    for (rep, members) in &clusters.members {
        d.entry(rep.clone()).or_default().extend(members.iter().cloned());
    }
    for members in d.values_mut() {
        let mut seen = BTreeSet::new();
        members.retain(|m| seen.insert(m.clone()));
    }
    d.retain(|_, members| !members.is_empty());

    let mut provenance: BTreeMap<String, BTreeSet<StoryId>> = BTreeMap::new();
    for (parent, members) in &d {
        for term in std::iter::once(parent).chain(members) {
            if let Some(stories) = clusters.provenance.get(term) {
                provenance.entry(term.clone()).or_default().extend(stories.iter().cloned());
            }
        }
    }
    for (parent, members) in &d {
        if clusters.provenance.contains_key(parent) {
            continue;
        }
        let inherited: BTreeSet<StoryId> = members
            .iter()
            .filter_map(|m| clusters.provenance.get(m))
            .flatten()
            .cloned()
            .collect();
        if !inherited.is_empty() {
            provenance.insert(parent.clone(), inherited);
        }
    }
    Ok(ConceptMapping { entries: d, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(terms: &[&str], rows: &[&[f64]]) -> SimilarityMatrix {
        SimilarityMatrix::from_rows(
            terms.iter().map(|s| s.to_string()).collect(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    fn clusters(keys: &[&str]) -> TermClusters {
        TermClusters::new(keys.iter().map(|k| (k.to_string(), Vec::new())).collect())
    }

    fn keep_parent(p: &str, _t: &str) -> String {
        p.to_owned()
    }

    #[test]
    fn similar_pair_is_grouped() {
        let m = matrix(&["shipment options", "shipping offers"], &[&[1.0, 0.7], &[0.7, 1.0]]);
        let got = pair_terms(&clusters(&["shipment options", "shipping offers"]), &m, 0.4, &keep_parent).unwrap();
        // each side files itself under the other
        assert_eq!(got.entries["shipment options"], ["shipping offers"]);
        assert_eq!(got.entries["shipping offers"], ["shipment options"]);

        let to_shipping = |_: &str, _: &str| "shipping".to_owned();
        let got = pair_terms(&clusters(&["shipment options", "shipping offers"]), &m, 0.4, &to_shipping).unwrap();
        assert_eq!(got.entries.len(), 1);
        assert_eq!(got.entries["shipping"], ["shipment options", "shipping offers"]);
    }

    #[test]
    fn lone_term_keeps_placeholder() {
        let m = matrix(&["menu"], &[&[1.0]]);
        let got = pair_terms(&clusters(&["menu"]), &m, 0.4, &keep_parent).unwrap();
        assert_eq!(got.entries["menu"], [PLACEHOLDER]);
        assert_eq!(got.unmatched().collect::<Vec<_>>(), ["menu"]);
    }

    #[test]
    fn threshold_is_strict_and_ties_keep_first() {
        let m = matrix(&["a", "b", "c"], &[&[1.0, 0.4, 0.4], &[0.4, 1.0, 0.5], &[0.4, 0.5, 1.0]]);
        let got = pair_terms(&clusters(&["a", "b", "c"]), &m, 0.4, &keep_parent).unwrap();
        assert_eq!(got.entries["a"], [PLACEHOLDER]);
        assert_eq!(got.entries["b"], ["c"]);
        assert_eq!(got.entries["c"], ["b"]);

        let m = matrix(&["a", "b", "c"], &[&[1.0, 0.6, 0.6], &[0.6, 1.0, 0.1], &[0.6, 0.1, 1.0]]);
        let got = pair_terms(&clusters(&["a"]), &m, 0.4, &keep_parent).unwrap();
        assert_eq!(got.entries["b"], ["a"]);
    }

    #[test]
    fn cluster_members_merge_without_duplicates() {
        let m = matrix(&["item label", "menu"], &[&[1.0, 0.0], &[0.0, 1.0]]);
        let mut l = clusters(&["item label", "menu"]);
        l.members.insert("item label".into(), vec!["item label size".into(), "item label size".into()]);
        let s1 = StoryId::from("s1");
        l.provenance.insert("item label".into(), [s1.clone()].into());
        l.provenance.insert("item label size".into(), [s1.clone()].into());
        let got = pair_terms(&l, &m, 0.4, &keep_parent).unwrap();
        assert_eq!(got.entries["item label"], [PLACEHOLDER, "item label size"]);
        assert_eq!(got.stories_of("item label size").collect::<Vec<_>>(), [&s1]);
        assert!(got.stories_of("menu").next().is_none());
    }

    #[test]
    fn keyword_parent_inherits_member_stories() {
        let m = matrix(&["menu item", "menu price"], &[&[1.0, 0.9], &[0.9, 1.0]]);
        let mut l = clusters(&["menu item", "menu price"]);
        l.provenance.insert("menu item".into(), [StoryId::from("s1")].into());
        l.provenance.insert("menu price".into(), [StoryId::from("s2")].into());
        let to_menu = |_: &str, _: &str| "menu".to_owned();
        let got = pair_terms(&l, &m, 0.4, &to_menu).unwrap();
        assert_eq!(got.entries.keys().collect::<Vec<_>>(), ["menu"]);
        assert_eq!(got.stories_of("menu").count(), 2);
        assert!(got.forest_violations().is_empty());
    }
}
