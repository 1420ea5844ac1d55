use std::collections::{BTreeMap, BTreeSet};

use super::{StoryRef, Suggestion, SuggestionContext, SuggestionKind, MAX_CONCEPTS, MAX_PER_KIND};
use crate::graph::GraphView;
use crate::ids::StoryId;
use crate::nlp::{is_contiguous_subsequence, CrudCategory, CrudGlossary, CrudMention, GlossaryError, NounPhrase, StoryAnalysis};

/// Isolated concepts, phrases joining several features, and terms whose CRUD
/// coverage is partial, for the stories in `analyses`.
pub fn quality_suggestions(
    ctx: &SuggestionContext,
    user_graph: &GraphView,
    analyses: &[StoryAnalysis],
    glossary: &CrudGlossary,
) -> Result<Vec<Suggestion>, GlossaryError> {
    let mut out = isolated(ctx, user_graph, analyses);
    out.extend(non_atomic(ctx, analyses));
    out.extend(crud_gaps(ctx, analyses, glossary)?);
    Ok(out)
}

fn isolated(ctx: &SuggestionContext, graph: &GraphView, analyses: &[StoryAnalysis]) -> Vec<Suggestion> {
    let isolated = graph.isolated_concepts();
    graph
        .rank(isolated.iter().map(String::as_str))
        .into_iter()
        .take(MAX_PER_KIND)
        .map(|concept| {
            let stories: BTreeSet<&StoryId> = graph
                .node(concept)
                .into_iter()
                .flat_map(|n| n.user_story.iter().map(|a| &a.story_id))
                .collect();
            let refs = analyses
                .iter()
                .filter(|a| stories.contains(&a.story_id))
                .flat_map(|a| mention_refs(a, concept))
                .collect();
            Suggestion::new(
                ctx,
                SuggestionKind::Isolated,
                format!("\"{concept}\" is not linked to any other concept. Expand on it in further stories, or drop the stories that introduce it."),
                vec![concept.to_owned()],
                refs,
                Vec::new(),
            )
        })
        .collect()
}

/// Spans of the phrases in `analysis` that mention `concept`, by surface
/// words or lemmas. Falls back to the whole story when none match.
fn mention_refs(analysis: &StoryAnalysis, concept: &str) -> Vec<StoryRef> {
    let needle: Vec<&str> = concept.split_whitespace().collect();
    let refs: Vec<StoryRef> = analysis
        .noun_phrases()
        .filter(|p| mentions(p, &needle))
        .map(phrase_ref)
        .collect();
    if !refs.is_empty() {
        return refs;
    }
    let tokens = analysis.segments.iter().flat_map(|s| &s.tokens);
    let start = tokens.clone().map(|t| t.span.start).min();
    let end = tokens.map(|t| t.span.end).max();
    match start.zip(end) {
        Some((span_start, span_end)) => vec![StoryRef {
            story_id: analysis.story_id.clone(),
            span_start,
            span_end,
        }],
        None => Vec::new(),
    }
}

fn mentions(phrase: &NounPhrase, needle: &[&str]) -> bool {
    let words: Vec<&str> = phrase.text.split_whitespace().collect();
    let key = phrase.lemma_key();
    let lemmas: Vec<&str> = key.split_whitespace().collect();
    is_contiguous_subsequence(needle, &words) || is_contiguous_subsequence(needle, &lemmas)
}

fn phrase_ref(p: &NounPhrase) -> StoryRef {
    StoryRef {
        story_id: p.story_id.clone(),
        span_start: p.span.start,
        span_end: p.span.end,
    }
}

fn non_atomic(ctx: &SuggestionContext, analyses: &[StoryAnalysis]) -> Vec<Suggestion> {
    analyses
        .iter()
        .flat_map(StoryAnalysis::noun_phrases)
        .filter(|p| p.contains_coordinator())
        .take(MAX_PER_KIND)
        .map(|p| {
            Suggestion::new(
                ctx,
                SuggestionKind::NonAtomic,
                format!("\"{}\" joins several items with and/or. Consider one story per item.", p.text),
                vec![p.text.clone()],
                vec![phrase_ref(p)],
                Vec::new(),
            )
        })
        .collect()
}

fn crud_gaps(ctx: &SuggestionContext, analyses: &[StoryAnalysis], glossary: &CrudGlossary) -> Result<Vec<Suggestion>, GlossaryError> {
    let mut by_term: BTreeMap<String, Vec<CrudMention>> = BTreeMap::new();
    for a in analyses {
        for m in a.crud_mentions(glossary)? {
            by_term.entry(m.term_key.clone()).or_default().push(m);
        }
    }
    let mut gaps: Vec<(usize, String, Vec<CrudMention>, Vec<CrudCategory>)> = by_term
        .into_iter()
        .filter_map(|(key, mentions)| {
            let seen: BTreeSet<CrudCategory> = mentions.iter().map(|m| m.category).collect();
            let missing: Vec<CrudCategory> = CrudCategory::ALL.into_iter().filter(|c| !seen.contains(c)).collect();
            if missing.is_empty() {
                return None;
            }
            let stories = mentions.iter().map(|m| &m.story_id).collect::<BTreeSet<_>>().len();
            Some((stories, key, mentions, missing))
        })
        .collect();
    gaps.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    Ok(gaps
        .into_iter()
        .take(MAX_PER_KIND)
        .map(|(_, _, mentions, missing)| {
            let term = mentions[0].term.clone();
            let mut refs: Vec<StoryRef> = mentions
                .iter()
                .map(|m| StoryRef {
                    story_id: m.story_id.clone(),
                    span_start: m.term_span.start,
                    span_end: m.term_span.end,
                })
                .collect();
            refs.dedup();
            let names: Vec<String> = missing.iter().map(|c| c.to_string().to_lowercase()).collect();
            let mut concepts = vec![term.clone()];
            concepts.truncate(MAX_CONCEPTS);
            Suggestion::new(
                ctx,
                SuggestionKind::Crud,
                format!("\"{term}\" has no story covering: {}.", names.join(", ")),
                concepts,
                refs,
                missing,
            )
        })
        .collect())
}
