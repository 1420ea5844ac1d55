//! One suggestion request end to end: extract, cluster, embed, pair, commit
//! the user and project graphs, then run the heuristics.

use std::collections::HashMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{
    pair_terms, similarity_matrix, ConceptMapping, EmbeddingProvider, KeywordExtractor, ProviderError, TermClusters,
    DEFAULT_THRESHOLD,
};
use crate::graph::{GraphError, GraphStore, GraphView, Scope, DEFAULT_MAX_DEPTH, DEFAULT_TOP_N};
use crate::ids::{ProjectId, StoryId, UserId};
use crate::nlp::{cluster_substrings, Chunker, GlossaryError, NlpResources, NounPhrase, RuleChunker, StoryAnalysis};
use crate::story::{StoryError, StoryStore, UserStory};
use crate::suggest::{completeness_suggestions, quality_suggestions, SuggestionContext, SuggestionSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub similarity_threshold: f64,
    pub top_n: usize,
    pub max_depth: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            similarity_threshold: DEFAULT_THRESHOLD,
            top_n: DEFAULT_TOP_N,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Story(#[from] StoryError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Glossary(#[from] GlossaryError),
}

/// Concept mapping of a story set together with the per-story analyses it
/// was built from.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub analyses: Vec<StoryAnalysis>,
    pub mapping: ConceptMapping,
}

pub struct Pipeline<'a> {
    pub resources: &'a NlpResources,
    pub chunker: &'a dyn Chunker,
    pub provider: &'a dyn EmbeddingProvider,
    pub config: PipelineConfig,
}

impl<'a> Pipeline<'a> {
    /// Builtin resources and the rule chunker.
    pub fn new(provider: &'a dyn EmbeddingProvider, config: PipelineConfig) -> Self {
        Self {
            resources: NlpResources::builtin(),
            chunker: &RuleChunker,
            provider,
            config,
        }
    }

    pub fn extract(&self, stories: &[&UserStory]) -> Result<Extraction, ProviderError> {
        let analyses: Vec<StoryAnalysis> = stories
            .iter()
            .filter(|s| !s.deleted)
            .map(|s| StoryAnalysis::new(s, self.resources, self.chunker))
            .collect();
        let phrases: Vec<NounPhrase> = analyses.iter().flat_map(|a| a.noun_phrases().cloned()).collect();
        let clusters = TermClusters::from_clusters(&cluster_substrings(&phrases));
        if clusters.members.is_empty() {
            return Ok(Extraction {
                analyses,
                mapping: ConceptMapping::default(),
            });
        }
        let terms: Vec<String> = clusters.representatives().cloned().collect();
        let matrix = similarity_matrix(&terms, self.provider)?;
        let keywords = KeywordExtractor::new(self.provider, self.resources);
        let mapping = pair_terms(&clusters, &matrix, self.config.similarity_threshold, &keywords)?;
        Ok(Extraction { analyses, mapping })
    }

    /// Runs the whole pipeline for `user` in `project` and commits both
    /// graphs at `at`.
    ///
    /// Everything that can fail runs before the first commit, so on error
    /// `graphs` is left untouched. Other members' user graphs are rebuilt in
    /// memory from their current stories and are not committed.
    pub fn request_suggestions(
        &self,
        stories: &StoryStore,
        graphs: &mut GraphStore,
        project: &ProjectId,
        user: &UserId,
        at: DateTime<Utc>,
    ) -> Result<SuggestionSet, PipelineError> {
        let members = stories.require_member(project, user)?.member_ids.clone();
        let live = stories.stories(project, None, false);
        let authors: HashMap<StoryId, UserId> = live.iter().map(|s| (s.id.clone(), s.author_id.clone())).collect();
        let own: Vec<&UserStory> = live.iter().copied().filter(|s| &s.author_id == user).collect();

        let user_extraction = self.extract(&own)?;
        let project_extraction = self.extract(&live)?;
        let mut others = Vec::new();
        for member in members.iter().filter(|m| *m != user) {
            let theirs: Vec<&UserStory> = live.iter().copied().filter(|s| &s.author_id == member).collect();
            if theirs.is_empty() {
                continue;
            }
            let mapping = self.extract(&theirs)?.mapping;
            let scope = Scope::user(member.clone(), project.clone());
            let mut scratch = GraphStore::new();
            scratch.commit(&scope, &mapping, &authors, at)?;
            others.push(scratch.view(&scope));
        }

        let user_scope = Scope::user(user.clone(), project.clone());
        let project_scope = Scope::project(project.clone());
        let mut next = graphs.clone();
        next.commit(&user_scope, &user_extraction.mapping, &authors, at)?;
        next.commit(&project_scope, &project_extraction.mapping, &authors, at)?;
        let user_view = next.view(&user_scope);
        let project_view = next.view(&project_scope);

        let set = self.suggest(user, project, &user_view, &project_view, &others, &user_extraction.analyses)?;
        *graphs = next;
        Ok(set)
    }

    /// Heuristics over already committed graphs.
    pub fn suggest(
        &self,
        user: &UserId,
        project: &ProjectId,
        user_view: &GraphView,
        project_view: &GraphView,
        others: &[GraphView],
        user_analyses: &[StoryAnalysis],
    ) -> Result<SuggestionSet, PipelineError> {
        let ctx = SuggestionContext {
            project: project.clone(),
            user: user.clone(),
            top_n: self.config.top_n,
            max_depth: self.config.max_depth,
        };
        let quality = quality_suggestions(&ctx, user_view, user_analyses, &self.resources.glossary)?;
        let (completeness, notice) = match completeness_suggestions(&ctx, user_view, project_view, others) {
            Ok(list) => (list, None),
            Err(GraphError::EmptyGraph) => (Vec::new(), Some("The project has no concepts yet. Add stories first.".to_owned())),
            Err(e) => return Err(e.into()),
        };
        Ok(SuggestionSet {
            quality,
            completeness,
            notice,
        })
    }
}
