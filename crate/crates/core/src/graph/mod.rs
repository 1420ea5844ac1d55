//! Versioned concept graphs, one per user and project and one per project.
//!
//! A commit never edits history. Every active node of the scope is closed by
//! setting its expiry to the commit time, then a fresh active generation is
//! inserted with expiry [`expiry_sentinel`]. Queries run against a
//! [`GraphView`], an owned snapshot of the active generation.

mod export;
mod view;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{ConceptMapping, PLACEHOLDER};
use crate::ids::{ProjectId, StoryId, UserId};

pub use export::{GraphExport, NodeExport, EdgeExport};
pub use view::{ConceptNeighborhood, GraphView, DEFAULT_MAX_DEPTH, DEFAULT_TOP_N};

/// Expiry date carried by active nodes, 9999-12-31.
pub fn expiry_sentinel() -> DateTime<Utc> {
    NaiveDate::from_ymd_opt(9999, 12, 31)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
        .and_utc()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has no active concepts")]
    EmptyGraph,
    #[error("concept {0:?} is not active in this graph")]
    UnknownConcept(String),
    #[error("no author known for story {0}")]
    UnknownAuthor(StoryId),
    #[error("commit at {at} precedes the previous commit at {previous}")]
    CommitOutOfOrder { at: DateTime<Utc>, previous: DateTime<Utc> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "lowercase")]
pub enum Scope {
    User { user: UserId, project: ProjectId },
    Project { project: ProjectId },
}

impl Scope {
    pub fn user(user: impl Into<UserId>, project: impl Into<ProjectId>) -> Self {
        Self::User {
            user: user.into(),
            project: project.into(),
        }
    }

    pub fn project(project: impl Into<ProjectId>) -> Self {
        Self::Project { project: project.into() }
    }

    pub fn project_id(&self) -> &ProjectId {
        match self {
            Self::User { project, .. } | Self::Project { project } => project,
        }
    }

    pub fn user_id(&self) -> Option<&UserId> {
        match self {
            Self::User { user, .. } => Some(user),
            Self::Project { .. } => None,
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::User { user, project } => write!(f, "user:{user}@{project}"),
            Self::Project { project } => write!(f, "project:{project}"),
        }
    }
}

pub type NodeId = u64;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StoryAttribution {
    pub story_id: StoryId,
    pub author_id: UserId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptNode {
    pub id: NodeId,
    pub key: String,
    pub user_id: Option<UserId>,
    pub project_id: ProjectId,
    /// Supporting stories, ordered by story id.
    pub user_story: Vec<StoryAttribution>,
    pub is_active: bool,
    pub created_at: DateTime<Utc>,
    pub expiry_date: DateTime<Utc>,
}

/// Undirected RELATED_TO relation, stored once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelatedToEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub self_link: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopedGraph {
    pub scope: Scope,
    pub nodes: Vec<ConceptNode>,
    pub edges: Vec<RelatedToEdge>,
    pub last_commit: Option<DateTime<Utc>>,
}

impl ScopedGraph {
    fn new(scope: Scope) -> Self {
        Self {
            scope,
            nodes: Vec::new(),
            edges: Vec::new(),
            last_commit: None,
        }
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = &ConceptNode> {
        self.nodes.iter().filter(|n| n.is_active)
    }

    /// All versions of `key`, oldest first.
    pub fn versions<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a ConceptNode> {
        self.nodes.iter().filter(move |n| n.key == key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitSummary {
    pub scope: Scope,
    pub at: DateTime<Utc>,
    pub activated: usize,
    pub deactivated: usize,
    pub edges: usize,
    pub self_links: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStore {
    graphs: BTreeMap<String, ScopedGraph>,
    next_node: NodeId,
}

impl GraphStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn graph(&self, scope: &Scope) -> Option<&ScopedGraph> {
        self.graphs.get(&scope.to_string())
    }

    pub fn scopes(&self) -> impl Iterator<Item = &Scope> {
        self.graphs.values().map(|g| &g.scope)
    }

    /// User scopes of `project`, ordered by user id.
    pub fn user_scopes<'a>(&'a self, project: &'a ProjectId) -> impl Iterator<Item = &'a Scope> {
        self.scopes()
            .filter(move |s| matches!(s, Scope::User { project: p, .. } if p == project))
    }

    /// Replaces the active generation of `scope` with the concepts of
    /// `mapping`.
    ///
    /// Each parent is linked to each of its members. A concept left without
    /// any other neighbor gets a self-link.
    pub fn commit(
        &mut self,
        scope: &Scope,
        mapping: &ConceptMapping,
        authors: &HashMap<StoryId, UserId>,
        at: DateTime<Utc>,
    ) -> Result<CommitSummary, GraphError> {
        let key = scope.to_string();
        if let Some(previous) = self.graphs.get(&key).and_then(|g| g.last_commit) {
            if at < previous {
                return Err(GraphError::CommitOutOfOrder { at, previous });
            }
        }
        let mut attributions: BTreeMap<&str, Vec<StoryAttribution>> = BTreeMap::new();
        for concept in mapping.concepts() {
            let mut list = Vec::new();
            for story in mapping.stories_of(concept) {
                let author = authors.get(story).ok_or_else(|| GraphError::UnknownAuthor(story.clone()))?;
                list.push(StoryAttribution {
                    story_id: story.clone(),
                    author_id: author.clone(),
                });
            }
            list.sort();
            attributions.insert(concept, list);
        }

        let next_node = &mut self.next_node;
        let graph = self.graphs.entry(key).or_insert_with(|| ScopedGraph::new(scope.clone()));
        let mut deactivated = 0;
        for node in graph.nodes.iter_mut().filter(|n| n.is_active) {
            node.is_active = false;
            node.expiry_date = at;
            deactivated += 1;
        }

        let mut ids: BTreeMap<&str, NodeId> = BTreeMap::new();
        for (concept, user_story) in attributions {
            let id = *next_node;
            *next_node += 1;
            ids.insert(concept, id);
            graph.nodes.push(ConceptNode {
                id,
                key: concept.to_owned(),
                user_id: scope.user_id().cloned(),
                project_id: scope.project_id().clone(),
                user_story,
                is_active: true,
                created_at: at,
                expiry_date: expiry_sentinel(),
            });
        }

        let mut pairs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        for (parent, members) in &mapping.entries {
            for member in members {
                if member == PLACEHOLDER || member == parent {
                    continue;
                }
                let (a, b) = (ids[parent.as_str()], ids[member.as_str()]);
                pairs.insert((a.min(b), a.max(b)));
            }
        }
        let linked: BTreeSet<NodeId> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
        let edges = pairs.len();
        for (from, to) in pairs {
            graph.edges.push(RelatedToEdge {
                from,
                to,
                self_link: false,
            });
        }
        let mut self_links = 0;
        for id in ids.values().filter(|id| !linked.contains(id)) {
            graph.edges.push(RelatedToEdge {
                from: *id,
                to: *id,
                self_link: true,
            });
            self_links += 1;
        }
        graph.last_commit = Some(at);
        Ok(CommitSummary {
            scope: scope.clone(),
            at,
            activated: ids.len(),
            deactivated,
            edges,
            self_links,
        })
    }

    /// Installs a scope's full history, as produced by an earlier commit.
    pub fn restore_graph(&mut self, graph: ScopedGraph, next_node: NodeId) {
        self.next_node = self.next_node.max(next_node);
        self.graphs.insert(graph.scope.to_string(), graph);
    }

    pub fn next_node(&self) -> NodeId {
        self.next_node
    }

    /// Snapshot of the active generation. Unknown scopes give an empty view.
    pub fn view(&self, scope: &Scope) -> GraphView {
        match self.graph(scope) {
            Some(g) => GraphView::from_graph(g),
            None => GraphView::empty(scope.clone()),
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("graph store serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }
}
