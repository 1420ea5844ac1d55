use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{ConceptNode, GraphError, Scope, ScopedGraph};
use crate::ids::UserId;

pub const DEFAULT_TOP_N: usize = 5;
pub const DEFAULT_MAX_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptNeighborhood {
    pub root: String,
    /// Only non-empty layers are present.
    pub children_by_depth: BTreeMap<usize, BTreeSet<String>>,
}

impl ConceptNeighborhood {
    pub fn concepts(&self) -> BTreeSet<&str> {
        self.children_by_depth.values().flatten().map(String::as_str).collect()
    }
}

/// Owned snapshot of the active generation of one scope, keyed by concept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphView {
    pub scope: Scope,
    nodes: BTreeMap<String, ConceptNode>,
    adjacency: BTreeMap<String, BTreeSet<String>>,
    self_links: BTreeSet<String>,
}

impl GraphView {
    pub fn empty(scope: Scope) -> Self {
        Self {
            scope,
            nodes: BTreeMap::new(),
            adjacency: BTreeMap::new(),
            self_links: BTreeSet::new(),
        }
    }

    pub(super) fn from_graph(graph: &ScopedGraph) -> Self {
        let mut view = Self::empty(graph.scope.clone());
        let mut by_id: HashMap<u64, &str> = HashMap::new();
        for n in graph.active_nodes() {
            by_id.insert(n.id, &n.key);
            view.nodes.insert(n.key.clone(), n.clone());
            view.adjacency.entry(n.key.clone()).or_default();
        }
        for e in &graph.edges {
            let (Some(a), Some(b)) = (by_id.get(&e.from), by_id.get(&e.to)) else {
                continue;
            };
            if e.self_link {
                view.self_links.insert(a.to_string());
            } else {
                view.adjacency.get_mut(*a).expect("active").insert(b.to_string());
                view.adjacency.get_mut(*b).expect("active").insert(a.to_string());
            }
        }
        view
    }

    /// Builds a view directly from undirected edges. `(a, a)` is a self-link.
    pub fn from_edges<'a>(
        scope: Scope,
        keys: impl IntoIterator<Item = &'a str>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Self {
        let mut view = Self::empty(scope.clone());
        let insert = |view: &mut Self, k: &str| {
            if !view.nodes.contains_key(k) {
                view.nodes.insert(
                    k.to_owned(),
                    ConceptNode {
                        id: view.nodes.len() as u64,
                        key: k.to_owned(),
                        user_id: scope.user_id().cloned(),
                        project_id: scope.project_id().clone(),
                        user_story: Vec::new(),
                        is_active: true,
                        created_at: chrono::DateTime::UNIX_EPOCH,
                        expiry_date: super::expiry_sentinel(),
                    },
                );
                view.adjacency.insert(k.to_owned(), BTreeSet::new());
            }
        };
        for k in keys {
            insert(&mut view, k);
        }
        for (a, b) in edges {
            insert(&mut view, a);
            insert(&mut view, b);
            if a == b {
                view.self_links.insert(a.to_owned());
            } else {
                view.adjacency.get_mut(a).expect("inserted").insert(b.to_owned());
                view.adjacency.get_mut(b).expect("inserted").insert(a.to_owned());
            }
        }
        view
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.nodes.contains_key(key)
    }

    pub fn node(&self, key: &str) -> Option<&ConceptNode> {
        self.nodes.get(key)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ConceptNode> {
        self.nodes.values()
    }

    /// Neighbors other than the node itself.
    pub fn neighbors(&self, key: &str) -> impl Iterator<Item = &str> {
        self.adjacency.get(key).into_iter().flatten().map(String::as_str)
    }

    pub fn degree(&self, key: &str) -> usize {
        self.adjacency.get(key).map_or(0, BTreeSet::len)
    }

    pub fn has_self_link(&self, key: &str) -> bool {
        self.self_links.contains(key)
    }

    /// Undirected non-self edges, each once as `(smaller, larger)`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.adjacency
            .iter()
            .flat_map(|(a, ns)| ns.iter().filter(move |b| a < *b).map(move |b| (a.as_str(), b.as_str())))
    }

    pub fn story_count(&self, key: &str) -> usize {
        self.nodes.get(key).map_or(0, |n| n.user_story.len())
    }

    pub fn authors_of(&self, key: &str) -> BTreeSet<&UserId> {
        self.nodes
            .get(key)
            .into_iter()
            .flat_map(|n| n.user_story.iter().map(|a| &a.author_id))
            .collect()
    }

    /// Orders concepts by supporting story count (descending), then degree
    /// (descending), then key.
    pub fn rank<'a, I: IntoIterator<Item = &'a str>>(&self, keys: I) -> Vec<&'a str> {
        let mut keys: Vec<&str> = keys.into_iter().collect();
        keys.sort_by(|a, b| {
            self.story_count(b)
                .cmp(&self.story_count(a))
                .then_with(|| self.degree(b).cmp(&self.degree(a)))
                .then_with(|| a.cmp(b))
        });
        keys
    }

    pub fn top_concepts(&self, n: usize) -> Result<Vec<String>, GraphError> {
        if self.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        Ok(self.rank(self.keys()).into_iter().take(n).map(str::to_owned).collect())
    }

    /// Concepts at unweighted distance 1..=`max_depth` from `root`, by layer.
    pub fn neighborhood(&self, root: &str, max_depth: usize) -> Result<ConceptNeighborhood, GraphError> {
        if !self.contains(root) {
            return Err(GraphError::UnknownConcept(root.to_owned()));
        }
        let mut children_by_depth: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        let mut seen: BTreeSet<&str> = BTreeSet::from([root]);
        let mut frontier = vec![root];
        for depth in 1..=max_depth {
            let mut next = Vec::new();
            for key in frontier {
                for n in self.neighbors(key) {
                    if seen.insert(n) {
                        next.push(n);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            children_by_depth.insert(depth, next.iter().map(|s| s.to_string()).collect());
            frontier = next;
        }
        Ok(ConceptNeighborhood {
            root: root.to_owned(),
            children_by_depth,
        })
    }

    /// Active concepts whose only edge is a self-link.
    pub fn isolated_concepts(&self) -> BTreeSet<String> {
        self.self_links
            .iter()
            .filter(|k| self.degree(k) == 0)
            .cloned()
            .collect()
    }

    /// Tree edges of a breadth-first traversal started at the lowest-degree
    /// node (ties by key), restarted the same way on every unvisited
    /// component.
    pub fn bfs_edge_count(&self) -> Result<usize, GraphError> {
        if self.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        let mut starts: Vec<&str> = self.keys().collect();
        starts.sort_by_key(|k| (self.degree(k), *k));
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut tree_edges = 0;
        for start in starts {
            if !seen.insert(start) {
                continue;
            }
            let mut queue = VecDeque::from([start]);
            while let Some(key) = queue.pop_front() {
                for n in self.neighbors(key) {
                    if seen.insert(n) {
                        tree_edges += 1;
                        queue.push_back(n);
                    }
                }
            }
        }
        Ok(tree_edges)
    }
}
