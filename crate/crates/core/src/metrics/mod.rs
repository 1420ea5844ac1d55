//! Project metrics over the active project graph and the Mann-Whitney U
//! test used to compare them between groups.

mod connectivity;
mod stats;

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::graph::GraphView;
use crate::ids::ProjectId;

pub use connectivity::average_node_connectivity;
pub use stats::{mann_whitney_u, std_dev, Alternative, StatsError, UTestMethod, UTestResult, EXACT_LIMIT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectMetrics {
    pub project_id: ProjectId,
    pub story_count: usize,
    pub node_count: usize,
    pub edge_count: usize,
    pub isolated_count: usize,
    pub bfs_edges: usize,
    pub avg_node_connectivity: f64,
}

/// Metrics of a project given its live story count and active project graph.
pub fn project_metrics(project_id: ProjectId, story_count: usize, graph: &GraphView) -> ProjectMetrics {
    ProjectMetrics {
        project_id,
        story_count,
        node_count: graph.len(),
        edge_count: graph.edges().count(),
        isolated_count: graph.isolated_concepts().len(),
        bfs_edges: graph.bfs_edge_count().unwrap_or(0),
        avg_node_connectivity: graph.average_node_connectivity(),
    }
}

/// Aligned plain-text table, one row per project.
pub fn render_table(rows: &[ProjectMetrics]) -> String {
    let header = ["project", "stories", "nodes", "edges", "isolated", "bfs_edges", "avg_connectivity"];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|m| {
            [
                m.project_id.to_string(),
                m.story_count.to_string(),
                m.node_count.to_string(),
                m.edge_count.to_string(),
                m.isolated_count.to_string(),
                m.bfs_edges.to_string(),
                format!("{:.4}", m.avg_node_connectivity),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut parts = Vec::new();
        for (i, c) in cells.enumerate() {
            parts.push(if i == 0 { format!("{c:<w$}", w = widths[i]) } else { format!("{c:>w$}", w = widths[i]) });
        }
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut header.iter().copied());
    for row in &body {
        line(&mut row.iter().map(String::as_str));
    }
    out
}
