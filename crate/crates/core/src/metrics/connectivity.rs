use std::collections::VecDeque;

use crate::graph::GraphView;

/// Unit-capacity flow network with each vertex split into an in-half and an
/// out-half joined by an arc of capacity one.
struct SplitNetwork {
    n: usize,
    cap: Vec<Vec<u32>>,
}

impl SplitNetwork {
    fn new(vertices: usize, edges: &[(usize, usize)]) -> Self {
        let n = vertices * 2;
        let mut cap = vec![vec![0; n]; n];
        for v in 0..vertices {
            cap[2 * v][2 * v + 1] = 1;
        }
        for &(a, b) in edges {
            cap[2 * a + 1][2 * b] = 1;
            cap[2 * b + 1][2 * a] = 1;
        }
        Self { n, cap }
    }

    /// Edmonds-Karp maximum flow from the out-half of `s` to the in-half of
    /// `t`.
    fn local_connectivity(&self, s: usize, t: usize) -> u32 {
        let (source, sink) = (2 * s + 1, 2 * t);
        let mut residual = self.cap.clone();
        let mut flow = 0;
        loop {
            let mut parent = vec![usize::MAX; self.n];
            parent[source] = source;
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for v in 0..self.n {
                    if parent[v] == usize::MAX && residual[u][v] > 0 {
                        parent[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if parent[sink] == usize::MAX {
                return flow;
            }
            let mut v = sink;
            while v != source {
                let u = parent[v];
                residual[u][v] -= 1;
                residual[v][u] += 1;
                v = u;
            }
            flow += 1;
        }
    }
}

/// Mean, over unordered vertex pairs, of the maximum number of internally
/// vertex-disjoint paths between them. An edge between the pair counts as
/// one path. Zero for graphs with fewer than two vertices.
pub fn average_node_connectivity(vertices: usize, edges: &[(usize, usize)]) -> f64 {
    if vertices < 2 {
        return 0.0;
    }
    let net = SplitNetwork::new(vertices, edges);
    let mut total = 0u64;
    for s in 0..vertices {
        for t in s + 1..vertices {
            total += u64::from(net.local_connectivity(s, t));
        }
    }
    total as f64 / (vertices * (vertices - 1) / 2) as f64
}

impl GraphView {
    /// Average node connectivity of the active graph, self-links ignored.
    pub fn average_node_connectivity(&self) -> f64 {
        let keys: Vec<&str> = self.keys().collect();
        let index = |k: &str| keys.binary_search(&k).expect("active key");
        let edges: Vec<(usize, usize)> = self.edges().map(|(a, b)| (index(a), index(b))).collect();
        average_node_connectivity(keys.len(), &edges)
    }
}
