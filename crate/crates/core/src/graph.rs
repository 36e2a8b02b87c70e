//! Sparse directed graphs in compressed row storage.
//!
//! An edge `i -> j` means row `i` of the associated matrix has a nonzero in
//! column `j`: a random walk standing at `i` may step to `j`. Information in
//! the belief dynamics flows the other way (agent `i` listens to `j`), so a
//! component that receives no information from outside is one the walk can
//! never leave, i.e. a sink of the condensation.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    node_count: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Option<Vec<f64>>,
    directed: bool,
}

impl DirectedGraph {
    /// Graph with `node_count` nodes and no edges.
    pub fn empty(node_count: usize) -> Self {
        DirectedGraph {
            node_count,
            offsets: vec![0; node_count + 1],
            targets: Vec::new(),
            weights: None,
            directed: true,
        }
    }

    /// Builds an unweighted graph. Duplicate edges are merged.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list: Vec<(usize, usize, f64)> = Vec::new();
        for (s, t) in edges {
            check_index(s, node_count)?;
            check_index(t, node_count)?;
            list.push((s, t, 1.0));
        }
        Ok(Self::build(node_count, list, false))
    }

    /// Builds a weighted graph. Duplicate edges are merged by summing their
    /// weights; edges whose merged weight is zero are dropped.
    pub fn from_weighted_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut list = Vec::new();
        for (s, t, w) in edges {
            check_index(s, node_count)?;
            check_index(t, node_count)?;
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight {
                    source_node: s,
                    target: t,
                    weight: w,
                });
            }
            list.push((s, t, w));
        }
        Ok(Self::build(node_count, list, true))
    }

    /// Builds an undirected graph: every pair is stored in both directions.
    pub fn undirected<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (s, t) in edges {
            check_index(s, node_count)?;
            check_index(t, node_count)?;
            list.push((s, t, 1.0));
            if s != t {
                list.push((t, s, 1.0));
            }
        }
        let mut g = Self::build(node_count, list, false);
        g.directed = false;
        Ok(g)
    }

    fn build(node_count: usize, mut list: Vec<(usize, usize, f64)>, weighted: bool) -> Self {
        list.sort_unstable_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(list.len());
        for (s, t, w) in list {
            match merged.last_mut() {
                Some(last) if last.0 == s && last.1 == t => last.2 += w,
                _ => merged.push((s, t, w)),
            }
        }
        if weighted {
            merged.retain(|e| e.2 > 0.0);
        }
        let mut offsets = vec![0usize; node_count + 1];
        for &(s, _, _) in &merged {
            offsets[s + 1] += 1;
        }
        for i in 0..node_count {
            offsets[i + 1] += offsets[i];
        }
        let targets = merged.iter().map(|e| e.1).collect();
        let weights = weighted.then(|| merged.iter().map(|e| e.2).collect());
        DirectedGraph {
            node_count,
            offsets,
            targets,
            weights,
            directed: true,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// Marks the graph as undirected. Callers guarantee symmetry.
    pub(crate) fn with_directed(mut self, directed: bool) -> Self {
        self.directed = directed;
        self
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Targets of `node`, sorted ascending.
    pub fn out_neighbors(&self, node: usize) -> &[usize] {
        &self.targets[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Weights aligned with [`out_neighbors`](Self::out_neighbors), if the graph is weighted.
    pub fn out_weights(&self, node: usize) -> Option<&[f64]> {
        self.weights
            .as_ref()
            .map(|w| &w[self.offsets[node]..self.offsets[node + 1]])
    }

    pub fn has_edge(&self, source: usize, target: usize) -> bool {
        self.out_neighbors(source).binary_search(&target).is_ok()
    }

    pub fn has_self_loop(&self, node: usize) -> bool {
        self.has_edge(node, node)
    }

    /// All edges as `(source, target, weight)` in row-major order; unweighted
    /// graphs report weight 1.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count).flat_map(move |s| {
            let range = self.offsets[s]..self.offsets[s + 1];
            range.map(move |e| {
                let w = self.weights.as_ref().map_or(1.0, |w| w[e]);
                (s, self.targets[e], w)
            })
        })
    }

    /// The graph with every edge reversed.
    pub fn reversed(&self) -> DirectedGraph {
        let list = self.edges().map(|(s, t, w)| (t, s, w)).collect();
        let mut g = Self::build(self.node_count, list, self.is_weighted());
        g.directed = self.directed;
        g
    }

    /// Subgraph induced on `nodes`; node `k` of the result is `nodes[k]`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> DirectedGraph {
        let mut local = vec![usize::MAX; self.node_count];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let mut list = Vec::new();
        for (k, &v) in nodes.iter().enumerate() {
            let ws = self.out_weights(v);
            for (e, &t) in self.out_neighbors(v).iter().enumerate() {
                if local[t] != usize::MAX {
                    list.push((k, local[t], ws.map_or(1.0, |w| w[e])));
                }
            }
        }
        let mut g = Self::build(nodes.len(), list, self.is_weighted());
        g.directed = self.directed;
        g
    }

    /// Nodes reachable from `start` (including `start`), in BFS order.
    pub fn reachable_from(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.node_count];
        let mut order = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &v in self.out_neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    order.push(v);
                }
            }
        }
        order
    }

    /// Number of weakly connected components.
    pub fn weak_component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.node_count).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut count = self.node_count;
        for (s, t, _) in self.edges() {
            let (a, b) = (find(&mut parent, s), find(&mut parent, t));
            if a != b {
                parent[a] = b;
                count -= 1;
            }
        }
        count
    }
}

fn check_index(index: usize, node_count: usize) -> Result<()> {
    if index >= node_count {
        Err(Error::NodeOutOfRange { index, node_count })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_merge_and_weights_sum() {
        let g = DirectedGraph::from_weighted_edges(3, [(0, 1, 0.5), (0, 1, 0.25), (1, 2, 1.0)])
            .unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.out_weights(0).unwrap(), &[0.75]);
    }

    #[test]
    fn out_of_range_rejected() {
        let err = DirectedGraph::from_edges(2, [(0, 2)]).unwrap_err();
        assert!(matches!(err, Error::NodeOutOfRange { index: 2, .. }));
    }

    #[test]
    fn negative_or_nan_weights_rejected() {
        assert!(DirectedGraph::from_weighted_edges(2, [(0, 1, -1.0)]).is_err());
        assert!(DirectedGraph::from_weighted_edges(2, [(0, 1, f64::NAN)]).is_err());
    }

    #[test]
    fn undirected_is_symmetric() {
        let g = DirectedGraph::undirected(3, [(0, 1), (1, 2), (2, 1)]).unwrap();
        assert_eq!(g.edge_count(), 4);
        for (s, t, _) in g.edges() {
            assert!(g.has_edge(t, s));
        }
        assert!(!g.is_directed());
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = DirectedGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 1)]).unwrap();
        let sub = g.induced_subgraph(&[1, 2, 3]);
        assert_eq!(sub.node_count(), 3);
        assert_eq!(sub.edge_count(), 3);
        assert!(sub.has_edge(2, 0));
    }

    #[test]
    fn weak_components() {
        let g = DirectedGraph::from_edges(5, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.weak_component_count(), 3);
    }
}
