//! Strongly connected components, condensation and periods.

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Period of a strongly connected component.
///
/// A single node without a self-loop has no cycles at all. Its period is
/// reported as 1 with `trivial` set so callers can tell it apart from a
/// genuinely aperiodic component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Period {
    pub value: u64,
    pub trivial: bool,
}

impl Period {
    pub fn is_aperiodic(&self) -> bool {
        self.value == 1
    }
}

#[derive(Debug, Clone)]
pub struct SccDecomposition {
    component_of: Vec<usize>,
    components: Vec<Vec<usize>>,
    condensation_edges: Vec<(usize, usize)>,
    closed: Vec<bool>,
    periods: Vec<Period>,
}

impl SccDecomposition {
    pub fn node_count(&self) -> usize {
        self.component_of.len()
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component_of(&self, node: usize) -> usize {
        self.component_of[node]
    }

    pub fn component_ids(&self) -> &[usize] {
        &self.component_of
    }

    /// Components, each sorted ascending. Indices form a reverse topological
    /// order: every condensation edge goes from a higher to a lower index.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component(&self, id: usize) -> &[usize] {
        &self.components[id]
    }

    /// Deduplicated inter-component edges `(from, to)`.
    pub fn condensation_edges(&self) -> &[(usize, usize)] {
        &self.condensation_edges
    }

    /// A closed component has no edge leaving it: a walk entering it stays.
    pub fn is_closed(&self, id: usize) -> bool {
        self.closed[id]
    }

    pub fn closed_components(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.components.len()).filter(move |&c| self.closed[c])
    }

    pub fn period(&self, id: usize) -> Period {
        self.periods[id]
    }

    /// True when `node` lies in a closed component.
    pub fn is_recurrent(&self, node: usize) -> bool {
        self.closed[self.component_of[node]]
    }
}

/// Tarjan's algorithm, iterative so deep graphs do not exhaust the stack.
pub fn scc_decompose(graph: &DirectedGraph) -> SccDecomposition {
    let n = graph.node_count();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut next_index = 0usize;
    let mut component_of = vec![UNSEEN; n];
    let mut components: Vec<Vec<usize>> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let neighbors = graph.out_neighbors(v);
            if *pos < neighbors.len() {
                let w = neighbors[*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let id = components.len();
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    component_of[w] = id;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }

    let mut condensation_edges = Vec::new();
    for (s, t, _) in graph.edges() {
        let (cs, ct) = (component_of[s], component_of[t]);
        if cs != ct {
            condensation_edges.push((cs, ct));
        }
    }
    condensation_edges.sort_unstable();
    condensation_edges.dedup();

    let mut closed = vec![true; components.len()];
    for &(from, _) in &condensation_edges {
        closed[from] = false;
    }

    let periods = component_periods(graph, &component_of, &components);

    SccDecomposition {
        component_of,
        components,
        condensation_edges,
        closed,
        periods,
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Periods of all components in one linear pass, using BFS levels:
/// the period is the gcd over intra-component edges `u -> v` of
/// `level(u) + 1 - level(v)`.
fn component_periods(
    graph: &DirectedGraph,
    component_of: &[usize],
    components: &[Vec<usize>],
) -> Vec<Period> {
    let mut level = vec![u64::MAX; graph.node_count()];
    let mut queue = Vec::new();
    components
        .iter()
        .enumerate()
        .map(|(id, comp)| {
            let root = comp[0];
            if comp.len() == 1 {
                return if graph.has_self_loop(root) {
                    Period {
                        value: 1,
                        trivial: false,
                    }
                } else {
                    Period {
                        value: 1,
                        trivial: true,
                    }
                };
            }
            queue.clear();
            queue.push(root);
            level[root] = 0;
            let mut head = 0;
            let mut g = 0u64;
            while head < queue.len() {
                let u = queue[head];
                head += 1;
                for &v in graph.out_neighbors(u) {
                    if component_of[v] != id {
                        continue;
                    }
                    if level[v] == u64::MAX {
                        level[v] = level[u] + 1;
                        queue.push(v);
                    } else {
                        g = gcd(g, (level[u] + 1).abs_diff(level[v]));
                    }
                }
            }
            Period {
                value: g.max(1),
                trivial: false,
            }
        })
        .collect()
}

/// Period of `component`, which must be strongly connected within `graph`.
pub fn scc_period(graph: &DirectedGraph, component: &[usize]) -> Result<Period> {
    if component.is_empty() {
        return Err(Error::Structural("empty component".into()));
    }
    for &v in component {
        if v >= graph.node_count() {
            return Err(Error::NodeOutOfRange {
                index: v,
                node_count: graph.node_count(),
            });
        }
    }
    let sub = graph.induced_subgraph(component);
    let forward = sub.reachable_from(0).len();
    let backward = sub.reversed().reachable_from(0).len();
    if forward != sub.node_count() || backward != sub.node_count() {
        return Err(Error::Structural(
            "component is not strongly connected".into(),
        ));
    }
    let ids = vec![0usize; sub.node_count()];
    let comps = vec![(0..sub.node_count()).collect::<Vec<_>>()];
    Ok(component_periods(&sub, &ids, &comps)[0])
}

/// One node per component with deduplicated inter-component edges.
pub fn condensation(decomp: &SccDecomposition) -> DirectedGraph {
    DirectedGraph::from_edges(
        decomp.component_count(),
        decomp.condensation_edges().iter().copied(),
    )
    .expect("condensation edges index valid components")
}
