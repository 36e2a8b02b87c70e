//! Belief systems: assembly, blockwise dynamics and the convergence test.
//!
//! States are pair-indexed `i * m + u` (agent `i`, topic `u`). The stacked
//! state has `2nm` entries: current beliefs, then frozen initial beliefs.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::scc::scc_decompose;
use crate::stochastic::{CsrMatrix, StochasticMatrix};

#[derive(Debug, Clone)]
pub struct BeliefSystem {
    a: StochasticMatrix,
    c: StochasticMatrix,
    lambda: Vec<f64>,
    x0: Vec<f64>,
}

impl BeliefSystem {
    /// `x0` is row-major `n × m`.
    pub fn assemble(
        a: StochasticMatrix,
        c: StochasticMatrix,
        lambda: Vec<f64>,
        x0: Vec<f64>,
    ) -> Result<Self> {
        let (n, m) = (a.dim(), c.dim());
        if n == 0 || m == 0 {
            return Err(Error::InvalidSystem(
                "need at least one agent and one topic".into(),
            ));
        }
        if lambda.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: lambda.len(),
            });
        }
        if x0.len() != n * m {
            return Err(Error::DimensionMismatch {
                expected: n * m,
                found: x0.len(),
            });
        }
        if let Some((i, l)) = lambda
            .iter()
            .enumerate()
            .find(|(_, l)| !(0.0..=1.0).contains(*l))
        {
            return Err(Error::InvalidSystem(format!(
                "lambda[{i}] = {l} not in [0, 1]"
            )));
        }
        if let Some((i, x)) = x0
            .iter()
            .enumerate()
            .find(|(_, x)| !(0.0..=1.0).contains(*x))
        {
            return Err(Error::InvalidSystem(format!(
                "initial belief ({}, {}) = {x} not in [0, 1]",
                i / m,
                i % m
            )));
        }
        Ok(BeliefSystem { a, c, lambda, x0 })
    }

    pub fn agents(&self) -> usize {
        self.a.dim()
    }

    pub fn topics(&self) -> usize {
        self.c.dim()
    }

    /// Dimension of the stacked system, `2nm`.
    pub fn dim(&self) -> usize {
        2 * self.agents() * self.topics()
    }

    pub fn influence(&self) -> &StochasticMatrix {
        &self.a
    }

    pub fn constraints(&self) -> &StochasticMatrix {
        &self.c
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn initial_beliefs(&self) -> &[f64] {
        &self.x0
    }

    /// True when every agent has `λ = 1`.
    pub fn is_oblivious(&self) -> bool {
        self.lambda.iter().all(|&l| l == 1.0)
    }

    /// Initial stacked state `(x0, x0)`.
    pub fn stacked_initial(&self) -> Vec<f64> {
        let mut x = self.x0.clone();
        x.extend_from_slice(&self.x0);
        x
    }

    /// Materialized `2nm × 2nm` system matrix.
    pub fn system_matrix(&self) -> StochasticMatrix {
        let (n, m) = (self.agents(), self.topics());
        let nm = n * m;
        let mut offsets = Vec::with_capacity(2 * nm + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for i in 0..n {
            let li = self.lambda[i];
            let (aj, aw) = self.a.row(i);
            for u in 0..m {
                let (cv, cw) = self.c.row(u);
                if li > 0.0 {
                    for (&j, &wa) in aj.iter().zip(aw) {
                        for (&v, &wc) in cv.iter().zip(cw) {
                            indices.push(j * m + v);
                            values.push(li * wa * wc);
                        }
                    }
                }
                if li < 1.0 {
                    indices.push(nm + i * m + u);
                    values.push(1.0 - li);
                }
                offsets.push(indices.len());
            }
        }
        for s in nm..2 * nm {
            indices.push(s);
            values.push(1.0);
            offsets.push(indices.len());
        }
        StochasticMatrix::from_csr_unchecked(CsrMatrix::from_raw_parts(
            2 * nm,
            2 * nm,
            offsets,
            indices,
            values,
        ))
    }

    pub fn system_graph(&self) -> DirectedGraph {
        self.system_matrix().graph()
    }

    /// Applies one update in place, following the logic-constraint,
    /// social-aggregation and anchoring stages without forming the system
    /// matrix.
    pub fn step(&self, state: &mut BeliefState) {
        let (n, m) = (self.agents(), self.topics());
        let nm = n * m;
        assert_eq!(state.x.len(), 2 * nm, "state dimension");
        let (cur, anchor) = state.x.split_at_mut(nm);
        // x̂_i = x_i C'
        for i in 0..n {
            for u in 0..m {
                let (cv, cw) = self.c.row(u);
                state.hat[i * m + u] = cv.iter().zip(cw).map(|(&v, &w)| w * cur[i * m + v]).sum();
            }
        }
        // x̄ = A x̂, per topic
        for i in 0..n {
            let (aj, aw) = self.a.row(i);
            let bar = &mut state.bar[i * m..(i + 1) * m];
            bar.iter_mut().for_each(|b| *b = 0.0);
            for (&j, &w) in aj.iter().zip(aw) {
                for (b, h) in bar.iter_mut().zip(&state.hat[j * m..(j + 1) * m]) {
                    *b += w * h;
                }
            }
        }
        for i in 0..n {
            let l = self.lambda[i];
            for s in i * m..(i + 1) * m {
                cur[s] = (l * state.bar[s] + (1.0 - l) * anchor[s]).clamp(0.0, 1.0);
            }
        }
        state.k += 1;
    }

    pub fn initial_state(&self) -> BeliefState {
        BeliefState::new(self.stacked_initial())
    }

    /// Agents with `λ = 1` that cannot reach a stubborn agent in the
    /// influence graph.
    pub fn oblivious_agents(&self) -> Vec<usize> {
        let n = self.agents();
        let reverse = self.a.graph().reversed();
        let mut influenced = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| self.lambda[i] < 1.0).collect();
        for &i in &queue {
            influenced[i] = true;
        }
        while let Some(v) = queue.pop_front() {
            for &w in reverse.out_neighbors(v) {
                if !influenced[w] {
                    influenced[w] = true;
                    queue.push_back(w);
                }
            }
        }
        (0..n).filter(|&i| !influenced[i]).collect()
    }

    /// Decides convergence of `x_k` for every initial belief from the graph
    /// structure alone.
    ///
    /// With no oblivious agent every current belief drains toward the
    /// anchors and the system converges. Otherwise it converges exactly when
    /// every closed component of the oblivious influence subgraph and every
    /// closed component of the constraint graph is aperiodic.
    pub fn converges(&self) -> ConvergenceVerdict {
        let oblivious = self.oblivious_agents();
        let mut witnesses = Vec::new();
        if !oblivious.is_empty() {
            let sub = self.a.graph().induced_subgraph(&oblivious);
            let d = scc_decompose(&sub);
            for comp in d.closed_components() {
                let p = d.period(comp);
                if !p.is_aperiodic() {
                    witnesses.push(Witness {
                        graph: WitnessGraph::ObliviousAgents,
                        nodes: d.component(comp).iter().map(|&k| oblivious[k]).collect(),
                        period: p.value,
                    });
                }
            }
            let d = scc_decompose(&self.c.graph());
            for comp in d.closed_components() {
                let p = d.period(comp);
                if !p.is_aperiodic() {
                    witnesses.push(Witness {
                        graph: WitnessGraph::Constraints,
                        nodes: d.component(comp).to_vec(),
                        period: p.value,
                    });
                }
            }
        }
        ConvergenceVerdict {
            converges: witnesses.is_empty(),
            oblivious,
            witnesses,
        }
    }

    pub fn simulate(&self, opts: &SimulateOptions) -> Result<Simulation> {
        simulate(self, opts)
    }
}

/// Stacked state plus scratch space for the blockwise update.
#[derive(Debug, Clone)]
pub struct BeliefState {
    pub k: usize,
    x: Vec<f64>,
    hat: Vec<f64>,
    bar: Vec<f64>,
}

impl BeliefState {
    /// `x` is the full `2nm` stacked vector.
    pub fn new(x: Vec<f64>) -> Self {
        let half = x.len() / 2;
        BeliefState {
            k: 0,
            x,
            hat: vec![0.0; half],
            bar: vec![0.0; half],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    /// Current beliefs, row-major `n × m`.
    pub fn beliefs(&self) -> &[f64] {
        &self.x[..self.x.len() / 2]
    }

    pub fn anchors(&self) -> &[f64] {
        &self.x[self.x.len() / 2..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessGraph {
    ObliviousAgents,
    Constraints,
}

/// A periodic closed component that blocks convergence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub graph: WitnessGraph,
    pub nodes: Vec<usize>,
    pub period: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceVerdict {
    pub converges: bool,
    pub oblivious: Vec<usize>,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub stop_delta: f64,
    pub max_iter: usize,
    /// Record the current beliefs every this many steps.
    pub sample_every: Option<usize>,
    /// Window used to tell oscillation from slow convergence.
    pub window: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            stop_delta: 1e-10,
            max_iter: 1_000_000,
            sample_every: None,
            window: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    /// Final current beliefs, row-major `n × m`.
    pub beliefs: Vec<f64>,
    pub iterations: usize,
    pub last_delta: f64,
    pub settled: bool,
    pub trajectory: Vec<(usize, Vec<f64>)>,
}

/// Iterates until successive states differ by at most `stop_delta` in the
/// max norm. Reaching `max_iter` while the step size has stopped shrinking
/// over the last `window` steps is reported as [`Error::NonConvergent`];
/// reaching it while still shrinking returns with `settled == false`.
pub fn simulate(system: &BeliefSystem, opts: &SimulateOptions) -> Result<Simulation> {
    let mut state = system.initial_state();
    let mut prev = state.beliefs().to_vec();
    let mut trajectory = Vec::new();
    if opts.sample_every.is_some() {
        trajectory.push((0, prev.clone()));
    }
    let window = opts.window.max(1);
    let mut deltas: VecDeque<f64> = VecDeque::with_capacity(window + 1);
    let mut delta = f64::INFINITY;
    while state.k < opts.max_iter {
        system.step(&mut state);
        delta = state
            .beliefs()
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prev.copy_from_slice(state.beliefs());
        if let Some(every) = opts.sample_every {
            if every > 0 && state.k.is_multiple_of(every) {
                trajectory.push((state.k, prev.clone()));
            }
        }
        if delta <= opts.stop_delta {
            return Ok(Simulation {
                beliefs: prev,
                iterations: state.k,
                last_delta: delta,
                settled: true,
                trajectory,
            });
        }
        deltas.push_back(delta);
        if deltas.len() > window + 1 {
            deltas.pop_front();
        }
    }
    let oscillating = deltas.len() > window && delta >= deltas[0] * (1.0 - 1e-9);
    if oscillating {
        return Err(Error::NonConvergent(format!(
            "step size {delta:e} not decreasing after {} iterations",
            state.k
        )));
    }
    Ok(Simulation {
        beliefs: prev,
        iterations: state.k,
        last_delta: delta,
        settled: false,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, TopologySpec};
    use crate::stochastic::equal_weight_matrix;

    fn matrix(spec: TopologySpec) -> StochasticMatrix {
        equal_weight_matrix(&generate(&spec).unwrap()).unwrap()
    }

    fn spread(n: usize, m: usize) -> Vec<f64> {
        (0..n * m)
            .map(|k| ((k * 37 + 11) % 101) as f64 / 100.0)
            .collect()
    }

    fn system(a: TopologySpec, c: TopologySpec, lambda: f64) -> BeliefSystem {
        let (a, c) = (matrix(a), matrix(c));
        let (n, m) = (a.dim(), c.dim());
        BeliefSystem::assemble(a, c, vec![lambda; n], spread(n, m)).unwrap()
    }

    #[test]
    fn system_dimension_is_2nm() {
        let s = system(TopologySpec::cycle(5), TopologySpec::complete(4), 1.0);
        assert_eq!(s.dim(), 40);
        assert_eq!(s.system_matrix().dim(), 40);
    }

    #[test]
    fn fully_oblivious_has_no_anchor_coupling() {
        let s = system(TopologySpec::cycle(5), TopologySpec::complete(4), 1.0);
        let p = s.system_matrix();
        for r in 0..20 {
            assert!(p.row(r).0.iter().all(|&c| c < 20));
        }
    }

    #[test]
    fn fully_stubborn_resets_in_one_step() {
        let s = system(TopologySpec::cycle(5), TopologySpec::complete(4), 0.0);
        let mut st = s.initial_state();
        st.x[..20].iter_mut().for_each(|v| *v = 0.3);
        s.step(&mut st);
        assert_eq!(st.beliefs(), s.initial_beliefs());
        let sim = simulate(&s, &SimulateOptions::default()).unwrap();
        assert_eq!(sim.iterations, 1);
    }

    #[test]
    fn constant_state_is_fixed() {
        let s = system(TopologySpec::cycle(6), TopologySpec::path(3), 0.4);
        let mut st = BeliefState::new(vec![0.7; s.dim()]);
        s.step(&mut st);
        assert!(st.as_slice().iter().all(|v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn blockwise_step_matches_matrix_product() {
        let a = StochasticMatrix::from_dense(&[
            vec![0.2, 0.8, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let c = StochasticMatrix::from_dense(&[vec![0.25, 0.75], vec![0.6, 0.4]]).unwrap();
        let s = BeliefSystem::assemble(a, c, vec![0.9, 1.0, 0.3], spread(3, 2)).unwrap();
        let mut st = s.initial_state();
        st.x[..6].copy_from_slice(&[0.1, 0.9, 0.4, 0.2, 0.8, 0.5]);
        let x = st.as_slice().to_vec();
        let mut expect = vec![0.0; 12];
        s.system_matrix().csr().right_mul_into(&x, &mut expect);
        s.step(&mut st);
        for (a, b) in st.as_slice().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn convergence_verdicts() {
        let path = TopologySpec::path(4).directed(true);
        let ok = system(TopologySpec::cycle(5), path.clone(), 1.0).converges();
        assert!(ok.converges && ok.witnesses.is_empty());
        let bad = system(TopologySpec::cycle(4), path, 1.0).converges();
        assert!(!bad.converges);
        assert_eq!(bad.witnesses[0].graph, WitnessGraph::ObliviousAgents);
        assert_eq!(bad.witnesses[0].period, 2);
        let stubborn = system(
            TopologySpec::cycle(4),
            TopologySpec::cycle(3).directed(true),
            0.5,
        );
        assert!(stubborn.converges().converges);
    }

    #[test]
    fn consensus_on_aperiodic_oblivious_system() {
        let s = system(
            TopologySpec::cycle(5),
            TopologySpec::path(4).directed(true),
            1.0,
        );
        let sim = simulate(&s, &SimulateOptions::default()).unwrap();
        assert!(sim.settled);
        let lo = sim.beliefs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sim.beliefs.iter().cloned().fold(0.0, f64::max);
        assert!(hi - lo < 1e-6);
    }

    #[test]
    fn periodic_system_reports_nonconvergence() {
        let s = system(TopologySpec::cycle(4), TopologySpec::complete(2), 1.0);
        let opts = SimulateOptions {
            max_iter: 500,
            ..SimulateOptions::default()
        };
        assert!(matches!(simulate(&s, &opts), Err(Error::NonConvergent(_))));
    }

    #[test]
    fn assemble_rejects_bad_inputs() {
        let a = matrix(TopologySpec::cycle(3));
        let c = matrix(TopologySpec::cycle(3));
        assert!(BeliefSystem::assemble(a.clone(), c.clone(), vec![1.0; 2], vec![0.5; 9]).is_err());
        assert!(BeliefSystem::assemble(a.clone(), c.clone(), vec![1.5; 3], vec![0.5; 9]).is_err());
        assert!(BeliefSystem::assemble(a, c, vec![1.0; 3], vec![2.0; 9]).is_err());
    }
}
