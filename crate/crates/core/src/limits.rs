//! Where a convergent belief system ends up.

use crate::belief::{BeliefState, BeliefSystem};
use crate::error::{Error, Result};
use crate::linalg::solve_block;
use crate::scc::{scc_decompose, SccDecomposition};
use crate::stochastic::{stationary, CsrMatrix, Distribution, StochasticMatrix};

/// Absorption data of the transient part of a chain.
///
/// `absorb[t][k]` is the probability that a walk from `transient[t]` ends in
/// the closed component `classes[k]`; `times[t]` is its expected number of
/// steps before entering any closed component. The fundamental matrix
/// `(I − Z)⁻¹` is applied through per-component solves and never formed.
#[derive(Debug, Clone)]
pub struct TransientBlock {
    pub transient: Vec<usize>,
    pub classes: Vec<usize>,
    pub absorb: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    z: CsrMatrix,
    r: CsrMatrix,
}

impl TransientBlock {
    /// Transient-to-transient block, indexed like `transient`.
    pub fn z(&self) -> &CsrMatrix {
        &self.z
    }

    /// Transient-to-recurrent block; columns follow the recurrent states in
    /// ascending order.
    pub fn r(&self) -> &CsrMatrix {
        &self.r
    }
}

/// Fills the rows of `values` (row-major, `cols` per node) belonging to open
/// components. Rows of closed components must already hold their values.
/// Each open component `M` solves `(I − P_MM) x_M = source + P_M,out x_out`.
fn solve_open(
    matrix: &StochasticMatrix,
    decomp: &SccDecomposition,
    cols: usize,
    source: &[f64],
    values: &mut [f64],
) -> Result<()> {
    let csr = matrix.csr();
    for comp in 0..decomp.component_count() {
        if decomp.is_closed(comp) {
            continue;
        }
        let nodes = decomp.component(comp);
        let mut rhs = vec![vec![0.0; nodes.len()]; cols];
        for (a, &v) in nodes.iter().enumerate() {
            for (k, col) in rhs.iter_mut().enumerate() {
                col[a] = source[k];
            }
            let (idx, val) = csr.row(v);
            for (&w, &p) in idx.iter().zip(val) {
                let cw = decomp.component_of(w);
                if cw == comp {
                    continue;
                }
                if cw > comp {
                    return Err(Error::Ordering(format!(
                        "component {comp} exits to unsolved component {cw}"
                    )));
                }
                for (k, col) in rhs.iter_mut().enumerate() {
                    col[a] += p * values[w * cols + k];
                }
            }
        }
        let sol = solve_block(csr, nodes, &rhs)?;
        for (a, &v) in nodes.iter().enumerate() {
            for (k, col) in sol.iter().enumerate() {
                values[v * cols + k] = col[a];
            }
        }
    }
    Ok(())
}

/// Absorption probabilities into each closed component and expected
/// absorbing times, by solving component by component in reverse
/// topological order.
pub fn absorbing_probabilities(
    matrix: &StochasticMatrix,
    decomp: &SccDecomposition,
) -> Result<TransientBlock> {
    let n = matrix.dim();
    if decomp.node_count() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: decomp.node_count(),
        });
    }
    let classes: Vec<usize> = decomp.closed_components().collect();
    let mut class_of = vec![usize::MAX; decomp.component_count()];
    for (k, &c) in classes.iter().enumerate() {
        class_of[c] = k;
    }
    let cols = classes.len() + 1;
    let mut values = vec![0.0; n * cols];
    for v in 0..n {
        let c = decomp.component_of(v);
        if decomp.is_closed(c) {
            values[v * cols + class_of[c]] = 1.0;
        }
    }
    let mut source = vec![0.0; cols];
    source[classes.len()] = 1.0;
    solve_open(matrix, decomp, cols, &source, &mut values)?;

    let transient: Vec<usize> = (0..n).filter(|&v| !decomp.is_recurrent(v)).collect();
    let recurrent: Vec<usize> = (0..n).filter(|&v| decomp.is_recurrent(v)).collect();
    let mut absorb = Vec::with_capacity(transient.len());
    let mut times = Vec::with_capacity(transient.len());
    for &v in &transient {
        let row = &values[v * cols..(v + 1) * cols];
        absorb.push(row[..classes.len()].iter().map(|p| p.max(0.0)).collect());
        times.push(row[classes.len()]);
    }
    let block = |targets: &[usize]| {
        let rows = transient
            .iter()
            .map(|&v| {
                let (idx, val) = matrix.row(v);
                idx.iter()
                    .zip(val)
                    .filter_map(|(&w, &p)| targets.binary_search(&w).ok().map(|k| (k, p)))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(targets.len(), rows)
    };
    let z = block(&transient)?;
    let r = block(&recurrent)?;
    Ok(TransientBlock {
        transient,
        classes,
        absorb,
        times,
        z,
        r,
    })
}

/// Stationary distribution of a closed, aperiodic component.
fn component_stationary(
    matrix: &StochasticMatrix,
    decomp: &SccDecomposition,
    comp: usize,
) -> Result<Vec<f64>> {
    if !decomp.is_closed(comp) {
        return Err(Error::Structural(format!("component {comp} is not closed")));
    }
    let p = decomp.period(comp);
    if !p.is_aperiodic() {
        return Err(Error::NotErgodic(format!(
            "closed component {comp} has period {}",
            p.value
        )));
    }
    let nodes = decomp.component(comp);
    if nodes.len() == 1 {
        return Ok(vec![1.0]);
    }
    Ok(stationary(&matrix.restrict(nodes)?)?.into_vec())
}

/// Dense limit `lim P^k`, row by row. Fails if a closed class is periodic.
pub fn limit_matrix(matrix: &StochasticMatrix) -> Result<Vec<Vec<f64>>> {
    let n = matrix.dim();
    if n.saturating_mul(n) > 100_000_000 {
        return Err(Error::TooLarge {
            nonzeros: n.saturating_mul(n),
            cap: 100_000_000,
        });
    }
    let decomp = scc_decompose(&matrix.graph());
    let pis: Vec<(usize, Vec<f64>)> = decomp
        .closed_components()
        .map(|c| component_stationary(matrix, &decomp, c).map(|pi| (c, pi)))
        .collect::<Result<_>>()?;
    let block = absorbing_probabilities(matrix, &decomp)?;
    let mut out = vec![vec![0.0; n]; n];
    let mut class_index = vec![usize::MAX; decomp.component_count()];
    for (k, (c, _)) in pis.iter().enumerate() {
        class_index[*c] = k;
    }
    for (v, row) in out.iter_mut().enumerate() {
        let c = decomp.component_of(v);
        if decomp.is_closed(c) {
            let (_, pi) = &pis[class_index[c]];
            for (&w, &p) in decomp.component(c).iter().zip(pi) {
                row[w] = p;
            }
        }
    }
    for (t, &v) in block.transient.iter().enumerate() {
        let row = &mut out[v];
        for (k, (c, pi)) in pis.iter().enumerate() {
            let a = block.absorb[t][k];
            if a == 0.0 {
                continue;
            }
            for (&w, &p) in decomp.component(*c).iter().zip(pi) {
                row[w] += a * p;
            }
        }
    }
    Ok(out)
}

/// Limit of `P^k x` for a chain whose closed classes are all aperiodic.
pub fn limit_values(matrix: &StochasticMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let decomp = scc_decompose(&matrix.graph());
    let mut closed = vec![None; matrix.dim()];
    for comp in decomp.closed_components() {
        let pi = component_stationary(matrix, &decomp, comp)?;
        let nodes = decomp.component(comp);
        let value: f64 = nodes.iter().zip(&pi).map(|(&v, p)| p * x[v]).sum();
        for &v in nodes {
            closed[v] = Some(value);
        }
    }
    open_limit(matrix, &decomp, &closed)
}

/// Completes closed-component limits with the absorb-weighted limits of
/// the open components. Every node of a closed component needs a value.
pub fn open_limit(
    matrix: &StochasticMatrix,
    decomp: &SccDecomposition,
    closed_limits: &[Option<f64>],
) -> Result<Vec<f64>> {
    let n = matrix.dim();
    if closed_limits.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: closed_limits.len(),
        });
    }
    let mut values = vec![0.0; n];
    for v in 0..n {
        if decomp.is_recurrent(v) {
            values[v] = closed_limits[v].ok_or_else(|| {
                Error::Ordering(format!("no limit supplied for recurrent state {v}"))
            })?;
        }
    }
    solve_open(matrix, decomp, 1, &[0.0], &mut values)?;
    Ok(values)
}

/// Common limit of the closed component `comp` of the system matrix.
///
/// When the component is the full product of a closed agent class and a
/// closed topic class its stationary vector is the product of the factor
/// stationary vectors; otherwise it is computed on the component directly.
pub fn closed_limit(system: &BeliefSystem, decomp: &SccDecomposition, comp: usize) -> Result<f64> {
    let x = system.stacked_initial();
    let nodes = decomp.component(comp);
    let pi = closed_stationary(system, decomp, comp, None)?;
    Ok(nodes.iter().zip(&pi).map(|(&v, p)| p * x[v]).sum())
}

fn closed_stationary(
    system: &BeliefSystem,
    decomp: &SccDecomposition,
    comp: usize,
    matrix: Option<&StochasticMatrix>,
) -> Result<Vec<f64>> {
    if !decomp.is_closed(comp) {
        return Err(Error::Structural(format!("component {comp} is not closed")));
    }
    let p = decomp.period(comp);
    if !p.is_aperiodic() {
        return Err(Error::NotErgodic(format!(
            "closed component {comp} has period {}",
            p.value
        )));
    }
    let nodes = decomp.component(comp);
    if nodes.len() == 1 {
        return Ok(vec![1.0]);
    }
    let m = system.topics();
    let nm = system.agents() * m;
    if nodes[0] < nm {
        let mut agents: Vec<usize> = nodes.iter().map(|&s| s / m).collect();
        let mut topics: Vec<usize> = nodes.iter().map(|&s| s % m).collect();
        agents.dedup();
        topics.sort_unstable();
        topics.dedup();
        if agents.len() * topics.len() == nodes.len() {
            let pa = system.influence().restrict(&agents);
            let pc = system.constraints().restrict(&topics);
            if let (Ok(pa), Ok(pc)) = (pa, pc) {
                let a = stationary(&pa)?;
                let c = stationary(&pc)?;
                return Ok(a.kron(&c).into_vec());
            }
        }
    }
    let owned;
    let matrix = match matrix {
        Some(m) => m,
        None => {
            owned = system.system_matrix();
            &owned
        }
    };
    Ok(stationary(&matrix.restrict(nodes)?)?.into_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitMethod {
    Structural,
    FixedPoint,
    Simulation,
}

/// Stationary distribution and common value of one closed component.
#[derive(Debug, Clone)]
pub struct ClassLimit {
    pub nodes: Vec<usize>,
    pub pi: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct LimitReport {
    pub agents: usize,
    pub topics: usize,
    /// Limits of all `2nm` stacked states.
    pub values: Vec<f64>,
    /// Closed components among the current-belief states.
    pub classes: Vec<ClassLimit>,
    /// Stationary weights of the agents when the influence matrix has a
    /// single aperiodic closed class.
    pub social_power: Option<Vec<f64>>,
    pub method: LimitMethod,
}

impl LimitReport {
    /// Limiting beliefs, row-major `n × m`.
    pub fn beliefs(&self) -> &[f64] {
        &self.values[..self.agents * self.topics]
    }

    /// The common value when all agents agree on all topics to `1e-9`.
    pub fn consensus(&self) -> Option<f64> {
        let b = self.beliefs();
        let lo = b.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo <= 1e-9).then_some(0.5 * (hi + lo))
    }
}

/// Limit from the component structure of the system.
pub fn structural_limit(system: &BeliefSystem) -> Result<LimitReport> {
    let verdict = system.converges();
    if !verdict.converges {
        let w = &verdict.witnesses[0];
        return Err(Error::NonConvergent(format!(
            "{:?} component {:?} has period {}",
            w.graph, w.nodes, w.period
        )));
    }
    let (n, m) = (system.agents(), system.topics());
    let nm = n * m;
    let social_power = stationary(system.influence())
        .ok()
        .map(Distribution::into_vec);
    if system.is_oblivious() {
        return oblivious_limit(system, social_power);
    }
    let matrix = system.system_matrix();
    let decomp = scc_decompose(&matrix.graph());
    let x = system.stacked_initial();
    let mut closed = vec![None; 2 * nm];
    let mut classes = Vec::new();
    for comp in decomp.closed_components() {
        let nodes = decomp.component(comp);
        let pi = closed_stationary(system, &decomp, comp, Some(&matrix))?;
        let value: f64 = nodes.iter().zip(&pi).map(|(&v, p)| p * x[v]).sum();
        for &v in nodes {
            closed[v] = Some(value);
        }
        if nodes[0] < nm {
            classes.push(ClassLimit {
                nodes: nodes.to_vec(),
                pi,
                value,
            });
        }
    }
    let values = open_limit(&matrix, &decomp, &closed)?;
    Ok(LimitReport {
        agents: n,
        topics: m,
        values,
        classes,
        social_power,
        method: LimitMethod::Structural,
    })
}

/// With every agent oblivious the walk on pairs is a pair of independent
/// walks, so the limit is `L_A X0 L_C'`.
fn oblivious_limit(system: &BeliefSystem, social_power: Option<Vec<f64>>) -> Result<LimitReport> {
    let (n, m) = (system.agents(), system.topics());
    let la = limit_matrix(system.influence())?;
    let lc = limit_matrix(system.constraints())?;
    let x0 = system.initial_beliefs();
    // Y = X0 L_C'
    let mut y = vec![0.0; n * m];
    for j in 0..n {
        for u in 0..m {
            y[j * m + u] = (0..m).map(|v| lc[u][v] * x0[j * m + v]).sum();
        }
    }
    let mut values = vec![0.0; 2 * n * m];
    for i in 0..n {
        for (j, &a) in la[i].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for u in 0..m {
                values[i * m + u] += a * y[j * m + u];
            }
        }
    }
    values[n * m..].copy_from_slice(x0);

    let da = scc_decompose(&system.influence().graph());
    let dc = scc_decompose(&system.constraints().graph());
    let mut classes = Vec::new();
    for ca in da.closed_components() {
        let pa = component_stationary(system.influence(), &da, ca)?;
        for cc in dc.closed_components() {
            let pc = component_stationary(system.constraints(), &dc, cc)?;
            let mut nodes = Vec::new();
            let mut pi = Vec::new();
            for (&i, &wa) in da.component(ca).iter().zip(&pa) {
                for (&u, &wc) in dc.component(cc).iter().zip(&pc) {
                    nodes.push(i * m + u);
                    pi.push(wa * wc);
                }
            }
            let value = nodes.iter().zip(&pi).map(|(&s, p)| p * x0[s]).sum();
            classes.push(ClassLimit { nodes, pi, value });
        }
    }
    Ok(LimitReport {
        agents: n,
        topics: m,
        values,
        classes,
        social_power,
        method: LimitMethod::Structural,
    })
}

/// Fixed point of `X = ΛAXC' + (I − Λ)X0`, iterated from `X0`.
///
/// Stops once successive iterates differ by at most `tol` in the max norm.
/// A residual that stops shrinking over 64 iterations, or exhausting
/// `max_iter`, means there is no unique attracting fixed point.
pub fn stubborn_limit(system: &BeliefSystem, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    const WINDOW: usize = 64;
    let mut state = system.initial_state();
    let mut prev = state.beliefs().to_vec();
    let mut history = std::collections::VecDeque::with_capacity(WINDOW + 1);
    for _ in 0..max_iter {
        system.step(&mut state);
        let residual = residual(&state, &prev);
        if residual <= tol {
            return Ok(state.beliefs().to_vec());
        }
        prev.copy_from_slice(state.beliefs());
        history.push_back(residual);
        if history.len() > WINDOW {
            let old = history.pop_front().unwrap();
            if residual >= old {
                return Err(Error::NoUniqueFixedPoint(format!(
                    "residual {residual:e} stalled after {} iterations",
                    state.k
                )));
            }
        }
    }
    Err(Error::NoUniqueFixedPoint(format!(
        "residual above {tol:e} after {max_iter} iterations"
    )))
}

fn residual(state: &BeliefState, prev: &[f64]) -> f64 {
    state
        .beliefs()
        .iter()
        .zip(prev)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Stationary weights ranked from largest to smallest.
#[derive(Debug, Clone)]
pub struct SocialPower {
    /// `(node, weight)`, descending by weight.
    pub ranked: Vec<(usize, f64)>,
    /// `cumulative[k]` is the total weight of the `k + 1` heaviest nodes.
    pub cumulative: Vec<f64>,
}

impl SocialPower {
    /// Weight held by the heaviest `fraction` of nodes (rounded up).
    pub fn top_share(&self, fraction: f64) -> f64 {
        let n = self.ranked.len();
        if n == 0 || fraction <= 0.0 {
            return 0.0;
        }
        let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
        self.cumulative[k - 1]
    }
}

pub fn social_power(matrix: &StochasticMatrix) -> Result<SocialPower> {
    let pi = stationary(matrix)?.into_vec();
    let mut ranked: Vec<(usize, f64)> = pi.into_iter().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut acc = 0.0;
    let cumulative = ranked
        .iter()
        .map(|&(_, w)| {
            acc += w;
            acc
        })
        .collect();
    Ok(SocialPower { ranked, cumulative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, TopologySpec};
    use crate::stochastic::equal_weight_matrix;

    fn matrix(spec: TopologySpec) -> StochasticMatrix {
        equal_weight_matrix(&generate(&spec).unwrap()).unwrap()
    }

    #[test]
    fn single_exit_and_split_exit() {
        let p = StochasticMatrix::from_dense(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let d = scc_decompose(&p.graph());
        let b = absorbing_probabilities(&p, &d).unwrap();
        assert_eq!(b.absorb, vec![vec![1.0]]);
        assert_eq!(b.times, vec![1.0]);

        let p = StochasticMatrix::from_dense(&[
            vec![0.0, 0.5, 0.5],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let d = scc_decompose(&p.graph());
        let b = absorbing_probabilities(&p, &d).unwrap();
        let mut row = b.absorb[0].clone();
        row.sort_by(f64::total_cmp);
        assert_eq!(row, vec![0.5, 0.5]);
        assert_eq!(b.z().nnz(), 0);
        assert_eq!(b.r().nnz(), 2);
    }

    #[test]
    fn open_limit_is_linear_in_exits() {
        let q = 0.3;
        let p = StochasticMatrix::from_dense(&[
            vec![0.0, q, 1.0 - q],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let d = scc_decompose(&p.graph());
        let v = open_limit(&p, &d, &[None, Some(0.2), Some(0.9)]).unwrap();
        assert!((v[0] - (q * 0.2 + (1.0 - q) * 0.9)).abs() < 1e-15);
        assert!(matches!(
            open_limit(&p, &d, &[None, None, Some(0.9)]),
            Err(Error::Ordering(_))
        ));
    }

    #[test]
    fn complete_factors_give_plain_average() {
        let a = matrix(TopologySpec::complete(4));
        let c = matrix(TopologySpec::complete(3));
        let x0: Vec<f64> = (0..12).map(|k| k as f64 / 11.0).collect();
        let mean = x0.iter().sum::<f64>() / 12.0;
        let s = BeliefSystem::assemble(a, c, vec![1.0; 4], x0).unwrap();
        let r = structural_limit(&s).unwrap();
        assert!((r.consensus().unwrap() - mean).abs() < 1e-12);
        let d = scc_decompose(&s.system_graph());
        let comp = d.component_of(0);
        assert!((closed_limit(&s, &d, comp).unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn single_agent_cases() {
        let one = StochasticMatrix::identity(1);
        let s = BeliefSystem::assemble(one.clone(), one.clone(), vec![1.0], vec![0.37]).unwrap();
        assert_eq!(structural_limit(&s).unwrap().beliefs(), &[0.37]);
        let s = BeliefSystem::assemble(one.clone(), one, vec![0.5], vec![0.37]).unwrap();
        let x = stubborn_limit(&s, 1e-12, 1000).unwrap();
        assert!((x[0] - 0.37).abs() < 1e-15);
        assert!((structural_limit(&s).unwrap().beliefs()[0] - 0.37).abs() < 1e-15);
    }

    #[test]
    fn stubborn_methods_agree() {
        let a = matrix(TopologySpec::cycle(5));
        let c = matrix(TopologySpec::path(3).directed(true));
        let x0: Vec<f64> = (0..15).map(|k| ((k * 7) % 15) as f64 / 14.0).collect();
        let lambda = vec![1.0, 0.8, 1.0, 0.6, 1.0];
        let s = BeliefSystem::assemble(a, c, lambda, x0).unwrap();
        let structural = structural_limit(&s).unwrap();
        let fixed = stubborn_limit(&s, 1e-14, 1_000_000).unwrap();
        for (a, b) in structural.beliefs().iter().zip(&fixed) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_stubbornness_fixed_point_is_initial() {
        let a = matrix(TopologySpec::cycle(4));
        let c = matrix(TopologySpec::cycle(3));
        let x0: Vec<f64> = (0..12).map(|k| k as f64 / 12.0).collect();
        let s = BeliefSystem::assemble(a, c, vec![0.0; 4], x0.clone()).unwrap();
        assert_eq!(stubborn_limit(&s, 1e-12, 10).unwrap(), x0);
    }

    #[test]
    fn oscillating_fixed_point_is_reported() {
        let a = matrix(TopologySpec::cycle(4));
        let c = matrix(TopologySpec::complete(2));
        let x0: Vec<f64> = (0..8).map(|k| k as f64 / 8.0).collect();
        let s = BeliefSystem::assemble(a, c, vec![1.0; 4], x0).unwrap();
        assert!(matches!(
            stubborn_limit(&s, 1e-12, 10_000),
            Err(Error::NoUniqueFixedPoint(_))
        ));
        assert!(matches!(structural_limit(&s), Err(Error::NonConvergent(_))));
    }

    #[test]
    fn limit_matrix_rows_sum_to_one() {
        let p = matrix(TopologySpec::path(6).directed(true));
        let l = limit_matrix(&p).unwrap();
        for row in &l {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((row[5] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn social_power_of_complete_graph_is_uniform() {
        let sp = social_power(&matrix(TopologySpec::complete(10))).unwrap();
        for (k, c) in sp.cumulative.iter().enumerate() {
            assert!((c - (k + 1) as f64 / 10.0).abs() < 1e-12);
        }
        assert!((sp.top_share(0.2) - 0.2).abs() < 1e-12);
    }
}
