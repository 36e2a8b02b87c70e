//! Mixing times, spectral bounds, coupling and absorbing times.

use rand::Rng;
use rayon::prelude::*;

use crate::belief::BeliefSystem;
use crate::error::{Error, Result};
use crate::limits::limit_matrix;
use crate::linalg::solve_block;
use crate::rng::{derive_seed, stream_rng};
use crate::scc::{scc_decompose, SccDecomposition};
use crate::stochastic::{check_ergodic, stationary, tv_slices, CsrMatrix, StochasticMatrix};

/// Which start states the worst-case distance is taken over.
#[derive(Debug, Clone, Copy)]
pub struct StartPolicy {
    /// Use every state when the chain has at most this many.
    pub exact_limit: usize,
    /// Otherwise sample this many distinct starts.
    pub samples: usize,
    pub seed: u64,
    pub max_steps: usize,
}

impl Default for StartPolicy {
    fn default() -> Self {
        StartPolicy {
            exact_limit: 2000,
            samples: 64,
            seed: 0,
            max_steps: 10_000_000,
        }
    }
}

impl StartPolicy {
    fn starts(&self, n: usize) -> (Vec<usize>, bool) {
        if n <= self.exact_limit || self.samples >= n {
            return ((0..n).collect(), true);
        }
        let mut rng = stream_rng(self.seed, 0x5354_4152);
        let mut picked = std::collections::BTreeSet::new();
        while picked.len() < self.samples {
            picked.insert(rng.random_range(0..n));
        }
        (picked.into_iter().collect(), false)
    }
}

#[derive(Debug, Clone)]
pub struct MixingTime {
    pub t_mix: usize,
    /// `d(k)` for `k = 0..=t_mix`.
    pub d_curve: Vec<f64>,
    /// False when the maximum was taken over sampled starts only.
    pub exact: bool,
}

/// Evolves point masses at `starts` in lockstep and records
/// `max_s TV(e_s P^k, target(s))`. Stops at the first `k` where the maximum
/// is at most `stop` or after `max_steps` steps.
fn lockstep_curve<'a>(
    matrix: &CsrMatrix,
    starts: &[usize],
    target: &(dyn Fn(usize) -> &'a [f64] + Sync),
    stop: Option<f64>,
    max_steps: usize,
) -> Result<Vec<f64>> {
    let n = matrix.rows();
    let mut walkers: Vec<(usize, Vec<f64>, Vec<f64>)> = starts
        .iter()
        .map(|&s| {
            let mut v = vec![0.0; n];
            v[s] = 1.0;
            (s, v, vec![0.0; n])
        })
        .collect();
    let measure = |walkers: &[(usize, Vec<f64>, Vec<f64>)]| -> Result<f64> {
        walkers
            .par_iter()
            .map(|(s, cur, _)| tv_slices(cur, target(*s)))
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
    };
    let mut curve = vec![measure(&walkers)?];
    for _ in 0..max_steps {
        if stop.is_some_and(|eps| *curve.last().unwrap() <= eps) {
            break;
        }
        walkers.par_iter_mut().for_each(|(_, cur, next)| {
            matrix.left_mul_into(cur, next);
            std::mem::swap(cur, next);
        });
        curve.push(measure(&walkers)?);
    }
    Ok(curve)
}

/// Smallest `k` with `max_x TV(P^k(x,·), π) ≤ epsilon`.
pub fn measure_mixing_time(
    matrix: &StochasticMatrix,
    epsilon: f64,
    policy: &StartPolicy,
) -> Result<MixingTime> {
    let pi = stationary(matrix)?.into_vec();
    let (starts, exact) = policy.starts(matrix.dim());
    let curve = lockstep_curve(
        matrix.csr(),
        &starts,
        &|_| &pi,
        Some(epsilon),
        policy.max_steps,
    )?;
    let last = *curve.last().unwrap();
    if last > epsilon {
        return Err(Error::FailedToConverge(format!(
            "distance {last:e} above {epsilon} after {} steps",
            policy.max_steps
        )));
    }
    Ok(MixingTime {
        t_mix: curve.len() - 1,
        d_curve: curve,
        exact,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenBounds {
    pub lambda2_abs: f64,
    pub lower: f64,
    pub upper: f64,
}

const LAMBDA2_TOL: f64 = 1e-10;
const LAMBDA2_MAX_ITER: usize = 2_000_000;

/// Second largest eigenvalue modulus, by power iteration on zero-sum left
/// vectors (the complement of the stationary direction). Norms are taken
/// in `ℓ²(1/π)`, where reversible chains are self-adjoint.
pub fn second_eigenvalue(matrix: &StochasticMatrix) -> Result<f64> {
    let pi = stationary(matrix)?.into_vec();
    let n = pi.len();
    if n == 1 {
        return Ok(0.0);
    }
    let inv: Vec<f64> = pi.iter().map(|p| 1.0 / p.max(1e-300)).collect();
    let norm = |x: &[f64]| {
        x.iter()
            .zip(&inv)
            .map(|(v, w)| v * v * w)
            .sum::<f64>()
            .sqrt()
    };
    let project = |x: &mut [f64]| {
        let s: f64 = x.iter().sum();
        x.iter_mut().zip(&pi).for_each(|(v, p)| *v -= s * p);
    };
    let mut rng = stream_rng(0x1a2b, 7);
    let mut x: Vec<f64> = pi.iter().map(|p| p * (rng.random::<f64>() - 0.5)).collect();
    project(&mut x);
    let mut y = vec![0.0; n];
    let mut prev = f64::NAN;
    for _ in 0..LAMBDA2_MAX_ITER {
        let nx = norm(&x);
        if nx < 1e-280 {
            return Ok(0.0);
        }
        x.iter_mut().for_each(|v| *v /= nx);
        matrix.csr().left_mul_into(&x, &mut y);
        project(&mut y);
        matrix.csr().left_mul_into(&y, &mut x);
        project(&mut x);
        let n2 = norm(&x);
        if n2 < 1e-280 {
            return Ok(0.0);
        }
        let rho = n2.sqrt();
        if (rho - prev).abs() <= LAMBDA2_TOL {
            return Ok(rho.min(1.0));
        }
        prev = rho;
    }
    Err(Error::FailedToConverge(format!(
        "second eigenvalue estimate still moving after {LAMBDA2_MAX_ITER} iterations"
    )))
}

/// Spectral bounds on `t_mix(ε)` from `|λ₂|`, natural logarithms.
pub fn eigen_bounds(matrix: &StochasticMatrix, epsilon: f64) -> Result<EigenBounds> {
    let lambda2_abs = second_eigenvalue(matrix)?;
    Ok(bounds_from_lambda(lambda2_abs, matrix.dim(), epsilon))
}

pub fn bounds_from_lambda(lambda2_abs: f64, n: usize, epsilon: f64) -> EigenBounds {
    let gap = 1.0 - lambda2_abs;
    let lower = if lambda2_abs == 0.0 {
        0.0
    } else {
        (lambda2_abs / (2.0 * gap) * (1.0 / (2.0 * epsilon)).ln()).max(0.0)
    };
    let upper = ((n as f64).ln() + (1.0 / epsilon).ln()) / gap;
    EigenBounds {
        lambda2_abs,
        lower,
        upper: if gap > 0.0 { upper } else { f64::INFINITY },
    }
}

/// Inverse-CDF sampler over the rows of a stochastic matrix.
pub(crate) struct TransitionSampler<'a> {
    matrix: &'a CsrMatrix,
    cumulative: Vec<f64>,
}

impl<'a> TransitionSampler<'a> {
    pub(crate) fn new(matrix: &'a CsrMatrix) -> Self {
        let mut cumulative = Vec::with_capacity(matrix.nnz());
        for r in 0..matrix.rows() {
            let mut acc = 0.0;
            for &w in matrix.row(r).1 {
                acc += w;
                cumulative.push(acc);
            }
        }
        TransitionSampler { matrix, cumulative }
    }

    pub(crate) fn step<R: Rng>(&self, state: usize, rng: &mut R) -> usize {
        let range = self.matrix.row_range(state);
        let idx = self.matrix.row(state).0;
        let cum = &self.cumulative[range];
        let u = rng.random::<f64>() * cum[cum.len() - 1];
        let k = cum.partition_point(|&c| c <= u).min(idx.len() - 1);
        idx[k]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CouplingOptions {
    pub trials: usize,
    pub step_cap: u64,
    pub seed: u64,
    /// Random start pairs screened in addition to all pairs on small chains.
    pub random_pairs: usize,
    /// All pairs are screened up to this many states.
    pub all_pairs_limit: usize,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        CouplingOptions {
            trials: 1000,
            step_cap: 10_000_000,
            seed: 0,
            random_pairs: 32,
            all_pairs_limit: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
    /// Trials that had not met by `step_cap`; they enter the mean as `step_cap`.
    pub capped: usize,
    pub start: (usize, usize),
}

fn coupling_trial<R: Rng>(
    sampler: &TransitionSampler<'_>,
    mut x: usize,
    mut y: usize,
    cap: u64,
    rng: &mut R,
) -> Option<u64> {
    let mut k = 0;
    while x != y {
        if k == cap {
            return None;
        }
        x = sampler.step(x, rng);
        y = sampler.step(y, rng);
        k += 1;
    }
    Some(k)
}

fn run_pair(
    sampler: &TransitionSampler<'_>,
    pair: (usize, usize),
    trials: usize,
    cap: u64,
    seed: u64,
) -> CouplingEstimate {
    let samples: Vec<Option<u64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            coupling_trial(sampler, pair.0, pair.1, cap, &mut rng)
        })
        .collect();
    let capped = samples.iter().filter(|s| s.is_none()).count();
    let values: Vec<f64> = samples.iter().map(|s| s.unwrap_or(cap) as f64).collect();
    let mean = values.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    CouplingEstimate {
        mean,
        std_err: (var / trials as f64).sqrt(),
        trials,
        capped,
        start: pair,
    }
}

/// Monte-Carlo estimate of the worst expected meeting time of two
/// independent walks.
///
/// Candidate start pairs (all pairs on small chains plus random ones) are
/// screened with a short pilot run; the slowest pair is then re-estimated
/// with `trials` fresh trials, so the reported mean is not biased by the
/// selection.
pub fn estimate_coupling_time(
    matrix: &StochasticMatrix,
    opts: &CouplingOptions,
) -> Result<CouplingEstimate> {
    check_ergodic(matrix)?;
    let n = matrix.dim();
    let trials = opts.trials.max(1);
    if n == 1 {
        return Ok(CouplingEstimate {
            mean: 0.0,
            std_err: 0.0,
            trials,
            capped: 0,
            start: (0, 0),
        });
    }
    let sampler = TransitionSampler::new(matrix.csr());
    let mut pairs = std::collections::BTreeSet::new();
    if n <= opts.all_pairs_limit {
        for x in 0..n {
            for y in x + 1..n {
                pairs.insert((x, y));
            }
        }
    }
    let mut rng = stream_rng(opts.seed, u64::MAX);
    for _ in 0..opts.random_pairs {
        let x = rng.random_range(0..n);
        let mut y = rng.random_range(0..n - 1);
        if y >= x {
            y += 1;
        }
        pairs.insert((x.min(y), x.max(y)));
    }
    let pilot = (trials / 10).max(20);
    let worst = pairs
        .iter()
        .enumerate()
        .map(|(k, &pair)| {
            let seed = derive_seed(opts.seed, 2 * k as u64 + 1);
            (
                run_pair(&sampler, pair, pilot, opts.step_cap, seed).mean,
                pair,
            )
        })
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, pair)| pair)
        .expect("at least one candidate pair");
    let est = run_pair(
        &sampler,
        worst,
        trials,
        opts.step_cap,
        derive_seed(opts.seed, 0),
    );
    if est.capped == trials {
        return Err(Error::AllTrialsCapped {
            trials,
            step_cap: opts.step_cap,
        });
    }
    Ok(est)
}

#[derive(Debug, Clone)]
pub struct AbsorbingTimes {
    /// Expected steps to enter a closed component; zero on closed components.
    pub per_node: Vec<f64>,
    /// `H = max_i h_i`.
    pub h_max: f64,
    /// Worst expected time to leave each open component; zero for closed ones.
    pub component_exit: Vec<f64>,
    /// Largest sum of `component_exit` along a path of the condensation.
    pub path_bound: f64,
}

/// Exact expected absorbing times, one linear solve per open component.
pub fn expected_absorbing_time(
    matrix: &StochasticMatrix,
    decomp: &SccDecomposition,
) -> Result<AbsorbingTimes> {
    let n = matrix.dim();
    if decomp.node_count() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: decomp.node_count(),
        });
    }
    let csr = matrix.csr();
    let mut per_node = vec![0.0; n];
    let mut component_exit = vec![0.0; decomp.component_count()];
    let mut path = vec![0.0f64; decomp.component_count()];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); decomp.component_count()];
    for &(from, to) in decomp.condensation_edges() {
        succ[from].push(to);
    }
    for comp in 0..decomp.component_count() {
        if decomp.is_closed(comp) {
            continue;
        }
        let nodes = decomp.component(comp);
        let mut through = vec![1.0; nodes.len()];
        let local = vec![1.0; nodes.len()];
        for (a, &v) in nodes.iter().enumerate() {
            let (idx, val) = csr.row(v);
            for (&w, &p) in idx.iter().zip(val) {
                if decomp.component_of(w) != comp {
                    through[a] += p * per_node[w];
                }
            }
        }
        let sol = solve_block(csr, nodes, &[through, local])?;
        for (a, &v) in nodes.iter().enumerate() {
            per_node[v] = sol[0][a];
        }
        component_exit[comp] = sol[1].iter().cloned().fold(0.0, f64::max);
        let downstream = succ[comp].iter().map(|&s| path[s]).fold(0.0, f64::max);
        path[comp] = component_exit[comp] + downstream;
    }
    Ok(AbsorbingTimes {
        h_max: per_node.iter().cloned().fold(0.0, f64::max),
        per_node,
        component_exit,
        path_bound: path.iter().cloned().fold(0.0, f64::max),
    })
}

/// `32 (max{L_G, L_T} + max{H_G, H_T}) ln(1/ε)`.
pub fn theorem_bound(l_g: f64, l_t: f64, h_g: f64, h_t: f64, epsilon: f64) -> f64 {
    32.0 * (l_g.max(l_t) + h_g.max(h_t)) * (1.0 / epsilon).ln()
}

/// `4 (L + H) ln(1/ε)`, the single-chain form.
pub fn chain_bound(l: f64, h: f64, epsilon: f64) -> f64 {
    4.0 * (l + h) * (1.0 / epsilon).ln()
}

/// Everything measured for a single ergodic chain.
#[derive(Debug, Clone)]
pub struct MixingReport {
    pub epsilon: f64,
    pub t_mix: usize,
    pub d_curve: Option<Vec<f64>>,
    pub lambda2_abs: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub coupling: CouplingEstimate,
    pub absorbing_h: f64,
    pub theorem_bound: f64,
}

pub fn analyze_chain(
    matrix: &StochasticMatrix,
    epsilon: f64,
    policy: &StartPolicy,
    coupling: &CouplingOptions,
) -> Result<MixingReport> {
    let mix = measure_mixing_time(matrix, epsilon, policy)?;
    let eig = eigen_bounds(matrix, epsilon)?;
    let coupling = estimate_coupling_time(matrix, coupling)?;
    let decomp = scc_decompose(&matrix.graph());
    let h = expected_absorbing_time(matrix, &decomp)?.h_max;
    Ok(MixingReport {
        epsilon,
        t_mix: mix.t_mix,
        d_curve: Some(mix.d_curve),
        lambda2_abs: eig.lambda2_abs,
        lower_bound: eig.lower,
        upper_bound: eig.upper,
        theorem_bound: theorem_bound(coupling.mean, coupling.mean, h, h, epsilon),
        coupling,
        absorbing_h: h,
    })
}

/// Coupling and absorbing time of a possibly reducible chain: `L` is the
/// worst coupling estimate over its closed classes, `H` its absorbing time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainTimes {
    pub coupling_mean: f64,
    pub coupling_se: f64,
    pub absorbing_h: f64,
}

pub fn chain_times(matrix: &StochasticMatrix, opts: &CouplingOptions) -> Result<ChainTimes> {
    let decomp = scc_decompose(&matrix.graph());
    let mut coupling_mean = 0.0f64;
    let mut coupling_se = 0.0f64;
    for (k, comp) in decomp.closed_components().enumerate() {
        let nodes = decomp.component(comp);
        if nodes.len() == 1 {
            continue;
        }
        let sub = matrix.restrict(nodes)?;
        let o = CouplingOptions {
            seed: derive_seed(opts.seed, k as u64),
            ..*opts
        };
        let est = estimate_coupling_time(&sub, &o)?;
        if est.mean > coupling_mean {
            coupling_mean = est.mean;
            coupling_se = est.std_err;
        }
    }
    let absorbing_h = expected_absorbing_time(matrix, &decomp)?.h_max;
    Ok(ChainTimes {
        coupling_mean,
        coupling_se,
        absorbing_h,
    })
}

/// Agent-side chain of a belief system: the influence matrix scaled by
/// `λ`, with one absorbing state per stubborn agent receiving `1 − λ`.
pub fn agent_chain(system: &BeliefSystem) -> StochasticMatrix {
    let a = system.influence();
    let n = a.dim();
    let lambda = system.lambda();
    let stubborn: Vec<usize> = (0..n).filter(|&i| lambda[i] < 1.0).collect();
    let mut rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let (idx, val) = a.row(i);
            let mut row: Vec<(usize, f64)> = if lambda[i] > 0.0 {
                idx.iter()
                    .zip(val)
                    .map(|(&j, &w)| (j, lambda[i] * w))
                    .collect()
            } else {
                Vec::new()
            };
            if lambda[i] < 1.0 {
                let k = stubborn.binary_search(&i).unwrap();
                row.push((n + k, 1.0 - lambda[i]));
            }
            row
        })
        .collect();
    rows.extend((0..stubborn.len()).map(|k| vec![(n + k, 1.0)]));
    StochasticMatrix::from_csr_renormalized(
        CsrMatrix::from_rows(n + stubborn.len(), rows).expect("valid agent chain"),
    )
    .expect("agent chain is stochastic")
}

/// `L̂` and `Ĥ` of both sides of a belief system and the composite bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemBound {
    pub agents: ChainTimes,
    pub constraints: ChainTimes,
    pub bound: f64,
}

pub fn system_bound(
    system: &BeliefSystem,
    epsilon: f64,
    opts: &CouplingOptions,
) -> Result<SystemBound> {
    let agents = chain_times(&agent_chain(system), opts)?;
    let constraints = chain_times(
        system.constraints(),
        &CouplingOptions {
            seed: derive_seed(opts.seed, 0xC0),
            ..*opts
        },
    )?;
    Ok(SystemBound {
        bound: theorem_bound(
            agents.coupling_mean,
            constraints.coupling_mean,
            agents.absorbing_h,
            constraints.absorbing_h,
            epsilon,
        ),
        agents,
        constraints,
    })
}

/// Largest current-belief dimension for which the general (non-factored)
/// distance computation is attempted.
pub const GENERAL_DISTANCE_LIMIT: usize = 2000;

/// `d(k) = max_s TV(P^k(s,·), P^∞(s,·))` over current-belief states `s`,
/// for `k = 0..=steps`, or until `d(k) ≤ stop`.
///
/// Anchor states never move and contribute nothing. With every agent
/// oblivious the walk from `(i, u)` is a product of independent walks and
/// the product distances are evaluated from the factor walks.
pub fn limit_distance_curve(
    system: &BeliefSystem,
    steps: usize,
    stop: Option<f64>,
) -> Result<Vec<f64>> {
    if system.is_oblivious() {
        return product_distance_curve(system.influence(), system.constraints(), steps, stop);
    }
    let nm = system.agents() * system.topics();
    if nm > GENERAL_DISTANCE_LIMIT {
        return Err(Error::TooLarge {
            nonzeros: nm,
            cap: GENERAL_DISTANCE_LIMIT,
        });
    }
    let p = system.system_matrix();
    let limit = limit_matrix(&p)?;
    let starts: Vec<usize> = (0..nm).collect();
    lockstep_curve(p.csr(), &starts, &|s| &limit[s], stop, steps)
}

/// First `k` with distance to the limit at most `epsilon`. The per-start
/// distance never increases, so this is also the smallest `k` from which
/// the distance stays below `epsilon`.
pub fn convergence_time(system: &BeliefSystem, epsilon: f64, max_steps: usize) -> Result<usize> {
    let curve = limit_distance_curve(system, max_steps, Some(epsilon))?;
    let last = *curve.last().unwrap();
    if last > epsilon {
        return Err(Error::FailedToConverge(format!(
            "distance to limit {last:e} above {epsilon} after {max_steps} steps"
        )));
    }
    Ok(curve.len() - 1)
}

fn product_distance_curve(
    a: &StochasticMatrix,
    c: &StochasticMatrix,
    steps: usize,
    stop: Option<f64>,
) -> Result<Vec<f64>> {
    let la = limit_matrix(a)?;
    let lc = limit_matrix(c)?;
    let mut wa = Walkers::new(a.dim());
    let mut wc = Walkers::new(c.dim());
    let mut curve = Vec::new();
    for k in 0..=steps {
        if k > 0 {
            wa.step(a.csr());
            wc.step(c.csr());
        }
        let d = product_max_tv(&wa.rows, &la, &wc.rows, &lc)?;
        curve.push(d);
        if stop.is_some_and(|eps| d <= eps) {
            break;
        }
    }
    Ok(curve)
}

struct Walkers {
    rows: Vec<Vec<f64>>,
    scratch: Vec<Vec<f64>>,
}

impl Walkers {
    fn new(n: usize) -> Self {
        let rows = (0..n)
            .map(|s| {
                let mut v = vec![0.0; n];
                v[s] = 1.0;
                v
            })
            .collect();
        Walkers {
            rows,
            scratch: vec![vec![0.0; n]; n],
        }
    }

    fn step(&mut self, m: &CsrMatrix) {
        self.rows
            .par_iter_mut()
            .zip(self.scratch.par_iter_mut())
            .for_each(|(cur, next)| {
                m.left_mul_into(cur, next);
                std::mem::swap(cur, next);
            });
    }
}

/// Relative accuracy of the factored distance-to-limit computation. Starts
/// with near-identical factor distances (symmetric graphs) would otherwise
/// all need the full product sum once one factor has mixed.
pub const PRODUCT_TV_SLACK: f64 = 1e-9;

fn product_tv(mu: &[f64], alpha: &[f64], nu: &[f64], beta: &[f64]) -> f64 {
    let mut s = 0.0;
    for (m, a) in mu.iter().zip(alpha) {
        for (n, b) in nu.iter().zip(beta) {
            s += (m * n - a * b).abs();
        }
    }
    0.5 * s
}

/// `max_{i,u} TV(μ_i ⊗ ν_u, α_i ⊗ β_u)`, to a relative accuracy of
/// [`PRODUCT_TV_SLACK`]. Pairs are visited by decreasing upper bound
/// `a + c − ac` (with `a`, `c` the factor distances) and the scan stops
/// once no remaining pair can beat the best exact value by more than the
/// slack; the marginal distances are lower bounds.
fn product_max_tv(
    mu: &[Vec<f64>],
    alpha: &[Vec<f64>],
    nu: &[Vec<f64>],
    beta: &[Vec<f64>],
) -> Result<f64> {
    let mut da: Vec<(f64, usize)> = mu
        .iter()
        .zip(alpha)
        .enumerate()
        .map(|(i, (m, a))| tv_slices(m, a).map(|d| (d, i)))
        .collect::<Result<_>>()?;
    let mut dc: Vec<(f64, usize)> = nu
        .iter()
        .zip(beta)
        .enumerate()
        .map(|(u, (m, b))| tv_slices(m, b).map(|d| (d, u)))
        .collect::<Result<_>>()?;
    da.sort_by(|x, y| y.0.total_cmp(&x.0));
    dc.sort_by(|x, y| y.0.total_cmp(&x.0));
    let upper = |a: f64, c: f64| a + c - a * c;
    let mut best = da[0].0.max(dc[0].0);
    let beats = |bound: f64, best: f64| bound > best * (1.0 + PRODUCT_TV_SLACK) + 1e-15;
    for &(a, i) in &da {
        if !beats(upper(a, dc[0].0), best) {
            break;
        }
        let live = dc
            .iter()
            .take_while(|&&(c, _)| beats(upper(a, c), best))
            .count();
        let row_best = dc[..live]
            .par_iter()
            .map(|&(_, u)| product_tv(&mu[i], &alpha[i], &nu[u], &beta[u]))
            .reduce(|| 0.0, f64::max);
        best = best.max(row_best);
    }
    Ok(best)
}
