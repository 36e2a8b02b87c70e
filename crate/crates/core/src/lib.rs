//! Belief systems with logic constraints.
//!
//! Agents hold opinions on several logically related statements. Each step
//! mixes an agent's opinions through the constraint matrix `C`, averages them
//! over the social matrix `A`, and pulls stubborn agents back toward their
//! initial beliefs. Stacking current and initial beliefs gives a linear
//! system on `2nm` states whose transition matrix contains the Kronecker
//! product `(ΛA) ⊗ C`, so convergence, convergence time and the limit can be
//! read off the graphs of `A` and `C`.
//!
//! Module map:
//! - [`graph`], [`scc`]: sparse digraphs, strongly connected components, periods
//! - [`stochastic`]: stochastic matrices, distributions, stationary vectors
//! - [`kron`]: matrix and graph Kronecker products
//! - [`generators`]: classic and random topologies
//! - [`belief`]: the belief system, its dynamics and the convergence test
//! - [`mixing`]: mixing, coupling and absorbing times and their bounds
//! - [`limits`]: limiting beliefs and social power
//! - [`netio`], [`experiment`]: edge lists, sweeps, CSV and SVG output

pub mod belief;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod graph;
pub mod kron;
pub mod limits;
mod linalg;
pub mod mixing;
pub mod netio;
pub mod rng;
pub mod scc;
pub mod stochastic;
mod svg;

pub use belief::{BeliefSystem, ConvergenceVerdict};
pub use error::{Error, Result};
pub use generators::{generate, lazify, TopologySpec};
pub use graph::DirectedGraph;
pub use scc::{condensation, scc_decompose, scc_period, Period, SccDecomposition};
pub use stochastic::{equal_weight_matrix, CsrMatrix, Distribution, StochasticMatrix};
