//! Seeded sweeps of independent simulation runs.
//!
//! Runs share nothing mutable, so a sweep is embarrassingly parallel:
//! with the `parallel` feature (default) [`run_sweep`] fans out over rayon,
//! otherwise it falls back to the sequential path. Results come back in
//! spec order either way, so output is deterministic under a fixed seed.

use std::collections::BTreeMap;
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domination::{self, DominationError, DominationNodeState};
use crate::engine::{Daemon, DaemonStrategy, LabeledGraph, RunOptions, RunReport};
use crate::mix_seed;
use crate::oracle;
use crate::packing::{self, PackingError, PackingNodeState};
use crate::tree::{NodeId, Tree};
use crate::Problem;

/// Seed streams carved out of one per-run seed.
pub const STREAM_TREE: u64 = 1;
pub const STREAM_INIT: u64 = 2;
pub const STREAM_DAEMON: u64 = 3;

/// How a run's initial labels are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// Every label field uniform over its value range, corrupted out of
    /// range with probability 0.25 per field.
    RandomCorrupted,
    /// Start at the silent configuration (closure testing).
    Fixpoint,
}

/// One run to execute.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub tree: Arc<Tree>,
    pub problem: Problem,
    pub k: u32,
    pub strategy: DaemonStrategy,
    /// Per-run seed; initial labels and the daemon draw from separate
    /// streams of it.
    pub seed: u64,
    pub init: InitKind,
    pub max_moves: u64,
}

/// Problem-independent view of a finished run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub moves_total: u64,
    pub moves_by_rule: BTreeMap<String, u64>,
    pub stabilized: bool,
    pub blacks: Vec<NodeId>,
    pub valid: bool,
}

/// A summary plus its oracle verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluatedRun {
    pub summary: RunSummary,
    pub optimum: u64,
    pub achieved: u64,
    pub optimal: bool,
}

/// Run the packing system once with seeded initial labels.
pub fn simulate_packing(
    tree: &Arc<Tree>,
    k: u32,
    strategy: DaemonStrategy,
    seed: u64,
    init: InitKind,
    max_moves: u64,
    record_trace: bool,
) -> Result<RunReport<PackingNodeState>, PackingError> {
    let n = tree.node_count();
    let labels = match init {
        InitKind::RandomCorrupted => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, STREAM_INIT));
            (0..n).map(|_| PackingNodeState::random(&mut rng, k, n)).collect()
        }
        InitKind::Fixpoint => packing::solve(tree, k)?,
    };
    let system = packing::packing_rules(k)?;
    let graph = LabeledGraph::new(Arc::clone(tree), labels).expect("one label per node");
    let daemon = Daemon::new(strategy, mix_seed(seed, STREAM_DAEMON));
    Ok(system.run(
        graph,
        &daemon,
        &RunOptions {
            max_moves,
            record_trace,
        },
    ))
}

/// Run the domination system once with seeded initial labels.
pub fn simulate_domination(
    tree: &Arc<Tree>,
    k: u32,
    strategy: DaemonStrategy,
    seed: u64,
    init: InitKind,
    max_moves: u64,
    record_trace: bool,
) -> Result<RunReport<DominationNodeState>, DominationError> {
    let n = tree.node_count();
    let labels = match init {
        InitKind::RandomCorrupted => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, STREAM_INIT));
            (0..n)
                .map(|_| DominationNodeState::random(&mut rng, k, n))
                .collect()
        }
        InitKind::Fixpoint => domination::solve(tree, k)?,
    };
    let system = domination::domination_rules(k)?;
    let graph = LabeledGraph::new(Arc::clone(tree), labels).expect("one label per node");
    let daemon = Daemon::new(strategy, mix_seed(seed, STREAM_DAEMON));
    Ok(system.run(
        graph,
        &daemon,
        &RunOptions {
            max_moves,
            record_trace,
        },
    ))
}

/// Execute one spec and summarize it.
pub fn run_one(spec: &RunSpec) -> RunSummary {
    match spec.problem {
        Problem::Packing => {
            let report = simulate_packing(
                &spec.tree,
                spec.k,
                spec.strategy,
                spec.seed,
                spec.init,
                spec.max_moves,
                false,
            )
            .expect("spec carries a valid k");
            let blacks = packing::black_nodes(report.final_graph.labels());
            let valid = packing::validate_packing(&spec.tree, &blacks, spec.k);
            RunSummary {
                moves_total: report.moves_total,
                moves_by_rule: report.moves_by_rule,
                stabilized: report.stabilized,
                blacks,
                valid,
            }
        }
        Problem::Domination => {
            let report = simulate_domination(
                &spec.tree,
                spec.k,
                spec.strategy,
                spec.seed,
                spec.init,
                spec.max_moves,
                false,
            )
            .expect("spec carries a valid k");
            let blacks = domination::black_nodes(report.final_graph.labels());
            let valid = domination::validate_domination(&spec.tree, &blacks, spec.k);
            RunSummary {
                moves_total: report.moves_total,
                moves_by_rule: report.moves_by_rule,
                stabilized: report.stabilized,
                blacks,
                valid,
            }
        }
    }
}

/// Execute one spec and judge it against the reference optimum.
pub fn evaluate_one(spec: &RunSpec) -> EvaluatedRun {
    let summary = run_one(spec);
    let optimum = oracle::reference_optimum(&spec.tree, spec.k, spec.problem)
        .expect("spec carries a valid k");
    let achieved = summary.blacks.len() as u64;
    let optimal = summary.valid && achieved == optimum;
    EvaluatedRun {
        summary,
        optimum,
        achieved,
        optimal,
    }
}

/// Sequential sweep, always available; the baseline the parallel path is
/// benchmarked against.
pub fn run_sweep_serial(specs: &[RunSpec]) -> Vec<RunSummary> {
    specs.iter().map(run_one).collect()
}

pub fn evaluate_sweep_serial(specs: &[RunSpec]) -> Vec<EvaluatedRun> {
    specs.iter().map(evaluate_one).collect()
}

/// Sweep over independent runs, in spec order.
#[cfg(feature = "parallel")]
pub fn run_sweep(specs: &[RunSpec]) -> Vec<RunSummary> {
    specs.par_iter().map(run_one).collect()
}

/// Sweep over independent runs, in spec order.
#[cfg(not(feature = "parallel"))]
pub fn run_sweep(specs: &[RunSpec]) -> Vec<RunSummary> {
    run_sweep_serial(specs)
}

/// Sweep plus oracle verdicts, in spec order.
#[cfg(feature = "parallel")]
pub fn evaluate_sweep(specs: &[RunSpec]) -> Vec<EvaluatedRun> {
    specs.par_iter().map(evaluate_one).collect()
}

/// Sweep plus oracle verdicts, in spec order.
#[cfg(not(feature = "parallel"))]
pub fn evaluate_sweep(specs: &[RunSpec]) -> Vec<EvaluatedRun> {
    evaluate_sweep_serial(specs)
}
