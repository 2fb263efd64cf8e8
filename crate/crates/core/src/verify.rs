//! Invariant checks over stabilized configurations, and the sweep behind the
//! `verify` subcommand.
//!
//! Every violation carries the serialized tree and instance parameters so a
//! failure can be replayed from the command line.

use std::sync::Arc;

use crate::batch::{self, InitKind, STREAM_TREE};
use crate::domination::{self, DominationNodeState};
use crate::engine::{default_max_moves, DaemonStrategy};
use crate::oracle;
use crate::packing::{self, Color, PackingNodeState};
use crate::mix_seed;
use crate::tree::Tree;
use crate::Problem;

/// Largest n the table-semantics oracle comparison runs at; the constrained
/// enumeration is exponential per node and entry.
pub const TABLE_ORACLE_MAX_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Replay context: serialized tree plus instance parameters.
    pub context: String,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}\n  in {}", self.detail, self.context)
    }
}

/// Check a stabilized packing configuration: local rule consistency,
/// monotone table, value bounds, root law, validity and optimality of the
/// black set, and (on small trees) entry-by-entry agreement with the
/// constrained enumeration oracle.
pub fn check_packing_config(tree: &Tree, k: u32, labels: &[PackingNodeState]) -> Vec<String> {
    let mut out = Vec::new();
    let n = tree.node_count();
    if labels.len() != n {
        out.push(format!("{} labels for {} nodes", labels.len(), n));
        return out;
    }
    for v in 0..n {
        let st = &labels[v];
        let child_tables: Vec<&[u64]> = tree
            .children_of(v)
            .iter()
            .map(|&c| labels[c].table.as_slice())
            .collect();
        match packing::packing_table(&child_tables, k) {
            Ok(want) if want == st.table => {}
            Ok(want) => out.push(format!(
                "node {v}: table {:?} != recomputed {want:?}",
                st.table
            )),
            Err(e) => out.push(format!("node {v}: table recomputation failed: {e}")),
        }
        for i in 0..st.table.len().saturating_sub(1) {
            if st.table[i] < st.table[i + 1] {
                out.push(format!("node {v}: table not monotone at {i}: {:?}", st.table));
                break;
            }
        }
        if st.table.iter().any(|&x| x > n as u64) {
            out.push(format!("node {v}: table entry exceeds n: {:?}", st.table));
        }
        if st.color == Color::Black && (st.level != 0 || st.designated.is_some()) {
            out.push(format!(
                "node {v}: black but level={} designated={:?}",
                st.level, st.designated
            ));
        }
    }
    let blacks = packing::black_nodes(labels);
    if !packing::validate_packing(tree, &blacks, k) {
        out.push(format!("black set {blacks:?} is not a valid {k}-packing"));
    }
    if n <= oracle::BRUTE_FORCE_MAX_NODES {
        let best = oracle::brute_force_packing(tree, k)
            .expect("size checked")
            .optimum;
        if blacks.len() as u64 != best {
            out.push(format!(
                "black set size {} != brute-force optimum {best}",
                blacks.len()
            ));
        }
        let root_entry = labels[tree.root()].table[0];
        if root_entry != best {
            out.push(format!("root table entry 0 is {root_entry}, optimum {best}"));
        }
    }
    if n <= TABLE_ORACLE_MAX_NODES {
        for v in 0..n {
            for i in 0..=k as u64 {
                let want = oracle::constrained_packing_opt(tree, v, i, k).expect("size checked");
                let got = labels[v].table[i as usize];
                if got != want {
                    out.push(format!("node {v} entry {i}: table {got} != oracle {want}"));
                }
            }
        }
    }
    out
}

/// Domination counterpart of [`check_packing_config`]. The table shape check
/// reflects the two regimes: entries 0..=K+1 non-increasing, the promise
/// tail K+1..=2K non-decreasing and bounded by entry K.
pub fn check_domination_config(tree: &Tree, k: u32, labels: &[DominationNodeState]) -> Vec<String> {
    let mut out = Vec::new();
    let n = tree.node_count();
    if labels.len() != n {
        out.push(format!("{} labels for {} nodes", labels.len(), n));
        return out;
    }
    let ku = k as usize;
    for v in 0..n {
        let st = &labels[v];
        let child_tables: Vec<&[u64]> = tree
            .children_of(v)
            .iter()
            .map(|&c| labels[c].table.as_slice())
            .collect();
        match domination::domination_table(&child_tables, k) {
            Ok(want) if want == st.table => {}
            Ok(want) => out.push(format!(
                "node {v}: table {:?} != recomputed {want:?}",
                st.table
            )),
            Err(e) => out.push(format!("node {v}: table recomputation failed: {e}")),
        }
        for i in 0..=ku {
            if st.table[i] < st.table[i + 1] {
                out.push(format!(
                    "node {v}: reach entries not monotone at {i}: {:?}",
                    st.table
                ));
                break;
            }
        }
        for i in ku + 1..2 * ku {
            if st.table[i] > st.table[i + 1] {
                out.push(format!(
                    "node {v}: promise tail decreases at {i}: {:?}",
                    st.table
                ));
                break;
            }
        }
        if st.table[2 * ku] > st.table[ku] {
            out.push(format!(
                "node {v}: weakest promise entry exceeds entry K: {:?}",
                st.table
            ));
        }
        if st.table.iter().any(|&x| x > n as u64) {
            out.push(format!("node {v}: table entry exceeds n: {:?}", st.table));
        }
        if st.color == Color::Black && st.level != Some(0) {
            out.push(format!("node {v}: black but level={:?}", st.level));
        }
    }
    let blacks = domination::black_nodes(labels);
    if !domination::validate_domination(tree, &blacks, k) {
        out.push(format!("black set {blacks:?} is not a valid {k}-domination"));
    }
    if n <= oracle::BRUTE_FORCE_MAX_NODES {
        let best = oracle::brute_force_domination(tree, k)
            .expect("size checked")
            .optimum;
        if blacks.len() as u64 != best {
            out.push(format!(
                "black set size {} != brute-force optimum {best}",
                blacks.len()
            ));
        }
        let root_entry = labels[tree.root()].table[ku];
        if root_entry != best {
            out.push(format!("root table entry K is {root_entry}, optimum {best}"));
        }
    }
    if n <= TABLE_ORACLE_MAX_NODES {
        for v in 0..n {
            for entry in 0..=2 * k as u64 {
                let want = oracle::constrained_domination_opt(tree, v, entry, k)
                    .expect("size checked");
                let got = labels[v].table[entry as usize];
                match want {
                    Some(want) if want == got => {}
                    Some(want) => {
                        out.push(format!("node {v} entry {entry}: table {got} != oracle {want}"))
                    }
                    None => out.push(format!(
                        "node {v} entry {entry}: oracle infeasible but table holds {got}"
                    )),
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub max_n: usize,
    pub k_list: Vec<u32>,
    pub seed: u64,
    pub trees_per_size: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub instances: u64,
    pub runs: u64,
    pub violations: Vec<Violation>,
}

const SWEEP_DAEMONS: [DaemonStrategy; 3] = [
    DaemonStrategy::Random,
    DaemonStrategy::RoundRobin,
    DaemonStrategy::GreedyDeepest,
];

/// Random-instance sweep: every instance is solved by the two passes,
/// checked against the oracles, and then stabilized by the rule systems from
/// several corrupted starts under several daemons — all runs must silence on
/// the identical fixpoint, and a fixpoint start must cost zero moves.
pub fn sweep(config: &SweepConfig) -> SweepReport {
    let mut report = SweepReport::default();
    for &k in &config.k_list {
        for n in 1..=config.max_n {
            for index in 0..config.trees_per_size {
                let tree_seed = mix_seed(
                    config.seed,
                    STREAM_TREE ^ ((k as u64) << 40 | (n as u64) << 20 | index as u64),
                );
                let tree = Arc::new(Tree::random(n, tree_seed).expect("n >= 1"));
                for problem in Problem::ALL {
                    report.instances += 1;
                    let context = format!(
                        "problem={} k={k} seed={tree_seed} tree:\n{}",
                        problem.name(),
                        tree.to_file_string()
                    );
                    let violations =
                        sweep_instance(&tree, k, problem, tree_seed, &mut report.runs);
                    report.violations.extend(violations.into_iter().map(|detail| Violation {
                        context: context.clone(),
                        detail,
                    }));
                }
            }
        }
    }
    report
}

fn sweep_instance(
    tree: &Arc<Tree>,
    k: u32,
    problem: Problem,
    seed: u64,
    runs: &mut u64,
) -> Vec<String> {
    let mut out = Vec::new();
    let n = tree.node_count();
    let max_moves = default_max_moves(n);
    match problem {
        Problem::Packing => {
            let expected = packing::solve(tree, k).expect("k >= 1");
            out.extend(check_packing_config(tree, k, &expected));
            let closure =
                batch::simulate_packing(tree, k, DaemonStrategy::Random, seed, InitKind::Fixpoint, max_moves, false)
                    .expect("k >= 1");
            *runs += 1;
            if closure.moves_total != 0 {
                out.push(format!(
                    "fixpoint start cost {} moves instead of 0",
                    closure.moves_total
                ));
            }
            for (i, strategy) in SWEEP_DAEMONS.into_iter().enumerate() {
                for init in 0..2u64 {
                    let run_seed = mix_seed(seed, 100 + i as u64 * 10 + init);
                    let report = batch::simulate_packing(
                        tree,
                        k,
                        strategy,
                        run_seed,
                        InitKind::RandomCorrupted,
                        max_moves,
                        false,
                    )
                    .expect("k >= 1");
                    *runs += 1;
                    if !report.stabilized {
                        out.push(format!(
                            "{strategy} run (seed {run_seed}) did not stabilize within {max_moves}"
                        ));
                    } else if report.final_graph.labels() != expected.as_slice() {
                        out.push(format!(
                            "{strategy} run (seed {run_seed}) silenced on a different fixpoint"
                        ));
                    }
                }
            }
        }
        Problem::Domination => {
            let expected = domination::solve(tree, k).expect("k >= 1");
            out.extend(check_domination_config(tree, k, &expected));
            let closure = batch::simulate_domination(
                tree,
                k,
                DaemonStrategy::Random,
                seed,
                InitKind::Fixpoint,
                max_moves,
                false,
            )
            .expect("k >= 1");
            *runs += 1;
            if closure.moves_total != 0 {
                out.push(format!(
                    "fixpoint start cost {} moves instead of 0",
                    closure.moves_total
                ));
            }
            for (i, strategy) in SWEEP_DAEMONS.into_iter().enumerate() {
                for init in 0..2u64 {
                    let run_seed = mix_seed(seed, 100 + i as u64 * 10 + init);
                    let report = batch::simulate_domination(
                        tree,
                        k,
                        strategy,
                        run_seed,
                        InitKind::RandomCorrupted,
                        max_moves,
                        false,
                    )
                    .expect("k >= 1");
                    *runs += 1;
                    if !report.stabilized {
                        out.push(format!(
                            "{strategy} run (seed {run_seed}) did not stabilize within {max_moves}"
                        ));
                    } else if report.final_graph.labels() != expected.as_slice() {
                        out.push(format!(
                            "{strategy} run (seed {run_seed}) silenced on a different fixpoint"
                        ));
                    }
                }
            }
        }
    }
    out
}
