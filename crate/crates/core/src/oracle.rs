//! Independent ground truth for the two problems.
//!
//! The brute-force solvers enumerate vertex subsets outright and exist to be
//! obviously correct, not fast; the constrained variants give per-node,
//! per-entry reference values for the tables. The two-pass solver scales to
//! any n and is trusted only because the test suites first show it equal to
//! brute force on every small instance.

use thiserror::Error;

use crate::domination;
use crate::packing;
use crate::tree::{NodeId, Tree};
use crate::Problem;

/// Largest n the subset-enumeration oracles accept.
pub const BRUTE_FORCE_MAX_NODES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{nodes} nodes exceed the enumeration limit of {max}")]
    TooLarge { nodes: usize, max: usize },
    #[error("node {node} out of range for {nodes} nodes")]
    InvalidNode { node: NodeId, nodes: usize },
    #[error("table index {index} out of range 0..={max}")]
    IndexOutOfRange { index: u64, max: u64 },
    #[error("k must be at least 1")]
    InvalidK,
}

/// An optimum, one witness attaining it, and (for the enumeration solvers)
/// how many subsets attain it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub optimum: u64,
    pub witness: Vec<NodeId>,
    /// `None` when the solver does not count optima (the two-pass solver).
    pub optima_count: Option<u64>,
}

fn check_size(tree: &Tree) -> Result<(), OracleError> {
    let nodes = tree.node_count();
    if nodes > BRUTE_FORCE_MAX_NODES {
        return Err(OracleError::TooLarge {
            nodes,
            max: BRUTE_FORCE_MAX_NODES,
        });
    }
    Ok(())
}

fn check_k(k: u32) -> Result<(), OracleError> {
    if k >= 1 {
        Ok(())
    } else {
        Err(OracleError::InvalidK)
    }
}

/// All-pairs distances via BFS from every node, independent of the tree's
/// own distance query.
fn all_pairs(tree: &Tree) -> Vec<Vec<u32>> {
    let n = tree.node_count();
    let mut matrix = vec![vec![0u32; n]; n];
    for (src, row) in matrix.iter_mut().enumerate() {
        let mut seen = vec![false; n];
        seen[src] = true;
        let mut frontier = vec![src];
        let mut dist = 0;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &v in &frontier {
                row[v] = dist;
                let mut push = |u: NodeId, seen: &mut Vec<bool>| {
                    if !seen[u] {
                        seen[u] = true;
                        next.push(u);
                    }
                };
                if let Some(p) = tree.parent_of(v) {
                    push(p, &mut seen);
                }
                for &c in tree.children_of(v) {
                    push(c, &mut seen);
                }
            }
            frontier = next;
            dist += 1;
        }
    }
    matrix
}

fn members(mask: u32, universe: &[NodeId]) -> Vec<NodeId> {
    universe
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &v)| v)
        .collect()
}

fn packing_ok(mask: u32, universe: &[NodeId], dist: &[Vec<u32>], k: u32) -> bool {
    let nodes = members(mask, universe);
    for (i, &u) in nodes.iter().enumerate() {
        for &v in &nodes[i + 1..] {
            if dist[u][v] <= k {
                return false;
            }
        }
    }
    true
}

/// Exact maximum K-packing by full subset scan, smallest witness mask first.
pub fn brute_force_packing(tree: &Tree, k: u32) -> Result<OracleResult, OracleError> {
    check_size(tree)?;
    check_k(k)?;
    let n = tree.node_count();
    let universe: Vec<NodeId> = (0..n).collect();
    let dist = all_pairs(tree);
    let mut best = 0u32;
    let mut count = 1u64; // the empty set
    let mut witness = 0u32;
    for mask in 1..(1u32 << n) {
        if !packing_ok(mask, &universe, &dist, k) {
            continue;
        }
        let size = mask.count_ones();
        if size > best {
            best = size;
            count = 1;
            witness = mask;
        } else if size == best {
            count += 1;
        }
    }
    Ok(OracleResult {
        optimum: best as u64,
        witness: members(witness, &universe),
        optima_count: Some(count),
    })
}

fn domination_ok(mask: u32, universe: &[NodeId], dist: &[Vec<u32>], k: u32) -> bool {
    let nodes = members(mask, universe);
    universe
        .iter()
        .all(|&v| nodes.iter().any(|&s| dist[v][s] <= k))
}

/// Exact minimum K-domination: subsets by increasing popcount, stopping at
/// the first feasible size (and counting every optimum of that size).
pub fn brute_force_domination(tree: &Tree, k: u32) -> Result<OracleResult, OracleError> {
    check_size(tree)?;
    check_k(k)?;
    let n = tree.node_count();
    let universe: Vec<NodeId> = (0..n).collect();
    let dist = all_pairs(tree);
    for size in 0..=n as u32 {
        let mut count = 0u64;
        let mut witness = None;
        for mask in masks_of_popcount(n, size) {
            if domination_ok(mask, &universe, &dist, k) {
                count += 1;
                if witness.is_none() {
                    witness = Some(mask);
                }
            }
        }
        if let Some(mask) = witness {
            return Ok(OracleResult {
                optimum: size as u64,
                witness: members(mask, &universe),
                optima_count: Some(count),
            });
        }
    }
    unreachable!("the full vertex set always dominates")
}

/// All n-bit masks of the given popcount, ascending (Gosper's hack).
fn masks_of_popcount(n: usize, size: u32) -> impl Iterator<Item = u32> {
    let limit = 1u64 << n;
    let mut current: u64 = if size == 0 { 0 } else { (1u64 << size) - 1 };
    let mut done = false;
    std::iter::from_fn(move || {
        if done || current >= limit {
            return None;
        }
        let out = current as u32;
        if size == 0 {
            done = true;
        } else {
            let c = current & current.wrapping_neg();
            let r = current + c;
            current = (((r ^ current) >> 2) / c) | r;
        }
        Some(out)
    })
}

/// Exhaustive maximum packing within the subtree of `v`, with every selected
/// vertex at least `min_depth` levels below `v` — the reference for packing
/// table entries.
pub fn constrained_packing_opt(
    tree: &Tree,
    v: NodeId,
    min_depth: u64,
    k: u32,
) -> Result<u64, OracleError> {
    check_size(tree)?;
    check_k(k)?;
    let n = tree.node_count();
    if v >= n {
        return Err(OracleError::InvalidNode { node: v, nodes: n });
    }
    if min_depth > k as u64 {
        return Err(OracleError::IndexOutOfRange {
            index: min_depth,
            max: k as u64,
        });
    }
    let sub = tree.subtree(v);
    let dist = all_pairs(tree);
    let base = dist[v].clone();
    let mut best = 0u64;
    for mask in 0..(1u32 << sub.len()) {
        let nodes = members(mask, &sub);
        if nodes.iter().any(|&u| (base[u] as u64) < min_depth) {
            continue;
        }
        if !packing_ok(mask, &sub, &dist, k) {
            continue;
        }
        best = best.max(nodes.len() as u64);
    }
    Ok(best)
}

/// Exhaustive minimum for a domination table entry within the subtree of
/// `v`: entries 0..=K require full internal domination plus a selected
/// vertex at depth <= entry; entry K+m only requires internal domination of
/// vertices deeper than K-m. `None` when no subset qualifies.
pub fn constrained_domination_opt(
    tree: &Tree,
    v: NodeId,
    entry: u64,
    k: u32,
) -> Result<Option<u64>, OracleError> {
    check_size(tree)?;
    check_k(k)?;
    let n = tree.node_count();
    if v >= n {
        return Err(OracleError::InvalidNode { node: v, nodes: n });
    }
    if entry > 2 * k as u64 {
        return Err(OracleError::IndexOutOfRange {
            index: entry,
            max: 2 * k as u64,
        });
    }
    let sub = tree.subtree(v);
    let dist = all_pairs(tree);
    let depth_of = |u: NodeId| dist[v][u] as u64;
    let need: Vec<NodeId> = if entry <= k as u64 {
        sub.clone()
    } else {
        let m = entry - k as u64;
        sub.iter()
            .copied()
            .filter(|&u| depth_of(u) > k as u64 - m)
            .collect()
    };
    let mut best: Option<u64> = None;
    for mask in 0..(1u32 << sub.len()) {
        let nodes = members(mask, &sub);
        if entry <= k as u64 && !nodes.iter().any(|&u| depth_of(u) <= entry) {
            continue;
        }
        let dominated = need
            .iter()
            .all(|&w| nodes.iter().any(|&s| dist[w][s] <= k));
        if !dominated {
            continue;
        }
        let size = nodes.len() as u64;
        if best.is_none_or(|b| size < b) {
            best = Some(size);
        }
    }
    Ok(best)
}

/// The two passes run as a plain recursive algorithm, no daemon. Valid for
/// any n; must agree with brute force on every instance both can solve
/// before being trusted beyond the enumeration limit.
pub fn centralized_solver(tree: &Tree, k: u32, problem: Problem) -> Result<OracleResult, OracleError> {
    check_k(k)?;
    let witness = match problem {
        Problem::Packing => {
            let states = packing::solve(tree, k).map_err(|_| OracleError::InvalidK)?;
            packing::black_nodes(&states)
        }
        Problem::Domination => {
            let states = domination::solve(tree, k).map_err(|_| OracleError::InvalidK)?;
            domination::black_nodes(&states)
        }
    };
    Ok(OracleResult {
        optimum: witness.len() as u64,
        witness,
        optima_count: None,
    })
}

/// The optimum every run is judged against: brute force while the instance
/// is small enough to enumerate, the cross-validated two-pass solver beyond.
pub fn reference_optimum(tree: &Tree, k: u32, problem: Problem) -> Result<u64, OracleError> {
    if tree.node_count() <= BRUTE_FORCE_MAX_NODES {
        match problem {
            Problem::Packing => brute_force_packing(tree, k).map(|r| r.optimum),
            Problem::Domination => brute_force_domination(tree, k).map(|r| r.optimum),
        }
    } else {
        centralized_solver(tree, k, problem).map(|r| r.optimum)
    }
}
