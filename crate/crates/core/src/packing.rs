//! Self-stabilizing maximum distance-K packing on rooted trees.
//!
//! A K-packing selects vertices pairwise farther than K apart. Each node
//! publishes a table of K+1 entries: entry `i` is the best packing size for
//! its subtree when the shallowest selected vertex must lie at least `i`
//! levels below the subtree root (entry 0 allows selecting the root itself).
//! Tables flow bottom-up; an operating index and a resolved choice (level,
//! designated child, color) flow top-down and realize one optimal packing.
//!
//! Three guarded rules per node keep those fields consistent with the
//! radius-1 view, in priority order:
//!
//! 1. `table`   — recompute the table from the children's tables.
//! 2. `index`   — adopt the operating index imposed by the parent (0 at the
//!    root).
//! 3. `resolve` — recompute (level, designated, color) from the table and
//!    the operating index.
//!
//! Every tie is broken deterministically (black over white, then smallest
//! level, then smallest child id), so the silent configuration is a function
//! of the tree and K alone — no daemon, seed, or initial state shows through.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Ball, RelabelingSystem, Rule};
use crate::tree::{NodeId, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PackingError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("own table has length {found}, expected {expected}")]
    TableLength { expected: usize, found: usize },
    #[error("child table {index} has length {found}, expected {expected}")]
    ChildTableLength {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("operating index {index} exceeds {max}")]
    IndexOutOfRange { index: u64, max: u64 },
    #[error("no branch of the table attains entry {entry}")]
    InconsistentTables { entry: usize },
}

/// Membership color: black nodes are the selected set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    #[serde(rename = "B")]
    Black,
    #[serde(rename = "W")]
    White,
}

/// Per-node state of the packing system.
///
/// The shape is fixed by K (the table always has K+1 entries) but every
/// value may start arbitrary, including out of range: self-stabilization
/// demands that rules absorb any initial assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingNodeState {
    /// Subtree optimum per minimum selection depth.
    #[serde(rename = "M")]
    pub table: Vec<u64>,
    /// Table entry this node currently operates under, imposed from above.
    #[serde(rename = "j")]
    pub op_index: u64,
    /// Depth of the shallowest selected vertex the node accounts for
    /// (0 when the node itself is black).
    #[serde(rename = "t")]
    pub level: u64,
    /// Child subtree holding that shallowest vertex, when white.
    #[serde(rename = "a")]
    pub designated: Option<NodeId>,
    pub color: Color,
}

impl PackingNodeState {
    /// All-zero white state of the right shape for `k`.
    pub fn blank(k: u32) -> Self {
        PackingNodeState {
            table: vec![0; k as usize + 1],
            op_index: 0,
            level: 0,
            designated: None,
            color: Color::White,
        }
    }

    /// Arbitrary state for fault injection: each field is drawn uniformly
    /// from its value range, or pushed out of range with probability 0.25.
    pub fn random<R: Rng>(rng: &mut R, k: u32, n: usize) -> Self {
        PackingNodeState {
            table: (0..=k).map(|_| field(rng, n as u64, 1000)).collect(),
            op_index: field(rng, k as u64, 100),
            level: field(rng, k as u64, 100),
            designated: random_designated(rng, n),
            color: if rng.random_bool(0.5) {
                Color::Black
            } else {
                Color::White
            },
        }
    }
}

pub(crate) fn field<R: Rng>(rng: &mut R, max_valid: u64, overshoot: u64) -> u64 {
    if rng.random_bool(0.25) {
        max_valid + 1 + rng.random_range(0..overshoot)
    } else {
        rng.random_range(0..=max_valid)
    }
}

pub(crate) fn random_designated<R: Rng>(rng: &mut R, n: usize) -> Option<NodeId> {
    if rng.random_bool(0.25) {
        Some(n + rng.random_range(0..10))
    } else {
        let r = rng.random_range(0..=n);
        (r < n).then_some(r)
    }
}

/// The resolved branch of a table entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice {
    pub level: u64,
    pub designated: Option<NodeId>,
    pub color: Color,
}

fn check_k(k: u32) -> Result<(), PackingError> {
    if k >= 1 {
        Ok(())
    } else {
        Err(PackingError::InvalidK)
    }
}

fn check_child_lengths(child_tables: &[&[u64]], expected: usize) -> Result<(), PackingError> {
    for (index, tab) in child_tables.iter().enumerate() {
        if tab.len() != expected {
            return Err(PackingError::ChildTableLength {
                index,
                expected,
                found: tab.len(),
            });
        }
    }
    Ok(())
}

fn clamp(v: u128) -> u64 {
    v.min(u64::MAX as u128) as u64
}

/// Value of selecting the node itself: 1 plus each child's entry K
/// (their members must sit at least K levels down to clear the node).
fn black_value(child_tables: &[&[u64]], k: usize) -> u64 {
    clamp(1 + child_tables.iter().map(|tab| tab[k] as u128).sum::<u128>())
}

/// Best designated-form value at level `t`: one child subtree holds the
/// shallowest member at depth t-1, every other subtree keeps its members at
/// depth >= max(t-1, K-t) so all cross distances exceed K. Returns the value
/// and the smallest achieving child index, or (0, None) for a childless node
/// (the empty selection).
fn designated_best(child_tables: &[&[u64]], k: usize, t: usize) -> (u64, Option<usize>) {
    if child_tables.is_empty() {
        return (0, None);
    }
    let sibling = (t - 1).max(k - t);
    let sibling_total: u128 = child_tables.iter().map(|tab| tab[sibling] as u128).sum();
    let mut best_value = 0u64;
    let mut best_index = None;
    for (i, tab) in child_tables.iter().enumerate() {
        let value = clamp(tab[t - 1] as u128 + (sibling_total - tab[sibling] as u128));
        if best_index.is_none() || value > best_value {
            best_value = value;
            best_index = Some(i);
        }
    }
    (best_value, best_index)
}

/// Compute a node's table from its children's tables.
///
/// Entry i for i >= 1 is the suffix maximum of the designated-form values
/// over levels t in i..=K; the suffix maximum is required because the raw
/// level value is not monotone in t (a shallow designated level can
/// constrain siblings harder than a deeper one). Entry 0 additionally
/// considers selecting the node itself. Total for arbitrary child values;
/// sums saturate instead of wrapping.
pub fn packing_table(child_tables: &[&[u64]], k: u32) -> Result<Vec<u64>, PackingError> {
    check_k(k)?;
    let width = k as usize + 1;
    check_child_lengths(child_tables, width)?;
    let k = k as usize;
    let mut table = vec![0u64; width];
    let mut running = 0u64;
    for t in (1..=k).rev() {
        running = running.max(designated_best(child_tables, k, t).0);
        table[t] = running;
    }
    table[0] = black_value(child_tables, k).max(table[1]);
    Ok(table)
}

/// Recover the branch housing entry `max(op_index, 1)` of the table —
/// black when the operating index is 0 and selecting the node attains the
/// optimum (black preferred on ties), otherwise the smallest level and then
/// smallest designated child that attain it.
pub fn resolve_choice(
    table: &[u64],
    children: &[(NodeId, &[u64])],
    op_index: u64,
    k: u32,
) -> Result<Choice, PackingError> {
    check_k(k)?;
    let width = k as usize + 1;
    if table.len() != width {
        return Err(PackingError::TableLength {
            expected: width,
            found: table.len(),
        });
    }
    let child_tables: Vec<&[u64]> = children.iter().map(|&(_, tab)| tab).collect();
    check_child_lengths(&child_tables, width)?;
    if op_index > k as u64 {
        return Err(PackingError::IndexOutOfRange {
            index: op_index,
            max: k as u64,
        });
    }
    let k = k as usize;
    if op_index == 0 && black_value(&child_tables, k) >= table[1] {
        return Ok(Choice {
            level: 0,
            designated: None,
            color: Color::Black,
        });
    }
    let lo = (op_index as usize).max(1);
    let target = table[lo];
    for t in lo..=k {
        let (value, index) = designated_best(&child_tables, k, t);
        if value == target {
            return Ok(Choice {
                level: t as u64,
                designated: index.map(|i| children[i].0),
                color: Color::White,
            });
        }
    }
    Err(PackingError::InconsistentTables { entry: lo })
}

/// Table entry a parent's published choice imposes on one of its children.
///
/// Black parents push their children to entry K; a white parent pushes its
/// designated child to level-1 and every other child to max(level-1,
/// K-level). Total on corrupt parent states (saturating, clamped to 0..=K)
/// so the rule layer stays well-defined during recovery.
pub fn imposed_index(parent: &PackingNodeState, child: NodeId, k: u32) -> u64 {
    let k = k as u64;
    if parent.color == Color::Black {
        return k;
    }
    let down = parent.level.saturating_sub(1);
    if parent.designated == Some(child) {
        down.min(k)
    } else {
        down.max(k.saturating_sub(parent.level)).min(k)
    }
}

/// The three-rule relabeling system for maximum K-packing.
pub fn packing_rules(k: u32) -> Result<RelabelingSystem<PackingNodeState>, PackingError> {
    check_k(k)?;

    let table_rule = Rule::new(
        "table",
        move |b: &Ball<'_, PackingNodeState>| b.center_label.table != expected_table(b, k),
        move |b| PackingNodeState {
            table: expected_table(b, k),
            ..b.center_label.clone()
        },
    );
    let index_rule = Rule::new(
        "index",
        move |b: &Ball<'_, PackingNodeState>| b.center_label.op_index != expected_index(b, k),
        move |b| PackingNodeState {
            op_index: expected_index(b, k),
            ..b.center_label.clone()
        },
    );
    let resolve_rule = Rule::new(
        "resolve",
        move |b: &Ball<'_, PackingNodeState>| match expected_choice(b, k) {
            Ok(c) => {
                b.center_label.level != c.level
                    || b.center_label.designated != c.designated
                    || b.center_label.color != c.color
            }
            Err(_) => true,
        },
        move |b| {
            let c = expected_choice(b, k)
                .expect("table and index rules are quiet when resolve fires");
            PackingNodeState {
                level: c.level,
                designated: c.designated,
                color: c.color,
                ..b.center_label.clone()
            }
        },
    );

    Ok(
        RelabelingSystem::new(vec![table_rule, index_rule, resolve_rule])
            .expect("rule names are unique"),
    )
}

fn expected_table(b: &Ball<'_, PackingNodeState>, k: u32) -> Vec<u64> {
    let tables: Vec<&[u64]> = b
        .child_labels
        .iter()
        .map(|(_, st)| st.table.as_slice())
        .collect();
    packing_table(&tables, k).expect("packing labels carry K+1-entry tables")
}

fn expected_index(b: &Ball<'_, PackingNodeState>, k: u32) -> u64 {
    match b.parent_label {
        None => 0,
        Some(parent) => imposed_index(parent, b.center, k),
    }
}

fn expected_choice(b: &Ball<'_, PackingNodeState>, k: u32) -> Result<Choice, PackingError> {
    let children: Vec<(NodeId, &[u64])> = b
        .child_labels
        .iter()
        .map(|&(c, st)| (c, st.table.as_slice()))
        .collect();
    resolve_choice(&b.center_label.table, &children, b.center_label.op_index, k)
}

/// The same two passes as the rule system, run directly: tables bottom-up,
/// choices top-down. Produces exactly the unique silent configuration.
pub fn solve(tree: &Tree, k: u32) -> Result<Vec<PackingNodeState>, PackingError> {
    check_k(k)?;
    let n = tree.node_count();
    let mut tables: Vec<Vec<u64>> = vec![Vec::new(); n];
    for v in tree.post_order() {
        let child_tables: Vec<&[u64]> = tree
            .children_of(v)
            .iter()
            .map(|&c| tables[c].as_slice())
            .collect();
        let table = packing_table(&child_tables, k)?;
        tables[v] = table;
    }
    let mut states: Vec<Option<PackingNodeState>> = vec![None; n];
    for v in tree.pre_order() {
        let op_index = match tree.parent_of(v) {
            None => 0,
            Some(p) => {
                let parent = states[p].as_ref().expect("parents resolved first");
                imposed_index(parent, v, k)
            }
        };
        let children: Vec<(NodeId, &[u64])> = tree
            .children_of(v)
            .iter()
            .map(|&c| (c, tables[c].as_slice()))
            .collect();
        let choice = resolve_choice(&tables[v], &children, op_index, k)?;
        states[v] = Some(PackingNodeState {
            table: tables[v].clone(),
            op_index,
            level: choice.level,
            designated: choice.designated,
            color: choice.color,
        });
    }
    Ok(states
        .into_iter()
        .map(|s| s.expect("every node visited"))
        .collect())
}

pub fn black_nodes(labels: &[PackingNodeState]) -> Vec<NodeId> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, st)| st.color == Color::Black)
        .map(|(v, _)| v)
        .collect()
}

/// True iff every distinct pair of `blacks` is more than K apart.
pub fn validate_packing(tree: &Tree, blacks: &[NodeId], k: u32) -> bool {
    for (i, &u) in blacks.iter().enumerate() {
        for &v in &blacks[i + 1..] {
            match tree.distance(u, v) {
                Ok(d) if d > k => {}
                _ => return false,
            }
        }
    }
    blacks.iter().all(|&v| v < tree.node_count())
}
