//! Self-stabilizing minimum distance-K domination on rooted trees.
//!
//! A K-dominating set puts every vertex within distance K of a selected
//! vertex. The rule skeleton is the same as the packing system's (table,
//! index, resolve), but the table has 2K+1 entries covering two regimes:
//!
//! - Entry `i` for `i` in `0..=K` ("reach" entries): minimum selection inside
//!   the subtree that dominates the whole subtree and keeps a selected vertex
//!   at depth <= i from the subtree root.
//! - Entry `K+m` for `m` in `1..=K` ("promise" entries): minimum selection
//!   that dominates every subtree vertex deeper than K-m, assuming an outside
//!   selected vertex at distance <= m from the subtree root rescues the rest.
//!
//! Why one scalar per regime suffices: inside an optimal selection, every
//! rescue that crosses between sibling subtrees is already provided by the
//! shallowest selected vertex (any cross rescuer sits at least as deep, so
//! its distance to the rescued vertex is at least the shallowest one's), and
//! a subtree that leans on outside help never needs to advertise its own
//! internal depth — configurations where that depth exceeds the outside
//! source's distance are counted by the no-internal-member branch instead.
//! The binding contract is equality with the exhaustive oracle on small
//! instances, which the test suites enforce entry by entry.
//!
//! The promise tail is *not* monotone like the reach prefix: a farther
//! outside source means a smaller rescued zone and therefore more internal
//! work, so entries K+1..=2K are non-decreasing while 0..=K+1 are
//! non-increasing.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Ball, RelabelingSystem, Rule};
use crate::packing::{field, random_designated, Color};
use crate::tree::{NodeId, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DominationError {
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

/// Per-node state of the domination system. Same corruption contract as the
/// packing state: fixed shape, arbitrary values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominationNodeState {
    /// Subtree minima: entries 0..=K are reach entries, K+1..=2K promises.
    #[serde(rename = "D")]
    pub table: Vec<u64>,
    #[serde(rename = "j")]
    pub op_index: u64,
    /// Depth of the shallowest selected vertex accounted for, or `None` when
    /// the subtree holds no selected vertex shallow enough to matter.
    #[serde(rename = "t")]
    pub level: Option<u64>,
    #[serde(rename = "a")]
    pub designated: Option<NodeId>,
    pub color: Color,
}

impl DominationNodeState {
    pub fn blank(k: u32) -> Self {
        DominationNodeState {
            table: vec![0; 2 * k as usize + 1],
            op_index: 0,
            level: None,
            designated: None,
            color: Color::White,
        }
    }

    /// Arbitrary state for fault injection; see `PackingNodeState::random`.
    pub fn random<R: Rng>(rng: &mut R, k: u32, n: usize) -> Self {
        let level = if rng.random_bool(0.25) {
            Some(k as u64 + 1 + rng.random_range(0..100))
        } else {
            let r = rng.random_range(0..=k as u64 + 1);
            (r <= k as u64).then_some(r)
        };
        DominationNodeState {
            table: (0..2 * k + 1).map(|_| field(rng, n as u64, 1000)).collect(),
            op_index: field(rng, 2 * k as u64, 100),
            level,
            designated: random_designated(rng, n),
            color: if rng.random_bool(0.5) {
                Color::Black
            } else {
                Color::White
            },
        }
    }
}

/// The resolved branch of a table entry. `level: Some(0)` for black,
/// `Some(t)` for a white node with an internal selected vertex at depth t,
/// `None` for a white node relying entirely on its promise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomChoice {
    pub level: Option<u64>,
    pub designated: Option<NodeId>,
    pub color: Color,
}

fn check_k(k: u32) -> Result<(), DominationError> {
    if k >= 1 {
        Ok(())
    } else {
        Err(DominationError::InvalidK)
    }
}

fn check_child_lengths(child_tables: &[&[u64]], expected: usize) -> Result<(), DominationError> {
    for (index, tab) in child_tables.iter().enumerate() {
        if tab.len() != expected {
            return Err(DominationError::ChildTableLength {
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

/// Entry index a child is held to when its nearest outside source sits at
/// distance `src`: `K+src` while the source is useful, else the full
/// fully-dominated entry K (a source farther than K rescues nothing).
fn promise_index(k: usize, src: usize) -> usize {
    if src <= k {
        k + src
    } else {
        k
    }
}

/// Sibling entry under a designated internal level `t` and an ambient
/// promise `m` (0 = none): the nearest source for a sibling is whichever of
/// the internal vertex (distance t+1) or the outside source (distance m+1)
/// is closer.
fn sibling_index(k: usize, t: usize, m: usize) -> usize {
    let src = if m >= 1 { m.min(t) + 1 } else { t + 1 };
    promise_index(k, src)
}

/// Selecting the node itself: 1, with every child promised a source at
/// distance 1.
fn black_value(child_tables: &[&[u64]], k: usize) -> u64 {
    clamp(
        1 + child_tables
            .iter()
            .map(|tab| tab[k + 1] as u128)
            .sum::<u128>(),
    )
}

/// Cheapest designated-form value at internal level `t` under ambient
/// promise `m`, plus the smallest achieving child index. `None` for a
/// childless node (no internal level is possible).
fn white_best(
    child_tables: &[&[u64]],
    k: usize,
    t: usize,
    m: usize,
) -> Option<(u64, usize)> {
    if child_tables.is_empty() {
        return None;
    }
    let sibling = sibling_index(k, t, m);
    let sibling_total: u128 = child_tables.iter().map(|tab| tab[sibling] as u128).sum();
    let mut best: Option<(u64, usize)> = None;
    for (i, tab) in child_tables.iter().enumerate() {
        let value = clamp(tab[t - 1] as u128 + (sibling_total - tab[sibling] as u128));
        if best.is_none_or(|(bv, _)| value < bv) {
            best = Some((value, i));
        }
    }
    best
}

/// No selected vertex shallow enough to matter: every child leans on the
/// ambient promise, one edge farther away.
fn no_internal_value(child_tables: &[&[u64]], k: usize, m: usize) -> u64 {
    let idx = promise_index(k, m + 1);
    clamp(child_tables.iter().map(|tab| tab[idx] as u128).sum::<u128>())
}

/// Compute a node's 2K+1-entry table from its children's tables. Total for
/// arbitrary child values; sums saturate instead of wrapping.
pub fn domination_table(child_tables: &[&[u64]], k: u32) -> Result<Vec<u64>, DominationError> {
    check_k(k)?;
    let width = 2 * k as usize + 1;
    check_child_lengths(child_tables, width)?;
    let k = k as usize;
    let black = black_value(child_tables, k);
    let mut table = vec![0u64; width];
    for j in 0..=k {
        let mut best = black;
        for t in 1..=j {
            if let Some((value, _)) = white_best(child_tables, k, t, 0) {
                best = best.min(value);
            }
        }
        table[j] = best;
    }
    for m in 1..=k {
        let mut best = black.min(no_internal_value(child_tables, k, m));
        for t in 1..=k {
            if let Some((value, _)) = white_best(child_tables, k, t, m) {
                best = best.min(value);
            }
        }
        table[k + m] = best;
    }
    Ok(table)
}

/// Recover the branch housing entry `op_index`: black when selecting the
/// node attains it (preferred on ties), else the smallest internal level and
/// child that attain it, else the no-internal-member branch.
pub fn resolve_choice_dom(
    table: &[u64],
    children: &[(NodeId, &[u64])],
    op_index: u64,
    k: u32,
) -> Result<DomChoice, DominationError> {
    check_k(k)?;
    let width = 2 * k as usize + 1;
    if table.len() != width {
        return Err(DominationError::TableLength {
            expected: width,
            found: table.len(),
        });
    }
    let child_tables: Vec<&[u64]> = children.iter().map(|&(_, tab)| tab).collect();
    check_child_lengths(&child_tables, width)?;
    if op_index > 2 * k as u64 {
        return Err(DominationError::IndexOutOfRange {
            index: op_index,
            max: 2 * k as u64,
        });
    }
    let k = k as usize;
    let j = op_index as usize;
    let target = table[j];
    if black_value(&child_tables, k) == target {
        return Ok(DomChoice {
            level: Some(0),
            designated: None,
            color: Color::Black,
        });
    }
    let m = j.saturating_sub(k);
    let deepest = if j <= k { j } else { k };
    for t in 1..=deepest {
        if let Some((value, index)) = white_best(&child_tables, k, t, m) {
            if value == target {
                return Ok(DomChoice {
                    level: Some(t as u64),
                    designated: Some(children[index].0),
                    color: Color::White,
                });
            }
        }
    }
    if m >= 1 && no_internal_value(&child_tables, k, m) == target {
        return Ok(DomChoice {
            level: None,
            designated: None,
            color: Color::White,
        });
    }
    Err(DominationError::InconsistentTables { entry: j })
}

/// Table entry a parent's published choice imposes on one of its children.
///
/// A black parent is itself a source at distance 1. A white parent passes
/// its designated child the reach requirement `level - 1` and gives every
/// other child the nearest of its sources, one edge farther; with no usable
/// source the child must fully dominate itself (entry K). Total on corrupt
/// parent states.
pub fn imposed_index_dom(parent: &DominationNodeState, child: NodeId, k: u32) -> u64 {
    let k = k as u64;
    if parent.color == Color::Black {
        return k + 1;
    }
    let m = if parent.op_index > k {
        (parent.op_index - k).min(k)
    } else {
        0
    };
    if let Some(t) = parent.level {
        if t >= 1 && parent.designated == Some(child) {
            return (t - 1).min(k);
        }
    }
    let mut src: Option<u64> = None;
    if m >= 1 {
        src = Some(m + 1);
    }
    if let Some(t) = parent.level {
        if t >= 1 {
            src = Some(src.map_or(t + 1, |s| s.min(t + 1)));
        }
    }
    match src {
        Some(p) if p <= k => k + p,
        _ => k,
    }
}

/// The three-rule relabeling system for minimum K-domination. The root is
/// pinned to entry K: fully dominated, no reach requirement.
pub fn domination_rules(k: u32) -> Result<RelabelingSystem<DominationNodeState>, DominationError> {
    check_k(k)?;

    let table_rule = Rule::new(
        "table",
        move |b: &Ball<'_, DominationNodeState>| b.center_label.table != expected_table(b, k),
        move |b| DominationNodeState {
            table: expected_table(b, k),
            ..b.center_label.clone()
        },
    );
    let index_rule = Rule::new(
        "index",
        move |b: &Ball<'_, DominationNodeState>| b.center_label.op_index != expected_index(b, k),
        move |b| DominationNodeState {
            op_index: expected_index(b, k),
            ..b.center_label.clone()
        },
    );
    let resolve_rule = Rule::new(
        "resolve",
        move |b: &Ball<'_, DominationNodeState>| match expected_choice(b, k) {
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
            DominationNodeState {
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

fn expected_table(b: &Ball<'_, DominationNodeState>, k: u32) -> Vec<u64> {
    let tables: Vec<&[u64]> = b
        .child_labels
        .iter()
        .map(|(_, st)| st.table.as_slice())
        .collect();
    domination_table(&tables, k).expect("domination labels carry 2K+1-entry tables")
}

fn expected_index(b: &Ball<'_, DominationNodeState>, k: u32) -> u64 {
    match b.parent_label {
        None => k as u64,
        Some(parent) => imposed_index_dom(parent, b.center, k),
    }
}

fn expected_choice(
    b: &Ball<'_, DominationNodeState>,
    k: u32,
) -> Result<DomChoice, DominationError> {
    let children: Vec<(NodeId, &[u64])> = b
        .child_labels
        .iter()
        .map(|&(c, st)| (c, st.table.as_slice()))
        .collect();
    resolve_choice_dom(&b.center_label.table, &children, b.center_label.op_index, k)
}

/// Two passes run directly: tables bottom-up, choices top-down from the
/// root's entry K. Produces exactly the unique silent configuration.
pub fn solve(tree: &Tree, k: u32) -> Result<Vec<DominationNodeState>, DominationError> {
    check_k(k)?;
    let n = tree.node_count();
    let mut tables: Vec<Vec<u64>> = vec![Vec::new(); n];
    for v in tree.post_order() {
        let child_tables: Vec<&[u64]> = tree
            .children_of(v)
            .iter()
            .map(|&c| tables[c].as_slice())
            .collect();
        let table = domination_table(&child_tables, k)?;
        tables[v] = table;
    }
    let mut states: Vec<Option<DominationNodeState>> = vec![None; n];
    for v in tree.pre_order() {
        let op_index = match tree.parent_of(v) {
            None => k as u64,
            Some(p) => {
                let parent = states[p].as_ref().expect("parents resolved first");
                imposed_index_dom(parent, v, k)
            }
        };
        let children: Vec<(NodeId, &[u64])> = tree
            .children_of(v)
            .iter()
            .map(|&c| (c, tables[c].as_slice()))
            .collect();
        let choice = resolve_choice_dom(&tables[v], &children, op_index, k)?;
        states[v] = Some(DominationNodeState {
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

pub fn black_nodes(labels: &[DominationNodeState]) -> Vec<NodeId> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, st)| st.color == Color::Black)
        .map(|(v, _)| v)
        .collect()
}

/// True iff every node is within distance K of some black node.
pub fn validate_domination(tree: &Tree, blacks: &[NodeId], k: u32) -> bool {
    if blacks.iter().any(|&v| v >= tree.node_count()) {
        return false;
    }
    (0..tree.node_count()).all(|v| {
        blacks
            .iter()
            .any(|&s| tree.distance(v, s).is_ok_and(|d| d <= k))
    })
}
