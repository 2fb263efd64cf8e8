//! Rooted-tree topology shared by every other module.
//!
//! Nodes are dense identifiers `0..n`. Exactly one node is the root; every
//! other node stores its parent. A tree is immutable once built, so it can be
//! shared freely across concurrent readers.
//!
//! Text format: line 1 holds `n`, line 2 holds `n` space-separated parent
//! entries with `-1` marking the root. A trailing newline is optional.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Dense node identifier in `0..n`.
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("line {line}: malformed integer {token:?}")]
    MalformedInteger { line: usize, token: String },
    #[error("line {line}: expected {expected} parent entries, found {found}")]
    TokenCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unexpected trailing content")]
    TrailingContent { line: usize },
    #[error("node {node}: parent {parent} out of range")]
    ParentOutOfRange { node: NodeId, parent: i64 },
    #[error("node {node} lies on a parent cycle")]
    CycleDetected { node: NodeId },
    #[error("tree has no root")]
    NoRoot,
    #[error("multiple roots: nodes {first} and {second}")]
    MultipleRoots { first: NodeId, second: NodeId },
    #[error("node {node} out of range for {nodes} nodes")]
    InvalidNode { node: NodeId, nodes: usize },
}

/// A rooted tree over nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    depths: Vec<u32>,
    root: NodeId,
}

const UNVISITED: u32 = u32::MAX;
const VISITING: u32 = u32::MAX - 1;

impl Tree {
    /// Build a tree from a parent vector (`None` marks the root).
    ///
    /// Validates that exactly one root exists and that parent links are
    /// acyclic; child lists come out sorted ascending.
    pub fn from_parents(parent: Vec<Option<NodeId>>) -> Result<Self, TreeError> {
        let n = parent.len();
        if n == 0 {
            return Err(TreeError::NoRoot);
        }
        for (node, &p) in parent.iter().enumerate() {
            if let Some(p) = p {
                if p >= n {
                    return Err(TreeError::ParentOutOfRange {
                        node,
                        parent: p as i64,
                    });
                }
            }
        }
        let roots: Vec<NodeId> = (0..n).filter(|&v| parent[v].is_none()).collect();
        if roots.len() > 1 {
            return Err(TreeError::MultipleRoots {
                first: roots[0],
                second: roots[1],
            });
        }

        // Depth assignment doubles as the cycle check: walking parent links
        // must terminate at the root before revisiting an in-progress node.
        let mut depths = vec![UNVISITED; n];
        for start in 0..n {
            if depths[start] != UNVISITED {
                continue;
            }
            let mut chain: Vec<NodeId> = Vec::new();
            let mut v = start;
            let base_depth = loop {
                match depths[v] {
                    UNVISITED => {
                        depths[v] = VISITING;
                        chain.push(v);
                        match parent[v] {
                            Some(p) => v = p,
                            None => break 0, // last chain element is the root
                        }
                    }
                    VISITING => return Err(TreeError::CycleDetected { node: v }),
                    d => break d + 1, // chain hangs below a resolved node
                }
            };
            for (offset, &u) in chain.iter().rev().enumerate() {
                depths[u] = base_depth + offset as u32;
            }
        }

        let root = roots.first().copied().ok_or(TreeError::NoRoot)?;
        let mut children = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = parent[v] {
                children[p].push(v); // ascending because v iterates ascending
            }
        }
        Ok(Tree {
            parent,
            children,
            depths,
            root,
        })
    }

    /// Parse the two-line text format.
    pub fn parse(text: &str) -> Result<Self, TreeError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("").trim();
        let n: usize = header.parse().map_err(|_| TreeError::MalformedInteger {
            line: 1,
            token: header.to_string(),
        })?;
        if n == 0 {
            return Err(TreeError::NoRoot);
        }
        let body = lines.next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.len() != n {
            return Err(TreeError::TokenCount {
                line: 2,
                expected: n,
                found: tokens.len(),
            });
        }
        let mut parent = Vec::with_capacity(n);
        for (node, tok) in tokens.iter().enumerate() {
            let p: i64 = tok.parse().map_err(|_| TreeError::MalformedInteger {
                line: 2,
                token: tok.to_string(),
            })?;
            match p {
                -1 => parent.push(None),
                p if p >= 0 && (p as usize) < n => parent.push(Some(p as usize)),
                p => return Err(TreeError::ParentOutOfRange { node, parent: p }),
            }
        }
        for (extra, line) in lines.enumerate() {
            if !line.trim().is_empty() {
                return Err(TreeError::TrailingContent { line: extra + 3 });
            }
        }
        Self::from_parents(parent)
    }

    /// Uniformly random labeled tree on `n` nodes, rooted at node 0.
    ///
    /// Decodes a uniformly random Prüfer sequence, which is uniform over all
    /// n^(n-2) labeled trees; deterministic for a fixed seed.
    pub fn random(n: usize, seed: u64) -> Result<Self, TreeError> {
        if n == 0 {
            return Err(TreeError::NoRoot);
        }
        if n == 1 {
            return Self::from_parents(vec![None]);
        }
        if n == 2 {
            return Self::from_parents(vec![None, Some(0)]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
        Self::from_prufer(&code)
    }

    /// Decode a Prüfer sequence into the tree on `len + 2` nodes rooted at 0.
    pub fn from_prufer(code: &[usize]) -> Result<Self, TreeError> {
        let n = code.len() + 2;
        for &sym in code {
            if sym >= n {
                return Err(TreeError::InvalidNode { node: sym, nodes: n });
            }
        }
        let mut degree = vec![1u32; n];
        for &sym in code {
            degree[sym] += 1;
        }
        let mut leaves: BinaryHeap<Reverse<NodeId>> = (0..n)
            .filter(|&v| degree[v] == 1)
            .map(Reverse)
            .collect();
        let mut adjacency = vec![Vec::new(); n];
        for &sym in code {
            let Reverse(leaf) = leaves.pop().expect("decoding keeps a leaf available");
            adjacency[leaf].push(sym);
            adjacency[sym].push(leaf);
            degree[leaf] -= 1;
            degree[sym] -= 1;
            if degree[sym] == 1 {
                leaves.push(Reverse(sym));
            }
        }
        let Reverse(u) = leaves.pop().expect("two leaves remain");
        let Reverse(v) = leaves.pop().expect("two leaves remain");
        adjacency[u].push(v);
        adjacency[v].push(u);

        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(x) = queue.pop_front() {
            for &y in &adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(x);
                    queue.push_back(y);
                }
            }
        }
        Self::from_parents(parent)
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Parent of `v`, or `None` for the root. Panics on an out-of-range id.
    pub fn parent_of(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    /// Children of `v`, sorted ascending. Panics on an out-of-range id.
    pub fn children_of(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    /// Depths of every node, indexed by id (root has depth 0).
    pub fn depths(&self) -> &[u32] {
        &self.depths
    }

    fn check(&self, v: NodeId) -> Result<(), TreeError> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(TreeError::InvalidNode {
                node: v,
                nodes: self.node_count(),
            })
        }
    }

    /// Edge distance from `v` to the root.
    pub fn depth(&self, v: NodeId) -> Result<u32, TreeError> {
        self.check(v)?;
        Ok(self.depths[v])
    }

    /// Edge count on the unique path between `u` and `v`.
    pub fn distance(&self, u: NodeId, v: NodeId) -> Result<u32, TreeError> {
        self.check(u)?;
        self.check(v)?;
        let (mut a, mut b) = (u, v);
        let mut d = 0;
        while self.depths[a] > self.depths[b] {
            a = self.parent[a].expect("deeper node has a parent");
            d += 1;
        }
        while self.depths[b] > self.depths[a] {
            b = self.parent[b].expect("deeper node has a parent");
            d += 1;
        }
        while a != b {
            a = self.parent[a].expect("non-root while climbing");
            b = self.parent[b].expect("non-root while climbing");
            d += 2;
        }
        Ok(d)
    }

    /// Nodes of the subtree rooted at `v`, in level order.
    pub fn subtree(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = vec![v];
        let mut i = 0;
        while i < out.len() {
            let x = out[i];
            i += 1;
            out.extend_from_slice(&self.children[x]);
        }
        out
    }

    /// All nodes with every child preceding its parent.
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut order = self.subtree(self.root);
        order.reverse();
        order
    }

    /// All nodes with every parent preceding its children.
    pub fn pre_order(&self) -> Vec<NodeId> {
        self.subtree(self.root)
    }

    /// Render the two-line text format (inverse of [`Tree::parse`]).
    pub fn to_file_string(&self) -> String {
        let entries: Vec<String> = self
            .parent
            .iter()
            .map(|p| match p {
                Some(p) => p.to_string(),
                None => "-1".to_string(),
            })
            .collect();
        format!("{}\n{}\n", self.node_count(), entries.join(" "))
    }
}
