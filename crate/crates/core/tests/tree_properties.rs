//! Property and statistical tests for the tree layer.

use std::collections::HashMap;

use proptest::prelude::*;

use stabsim_core::mix_seed;
use stabsim_core::tree::{NodeId, Tree};

/// Independent Prüfer encoder: repeatedly strip the smallest leaf and record
/// its neighbor. Inverse of the generator's decoder.
fn prufer_encode(tree: &Tree) -> Vec<usize> {
    let n = tree.node_count();
    if n <= 2 {
        return Vec::new();
    }
    let mut degree: Vec<usize> = (0..n)
        .map(|v| tree.children_of(v).len() + usize::from(tree.parent_of(v).is_some()))
        .collect();
    let neighbor = |v: NodeId, alive: &[bool]| -> NodeId {
        tree.parent_of(v)
            .into_iter()
            .chain(tree.children_of(v).iter().copied())
            .find(|&u| alive[u])
            .expect("a leaf of a live tree has one live neighbor")
    };
    let mut alive = vec![true; n];
    let mut code = Vec::with_capacity(n - 2);
    for _ in 0..n - 2 {
        let leaf = (0..n)
            .find(|&v| alive[v] && degree[v] == 1)
            .expect("a tree always has a leaf");
        let u = neighbor(leaf, &alive);
        code.push(u);
        alive[leaf] = false;
        degree[u] -= 1;
        degree[leaf] = 0;
    }
    code
}

/// Nodes on the unique u-w path, endpoints included: both legs up to the
/// deepest common ancestor.
fn path_between(tree: &Tree, u: NodeId, w: NodeId) -> Vec<NodeId> {
    let ancestors = |mut v: NodeId| -> Vec<NodeId> {
        let mut out = vec![v];
        while let Some(p) = tree.parent_of(v) {
            out.push(p);
            v = p;
        }
        out
    };
    let from_u = ancestors(u);
    let from_w = ancestors(w);
    let mut path: Vec<NodeId> = from_u
        .iter()
        .copied()
        .take_while(|v| !from_w.contains(v))
        .collect();
    let meet = from_u.iter().copied().find(|v| from_w.contains(v)).unwrap();
    path.push(meet);
    path.extend(from_w.iter().copied().take_while(|v| *v != meet).collect::<Vec<_>>().iter().rev());
    path
}

/// BFS distances from `src` over the undirected adjacency — the reference
/// for the climbing implementation.
fn bfs_distances(tree: &Tree, src: NodeId) -> Vec<u32> {
    let n = tree.node_count();
    let mut dist = vec![u32::MAX; n];
    dist[src] = 0;
    let mut queue = std::collections::VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        let next: Vec<NodeId> = tree
            .parent_of(v)
            .into_iter()
            .chain(tree.children_of(v).iter().copied())
            .collect();
        for u in next {
            if dist[u] == u32::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

proptest! {
    #[test]
    fn random_trees_satisfy_invariants(n in 1usize..40, seed in any::<u64>()) {
        let tree = Tree::random(n, seed).unwrap();
        prop_assert_eq!(tree.node_count(), n);
        prop_assert_eq!(tree.root(), 0);
        let child_total: usize = (0..n).map(|v| tree.children_of(v).len()).sum();
        prop_assert_eq!(child_total, n - 1);
        for v in 0..n {
            let kids = tree.children_of(v);
            prop_assert!(kids.windows(2).all(|w| w[0] < w[1]));
            for &c in kids {
                prop_assert_eq!(tree.parent_of(c), Some(v));
            }
        }
    }

    #[test]
    fn serialize_parse_round_trip(n in 1usize..40, seed in any::<u64>()) {
        let tree = Tree::random(n, seed).unwrap();
        prop_assert_eq!(Tree::parse(&tree.to_file_string()).unwrap(), tree);
    }

    #[test]
    fn distances_match_bfs(n in 1usize..16, seed in any::<u64>()) {
        let tree = Tree::random(n, seed).unwrap();
        for u in 0..n {
            let reference = bfs_distances(&tree, u);
            for v in 0..n {
                prop_assert_eq!(tree.distance(u, v).unwrap(), reference[v]);
                prop_assert_eq!(tree.distance(u, v).unwrap(), tree.distance(v, u).unwrap());
            }
        }
    }

    #[test]
    fn distance_adds_up_along_every_path(n in 2usize..20, seed in any::<u64>()) {
        // For every pair (u, w) and every x on the u-w path,
        // d(u,w) = d(u,x) + d(x,w).
        let tree = Tree::random(n, seed).unwrap();
        for u in 0..n {
            for w in 0..n {
                let total = tree.distance(u, w).unwrap();
                for x in path_between(&tree, u, w) {
                    prop_assert_eq!(
                        total,
                        tree.distance(u, x).unwrap() + tree.distance(x, w).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn prufer_code_round_trips(n in 3usize..40, seed in any::<u64>()) {
        let tree = Tree::random(n, seed).unwrap();
        let code = prufer_encode(&tree);
        prop_assert_eq!(Tree::from_prufer(&code).unwrap(), tree);
    }

    #[test]
    fn depth_is_distance_to_root(n in 1usize..24, seed in any::<u64>()) {
        let tree = Tree::random(n, seed).unwrap();
        for v in 0..n {
            prop_assert_eq!(tree.depth(v).unwrap(), tree.distance(v, tree.root()).unwrap());
        }
    }
}

/// Chi-squared uniformity over all 16 labeled trees on 4 nodes (each tree is
/// a distinct parent vector when rooted at 0). 16,000 samples, expected 1000
/// per cell; the 0.001 critical value for 15 degrees of freedom is 37.70.
#[test]
fn four_node_trees_are_uniform() {
    let samples = 16_000u64;
    let mut counts: HashMap<Vec<Option<usize>>, u64> = HashMap::new();
    for seed in 0..samples {
        let tree = Tree::random(4, mix_seed(0xA11CE, seed)).unwrap();
        let key: Vec<Option<usize>> = (0..4).map(|v| tree.parent_of(v)).collect();
        *counts.entry(key).or_default() += 1;
    }
    assert_eq!(counts.len(), 16, "every labeled tree should appear");
    let expected = samples as f64 / 16.0;
    let chi2: f64 = counts
        .values()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    assert!(chi2 <= 37.70, "chi-squared {chi2:.2} exceeds the 0.001 bound");
}

/// Re-encode generated 8-node trees and check each of the 6 code positions
/// is uniform over the 8 symbols. 10,000 samples, expected 1250 per symbol;
/// the 0.001 critical value for 7 degrees of freedom is 24.32.
#[test]
fn eight_node_prufer_positions_are_uniform() {
    let samples = 10_000usize;
    let mut counts = [[0u64; 8]; 6];
    for seed in 0..samples {
        let tree = Tree::random(8, mix_seed(0xB0B, seed as u64)).unwrap();
        let code = prufer_encode(&tree);
        assert_eq!(code.len(), 6);
        for (pos, &sym) in code.iter().enumerate() {
            counts[pos][sym] += 1;
        }
    }
    let expected = samples as f64 / 8.0;
    for (pos, row) in counts.iter().enumerate() {
        let chi2: f64 = row
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(
            chi2 <= 24.32,
            "position {pos}: chi-squared {chi2:.2} exceeds the 0.001 bound"
        );
    }
}
