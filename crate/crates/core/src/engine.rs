//! Executable graph relabeling systems.
//!
//! A system is an ordered list of named rules, each a guard plus an update,
//! both reading only the radius-1 ball around a node and rewriting only that
//! node's label. Correction rules, when present, take priority over the
//! ordinary rules at every node, and an optional predicate classifies balls
//! as illegitimate configurations.
//!
//! Execution is central-daemon: one enabled node fires per step, chosen by a
//! daemon strategy. Every strategy is a pure function of (graph state, seed,
//! step index), so a run is replayable bit-for-bit from its inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::mix_seed;
use crate::tree::{NodeId, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("duplicate rule name {0:?}")]
    DuplicateRuleName(String),
    #[error("graph has {nodes} nodes but {labels} labels")]
    LabelCountMismatch { nodes: usize, labels: usize },
    #[error("system declares no illegitimate-configuration predicate")]
    NoIllegitimatePredicate,
}

/// Snapshot of the closed radius-1 neighborhood of one node.
///
/// This is everything a rule may read: the center's label, the parent's
/// label when the center is not the root, and the children's labels in
/// ascending id order.
#[derive(Debug, Clone)]
pub struct Ball<'g, L> {
    pub center: NodeId,
    pub center_label: &'g L,
    pub parent_label: Option<&'g L>,
    pub child_labels: Vec<(NodeId, &'g L)>,
}

impl<'g, L> Ball<'g, L> {
    pub fn is_root(&self) -> bool {
        self.parent_label.is_none()
    }
}

type GuardFn<L> = dyn Fn(&Ball<'_, L>) -> bool + Send + Sync;
type UpdateFn<L> = dyn Fn(&Ball<'_, L>) -> L + Send + Sync;

/// A named guarded rule. The guard and update must be pure; the update
/// returns the center's new label and nothing else.
pub struct Rule<L> {
    name: String,
    guard: Box<GuardFn<L>>,
    update: Box<UpdateFn<L>>,
}

impl<L> Rule<L> {
    pub fn new(
        name: impl Into<String>,
        guard: impl Fn(&Ball<'_, L>) -> bool + Send + Sync + 'static,
        update: impl Fn(&Ball<'_, L>) -> L + Send + Sync + 'static,
    ) -> Self {
        Rule {
            name: name.into(),
            guard: Box::new(guard),
            update: Box::new(update),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl<L> fmt::Debug for Rule<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rule").field("name", &self.name).finish()
    }
}

/// A tree plus one label per node — the state a system executes over.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph<L> {
    tree: Arc<Tree>,
    labels: Vec<L>,
}

impl<L> LabeledGraph<L> {
    pub fn new(tree: Arc<Tree>, labels: Vec<L>) -> Result<Self, EngineError> {
        if tree.node_count() != labels.len() {
            return Err(EngineError::LabelCountMismatch {
                nodes: tree.node_count(),
                labels: labels.len(),
            });
        }
        Ok(LabeledGraph { tree, labels })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn tree_arc(&self) -> &Arc<Tree> {
        &self.tree
    }

    pub fn label(&self, v: NodeId) -> &L {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[L] {
        &self.labels
    }

    pub fn set_label(&mut self, v: NodeId, label: L) {
        self.labels[v] = label;
    }

    /// The radius-1 ball around `v`. Panics on an out-of-range id.
    pub fn ball(&self, v: NodeId) -> Ball<'_, L> {
        Ball {
            center: v,
            center_label: &self.labels[v],
            parent_label: self.tree.parent_of(v).map(|p| &self.labels[p]),
            child_labels: self
                .tree
                .children_of(v)
                .iter()
                .map(|&c| (c, &self.labels[c]))
                .collect(),
        }
    }

    /// Ball around `v` as it would look if `over.0` carried `over.1`.
    fn ball_with<'g>(&'g self, v: NodeId, over: (NodeId, &'g L)) -> Ball<'g, L> {
        let pick = |u: NodeId| if u == over.0 { over.1 } else { &self.labels[u] };
        Ball {
            center: v,
            center_label: pick(v),
            parent_label: self.tree.parent_of(v).map(pick),
            child_labels: self
                .tree
                .children_of(v)
                .iter()
                .map(|&c| (c, pick(c)))
                .collect(),
        }
    }
}

/// How the central daemon picks among enabled nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DaemonStrategy {
    /// Uniform choice, seeded per step.
    Random,
    /// Rotating priority: at step s, the first enabled node at or after
    /// s mod n fires.
    RoundRobin,
    /// Deepest enabled node; ties go to the smallest id.
    GreedyDeepest,
    /// Shallowest enabled node; ties go to the smallest id.
    GreedyShallowest,
    /// The move that leaves the most nodes enabled afterwards — a cheap
    /// adversary that tries to keep the system busy.
    GreedyMaxEnabledAfter,
}

impl DaemonStrategy {
    pub const ALL: [DaemonStrategy; 5] = [
        DaemonStrategy::Random,
        DaemonStrategy::RoundRobin,
        DaemonStrategy::GreedyDeepest,
        DaemonStrategy::GreedyShallowest,
        DaemonStrategy::GreedyMaxEnabledAfter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DaemonStrategy::Random => "random",
            DaemonStrategy::RoundRobin => "round-robin",
            DaemonStrategy::GreedyDeepest => "greedy-deepest",
            DaemonStrategy::GreedyShallowest => "greedy-shallowest",
            DaemonStrategy::GreedyMaxEnabledAfter => "greedy-max-enabled",
        }
    }
}

impl fmt::Display for DaemonStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DaemonStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DaemonStrategy::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = DaemonStrategy::ALL.iter().map(|d| d.name()).collect();
                format!("unknown daemon {s:?} (expected one of {})", names.join("|"))
            })
    }
}

/// A scheduling strategy plus the seed that makes it reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Daemon {
    pub strategy: DaemonStrategy,
    pub seed: u64,
}

impl Daemon {
    pub fn new(strategy: DaemonStrategy, seed: u64) -> Self {
        Daemon { strategy, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub max_moves: u64,
    pub record_trace: bool,
}

impl RunOptions {
    pub fn bounded(max_moves: u64) -> Self {
        RunOptions {
            max_moves,
            record_trace: false,
        }
    }

    pub fn traced(max_moves: u64) -> Self {
        RunOptions {
            max_moves,
            record_trace: true,
        }
    }
}

/// Default move budget: 64·n³, a wide safety factor over the expected
/// stabilization cost, so budget exhaustion signals a divergence bug rather
/// than slow convergence.
pub fn default_max_moves(n: usize) -> u64 {
    let n = n as u64;
    64u64.saturating_mul(n.saturating_mul(n).saturating_mul(n))
}

/// One move in a trace: `{"step":..,"node":..,"rule":".."}` as a JSON line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub step: u64,
    pub node: NodeId,
    pub rule: String,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport<L> {
    pub moves_total: u64,
    pub moves_by_rule: BTreeMap<String, u64>,
    pub stabilized: bool,
    /// Number of moves after which no rule was enabled; absent when the
    /// budget ran out first.
    pub steps_to_silence: Option<u64>,
    pub final_graph: LabeledGraph<L>,
    pub trace: Option<Vec<TraceEntry>>,
}

/// Ordered rule sets `P` (and optionally `P_c`) plus an optional
/// illegitimate-configuration predicate.
pub struct RelabelingSystem<L> {
    correction_rules: Vec<Rule<L>>,
    rules: Vec<Rule<L>>,
    illegitimate: Option<Box<GuardFn<L>>>,
}

impl<L> fmt::Debug for RelabelingSystem<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelabelingSystem")
            .field("correction_rules", &self.correction_rules)
            .field("rules", &self.rules)
            .field("illegitimate", &self.illegitimate.is_some())
            .finish()
    }
}

impl<L> RelabelingSystem<L> {
    pub fn new(rules: Vec<Rule<L>>) -> Result<Self, EngineError> {
        let sys = RelabelingSystem {
            correction_rules: Vec::new(),
            rules,
            illegitimate: None,
        };
        sys.check_names()?;
        Ok(sys)
    }

    /// Install correction rules; they run before the ordinary rules at every
    /// node, so an enabled correction suppresses the rest.
    pub fn with_correction_rules(mut self, rules: Vec<Rule<L>>) -> Result<Self, EngineError> {
        self.correction_rules = rules;
        self.check_names()?;
        Ok(self)
    }

    pub fn with_illegitimate(
        mut self,
        predicate: impl Fn(&Ball<'_, L>) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.illegitimate = Some(Box::new(predicate));
        self
    }

    fn check_names(&self) -> Result<(), EngineError> {
        let mut seen = BTreeSet::new();
        for rule in self.chain() {
            if !seen.insert(rule.name.clone()) {
                return Err(EngineError::DuplicateRuleName(rule.name.clone()));
            }
        }
        Ok(())
    }

    /// Rules in priority order: corrections first.
    fn chain(&self) -> impl Iterator<Item = &Rule<L>> {
        self.correction_rules.iter().chain(self.rules.iter())
    }

    fn rule_at(&self, idx: usize) -> &Rule<L> {
        if idx < self.correction_rules.len() {
            &self.correction_rules[idx]
        } else {
            &self.rules[idx - self.correction_rules.len()]
        }
    }

    pub fn rule_names(&self) -> Vec<&str> {
        self.chain().map(|r| r.name.as_str()).collect()
    }

    /// Index of the highest-priority rule enabled at `v`, if any. At most one
    /// rule is enabled per node.
    fn eval_node(&self, g: &LabeledGraph<L>, v: NodeId) -> Option<usize> {
        let ball = g.ball(v);
        self.chain().position(|rule| (rule.guard)(&ball))
    }

    fn eval_node_with(&self, g: &LabeledGraph<L>, v: NodeId, over: (NodeId, &L)) -> Option<usize> {
        let ball = g.ball_with(v, over);
        self.chain().position(|rule| (rule.guard)(&ball))
    }

    /// All (node, rule name) pairs that may fire, ascending by node.
    pub fn enabled<'s>(&'s self, g: &LabeledGraph<L>) -> Vec<(NodeId, &'s str)> {
        (0..g.tree().node_count())
            .filter_map(|v| self.eval_node(g, v).map(|idx| (v, self.rule_at(idx).name())))
            .collect()
    }

    pub fn is_silent(&self, g: &LabeledGraph<L>) -> bool {
        (0..g.tree().node_count()).all(|v| self.eval_node(g, v).is_none())
    }

    /// Centers whose ball satisfies the illegitimate predicate, ascending.
    pub fn find_illegitimate(&self, g: &LabeledGraph<L>) -> Result<Vec<NodeId>, EngineError> {
        let predicate = self
            .illegitimate
            .as_ref()
            .ok_or(EngineError::NoIllegitimatePredicate)?;
        Ok((0..g.tree().node_count())
            .filter(|&v| predicate(&g.ball(v)))
            .collect())
    }

    /// Fire one move chosen by the daemon, or return `None` when silent.
    pub fn step(
        &self,
        g: &mut LabeledGraph<L>,
        daemon: &Daemon,
        step_index: u64,
    ) -> Option<(NodeId, String)> {
        let enabled: Vec<(NodeId, usize)> = (0..g.tree().node_count())
            .filter_map(|v| self.eval_node(g, v).map(|idx| (v, idx)))
            .collect();
        if enabled.is_empty() {
            return None;
        }
        let pick = self.choose(g, &enabled, daemon, step_index);
        let (v, idx) = enabled[pick];
        let rule = self.rule_at(idx);
        let new_label = (rule.update)(&g.ball(v));
        g.set_label(v, new_label);
        Some((v, rule.name.clone()))
    }

    /// Run until silence or until `max_moves` moves have fired.
    pub fn run(&self, mut g: LabeledGraph<L>, daemon: &Daemon, options: &RunOptions) -> RunReport<L> {
        let n = g.tree().node_count();
        let mut status: Vec<Option<usize>> = (0..n).map(|v| self.eval_node(&g, v)).collect();
        let mut enabled_nodes: BTreeSet<NodeId> = (0..n).filter(|&v| status[v].is_some()).collect();
        let mut moves_by_rule: BTreeMap<String, u64> =
            self.chain().map(|r| (r.name.clone(), 0)).collect();
        let mut trace = options.record_trace.then(Vec::new);
        let mut moves_total = 0u64;
        let mut steps_to_silence = None;

        loop {
            if enabled_nodes.is_empty() {
                steps_to_silence = Some(moves_total);
                break;
            }
            if moves_total >= options.max_moves {
                break;
            }
            let enabled: Vec<(NodeId, usize)> = enabled_nodes
                .iter()
                .map(|&v| (v, status[v].expect("enabled node carries a rule")))
                .collect();
            let pick = self.choose(&g, &enabled, daemon, moves_total);
            let (v, idx) = enabled[pick];
            let rule_name = self.rule_at(idx).name.clone();
            let new_label = (self.rule_at(idx).update)(&g.ball(v));
            g.set_label(v, new_label);
            *moves_by_rule
                .get_mut(&rule_name)
                .expect("every rule is registered") += 1;
            if let Some(trace) = trace.as_mut() {
                trace.push(TraceEntry {
                    step: moves_total,
                    node: v,
                    rule: rule_name,
                });
            }
            moves_total += 1;

            // A move at v can only flip guards inside v's 1-ball.
            let mut affected = vec![v];
            if let Some(p) = g.tree().parent_of(v) {
                affected.push(p);
            }
            affected.extend_from_slice(g.tree().children_of(v));
            for &u in &affected {
                status[u] = self.eval_node(&g, u);
                if status[u].is_some() {
                    enabled_nodes.insert(u);
                } else {
                    enabled_nodes.remove(&u);
                }
            }
        }

        RunReport {
            moves_total,
            moves_by_rule,
            stabilized: steps_to_silence.is_some(),
            steps_to_silence,
            final_graph: g,
            trace,
        }
    }

    /// Pick an index into `enabled` (sorted ascending by node, nonempty).
    fn choose(
        &self,
        g: &LabeledGraph<L>,
        enabled: &[(NodeId, usize)],
        daemon: &Daemon,
        step_index: u64,
    ) -> usize {
        debug_assert!(!enabled.is_empty());
        if enabled.len() == 1 {
            return 0;
        }
        match daemon.strategy {
            DaemonStrategy::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(daemon.seed, step_index));
                rng.random_range(0..enabled.len())
            }
            DaemonStrategy::RoundRobin => {
                let n = g.tree().node_count() as u64;
                let start = (step_index % n) as NodeId;
                let at = enabled.partition_point(|&(v, _)| v < start);
                at % enabled.len()
            }
            DaemonStrategy::GreedyDeepest => {
                let depths = g.tree().depths();
                let mut best = 0;
                for (i, &(v, _)) in enabled.iter().enumerate().skip(1) {
                    if depths[v] > depths[enabled[best].0] {
                        best = i;
                    }
                }
                best
            }
            DaemonStrategy::GreedyShallowest => {
                let depths = g.tree().depths();
                let mut best = 0;
                for (i, &(v, _)) in enabled.iter().enumerate().skip(1) {
                    if depths[v] < depths[enabled[best].0] {
                        best = i;
                    }
                }
                best
            }
            DaemonStrategy::GreedyMaxEnabledAfter => {
                let mut best = 0;
                let mut best_count = 0;
                for (i, &(v, idx)) in enabled.iter().enumerate() {
                    let new_label = (self.rule_at(idx).update)(&g.ball(v));
                    let count = self.enabled_count_after(g, enabled, v, &new_label);
                    if i == 0 || count > best_count {
                        best = i;
                        best_count = count;
                    }
                }
                best
            }
        }
    }

    /// How many nodes would be enabled after rewriting `v` to `new_label`.
    /// Only v's 1-ball can change, so everything else is carried over.
    fn enabled_count_after(
        &self,
        g: &LabeledGraph<L>,
        enabled: &[(NodeId, usize)],
        v: NodeId,
        new_label: &L,
    ) -> usize {
        let tree = g.tree();
        let mut affected = vec![v];
        if let Some(p) = tree.parent_of(v) {
            affected.push(p);
        }
        affected.extend_from_slice(tree.children_of(v));
        let now = affected
            .iter()
            .filter(|&&u| enabled.binary_search_by_key(&u, |e| e.0).is_ok())
            .count();
        let after = affected
            .iter()
            .filter(|&&u| self.eval_node_with(g, u, (v, new_label)).is_some())
            .count();
        enabled.len() - now + after
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Arc<Tree> {
        let parents = (0..n).map(|v| if v == 0 { None } else { Some(v - 1) }).collect();
        Arc::new(Tree::from_parents(parents).unwrap())
    }

    fn star(leaves: usize) -> Arc<Tree> {
        let parents = (0..=leaves).map(|v| if v == 0 { None } else { Some(0) }).collect();
        Arc::new(Tree::from_parents(parents).unwrap())
    }

    /// System with one rule: any nonzero label is set to zero.
    fn zeroing_system() -> RelabelingSystem<u64> {
        RelabelingSystem::new(vec![Rule::new(
            "zero",
            |b: &Ball<'_, u64>| *b.center_label != 0,
            |_| 0,
        )])
        .unwrap()
    }

    #[test]
    fn ball_shapes() {
        let single = LabeledGraph::new(path(1), vec![7u64]).unwrap();
        let b = single.ball(0);
        assert!(b.is_root());
        assert!(b.child_labels.is_empty());

        let star_graph = LabeledGraph::new(star(3), vec![0u64, 1, 2, 3]).unwrap();
        let b = star_graph.ball(0);
        assert!(b.is_root());
        assert_eq!(
            b.child_labels.iter().map(|&(c, _)| c).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );

        let leaf_ball = LabeledGraph::new(path(3), vec![5u64, 6, 7]).unwrap();
        let b = leaf_ball.ball(2);
        assert_eq!(b.parent_label, Some(&6));
        assert!(b.child_labels.is_empty());
    }

    #[test]
    fn label_count_must_match() {
        assert_eq!(
            LabeledGraph::new(path(3), vec![0u64]).unwrap_err(),
            EngineError::LabelCountMismatch { nodes: 3, labels: 1 }
        );
    }

    #[test]
    fn enabled_respects_guards() {
        let never = RelabelingSystem::new(vec![Rule::new(
            "never",
            |_: &Ball<'_, u64>| false,
            |b| *b.center_label,
        )])
        .unwrap();
        let g = LabeledGraph::new(path(3), vec![1u64, 2, 3]).unwrap();
        assert!(never.enabled(&g).is_empty());
        assert!(never.is_silent(&g));

        let sys = zeroing_system();
        let silent = LabeledGraph::new(path(3), vec![0u64, 0, 0]).unwrap();
        assert!(sys.enabled(&silent).is_empty());

        let g = LabeledGraph::new(path(3), vec![5u64, 0, 7]).unwrap();
        assert_eq!(sys.enabled(&g), vec![(0, "zero"), (2, "zero")]);
    }

    #[test]
    fn duplicate_rule_names_rejected() {
        let mk = || {
            vec![
                Rule::new("r", |_: &Ball<'_, u64>| false, |b| *b.center_label),
                Rule::new("r", |_: &Ball<'_, u64>| false, |b| *b.center_label),
            ]
        };
        assert_eq!(
            RelabelingSystem::new(mk()).unwrap_err(),
            EngineError::DuplicateRuleName("r".into())
        );
    }

    #[test]
    fn step_on_silent_graph_changes_nothing() {
        let sys = zeroing_system();
        let mut g = LabeledGraph::new(path(2), vec![0u64, 0]).unwrap();
        let before = g.clone();
        for strategy in DaemonStrategy::ALL {
            assert_eq!(sys.step(&mut g, &Daemon::new(strategy, 1), 0), None);
            assert_eq!(g, before);
        }
    }

    #[test]
    fn single_enabled_node_fires_under_every_strategy() {
        let sys = zeroing_system();
        for strategy in DaemonStrategy::ALL {
            let mut g = LabeledGraph::new(path(4), vec![0u64, 0, 9, 0]).unwrap();
            let fired = sys.step(&mut g, &Daemon::new(strategy, 3), 0).unwrap();
            assert_eq!(fired, (2, "zero".to_string()));
            assert_eq!(g.labels(), &[0, 0, 0, 0]);
        }
    }

    #[test]
    fn random_choice_is_a_pure_function_of_state_and_step() {
        let sys = zeroing_system();
        let g0 = LabeledGraph::new(path(6), vec![1u64, 1, 1, 1, 1, 1]).unwrap();
        let daemon = Daemon::new(DaemonStrategy::Random, 99);
        let mut a = g0.clone();
        let mut b = g0.clone();
        assert_eq!(sys.step(&mut a, &daemon, 5), sys.step(&mut b, &daemon, 5));
        assert_eq!(a, b);
    }

    #[test]
    fn zeroing_takes_exactly_k_moves_under_any_daemon() {
        let sys = zeroing_system();
        for strategy in DaemonStrategy::ALL {
            let g = LabeledGraph::new(star(5), vec![0u64, 4, 0, 8, 0, 2]).unwrap();
            let report = sys.run(g, &Daemon::new(strategy, 7), &RunOptions::bounded(1000));
            assert!(report.stabilized);
            assert_eq!(report.moves_total, 3);
            assert_eq!(report.steps_to_silence, Some(3));
            assert_eq!(report.moves_by_rule["zero"], 3);
        }
    }

    #[test]
    fn already_silent_run_reports_zero_moves() {
        let sys = zeroing_system();
        let g = LabeledGraph::new(path(3), vec![0u64, 0, 0]).unwrap();
        let report = sys.run(g, &Daemon::new(DaemonStrategy::Random, 0), &RunOptions::bounded(10));
        assert!(report.stabilized);
        assert_eq!(report.moves_total, 0);
    }

    #[test]
    fn budget_exhaustion_is_reported_not_fatal() {
        // A rule that never quiets: flip between 0 and 1.
        let sys = RelabelingSystem::new(vec![Rule::new(
            "flip",
            |_: &Ball<'_, u64>| true,
            |b| 1 - *b.center_label,
        )])
        .unwrap();
        let g = LabeledGraph::new(path(2), vec![0u64, 1]).unwrap();
        let report = sys.run(g, &Daemon::new(DaemonStrategy::RoundRobin, 0), &RunOptions::bounded(17));
        assert!(!report.stabilized);
        assert_eq!(report.steps_to_silence, None);
        assert_eq!(report.moves_total, 17);
    }

    #[test]
    fn runs_are_deterministic_including_traces() {
        let sys = zeroing_system();
        let mk = || LabeledGraph::new(path(8), vec![3u64, 0, 5, 1, 0, 2, 9, 4]).unwrap();
        for strategy in DaemonStrategy::ALL {
            let daemon = Daemon::new(strategy, 1234);
            let a = sys.run(mk(), &daemon, &RunOptions::traced(100));
            let b = sys.run(mk(), &daemon, &RunOptions::traced(100));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn run_matches_repeated_public_steps() {
        let sys = zeroing_system();
        let daemon = Daemon::new(DaemonStrategy::Random, 5);
        let mk = || LabeledGraph::new(star(6), vec![2u64, 0, 3, 1, 0, 9, 9]).unwrap();
        let report = sys.run(mk(), &daemon, &RunOptions::traced(100));

        let mut g = mk();
        let mut steps = Vec::new();
        let mut i = 0;
        while let Some((node, rule)) = sys.step(&mut g, &daemon, i) {
            steps.push(TraceEntry { step: i, node, rule });
            i += 1;
        }
        assert_eq!(report.trace.as_deref(), Some(steps.as_slice()));
        assert_eq!(&g, &report.final_graph);
    }

    #[test]
    fn monotone_silence() {
        let sys = zeroing_system();
        let g = LabeledGraph::new(path(5), vec![1u64, 2, 3, 4, 5]).unwrap();
        let daemon = Daemon::new(DaemonStrategy::GreedyDeepest, 0);
        let report = sys.run(g, &daemon, &RunOptions::bounded(1000));
        assert!(report.stabilized);
        let mut g = report.final_graph;
        for i in 0..5 {
            assert_eq!(sys.step(&mut g, &daemon, i), None);
        }
    }

    #[test]
    fn each_move_rewrites_exactly_one_label() {
        let sys = zeroing_system();
        let daemon = Daemon::new(DaemonStrategy::Random, 11);
        let mut g = LabeledGraph::new(path(6), vec![1u64, 2, 0, 3, 0, 4]).unwrap();
        let mut step = 0;
        loop {
            let before = g.labels().to_vec();
            match sys.step(&mut g, &daemon, step) {
                None => break,
                Some((node, _)) => {
                    let diffs: Vec<NodeId> = (0..6)
                        .filter(|&v| g.labels()[v] != before[v])
                        .collect();
                    assert_eq!(diffs, vec![node]);
                }
            }
            step += 1;
        }
    }

    #[test]
    fn correction_rules_suppress_ordinary_rules() {
        // Ordinary rule: nonzero -> 0. Correction: label 9 must first become 1.
        let sys = RelabelingSystem::new(vec![Rule::new(
            "zero",
            |b: &Ball<'_, u64>| *b.center_label != 0,
            |_| 0,
        )])
        .unwrap()
        .with_correction_rules(vec![Rule::new(
            "fix-nine",
            |b: &Ball<'_, u64>| *b.center_label == 9,
            |_| 1,
        )])
        .unwrap();

        let g = LabeledGraph::new(path(2), vec![9u64, 0]).unwrap();
        assert_eq!(sys.enabled(&g), vec![(0, "fix-nine")]);

        let report = sys.run(g, &Daemon::new(DaemonStrategy::Random, 0), &RunOptions::bounded(10));
        assert!(report.stabilized);
        assert_eq!(report.moves_by_rule["fix-nine"], 1);
        assert_eq!(report.moves_by_rule["zero"], 1);
        assert_eq!(report.final_graph.labels(), &[0, 0]);
    }

    #[test]
    fn find_illegitimate_matches_predicate() {
        let constant_false = RelabelingSystem::new(vec![Rule::new(
            "noop",
            |_: &Ball<'_, u64>| false,
            |b| *b.center_label,
        )])
        .unwrap()
        .with_illegitimate(|_| false);
        let g = LabeledGraph::new(path(4), vec![1u64, 1, 1, 1]).unwrap();
        assert_eq!(constant_false.find_illegitimate(&g).unwrap(), Vec::<NodeId>::new());

        // Predicate: center label differs from the parent's.
        let mismatch = RelabelingSystem::new(vec![Rule::new(
            "noop",
            |_: &Ball<'_, u64>| false,
            |b| *b.center_label,
        )])
        .unwrap()
        .with_illegitimate(|b: &Ball<'_, u64>| {
            b.parent_label.is_some_and(|p| p != b.center_label)
        });
        let uniform = LabeledGraph::new(path(4), vec![1u64, 1, 1, 1]).unwrap();
        assert_eq!(mismatch.find_illegitimate(&uniform).unwrap(), Vec::<NodeId>::new());

        let mut flipped = uniform;
        flipped.set_label(2, 5);
        // Node 2 sees parent 1 with a different label; node 3 sees parent 2 likewise.
        assert_eq!(mismatch.find_illegitimate(&flipped).unwrap(), vec![2, 3]);
    }

    #[test]
    fn find_illegitimate_without_predicate_is_an_error() {
        let sys = zeroing_system();
        let g = LabeledGraph::new(path(2), vec![0u64, 0]).unwrap();
        assert_eq!(
            sys.find_illegitimate(&g).unwrap_err(),
            EngineError::NoIllegitimatePredicate
        );
    }
}
