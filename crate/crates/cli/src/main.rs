//! Command-line front end: single runs, batch experiments, verification
//! sweeps, and tree generation.
//!
//! Exit codes: 0 on success, 1 when a simulation or verification check
//! fails, 2 on usage or input errors. All randomness derives from the
//! `--seed` flags, so identical invocations produce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use stabsim_core::batch::{self, InitKind, RunSpec, STREAM_DAEMON, STREAM_TREE};
use stabsim_core::domination::{self, DominationNodeState};
use stabsim_core::engine::{
    default_max_moves, Daemon, DaemonStrategy, LabeledGraph, RunOptions, RunReport, TraceEntry,
};
use stabsim_core::mix_seed;
use stabsim_core::oracle::{
    brute_force_domination, brute_force_packing, centralized_solver, BRUTE_FORCE_MAX_NODES,
};
use stabsim_core::packing::{self, PackingNodeState};
use stabsim_core::tree::{NodeId, Tree};
use stabsim_core::verify::{self, SweepConfig};
use stabsim_core::Problem;

#[derive(Parser)]
#[command(
    name = "stabsim",
    version,
    about = "Simulate self-stabilizing packing and domination rule systems on rooted trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and report moves, validity, and optimality.
    Run(RunArgs),
    /// Run a seeded sweep and emit one CSV row per run on stdout.
    Batch(BatchArgs),
    /// Sweep small random instances and check every invariant against the
    /// enumeration oracles.
    Verify(VerifyArgs),
    /// Emit a random tree in the two-line file format.
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Tree file to load (two-line format).
    #[arg(long, value_name = "FILE", conflicts_with = "random", required_unless_present = "random")]
    tree: Option<PathBuf>,
    /// Generate a random tree with this many nodes instead of loading one.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    random: Option<u64>,
    /// Distance parameter K (at least 1).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    /// Problem to solve: pack | dom.
    #[arg(long, value_parser = Problem::from_str)]
    problem: Problem,
    /// Daemon strategy: random | round-robin | greedy-deepest |
    /// greedy-shallowest | greedy-max-enabled.
    #[arg(long, default_value = "random", value_parser = DaemonStrategy::from_str)]
    daemon: DaemonStrategy,
    /// Base seed for the tree, the initial labels, and the daemon.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial labels: "random" (corrupted), "legit" (the fixpoint), or a
    /// path to a JSON array of per-node states.
    #[arg(long, default_value = "random", value_name = "random|legit|FILE")]
    init: String,
    /// Move budget; defaults to 64·n³.
    #[arg(long, value_name = "MOVES")]
    max_moves: Option<u64>,
    /// Write a JSON-lines trace (one {"step","node","rule"} object per move).
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    /// Comma-separated node counts, e.g. 10,20,40.
    #[arg(long, value_name = "LIST")]
    sizes: String,
    /// Distance parameter K (at least 1).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    /// Problem to solve: pack | dom.
    #[arg(long, value_parser = Problem::from_str)]
    problem: Problem,
    /// Comma-separated daemon names.
    #[arg(
        long,
        value_name = "LIST",
        default_value = "random,round-robin,greedy-deepest,greedy-shallowest,greedy-max-enabled"
    )]
    daemons: String,
    /// Runs per (size, daemon) pair.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    runs_per_config: u64,
    /// Base seed; every run derives its own seed from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Move budget per run; defaults to 64·n³.
    #[arg(long, value_name = "MOVES")]
    max_moves: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest node count to sweep (enumeration-oracle bound: 12).
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..=12))]
    max_n: u64,
    /// Comma-separated K values to check.
    #[arg(long, value_name = "LIST", default_value = "1,2")]
    k_list: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random trees per (K, n) cell.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    trees_per_size: u64,
}

#[derive(Args)]
struct GenArgs {
    /// Node count (at least 1).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn load_tree(file: &Option<PathBuf>, random: Option<u64>, seed: u64) -> Result<Tree> {
    match (file, random) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading tree file {}", path.display()))?;
            Tree::parse(&text).with_context(|| format!("parsing tree file {}", path.display()))
        }
        (None, Some(n)) => Ok(Tree::random(n as usize, mix_seed(seed, STREAM_TREE))?),
        _ => bail!("exactly one of --tree and --random is required"),
    }
}

enum InitSpec<'a> {
    Random,
    Legit,
    File(&'a Path),
}

fn parse_init(raw: &str) -> InitSpec<'_> {
    match raw {
        "random" => InitSpec::Random,
        "legit" => InitSpec::Legit,
        path => InitSpec::File(Path::new(path)),
    }
}

/// Problem-independent view of one finished run.
struct Outcome {
    moves_total: u64,
    moves_by_rule: BTreeMap<String, u64>,
    steps_to_silence: Option<u64>,
    stabilized: bool,
    blacks: Vec<NodeId>,
    valid: bool,
    trace: Option<Vec<TraceEntry>>,
}

fn outcome_packing(tree: &Arc<Tree>, report: RunReport<PackingNodeState>, k: u32) -> Outcome {
    let blacks = packing::black_nodes(report.final_graph.labels());
    let valid = packing::validate_packing(tree, &blacks, k);
    Outcome {
        moves_total: report.moves_total,
        moves_by_rule: report.moves_by_rule,
        steps_to_silence: report.steps_to_silence,
        stabilized: report.stabilized,
        blacks,
        valid,
        trace: report.trace,
    }
}

fn outcome_domination(tree: &Arc<Tree>, report: RunReport<DominationNodeState>, k: u32) -> Outcome {
    let blacks = domination::black_nodes(report.final_graph.labels());
    let valid = domination::validate_domination(tree, &blacks, k);
    Outcome {
        moves_total: report.moves_total,
        moves_by_rule: report.moves_by_rule,
        steps_to_silence: report.steps_to_silence,
        stabilized: report.stabilized,
        blacks,
        valid,
        trace: report.trace,
    }
}

fn read_labels<T: serde::de::DeserializeOwned>(path: &Path, n: usize) -> Result<Vec<T>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading init file {}", path.display()))?;
    let labels: Vec<T> = serde_json::from_str(&text)
        .with_context(|| format!("parsing init file {}", path.display()))?;
    if labels.len() != n {
        bail!(
            "init file {} holds {} states for {} nodes",
            path.display(),
            labels.len(),
            n
        );
    }
    Ok(labels)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let tree = Arc::new(load_tree(&args.tree, args.random, args.seed)?);
    let n = tree.node_count();
    let max_moves = args.max_moves.unwrap_or_else(|| default_max_moves(n));
    let record_trace = args.trace.is_some();
    let options = RunOptions {
        max_moves,
        record_trace,
    };
    let daemon = Daemon::new(args.daemon, mix_seed(args.seed, STREAM_DAEMON));

    let outcome = match args.problem {
        Problem::Packing => {
            let report = match parse_init(&args.init) {
                InitSpec::Random => batch::simulate_packing(
                    &tree,
                    args.k,
                    args.daemon,
                    args.seed,
                    InitKind::RandomCorrupted,
                    max_moves,
                    record_trace,
                )?,
                InitSpec::Legit => batch::simulate_packing(
                    &tree,
                    args.k,
                    args.daemon,
                    args.seed,
                    InitKind::Fixpoint,
                    max_moves,
                    record_trace,
                )?,
                InitSpec::File(path) => {
                    let labels: Vec<PackingNodeState> = read_labels(path, n)?;
                    let width = args.k as usize + 1;
                    if let Some(bad) = labels.iter().position(|st| st.table.len() != width) {
                        bail!("init state {bad} has a table of length {}, expected {width}", labels[bad].table.len());
                    }
                    let system = packing::packing_rules(args.k)?;
                    let graph = LabeledGraph::new(Arc::clone(&tree), labels)?;
                    system.run(graph, &daemon, &options)
                }
            };
            outcome_packing(&tree, report, args.k)
        }
        Problem::Domination => {
            let report = match parse_init(&args.init) {
                InitSpec::Random => batch::simulate_domination(
                    &tree,
                    args.k,
                    args.daemon,
                    args.seed,
                    InitKind::RandomCorrupted,
                    max_moves,
                    record_trace,
                )?,
                InitSpec::Legit => batch::simulate_domination(
                    &tree,
                    args.k,
                    args.daemon,
                    args.seed,
                    InitKind::Fixpoint,
                    max_moves,
                    record_trace,
                )?,
                InitSpec::File(path) => {
                    let labels: Vec<DominationNodeState> = read_labels(path, n)?;
                    let width = 2 * args.k as usize + 1;
                    if let Some(bad) = labels.iter().position(|st| st.table.len() != width) {
                        bail!("init state {bad} has a table of length {}, expected {width}", labels[bad].table.len());
                    }
                    let system = domination::domination_rules(args.k)?;
                    let graph = LabeledGraph::new(Arc::clone(&tree), labels)?;
                    system.run(graph, &daemon, &options)
                }
            };
            outcome_domination(&tree, report, args.k)
        }
    };

    if let (Some(path), Some(trace)) = (&args.trace, &outcome.trace) {
        let mut out = String::new();
        for entry in trace {
            out.push_str(&serde_json::to_string(entry)?);
            out.push('\n');
        }
        fs::write(path, out).with_context(|| format!("writing trace {}", path.display()))?;
    }

    let (optimum, source) = if n <= BRUTE_FORCE_MAX_NODES {
        let result = match args.problem {
            Problem::Packing => brute_force_packing(&tree, args.k)?,
            Problem::Domination => brute_force_domination(&tree, args.k)?,
        };
        (result.optimum, "brute-force")
    } else {
        (
            centralized_solver(&tree, args.k, args.problem)?.optimum,
            "two-pass",
        )
    };
    let achieved = outcome.blacks.len() as u64;
    let optimal = outcome.valid && achieved == optimum;

    println!("tree: n={n} root={}", tree.root());
    println!(
        "config: problem={} k={} daemon={} seed={} init={} max-moves={max_moves}",
        args.problem, args.k, args.daemon, args.seed, args.init
    );
    println!("moves: {}", outcome.moves_total);
    let by_rule: Vec<String> = outcome
        .moves_by_rule
        .iter()
        .map(|(name, count)| format!("{name}={count}"))
        .collect();
    println!("moves-by-rule: {}", by_rule.join(" "));
    match outcome.steps_to_silence {
        Some(s) => println!("stabilized: true (silent after {s} moves)"),
        None => println!("stabilized: false (budget {max_moves} exhausted)"),
    }
    println!("blacks: {:?}", outcome.blacks);
    println!("valid: {}", outcome.valid);
    println!("optimum: {optimum} ({source})");
    println!("achieved: {achieved}");
    println!("optimal: {optimal}");

    Ok(if outcome.stabilized && optimal {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn parse_sizes(raw: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for token in raw.split(',') {
        let token = token.trim();
        let n: usize = token
            .parse()
            .with_context(|| format!("bad size {token:?} in --sizes"))?;
        if n == 0 {
            bail!("sizes must be at least 1");
        }
        out.push(n);
    }
    if out.is_empty() {
        bail!("--sizes must name at least one node count");
    }
    Ok(out)
}

fn parse_daemons(raw: &str) -> Result<Vec<DaemonStrategy>> {
    let mut out = Vec::new();
    for token in raw.split(',') {
        out.push(DaemonStrategy::from_str(token.trim()).map_err(anyhow::Error::msg)?);
    }
    if out.is_empty() {
        bail!("--daemons must name at least one strategy");
    }
    Ok(out)
}

fn cmd_batch(args: BatchArgs) -> Result<ExitCode> {
    let sizes = parse_sizes(&args.sizes)?;
    let daemons = parse_daemons(&args.daemons)?;

    let mut specs = Vec::new();
    for &n in &sizes {
        for &strategy in &daemons {
            for _ in 0..args.runs_per_config {
                let run_seed = mix_seed(args.seed, specs.len() as u64);
                let tree = Arc::new(Tree::random(n, mix_seed(run_seed, STREAM_TREE))?);
                specs.push(RunSpec {
                    tree,
                    problem: args.problem,
                    k: args.k,
                    strategy,
                    seed: run_seed,
                    init: InitKind::RandomCorrupted,
                    max_moves: args.max_moves.unwrap_or_else(|| default_max_moves(n)),
                });
            }
        }
    }

    let rows = batch::evaluate_sweep(&specs);

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(
        out,
        "run_id,n,k,problem,daemon,seed,moves_total,stabilized,valid,optimal,optimum,achieved"
    )?;
    let mut max_moves_per_n: BTreeMap<usize, u64> = BTreeMap::new();
    for (run_id, (spec, row)) in specs.iter().zip(&rows).enumerate() {
        let n = spec.tree.node_count();
        let entry = max_moves_per_n.entry(n).or_insert(0);
        *entry = (*entry).max(row.summary.moves_total);
        writeln!(
            out,
            "{run_id},{n},{},{},{},{},{},{},{},{},{},{}",
            spec.k,
            spec.problem,
            spec.strategy,
            spec.seed,
            row.summary.moves_total,
            row.summary.stabilized,
            row.summary.valid,
            row.optimal,
            row.optimum,
            row.achieved
        )?;
    }
    let footer: Vec<String> = max_moves_per_n
        .iter()
        .map(|(n, moves)| format!("{n}={moves}"))
        .collect();
    eprintln!("max moves per n: {}", footer.join(" "));
    Ok(ExitCode::SUCCESS)
}

fn parse_k_list(raw: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for token in raw.split(',') {
        let token = token.trim();
        let k: u32 = token
            .parse()
            .with_context(|| format!("bad K {token:?} in --k-list"))?;
        if k == 0 {
            bail!("K values must be at least 1");
        }
        out.push(k);
    }
    if out.is_empty() {
        bail!("--k-list must name at least one K");
    }
    Ok(out)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let k_list = parse_k_list(&args.k_list)?;
    println!(
        "verify: max-n={} k-list={:?} seed={} trees-per-size={}",
        args.max_n, k_list, args.seed, args.trees_per_size
    );
    let report = verify::sweep(&SweepConfig {
        max_n: args.max_n as usize,
        k_list,
        seed: args.seed,
        trees_per_size: args.trees_per_size as usize,
    });
    println!(
        "checked {} instances ({} runs)",
        report.instances, report.runs
    );
    if report.violations.is_empty() {
        println!("verify: PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        for violation in &report.violations {
            println!("FAIL: {violation}");
        }
        println!("verify: FAIL ({} violations)", report.violations.len());
        Ok(ExitCode::from(1))
    }
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode> {
    let tree = Tree::random(args.n as usize, mix_seed(args.seed, STREAM_TREE))?;
    print!("{}", tree.to_file_string());
    Ok(ExitCode::SUCCESS)
}
