//! `unitclust`: command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning                                                  |
//! |------|----------------------------------------------------------|
//! | 0    | success; `verify` VERIFIED; `search` met its target      |
//! | 1    | `verify` FAILED; `search` missed its target              |
//! | 2    | `verify` INCOMPLETE or node cap hit                      |
//! | 64   | bad command line (unknown flag, bad ratio, bad config)   |
//! | 65   | malformed input file (tree, points)                      |
//! | 66   | input file missing or unreadable                         |
//! | 70   | internal error (worker pool, illegal algorithm move)     |
//! | 73   | output file could not be written                         |

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use unit_cluster::adversary::{
    builtin_kk13, export_dot, load_tree, play, save_tree, StrategyTree, BUILTIN_KK13,
};
use unit_cluster::algorithms::by_name;
use unit_cluster::opt::{opt_bruteforce, opt_cover, parse_points};
use unit_cluster::search::{best_forced_ratio, SearchConfig, DEFAULT_NODE_CAP as SEARCH_NODE_CAP};
use unit_cluster::verifier::{
    format_leaf_stats, leaf_stats, verify, Verdict, VerifyOptions, DEFAULT_NODE_CAP,
};
use unit_cluster::{Ratio, Scale};

const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_NOINPUT: u8 = 66;
const EX_SOFTWARE: u8 = 70;
const EX_CANTCREAT: u8 = 73;

#[derive(Debug, Parser)]
#[command(
    name = "unitclust",
    version,
    about = "Online unit clustering: lower-bound verification and forced-ratio search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a strategy tree forces at least TARGET against every algorithm.
    Verify {
        /// `builtin:kk13` or a tree JSON file.
        #[arg(long)]
        tree: String,
        /// Ratio to prove, as N/D.
        #[arg(long)]
        target: Ratio,
        /// Write the full JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Disable dominance pruning.
        #[arg(long)]
        no_prune: bool,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: u64,
        /// Print one line per leaf comparing expected and computed minima.
        #[arg(long)]
        leaf_stats: bool,
    },
    /// Play a baseline algorithm against a strategy tree.
    Play {
        #[arg(long, value_enum)]
        algorithm: Algorithm,
        #[arg(long)]
        tree: String,
        /// Write the game as JSON lines here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compute the offline optimum of a points file.
    Opt {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum, default_value_t = OptMethod::Greedy)]
        method: OptMethod,
        /// Coordinates must be multiples of 1/SCALE.
        #[arg(long, default_value_t = 10)]
        scale: i64,
    },
    /// Search for the best ratio an adversary can force on a grid.
    Search {
        #[arg(long)]
        scale: i64,
        /// Candidate spacing, in multiples of 1/SCALE.
        #[arg(long)]
        grid_step: i64,
        /// Widest allowed spread of all points, in units.
        #[arg(long)]
        window: String,
        #[arg(long)]
        max_points: u32,
        /// Stop once this ratio is forced.
        #[arg(long)]
        target: Option<Ratio>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write the forcing strategy tree here.
        #[arg(long)]
        emit_tree: Option<PathBuf>,
        /// Write the JSON search report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = SEARCH_NODE_CAP)]
        node_cap: u64,
        /// Disable bound cutoffs.
        #[arg(long)]
        no_prune: bool,
        /// Disable the transposition table.
        #[arg(long)]
        no_memo: bool,
        /// Print per-first-move progress to standard error.
        #[arg(long)]
        progress: bool,
    },
    /// Render a strategy tree.
    Export {
        #[arg(long)]
        tree: String,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algorithm {
    Greedy,
    Grid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptMethod {
    Greedy,
    Bruteforce,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Json,
}

/// An error message paired with its exit code.
struct Failure(u8, String);

impl Failure {
    fn usage(msg: impl ToString) -> Self {
        Failure(EX_USAGE, msg.to_string())
    }
    fn data(msg: impl ToString) -> Self {
        Failure(EX_DATAERR, msg.to_string())
    }
    fn internal(msg: impl ToString) -> Self {
        Failure(EX_SOFTWARE, msg.to_string())
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(EX_NOINPUT, format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure(EX_CANTCREAT, format!("{}: {e}", path.display())))
}

fn resolve_tree(source: &str) -> Result<StrategyTree, Failure> {
    if source == BUILTIN_KK13 {
        return Ok(builtin_kk13());
    }
    if source.starts_with("builtin:") {
        return Err(Failure::usage(format!("unknown builtin tree {source:?}")));
    }
    let text = read_input(Path::new(source))?;
    load_tree(&text).map_err(|e| Failure::data(format!("{source}: {e}")))
}

fn cmd_verify(
    tree: &str,
    target: Ratio,
    report: Option<&Path>,
    opts: VerifyOptions,
    show_leaves: bool,
) -> Result<u8, Failure> {
    if opts.jobs < 1 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    let tree = resolve_tree(tree)?;
    let result = verify(&tree, target, opts).map_err(Failure::internal)?;
    print!("{}", result.summary_lines());
    if show_leaves {
        print!("{}", format_leaf_stats(&leaf_stats(&result)));
    }
    if let Some(path) = report {
        write_output(path, &result.to_json(true))?;
    }
    Ok(match result.verdict {
        Verdict::Verified => 0,
        Verdict::Failed => 1,
        Verdict::Incomplete => 2,
    })
}

fn cmd_play(algorithm: Algorithm, tree: &str, trace_path: Option<&Path>) -> Result<u8, Failure> {
    let name = match algorithm {
        Algorithm::Greedy => "greedy",
        Algorithm::Grid => "grid",
    };
    let alg = by_name(name).ok_or_else(|| Failure::usage(format!("unknown algorithm {name:?}")))?;
    let tree = resolve_tree(tree)?;
    let trace = play(&tree, alg.as_ref()).map_err(Failure::internal)?;
    println!("algorithm={name}");
    println!("on_cost={}", trace.on_cost());
    println!("opt_cost={}", trace.opt_cost());
    println!(
        "ratio={}",
        trace
            .final_ratio()
            .map_or("none".to_string(), |r| r.to_string())
    );
    println!("leaf={}", trace.leaf.as_deref().unwrap_or("none"));
    println!("steps={}", trace.events.len());
    if let Some(path) = trace_path {
        write_output(path, &trace.to_jsonl())?;
    }
    Ok(0)
}

fn cmd_opt(points: &Path, method: OptMethod, scale: i64) -> Result<u8, Failure> {
    let scale = Scale::new(scale).map_err(Failure::usage)?;
    let text = read_input(points)?;
    let pts = parse_points(&text, scale)
        .map_err(|e| Failure::data(format!("{}: {e}", points.display())))?;
    let cover = opt_cover(&pts, scale);
    let count = match method {
        OptMethod::Greedy => cover.count,
        OptMethod::Bruteforce => opt_bruteforce(&pts, scale).map_err(Failure::usage)?,
    };
    println!("points={}", pts.len());
    println!("count={count}");
    if let OptMethod::Greedy = method {
        for (lo, hi) in &cover.intervals {
            println!("interval=[{}, {}]", scale.format(*lo), scale.format(*hi));
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    scale: i64,
    grid_step: i64,
    window: &str,
    max_points: u32,
    target: Option<Ratio>,
    jobs: usize,
    emit_tree: Option<&Path>,
    report: Option<&Path>,
    node_cap: u64,
    prune: bool,
    memo: bool,
    progress: bool,
) -> Result<u8, Failure> {
    let scale = Scale::new(scale).map_err(Failure::usage)?;
    let window = scale
        .parse(window)
        .map_err(|e| Failure::usage(format!("--window: {e}")))?;
    let mut config = SearchConfig::new(scale, grid_step, window.0, max_points);
    config.target = target;
    config.jobs = jobs;
    config.node_cap = node_cap;
    config.prune = prune;
    config.memo = memo;
    config.validate().map_err(Failure::usage)?;

    let result = best_forced_ratio(&config).map_err(Failure::internal)?;
    if progress {
        for line in &result.log {
            eprintln!("{line}");
        }
    }
    println!("value={}", result.value);
    println!("exhaustive={}", result.exhaustive);
    if let Some(met) = result.target_met {
        println!("target_met={met}");
    }
    println!("strategy_nodes={}", result.strategy.nodes.len());
    println!("explored={}", result.explored);
    println!("memo_hits={}", result.memo_hits);
    if let Some(path) = emit_tree {
        write_output(path, &save_tree(&result.strategy))?;
    }
    if let Some(path) = report {
        write_output(path, &result.to_json(&config, true))?;
    }
    Ok(match result.target_met {
        Some(false) => 1,
        _ if !result.exhaustive => 2,
        _ => 0,
    })
}

fn cmd_export(tree: &str, format: Format, out: &Path) -> Result<u8, Failure> {
    let tree = resolve_tree(tree)?;
    let text = match format {
        Format::Dot => export_dot(&tree),
        Format::Json => save_tree(&tree),
    };
    write_output(out, &text)?;
    println!("nodes={}", tree.nodes.len());
    println!("terminals={}", tree.terminals().len());
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Verify {
            tree,
            target,
            report,
            jobs,
            no_prune,
            node_cap,
            leaf_stats,
        } => {
            let opts = VerifyOptions {
                prune: !no_prune,
                jobs,
                node_cap,
                ..VerifyOptions::default()
            };
            cmd_verify(&tree, target, report.as_deref(), opts, leaf_stats)
        }
        Command::Play {
            algorithm,
            tree,
            trace,
        } => cmd_play(algorithm, &tree, trace.as_deref()),
        Command::Opt {
            points,
            method,
            scale,
        } => cmd_opt(&points, method, scale),
        Command::Search {
            scale,
            grid_step,
            window,
            max_points,
            target,
            jobs,
            emit_tree,
            report,
            node_cap,
            no_prune,
            no_memo,
            progress,
        } => cmd_search(
            scale,
            grid_step,
            &window,
            max_points,
            target,
            jobs,
            emit_tree.as_deref(),
            report.as_deref(),
            node_cap,
            !no_prune,
            !no_memo,
            progress,
        ),
        Command::Export { tree, format, out } => cmd_export(&tree, format, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EX_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("unitclust: {msg}");
            ExitCode::from(code)
        }
    }
}
