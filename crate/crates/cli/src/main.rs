use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aqsolve::artifact::{comment_header, flatten};
use aqsolve::bench::{self, HeuristicSource, HeuristicSpec, Models, SweepSpec};
use aqsolve::model::OutputKind;
use aqsolve::oracle::{bfs_distances, cache_path, save_table};
use aqsolve::puzzle::{ActionSpace, PuzzleKind, PuzzleState};
use aqsolve::search::{Method, SearchConfig, Solver};
use aqsolve::training::{eval_greedy, train_loop, TrainConfig, TrainOptions};
use aqsolve::{Error, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "aqsolve", version, about = "Train cube heuristics and search with A* / AQ*")]
struct Cli {
    /// Overrides the seed in config files; default 0 elsewhere.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Where artifacts are written.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a network from a TOML config.
    Train {
        config: PathBuf,
        /// Continue from a checkpoint with optimizer state.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Solve scrambles and print one JSON result per line.
    Solve(SolveArgs),
    /// Run a (λ × N) sweep from a TOML spec.
    Sweep { spec: PathBuf },
    /// Build a breadth-first distance table.
    Oracle {
        #[command(flatten)]
        space: SpaceArgs,
        /// Output file (default: a cache name under --out-dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fraction of scrambles solved by following the model greedily.
    EvalGreedy(EvalArgs),
    /// Print the sticker net of a move sequence applied to the goal.
    Show {
        #[arg(long, default_value = "cube2")]
        puzzle: PuzzleKind,
        #[arg(long, default_value = "")]
        moves: String,
    },
}

#[derive(Args)]
struct SpaceArgs {
    #[arg(long, default_value = "cube2")]
    puzzle: PuzzleKind,
    /// Longest meta-action (1 = base moves only).
    #[arg(long, default_value_t = 1)]
    max_len: usize,
}

#[derive(Args)]
struct ModelArgs {
    /// `oracle`, `zero`, or checkpoint paths (repeatable).
    #[arg(long = "heuristic", required = true)]
    heuristic: Vec<String>,
    /// Directory for cached distance tables.
    #[arg(long)]
    oracle_cache: Option<PathBuf>,
}

impl ModelArgs {
    fn spec(&self) -> HeuristicSpec {
        let source = match self.heuristic.as_slice() {
            [one] if one == "oracle" => HeuristicSource::Oracle,
            [one] if one == "zero" => HeuristicSource::Zero,
            _ => HeuristicSource::Checkpoint,
        };
        HeuristicSpec {
            source,
            checkpoints: match source {
                HeuristicSource::Checkpoint => self.heuristic.iter().map(PathBuf::from).collect(),
                _ => vec![],
            },
            oracle_cache: self.oracle_cache.clone(),
        }
    }
}

#[derive(Args)]
struct StateArgs {
    /// Solve this move sequence (e.g. "U R' F").
    #[arg(long, conflicts_with_all = ["states", "depth"])]
    moves: Option<String>,
    /// State file: one move sequence per line.
    #[arg(long, conflicts_with = "depth")]
    states: Option<PathBuf>,
    /// Random scrambles of this many base moves.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 1)]
    count: usize,
}

impl StateArgs {
    fn load(&self, puzzle: PuzzleKind, seed: u64) -> Result<Vec<PuzzleState>> {
        if let Some(m) = &self.moves {
            return Ok(vec![puzzle.apply_moves(&puzzle.parse_moves(m)?)]);
        }
        if let Some(path) = &self.states {
            return bench::read_state_file(puzzle, path);
        }
        let depth = self
            .depth
            .ok_or_else(|| Error::Config("give one of --moves, --states or --depth".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..self.count).map(|_| puzzle.scramble(depth, &mut rng)).collect())
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    states: StateArgs,
    #[arg(long, default_value = "aqstar")]
    method: Method,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long = "batch", default_value_t = 1)]
    batch: usize,
    #[arg(long)]
    max_nodes: Option<u64>,
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Scrambles drawn with depths uniform in 0..=K.
    #[arg(long = "max-depth")]
    max_depth: usize,
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Default 2·K.
    #[arg(long)]
    step_cap: Option<usize>,
    /// Follow Q-factors (`q`) or one-step lookahead on cost-to-go (`value`).
    #[arg(long, default_value = "q", value_parser = ["q", "value"])]
    policy: String,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.cmd {
        Cmd::Train { config, resume } => {
            let mut cfg = TrainConfig::from_toml_str(&fs::read_to_string(config)?)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let opts = TrainOptions {
                out_dir: Some(cli.out_dir.clone()),
                resume: resume.clone(),
            };
            let out = train_loop(&cfg, &opts, |r| {
                eprintln!(
                    "itr {:>8}  loss {:.5}  greedy {:.3}  {:.1} itr/s",
                    r.iteration, r.loss, r.greedy_solve_frac, r.itrs_per_sec
                )
            })?;
            println!(
                "{}",
                serde_json::json!({
                    "iterations": cfg.iterations,
                    "itrs_per_sec": out.itrs_per_sec,
                    "forward_passes": out.forward_passes,
                    "target_updates": out.target_updates,
                    "checkpoint": out.checkpoints.last(),
                })
            );
            Ok(())
        }
        Cmd::Solve(a) => solve(a, seed),
        Cmd::Sweep { spec } => {
            let spec = SweepSpec::from_toml_str(&fs::read_to_string(spec)?)?;
            let models = Models::load(&spec.heuristic, spec.action_space()?)?;
            let states = bench::test_states(spec.puzzle, &spec.states)?;
            let out = bench::run_sweep(&spec, &models, &states, |r| {
                eprintln!(
                    "{:<6} λ={:<4} N={:<6} solved {:.2}  cost {}  nodes {}",
                    r.method.to_string(),
                    r.lambda,
                    r.n,
                    r.solved_fraction,
                    fmt_opt(r.avg_path_cost),
                    fmt_opt(r.avg_nodes_generated)
                )
            })?;
            bench::write_sweep(&cli.out_dir, &spec, &models, &out)?;
            println!("{}", cli.out_dir.join(bench::SWEEP_CSV).display());
            Ok(())
        }
        Cmd::Oracle { space, out } => {
            let sp = ActionSpace::new(space.puzzle, space.max_len)?;
            let table = bfs_distances(&sp)?;
            let path = match out {
                Some(p) => p.clone(),
                None => {
                    fs::create_dir_all(&cli.out_dir)?;
                    cache_path(&cli.out_dir, &sp)
                }
            };
            save_table(&table, &path)?;
            println!(
                "{}",
                serde_json::json!({
                    "path": path,
                    "states": table.visited(),
                    "max_distance": table.max_distance(),
                    "histogram": table.histogram(),
                })
            );
            Ok(())
        }
        Cmd::EvalGreedy(a) => eval(a, seed, &cli.out_dir),
        Cmd::Show { puzzle, moves } => {
            let s = puzzle.apply_moves(&puzzle.parse_moves(moves)?);
            print!("{}", s.sticker_grid(*puzzle));
            Ok(())
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.2}"))
}

fn solve(a: &SolveArgs, seed: u64) -> Result<()> {
    let space = ActionSpace::new(a.space.puzzle, a.space.max_len)?;
    let models = Models::load(&a.model.spec(), space)?;
    let model = models.for_method(a.method)?;
    let solver = Solver::new(models.space(), model.as_ref(), a.method)?;
    let mut cfg = SearchConfig::new(a.lambda, a.batch);
    if let Some(n) = a.max_nodes {
        cfg.max_nodes = n;
    }
    if let Some(t) = a.time_limit {
        cfg.time_limit_s = t;
    }
    for (i, s) in a.states.load(a.space.puzzle, seed)?.iter().enumerate() {
        let r = solver.solve(s, &cfg)?;
        let mut v = serde_json::to_value(&r).map_err(|e| Error::Format(e.to_string()))?;
        v["instance"] = i.into();
        v["solution_moves"] = r
            .solution
            .iter()
            .map(|&a| models.space().describe(a))
            .collect::<Vec<_>>()
            .into();
        if let Some(t) = models.table() {
            v["optimal_cost"] = t.distance(s)?.into();
        }
        println!("{v}");
    }
    Ok(())
}

fn eval(a: &EvalArgs, seed: u64, out_dir: &Path) -> Result<()> {
    let space = ActionSpace::new(a.space.puzzle, a.space.max_len)?;
    let models = Models::load(&a.model.spec(), space)?;
    let (kind, method) = match a.policy.as_str() {
        "value" => (OutputKind::CostToGo, Method::Astar),
        _ => (OutputKind::QFactors, Method::Aqstar),
    };
    let model = models.for_method(method)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<PuzzleState> = a
        .space
        .puzzle
        .sample_training_states(a.count, a.max_depth, &mut rng)
        .into_iter()
        .map(|(s, _)| s)
        .collect();
    let cap = a.step_cap.unwrap_or(2 * a.max_depth).max(1);
    let frac = eval_greedy(model.as_ref(), kind, models.space(), &states, cap, a.gamma)?;

    let mut pairs = flatten(&serde_json::json!({
        "puzzle": a.space.puzzle,
        "max_len": a.space.max_len,
        "heuristic": a.model.heuristic,
        "max_depth": a.max_depth,
        "count": a.count,
        "step_cap": cap,
        "policy": a.policy,
        "gamma": a.gamma,
        "seed": seed,
    }))?;
    for (path, digest) in models.digests() {
        pairs.push((format!("checkpoint_sha256.{path}"), digest.clone()));
    }
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("eval_greedy.csv");
    fs::write(&path, format!("{}greedy_solve_frac\n{frac}\n", comment_header(&pairs)))?;
    println!("{frac}");
    Ok(())
}
