//! (λ × N) sweeps over a fixed test set, aggregated into one row per
//! configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{comment_header, flatten};
use crate::error::{Error, Result};
use crate::model::{CostModel, HeuristicFromQ, NetModel, QFromHeuristic, ZeroHeuristic};
use crate::nn::file_digest;
use crate::oracle::{bfs_distances, load_or_build, DistanceTable, ExactDqn, ExactHeuristic};
use crate::puzzle::{ActionSpace, PuzzleKind, PuzzleState};
use crate::search::{Method, Outcome, SearchConfig, SearchResult, Solver};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicSource {
    /// Exact distances from a breadth-first table (cube2 only).
    Oracle,
    /// h = 0 everywhere.
    Zero,
    /// Trained networks.
    Checkpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicSpec {
    pub source: HeuristicSource,
    /// Networks with output width 1 serve A*, width |A| serve AQ*. A method
    /// without a matching network falls back to an adapter over the other.
    #[serde(default)]
    pub checkpoints: Vec<PathBuf>,
    /// Directory for cached distance tables.
    #[serde(default)]
    pub oracle_cache: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatesSpec {
    pub count: usize,
    pub min_depth: usize,
    pub max_depth: usize,
    pub seed: u64,
    /// One move sequence per line (see [`read_state_file`]); overrides the scramble settings.
    pub file: Option<PathBuf>,
}

impl Default for StatesSpec {
    fn default() -> Self {
        Self {
            count: 100,
            min_depth: 1000,
            max_depth: 10_000,
            seed: 0,
            file: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSpec {
    pub max_nodes: u64,
    pub max_open: u64,
    pub time_limit_s: f64,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        let d = SearchConfig::default();
        Self {
            max_nodes: d.max_nodes,
            max_open: d.max_open,
            time_limit_s: d.time_limit_s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub puzzle: PuzzleKind,
    #[serde(default = "one")]
    pub max_len: usize,
    pub methods: Vec<Method>,
    pub lambdas: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub heuristic: HeuristicSpec,
    #[serde(default)]
    pub states: StatesSpec,
    #[serde(default)]
    pub budget: BudgetSpec,
}

fn one() -> usize {
    1
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.into()));
        if self.max_len == 0 {
            return fail("max_len must be at least 1");
        }
        if self.methods.is_empty() || self.lambdas.is_empty() || self.batch_sizes.is_empty() {
            return fail("methods, lambdas and batch_sizes must be non-empty");
        }
        for &lambda in &self.lambdas {
            for &n in &self.batch_sizes {
                self.search_config(lambda, n).validate()?;
            }
        }
        if self.states.file.is_none() && (self.states.count == 0 || self.states.min_depth > self.states.max_depth) {
            return fail("states need count ≥ 1 and min_depth ≤ max_depth");
        }
        if self.heuristic.source == HeuristicSource::Checkpoint && self.heuristic.checkpoints.is_empty() {
            return fail("heuristic source `checkpoint` needs at least one path in `checkpoints`");
        }
        Ok(())
    }

    pub fn search_config(&self, lambda: f64, batch_size: usize) -> SearchConfig {
        SearchConfig {
            lambda,
            batch_size,
            max_nodes: self.budget.max_nodes,
            max_open: self.budget.max_open,
            time_limit_s: self.budget.time_limit_s,
        }
    }

    pub fn action_space(&self) -> Result<ActionSpace> {
        Ok(ActionSpace::new(self.puzzle, self.max_len)?)
    }
}

/// Scrambled test states for `spec`, or the contents of its state file.
pub fn test_states(puzzle: PuzzleKind, spec: &StatesSpec) -> Result<Vec<PuzzleState>> {
    if let Some(path) = &spec.file {
        return read_state_file(puzzle, path);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..spec.count)
        .map(|_| {
            let depth = rng.random_range(spec.min_depth..=spec.max_depth);
            puzzle.scramble(depth, &mut rng)
        })
        .collect())
}

/// Reads one state per line, each given as the moves that scramble it from
/// the goal. Blank lines and lines starting with `#` are skipped; a line of
/// just `-` is the goal itself.
pub fn read_state_file(puzzle: PuzzleKind, path: &Path) -> Result<Vec<PuzzleState>> {
    parse_states(puzzle, &fs::read_to_string(path)?)
}

pub fn parse_states(puzzle: PuzzleKind, text: &str) -> Result<Vec<PuzzleState>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "-" {
            out.push(PuzzleState::GOAL);
            continue;
        }
        let moves = puzzle
            .parse_moves(line)
            .map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        out.push(puzzle.apply_moves(&moves));
    }
    if out.is_empty() {
        return Err(Error::Format("state file holds no states".into()));
    }
    Ok(out)
}

/// Heuristics resolved from a [`HeuristicSpec`] for one action space.
pub struct Models {
    space: ActionSpace,
    source: HeuristicSource,
    table: Option<DistanceTable>,
    value: Option<NetModel>,
    q: Option<NetModel>,
    digests: Vec<(String, String)>,
}

impl Models {
    pub fn load(spec: &HeuristicSpec, space: ActionSpace) -> Result<Self> {
        let mut m = Self {
            space,
            source: spec.source,
            table: None,
            value: None,
            q: None,
            digests: Vec::new(),
        };
        match spec.source {
            HeuristicSource::Zero => {}
            HeuristicSource::Oracle => {
                m.table = Some(match &spec.oracle_cache {
                    Some(dir) => load_or_build(&m.space, dir)?,
                    None => bfs_distances(&m.space)?,
                });
            }
            HeuristicSource::Checkpoint => {
                for path in &spec.checkpoints {
                    let net = NetModel::load(path, m.space.puzzle())?;
                    let width = net.output_dim();
                    let slot = if width == 1 {
                        &mut m.value
                    } else if width == m.space.len() {
                        &mut m.q
                    } else {
                        return Err(Error::Width {
                            expected: m.space.len(),
                            got: width,
                        });
                    };
                    if slot.is_some() {
                        return Err(Error::Config(format!(
                            "two checkpoints with output width {width}; give at most one of each kind"
                        )));
                    }
                    *slot = Some(net);
                    m.digests.push((path.display().to_string(), file_digest(path)?));
                }
            }
        }
        Ok(m)
    }

    /// The oracle table itself, wrapped as a model source.
    pub fn from_table(table: DistanceTable, space: ActionSpace) -> Result<Self> {
        if !table.matches(&space) {
            return Err(Error::Config("distance table was built for another action space".into()));
        }
        Ok(Self {
            space,
            source: HeuristicSource::Oracle,
            table: Some(table),
            value: None,
            q: None,
            digests: Vec::new(),
        })
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn table(&self) -> Option<&DistanceTable> {
        self.table.as_ref()
    }

    /// `(path, sha256)` of each checkpoint used.
    pub fn digests(&self) -> &[(String, String)] {
        &self.digests
    }

    /// Cost model of the width `method` expects.
    pub fn for_method(&self, method: Method) -> Result<Box<dyn CostModel<PuzzleState> + '_>> {
        let space = &self.space;
        Ok(match (self.source, method) {
            (HeuristicSource::Zero, Method::Astar) => Box::new(ZeroHeuristic),
            (HeuristicSource::Zero, Method::Aqstar) => Box::new(QFromHeuristic::new(space, ZeroHeuristic)),
            (HeuristicSource::Oracle, Method::Astar) => Box::new(ExactHeuristic::new(self.oracle()?)),
            (HeuristicSource::Oracle, Method::Aqstar) => Box::new(ExactDqn::new(self.oracle()?, space)?),
            (HeuristicSource::Checkpoint, Method::Astar) => match (&self.value, &self.q) {
                (Some(v), _) => Box::new(v),
                (None, Some(q)) => Box::new(HeuristicFromQ(q)),
                (None, None) => return Err(Error::Config("no checkpoint loaded".into())),
            },
            (HeuristicSource::Checkpoint, Method::Aqstar) => match (&self.q, &self.value) {
                (Some(q), _) => Box::new(q),
                (None, Some(v)) => Box::new(QFromHeuristic::new(space, v)),
                (None, None) => return Err(Error::Config("no checkpoint loaded".into())),
            },
        })
    }

    fn oracle(&self) -> Result<&DistanceTable> {
        self.table.as_ref().ok_or_else(|| Error::Internal("oracle table not loaded".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub method: Method,
    pub lambda: f64,
    pub n: usize,
    pub instance: usize,
    #[serde(flatten)]
    pub result: SearchResult,
}

/// One aggregated (method, λ, N) configuration. Averages cover solved
/// instances only and are empty when none were solved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub lambda: f64,
    pub n: usize,
    pub solved_fraction: f64,
    pub avg_path_cost: Option<f64>,
    pub avg_time_s: Option<f64>,
    pub avg_nodes_generated: Option<f64>,
    pub avg_heuristic_evals: Option<f64>,
    pub avg_node_actions_pushed: Option<f64>,
    /// Instances stopped by a node, queue or time budget.
    pub budget_exceeded: usize,
}

impl SweepRow {
    pub fn aggregate(method: Method, lambda: f64, n: usize, results: &[SearchResult]) -> Self {
        let solved: Vec<&SearchResult> = results.iter().filter(|r| r.outcome == Outcome::Solved).collect();
        let avg = |f: &dyn Fn(&SearchResult) -> f64| {
            (!solved.is_empty()).then(|| solved.iter().map(|r| f(r)).sum::<f64>() / solved.len() as f64)
        };
        Self {
            method,
            lambda,
            n,
            solved_fraction: if results.is_empty() {
                0.0
            } else {
                solved.len() as f64 / results.len() as f64
            },
            avg_path_cost: avg(&|r| r.path_cost),
            avg_time_s: avg(&|r| r.wall_time_s),
            avg_nodes_generated: avg(&|r| r.counters.nodes_generated as f64),
            avg_heuristic_evals: avg(&|r| r.counters.heuristic_states_evaluated as f64),
            avg_node_actions_pushed: avg(&|r| r.counters.node_actions_pushed as f64),
            budget_exceeded: results.iter().filter(|r| r.outcome == Outcome::Budget).count(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub instances: Vec<InstanceRecord>,
}

/// Runs every (method, λ, N) combination over `states`. Instances run in
/// parallel on the current rayon pool; results keep input order.
pub fn run_sweep(
    spec: &SweepSpec,
    models: &Models,
    states: &[PuzzleState],
    mut progress: impl FnMut(&SweepRow),
) -> Result<SweepOutput> {
    spec.validate()?;
    if models.space().len() != spec.action_space()?.len() {
        return Err(Error::Config("models were loaded for another action space".into()));
    }
    let mut out = SweepOutput::default();
    for &method in &spec.methods {
        let model = models.for_method(method)?;
        let solver = Solver::new(models.space(), model.as_ref(), method)?;
        for &lambda in &spec.lambdas {
            for &n in &spec.batch_sizes {
                let cfg = spec.search_config(lambda, n);
                let results = states
                    .par_iter()
                    .map(|s| solver.solve(s, &cfg))
                    .collect::<Result<Vec<_>>>()?;
                let row = SweepRow::aggregate(method, lambda, n, &results);
                progress(&row);
                out.rows.push(row);
                out.instances
                    .extend(results.into_iter().enumerate().map(|(instance, result)| InstanceRecord {
                        method,
                        lambda,
                        n,
                        instance,
                        result,
                    }));
            }
        }
    }
    Ok(out)
}

/// Average path cost both methods can reach, and the fewest nodes each
/// needs to reach it, from rows with every instance solved.
///
/// The threshold is the larger of the two methods' best average costs.
pub fn matched_cost_nodes(rows: &[SweepRow]) -> Option<(f64, f64, f64)> {
    let full = |m: Method| {
        rows.iter()
            .filter(move |r| r.method == m && r.solved_fraction == 1.0)
            .filter_map(|r| Some((r.avg_path_cost?, r.avg_nodes_generated?)))
    };
    let best = |m: Method| full(m).map(|(c, _)| c).min_by(f64::total_cmp);
    let threshold = best(Method::Astar)?.max(best(Method::Aqstar)?);
    let nodes = |m: Method| {
        full(m)
            .filter(|&(c, _)| c <= threshold)
            .map(|(_, n)| n)
            .min_by(f64::total_cmp)
    };
    Some((threshold, nodes(Method::Astar)?, nodes(Method::Aqstar)?))
}

pub const SWEEP_CSV: &str = "sweep.csv";
pub const INSTANCES_JSONL: &str = "instances.jsonl";

/// Provenance pairs: the flattened spec plus one `checkpoint_sha256` entry per checkpoint.
pub fn provenance(spec: &SweepSpec, models: &Models) -> Result<Vec<(String, String)>> {
    let mut pairs = flatten(spec)?;
    for (path, digest) in models.digests() {
        pairs.push((format!("checkpoint_sha256.{path}"), digest.clone()));
    }
    Ok(pairs)
}

pub fn rows_to_csv(rows: &[SweepRow], header: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(header.as_bytes().to_vec());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Format(e.to_string())))
        .collect()
}

/// Writes `sweep.csv` and `instances.jsonl` into `dir`. The JSONL file opens
/// with a `{"config": …, "checkpoints": …}` record.
pub fn write_sweep(dir: &Path, spec: &SweepSpec, models: &Models, out: &SweepOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    let header = comment_header(&provenance(spec, models)?);
    fs::write(dir.join(SWEEP_CSV), rows_to_csv(&out.rows, &header)?)?;

    let mut f = std::io::BufWriter::new(fs::File::create(dir.join(INSTANCES_JSONL))?);
    let digests: serde_json::Map<String, serde_json::Value> = models
        .digests()
        .iter()
        .map(|(p, d)| (p.clone(), d.clone().into()))
        .collect();
    let head = serde_json::json!({ "config": spec, "checkpoints": digests });
    writeln!(f, "{head}")?;
    for rec in &out.instances {
        writeln!(f, "{}", serde_json::to_string(rec).map_err(|e| Error::Format(e.to_string()))?)?;
    }
    f.flush()?;
    Ok(())
}
