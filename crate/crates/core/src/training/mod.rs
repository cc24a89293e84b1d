//! Approximate value iteration and Q-learning with frozen target networks.

mod boltzmann;
mod config;
mod greedy;
mod update;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifact;
use crate::error::{Error, Result};
use crate::model::{CostModel, Learner, NetLearner, NetModel, OutputKind};
use crate::nn::{file_digest, load_checkpoint, save_checkpoint, NetworkParams, OptState};
use crate::puzzle::{ActionSpace, PuzzleKind, PuzzleState};

pub use boltzmann::{boltzmann_probs, boltzmann_sample, BoltzmannSign};
pub use config::{scaled_batch_size, NetworkConfig, TargetUpdate, TrainConfig, TrainMode};
pub use greedy::eval_greedy;
pub use update::{davi_targets, davi_update, qlearn_update, Exploration, UpdateStats};

/// One report line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub iteration: u64,
    /// Mean training loss since the previous row.
    pub loss: f64,
    pub greedy_solve_frac: f64,
    /// Training iterations per second since the previous row, excluding
    /// evaluation and checkpoint time.
    pub itrs_per_sec: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub rows: Vec<ReportRow>,
}

impl TrainReport {
    /// CSV text: `header` comment lines, then `iteration,loss,greedy_solve_frac,itrs_per_sec`.
    pub fn to_csv(&self, header: &str) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
        }
        if self.rows.is_empty() {
            w.write_record(["iteration", "loss", "greedy_solve_frac", "itrs_per_sec"])
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        let body = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(format!("{header}{}", String::from_utf8(body).expect("utf-8 csv")))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<ReportRow>, _>>()
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self { rows })
    }
}

pub struct TrainOutcome {
    pub report: TrainReport,
    pub learner: NetLearner,
    /// Network invocations and states evaluated across all updates.
    pub forward_passes: u64,
    pub states_evaluated: u64,
    pub target_updates: u64,
    /// Iterations per second over the whole run, excluding evaluation.
    pub itrs_per_sec: f64,
    /// Checkpoints written, in order; the last is the final model.
    pub checkpoints: Vec<PathBuf>,
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Where checkpoints and `report.csv` go; nothing is written when unset.
    pub out_dir: Option<PathBuf>,
    /// Continue from a checkpoint that carries optimizer state.
    pub resume: Option<PathBuf>,
}

/// Separate generator per purpose so that moving batch sampling to another
/// thread does not change any random draw.
fn stream(seed: u64, start: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ start.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(id);
    rng
}

const SAMPLE_STREAM: u64 = 1;
const EXPLORE_STREAM: u64 = 2;
const EVAL_STREAM: u64 = 3;

fn sample_batch(puzzle: PuzzleKind, count: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<PuzzleState> {
    puzzle
        .sample_training_states(count, k, rng)
        .into_iter()
        .map(|(s, _)| s)
        .collect()
}

/// Initial learner for a config, or the one stored in `resume`.
fn initial_learner(cfg: &TrainConfig, space: &ActionSpace, resume: Option<&Path>) -> Result<NetLearner> {
    let out_dim = match cfg.mode {
        TrainMode::Davi => 1,
        TrainMode::Qlearn => space.len(),
    };
    match resume {
        Some(path) => {
            let ck = load_checkpoint(path)?;
            let model = NetModel::new(cfg.puzzle, ck.params)?;
            if model.output_dim() != out_dim {
                return Err(Error::Width {
                    expected: out_dim,
                    got: model.output_dim(),
                });
            }
            let opt = ck.opt.unwrap_or_else(|| OptState::new(model.params(), cfg.adam));
            NetLearner::from_parts(model, opt)
        }
        None => {
            let arch = cfg.network.architecture(cfg.puzzle.encoded_len(), out_dim);
            let params = NetworkParams::init(&arch, cfg.seed)?;
            Ok(NetLearner::new(NetModel::new(cfg.puzzle, params)?, cfg.adam))
        }
    }
}

fn checkpoint(dir: Option<&Path>, learner: &NetLearner, iteration: u64, written: &mut Vec<PathBuf>) -> Result<()> {
    let Some(dir) = dir else { return Ok(()) };
    let path = dir.join("checkpoints").join(format!("iter-{iteration:08}.aqnn"));
    if written.last() == Some(&path) {
        return Ok(());
    }
    fs::create_dir_all(path.parent().unwrap())?;
    save_checkpoint(&path, learner.model().params(), Some(learner.opt()))?;
    written.push(path);
    Ok(())
}

/// Runs `cfg.iterations` updates (counting any resumed ones), refreshing the
/// target copy on the configured schedule, evaluating greedily every
/// `eval_every` iterations, and writing checkpoints plus `report.csv`.
///
/// `progress` sees each report row as it is produced.
pub fn train_loop(cfg: &TrainConfig, opts: &TrainOptions, mut progress: impl FnMut(&ReportRow)) -> Result<TrainOutcome> {
    cfg.validate()?;
    let space = ActionSpace::new(cfg.puzzle, cfg.max_len)?;
    let mut learner = initial_learner(cfg, &space, opts.resume.as_deref())?;
    let start = learner.opt().step.min(cfg.iterations);
    let batch = cfg.effective_batch_size(space.len());
    let kind = match cfg.mode {
        TrainMode::Davi => OutputKind::CostToGo,
        TrainMode::Qlearn => OutputKind::QFactors,
    };
    let explore = Exploration {
        temperature: cfg.temperature,
        sign: cfg.boltzmann_sign,
    };
    let out_dir = opts.out_dir.as_deref();
    let mut written = Vec::new();
    checkpoint(out_dir, &learner, start, &mut written)?;

    let mut sample_rng = stream(cfg.seed, start, SAMPLE_STREAM);
    let mut explore_rng = stream(cfg.seed, start, EXPLORE_STREAM);
    let mut eval_rng = stream(cfg.seed, start, EVAL_STREAM);
    let remaining = cfg.iterations - start;

    let mut report = TrainReport::default();
    let mut totals = UpdateStats::default();
    let mut target_updates = 0u64;
    let mut train_secs = 0.0f64;

    std::thread::scope(|scope| -> Result<()> {
        let (puzzle, k) = (cfg.puzzle, cfg.max_scramble_depth);
        let rx = cfg.producer_thread.then(|| {
            let (tx, rx) = mpsc::sync_channel::<Vec<PuzzleState>>(2);
            let mut rng = sample_rng.clone();
            scope.spawn(move || {
                for _ in 0..remaining {
                    if tx.send(sample_batch(puzzle, batch, k, &mut rng)).is_err() {
                        break;
                    }
                }
            });
            rx
        });

        let mut target = learner.snapshot();
        let mut since_update = 0u64;
        let (mut interval_loss, mut interval_iters, mut interval_secs) = (0.0, 0u64, 0.0);
        for it in start..cfg.iterations {
            let t0 = Instant::now();
            let states = match &rx {
                Some(rx) => rx
                    .recv()
                    .map_err(|_| Error::Internal("batch producer stopped".into()))?,
                None => sample_batch(puzzle, batch, k, &mut sample_rng),
            };
            learner.set_lr(cfg.adam.lr * cfg.lr_decay.powf(it as f64));
            let stats = match cfg.mode {
                TrainMode::Davi => davi_update(&mut learner, &target, &space, &states, cfg.gamma)?,
                TrainMode::Qlearn => {
                    qlearn_update(&mut learner, &target, &space, &states, cfg.gamma, explore, &mut explore_rng)?
                }
            };
            since_update += 1;
            if cfg.target_update.due(since_update, stats.loss) {
                target = learner.snapshot();
                since_update = 0;
                target_updates += 1;
            }
            let dt = t0.elapsed().as_secs_f64();
            train_secs += dt;
            interval_secs += dt;
            interval_loss += stats.loss;
            interval_iters += 1;
            totals += stats;

            let done = it + 1;
            let report_now = cfg.eval_every > 0 && (done % cfg.eval_every == 0 || done == cfg.iterations);
            if report_now {
                let eval = sample_batch(puzzle, cfg.eval_states, k, &mut eval_rng);
                let frac = eval_greedy(learner.model(), kind, &space, &eval, cfg.step_cap(), cfg.gamma)?;
                let row = ReportRow {
                    iteration: done,
                    loss: interval_loss / interval_iters as f64,
                    greedy_solve_frac: frac,
                    itrs_per_sec: interval_iters as f64 / interval_secs.max(1e-12),
                };
                progress(&row);
                report.rows.push(row);
                (interval_loss, interval_iters, interval_secs) = (0.0, 0, 0.0);
            }
            if cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 {
                checkpoint(out_dir, &learner, done, &mut written)?;
            }
        }
        Ok(())
    })?;

    checkpoint(out_dir, &learner, cfg.iterations, &mut written)?;
    if let Some(dir) = out_dir {
        let mut pairs = artifact::flatten(cfg)?;
        if let Some(resume) = &opts.resume {
            pairs.push(("resumed_from".into(), resume.display().to_string()));
        }
        if let Some(last) = written.last() {
            pairs.push(("checkpoint_sha256".into(), file_digest(last)?));
        }
        fs::write(dir.join("report.csv"), report.to_csv(&artifact::comment_header(&pairs))?)?;
    }

    let trained = cfg.iterations - start;
    Ok(TrainOutcome {
        report,
        learner,
        forward_passes: totals.forward_passes,
        states_evaluated: totals.states_evaluated,
        target_updates,
        itrs_per_sec: if trained == 0 { 0.0 } else { trained as f64 / train_secs.max(1e-12) },
        checkpoints: written,
    })
}
