use serde::{Deserialize, Serialize};

use super::boltzmann::BoltzmannSign;
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, NetArchitecture};
use crate::puzzle::PuzzleKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Cost-to-go network trained by approximate value iteration.
    Davi,
    /// Q-network trained on single Boltzmann-explored transitions.
    Qlearn,
}

/// When the frozen target copy is refreshed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetUpdate {
    /// Every `period` iterations.
    Period { period: u64 },
    /// When an iteration's loss falls below `threshold`, at most once per
    /// `min_period` iterations and at least once per `max_period`.
    LossThreshold {
        threshold: f64,
        #[serde(default = "default_min_period")]
        min_period: u64,
        #[serde(default = "default_period")]
        max_period: u64,
    },
}

impl Default for TargetUpdate {
    fn default() -> Self {
        TargetUpdate::Period {
            period: default_period(),
        }
    }
}

impl TargetUpdate {
    /// Whether to refresh after `since` iterations whose latest loss is `loss`.
    pub fn due(&self, since: u64, loss: f64) -> bool {
        match *self {
            TargetUpdate::Period { period } => since >= period,
            TargetUpdate::LossThreshold {
                threshold,
                min_period,
                max_period,
            } => since >= max_period || (since >= min_period && loss < threshold),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
    pub res_blocks: usize,
    pub batch_norm: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let desk = NetArchitecture::desk(1, 1);
        Self {
            hidden: desk.hidden,
            res_blocks: desk.res_blocks,
            batch_norm: desk.batch_norm,
        }
    }
}

impl NetworkConfig {
    pub fn architecture(&self, input_dim: usize, output_dim: usize) -> NetArchitecture {
        NetArchitecture {
            input_dim,
            hidden: self.hidden.clone(),
            res_blocks: self.res_blocks,
            output_dim,
            batch_norm: self.batch_norm,
        }
    }
}

/// Training run configuration, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub puzzle: PuzzleKind,
    #[serde(default = "one")]
    pub max_len: usize,
    /// K: training states are scrambled 0..=K times.
    pub max_scramble_depth: usize,
    pub batch_size: usize,
    /// Shrink the batch by |base actions| / |actions|.
    #[serde(default)]
    pub scale_batch_to_actions: bool,
    pub iterations: u64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub boltzmann_sign: BoltzmannSign,
    #[serde(default)]
    pub target_update: TargetUpdate,
    /// Report row (and greedy evaluation) every this many iterations; 0 disables.
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    #[serde(default = "default_eval_states")]
    pub eval_states: usize,
    /// Defaults to 2·K.
    #[serde(default)]
    pub greedy_step_cap: Option<usize>,
    /// 0 writes only the initial and final checkpoints.
    #[serde(default)]
    pub checkpoint_every: u64,
    #[serde(default)]
    pub seed: u64,
    /// Sample the next batch on a separate thread.
    #[serde(default)]
    pub producer_thread: bool,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub adam: AdamConfig,
    /// Per-iteration factor on `adam.lr`: iteration `t` uses `lr · lr_decay^t`.
    #[serde(default = "default_lr_decay")]
    pub lr_decay: f64,
}

fn one() -> usize {
    1
}
fn default_gamma() -> f64 {
    1.0
}
fn default_temperature() -> f64 {
    1.0 / 3.0
}
fn default_period() -> u64 {
    5000
}
fn default_min_period() -> u64 {
    1
}
fn default_lr_decay() -> f64 {
    1.0
}
fn default_eval_every() -> u64 {
    1000
}
fn default_eval_states() -> usize {
    200
}

impl TrainConfig {
    /// Minimal config with every optional field at its default.
    pub fn new(mode: TrainMode, puzzle: PuzzleKind, max_scramble_depth: usize, batch_size: usize, iterations: u64) -> Self {
        Self {
            mode,
            puzzle,
            max_len: 1,
            max_scramble_depth,
            batch_size,
            scale_batch_to_actions: false,
            iterations,
            gamma: default_gamma(),
            temperature: default_temperature(),
            boltzmann_sign: BoltzmannSign::default(),
            target_update: TargetUpdate::default(),
            eval_every: default_eval_every(),
            eval_states: default_eval_states(),
            greedy_step_cap: None,
            checkpoint_every: 0,
            seed: 0,
            producer_thread: false,
            network: NetworkConfig::default(),
            adam: AdamConfig::default(),
            lr_decay: default_lr_decay(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.max_len == 0 {
            return fail("max_len must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma must be in [0, 1], got {}", self.gamma));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return fail(format!("temperature must be positive, got {}", self.temperature));
        }
        match self.target_update {
            TargetUpdate::Period { period } if period == 0 => return fail("target period must be at least 1".into()),
            TargetUpdate::LossThreshold {
                threshold,
                min_period,
                max_period,
            } if !(threshold >= 0.0) || min_period == 0 || max_period < min_period => {
                return fail("loss-threshold target update needs threshold ≥ 0 and 1 ≤ min_period ≤ max_period".into())
            }
            _ => {}
        }
        if self.eval_every > 0 && self.eval_states == 0 {
            return fail("eval_states must be at least 1".into());
        }
        if self.greedy_step_cap == Some(0) {
            return fail("greedy_step_cap must be at least 1".into());
        }
        if !(self.adam.lr > 0.0) {
            return fail("adam.lr must be positive".into());
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return fail(format!("lr_decay must be in (0, 1], got {}", self.lr_decay));
        }
        Ok(())
    }

    pub fn step_cap(&self) -> usize {
        self.greedy_step_cap.unwrap_or(2 * self.max_scramble_depth).max(1)
    }

    /// Batch size actually used, after optional scaling by action count.
    pub fn effective_batch_size(&self, num_actions: usize) -> usize {
        if self.scale_batch_to_actions {
            scaled_batch_size(self.batch_size, self.puzzle.num_base_moves(), num_actions)
        } else {
            self.batch_size
        }
    }
}

/// `⌊batch · base / actions⌋`, at least 1: keeps the number of generated
/// children per DAVI iteration constant as meta-actions are added.
pub fn scaled_batch_size(batch: usize, base_actions: usize, actions: usize) -> usize {
    (batch * base_actions / actions.max(1)).max(1)
}
