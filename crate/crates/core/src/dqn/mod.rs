//! Deep Q-learning agent built from scratch: Q-network, replay, exploration
//! schedule, Adam optimizer, training and greedy evaluation.

mod adam;
mod checkpoint;
mod network;
mod replay;
mod schedule;
mod train;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use checkpoint::{load_policy, read_policy, save_policy, write_policy, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use network::{argmax, ForwardCache, QNetwork};
pub use replay::{ReplayBuffer, Transition};
pub use schedule::EpsilonSchedule;
pub use train::{evaluate, extract_best_position, train, BestPosition, EpisodeTrace, StepRecord, TrainedPolicy, TrainingRun};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, Observation, ACTION_COUNT, OBSERVATION_DIM};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub episodes: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    /// Environment steps between target-network syncs; 1 disables the lag.
    pub target_sync_steps: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_power: f64,
    /// Decay horizon in environment steps; `None` spans the whole run.
    pub epsilon_horizon_steps: Option<usize>,
    pub hidden_layers: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 10,
            learning_rate: 1e-2,
            gamma: 0.99,
            target_sync_steps: 250,
            batch_size: 64,
            buffer_capacity: 1_000_000,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_power: 1.0,
            epsilon_horizon_steps: None,
            hidden_layers: vec![32, 32],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.episodes < 1 {
            return Err("train.episodes must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(format!("train.gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(format!("train.learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.target_sync_steps == 0 {
            return Err("train.target_sync_steps must be at least 1".into());
        }
        if self.batch_size == 0 {
            return Err("train.batch_size must be at least 1".into());
        }
        if self.buffer_capacity < self.batch_size {
            return Err("train.buffer_capacity must be at least train.batch_size".into());
        }
        let eps_ok = |e: f64| (0.0..=1.0).contains(&e);
        if !eps_ok(self.epsilon_start) || !eps_ok(self.epsilon_end) || self.epsilon_end > self.epsilon_start {
            return Err("train.epsilon_start/epsilon_end must satisfy 0 <= end <= start <= 1".into());
        }
        if !(self.epsilon_power.is_finite() && self.epsilon_power > 0.0) {
            return Err("train.epsilon_power must be positive".into());
        }
        if self.epsilon_horizon_steps == Some(0) {
            return Err("train.epsilon_horizon_steps must be at least 1".into());
        }
        if self.hidden_layers.contains(&0) {
            return Err("train.hidden_layers entries must be positive".into());
        }
        Ok(())
    }

    /// Full layer widths, input to output.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![OBSERVATION_DIM];
        dims.extend_from_slice(&self.hidden_layers);
        dims.push(ACTION_COUNT);
        dims
    }

    pub fn schedule(&self, steps_per_episode: usize) -> EpsilonSchedule {
        EpsilonSchedule {
            start: self.epsilon_start,
            end: self.epsilon_end,
            power: self.epsilon_power,
            horizon: self
                .epsilon_horizon_steps
                .unwrap_or(self.episodes * steps_per_episode),
        }
    }
}

/// Epsilon-greedy action choice; greedy ties go to the lowest action index.
pub fn act<R: Rng + ?Sized>(net: &QNetwork, obs: &Observation, epsilon: f64, rng: &mut R) -> Action {
    let u: f64 = rng.random();
    let index = if u < epsilon {
        rng.random_range(0..ACTION_COUNT)
    } else {
        argmax(&net.forward(obs.as_slice()))
    };
    Action::from_index(index).expect("index below ACTION_COUNT")
}

/// Regression target for one transition.
pub fn td_target(target_net: &QNetwork, t: &Transition, gamma: f64) -> f64 {
    if t.done {
        t.reward
    } else {
        let q_next = target_net.forward(t.next_obs.as_slice());
        t.reward + gamma * q_next.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Mean squared TD error over `batch` and its gradient w.r.t. `net`'s parameters.
pub fn td_loss_and_grad(
    net: &QNetwork,
    target_net: &QNetwork,
    batch: &[Transition],
    gamma: f64,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if net.dims() != target_net.dims() {
        return Err(Error::ShapeMismatch {
            expected: net.num_params(),
            got: target_net.num_params(),
        });
    }
    let n = batch.len() as f64;
    let mut grads = vec![0.0; net.num_params()];
    let mut cache = ForwardCache::default();
    let mut dout = vec![0.0; net.output_dim()];
    let mut loss = 0.0;
    for t in batch {
        let y = td_target(target_net, t, gamma);
        net.forward_cached(t.obs.as_slice(), &mut cache);
        let q = cache.output()[t.action];
        let err = q - y;
        loss += err * err;
        dout.iter_mut().for_each(|d| *d = 0.0);
        dout[t.action] = 2.0 * err / n;
        net.backward(&cache, &dout, &mut grads);
    }
    Ok((loss / n, grads))
}

/// One Adam step on the TD loss; returns the loss before the step.
pub fn td_update(
    net: &mut QNetwork,
    target_net: &QNetwork,
    batch: &[Transition],
    config: &TrainConfig,
    state: &mut AdamState,
) -> Result<f64> {
    let (loss, grads) = td_loss_and_grad(net, target_net, batch, config.gamma)?;
    adam_step(net.params_mut(), &grads, state, config.learning_rate)?;
    Ok(loss)
}
