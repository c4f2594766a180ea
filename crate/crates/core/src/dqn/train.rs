//! Training and greedy evaluation loops, and best-position extraction.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{act, td_update, AdamState, QNetwork, ReplayBuffer, Transition};
use crate::env::{Action, Environment};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scenario::Scenario;

/// Network weights after training; read-only from here on.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedPolicy {
    pub net: QNetwork,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    /// 1-based step index within the episode.
    pub step: usize,
    pub position: Vec3,
    pub action: Action,
    pub reward: f64,
    pub nlos: usize,
    pub in_sp: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    pub episode: usize,
    pub start: Vec3,
    pub steps: Vec<StepRecord>,
}

impl EpisodeTrace {
    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    /// First step carrying the episode's maximum reward.
    pub fn best(&self) -> Option<&StepRecord> {
        self.steps
            .iter()
            .fold(None, |best: Option<&StepRecord>, s| match best {
                Some(b) if b.reward >= s.reward => Some(b),
                _ => Some(s),
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingRun {
    pub policy: TrainedPolicy,
    pub episodes: Vec<EpisodeTrace>,
    /// Number of gradient updates applied.
    pub updates: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestPosition {
    pub position: Vec3,
    pub reward: f64,
    /// `(trace index, step)` of the chosen record; `None` for the fallback start.
    pub source: Option<(usize, usize)>,
    /// Set when no step earned a positive reward and the start was returned.
    pub degenerate: bool,
}

/// Trains a fresh agent on `scenario` with all randomness drawn from `seed`.
pub fn train(scenario: &Scenario, seed: u64) -> Result<TrainingRun> {
    let config = &scenario.train;
    let mut env = Environment::new(scenario)?;
    if env.feasible_point_count() == 0 {
        return Err(Error::Infeasible);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = QNetwork::glorot(&config.layer_dims(), &mut rng)?;
    let mut target = net.clone();
    let mut adam = AdamState::new(net.num_params());
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let schedule = config.schedule(env.steps_per_episode());
    let warmup = scenario.episode.warmup_steps();
    let mut batch = Vec::with_capacity(config.batch_size);
    let mut global_step = 0usize;
    let mut updates = 0usize;
    let mut episodes = Vec::with_capacity(config.episodes);

    for episode in 0..config.episodes {
        let mut obs = env.reset(seed)?;
        let mut trace = EpisodeTrace {
            episode,
            start: env.position(),
            steps: Vec::with_capacity(env.steps_per_episode()),
        };
        let mut t = 0usize;
        loop {
            let epsilon = schedule.value(global_step);
            let action = act(&net, &obs, epsilon, &mut rng);
            let out = env.step(action)?;
            buffer.push(Transition {
                obs,
                action: action.index(),
                reward: out.reward,
                next_obs: out.observation,
                done: out.done,
            });
            t += 1;
            global_step += 1;
            trace.steps.push(StepRecord {
                step: t,
                position: out.info.position,
                action,
                reward: out.reward,
                nlos: out.info.nlos,
                in_sp: out.info.in_sp,
            });
            if t > warmup && buffer.len() >= config.batch_size {
                buffer.sample(config.batch_size, &mut rng, &mut batch);
                td_update(&mut net, &target, &batch, config, &mut adam)?;
                updates += 1;
            }
            if global_step % config.target_sync_steps == 0 {
                target = net.clone();
            }
            obs = out.observation;
            if out.done {
                break;
            }
        }
        log::debug!(
            "seed {seed} episode {episode}: best reward {:.3}",
            trace.best().map_or(0.0, |s| s.reward)
        );
        episodes.push(trace);
    }
    Ok(TrainingRun {
        policy: TrainedPolicy { net },
        episodes,
        updates,
    })
}

/// One greedy episode; the policy is only read.
pub fn evaluate(policy: &TrainedPolicy, scenario: &Scenario) -> Result<EpisodeTrace> {
    let mut env = Environment::new(scenario)?;
    let mut obs = env.reset(0)?;
    // Never consulted at epsilon 0 beyond the exploration draw.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut trace = EpisodeTrace {
        episode: 0,
        start: env.position(),
        steps: Vec::with_capacity(env.steps_per_episode()),
    };
    loop {
        let action = act(&policy.net, &obs, 0.0, &mut rng);
        let out = env.step(action)?;
        trace.steps.push(StepRecord {
            step: env.step_count(),
            position: out.info.position,
            action,
            reward: out.reward,
            nlos: out.info.nlos,
            in_sp: out.info.in_sp,
        });
        obs = out.observation;
        if out.done {
            break;
        }
    }
    Ok(trace)
}

/// Position of the highest recorded reward over `traces`.
///
/// Ties go to the higher `throughput`, then to the earliest record. When no
/// step earned a positive reward the first trace's start is returned with
/// `degenerate` set.
pub fn extract_best_position<F>(traces: &[EpisodeTrace], mut throughput: F) -> Result<BestPosition>
where
    F: FnMut(&Vec3) -> f64,
{
    let first = traces.first().ok_or(Error::EmptyTrace)?;
    let max_reward = traces
        .iter()
        .flat_map(|t| t.steps.iter())
        .map(|s| s.reward)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
        .ok_or(Error::EmptyTrace)?;
    if max_reward <= 0.0 {
        log::warn!("no step earned a positive reward; falling back to the start position");
        return Ok(BestPosition {
            position: first.start,
            reward: 0.0,
            source: None,
            degenerate: true,
        });
    }
    let mut cache: HashMap<[u64; 3], f64> = HashMap::new();
    let mut best: Option<(f64, BestPosition)> = None;
    for (ti, trace) in traces.iter().enumerate() {
        for s in trace.steps.iter().filter(|s| s.reward == max_reward) {
            let p = s.position;
            let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
            let tp = *cache.entry(key).or_insert_with(|| throughput(&p));
            if best.as_ref().is_none_or(|(b, _)| tp > *b) {
                best = Some((
                    tp,
                    BestPosition {
                        position: p,
                        reward: s.reward,
                        source: Some((ti, s.step)),
                        degenerate: false,
                    },
                ));
            }
        }
    }
    Ok(best.expect("a record attains the maximum").1)
}
