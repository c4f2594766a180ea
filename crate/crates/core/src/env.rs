//! Episodic positioning environment: the UAV moves one lattice step per
//! decision slot and is rewarded by the fraction of users it sees while inside
//! the feasible subspace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{feasible_grid_points, FeasibleRegion};
use crate::geometry::{count_los, PositioningZone, Vec3, Venue};
use crate::scenario::Scenario;

pub const ACTION_COUNT: usize = 7;
pub const OBSERVATION_DIM: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    Stay = 0,
    PosX = 1,
    NegX = 2,
    PosY = 3,
    NegY = 4,
    PosZ = 5,
    NegZ = 6,
}

impl Action {
    pub const ALL: [Action; ACTION_COUNT] = [
        Action::Stay,
        Action::PosX,
        Action::NegX,
        Action::PosY,
        Action::NegY,
        Action::PosZ,
        Action::NegZ,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    /// Unit lattice displacement.
    pub fn direction(self) -> Vec3 {
        match self {
            Action::Stay => Vec3::new(0.0, 0.0, 0.0),
            Action::PosX => Vec3::new(1.0, 0.0, 0.0),
            Action::NegX => Vec3::new(-1.0, 0.0, 0.0),
            Action::PosY => Vec3::new(0.0, 1.0, 0.0),
            Action::NegY => Vec3::new(0.0, -1.0, 0.0),
            Action::PosZ => Vec3::new(0.0, 0.0, 1.0),
            Action::NegZ => Vec3::new(0.0, 0.0, -1.0),
        }
    }
}

/// `[x̂, ŷ, ẑ, nlos_norm, in_sp]`: UAV position scaled to [-1, 1] over the
/// zone, fraction of users in line of sight, and feasible-subspace membership.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Observation(pub [f64; OBSERVATION_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn nlos_norm(&self) -> f64 {
        self.0[3]
    }

    pub fn in_sp(&self) -> bool {
        self.0[4] > 0.5
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub duration_s: f64,
    pub decision_interval_s: f64,
    pub warmup_s: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            duration_s: 300.0,
            decision_interval_s: 0.1,
            warmup_s: 2.1,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.decision_interval_s.is_finite() && self.decision_interval_s > 0.0) {
            return Err(Error::config("episode.decision_interval_s", "must be positive"));
        }
        if !(self.warmup_s >= 0.0 && self.duration_s > self.warmup_s) {
            return Err(Error::config(
                "episode",
                "requires duration_s > warmup_s >= 0",
            ));
        }
        if self.steps() == 0 {
            return Err(Error::config("episode", "episode holds no decision slot"));
        }
        Ok(())
    }

    /// Decision steps per episode, `floor((duration - warmup) / interval)`.
    pub fn steps(&self) -> usize {
        ((self.duration_s - self.warmup_s) / self.decision_interval_s + 1e-9).floor() as usize
    }

    /// Leading steps of each episode that collect experience without updates.
    pub fn warmup_steps(&self) -> usize {
        (self.warmup_s / self.decision_interval_s).round() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub nlos: usize,
    pub position: Vec3,
    pub in_sp: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

pub struct Environment {
    venue: Venue,
    zone: PositioningZone,
    ue_positions: Vec<Vec3>,
    region: FeasibleRegion,
    feasible_points: usize,
    steps_per_episode: usize,
    position: Vec3,
    step: usize,
    active: bool,
}

impl Environment {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let region = FeasibleRegion::new(&scenario.ues, &scenario.radio, &scenario.mcs_table, scenario.zone)?;
        let feasible_points = feasible_grid_points(&region, &scenario.ues, &scenario.zone)?.len();
        Ok(Environment {
            venue: scenario.venue.clone(),
            zone: scenario.zone,
            ue_positions: scenario.ue_positions(),
            region,
            feasible_points,
            steps_per_episode: scenario.episode.steps(),
            position: scenario.zone.snapped_center(),
            step: 0,
            active: false,
        })
    }

    pub fn zone(&self) -> &PositioningZone {
        &self.zone
    }

    pub fn user_count(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn steps_per_episode(&self) -> usize {
        self.steps_per_episode
    }

    pub fn feasible_point_count(&self) -> usize {
        self.feasible_points
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// Starts an episode with the UAV at the zone centre snapped to the lattice.
    ///
    /// The start is deterministic; `_seed` is accepted for interface symmetry
    /// with stochastic environments.
    pub fn reset(&mut self, _seed: u64) -> Result<Observation> {
        if self.feasible_points == 0 {
            return Err(Error::Infeasible);
        }
        self.position = self.zone.snapped_center();
        self.step = 0;
        self.active = true;
        self.observe()
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if !self.active {
            return Err(Error::EpisodeDone(self.step));
        }
        let candidate = self.position + action.direction() * self.zone.grid_size;
        if self.zone.contains(&candidate) {
            self.position = candidate;
        }
        self.step += 1;
        let done = self.step >= self.steps_per_episode;
        if done {
            self.active = false;
        }
        let (nlos, in_sp) = self.evaluate(&self.position)?;
        Ok(StepOutcome {
            observation: self.observation_for(&self.position, nlos, in_sp),
            reward: self.reward_from(nlos, in_sp),
            done,
            info: StepInfo {
                nlos,
                position: self.position,
                in_sp,
            },
        })
    }

    pub fn observe(&self) -> Result<Observation> {
        let (nlos, in_sp) = self.evaluate(&self.position)?;
        Ok(self.observation_for(&self.position, nlos, in_sp))
    }

    /// `nLoS / N` inside the feasible subspace, 0 elsewhere.
    pub fn reward_at(&self, p: &Vec3) -> Result<f64> {
        let (nlos, in_sp) = self.evaluate(p)?;
        Ok(self.reward_from(nlos, in_sp))
    }

    /// Users in line of sight from `p`, and feasible-subspace membership.
    pub fn evaluate(&self, p: &Vec3) -> Result<(usize, bool)> {
        let in_sp = self.region.contains_unchecked(p, &self.ue_positions);
        let nlos = count_los(*p, &self.ue_positions, &self.venue)?;
        Ok((nlos, in_sp))
    }

    fn reward_from(&self, nlos: usize, in_sp: bool) -> f64 {
        if in_sp {
            nlos as f64 / self.ue_positions.len() as f64
        } else {
            0.0
        }
    }

    fn observation_for(&self, p: &Vec3, nlos: usize, in_sp: bool) -> Observation {
        let [x, y, z] = self.zone.normalize(p);
        Observation([
            x,
            y,
            z,
            nlos as f64 / self.ue_positions.len() as f64,
            if in_sp { 1.0 } else { 0.0 },
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::UserEquipment;
    use crate::geometry::Building;
    
    fn open_scene() -> Scenario {
        Scenario::with_defaults(
            "open",
            Venue::empty(100.0),
            vec![
                UserEquipment::new(0, Vec3::new(-20.0, -20.0, 1.5), 58.5e6, 0),
                UserEquipment::new(1, Vec3::new(20.0, -20.0, 1.5), 58.5e6, 0),
                UserEquipment::new(2, Vec3::new(20.0, 20.0, 1.5), 58.5e6, 0),
                UserEquipment::new(3, Vec3::new(-20.0, 20.0, 1.5), 58.5e6, 0),
            ],
        )
    }

    #[test]
    fn episode_length_and_warmup() {
        let cfg = EpisodeConfig::default();
        assert_eq!(cfg.steps(), 2979);
        assert_eq!(cfg.warmup_steps(), 21);
    }

    #[test]
    fn reset_starts_at_snapped_centre() {
        let mut env = Environment::new(&open_scene()).unwrap();
        let obs = env.reset(1).unwrap();
        assert_eq!(env.position(), Vec3::new(0.0, 0.0, 62.0));
        assert_eq!(obs.0[0], 0.0);
        assert_eq!(obs.0[1], 0.0);
        assert_eq!(env.reset(1).unwrap(), obs);
        assert_eq!(obs.nlos_norm(), 1.0);
        assert!(obs.in_sp());
    }

    #[test]
    fn stay_and_clamp() {
        let mut env = Environment::new(&open_scene()).unwrap();
        env.reset(0).unwrap();
        let out = env.step(Action::Stay).unwrap();
        assert_eq!(out.info.position, Vec3::new(0.0, 0.0, 62.0));
        assert_eq!(out.reward, 1.0);
        for _ in 0..60 {
            env.step(Action::PosX).unwrap();
        }
        assert_eq!(env.position().x, 50.0);
        let out = env.step(Action::PosX).unwrap();
        assert_eq!(out.info.position.x, 50.0);
        assert_eq!(out.observation.0[0], 1.0);
    }

    #[test]
    fn stepping_finished_episode_fails() {
        let mut s = open_scene();
        s.episode = EpisodeConfig {
            duration_s: 0.5,
            decision_interval_s: 0.1,
            warmup_s: 0.0,
        };
        let mut env = Environment::new(&s).unwrap();
        env.reset(0).unwrap();
        for i in 0..5 {
            let out = env.step(Action::NegZ).unwrap();
            assert_eq!(out.done, i == 4);
        }
        assert!(matches!(env.step(Action::Stay), Err(Error::EpisodeDone(5))));
    }

    #[test]
    fn reward_law() {
        let mut s = open_scene();
        s.venue = Venue::new(
            100.0,
            vec![Building::from_bounds(Vec3::new(-19.0, -23.0, 0.0), Vec3::new(-18.5, -17.0, 19.0))],
        )
        .unwrap();
        let env = Environment::new(&s).unwrap();
        // A thin wall east of user 0 hides it from a low UAV.
        let p = Vec3::new(0.0, -20.0, 25.0);
        assert_eq!(env.evaluate(&p).unwrap(), (3, true));
        assert_eq!(env.reward_at(&p).unwrap(), 0.75);
        assert_eq!(env.reward_at(&Vec3::new(0.0, 0.0, 200.0)).unwrap(), 0.0);
    }

    #[test]
    fn observation_corners() {
        let mut s = open_scene();
        let env = Environment::new(&s).unwrap();
        let min = s.zone.min_corner;
        let (nlos, in_sp) = env.evaluate(&min).unwrap();
        let obs = env.observation_for(&min, nlos, in_sp);
        assert_eq!(&obs.0[..3], &[-1.0, -1.0, -1.0]);
        s.zone.max_corner = Vec3::new(50.0, 50.0, 100.0);
        let max = s.zone.max_corner;
        let obs = env.observation_for(&max, 4, true);
        assert_eq!(obs.0, [1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn infeasible_reset_reports_error() {
        let mut s = open_scene();
        s.ues[0].position = Vec3::new(-50.0, -50.0, 1.5);
        s.ues[2].position = Vec3::new(50.0, 50.0, 1.5);
        s.ues[0].demanded_mcs = 8;
        s.ues[0].demand_bps = 1e6;
        s.ues[2].demanded_mcs = 8;
        s.ues[2].demand_bps = 1e6;
        let mut env = Environment::new(&s).unwrap();
        assert!(matches!(env.reset(0), Err(Error::Infeasible)));
    }
}
