//! Placement of a flying Wi-Fi access point over an urban venue: geometry and
//! line-of-sight, radio propagation, feasibility, a reinforcement-learning
//! environment with a from-scratch DQN agent, an exhaustive oracle and a
//! surrogate network model.

pub mod distribution;
pub mod dqn;
pub mod env;
pub mod error;
pub mod feasibility;
pub mod geometry;
pub mod mcs;
pub mod network_model;
pub mod oracle;
pub mod pipeline;
pub mod propagation;
pub mod scenario;

pub use error::{Error, Result};
