//! UAV trajectory training on urban radio maps, with cross-environment
//! transfer of the trained model and deterministic training-cost accounting.
//!
//! The pipeline: synthesize or ingest a per-cell SINR grid at UAV altitude
//! ([`propagation`], [`radiomap`]), convert it into an outage map, plan
//! trajectories over it as a gridworld MDP ([`mdp`]), learn with a dueling
//! double-DQN using multi-step returns ([`agent`]), and chain training
//! across environments while recording time/energy efficiency ratios
//! ([`transfer`]).
//!
//! All numeric code is generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the aliases below fix `f64`, which the CLI and the
//! file formats use.

pub mod agent;
pub mod error;
pub mod geo;
pub mod mdp;
pub mod propagation;
pub mod radiomap;
pub mod scalar;
pub mod transfer;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point2_64 = geo::Point2<f64>;
pub type Rect64 = geo::Rect<f64>;
pub type ChannelParams64 = propagation::ChannelParams<f64>;
pub type AntennaPattern64 = propagation::AntennaPattern<f64>;
pub type EnvironmentSpec64 = propagation::EnvironmentSpec<f64>;
pub type GenConfig64 = propagation::GenConfig<f64>;
pub type RawGrid64 = radiomap::RawGrid<f64>;
pub type SinrGrid64 = radiomap::SinrGrid<f64>;
pub type OutageMap64 = radiomap::OutageMap<f64>;
pub type MissionSpec64 = mdp::MissionSpec<f64>;
pub type UserLink64 = mdp::UserLink<f64>;
pub type DuelingNet64 = agent::DuelingNet<f64>;
pub type DqnAgent64 = agent::DqnAgent<f64>;
pub type ExplorationSchedule64 = agent::ExplorationSchedule<f64>;
pub type EnvTask64 = transfer::EnvTask<f64>;
