//! Discrete-action control environments, policies and episode rollout.

mod carfollowing;
mod cartpole;
mod mountaincar;
mod oracle;
mod rollout;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use carfollowing::CarFollowing;
pub use cartpole::CartPole;
pub use mountaincar::MountainCar;
pub use oracle::ScriptedOracle;
pub use rollout::{rollout, rollout_batch, rollout_summary, write_trace_csv, Episode, EpisodeSummary};

use crate::{Nldt, NldtError, Result};

/// Outcome of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
}

/// A discrete-action plant. Instances are single-owner state machines;
/// `reset(seed)` fully determines every random draw of the episode.
pub trait Environment: Send {
    fn kind(&self) -> EnvKind;
    fn state_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn max_steps(&self) -> usize;
    fn state_names(&self) -> &'static [&'static str];
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    /// Starts an episode from an explicit state; `seed` drives any
    /// remaining randomness.
    fn reset_to(&mut self, state: &[f64], seed: u64) -> Result<()>;
    fn state(&self) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<Step>;
}

/// Maps a state to an action id.
pub trait Policy: Sync {
    fn act(&self, state: &[f64]) -> Result<usize>;
}

impl Policy for Nldt {
    fn act(&self, state: &[f64]) -> Result<usize> {
        self.predict(state)
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn act(&self, state: &[f64]) -> Result<usize> {
        (**self).act(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    CartPole,
    MountainCar,
    CarFollowing,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::CartPole, EnvKind::MountainCar, EnvKind::CarFollowing];

    pub fn build(self) -> Box<dyn Environment> {
        match self {
            EnvKind::CartPole => Box::new(CartPole::default()),
            EnvKind::MountainCar => Box::new(MountainCar::default()),
            EnvKind::CarFollowing => Box::new(CarFollowing::default()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::CartPole => "cartpole",
            EnvKind::MountainCar => "mountaincar",
            EnvKind::CarFollowing => "carfollowing",
        }
    }

    pub fn n_actions(self) -> usize {
        match self {
            EnvKind::MountainCar => 3,
            EnvKind::CartPole | EnvKind::CarFollowing => 2,
        }
    }

    pub fn state_dim(self) -> usize {
        match self {
            EnvKind::CartPole => 4,
            EnvKind::MountainCar => 2,
            EnvKind::CarFollowing => 3,
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = NldtError;

    fn from_str(s: &str) -> Result<Self> {
        EnvKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| NldtError::Environment(format!("unknown environment {s:?}")))
    }
}

pub(crate) fn check_action(action: usize, n_actions: usize) -> Result<()> {
    if action >= n_actions {
        return Err(NldtError::InvalidAction { action, n_actions });
    }
    Ok(())
}

pub(crate) fn check_state(state: &[f64], dim: usize) -> Result<()> {
    if state.len() != dim {
        return Err(NldtError::DimensionMismatch { expected: dim, got: state.len() });
    }
    if state.iter().any(|v| !v.is_finite()) {
        return Err(NldtError::Environment("state must be finite".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names() {
        for k in EnvKind::ALL {
            assert_eq!(k.name().parse::<EnvKind>().unwrap(), k);
            let env = k.build();
            assert_eq!(env.kind(), k);
            assert_eq!(env.n_actions(), k.n_actions());
            assert_eq!(env.state_dim(), k.state_dim());
            assert_eq!(env.state_names().len(), k.state_dim());
        }
        assert!("lunarlander".parse::<EnvKind>().is_err());
    }
}
