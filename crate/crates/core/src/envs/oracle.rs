use serde::{Deserialize, Serialize};

use super::{EnvKind, Policy};
use crate::{NldtError, Result};

/// Hand-written controllers standing in for trained black-box policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedOracle {
    /// Push toward the side the pole is falling: `theta + 0.5 omega > 0`.
    CartPolePd,
    /// Accelerate along the current velocity.
    MountainCarEnergy,
    /// Accelerate when the gap is large or opening: `(d - 30) + 5 v_rel > 0`.
    CarFollowingGap,
}

impl ScriptedOracle {
    pub fn for_env(kind: EnvKind) -> Self {
        match kind {
            EnvKind::CartPole => ScriptedOracle::CartPolePd,
            EnvKind::MountainCar => ScriptedOracle::MountainCarEnergy,
            EnvKind::CarFollowing => ScriptedOracle::CarFollowingGap,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScriptedOracle::CartPolePd => "cartpole_pd",
            ScriptedOracle::MountainCarEnergy => "mountaincar_energy",
            ScriptedOracle::CarFollowingGap => "carfollowing_gap",
        }
    }

    fn dim(self) -> usize {
        match self {
            ScriptedOracle::CartPolePd => 4,
            ScriptedOracle::MountainCarEnergy => 2,
            ScriptedOracle::CarFollowingGap => 3,
        }
    }
}

impl Policy for ScriptedOracle {
    fn act(&self, s: &[f64]) -> Result<usize> {
        if s.len() != self.dim() {
            return Err(NldtError::DimensionMismatch { expected: self.dim(), got: s.len() });
        }
        Ok(match self {
            ScriptedOracle::CartPolePd => usize::from(s[2] + 0.5 * s[3] > 0.0),
            ScriptedOracle::MountainCarEnergy => {
                if s[1] >= 0.0 {
                    2
                } else {
                    0
                }
            }
            ScriptedOracle::CarFollowingGap => usize::from((s[0] - 30.0) + 5.0 * s[1] <= 0.0),
        })
    }
}
