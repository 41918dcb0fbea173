use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{EnvKind, Environment, Policy};
use crate::{par, Result};

/// Full trace of one episode. `states[t]` is the state the policy saw
/// before choosing `actions[t]`, which earned `rewards[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub total_reward: f64,
    pub success: bool,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary { total_reward: self.total_reward, success: self.success, steps: self.len() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub total_reward: f64,
    pub success: bool,
    pub steps: usize,
}

/// Resets `env` with `seed` and runs `policy` until the episode ends or
/// `max_steps` actions were taken.
pub fn rollout(env: &mut dyn Environment, policy: &dyn Policy, seed: u64, max_steps: Option<usize>) -> Result<Episode> {
    let limit = max_steps.unwrap_or(usize::MAX);
    let mut ep =
        Episode { states: Vec::new(), actions: Vec::new(), rewards: Vec::new(), total_reward: 0.0, success: false };
    if limit == 0 {
        return Ok(ep);
    }
    let mut state = env.reset(seed);
    while ep.len() < limit {
        let action = policy.act(&state)?;
        let step = env.step(action)?;
        ep.states.push(std::mem::replace(&mut state, step.state));
        ep.actions.push(action);
        ep.rewards.push(step.reward);
        ep.total_reward += step.reward;
        if step.done {
            ep.success = step.success;
            break;
        }
    }
    Ok(ep)
}

/// Like [`rollout`] without keeping the trace.
pub fn rollout_summary(env: &mut dyn Environment, policy: &dyn Policy, seed: u64) -> Result<EpisodeSummary> {
    let mut state = env.reset(seed);
    let mut out = EpisodeSummary { total_reward: 0.0, success: false, steps: 0 };
    loop {
        let step = env.step(policy.act(&state)?)?;
        out.steps += 1;
        out.total_reward += step.reward;
        if step.done {
            out.success = step.success;
            return Ok(out);
        }
        state = step.state;
    }
}

/// Runs one episode per seed, in parallel when enabled. Output order
/// follows `seeds`.
pub fn rollout_batch(kind: EnvKind, policy: &dyn Policy, seeds: &[u64]) -> Result<Vec<EpisodeSummary>> {
    par::map_slice(seeds, |&seed| {
        let mut env = kind.build();
        rollout_summary(env.as_mut(), policy, seed)
    })
    .into_iter()
    .collect()
}

/// Writes `t,<state names>,action,reward` rows.
pub fn write_trace_csv<W: Write>(ep: &Episode, state_names: &[&str], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(state_names.iter().map(|s| s.to_string()));
    header.push("action".into());
    header.push("reward".into());
    w.write_record(&header)?;
    for (t, ((s, a), r)) in ep.states.iter().zip(&ep.actions).zip(&ep.rewards).enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(s.iter().map(|v| v.to_string()));
        row.push(a.to_string());
        row.push(r.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
