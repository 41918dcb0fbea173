use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_action, check_state, EnvKind, Environment, Step};
use crate::{NldtError, Result};

const DT: f64 = 0.1;
const SAFE_GAP: f64 = 30.0;
const LOST_GAP: f64 = 150.0;
const ACCEL: f64 = 1.0;

/// Rear car following a randomly accelerating front car.
///
/// State `(d_rel, v_rel, a_prev)` with `d_rel = x_front - x_rear`,
/// `v_rel = v_front - v_rear` and `a_prev` the rear car's last
/// acceleration. Action 0 accelerates at +1 m/s^2, action 1 brakes at
/// -1 m/s^2. Neither car reverses.
#[derive(Debug, Clone)]
pub struct CarFollowing {
    pub max_steps: usize,
    rng: ChaCha8Rng,
    gap: f64,
    v_front: f64,
    v_rear: f64,
    a_prev: f64,
    t: usize,
    done: bool,
}

impl Default for CarFollowing {
    fn default() -> Self {
        Self {
            max_steps: 1000,
            rng: ChaCha8Rng::seed_from_u64(0),
            gap: SAFE_GAP,
            v_front: 0.0,
            v_rear: 0.0,
            a_prev: -ACCEL,
            t: 0,
            done: false,
        }
    }
}

impl CarFollowing {
    /// Triangular reward peaking at the safe gap, zero at 0 m and 60 m.
    pub fn reward(gap: f64) -> f64 {
        (1.0 - (gap - SAFE_GAP).abs() / SAFE_GAP).max(0.0)
    }
}

impl Environment for CarFollowing {
    fn kind(&self) -> EnvKind {
        EnvKind::CarFollowing
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["d_rel", "v_rel", "a_prev"]
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.gap = self.rng.random_range(20.0..=40.0);
        self.v_front = 0.0;
        self.v_rear = 0.0;
        self.a_prev = -ACCEL;
        self.t = 0;
        self.done = false;
        self.state()
    }

    fn reset_to(&mut self, state: &[f64], seed: u64) -> Result<()> {
        check_state(state, 3)?;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.gap = state[0];
        self.v_front = state[1].max(0.0);
        self.v_rear = (-state[1]).max(0.0);
        self.a_prev = state[2];
        self.t = 0;
        self.done = false;
        Ok(())
    }

    fn state(&self) -> Vec<f64> {
        vec![self.gap, self.v_front - self.v_rear, self.a_prev]
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        if self.done {
            return Err(NldtError::StepAfterDone);
        }
        check_action(action, 2)?;
        let a_front: f64 = self.rng.random_range(-ACCEL..=ACCEL);
        let a_rear = if action == 0 { ACCEL } else { -ACCEL };
        self.v_front = (self.v_front + a_front * DT).max(0.0);
        self.v_rear = (self.v_rear + a_rear * DT).max(0.0);
        self.gap += (self.v_front - self.v_rear) * DT;
        self.a_prev = a_rear;
        self.t += 1;

        let crashed = self.gap <= 0.0;
        let lost = self.gap > LOST_GAP;
        self.done = crashed || lost || self.t >= self.max_steps;
        Ok(Step {
            state: self.state(),
            reward: Self::reward(self.gap),
            done: self.done,
            success: self.done && !crashed && !lost,
        })
    }
}
