use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_action, check_state, EnvKind, Environment, Step};
use crate::{NldtError, Result};

const MIN_X: f64 = -1.2;
const MAX_X: f64 = 0.6;
const MAX_SPEED: f64 = 0.07;
const GOAL_X: f64 = 0.5;
const POWER: f64 = 0.001;
const GRAVITY: f64 = 0.0025;

/// Under-powered car in a valley. State `(x, v)`; actions 0 = push left,
/// 1 = coast, 2 = push right.
#[derive(Debug, Clone)]
pub struct MountainCar {
    pub max_steps: usize,
    state: [f64; 2],
    t: usize,
    done: bool,
}

impl Default for MountainCar {
    fn default() -> Self {
        Self { max_steps: 200, state: [-0.5, 0.0], t: 0, done: false }
    }
}

impl Environment for MountainCar {
    fn kind(&self) -> EnvKind {
        EnvKind::MountainCar
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn n_actions(&self) -> usize {
        3
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["x", "v"]
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = [rng.random_range(-0.6..=-0.4), 0.0];
        self.t = 0;
        self.done = false;
        self.state.to_vec()
    }

    fn reset_to(&mut self, state: &[f64], _seed: u64) -> Result<()> {
        check_state(state, 2)?;
        self.state.copy_from_slice(state);
        self.t = 0;
        self.done = false;
        Ok(())
    }

    fn state(&self) -> Vec<f64> {
        self.state.to_vec()
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        if self.done {
            return Err(NldtError::StepAfterDone);
        }
        check_action(action, 3)?;
        let [x, v] = self.state;
        let mut v = (v + POWER * (action as f64 - 1.0) - GRAVITY * (3.0 * x).cos()).clamp(-MAX_SPEED, MAX_SPEED);
        let x = (x + v).clamp(MIN_X, MAX_X);
        if x == MIN_X && v < 0.0 {
            v = 0.0;
        }
        self.state = [x, v];
        self.t += 1;
        let success = x >= GOAL_X && v >= 0.0;
        self.done = success || self.t >= self.max_steps;
        Ok(Step { state: self.state.to_vec(), reward: if success { 0.0 } else { -1.0 }, done: self.done, success })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goal_state_succeeds_on_any_action() {
        for a in 0..3 {
            let mut env = MountainCar::default();
            env.reset_to(&[0.5, 0.01], 0).unwrap();
            let s = env.step(a).unwrap();
            assert!(s.done && s.success);
            assert_eq!(s.reward, 0.0);
        }
    }

    #[test]
    fn coasting_from_trough_never_arrives() {
        let mut env = MountainCar::default();
        env.reset(3);
        let mut total = 0.0;
        loop {
            let s = env.step(1).unwrap();
            total += s.reward;
            if s.done {
                assert!(!s.success);
                break;
            }
        }
        assert_eq!(total, -200.0);
    }

    #[test]
    fn coasting_where_slope_vanishes_is_a_fixed_point() {
        let x0 = -std::f64::consts::FRAC_PI_6;
        let mut env = MountainCar::default();
        env.reset_to(&[x0, 0.0], 0).unwrap();
        for _ in 0..20 {
            let s = env.step(1).unwrap();
            assert!((s.state[0] - x0).abs() < 1e-12);
            assert!(s.state[1].abs() < 1e-15);
        }
    }

    #[test]
    fn left_wall_stops_the_car() {
        let mut env = MountainCar::default();
        env.reset_to(&[-1.19, -0.05], 0).unwrap();
        let s = env.step(0).unwrap();
        assert_eq!(s.state, vec![MIN_X, 0.0]);
    }

    #[test]
    fn reset_samples_the_trough() {
        let mut env = MountainCar::default();
        for seed in 0..50 {
            let s = env.reset(seed);
            assert!((-0.6..=-0.4).contains(&s[0]));
            assert_eq!(s[1], 0.0);
        }
    }
}
