use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_action, check_state, EnvKind, Environment, Step};
use crate::{NldtError, Result};

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const HALF_LENGTH: f64 = 0.5;
const DT: f64 = 0.02;
const X_LIMIT: f64 = 4.8;
const THETA_LIMIT_DEG: f64 = 24.0;
const INIT_SPREAD: f64 = 0.05;

/// Cart-pole with Euler integration. State `(x, v, theta, omega)`;
/// action 0 pushes left, action 1 pushes right.
#[derive(Debug, Clone)]
pub struct CartPole {
    pub force_mag: f64,
    pub max_steps: usize,
    state: [f64; 4],
    t: usize,
    done: bool,
}

impl Default for CartPole {
    fn default() -> Self {
        Self { force_mag: 10.0, max_steps: 200, state: [0.0; 4], t: 0, done: false }
    }
}

impl CartPole {
    /// A variant where both actions apply `force_mag` newtons.
    pub fn with_force(force_mag: f64) -> Self {
        Self { force_mag, ..Self::default() }
    }

    pub fn theta_limit() -> f64 {
        THETA_LIMIT_DEG.to_radians()
    }
}

impl Environment for CartPole {
    fn kind(&self) -> EnvKind {
        EnvKind::CartPole
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["x", "v", "theta", "omega"]
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut self.state {
            *s = rng.random_range(-INIT_SPREAD..=INIT_SPREAD);
        }
        self.t = 0;
        self.done = false;
        self.state.to_vec()
    }

    fn reset_to(&mut self, state: &[f64], _seed: u64) -> Result<()> {
        check_state(state, 4)?;
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
        check_action(action, 2)?;
        let [x, v, theta, omega] = self.state;
        let force = if action == 1 { self.force_mag } else { -self.force_mag };
        let total_mass = MASS_CART + MASS_POLE;
        let pole_ml = MASS_POLE * HALF_LENGTH;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pole_ml * omega * omega * sin) / total_mass;
        let theta_acc = (GRAVITY * sin - cos * temp) / (HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / total_mass));
        let x_acc = temp - pole_ml * theta_acc * cos / total_mass;

        self.state = [x + DT * v, v + DT * x_acc, theta + DT * omega, omega + DT * theta_acc];
        self.t += 1;

        let fell = self.state[2].abs() > Self::theta_limit() || self.state[0].abs() > X_LIMIT;
        let timeout = self.t >= self.max_steps;
        self.done = fell || timeout;
        Ok(Step { state: self.state.to_vec(), reward: 1.0, done: self.done, success: timeout })
    }
}
