use crate::layers::Param;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

/// First and second moment estimates for one parameter array.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::ShapeMismatch {
            op: "adam_step",
            expected: vec![params.len()],
            found: vec![grads.len()],
        });
    }
    if state.t == 0 && state.m.is_empty() {
        state.m = vec![0.0; params.len()];
        state.v = vec![0.0; params.len()];
    }
    if state.m.len() != params.len() {
        return Err(Error::ShapeMismatch {
            op: "adam_step state",
            expected: vec![params.len()],
            found: vec![state.m.len()],
        });
    }
    state.t += 1;
    let c1 = 1.0 - cfg.beta1.powf(state.t as f64);
    let c2 = 1.0 - cfg.beta2.powf(state.t as f64);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

/// Adam over a fixed, ordered list of parameters.
#[derive(Clone, Debug, Default)]
pub struct Adam {
    pub config: AdamConfig,
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            states: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.states.first().map_or(0, |s| s.t)
    }

    /// Apply each parameter's accumulated gradient. The parameter list must
    /// have the same order and shapes on every call.
    pub fn step<'a>(&mut self, params: impl IntoIterator<Item = &'a mut Param>) -> Result<()> {
        let params: Vec<&mut Param> = params.into_iter().collect();
        if self.states.is_empty() {
            self.states = vec![AdamState::default(); params.len()];
        }
        if self.states.len() != params.len() {
            return Err(Error::InvalidArgument(format!(
                "optimizer tracks {} parameters, got {}",
                self.states.len(),
                params.len()
            )));
        }
        for (p, state) in params.into_iter().zip(&mut self.states) {
            let Param { value, grad } = p;
            adam_step(value.data_mut(), grad.data(), state, &self.config)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![1.0, -2.0, 0.5];
        let mut s = AdamState::default();
        for _ in 0..10 {
            adam_step(&mut p, &[0.0; 3], &mut s, &AdamConfig::default()).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn constant_gradient_moves_by_learning_rate() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.0, 0.0];
        let mut s = AdamState::default();
        let mut last = p.clone();
        for step in 0..2000 {
            adam_step(&mut p, &[3.0, -0.01], &mut s, &cfg).unwrap();
            let delta: Vec<f64> = p.iter().zip(&last).map(|(a, b)| a - b).collect();
            if step == 0 || step > 1000 {
                assert!((delta[0] + cfg.lr).abs() < 1e-8 * cfg.lr.max(1.0) + 1e-9);
                assert!((delta[1] - cfg.lr).abs() < 1e-6 * cfg.lr + 1e-9);
            }
            last = p.clone();
        }
    }

    #[test]
    fn identical_inputs_give_identical_updates() {
        let run = || {
            let mut p = vec![0.3, -0.7];
            let mut s = AdamState::default();
            for k in 0..50 {
                adam_step(&mut p, &[k as f64 * 0.1, -1.0], &mut s, &AdamConfig::default()).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn mismatched_lengths_error() {
        let mut s = AdamState::default();
        assert!(adam_step(&mut [0.0, 1.0], &[1.0], &mut s, &AdamConfig::default()).is_err());
    }
}
