//! Adam with bias correction.
//!
//! Weight decay is a config field defaulting to zero, which makes the
//! default update plain Adam.

use crate::error::Result;

use super::params::ModelParams;

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// First/second moment accumulators mirroring the parameter shapes plus
/// the step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    m: ModelParams,
    v: ModelParams,
}

impl OptimizerState {
    pub fn new(config: AdamConfig, params: &ModelParams) -> Self {
        Self {
            config,
            step: 0,
            m: ModelParams::zeros(params.arch),
            v: ModelParams::zeros(params.arch),
        }
    }

    pub fn first_moment(&self) -> &ModelParams {
        &self.m
    }

    pub fn second_moment(&self) -> &ModelParams {
        &self.v
    }
}

/// One bias-corrected Adam update. Increments the step counter and
/// mutates `params` in place; rejects mismatched shapes.
pub fn adam_step(
    state: &mut OptimizerState,
    params: &mut ModelParams,
    grads: &ModelParams,
) -> Result<()> {
    params.check_shape(grads)?;
    params.check_shape(&state.m)?;
    let c = state.config;
    state.step += 1;
    let t = state.step as i32;
    state.m.zip_apply(grads, |m, g| *m = c.beta1 * *m + (1.0 - c.beta1) * g);
    state.v.zip_apply(grads, |v, g| *v = c.beta2 * *v + (1.0 - c.beta2) * g * g);
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);

    let m = &state.m;
    let v = &state.v;
    let n = params.len();
    for i in 0..n {
        let m_hat = m.entry(i) / bc1;
        let v_hat = v.entry(i) / bc2;
        let p = params.entry_mut(i);
        let mut update = m_hat / (v_hat.sqrt() + c.epsilon);
        if c.weight_decay != 0.0 {
            update += c.weight_decay * *p;
        }
        *p -= c.learning_rate * update;
    }
    Ok(())
}
