//! Adam optimizer over a [`ParamStore`].

use super::params::ParamStore;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Adaptive first-order optimizer; the learning rate is supplied per step so
/// schedules stay in the training loop.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub state: IndexMap<String, AdamState>,
}

impl Default for Adam {
    fn default() -> Self {
        Self::new()
    }
}

impl Adam {
    pub fn new() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            state: IndexMap::new(),
        }
    }

    /// One update over every trainable parameter, in registration order.
    pub fn step(&mut self, ps: &mut ParamStore, lr: f64) {
        self.t += 1;
        let t = self.t as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        for (name, p) in ps.iter_mut() {
            if !p.trainable {
                continue;
            }
            let st = self
                .state
                .entry(name.clone())
                .or_insert_with(|| AdamState {
                    m: vec![0.0; p.value.len()],
                    v: vec![0.0; p.value.len()],
                });
            for i in 0..p.value.len() {
                let g = p.grad[i];
                st.m[i] = self.beta1 * st.m[i] + (1.0 - self.beta1) * g;
                st.v[i] = self.beta2 * st.v[i] + (1.0 - self.beta2) * g * g;
                let mhat = st.m[i] / bc1;
                let vhat = st.v[i] / bc2;
                p.value[i] -= lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}
