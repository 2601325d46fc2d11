use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::tensor::{Gradients, ParamStore};

/// Adam with bias correction. Frozen parameters and parameters without a
/// gradient are left untouched.
#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store
            .ids()
            .map(|id| vec![0.0; store.get(id).len()])
            .collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let ids: Vec<_> = store.ids().collect();
        for id in ids {
            if store.is_frozen(id) {
                continue;
            }
            let Some(g) = grads.get(id) else { continue };
            let (m, v) = (&mut self.m[id.index()], &mut self.v[id.index()]);
            for (k, p) in store.get_mut(id).data_mut().iter_mut().enumerate() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                *p -= lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

/// Cosine annealing with warm restarts, evaluated at fractional epochs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarmRestarts {
    pub peak: f64,
    /// Floor as a fraction of `peak`.
    pub floor_ratio: f64,
    /// First cycle length in epochs.
    pub period: f64,
    /// Cycle length multiplier.
    pub mult: f64,
}

impl WarmRestarts {
    pub fn lr_at(&self, epoch: f64) -> f64 {
        let (mut start, mut len) = (0.0, self.period.max(f64::MIN_POSITIVE));
        while epoch >= start + len {
            start += len;
            len *= self.mult.max(1.0);
        }
        let floor = self.peak * self.floor_ratio;
        floor + (self.peak - floor) * (1.0 + (PI * (epoch - start) / len).cos()) / 2.0
    }
}
