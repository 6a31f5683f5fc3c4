use serde::{Deserialize, Serialize};

use super::{Gradients, ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction. Parameters marked non-trainable are never
/// touched.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Option<Tensor>>,
    v: Vec<Option<Tensor>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) {
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        if self.m.len() < store.len() {
            self.m.resize(store.len(), None);
            self.v.resize(store.len(), None);
        }
        for (id, g) in grads.iter() {
            if !store.param(id).trainable {
                continue;
            }
            let g = g.to_dense();
            let (rows, cols) = g.shape();
            let m = self.m[id.0].get_or_insert_with(|| Tensor::zeros(rows, cols));
            let v = self.v[id.0].get_or_insert_with(|| Tensor::zeros(rows, cols));
            let w = store.value_mut(id);
            for (((w, m), v), g) in w
                .data_mut()
                .iter_mut()
                .zip(m.data_mut())
                .zip(v.data_mut())
                .zip(g.data())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Graph;

    fn square_grad(store: &ParamStore, w: crate::autodiff::ParamId) -> Gradients {
        let mut g = Graph::new(store);
        let a = g.param(w);
        let sq = g.mul(a, a).unwrap();
        let loss = g.sum_all(sq);
        g.backward(loss).unwrap()
    }

    #[test]
    fn one_step_descends() {
        let mut store = ParamStore::new(0);
        let w = store.insert("w", Tensor::scalar(1.0), true);
        let mut adam = Adam::new(AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        });
        let g = square_grad(&store, w);
        adam.step(&mut store, &g);
        let after = store.value(w).item();
        assert!(after < 1.0 && after > 0.0);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut store = ParamStore::new(0);
        let w = store.insert("w", Tensor::row_vector(vec![0.0, 0.0]), true);
        let before = store.value(w).clone();
        let mut adam = Adam::new(AdamConfig::default());
        let g = square_grad(&store, w);
        adam.step(&mut store, &g);
        assert_eq!(store.value(w), &before);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn frozen_embeddings_stay_fixed() {
        let mut store = ParamStore::new(3);
        let table = store.uniform("words", 6, 4);
        store.set_trainable(table, false);
        let w = store.uniform("w", 4, 1);
        let before = store.value(table).clone();
        let mut adam = Adam::new(AdamConfig::default());
        for step in 0..100 {
            let grads = {
                let mut g = Graph::new(&store);
                let e = g.embed(table, &[step % 6]).unwrap();
                let wv = g.param(w);
                let y = g.matmul(e, wv).unwrap();
                let t = g.tanh(y);
                let loss = g.sum_all(t);
                g.backward(loss).unwrap()
            };
            adam.step(&mut store, &grads);
        }
        assert_eq!(store.value(table), &before);
    }
}
