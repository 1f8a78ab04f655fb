use super::ParamStore;
use crate::{Error, Result};

/// Adam with bias correction and optional global gradient-norm clipping.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip_norm: Option<f64>,
    step: u64,
    moments: Vec<Option<(Vec<f64>, Vec<f64>)>>,
}

impl Default for Adam {
    fn default() -> Self {
        Adam::new(1e-3)
    }
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: Some(5.0),
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update to every trainable entry and clears all gradient
    /// slots. A trainable entry without a gradient is a state error.
    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        let trainable: Vec<_> = store.ids().filter(|id| store.is_trainable(*id)).collect();
        if let Some(id) = trainable.iter().find(|id| store.grad(**id).is_none()) {
            return Err(Error::State(format!("no gradient for trainable {}", store.name(*id))));
        }
        let mut scale = 1.0;
        if let Some(max_norm) = self.clip_norm {
            let sq: f64 = trainable
                .iter()
                .flat_map(|id| store.grad(*id).unwrap_or(&[]).iter())
                .map(|g| g * g)
                .sum();
            let norm = sq.sqrt();
            if !norm.is_finite() {
                return Err(Error::Numeric("non-finite gradient norm".into()));
            }
            if norm > max_norm {
                scale = max_norm / norm;
            }
        }
        if self.moments.len() < store.len() {
            self.moments.resize(store.len(), None);
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for id in trainable {
            let grad = store.take_grad(id).expect("checked above");
            let n = grad.len();
            let (m, v) = self.moments[id.index()].get_or_insert_with(|| (vec![0.0; n], vec![0.0; n]));
            let values = store.value_mut(id).data_mut();
            for i in 0..n {
                let g = grad[i] * scale;
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                values[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        store.zero_grads();
        Ok(())
    }
}
