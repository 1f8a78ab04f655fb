use std::collections::HashMap;

use rand::Rng;
use sha2::{Digest, Sha256};

use super::Tensor;
use crate::{Error, Result};

/// Handle to one entry of a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
struct Entry {
    name: String,
    value: Tensor,
    grad: Option<Vec<f64>>,
    trainable: bool,
}

/// Named parameters with per-entry trainable flag and gradient slot.
///
/// Freezing an entry only stops gradient accumulation; its value is never
/// touched by the freeze flag itself.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    entries: Vec<Entry>,
    by_name: HashMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor, trainable: bool) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter name {name}")));
        }
        value.ensure_finite(&name)?;
        let id = ParamId(self.entries.len());
        self.by_name.insert(name.clone(), id);
        self.entries.push(Entry {
            name,
            value,
            grad: None,
            trainable,
        });
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].value
    }

    /// Replaces a value, keeping the shape contract.
    pub fn set_value(&mut self, id: ParamId, value: Tensor) -> Result<()> {
        let entry = &mut self.entries[id.0];
        if entry.value.shape() != value.shape() {
            return Err(Error::dim(format!(
                "{}: expected shape {:?}, got {:?}",
                entry.name,
                entry.value.shape(),
                value.shape()
            )));
        }
        value.ensure_finite(&entry.name)?;
        entry.value = value;
        Ok(())
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.entries[id.0].trainable
    }

    pub fn set_trainable(&mut self, id: ParamId, trainable: bool) {
        self.entries[id.0].trainable = trainable;
    }

    /// Sets the flag on every entry whose name starts with `prefix`.
    pub fn set_trainable_prefix(&mut self, prefix: &str, trainable: bool) {
        for e in self.entries.iter_mut().filter(|e| e.name.starts_with(prefix)) {
            e.trainable = trainable;
        }
    }

    pub fn set_all_trainable(&mut self, trainable: bool) {
        for e in &mut self.entries {
            e.trainable = trainable;
        }
    }

    pub fn grad(&self, id: ParamId) -> Option<&[f64]> {
        self.entries[id.0].grad.as_deref()
    }

    /// Adds gradients into the slots of trainable entries; frozen entries
    /// ignore them.
    pub fn accumulate(&mut self, grads: &Gradients) -> Result<()> {
        for (id, g) in grads.iter() {
            let entry = &mut self.entries[id.0];
            if !entry.trainable {
                continue;
            }
            if g.len() != entry.value.len() {
                return Err(Error::dim(format!("gradient size mismatch for {}", entry.name)));
            }
            match &mut entry.grad {
                Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
                slot @ None => *slot = Some(g.to_vec()),
            }
        }
        Ok(())
    }

    pub(crate) fn take_grad(&mut self, id: ParamId) -> Option<Vec<f64>> {
        self.entries[id.0].grad.take()
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.entries {
            e.grad = None;
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    /// SHA-256 over shape and little-endian payload of one entry.
    pub fn digest(&self, id: ParamId) -> String {
        let v = &self.entries[id.0].value;
        let mut h = Sha256::new();
        for d in v.shape() {
            h.update((*d as u64).to_le_bytes());
        }
        for x in v.data() {
            h.update(x.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Copies every entry under `prefix` out of the store, names stripped of
    /// the prefix.
    pub fn export_prefix(&self, prefix: &str) -> Vec<(String, Tensor)> {
        self.entries
            .iter()
            .filter_map(|e| {
                e.name
                    .strip_prefix(prefix)
                    .map(|rest| (rest.to_string(), e.value.clone()))
            })
            .collect()
    }
}

/// Uniform(-r, r) with r = sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    let r = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-r..r)).collect();
    Tensor::new(vec![rows, cols], data).expect("shape matches data")
}

/// Gradients with respect to parameters, produced by a backward pass.
#[derive(Clone, Debug, Default)]
pub struct Gradients {
    grads: Vec<(ParamId, Vec<f64>)>,
}

impl Gradients {
    pub(crate) fn add(&mut self, id: ParamId, g: &[f64]) {
        match self.grads.iter_mut().find(|(p, _)| *p == id) {
            Some((_, acc)) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
            None => self.grads.push((id, g.to_vec())),
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.grads.iter().find(|(p, _)| *p == id).map(|(_, g)| g.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.grads.iter().map(|(p, g)| (*p, g.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}
