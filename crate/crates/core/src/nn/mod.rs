//! Numeric substrate: tensors, parameters, a reverse-mode tape, LSTM cells,
//! Adam and gradient checking. Everything is float64 and single-threaded.

mod gradcheck;
mod graph;
mod lstm;
mod ops;
mod optim;
mod params;
mod tensor;

pub use gradcheck::{gradient_check, sample_coordinates};
pub use graph::{Graph, Var, PROB_FLOOR};
pub use lstm::{LstmWeights, FORGET_BIAS};
pub use ops::{affine, bilstm_encode, cross_entropy, softmax};
pub use optim::Adam;
pub use params::{glorot_uniform, Gradients, ParamId, ParamStore};
pub use tensor::Tensor;

/// Bi-directional LSTM parameter pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BiLstm {
    pub fwd: LstmWeights,
    pub bwd: LstmWeights,
}

impl BiLstm {
    /// Registers `{prefix}.fwd.*` and `{prefix}.bwd.*`; `hidden` is per
    /// direction.
    pub fn init<R: rand::Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        trainable: bool,
        rng: &mut R,
    ) -> crate::Result<Self> {
        Ok(BiLstm {
            fwd: LstmWeights::init(store, &format!("{prefix}.fwd"), input, hidden, trainable, rng)?,
            bwd: LstmWeights::init(store, &format!("{prefix}.bwd"), input, hidden, trainable, rng)?,
        })
    }

    pub fn find(store: &ParamStore, prefix: &str) -> crate::Result<Self> {
        Ok(BiLstm {
            fwd: LstmWeights::find(store, &format!("{prefix}.fwd"))?,
            bwd: LstmWeights::find(store, &format!("{prefix}.bwd"))?,
        })
    }

    pub fn encode(&self, g: &mut Graph, store: &ParamStore, x: Var) -> crate::Result<Var> {
        g.bilstm(store, x, &self.fwd, &self.bwd)
    }

    /// Output width (both directions).
    pub fn output_dim(&self, store: &ParamStore) -> usize {
        2 * self.fwd.hidden(store)
    }

    pub fn params(&self) -> [ParamId; 6] {
        [
            self.fwd.w_ih,
            self.fwd.w_hh,
            self.fwd.bias,
            self.bwd.w_ih,
            self.bwd.w_hh,
            self.bwd.bias,
        ]
    }
}
