//! Dense f64 tensors, a reverse-mode tape, Adam and finite-difference checks.
//!
//! Everything a training step needs lives here. A [`Graph`] is built fresh for
//! every mini-batch: parameters are bound as leaves, the forward pass records
//! operations, and [`Graph::backward`] walks the tape in reverse.

mod gradcheck;
mod graph;
mod optim;
mod params;
mod rng;
mod tensor;

pub use gradcheck::grad_check;
pub use graph::{Gradients, Graph, Var};
pub use optim::{Adam, AdamConfig};
pub use params::{BoundParams, ParamSet};
pub use rng::{derive_seed, glorot_uniform, seeded_rng, splitmix64, Rng};
pub use tensor::Tensor;
