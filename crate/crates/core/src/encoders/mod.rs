//! Recurrent encoders (GRU, GRU-D) and the input views that feed them.

mod cell;
mod encode;
mod view;

pub use cell::{
    decay_vars, gru_d_step, gru_step, gru_vars, init_decays, init_gru, DecayVars, GruDInputs, GruVars,
};
pub use encode::{encode, Batch, Encoded, EncoderConfig, EncoderKind};
pub use view::{impute_view, InputView, Scheme, ViewSample};
