use crate::error::{Error, Result};
use crate::numcore::{glorot_uniform, BoundParams, Graph, ParamSet, Rng, Tensor, Var};

/// Graph handles for a GRU cell.
///
/// `wx` is `input × 3H` with column blocks `[z | r | h̃]`, `wh_zr` is
/// `H × 2H`, `wh_n` is `H × H` and `bias` has `3H` entries. The candidate
/// applies the reset gate before the recurrent product:
/// `h̃ = tanh(x W_n + (r ⊙ h) U_n + b_n)`.
#[derive(Clone, Copy, Debug)]
pub struct GruVars {
    pub wx: Var,
    pub wh_zr: Var,
    pub wh_n: Var,
    pub bias: Var,
    pub hidden: usize,
}

/// Handles for the GRU-D decay parameters. `gx_w`/`gx_b` act per variable
/// (diagonal), `gh_w` is `D × H`.
#[derive(Clone, Copy, Debug)]
pub struct DecayVars {
    pub gx_w: Var,
    pub gx_b: Var,
    pub gh_w: Var,
    pub gh_b: Var,
}

pub(crate) const WX: &str = "enc.wx";
pub(crate) const WH_ZR: &str = "enc.wh_zr";
pub(crate) const WH_N: &str = "enc.wh_n";
pub(crate) const BIAS: &str = "enc.b";
pub(crate) const GX_W: &str = "enc.decay_x.w";
pub(crate) const GX_B: &str = "enc.decay_x.b";
pub(crate) const GH_W: &str = "enc.decay_h.w";
pub(crate) const GH_B: &str = "enc.decay_h.b";

/// Glorot-initialised GRU weights with zero biases.
pub fn init_gru(params: &mut ParamSet, input_width: usize, hidden: usize, rng: &mut Rng) {
    params.insert(WX, glorot_uniform(input_width, 3 * hidden, rng));
    params.insert(WH_ZR, glorot_uniform(hidden, 2 * hidden, rng));
    params.insert(WH_N, glorot_uniform(hidden, hidden, rng));
    params.insert(BIAS, Tensor::zeros(&[3 * hidden]));
}

/// Decay weights start non-negative so every decay is active (a negative
/// weight with δ ≥ 0 sits in the flat part of `max(0, ·)` and never moves).
pub fn init_decays(params: &mut ParamSet, n_vars: usize, hidden: usize, rng: &mut Rng) {
    let abs = |t: Tensor| {
        let shape = t.shape().to_vec();
        Tensor::new(shape, t.into_data().into_iter().map(f64::abs).collect()).expect("shape")
    };
    let gx = abs(glorot_uniform(n_vars, n_vars, rng));
    let gx_diag = (0..n_vars).map(|d| gx.get(d, d)).collect();
    params.insert(GX_W, Tensor::new(vec![n_vars], gx_diag).expect("shape"));
    params.insert(GX_B, Tensor::zeros(&[n_vars]));
    params.insert(GH_W, abs(glorot_uniform(n_vars, hidden, rng)));
    params.insert(GH_B, Tensor::zeros(&[hidden]));
}

pub fn gru_vars(bound: &BoundParams, hidden: usize) -> Result<GruVars> {
    Ok(GruVars {
        wx: bound.var(WX)?,
        wh_zr: bound.var(WH_ZR)?,
        wh_n: bound.var(WH_N)?,
        bias: bound.var(BIAS)?,
        hidden,
    })
}

pub fn decay_vars(bound: &BoundParams) -> Result<DecayVars> {
    Ok(DecayVars {
        gx_w: bound.var(GX_W)?,
        gx_b: bound.var(GX_B)?,
        gh_w: bound.var(GH_W)?,
        gh_b: bound.var(GH_B)?,
    })
}

/// Input projection `x W + b` for any number of rows.
pub(crate) fn project_inputs(g: &mut Graph, x: Var, w: &GruVars) -> Result<Var> {
    let p = g.matmul(x, w.wx)?;
    g.add_row(p, w.bias)
}

/// Recurrent half of a GRU step given the projected input `gx` (`B × 3H`).
/// `drop` is an optional fixed mask on the hidden-to-hidden input.
pub(crate) fn gru_recur(g: &mut Graph, h_prev: Var, gx: Var, w: &GruVars, drop: Option<Var>) -> Result<Var> {
    let hd = w.hidden;
    let h_in = match drop {
        Some(m) => g.mul(h_prev, m)?,
        None => h_prev,
    };
    let gx_zr = g.slice_cols(gx, 0, 2 * hd)?;
    let gx_n = g.slice_cols(gx, 2 * hd, hd)?;
    let gh_zr = g.matmul(h_in, w.wh_zr)?;
    let pre_zr = g.add(gx_zr, gh_zr)?;
    let zr = g.sigmoid(pre_zr);
    let z = g.slice_cols(zr, 0, hd)?;
    let r = g.slice_cols(zr, hd, hd)?;
    let rh = g.mul(r, h_in)?;
    let gh_n = g.matmul(rh, w.wh_n)?;
    let pre_n = g.add(gx_n, gh_n)?;
    let cand = g.tanh(pre_n);
    let diff = g.sub(cand, h_prev)?;
    let upd = g.mul(z, diff)?;
    g.add(h_prev, upd)
}

/// One GRU step: `h = (1 − z) ⊙ h_prev + z ⊙ h̃`.
pub fn gru_step(g: &mut Graph, h_prev: Var, input: Var, w: &GruVars) -> Result<Var> {
    let (hp, x) = (g.shape(h_prev).to_vec(), g.shape(input).to_vec());
    if hp.len() != 2 || hp[1] != w.hidden || x.len() != 2 || x[0] != hp[0] {
        return Err(Error::dim("gru_step", &hp, &x));
    }
    let gx = project_inputs(g, input, w)?;
    gru_recur(g, h_prev, gx, w, None)
}

/// `exp(−max(0, pre))`, always in `(0, 1]`.
pub(crate) fn decay(g: &mut Graph, pre: Var) -> Var {
    let r = g.relu(pre);
    let n = g.scale(r, -1.0);
    g.exp(n)
}

/// Input decay `γx = exp(−max(0, w ⊙ δ + b))` for `δ` of shape `rows × D`.
pub(crate) fn input_decay(g: &mut Graph, delta: Var, w: &DecayVars) -> Result<Var> {
    let p = g.mul_row(delta, w.gx_w)?;
    let p = g.add_row(p, w.gx_b)?;
    Ok(decay(g, p))
}

/// Hidden decay `γh = exp(−max(0, δ W + b))`, `rows × H`.
pub(crate) fn hidden_decay(g: &mut Graph, delta: Var, w: &DecayVars) -> Result<Var> {
    let p = g.matmul(delta, w.gh_w)?;
    let p = g.add_row(p, w.gh_b)?;
    Ok(decay(g, p))
}

/// `x̂ = m ⊙ x + (1 − m) ⊙ (γx ⊙ x_last + (1 − γx) ⊙ x̃)`, rearranged as
/// `base + γx ⊙ slope` with data-only `base` and `slope`.
pub(crate) fn decayed_input(
    g: &mut Graph,
    gamma_x: Var,
    x: &[f64],
    m: &[f64],
    x_last: &[f64],
    x_mean: &[f64],
    shape: &[usize],
) -> Result<Var> {
    let base: Vec<f64> = (0..x.len())
        .map(|i| m[i] * x[i] + (1.0 - m[i]) * x_mean[i])
        .collect();
    let slope: Vec<f64> = (0..x.len())
        .map(|i| (1.0 - m[i]) * (x_last[i] - x_mean[i]))
        .collect();
    let base = g.constant(Tensor::new(shape.to_vec(), base)?);
    let slope = g.constant(Tensor::new(shape.to_vec(), slope)?);
    let s = g.mul(gamma_x, slope)?;
    g.add(base, s)
}

/// Per-step inputs of a GRU-D cell for a batch of `B` rows (`B × D` each).
#[derive(Clone, Debug)]
pub struct GruDInputs<'a> {
    pub x: &'a [f64],
    pub mask: &'a [f64],
    pub delta: &'a [f64],
    pub x_last: &'a [f64],
    pub x_mean: &'a [f64],
}

/// One GRU-D step. Returns the new hidden state and the updated
/// last-observation vector (replaced wherever the mask is 1).
pub fn gru_d_step(
    g: &mut Graph,
    h_prev: Var,
    inp: &GruDInputs<'_>,
    w: &GruVars,
    decays: &DecayVars,
) -> Result<(Var, Vec<f64>)> {
    if let Some(bad) = inp.delta.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::Contract(format!("time interval must be >= 0, got {bad}")));
    }
    let rows = g.shape(h_prev)[0];
    let n_vars = inp.x.len() / rows.max(1);
    let shape = [rows, n_vars];
    let delta = g.constant(Tensor::new(shape.to_vec(), inp.delta.to_vec())?);
    let gamma_x = input_decay(g, delta, decays)?;
    let x_hat = decayed_input(g, gamma_x, inp.x, inp.mask, inp.x_last, inp.x_mean, &shape)?;
    let gamma_h = hidden_decay(g, delta, decays)?;
    let h_hat = g.mul(gamma_h, h_prev)?;
    let m = g.constant(Tensor::new(shape.to_vec(), inp.mask.to_vec())?);
    let gate_in = g.concat_cols(&[x_hat, m])?;
    let h = gru_step(g, h_hat, gate_in, w)?;
    let x_last = (0..inp.x.len())
        .map(|i| if inp.mask[i] != 0.0 { inp.x[i] } else { inp.x_last[i] })
        .collect();
    Ok((h, x_last))
}
