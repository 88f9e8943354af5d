use super::graph::{Graph, Var};
use super::params::{BoundParams, ParamSet};
use crate::error::{Error, Result};

/// Largest relative disagreement between reverse-mode gradients and
/// finite differences, over every entry of every parameter in `params`.
///
/// The numeric side uses the five-point stencil, whose truncation error is
/// `O(eps⁴)`; steps around `1e-3` keep both truncation and rounding near
/// `1e-12`, so tiny gradient entries are still resolved.
///
/// `f` must be deterministic in the parameters (no dropout) and return a
/// scalar node. The relative error of one entry is
/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check<F>(f: F, params: &ParamSet, eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &BoundParams) -> Result<Var>,
{
    let mut g = Graph::new();
    let bound = params.bind(&mut g, |_| true);
    let loss = f(&mut g, &bound)?;
    let grads = g.backward(loss)?;
    let analytic = bound.gradients(&g, &grads);

    let eval = |p: &ParamSet| -> Result<f64> {
        let mut g = Graph::new();
        let b = p.bind(&mut g, |_| false);
        let l = f(&mut g, &b)?;
        Ok(g.value(l).item())
    };

    let mut worst = 0.0f64;
    let mut probe = params.clone();
    for (name, grad) in &analytic {
        for i in 0..grad.numel() {
            let orig = probe.get(name).expect("bound").data()[i];
            let mut at = |offset: f64| -> Result<f64> {
                probe.get_mut(name).expect("bound").data_mut()[i] = orig + offset;
                eval(&probe)
            };
            let near = at(eps)? - at(-eps)?;
            let far = at(2.0 * eps)? - at(-2.0 * eps)?;
            probe.get_mut(name).expect("bound").data_mut()[i] = orig;

            let numeric = (8.0 * near - far) / (12.0 * eps);
            let a = grad.data()[i];
            if !numeric.is_finite() || !a.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite gradient for '{name}'[{i}]: analytic {a}, numeric {numeric}"
                )));
            }
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::super::{glorot_uniform, seeded_rng, Tensor};
    use super::*;

    #[test]
    fn linear_map_is_exact() {
        let mut rng = seeded_rng(3);
        let mut p = ParamSet::new();
        p.insert("w", glorot_uniform(4, 3, &mut rng));
        let x = glorot_uniform(5, 4, &mut rng);
        let err = grad_check(
            |g, b| {
                let xv = g.constant(x.clone());
                let y = g.matmul(xv, b.var("w")?)?;
                Ok(g.sum(y))
            },
            &p,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn two_layer_composition() {
        let mut rng = seeded_rng(5);
        let mut p = ParamSet::new();
        p.insert("w1", glorot_uniform(3, 6, &mut rng));
        p.insert("b1", Tensor::new(vec![6], vec![0.1, -0.2, 0.05, 0.3, -0.1, 0.0]).unwrap());
        p.insert("w2", glorot_uniform(6, 2, &mut rng));
        let x = glorot_uniform(4, 3, &mut rng);
        let err = grad_check(
            |g, b| {
                let xv = g.constant(x.clone());
                let h = g.matmul(xv, b.var("w1")?)?;
                let h = g.add_row(h, b.var("b1")?)?;
                let h = g.tanh(h);
                let y = g.matmul(h, b.var("w2")?)?;
                let y = g.sigmoid(y);
                let sq = g.square(y);
                Ok(g.sum(sq))
            },
            &p,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let mut p = ParamSet::new();
        p.insert("w", Tensor::new(vec![1], vec![-1.0]).unwrap());
        let res = grad_check(
            |g, b| {
                let l = g.log(b.var("w")?);
                Ok(g.sum(l))
            },
            &p,
            1e-5,
        );
        assert!(matches!(res, Err(Error::Numeric(_))));
    }
}
