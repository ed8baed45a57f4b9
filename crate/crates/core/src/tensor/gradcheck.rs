use super::{Graph, NodeId, Tensor};
use crate::error::{Error, Result};

/// Compares reverse-mode gradients of a scalar function against central
/// finite differences.
///
/// Returns `max_i |analytic_i - numeric_i| / max(1, |analytic_i|)`. The
/// function must be deterministic; anything random has to be pinned by the
/// caller.
pub fn finite_diff_check<F>(f: F, x: &Tensor, step: f64) -> Result<f64>
where
    F: Fn(&mut Graph, NodeId) -> Result<NodeId>,
{
    finite_diff_check_many(|g, ids| f(g, ids[0]), std::slice::from_ref(x), step)
}

/// Multi-input form of [`finite_diff_check`]; every input is perturbed one
/// coordinate at a time.
pub fn finite_diff_check_many<F>(f: F, xs: &[Tensor], step: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    if step <= 0.0 {
        return Err(Error::Contract("finite-difference step must be positive".into()));
    }
    let eval = |inputs: &[Tensor], grad: bool| -> Result<(Graph, Vec<NodeId>, NodeId)> {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = inputs.iter().map(|t| g.leaf(t.clone(), grad)).collect();
        let out = f(&mut g, &ids)?;
        Ok((g, ids, out))
    };

    let (g, ids, out) = eval(xs, true)?;
    let grads = g.backward(out)?;
    let analytic: Vec<Vec<f64>> = ids
        .iter()
        .zip(xs)
        .map(|(&id, x)| {
            grads
                .slice(id)
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| vec![0.0; x.numel()])
        })
        .collect();
    drop(g);

    let mut worst = 0.0f64;
    let mut inputs = xs.to_vec();
    for which in 0..inputs.len() {
        for coord in 0..inputs[which].numel() {
            let original = inputs[which].data[coord];
            inputs[which].data[coord] = original + step;
            let plus = scalar_of(&eval(&inputs, false)?)?;
            inputs[which].data[coord] = original - step;
            let minus = scalar_of(&eval(&inputs, false)?)?;
            inputs[which].data[coord] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[which][coord];
            worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
        }
    }
    Ok(worst)
}

fn scalar_of((g, _, out): &(Graph, Vec<NodeId>, NodeId)) -> Result<f64> {
    g.value(*out).item()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_exact() {
        let x = Tensor::vector(vec![0.3, -1.2, 4.0, 2.5]);
        let err = finite_diff_check(|g, x| Ok(g.sum(x)), &x, 1e-5).unwrap();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn squared_norm() {
        let x = Tensor::vector(vec![1.0, 2.0, 3.0]);
        let err = finite_diff_check(
            |g, x| {
                let sq = g.mul(x, x)?;
                Ok(g.sum(sq))
            },
            &x,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }
}
