use serde::Serialize;

use super::{AutodiffError, Graph, ParamStore, Var};

pub const GRADCHECK_STEP: f64 = 1e-4;
/// Denominator floor for relative errors, so that two near-zero gradients
/// do not count as a mismatch.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Default, Serialize)]
pub struct GradcheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub worst: Option<(String, usize)>,
}

/// Compares analytic gradients of the scalar built by `f` with central
/// differences, on up to `per_param` evenly spaced entries of every
/// trainable parameter.
pub fn gradcheck<E, F>(store: &mut ParamStore, f: F, per_param: usize) -> Result<GradcheckReport, E>
where
    E: From<AutodiffError>,
    F: Fn(&mut Graph) -> Result<Var, E>,
{
    let eval = |store: &ParamStore| -> Result<f64, E> {
        let mut g = Graph::new(store);
        let loss = f(&mut g)?;
        Ok(g.value(loss).item())
    };
    let grads = {
        let mut g = Graph::new(store);
        let loss = f(&mut g)?;
        g.backward(loss)?
    };
    let mut report = GradcheckReport::default();
    let ids: Vec<_> = store.iter().filter(|(_, p)| p.trainable).map(|(id, _)| id).collect();
    for id in ids {
        let analytic = grads
            .dense(id)
            .unwrap_or_else(|| {
                let (r, c) = store.value(id).shape();
                super::Tensor::zeros(r, c)
            });
        let n = analytic.len();
        let stride = n.div_ceil(per_param.max(1)).max(1);
        for k in (0..n).step_by(stride) {
            let orig = store.value(id).data()[k];
            store.value_mut(id).data_mut()[k] = orig + GRADCHECK_STEP;
            let up = eval(store)?;
            store.value_mut(id).data_mut()[k] = orig - GRADCHECK_STEP;
            let down = eval(store)?;
            store.value_mut(id).data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * GRADCHECK_STEP);
            let a = analytic.data()[k];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(GRADCHECK_FLOOR);
            report.checked += 1;
            report.max_abs_error = report.max_abs_error.max(abs);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((store.param(id).name.clone(), k));
            }
        }
    }
    Ok(report)
}
