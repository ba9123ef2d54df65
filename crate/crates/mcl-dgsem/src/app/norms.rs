//! L2 error norms by LGL quadrature and experimental convergence orders.

use crate::error::{Result, SolverError};
use crate::euler::Cons;
use crate::semidisc::{Semidiscretization, Solution};

/// Per-equation L2 errors against `exact(x, y, t)`:
/// sqrt(sum_nodes J w (u - u_exact)^2) / sqrt(|Omega|).
pub fn l2_error(
    disc: &Semidiscretization,
    u: &Solution,
    t: f64,
    exact: &dyn Fn(f64, f64, f64) -> crate::euler::State,
) -> Cons {
    let mut acc = [0.0f64; 4];
    for (i, s) in u.states.iter().enumerate() {
        let [x, y] = disc.node_coords(i);
        let w = disc.quad_weight(i);
        let c = s.as_cons();
        let e = exact(x, y, t).as_cons();
        for k in 0..4 {
            let d = c[k] - e[k];
            acc[k] += w * d * d;
        }
    }
    let vol = disc.mesh.volume();
    let mut out = [0.0; 4];
    for k in 0..4 {
        out[k] = (acc[k] / vol).sqrt();
    }
    out
}

/// EOC_k = log2(err_{k-1} / err_k) for a factor-2 refinement ladder.
pub fn eoc(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(SolverError::Config(
            "EOC needs at least two refinement levels".into(),
        ));
    }
    let mut orders = Vec::with_capacity(errors.len() - 1);
    for w in errors.windows(2) {
        if !(w[0] > 0.0 && w[1] > 0.0) {
            return Err(SolverError::InvalidState(
                "EOC undefined for zero or negative error".into(),
            ));
        }
        orders.push((w[0] / w[1]).log2());
    }
    Ok(orders)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len().max(1) as f64
}
