//! Algebraic local Lax–Friedrichs operator: graph viscosities
//! `d_ij = max(λ_ij |c_ij|, λ_ji |c_ji|)`, bar states
//! `ū_ij = (u_i + u_j)/2 − (f_j − f_i)·c_ij / (2 d_ij)`,
//! and the low-order nodal rates
//! `u̇_i^L = (1/m_i) Σ_{j≠i} [d_ij (u_j − u_i) − (f_j − f_i)·c_ij]`.

use crate::algebra::{flux_dot, flux_sub};
use crate::error::SolverError;
use crate::model::FluxModel;
use crate::system::EdgeSystem;
use crate::Result;

/// Per-edge viscosities plus the diagonal `d_ii = −Σ_k d_ik` (stored as the
/// positive row sum `Σ_k d_ik`, which is what the CFL number needs).
#[derive(Debug, Clone, Default)]
pub struct EdgeViscosity {
    pub d: Vec<f64>,
    /// `Σ_{j≠i} d_ij` per node (`= −d_ii`).
    pub row_sum: Vec<f64>,
}

impl EdgeViscosity {
    pub fn d_diag(&self, i: usize) -> f64 {
        -self.row_sum[i]
    }
}

/// Assemble `d_ij` from the current states. The wave-speed bound is the
/// model's (documented per model); `d_ij > 0` wherever `|c_ij| > 0` and the
/// states differ in flux.
pub fn assemble_viscosity<const M: usize, const D: usize, F: FluxModel<M, D>>(
    sys: &EdgeSystem<M, D>,
    model: &F,
    u: &[[f64; M]],
    out: &mut EdgeViscosity,
) -> Result<()> {
    out.d.resize(sys.edges.len(), 0.0);
    out.row_sum.clear();
    out.row_sum.resize(sys.n_total, 0.0);
    for (e_idx, e) in sys.edges.iter().enumerate() {
        let (i, j) = (e.i as usize, e.j as usize);
        let d = if e.c_norm == 0.0 {
            0.0
        } else {
            let n: [f64; D] = std::array::from_fn(|d| e.c[d] / e.c_norm);
            let lam_ij = model.max_wave_speed(&u[i], &u[j], &n)?;
            let n_rev: [f64; D] = std::array::from_fn(|d| -n[d]);
            let lam_ji = model.max_wave_speed(&u[j], &u[i], &n_rev)?;
            // |c_ji| = |c_ij| for every stored edge
            lam_ij.max(lam_ji) * e.c_norm
        };
        out.d[e_idx] = d;
        out.row_sum[i] += d;
        out.row_sum[j] += d;
    }
    Ok(())
}

/// Bar state of an edge.
///
/// The formula is orientation-invariant: evaluating it from the other end
/// flips both the flux difference and the gradient vector, so
/// `ū_ji = ū_ij` on every edge with `c_ji = -c_ij`. The two corrected
/// states of convex limiting are `ū_ij ± f*_ij/(2 d_ij)`.
///
/// `d_ij = 0` is only valid for coinciding states (the edge then transports
/// nothing); anything else is a contract violation.
pub fn bar_state<const M: usize, const D: usize>(
    ui: &[f64; M],
    uj: &[f64; M],
    fi: &[[f64; D]; M],
    fj: &[[f64; D]; M],
    c: &[f64; D],
    d: f64,
) -> Result<[f64; M]> {
    if d <= 0.0 {
        if ui == uj {
            return Ok(*ui);
        }
        return Err(SolverError::DegenerateEdge(format!(
            "d_ij = {d} with distinct states"
        )));
    }
    let df = flux_dot(&flux_sub(fj, fi), c);
    let half = 0.5 / d;
    Ok(std::array::from_fn(|k| {
        0.5 * (ui[k] + uj[k]) - half * df[k]
    }))
}

/// Low-order rates for all real nodes; ghost rate slots are refreshed by
/// the caller. `fluxes` caches `f(u_i)` for all nodes.
pub fn low_order_rates<const M: usize, const D: usize>(
    sys: &EdgeSystem<M, D>,
    u: &[[f64; M]],
    fluxes: &[[[f64; D]; M]],
    visc: &EdgeViscosity,
    out: &mut Vec<[f64; M]>,
) {
    out.clear();
    out.resize(sys.n_total, [0.0; M]);
    for (e_idx, e) in sys.edges.iter().enumerate() {
        let (i, j) = (e.i as usize, e.j as usize);
        let d = visc.d[e_idx];
        let df = flux_dot(&flux_sub(&fluxes[j], &fluxes[i]), &e.c);
        for k in 0..M {
            // viscosity term is antisymmetric in (i, j); the divergence
            // term (f_j - f_i)·c_ij enters both ends with the same sign
            // because the gradient vector flips together with the difference
            let t = d * (u[j][k] - u[i][k]);
            out[i][k] += t - df[k];
            out[j][k] += -t - df[k];
        }
    }
    for i in 0..sys.n_real {
        let inv = 1.0 / sys.mass[i];
        for k in 0..M {
            out[i][k] *= inv;
        }
    }
}
