//! High-order target fluxes that the limiters constrain.
//!
//! The stabilized Galerkin target
//! `f_ij = m_ij (u̇_i − u̇_j) + d_ij (u_i − u_j)` recovers the
//! consistent-mass group finite element discretization when applied
//! without limiting (exactly so when the rates fed in solve the
//! consistent-mass system; the production pipeline feeds the low-order
//! rates as an explicit approximation).
//!
//! The Roe target `f_ij = (d_ij I − |Â_ij| |c_ij|)(u_i − u_j)` replaces the
//! Lax–Friedrichs dissipation of the fully corrected scheme with
//! Roe-average dissipation; it is deliberately built without an entropy
//! fix inside the Roe matrix.

use crate::model::RoeModel;
use crate::system::EdgeSystem;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// `f_ij = 0`: the scheme stays the low-order one.
    None,
    Galerkin,
    Roe,
}

/// Stabilized Galerkin target for all edges. `rates` are the nodal time
/// derivatives entering the mass correction (low-order rates in
/// production), `visc` the current graph viscosities.
pub fn galerkin_target<const M: usize, const D: usize>(
    sys: &EdgeSystem<M, D>,
    u: &[[f64; M]],
    rates: &[[f64; M]],
    visc: &[f64],
    out: &mut Vec<[f64; M]>,
) {
    out.clear();
    out.resize(sys.edges.len(), [0.0; M]);
    for (e_idx, e) in sys.edges.iter().enumerate() {
        let (i, j) = (e.i as usize, e.j as usize);
        let d = visc[e_idx];
        let m = e.m_c;
        out[e_idx] = std::array::from_fn(|k| {
            m * (rates[i][k] - rates[j][k]) + d * (u[i][k] - u[j][k])
        });
    }
}

/// Roe dissipation target for 1D systems.
pub fn roe_target<const M: usize, F: RoeModel<M>>(
    sys: &EdgeSystem<M, 1>,
    model: &F,
    u: &[[f64; M]],
    visc: &[f64],
    out: &mut Vec<[f64; M]>,
) -> Result<()> {
    out.clear();
    out.resize(sys.edges.len(), [0.0; M]);
    for (e_idx, e) in sys.edges.iter().enumerate() {
        let (i, j) = (e.i as usize, e.j as usize);
        let d = visc[e_idx];
        let du: [f64; M] = std::array::from_fn(|k| u[i][k] - u[j][k]);
        if du.iter().all(|x| *x == 0.0) {
            continue;
        }
        let roe = model.abs_roe_jacobian_times(&u[i], &u[j], &du)?;
        out[e_idx] = std::array::from_fn(|k| d * du[k] - e.c_norm * roe[k]);
    }
    Ok(())
}
