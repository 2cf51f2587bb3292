//! Hyperbolic system abstraction and the concrete models used by the
//! benchmarks: 1D/2D KPP-type scalar laws with nonconvex fluxes, the 1D
//! shallow water equations, and the 1D Euler equations of gas dynamics.
//!
//! Every model supplies an entropy pair `{η, q}` with entropy variables
//! `v = η'(u)`, entropy potential `ψ = vᵀf − q`, and a Hessian-induced
//! scalar product `⟨a, b⟩ = aᵀ η''(u_ref) b` used by the fully discrete
//! entropy fix. Scalar models carry the square entropy `η = u²/2`, for
//! which the Hessian bound is exactly 1.

use crate::algebra::{dot, row_dot};
use crate::error::SolverError;
use crate::Result;

/// A hyperbolic system with `M` conserved variables in `D` space dimensions.
pub trait FluxModel<const M: usize, const D: usize>: Send + Sync {
    fn name(&self) -> &'static str;

    fn component_names(&self) -> [&'static str; M];

    /// Exact model flux, one spatial row per conserved variable.
    fn flux(&self, u: &[f64; M]) -> Result<[[f64; D]; M]>;

    /// Upper bound for the spectral radius of `f'(û)·n` over every convex
    /// combination `û` of the two states (see each model for the bound
    /// strategy actually used).
    fn max_wave_speed(&self, ui: &[f64; M], uj: &[f64; M], n: &[f64; D]) -> Result<f64>;

    fn entropy(&self, u: &[f64; M]) -> Result<f64>;

    fn entropy_flux(&self, u: &[f64; M]) -> Result<[f64; D]>;

    fn entropy_variables(&self, u: &[f64; M]) -> Result<[f64; M]>;

    /// `ψ(u) = v(u)ᵀ f(u) − q(u)`, evaluated in closed form.
    fn entropy_potential(&self, u: &[f64; M]) -> Result<[f64; D]>;

    /// `⟨a, b⟩` induced by the entropy Hessian at `u_ref` (or by a global
    /// Hessian bound for scalar models).
    fn entropy_hessian_apply(&self, u_ref: &[f64; M], a: &[f64; M], b: &[f64; M]) -> Result<f64>;

    /// Exact membership test for the invariant set `G`.
    fn admissible(&self, u: &[f64; M]) -> bool;

    /// Whether the model functions can be evaluated at `u` at all.
    /// Scalar models evaluate everywhere (unlimited schemes legitimately
    /// oscillate outside `G`); systems need positivity.
    fn evaluable(&self, u: &[f64; M]) -> bool {
        self.admissible(u)
    }

    /// Mirror state for reflecting walls (normal momentum negated).
    fn reflect(&self, u: &[f64; M]) -> [f64; M] {
        *u
    }

    /// Scalar tracked in diagnostics (solution value, water height, density).
    fn monitored(&self, u: &[f64; M]) -> f64 {
        u[0]
    }
}

/// 1D systems that provide a Roe-average dissipation operator
/// `|Â_ij| Δu` for the Roe target flux.
pub trait RoeModel<const M: usize>: FluxModel<M, 1> {
    /// `|Â(u_i, u_j)| · d` where `Â` is the Roe-average Jacobian for the
    /// `+x` direction. The result is direction-independent since
    /// `|−Â| = |Â|`.
    fn abs_roe_jacobian_times(
        &self,
        ui: &[f64; M],
        uj: &[f64; M],
        d: &[f64; M],
    ) -> Result<[f64; M]>;
}

/// Interval membership with slack for iterative solvers whose intermediate
/// iterates may leave the invariant interval by a few fixed-point
/// tolerances. Scalar flux formulas evaluate globally, so this test only
/// gates admissibility bookkeeping, never evaluation.
fn scalar_in_range(lo: f64, hi: f64, u: f64) -> bool {
    let tol = 1e-6 * (hi - lo).max(1.0);
    u.is_finite() && u >= lo - tol && u <= hi + tol
}

// ---------------------------------------------------------------------------
// 1D KPP-type scalar law with the piecewise nonconvex flux
//   f(u) = u(1-u)/4        for u <= 1/2,
//   f(u) = u(u-1)/2 + 3/16 for u >  1/2.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Kpp1d {
    /// Invariant interval `G = [lo, hi]`.
    pub lo: f64,
    pub hi: f64,
}

impl Default for Kpp1d {
    fn default() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }
}

impl Kpp1d {
    pub fn flux_value(u: f64) -> f64 {
        if u <= 0.5 {
            0.25 * u * (1.0 - u)
        } else {
            0.5 * u * (u - 1.0) + 3.0 / 16.0
        }
    }

    pub fn flux_derivative(u: f64) -> f64 {
        if u <= 0.5 {
            0.25 - 0.5 * u
        } else {
            u - 0.5
        }
    }

    /// Square-entropy flux `q(u) = ∫ u f'(u) du`, with the integration
    /// constant on the upper branch fixed by continuity at `u = 1/2`.
    pub fn entropy_flux_value(u: f64) -> f64 {
        if u <= 0.5 {
            u * u / 8.0 - u * u * u / 6.0
        } else {
            u * u * u / 3.0 - u * u / 4.0 + 1.0 / 32.0
        }
    }
}

impl FluxModel<1, 1> for Kpp1d {
    fn name(&self) -> &'static str {
        "kpp1d"
    }

    fn component_names(&self) -> [&'static str; 1] {
        ["u"]
    }

    fn flux(&self, u: &[f64; 1]) -> Result<[[f64; 1]; 1]> {
        Ok([[Self::flux_value(u[0])]])
    }

    fn max_wave_speed(&self, ui: &[f64; 1], uj: &[f64; 1], n: &[f64; 1]) -> Result<f64> {
        // |f'| is piecewise linear with its minimum at u = 1/2, so the
        // maximum over the hull of {u_i, u_j} is attained at an endpoint.
        let s = Self::flux_derivative(ui[0])
            .abs()
            .max(Self::flux_derivative(uj[0]).abs());
        Ok(s * n[0].abs())
    }

    fn entropy(&self, u: &[f64; 1]) -> Result<f64> {
        Ok(0.5 * u[0] * u[0])
    }

    fn entropy_flux(&self, u: &[f64; 1]) -> Result<[f64; 1]> {
        Ok([Self::entropy_flux_value(u[0])])
    }

    fn entropy_variables(&self, u: &[f64; 1]) -> Result<[f64; 1]> {
        Ok(*u)
    }

    fn entropy_potential(&self, u: &[f64; 1]) -> Result<[f64; 1]> {
        Ok([u[0] * Self::flux_value(u[0]) - Self::entropy_flux_value(u[0])])
    }

    fn entropy_hessian_apply(&self, _u_ref: &[f64; 1], a: &[f64; 1], b: &[f64; 1]) -> Result<f64> {
        Ok(a[0] * b[0])
    }

    fn admissible(&self, u: &[f64; 1]) -> bool {
        scalar_in_range(self.lo, self.hi, u[0])
    }

    fn evaluable(&self, u: &[f64; 1]) -> bool {
        u[0].is_finite()
    }
}

// ---------------------------------------------------------------------------
// 2D KPP equation with flux f(u) = (sin u, cos u).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Kpp2d {
    pub lo: f64,
    pub hi: f64,
}

impl Kpp2d {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

impl FluxModel<1, 2> for Kpp2d {
    fn name(&self) -> &'static str {
        "kpp2d"
    }

    fn component_names(&self) -> [&'static str; 1] {
        ["u"]
    }

    fn flux(&self, u: &[f64; 1]) -> Result<[[f64; 2]; 1]> {
        Ok([[u[0].sin(), u[0].cos()]])
    }

    fn max_wave_speed(&self, _ui: &[f64; 1], _uj: &[f64; 1], n: &[f64; 2]) -> Result<f64> {
        // |f'(u)·n| = |cos(u) n_x − sin(u) n_y| <= |n| = 1
        Ok(row_dot(n, n).sqrt())
    }

    fn entropy(&self, u: &[f64; 1]) -> Result<f64> {
        Ok(0.5 * u[0] * u[0])
    }

    fn entropy_flux(&self, u: &[f64; 1]) -> Result<[f64; 2]> {
        let (s, c) = u[0].sin_cos();
        Ok([u[0] * s + c, u[0] * c - s])
    }

    fn entropy_variables(&self, u: &[f64; 1]) -> Result<[f64; 1]> {
        Ok(*u)
    }

    fn entropy_potential(&self, u: &[f64; 1]) -> Result<[f64; 2]> {
        let (s, c) = u[0].sin_cos();
        Ok([-c, s])
    }

    fn entropy_hessian_apply(&self, _u_ref: &[f64; 1], a: &[f64; 1], b: &[f64; 1]) -> Result<f64> {
        Ok(a[0] * b[0])
    }

    fn admissible(&self, u: &[f64; 1]) -> bool {
        scalar_in_range(self.lo, self.hi, u[0])
    }

    fn evaluable(&self, u: &[f64; 1]) -> bool {
        u[0].is_finite()
    }
}

// ---------------------------------------------------------------------------
// Linear advection (test / demo model).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct LinearAdvection<const D: usize> {
    pub velocity: [f64; D],
}

impl<const D: usize> FluxModel<1, D> for LinearAdvection<D> {
    fn name(&self) -> &'static str {
        "advection"
    }

    fn component_names(&self) -> [&'static str; 1] {
        ["u"]
    }

    fn flux(&self, u: &[f64; 1]) -> Result<[[f64; D]; 1]> {
        Ok([std::array::from_fn(|d| self.velocity[d] * u[0])])
    }

    fn max_wave_speed(&self, _ui: &[f64; 1], _uj: &[f64; 1], n: &[f64; D]) -> Result<f64> {
        Ok(row_dot(&self.velocity, n).abs())
    }

    fn entropy(&self, u: &[f64; 1]) -> Result<f64> {
        Ok(0.5 * u[0] * u[0])
    }

    fn entropy_flux(&self, u: &[f64; 1]) -> Result<[f64; D]> {
        Ok(std::array::from_fn(|d| 0.5 * self.velocity[d] * u[0] * u[0]))
    }

    fn entropy_variables(&self, u: &[f64; 1]) -> Result<[f64; 1]> {
        Ok(*u)
    }

    fn entropy_potential(&self, u: &[f64; 1]) -> Result<[f64; D]> {
        Ok(std::array::from_fn(|d| 0.5 * self.velocity[d] * u[0] * u[0]))
    }

    fn entropy_hessian_apply(&self, _u_ref: &[f64; 1], a: &[f64; 1], b: &[f64; 1]) -> Result<f64> {
        Ok(a[0] * b[0])
    }

    fn admissible(&self, _u: &[f64; 1]) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// 1D shallow water equations, u = (h, hv), flux (hv, hv² + g h²/2).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ShallowWater {
    pub g: f64,
}

impl ShallowWater {
    pub fn new(g: f64) -> Self {
        Self { g }
    }

    fn check(&self, u: &[f64; 2]) -> Result<(f64, f64)> {
        let h = u[0];
        if !(h > 0.0) || !h.is_finite() || !u[1].is_finite() {
            return Err(SolverError::Inadmissible(format!(
                "shallow water: h = {h} (need h > 0)"
            )));
        }
        Ok((h, u[1] / h))
    }
}

impl FluxModel<2, 1> for ShallowWater {
    fn name(&self) -> &'static str {
        "shallow-water"
    }

    fn component_names(&self) -> [&'static str; 2] {
        ["h", "hv"]
    }

    fn flux(&self, u: &[f64; 2]) -> Result<[[f64; 1]; 2]> {
        let (h, v) = self.check(u)?;
        Ok([[u[1]], [u[1] * v + 0.5 * self.g * h * h]])
    }

    fn max_wave_speed(&self, ui: &[f64; 2], uj: &[f64; 2], n: &[f64; 1]) -> Result<f64> {
        // two-point endpoint bound max(|v| + sqrt(g h)) over {u_i, u_j}
        let (hi, vi) = self.check(ui)?;
        let (hj, vj) = self.check(uj)?;
        let si = vi.abs() + (self.g * hi).sqrt();
        let sj = vj.abs() + (self.g * hj).sqrt();
        Ok(si.max(sj) * n[0].abs())
    }

    fn entropy(&self, u: &[f64; 2]) -> Result<f64> {
        let (h, v) = self.check(u)?;
        Ok(0.5 * (u[1] * v + self.g * h * h))
    }

    fn entropy_flux(&self, u: &[f64; 2]) -> Result<[f64; 1]> {
        let (h, v) = self.check(u)?;
        Ok([0.5 * u[1] * v * v + self.g * h * u[1]])
    }

    fn entropy_variables(&self, u: &[f64; 2]) -> Result<[f64; 2]> {
        let (h, v) = self.check(u)?;
        Ok([self.g * h - 0.5 * v * v, v])
    }

    fn entropy_potential(&self, u: &[f64; 2]) -> Result<[f64; 1]> {
        let (h, v) = self.check(u)?;
        Ok([0.5 * self.g * h * h * v])
    }

    fn entropy_hessian_apply(&self, u_ref: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> Result<f64> {
        let (h, v) = self.check(u_ref)?;
        let h11 = v * v / h + self.g;
        let h12 = -v / h;
        let h22 = 1.0 / h;
        Ok(a[0] * (h11 * b[0] + h12 * b[1]) + a[1] * (h12 * b[0] + h22 * b[1]))
    }

    fn admissible(&self, u: &[f64; 2]) -> bool {
        u[0] > 0.0 && u[0].is_finite() && u[1].is_finite()
    }

    fn reflect(&self, u: &[f64; 2]) -> [f64; 2] {
        [u[0], -u[1]]
    }
}

impl RoeModel<2> for ShallowWater {
    fn abs_roe_jacobian_times(
        &self,
        ui: &[f64; 2],
        uj: &[f64; 2],
        d: &[f64; 2],
    ) -> Result<[f64; 2]> {
        let (hi, vi) = self.check(ui)?;
        let (hj, vj) = self.check(uj)?;
        let (si, sj) = (hi.sqrt(), hj.sqrt());
        let v = (si * vi + sj * vj) / (si + sj);
        let h_bar = 0.5 * (hi + hj);
        let c2 = self.g * h_bar;
        if !(c2 > 0.0) {
            return Err(SolverError::RoeDegenerate(format!("c^2 = {c2}")));
        }
        let c = c2.sqrt();
        // eigenvectors r± = (1, v ± c); expand d = a_- r_- + a_+ r_+
        let a_plus = (d[1] - (v - c) * d[0]) / (2.0 * c);
        let a_minus = d[0] - a_plus;
        let (lm, lp) = ((v - c).abs(), (v + c).abs());
        Ok([
            lm * a_minus + lp * a_plus,
            lm * a_minus * (v - c) + lp * a_plus * (v + c),
        ])
    }
}

// ---------------------------------------------------------------------------
// 1D Euler equations of gas dynamics, u = (ρ, ρv, ρE), ideal gas EOS.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Euler {
    pub gamma: f64,
}

impl Euler {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }

    pub fn pressure(&self, u: &[f64; 3]) -> f64 {
        (self.gamma - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0])
    }

    /// Conserved state from primitives (ρ, v, p).
    pub fn from_primitive(&self, rho: f64, v: f64, p: f64) -> [f64; 3] {
        [rho, rho * v, p / (self.gamma - 1.0) + 0.5 * rho * v * v]
    }

    fn check(&self, u: &[f64; 3]) -> Result<(f64, f64, f64)> {
        let rho = u[0];
        if !(rho > 0.0) || !u.iter().all(|x| x.is_finite()) {
            return Err(SolverError::Inadmissible(format!("euler: rho = {rho}")));
        }
        let v = u[1] / rho;
        let p = self.pressure(u);
        if !(p > 0.0) {
            return Err(SolverError::Inadmissible(format!("euler: p = {p}")));
        }
        Ok((rho, v, p))
    }

    fn specific_entropy(&self, rho: f64, p: f64) -> f64 {
        p.ln() - self.gamma * rho.ln()
    }
}

impl FluxModel<3, 1> for Euler {
    fn name(&self) -> &'static str {
        "euler"
    }

    fn component_names(&self) -> [&'static str; 3] {
        ["rho", "rhov", "rhoE"]
    }

    fn flux(&self, u: &[f64; 3]) -> Result<[[f64; 1]; 3]> {
        let (_, v, p) = self.check(u)?;
        Ok([[u[1]], [u[1] * v + p], [(u[2] + p) * v]])
    }

    fn max_wave_speed(&self, ui: &[f64; 3], uj: &[f64; 3], n: &[f64; 1]) -> Result<f64> {
        // two-point endpoint bound max(|v| + c) over {u_i, u_j}
        let (ri, vi, pi) = self.check(ui)?;
        let (rj, vj, pj) = self.check(uj)?;
        let si = vi.abs() + (self.gamma * pi / ri).sqrt();
        let sj = vj.abs() + (self.gamma * pj / rj).sqrt();
        Ok(si.max(sj) * n[0].abs())
    }

    fn entropy(&self, u: &[f64; 3]) -> Result<f64> {
        let (rho, _, p) = self.check(u)?;
        Ok(rho * self.specific_entropy(rho, p) / (1.0 - self.gamma))
    }

    fn entropy_flux(&self, u: &[f64; 3]) -> Result<[f64; 1]> {
        let (rho, v, p) = self.check(u)?;
        Ok([rho * v * self.specific_entropy(rho, p) / (1.0 - self.gamma)])
    }

    fn entropy_variables(&self, u: &[f64; 3]) -> Result<[f64; 3]> {
        let (rho, v, p) = self.check(u)?;
        let s = self.specific_entropy(rho, p);
        let g1 = self.gamma - 1.0;
        Ok([
            (self.gamma - s) / g1 - 0.5 * rho * v * v / p,
            rho * v / p,
            -rho / p,
        ])
    }

    fn entropy_potential(&self, u: &[f64; 3]) -> Result<[f64; 1]> {
        self.check(u)?;
        Ok([u[1]])
    }

    fn entropy_hessian_apply(&self, u_ref: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> Result<f64> {
        let (rho, v, p) = self.check(u_ref)?;
        let g1 = self.gamma - 1.0;
        let p2 = p * p;
        let h11 = self.gamma / (g1 * rho) + 0.25 * g1 * rho * v.powi(4) / p2;
        let h12 = -0.5 * g1 * rho * v.powi(3) / p2;
        let h13 = -1.0 / p + 0.5 * g1 * rho * v * v / p2;
        let h22 = 1.0 / p + g1 * rho * v * v / p2;
        let h23 = -g1 * rho * v / p2;
        let h33 = g1 * rho / p2;
        let hb = [
            h11 * b[0] + h12 * b[1] + h13 * b[2],
            h12 * b[0] + h22 * b[1] + h23 * b[2],
            h13 * b[0] + h23 * b[1] + h33 * b[2],
        ];
        Ok(dot(a, &hb))
    }

    fn admissible(&self, u: &[f64; 3]) -> bool {
        u[0] > 0.0 && u.iter().all(|x| x.is_finite()) && self.pressure(u) > 0.0
    }

    fn reflect(&self, u: &[f64; 3]) -> [f64; 3] {
        [u[0], -u[1], u[2]]
    }
}

impl RoeModel<3> for Euler {
    fn abs_roe_jacobian_times(
        &self,
        ui: &[f64; 3],
        uj: &[f64; 3],
        d: &[f64; 3],
    ) -> Result<[f64; 3]> {
        let (ri, vi, pi) = self.check(ui)?;
        let (rj, vj, pj) = self.check(uj)?;
        let (si, sj) = (ri.sqrt(), rj.sqrt());
        let hi = (ui[2] + pi) / ri;
        let hj = (uj[2] + pj) / rj;
        let v = (si * vi + sj * vj) / (si + sj);
        let h = (si * hi + sj * hj) / (si + sj);
        let c2 = (self.gamma - 1.0) * (h - 0.5 * v * v);
        if !(c2 > 0.0) {
            return Err(SolverError::RoeDegenerate(format!("c^2 = {c2}")));
        }
        let c = c2.sqrt();
        // wave strengths for d = Σ a_k r_k with the standard eigenvectors
        let a2 = (self.gamma - 1.0) / c2 * (d[0] * (h - v * v) + v * d[1] - d[2]);
        let a1 = (d[0] * (v + c) - d[1] - c * a2) / (2.0 * c);
        let a3 = d[0] - a1 - a2;
        let (l1, l2, l3) = ((v - c).abs(), v.abs(), (v + c).abs());
        Ok([
            l1 * a1 + l2 * a2 + l3 * a3,
            l1 * a1 * (v - c) + l2 * a2 * v + l3 * a3 * (v + c),
            l1 * a1 * (h - v * c) + l2 * a2 * (0.5 * v * v) + l3 * a3 * (h + v * c),
        ])
    }
}
