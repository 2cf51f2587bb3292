//! Reference solutions for error measurement: closed-form vanishing
//! viscosity solutions of the 1D KPP Riemann problems, the Stoker dam-break
//! solution of the shallow water equations, an exact Riemann solver for the
//! 1D Euler equations, and sampled fine-grid references.

use crate::error::SolverError;
use crate::model::Euler;
use crate::Result;

/// Provenance of a reference solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    ClosedForm,
    RiemannOracle,
    FineGrid,
}

// ---------------------------------------------------------------------------
// 1D KPP Riemann problems (jump at x = 1/4).
// ---------------------------------------------------------------------------

/// Vanishing viscosity solution of the step 0 → 1: sonic shock from 0 up to
/// √6/4 followed by an attached rarefaction up to 1.
pub fn kpp_rp1(x: f64, t: f64) -> f64 {
    debug_assert!(t > 0.0);
    let shock = (1.0 + (6.0f64.sqrt() - 2.0) * t) / 4.0;
    let fan_end = (1.0 + 2.0 * t) / 4.0;
    if x < shock {
        0.0
    } else if x < fan_end {
        0.5 + (x - 0.25) / t
    } else {
        1.0
    }
}

/// Vanishing viscosity solution of the step 1 → 0: shock from 1 down to
/// 1 − √3/2 followed by an attached rarefaction down to 0. The fan meets
/// zero where the characteristic speed of the lower flux branch runs out,
/// at `x = (1 + t)/4`.
pub fn kpp_rp2(x: f64, t: f64) -> f64 {
    debug_assert!(t > 0.0);
    let shock = 0.25 * (1.0 + (3.0f64.sqrt() - 1.0) * t);
    let fan_end = (1.0 + t) / 4.0;
    if x < shock {
        1.0
    } else if x < fan_end {
        0.5 - 2.0 * (x - 0.25) / t
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Stoker dam-break solution of the shallow water equations.
// ---------------------------------------------------------------------------

/// Wet dam break with initial data `(h_l, 0)` for `x < 0` and `(h_r, 0)`
/// otherwise: rarefaction, plateau of height `c_m²/g`, shock.
#[derive(Debug, Clone, Copy)]
pub struct DamBreakExact {
    pub g: f64,
    pub h_l: f64,
    pub h_r: f64,
    /// Plateau celerity, root of a sixth-degree polynomial.
    pub c_m: f64,
    pub v_m: f64,
    pub shock_speed: f64,
}

impl DamBreakExact {
    pub fn new(h_l: f64, h_r: f64, g: f64) -> Result<Self> {
        if !(h_l > h_r && h_r > 0.0 && g > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "wet dam break needs h_l > h_r > 0, got {h_l}, {h_r}"
            )));
        }
        let c_l = (g * h_l).sqrt();
        let c_r = (g * h_r).sqrt();
        // Squaring the rarefaction invariant v_m = 2(c_l − c_m) against the
        // shock relation v_m² = g (h_m + h_r)(h_m − h_r)²/(2 h_m h_r) with
        // h_m = c_m²/g gives a sixth-degree polynomial in c_m.
        let poly = |cm: f64| {
            let cm2 = cm * cm;
            (cm2 - g * h_r).powi(2) * (cm2 + g * h_r) - 8.0 * g * h_r * cm2 * (c_l - cm).powi(2)
        };
        let (mut lo, mut hi) = (c_r * (1.0 + 1e-12), c_l);
        let (flo, fhi) = (poly(lo), poly(hi));
        if !(flo < 0.0 && fhi > 0.0) {
            return Err(SolverError::BracketFailure(format!(
                "dam break celerity: P({lo}) = {flo}, P({hi}) = {fhi}"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if poly(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        let c_m = 0.5 * (lo + hi);
        let v_m = 2.0 * (c_l - c_m);
        let h_m = c_m * c_m / g;
        let shock_speed = v_m * h_m / (h_m - h_r);
        Ok(Self {
            g,
            h_l,
            h_r,
            c_m,
            v_m,
            shock_speed,
        })
    }

    pub fn plateau_height(&self) -> f64 {
        self.c_m * self.c_m / self.g
    }

    /// Conserved state `(h, hv)` at `(x, t)`, jump initially at `x = 0`.
    pub fn eval(&self, x: f64, t: f64) -> [f64; 2] {
        debug_assert!(t > 0.0);
        let c_l = (self.g * self.h_l).sqrt();
        let xi = x / t;
        if xi <= -c_l {
            [self.h_l, 0.0]
        } else if xi < self.v_m - self.c_m {
            let c = (2.0 * c_l - xi) / 3.0;
            let v = 2.0 * (xi + c_l) / 3.0;
            let h = c * c / self.g;
            [h, h * v]
        } else if xi < self.shock_speed {
            let h = self.plateau_height();
            [h, h * self.v_m]
        } else {
            [self.h_r, 0.0]
        }
    }
}

// ---------------------------------------------------------------------------
// Exact Riemann solver for the 1D Euler equations.
// ---------------------------------------------------------------------------

/// Solved Riemann fan for ideal-gas Euler; primitive inputs `(ρ, v, p)`.
#[derive(Debug, Clone, Copy)]
pub struct EulerRiemann {
    pub gamma: f64,
    pub left: [f64; 3],
    pub right: [f64; 3],
    pub p_star: f64,
    pub v_star: f64,
}

impl EulerRiemann {
    /// Pressure function contribution of one side and its derivative.
    fn side_fn(gamma: f64, p: f64, rho_k: f64, p_k: f64) -> (f64, f64) {
        let c_k = (gamma * p_k / rho_k).sqrt();
        if p > p_k {
            let a = 2.0 / ((gamma + 1.0) * rho_k);
            let b = (gamma - 1.0) / (gamma + 1.0) * p_k;
            let sq = (a / (p + b)).sqrt();
            let f = (p - p_k) * sq;
            let df = sq * (1.0 - 0.5 * (p - p_k) / (p + b));
            (f, df)
        } else {
            let ex = (gamma - 1.0) / (2.0 * gamma);
            let f = 2.0 * c_k / (gamma - 1.0) * ((p / p_k).powf(ex) - 1.0);
            let df = (p / p_k).powf(-(gamma + 1.0) / (2.0 * gamma)) / (rho_k * c_k);
            (f, df)
        }
    }

    pub fn solve(left: [f64; 3], right: [f64; 3], gamma: f64) -> Result<Self> {
        let [rho_l, v_l, p_l] = left;
        let [rho_r, v_r, p_r] = right;
        if !(rho_l > 0.0 && p_l > 0.0 && rho_r > 0.0 && p_r > 0.0) {
            return Err(SolverError::Inadmissible(format!(
                "riemann data: {left:?} | {right:?}"
            )));
        }
        let c_l = (gamma * p_l / rho_l).sqrt();
        let c_r = (gamma * p_r / rho_r).sqrt();
        if 2.0 * (c_l + c_r) / (gamma - 1.0) <= v_r - v_l {
            return Err(SolverError::Vacuum);
        }
        let dv = v_r - v_l;
        // two-rarefaction initial guess, then safeguarded Newton
        let ex = (gamma - 1.0) / (2.0 * gamma);
        let guess = ((c_l + c_r - 0.5 * (gamma - 1.0) * dv)
            / (c_l / p_l.powf(ex) + c_r / p_r.powf(ex)))
        .powf(1.0 / ex);
        let mut p = guess.max(1e-14 * (p_l + p_r));
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        for _ in 0..200 {
            let (fl, dfl) = Self::side_fn(gamma, p, rho_l, p_l);
            let (fr, dfr) = Self::side_fn(gamma, p, rho_r, p_r);
            let g = fl + fr + dv;
            if g > 0.0 {
                hi = hi.min(p);
            } else {
                lo = lo.max(p);
            }
            let step = g / (dfl + dfr);
            let mut next = p - step;
            if !(next > lo && next < hi) {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * p };
            }
            if (next - p).abs() <= 1e-12 * p {
                p = next;
                break;
            }
            p = next;
        }
        let (fl, _) = Self::side_fn(gamma, p, rho_l, p_l);
        let (fr, _) = Self::side_fn(gamma, p, rho_r, p_r);
        let v_star = 0.5 * (v_l + v_r) + 0.5 * (fr - fl);
        Ok(Self {
            gamma,
            left,
            right,
            p_star: p,
            v_star,
        })
    }

    /// Primitive state `(ρ, v, p)` at similarity coordinate `ξ = x/t`.
    pub fn sample_primitive(&self, xi: f64) -> [f64; 3] {
        let g = self.gamma;
        let gm = g - 1.0;
        let gp = g + 1.0;
        let (p_star, v_star) = (self.p_star, self.v_star);
        if xi <= v_star {
            let [rho_k, v_k, p_k] = self.left;
            let c_k = (g * p_k / rho_k).sqrt();
            if p_star > p_k {
                let s = v_k - c_k * (0.5 * gp / g * p_star / p_k + 0.5 * gm / g).sqrt();
                if xi <= s {
                    [rho_k, v_k, p_k]
                } else {
                    let r = p_star / p_k;
                    let rho = rho_k * (r + gm / gp) / (gm / gp * r + 1.0);
                    [rho, v_star, p_star]
                }
            } else {
                let head = v_k - c_k;
                let c_star = c_k * (p_star / p_k).powf(gm / (2.0 * g));
                let tail = v_star - c_star;
                if xi <= head {
                    [rho_k, v_k, p_k]
                } else if xi >= tail {
                    [rho_k * (p_star / p_k).powf(1.0 / g), v_star, p_star]
                } else {
                    let fac = 2.0 / gp + gm / (gp * c_k) * (v_k - xi);
                    let rho = rho_k * fac.powf(2.0 / gm);
                    let v = 2.0 / gp * (c_k + 0.5 * gm * v_k + xi);
                    let p = p_k * fac.powf(2.0 * g / gm);
                    [rho, v, p]
                }
            }
        } else {
            let [rho_k, v_k, p_k] = self.right;
            let c_k = (g * p_k / rho_k).sqrt();
            if p_star > p_k {
                let s = v_k + c_k * (0.5 * gp / g * p_star / p_k + 0.5 * gm / g).sqrt();
                if xi >= s {
                    [rho_k, v_k, p_k]
                } else {
                    let r = p_star / p_k;
                    let rho = rho_k * (r + gm / gp) / (gm / gp * r + 1.0);
                    [rho, v_star, p_star]
                }
            } else {
                let head = v_k + c_k;
                let c_star = c_k * (p_star / p_k).powf(gm / (2.0 * g));
                let tail = v_star + c_star;
                if xi >= head {
                    [rho_k, v_k, p_k]
                } else if xi <= tail {
                    [rho_k * (p_star / p_k).powf(1.0 / g), v_star, p_star]
                } else {
                    let fac = 2.0 / gp - gm / (gp * c_k) * (v_k - xi);
                    let rho = rho_k * fac.powf(2.0 / gm);
                    let v = 2.0 / gp * (-c_k + 0.5 * gm * v_k + xi);
                    let p = p_k * fac.powf(2.0 * g / gm);
                    [rho, v, p]
                }
            }
        }
    }

    /// Conserved state at `(x, t)` for a jump initially at `x0`.
    pub fn eval(&self, x: f64, t: f64, x0: f64) -> [f64; 3] {
        debug_assert!(t > 0.0);
        let [rho, v, p] = self.sample_primitive((x - x0) / t);
        Euler::new(self.gamma).from_primitive(rho, v, p)
    }

    /// Extent `(head, tail)` of the left wave when it is a rarefaction.
    pub fn left_rarefaction_span(&self) -> Option<(f64, f64)> {
        let [rho_l, v_l, p_l] = self.left;
        if self.p_star > p_l {
            return None;
        }
        let g = self.gamma;
        let c_l = (g * p_l / rho_l).sqrt();
        let c_star = c_l * (self.p_star / p_l).powf((g - 1.0) / (2.0 * g));
        Some((v_l - c_l, self.v_star - c_star))
    }
}

// ---------------------------------------------------------------------------
// Sampled 1D reference (fine-grid runs, e.g. sine-shock interaction).
// ---------------------------------------------------------------------------

/// Nodal samples on a 1D grid with linear interpolation, clamped outside.
#[derive(Debug, Clone)]
pub struct Sampled1d<const M: usize> {
    pub x: Vec<f64>,
    pub values: Vec<[f64; M]>,
    pub kind: ReferenceKind,
}

impl<const M: usize> Sampled1d<M> {
    pub fn new(x: Vec<f64>, values: Vec<[f64; M]>, kind: ReferenceKind) -> Self {
        debug_assert!(x.len() == values.len() && x.len() >= 2);
        Self { x, values, kind }
    }

    pub fn eval(&self, x: f64) -> [f64; M] {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.values[0];
        }
        if x >= self.x[n - 1] {
            return self.values[n - 1];
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.x[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = (x - self.x[lo]) / (self.x[hi] - self.x[lo]);
        std::array::from_fn(|k| (1.0 - w) * self.values[lo][k] + w * self.values[hi][k])
    }
}
