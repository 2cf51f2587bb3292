//! Browser bindings for the interactive demo page: small presets of the
//! benchmark problems whose results are returned as flat `Float64Array`
//! buffers for canvas rendering.
//!
//! Buffer layouts:
//! * 1D profile runs: `[n, x_0.., monitored_0.., exact_0..]` (3n + 1 values;
//!   the exact block is omitted when no closed-form reference exists).
//! * 2D field runs: `[nx, ny, u_00..]` row-major nodal values.

use afc_core::bench::{run, ProblemId, RunConfig};
use afc_core::limiter::{BoundKind, EntropyFix};
use afc_core::reference::{kpp_rp1, kpp_rp2, DamBreakExact};
use afc_core::target::TargetKind;
use afc_core::{Result, SolverError};
use wasm_bindgen::prelude::wasm_bindgen;

/// Scheme label → (target, bound preserving, entropy fix, bound kind).
/// Labels follow the figure acronyms: `lo`, `ho`, `bp`, `sd-ec`, `sd-ed`,
/// `fde-ed`, `fdi-ed`, …, optionally prefixed `gt-`/`rt-` to pick the
/// target flux for systems.
pub fn parse_scheme(label: &str) -> Result<(TargetKind, bool, EntropyFix, BoundKind)> {
    let (target, rest) = if let Some(rest) = label.strip_prefix("rt-") {
        (TargetKind::Roe, rest)
    } else if let Some(rest) = label.strip_prefix("gt-") {
        (TargetKind::Galerkin, rest)
    } else {
        (TargetKind::Galerkin, label)
    };
    let (rest, bound) = if let Some(r) = rest.strip_suffix("-ec") {
        (r, BoundKind::Ec)
    } else if let Some(r) = rest.strip_suffix("-ed") {
        (r, BoundKind::Ed)
    } else {
        (rest, BoundKind::Ed)
    };
    let (target, bp, fix) = match rest {
        "lo" => (TargetKind::None, false, EntropyFix::None),
        "ho" => (target, false, EntropyFix::None),
        "bp" => (target, true, EntropyFix::None),
        "sd" => (target, true, EntropyFix::Sd),
        "fde" => (target, true, EntropyFix::Fde),
        "fdi" => (target, true, EntropyFix::Fdi),
        "berthon" => (target, true, EntropyFix::Berthon),
        other => {
            return Err(SolverError::InvalidConfig(format!(
                "unknown scheme '{other}'"
            )))
        }
    };
    Ok((target, bp, fix, bound))
}

fn configure(problem: ProblemId, scheme: &str, cells: usize, t_final: f64) -> Result<RunConfig> {
    let (target, bp, fix, bound) = parse_scheme(scheme)?;
    let mut cfg = RunConfig::defaults(problem);
    cfg = cfg.refined(cells.max(8), afc_core::bench::DtScaling::H);
    cfg.t_final = t_final;
    cfg.target = target;
    cfg.bp = bp;
    cfg.fix = fix;
    cfg.bound = bound;
    cfg.audit_stride = usize::MAX;
    Ok(cfg)
}

/// 1D profile of a KPP Riemann problem with its vanishing viscosity
/// solution.
pub fn kpp1d_profile(problem: &str, scheme: &str, cells: usize, t_final: f64) -> Result<Vec<f64>> {
    let (id, rp1) = match problem {
        "rp1" => (ProblemId::Kpp1dRp1, true),
        "rp2" => (ProblemId::Kpp1dRp2, false),
        other => {
            return Err(SolverError::InvalidConfig(format!(
                "unknown Riemann problem '{other}'"
            )))
        }
    };
    let cfg = configure(id, scheme, cells, t_final)?;
    let out = run(&cfg)?;
    let n = out.coords.len();
    let mut buf = Vec::with_capacity(1 + 3 * n);
    buf.push(n as f64);
    buf.extend(out.coords.iter().map(|c| c[0]));
    buf.extend(out.values.iter().map(|v| v[0]));
    buf.extend(out.coords.iter().map(|c| {
        if rp1 {
            kpp_rp1(c[0], t_final)
        } else {
            kpp_rp2(c[0], t_final)
        }
    }));
    Ok(buf)
}

/// Dam-break water height with the Stoker solution.
pub fn dambreak_profile(scheme: &str, cells: usize, t_final: f64) -> Result<Vec<f64>> {
    let cfg = configure(ProblemId::DamBreak, scheme, cells, t_final)?;
    let out = run(&cfg)?;
    let exact = DamBreakExact::new(1.0, 0.1, 1.0)?;
    let n = out.coords.len();
    let mut buf = Vec::with_capacity(1 + 3 * n);
    buf.push(n as f64);
    buf.extend(out.coords.iter().map(|c| c[0]));
    buf.extend(out.values.iter().map(|v| v[0]));
    buf.extend(out.coords.iter().map(|c| exact.eval(c[0], t_final)[0]));
    Ok(buf)
}

/// 2D rotating-wave field on an `n × n` mesh, row-major nodal values.
pub fn kpp2d_field(scheme: &str, cells: usize, t_final: f64) -> Result<Vec<f64>> {
    let cfg = configure(ProblemId::Kpp2d, scheme, cells, t_final)?;
    let out = run(&cfg)?;
    let (nx, ny) = out.grid;
    let mut buf = Vec::with_capacity(2 + nx * ny);
    buf.push(nx as f64);
    buf.push(ny as f64);
    buf.extend(out.values.iter().map(|v| v[0]));
    Ok(buf)
}

fn to_js<T>(r: Result<T>) -> std::result::Result<T, wasm_bindgen::JsValue> {
    r.map_err(|e| wasm_bindgen::JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn run_kpp1d(
    problem: &str,
    scheme: &str,
    cells: usize,
    t_final: f64,
) -> std::result::Result<Vec<f64>, wasm_bindgen::JsValue> {
    to_js(kpp1d_profile(problem, scheme, cells, t_final))
}

#[wasm_bindgen]
pub fn run_dambreak(
    scheme: &str,
    cells: usize,
    t_final: f64,
) -> std::result::Result<Vec<f64>, wasm_bindgen::JsValue> {
    to_js(dambreak_profile(scheme, cells, t_final))
}

#[wasm_bindgen]
pub fn run_kpp2d(
    scheme: &str,
    cells: usize,
    t_final: f64,
) -> std::result::Result<Vec<f64>, wasm_bindgen::JsValue> {
    to_js(kpp2d_field(scheme, cells, t_final))
}
