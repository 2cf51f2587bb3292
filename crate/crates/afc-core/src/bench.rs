//! Benchmark registry and run orchestration.
//!
//! Each problem id carries the experiment defaults (mesh, time step,
//! final time, boundary treatment, initial data, reference solution). The
//! runner marches the configured scheme and collects the solution field,
//! per-step diagnostics, and accumulated audit extrema; the convergence
//! driver repeats a run over refined meshes and reports errors and
//! experimental orders of convergence.

use crate::diagnostics::{
    eoc, l1_error_1d, total_variation_1d, total_variation_2d, DiagnosticsRecord,
};
use crate::error::SolverError;
use crate::integrator::{DtSpec, RoeFn, Solver, TimeControls};
use crate::limiter::{BoundKind, EntropyFix, LimiterConfig};
use crate::mesh::{build_line_mesh, build_quad_mesh, BoundaryKind, MeshTopology};
use crate::model::{Euler, FluxModel, Kpp1d, Kpp2d, RoeModel, ShallowWater};
use crate::reference::{kpp_rp1, kpp_rp2, DamBreakExact, EulerRiemann, ReferenceKind, Sampled1d};
use crate::system::{BoundaryCondition, EdgeSystem, SideBc};
use crate::target::TargetKind;
use crate::Result;

pub const PROBLEM_IDS: [&str; 11] = [
    "kpp1d-rp1",
    "kpp1d-rp2",
    "kpp2d",
    "kpp2d-smooth",
    "dambreak",
    "sod",
    "modsod",
    "einfeldt",
    "moschetta1",
    "moschetta2",
    "shuosher",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    Kpp1dRp1,
    Kpp1dRp2,
    Kpp2d,
    Kpp2dSmooth,
    DamBreak,
    Sod,
    ModSod,
    Einfeldt,
    Moschetta1,
    Moschetta2,
    ShuOsher,
}

impl ProblemId {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "kpp1d-rp1" => Self::Kpp1dRp1,
            "kpp1d-rp2" => Self::Kpp1dRp2,
            "kpp2d" => Self::Kpp2d,
            "kpp2d-smooth" => Self::Kpp2dSmooth,
            "dambreak" => Self::DamBreak,
            "sod" => Self::Sod,
            "modsod" => Self::ModSod,
            "einfeldt" => Self::Einfeldt,
            "moschetta1" => Self::Moschetta1,
            "moschetta2" => Self::Moschetta2,
            "shuosher" => Self::ShuOsher,
            other => {
                return Err(SolverError::InvalidConfig(format!(
                    "unknown problem '{other}' (known: {})",
                    PROBLEM_IDS.join(", ")
                )))
            }
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Kpp1dRp1 => "kpp1d-rp1",
            Self::Kpp1dRp2 => "kpp1d-rp2",
            Self::Kpp2d => "kpp2d",
            Self::Kpp2dSmooth => "kpp2d-smooth",
            Self::DamBreak => "dambreak",
            Self::Sod => "sod",
            Self::ModSod => "modsod",
            Self::Einfeldt => "einfeldt",
            Self::Moschetta1 => "moschetta1",
            Self::Moschetta2 => "moschetta2",
            Self::ShuOsher => "shuosher",
        }
    }

    pub fn is_2d(&self) -> bool {
        matches!(self, Self::Kpp2d | Self::Kpp2dSmooth)
    }

    pub fn is_periodic(&self) -> bool {
        self.is_2d()
    }

    /// Systems admit the Roe target; scalar problems do not.
    pub fn supports_roe(&self) -> bool {
        !matches!(
            self,
            Self::Kpp1dRp1 | Self::Kpp1dRp2 | Self::Kpp2d | Self::Kpp2dSmooth
        )
    }

    /// `(default cells per dimension, default Δt at that resolution,
    /// default final time)`. The time step follows `Δt ∝ h` when the mesh
    /// is refined away from the default resolution.
    pub fn defaults(&self) -> (usize, f64, f64) {
        match self {
            Self::Kpp1dRp1 => (128, 5e-3, 1.0),
            Self::Kpp1dRp2 => (128, 5e-3, 2.0),
            Self::Kpp2d => (128, 1e-3, 1.0),
            // Δt/h = 0.256 with h = 1/cells
            Self::Kpp2dSmooth => (64, 0.256 / 64.0, 1.0),
            // Δt = 0.25 h
            Self::DamBreak => (128, 0.25 / 128.0, 0.3),
            Self::Sod => (128, 1e-3, 0.231),
            Self::ModSod => (128, 1e-3, 0.2),
            Self::Einfeldt => (200, 4e-4, 0.1),
            Self::Moschetta1 => (200, 4e-4, 0.35),
            Self::Moschetta2 => (200, 5e-6, 0.055),
            Self::ShuOsher => (500, 2e-3, 1.8),
        }
    }
}

/// Time-step refinement rule of the convergence driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtScaling {
    /// `Δt ∝ h`.
    H,
    /// `Δt ∝ h²`.
    H2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub cells: usize,
    pub dt: DtSpec,
    pub t_final: f64,
    pub target: TargetKind,
    pub bp: bool,
    pub fix: EntropyFix,
    pub bound: BoundKind,
    pub delta: f64,
    pub fdi_tolerance: f64,
    pub fdi_max_iterations: usize,
    /// Audit cadence in steps (1 = every step).
    pub audit_stride: usize,
    /// Also compute the reference error when the reference is expensive
    /// (fine-grid self-reference).
    pub measure_error: bool,
}

impl RunConfig {
    /// Registry defaults for a problem.
    pub fn defaults(problem: ProblemId) -> Self {
        let (cells, dt, t_final) = problem.defaults();
        Self {
            problem,
            cells,
            dt: DtSpec::Fixed(dt),
            t_final,
            target: TargetKind::Galerkin,
            bp: true,
            fix: EntropyFix::Sd,
            bound: BoundKind::Ed,
            delta: 1e-2,
            fdi_tolerance: 1e-8,
            fdi_max_iterations: 100,
            audit_stride: 1,
            measure_error: false,
        }
    }

    /// Same config on a different mesh, with the default time step scaled
    /// along (used by the convergence driver; explicit Δt overrides scale
    /// relative to the configured resolution).
    pub fn refined(&self, cells: usize, scaling: DtScaling) -> Self {
        let mut out = self.clone();
        out.cells = cells;
        if let DtSpec::Fixed(dt) = self.dt {
            let ratio = self.cells as f64 / cells as f64;
            let factor = match scaling {
                DtScaling::H => ratio,
                DtScaling::H2 => ratio * ratio,
            };
            out.dt = DtSpec::Fixed(dt * factor);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 2 {
            return Err(SolverError::InvalidConfig("cells must be >= 2".into()));
        }
        if let DtSpec::Fixed(dt) = self.dt {
            if !(dt >= 0.0) || !dt.is_finite() {
                return Err(SolverError::InvalidConfig(format!("bad dt {dt}")));
            }
        }
        if let DtSpec::Cfl { nu } = self.dt {
            if !(nu > 0.0 && nu <= 1.0) {
                return Err(SolverError::InvalidConfig(format!(
                    "cfl number must be in (0, 1], got {nu}"
                )));
            }
        }
        if !(self.t_final > 0.0) {
            return Err(SolverError::InvalidConfig("t_final must be positive".into()));
        }
        if self.target == TargetKind::Roe && !self.problem.supports_roe() {
            return Err(SolverError::InvalidConfig(
                "the Roe target applies to 1D systems only".into(),
            ));
        }
        if self.audit_stride == 0 {
            return Err(SolverError::InvalidConfig("audit_stride must be >= 1".into()));
        }
        self.limiter_config().validate()
    }

    pub fn limiter_config(&self) -> LimiterConfig {
        LimiterConfig {
            bp: self.bp,
            fix: self.fix,
            bound: self.bound,
            delta: self.delta,
            fdi_tolerance: self.fdi_tolerance,
            fdi_max_iterations: self.fdi_max_iterations,
        }
    }
}

/// Everything a finished run exposes to drivers, CSV writers, and tests.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub coord_names: Vec<&'static str>,
    pub component_names: Vec<&'static str>,
    /// Node coordinates, one row per real node.
    pub coords: Vec<Vec<f64>>,
    /// Final solution, one row per real node.
    pub values: Vec<Vec<f64>>,
    /// Physical lumped masses of the real nodes.
    pub masses: Vec<f64>,
    pub periodic: bool,
    /// Nodes per direction `(nx, ny)`; `ny = 1` in 1D.
    pub grid: (usize, usize),
    pub diagnostics: Vec<DiagnosticsRecord>,
    /// Entropy totals after each stage of every audited step.
    pub stage_entropy: Vec<[f64; 3]>,
    pub min_monitored: f64,
    pub max_monitored: f64,
    pub max_tadmor_excess: f64,
    pub max_es4_excess: f64,
    pub max_cfl: f64,
    pub max_fdi_iterations: usize,
    pub steps: usize,
    /// L¹ distance to the reference solution, when one is bound.
    pub e1: Option<f64>,
}

struct MarchStats {
    diagnostics: Vec<DiagnosticsRecord>,
    stage_entropy: Vec<[f64; 3]>,
    min_monitored: f64,
    max_monitored: f64,
    max_tadmor_excess: f64,
    max_es4_excess: f64,
    max_cfl: f64,
    max_fdi_iterations: usize,
    steps: usize,
}

fn march<const M: usize, const D: usize, F: FluxModel<M, D>>(
    solver: &mut Solver<M, D, F>,
    u: &mut Vec<[f64; M]>,
    cfg: &RunConfig,
    tv: impl Fn(&F, &[[f64; M]]) -> f64,
) -> Result<MarchStats> {
    let controls = TimeControls {
        dt: cfg.dt,
        t_final: cfg.t_final,
    };
    let mut stats = MarchStats {
        diagnostics: Vec::new(),
        stage_entropy: Vec::new(),
        min_monitored: f64::INFINITY,
        max_monitored: f64::NEG_INFINITY,
        max_tadmor_excess: f64::NEG_INFINITY,
        max_es4_excess: f64::NEG_INFINITY,
        max_cfl: 0.0,
        max_fdi_iterations: 0,
        steps: 0,
    };
    let record =
        |solver: &Solver<M, D, F>, u: &Vec<[f64; M]>, t: f64, tadmor: f64, es4: f64| -> Result<DiagnosticsRecord> {
            let mass = solver.sys.conserved_totals(u).to_vec();
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for ui in u.iter().take(solver.sys.n_real) {
                let m = solver.model.monitored(ui);
                lo = lo.min(m);
                hi = hi.max(m);
            }
            Ok(DiagnosticsRecord {
                t,
                mass,
                entropy: solver.entropy_total(u)?,
                min_monitored: lo,
                max_monitored: hi,
                max_tadmor_residual: tadmor,
                max_es4_residual: es4,
                total_variation: tv(&solver.model, u),
            })
        };

    let initial = record(solver, u, 0.0, 0.0, 0.0)?;
    stats.min_monitored = initial.min_monitored;
    stats.max_monitored = initial.max_monitored;
    stats.diagnostics.push(initial);

    let mut t = 0.0;
    let t_final = controls.t_final;
    let eps = 1e-12 * t_final;
    while t < t_final - eps {
        let dt = match controls.dt {
            DtSpec::Fixed(dt) => dt,
            DtSpec::Cfl { nu } => solver.suggest_dt(u, nu)?,
        }
        .min(t_final - t);
        if !(dt > 0.0) {
            return Err(SolverError::Abort(format!("time step collapsed to {dt}")));
        }
        stats.steps += 1;
        let audit = stats.steps % cfg.audit_stride == 0 || t + dt >= t_final - eps;
        let report = solver.step(u, dt, audit)?;
        t += dt;
        stats.min_monitored = stats.min_monitored.min(report.min_monitored);
        stats.max_monitored = stats.max_monitored.max(report.max_monitored);
        stats.max_cfl = stats.max_cfl.max(report.c_max);
        stats.max_fdi_iterations = stats.max_fdi_iterations.max(report.fdi_iterations);
        if let Some(a) = report.audit {
            stats.max_tadmor_excess = stats.max_tadmor_excess.max(a.tadmor_excess);
            stats.max_es4_excess = stats.max_es4_excess.max(a.es4_excess);
            stats.stage_entropy.push(a.stage_entropy);
            stats
                .diagnostics
                .push(record(solver, u, t, a.tadmor_excess, a.es4_excess)?);
        }
    }
    if !stats.max_tadmor_excess.is_finite() {
        stats.max_tadmor_excess = 0.0;
        stats.max_es4_excess = 0.0;
    }
    Ok(stats)
}

fn build_1d_system<const M: usize>(
    cfg: &RunConfig,
    interval: [f64; 2],
    boundary: BoundaryKind,
    left_state: Option<[f64; M]>,
) -> Result<(MeshTopology<1>, EdgeSystem<M, 1>)> {
    let mesh = build_line_mesh(cfg.cells, interval, boundary)?;
    let bc = match boundary {
        BoundaryKind::Periodic => BoundaryCondition::Periodic,
        BoundaryKind::Wall => BoundaryCondition::Sides {
            left: SideBc::Wall,
            right: SideBc::Wall,
        },
        BoundaryKind::InflowOutflow => BoundaryCondition::Sides {
            left: SideBc::Inflow(left_state.ok_or_else(|| {
                SolverError::InvalidConfig("inflow boundary without an exterior state".into())
            })?),
            right: SideBc::Outflow,
        },
        BoundaryKind::Transmissive => BoundaryCondition::Sides {
            left: SideBc::Outflow,
            right: SideBc::Outflow,
        },
    };
    let sys = EdgeSystem::build(&mesh, &bc)?;
    Ok((mesh, sys))
}

fn assemble_output<const M: usize, const D: usize, F: FluxModel<M, D>>(
    cfg: &RunConfig,
    model: &F,
    mesh: &MeshTopology<D>,
    grid: (usize, usize),
    u: &[[f64; M]],
    stats: MarchStats,
    e1: Option<f64>,
) -> RunOutput {
    let n = mesh.n_nodes;
    RunOutput {
        config: cfg.clone(),
        coord_names: if D == 1 { vec!["x"] } else { vec!["x", "y"] },
        component_names: model.component_names().to_vec(),
        coords: mesh.coords.iter().map(|c| c.to_vec()).collect(),
        values: u.iter().take(n).map(|v| v.to_vec()).collect(),
        masses: mesh.lumped_mass.clone(),
        periodic: mesh.periodic,
        grid,
        diagnostics: stats.diagnostics,
        stage_entropy: stats.stage_entropy,
        min_monitored: stats.min_monitored,
        max_monitored: stats.max_monitored,
        max_tadmor_excess: stats.max_tadmor_excess,
        max_es4_excess: stats.max_es4_excess,
        max_cfl: stats.max_cfl,
        max_fdi_iterations: stats.max_fdi_iterations,
        steps: stats.steps,
        e1,
    }
}

fn tv_1d<const M: usize, F: FluxModel<M, 1>>(mesh_periodic: bool) -> impl Fn(&F, &[[f64; M]]) -> f64 {
    move |model: &F, u: &[[f64; M]]| {
        let vals: Vec<f64> = u.iter().map(|ui| model.monitored(ui)).collect();
        total_variation_1d(&vals, mesh_periodic)
    }
}

// ---------------------------------------------------------------------------
// Per-family drivers.
// ---------------------------------------------------------------------------

fn run_kpp1d(cfg: &RunConfig) -> Result<RunOutput> {
    let rp1 = cfg.problem == ProblemId::Kpp1dRp1;
    let (left, right) = if rp1 { (0.0, 1.0) } else { (1.0, 0.0) };
    let model = Kpp1d::default();
    let (mesh, sys) =
        build_1d_system::<1>(cfg, [0.0, 1.0], BoundaryKind::InflowOutflow, Some([left]))?;
    let n = mesh.n_nodes;
    let mut solver = Solver::new(model, sys, cfg.target, cfg.limiter_config())?;
    let u0: Vec<[f64; 1]> = mesh
        .coords
        .iter()
        .map(|x| [if x[0] < 0.25 { left } else { right }])
        .collect();
    let mut u = solver.prepare_state(u0)?;
    // real nodes only in TV and output
    let stats = march(&mut solver, &mut u, cfg, move |model, u| {
        let vals: Vec<f64> = u.iter().take(n).map(|ui| model.monitored(ui)).collect();
        total_variation_1d(&vals, false)
    })?;
    let t = cfg.t_final;
    let exact = move |x: f64| -> [f64; 1] { [if rp1 { kpp_rp1(x, t) } else { kpp_rp2(x, t) }] };
    let coords1: Vec<f64> = mesh.coords.iter().map(|c| c[0]).collect();
    let e1 = Some(l1_error_1d(&coords1, &u[..n], false, exact));
    Ok(assemble_output(cfg, &solver.model, &mesh, (n, 1), &u, stats, e1))
}

fn run_kpp2d(cfg: &RunConfig) -> Result<RunOutput> {
    let smooth = cfg.problem == ProblemId::Kpp2dSmooth;
    let quarter_pi = std::f64::consts::FRAC_PI_4;
    let (lo, hi) = if smooth {
        (quarter_pi, quarter_pi * 1.1)
    } else {
        (quarter_pi, 3.5 * std::f64::consts::PI)
    };
    let model = Kpp2d::new(lo, hi);
    let n = cfg.cells;
    let mesh = build_quad_mesh(n, n, [[-2.0, 2.0], [-2.5, 1.5]], BoundaryKind::Periodic)?;
    let sys = EdgeSystem::build(&mesh, &BoundaryCondition::Periodic)?;
    let mut solver = Solver::new(model, sys, cfg.target, cfg.limiter_config())?;
    let u0: Vec<[f64; 1]> = mesh
        .coords
        .iter()
        .map(|c| {
            let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
            if smooth {
                if r <= 1.0 {
                    [quarter_pi * (1.0 + 0.05 * (1.0 + (std::f64::consts::PI * r).cos()))]
                } else {
                    [quarter_pi]
                }
            } else if r <= 1.0 {
                [3.5 * std::f64::consts::PI]
            } else {
                [quarter_pi]
            }
        })
        .collect();
    let mut u = solver.prepare_state(u0)?;
    let stats = march(&mut solver, &mut u, cfg, move |model, u| {
        let vals: Vec<f64> = u.iter().take(n * n).map(|ui| model.monitored(ui)).collect();
        total_variation_2d(&vals, n, n)
    })?;
    Ok(assemble_output(cfg, &solver.model, &mesh, (n, n), &u, stats, None))
}

fn run_dambreak(cfg: &RunConfig) -> Result<RunOutput> {
    let model = ShallowWater::new(1.0);
    let (mesh, sys) = build_1d_system::<2>(cfg, [-0.5, 0.5], BoundaryKind::Wall, None)?;
    let n = mesh.n_nodes;
    let mut solver = Solver::new(model, sys, cfg.target, cfg.limiter_config())?;
    if cfg.target == TargetKind::Roe {
        solver.set_roe(roe_fn_of(model));
    }
    let u0: Vec<[f64; 2]> = mesh
        .coords
        .iter()
        .map(|x| if x[0] < 0.0 { [1.0, 0.0] } else { [0.1, 0.0] })
        .collect();
    let mut u = solver.prepare_state(u0)?;
    let stats = march(&mut solver, &mut u, cfg, tv_1d(false))?;
    let exact = DamBreakExact::new(1.0, 0.1, 1.0)?;
    let t = cfg.t_final;
    let coords1: Vec<f64> = mesh.coords.iter().map(|c| c[0]).collect();
    // e1 sums the water height and velocity errors (the measure behind
    // the reported convergence tables)
    let prim: Vec<[f64; 2]> = u[..n].iter().map(|w| [w[0], w[1] / w[0]]).collect();
    let e1 = Some(l1_error_1d(&coords1, &prim, false, |x| {
        let w = exact.eval(x, t);
        [w[0], w[1] / w[0]]
    }));
    Ok(assemble_output(cfg, &solver.model, &mesh, (n, 1), &u, stats, e1))
}

/// Euler case definition: primitive left/right data, jump position,
/// boundary treatment.
struct EulerCase {
    left: [f64; 3],
    right: [f64; 3],
    x0: f64,
    interval: [f64; 2],
    boundary: BoundaryKind,
}

fn euler_case(problem: ProblemId) -> Option<EulerCase> {
    // (ρ, v, p) primitives
    match problem {
        ProblemId::Sod => Some(EulerCase {
            left: [1.0, 0.0, 1.0],
            right: [0.125, 0.0, 0.1],
            x0: 0.5,
            interval: [0.0, 1.0],
            boundary: BoundaryKind::Wall,
        }),
        ProblemId::ModSod => Some(EulerCase {
            left: [1.0, 0.75, 1.0],
            right: [0.125, 0.0, 0.1],
            x0: 0.3,
            interval: [0.0, 1.0],
            boundary: BoundaryKind::InflowOutflow,
        }),
        // receding flow, velocities ±c_R/2 with c_R = 4
        ProblemId::Einfeldt => Some(EulerCase {
            left: [1.0, -2.0, 0.4],
            right: [1.0, 2.0, 0.4],
            x0: 0.5,
            interval: [0.0, 1.0],
            boundary: BoundaryKind::Transmissive,
        }),
        // slowly moving Mach 1.5 shock (reconstructed sonic-glitch case)
        ProblemId::Moschetta1 => Some(EulerCase {
            left: [1.862068965517241, 0.8216777476527243, 2.458333333333333],
            right: [1.0, 0.0, 1.0],
            x0: 0.2,
            interval: [0.0, 1.0],
            boundary: BoundaryKind::InflowOutflow,
        }),
        // strong Mach 10 shock (reconstructed sonic-glitch case)
        ProblemId::Moschetta2 => Some(EulerCase {
            left: [5.714285714285714, 9.761531642114367, 116.5],
            right: [1.0, 0.0, 1.0],
            x0: 0.1,
            interval: [0.0, 1.0],
            boundary: BoundaryKind::InflowOutflow,
        }),
        _ => None,
    }
}

fn roe_fn_of<const M: usize, F: RoeModel<M> + Copy + 'static>(model: F) -> RoeFn<M> {
    Box::new(move |ui, uj, d| model.abs_roe_jacobian_times(ui, uj, d))
}

fn run_euler_riemann_case(cfg: &RunConfig) -> Result<RunOutput> {
    let model = Euler::new(1.4);
    let case = euler_case(cfg.problem).expect("registered Euler case");
    let left_state = model.from_primitive(case.left[0], case.left[1], case.left[2]);
    let (mesh, sys) = build_1d_system::<3>(cfg, case.interval, case.boundary, Some(left_state))?;
    let n = mesh.n_nodes;
    let mut solver = Solver::new(model, sys, cfg.target, cfg.limiter_config())?;
    if cfg.target == TargetKind::Roe {
        solver.set_roe(roe_fn_of(model));
    }
    let u0: Vec<[f64; 3]> = mesh
        .coords
        .iter()
        .map(|x| {
            let w = if x[0] < case.x0 { case.left } else { case.right };
            model.from_primitive(w[0], w[1], w[2])
        })
        .collect();
    let mut u = solver.prepare_state(u0)?;
    let stats = march(&mut solver, &mut u, cfg, tv_1d(false))?;
    let exact = EulerRiemann::solve(case.left, case.right, model.gamma)?;
    let t = cfg.t_final;
    let coords1: Vec<f64> = mesh.coords.iter().map(|c| c[0]).collect();
    let e1 = Some(l1_error_1d(&coords1, &u[..n], false, |x| {
        exact.eval(x, t, case.x0)
    }));
    Ok(assemble_output(cfg, &solver.model, &mesh, (n, 1), &u, stats, e1))
}

fn shu_osher_initial(model: &Euler, x: f64) -> [f64; 3] {
    if x < -4.0 {
        model.from_primitive(3.857143, 2.629369, 10.33333)
    } else {
        model.from_primitive(1.0 + 0.2 * (5.0 * x).sin(), 0.0, 1.0)
    }
}

fn run_shu_osher(cfg: &RunConfig) -> Result<RunOutput> {
    let model = Euler::new(1.4);
    let left_state = model.from_primitive(3.857143, 2.629369, 10.33333);
    let (mesh, sys) =
        build_1d_system::<3>(cfg, [-5.0, 5.0], BoundaryKind::InflowOutflow, Some(left_state))?;
    let n = mesh.n_nodes;
    let mut solver = Solver::new(model, sys, cfg.target, cfg.limiter_config())?;
    if cfg.target == TargetKind::Roe {
        solver.set_roe(roe_fn_of(model));
    }
    let u0: Vec<[f64; 3]> = mesh
        .coords
        .iter()
        .map(|x| shu_osher_initial(&model, x[0]))
        .collect();
    let mut u = solver.prepare_state(u0)?;
    let stats = march(&mut solver, &mut u, cfg, tv_1d(false))?;
    let e1 = if cfg.measure_error {
        let reference = shu_osher_reference(cfg, 4)?;
        let coords1: Vec<f64> = mesh.coords.iter().map(|c| c[0]).collect();
        Some(l1_error_1d(&coords1, &u[..n], false, |x| reference.eval(x)))
    } else {
        None
    };
    Ok(assemble_output(cfg, &solver.model, &mesh, (n, 1), &u, stats, e1))
}

/// Fine-grid self-reference: the bound-preserving Galerkin-target scheme
/// at `factor ×` the requested resolution.
pub fn shu_osher_reference(cfg: &RunConfig, factor: usize) -> Result<Sampled1d<3>> {
    let mut ref_cfg = cfg.refined(cfg.cells * factor, DtScaling::H);
    ref_cfg.target = TargetKind::Galerkin;
    ref_cfg.bp = true;
    ref_cfg.fix = EntropyFix::None;
    ref_cfg.measure_error = false;
    ref_cfg.audit_stride = usize::MAX;
    let out = run_shu_osher(&ref_cfg)?;
    let x: Vec<f64> = out.coords.iter().map(|c| c[0]).collect();
    let values: Vec<[f64; 3]> = out
        .values
        .iter()
        .map(|v| [v[0], v[1], v[2]])
        .collect();
    Ok(Sampled1d::new(x, values, ReferenceKind::FineGrid))
}

/// Run one configured benchmark.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.problem {
        ProblemId::Kpp1dRp1 | ProblemId::Kpp1dRp2 => run_kpp1d(cfg),
        ProblemId::Kpp2d | ProblemId::Kpp2dSmooth => run_kpp2d(cfg),
        ProblemId::DamBreak => run_dambreak(cfg),
        ProblemId::ShuOsher => run_shu_osher(cfg),
        _ => run_euler_riemann_case(cfg),
    }
}

// ---------------------------------------------------------------------------
// Convergence driver.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub e1: f64,
    pub eoc: Option<f64>,
}

/// Run a refinement ladder starting from `config.cells`, doubling per
/// level. Problems with a bound reference report errors against it;
/// otherwise successive-solution (Cauchy) differences are used, so the
/// table then has `levels − 1` rows.
pub fn convergence(cfg: &RunConfig, levels: usize, scaling: DtScaling) -> Result<Vec<ConvergenceRow>> {
    if levels < 2 {
        return Err(SolverError::InvalidConfig(
            "convergence needs at least 2 levels".into(),
        ));
    }
    cfg.validate()?;
    let has_reference = cfg.problem != ProblemId::Kpp2d && cfg.problem != ProblemId::Kpp2dSmooth;
    let mut outputs = Vec::new();
    for level in 0..levels {
        let cells = cfg.cells << level;
        let mut level_cfg = cfg.refined(cells, scaling);
        level_cfg.measure_error = has_reference;
        level_cfg.audit_stride = usize::MAX;
        outputs.push(run(&level_cfg)?);
    }
    let mut rows = Vec::new();
    if has_reference {
        let mut prev: Option<f64> = None;
        for out in &outputs {
            let e1 = out.e1.expect("reference error");
            let eoc_val = prev.map(|p| eoc(p, e1, 2.0));
            rows.push(ConvergenceRow {
                cells: out.config.cells,
                e1,
                eoc: eoc_val,
            });
            prev = Some(e1);
        }
    } else {
        // Cauchy differences on nested meshes, restricted to coarse nodes
        let mut prev: Option<f64> = None;
        for pair in outputs.windows(2) {
            let coarse = &pair[0];
            let fine = &pair[1];
            let e1 = cauchy_difference_l1(coarse, fine)?;
            let eoc_val = prev.map(|p| eoc(p, e1, 2.0));
            rows.push(ConvergenceRow {
                cells: coarse.config.cells,
                e1,
                eoc: eoc_val,
            });
            prev = Some(e1);
        }
    }
    Ok(rows)
}

/// Discrete L¹ distance between a run and the next refinement level,
/// sampled at the coarse nodes (which are a subset of the fine nodes).
pub fn cauchy_difference_l1(coarse: &RunOutput, fine: &RunOutput) -> Result<f64> {
    let (nxc, nyc) = coarse.grid;
    let (nxf, _nyf) = fine.grid;
    if nxf != 2 * nxc && !(fine.periodic && nxf == 2 * nxc) {
        return Err(SolverError::InvalidConfig(format!(
            "meshes are not nested: {nxc} vs {nxf}"
        )));
    }
    let m = coarse.component_names.len();
    let mut s = 0.0;
    for iy in 0..nyc {
        for ix in 0..nxc {
            let ic = iy * nxc + ix;
            let ifn = (2 * iy) * nxf + 2 * ix;
            for k in 0..m {
                s += coarse.masses[ic] * (coarse.values[ic][k] - fine.values[ifn][k]).abs();
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_roundtrip() {
        for id in PROBLEM_IDS {
            assert_eq!(ProblemId::parse(id).unwrap().as_str(), id);
        }
        assert!(ProblemId::parse("nope").is_err());
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = RunConfig::defaults(ProblemId::Kpp1dRp1);
        cfg.target = TargetKind::Roe;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::defaults(ProblemId::Sod);
        cfg.dt = DtSpec::Cfl { nu: 1.5 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn einfeldt_case_resolves_cr4() {
        let case = euler_case(ProblemId::Einfeldt).unwrap();
        assert_eq!(case.left[1], -2.0);
        assert_eq!(case.right[1], 2.0);
    }

    /// The inlet exterior state of the modified shock tube in conserved
    /// variables is (1, 0.75, 89/32).
    #[test]
    fn modsod_inlet_state() {
        let case = euler_case(ProblemId::ModSod).unwrap();
        let model = Euler::new(1.4);
        let u = model.from_primitive(case.left[0], case.left[1], case.left[2]);
        assert!((u[0] - 1.0).abs() < 1e-15);
        assert!((u[1] - 0.75).abs() < 1e-15);
        assert!((u[2] - 89.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn small_kpp1d_run_produces_consistent_output() {
        let mut cfg = RunConfig::defaults(ProblemId::Kpp1dRp1);
        cfg.cells = 32;
        cfg.dt = DtSpec::Fixed(2e-2);
        cfg.t_final = 0.2;
        cfg.audit_stride = 4;
        let out = run(&cfg).unwrap();
        assert_eq!(out.coords.len(), 33);
        assert_eq!(out.values.len(), 33);
        assert!(out.e1.unwrap() > 0.0);
        assert!(out.min_monitored >= -1e-12);
        assert!(out.max_monitored <= 1.0 + 1e-12);
        assert!(out.steps == 10);
        // includes the t = 0 record and the final step
        assert!(out.diagnostics.len() >= 3);
        assert!((out.diagnostics.last().unwrap().t - 0.2).abs() < 1e-12);
    }

    #[test]
    fn cfl_derived_steps_run() {
        let mut cfg = RunConfig::defaults(ProblemId::Kpp1dRp1);
        cfg.cells = 32;
        cfg.dt = DtSpec::Cfl { nu: 0.9 };
        cfg.t_final = 0.05;
        cfg.audit_stride = usize::MAX;
        let out = run(&cfg).unwrap();
        assert!(out.max_cfl <= 0.9 + 1e-12);
    }

    #[test]
    fn refinement_scales_dt() {
        let cfg = RunConfig::defaults(ProblemId::DamBreak);
        let r = cfg.refined(256, DtScaling::H);
        match r.dt {
            DtSpec::Fixed(dt) => assert!((dt - 0.25 / 256.0).abs() < 1e-15),
            _ => panic!(),
        }
        let r2 = cfg.refined(256, DtScaling::H2);
        match r2.dt {
            DtSpec::Fixed(dt) => assert!((dt - 0.25 / 512.0).abs() < 1e-15),
            _ => panic!(),
        }
    }
}
