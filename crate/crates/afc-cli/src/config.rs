//! Flat `key = value` experiment configuration: one assignment per line,
//! `#` starts a comment, unknown keys are rejected with the offending line
//! number. The manifest a run writes uses the same format and parses back
//! to the identical resolved configuration.

use afc_core::bench::{ProblemId, RunConfig};
use afc_core::integrator::DtSpec;
use afc_core::limiter::{BoundKind, EntropyFix};
use afc_core::target::TargetKind;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError {
        message: format!("line {line}: {}", msg.into()),
    }
}

/// Resolved experiment: solver configuration plus driver-level settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub run: RunConfig,
    pub output_dir: PathBuf,
    /// CFL target when `dt = cfl`.
    pub cfl_nu: f64,
}

pub fn parse(text: &str) -> Result<Experiment, ConfigError> {
    let mut problem: Option<ProblemId> = None;
    // raw overrides, applied after the registry defaults are known
    let mut cells: Option<usize> = None;
    let mut dt_raw: Option<String> = None;
    let mut cfl_nu = 0.9;
    let mut t_final: Option<f64> = None;
    let mut target: Option<TargetKind> = None;
    let mut bp: Option<bool> = None;
    let mut fix: Option<EntropyFix> = None;
    let mut bound: Option<BoundKind> = None;
    let mut delta: Option<f64> = None;
    let mut fdi_tolerance: Option<f64> = None;
    let mut fdi_max_iterations: Option<usize> = None;
    let mut audit_stride: Option<usize> = None;
    let mut measure_error: Option<bool> = None;
    let mut output_dir: Option<PathBuf> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected 'key = value', got '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| err(line_no, format!("key '{key}': '{v}' is not a number")))
        };
        let parse_usize = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| err(line_no, format!("key '{key}': '{v}' is not an integer")))
        };
        let parse_bool = |v: &str| match v {
            "true" | "on" | "yes" => Ok(true),
            "false" | "off" | "no" => Ok(false),
            _ => Err(err(line_no, format!("key '{key}': '{v}' is not a boolean"))),
        };
        match key {
            "problem" => {
                problem =
                    Some(ProblemId::parse(value).map_err(|e| err(line_no, e.to_string()))?)
            }
            "cells" => cells = Some(parse_usize(value)?),
            "dt" => dt_raw = Some(value.to_string()),
            "cfl_nu" => cfl_nu = parse_f64(value)?,
            "t_final" => t_final = Some(parse_f64(value)?),
            "target" => {
                target = Some(match value {
                    "galerkin" => TargetKind::Galerkin,
                    "roe" => TargetKind::Roe,
                    "none" => TargetKind::None,
                    _ => {
                        return Err(err(
                            line_no,
                            format!("key 'target': '{value}' is not one of galerkin|roe|none"),
                        ))
                    }
                })
            }
            "bp" => bp = Some(parse_bool(value)?),
            "entropy_fix" => {
                fix = Some(match value {
                    "none" => EntropyFix::None,
                    "sd" => EntropyFix::Sd,
                    "fde" => EntropyFix::Fde,
                    "fdi" => EntropyFix::Fdi,
                    "berthon" => EntropyFix::Berthon,
                    _ => {
                        return Err(err(
                            line_no,
                            format!(
                                "key 'entropy_fix': '{value}' is not one of none|sd|fde|fdi|berthon"
                            ),
                        ))
                    }
                })
            }
            "bound" => {
                bound = Some(match value {
                    "ec" => BoundKind::Ec,
                    "ed" => BoundKind::Ed,
                    _ => {
                        return Err(err(
                            line_no,
                            format!("key 'bound': '{value}' is not one of ec|ed"),
                        ))
                    }
                })
            }
            "delta" => delta = Some(parse_f64(value)?),
            "fdi_tolerance" => fdi_tolerance = Some(parse_f64(value)?),
            "fdi_max_iterations" => fdi_max_iterations = Some(parse_usize(value)?),
            "audit_stride" => audit_stride = Some(parse_usize(value)?),
            "measure_error" => measure_error = Some(parse_bool(value)?),
            "output_dir" => output_dir = Some(PathBuf::from(value)),
            other => return Err(err(line_no, format!("unknown key '{other}'"))),
        }
    }

    let problem = problem.ok_or_else(|| ConfigError {
        message: "missing required key 'problem'".into(),
    })?;
    let mut run = RunConfig::defaults(problem);
    if let Some(c) = cells {
        // the registry time step follows Δt ∝ h unless overridden
        run = run.refined(c, afc_core::bench::DtScaling::H);
    }
    if let Some(raw) = dt_raw {
        run.dt = if raw == "cfl" {
            DtSpec::Cfl { nu: cfl_nu }
        } else {
            DtSpec::Fixed(raw.parse::<f64>().map_err(|_| ConfigError {
                message: format!("key 'dt': '{raw}' is neither a number nor 'cfl'"),
            })?)
        };
    }
    if let Some(t) = t_final {
        run.t_final = t;
    }
    if let Some(t) = target {
        run.target = t;
    }
    if let Some(b) = bp {
        run.bp = b;
    }
    if let Some(f) = fix {
        run.fix = f;
    }
    if let Some(b) = bound {
        run.bound = b;
    }
    if let Some(d) = delta {
        run.delta = d;
    }
    if let Some(t) = fdi_tolerance {
        run.fdi_tolerance = t;
    }
    if let Some(m) = fdi_max_iterations {
        run.fdi_max_iterations = m;
    }
    if let Some(s) = audit_stride {
        run.audit_stride = s;
    }
    if let Some(m) = measure_error {
        run.measure_error = m;
    }

    run.validate().map_err(|e| ConfigError {
        message: e.to_string(),
    })?;

    Ok(Experiment {
        run,
        output_dir: output_dir.unwrap_or_else(|| PathBuf::from(".")),
        cfl_nu,
    })
}

/// Serialize the resolved experiment; `parse(render(x)) == x`.
pub fn render(exp: &Experiment) -> String {
    let run = &exp.run;
    let mut s = String::new();
    let _ = writeln!(s, "problem = {}", run.problem.as_str());
    let _ = writeln!(s, "cells = {}", run.cells);
    match run.dt {
        DtSpec::Fixed(dt) => {
            let _ = writeln!(s, "dt = {dt:e}");
        }
        DtSpec::Cfl { nu } => {
            let _ = writeln!(s, "dt = cfl");
            let _ = writeln!(s, "cfl_nu = {nu:e}");
        }
    }
    let _ = writeln!(s, "t_final = {:e}", run.t_final);
    let _ = writeln!(
        s,
        "target = {}",
        match run.target {
            TargetKind::Galerkin => "galerkin",
            TargetKind::Roe => "roe",
            TargetKind::None => "none",
        }
    );
    let _ = writeln!(s, "bp = {}", run.bp);
    let _ = writeln!(
        s,
        "entropy_fix = {}",
        match run.fix {
            EntropyFix::None => "none",
            EntropyFix::Sd => "sd",
            EntropyFix::Fde => "fde",
            EntropyFix::Fdi => "fdi",
            EntropyFix::Berthon => "berthon",
        }
    );
    let _ = writeln!(
        s,
        "bound = {}",
        match run.bound {
            BoundKind::Ec => "ec",
            BoundKind::Ed => "ed",
        }
    );
    let _ = writeln!(s, "delta = {:e}", run.delta);
    let _ = writeln!(s, "fdi_tolerance = {:e}", run.fdi_tolerance);
    let _ = writeln!(s, "fdi_max_iterations = {}", run.fdi_max_iterations);
    let _ = writeln!(s, "audit_stride = {}", run.audit_stride);
    let _ = writeln!(s, "measure_error = {}", run.measure_error);
    let _ = writeln!(s, "output_dir = {}", exp.output_dir.display());
    s
}
