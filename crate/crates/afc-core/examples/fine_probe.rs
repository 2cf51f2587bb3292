// Exploration: convergence orders at the finer ladder (64/128/256 for the
// second-order schemes, 128/256/512 for the low-order scheme).
use afc_core::bench::{convergence, DtScaling, ProblemId, RunConfig};
use afc_core::integrator::DtSpec;
use afc_core::limiter::{BoundKind, EntropyFix};
use afc_core::target::TargetKind;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("all");
    let cases: Vec<(&str, usize, TargetKind, bool, EntropyFix, DtScaling)> = vec![
        ("LO", 128, TargetKind::None, false, EntropyFix::None, DtScaling::H),
        ("BP", 64, TargetKind::Galerkin, true, EntropyFix::None, DtScaling::H),
        ("SD", 64, TargetKind::Galerkin, true, EntropyFix::Sd, DtScaling::H),
        ("FDE", 64, TargetKind::Galerkin, true, EntropyFix::Fde, DtScaling::H),
        ("FDI", 64, TargetKind::Galerkin, true, EntropyFix::Fdi, DtScaling::H),
        ("FDE-h2", 64, TargetKind::Galerkin, true, EntropyFix::Fde, DtScaling::H2),
    ];
    for (label, base, target, bp, fix, scaling) in cases {
        if which != "all" && which != label {
            continue;
        }
        let mut cfg = RunConfig::defaults(ProblemId::Kpp2dSmooth);
        cfg.cells = base;
        cfg.dt = DtSpec::Fixed(0.256 / base as f64);
        cfg.target = target;
        cfg.bp = bp;
        cfg.fix = fix;
        cfg.bound = BoundKind::Ed;
        cfg.audit_stride = usize::MAX;
        let start = Instant::now();
        match convergence(&cfg, 3, scaling) {
            Ok(rows) => {
                let eoc = afc_core::diagnostics::eoc_cauchy(rows[0].e1, rows[1].e1);
                println!("{label:>7} base {base}: EOC = {eoc:.3}  [{:?}]", start.elapsed());
            }
            Err(e) => println!("{label:>7} base {base}: failed: {e}"),
        }
    }
}
