//! CSV and manifest emission. Numbers are printed in scientific notation
//! with 17 significant digits and rows follow node order, so identical
//! configurations produce byte-identical files.

use afc_core::bench::{ConvergenceRow, RunOutput};
use std::fmt::Write as _;

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn solution_csv(out: &RunOutput) -> String {
    let mut s = String::new();
    let mut header: Vec<&str> = out.coord_names.clone();
    header.extend(out.component_names.iter());
    let _ = writeln!(s, "{}", header.join(","));
    for (coord, value) in out.coords.iter().zip(out.values.iter()) {
        let row: Vec<String> = coord.iter().chain(value.iter()).map(|&x| fmt(x)).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn diagnostics_csv(out: &RunOutput) -> String {
    let mut s = String::new();
    let mut header = vec!["t".to_string()];
    for k in 1..=out.component_names.len() {
        header.push(format!("total_mass_{k}"));
    }
    header.extend(
        [
            "total_entropy",
            "min",
            "max",
            "max_tadmor_residual",
            "max_es4_residual",
            "tv",
        ]
        .map(String::from),
    );
    let _ = writeln!(s, "{}", header.join(","));
    for rec in &out.diagnostics {
        let mut row = vec![fmt(rec.t)];
        row.extend(rec.mass.iter().map(|&m| fmt(m)));
        row.push(fmt(rec.entropy));
        row.push(fmt(rec.min_monitored));
        row.push(fmt(rec.max_monitored));
        row.push(fmt(rec.max_tadmor_residual));
        row.push(fmt(rec.max_es4_residual));
        row.push(fmt(rec.total_variation));
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("cells,e1,eoc\n");
    for r in rows {
        let eoc = r.eoc.map(fmt).unwrap_or_default();
        let _ = writeln!(s, "{},{},{}", r.cells, fmt(r.e1), eoc);
    }
    s
}
