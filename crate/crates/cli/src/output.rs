//! Report files written into the output directory.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use crate::run::RunReport;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SpectrumRow<'a> {
    route: &'a str,
    s: f64,
    index: usize,
    eigenvalue: f64,
}

#[derive(Serialize)]
struct ConvergenceRow<'a> {
    route: &'a str,
    quantity: &'a str,
    coarse: f64,
    fine: f64,
    difference: f64,
}

/// `report.json`, `spectra.csv`, `eta_form.csv` and `convergence.csv`.
pub fn write_run(dir: &Path, report: &RunReport) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&dir.join("report.json"), report)?;
    let t = &report.tables;
    write_rows(
        &dir.join("spectra.csv"),
        t.spectra.iter().flat_map(|(route, s, values)| {
            values.iter().enumerate().map(move |(index, &eigenvalue)| SpectrumRow { route, s: *s, index, eigenvalue })
        }),
    )?;
    write_rows(&dir.join("eta_form.csv"), &t.eta_form)?;
    write_rows(
        &dir.join("convergence.csv"),
        t.convergence.iter().map(|(route, quantity, coarse, fine)| ConvergenceRow {
            route,
            quantity,
            coarse: *coarse,
            fine: *fine,
            difference: fine - coarse,
        }),
    )
}
