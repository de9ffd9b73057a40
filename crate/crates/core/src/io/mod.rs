//! Configuration, CSV/SVG output, and the file-level workflows behind the
//! command-line tool.

pub mod config;
pub mod csv;
pub mod plot;

use std::path::{Path, PathBuf};

use crate::diagnostics::{report_with, DiagnosticsReport, TestFunctionBank, DEFAULT_BANK_PROFILES};
use crate::error::{Error, Result};
use crate::solver::{run, Trajectory};
use crate::study::{run_study, StudyReport};

pub use config::{apply_overrides, parse_config, Overrides, RunConfig};
pub use csv::{read_report_csv, write_report_csv, Precision};
pub use plot::{emit_plot, render_svg, Curve, PlotOptions};

/// Name of the effective configuration stored alongside run outputs.
pub const CONFIG_COPY: &str = "config.toml";

pub fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Diagnostics of a trajectory with the bank and toggles of `cfg`.
pub fn report_for(cfg: &RunConfig, traj: &Trajectory) -> Result<DiagnosticsReport> {
    let p = &traj.problem;
    let bank = if p.t_final > 0.0 {
        Some(TestFunctionBank::new(p.grid, p.t_final, cfg.output.bank_k, DEFAULT_BANK_PROFILES)?)
    } else {
        None
    };
    report_with(traj, bank.as_ref(), cfg.output.options)
}

/// Integrate, then write snapshots, the step log, the report tables and the
/// effective config into `out`.
pub fn run_to_dir(text: &str, out: &Path) -> Result<(Trajectory, DiagnosticsReport)> {
    let cfg = parse_config(text)?;
    let traj = run(&cfg.problem)?;
    let rep = report_for(&cfg, &traj)?;
    let p = Precision(cfg.output.precision);
    csv::write_trajectory(&traj, out, p)?;
    write_report_csv(&rep, out, p)?;
    csv::write_atomic(&out.join(CONFIG_COPY), text)?;
    Ok((traj, rep))
}

pub fn study_to_dir(text: &str, out: &Path) -> Result<StudyReport> {
    let cfg = parse_config(text)?;
    let plan = cfg.study_plan(None)?;
    let rep = run_study(&plan)?;
    csv::write_study_csv(&rep, out, Precision(cfg.output.precision))?;
    csv::write_atomic(&out.join(CONFIG_COPY), text)?;
    Ok(rep)
}

/// Rebuild the trajectory stored in `dir` by [`run_to_dir`] and recompute its
/// report.
pub fn diagnose_dir(dir: &Path) -> Result<DiagnosticsReport> {
    let cfg = parse_config(&read_config(&dir.join(CONFIG_COPY))?)?;
    let snapshots = csv::read_snapshots(dir)?;
    if snapshots.is_empty() {
        return Err(Error::Csv {
            path: dir.into(),
            message: "no snapshot files".into(),
        });
    }
    if snapshots[0].rho.grid() != cfg.problem.grid {
        return Err(Error::Csv {
            path: dir.into(),
            message: "snapshot grid does not match the stored config".into(),
        });
    }
    let traj = Trajectory {
        problem: cfg.problem.clone(),
        snapshots,
        step_log: csv::read_steps(dir)?,
    };
    report_for(&cfg, &traj)
}

/// One SVG per CSV: the first column is the abscissa, every other numeric
/// column a curve. A text column (such as `species`) splits rows into
/// separate curves.
pub fn plot_csv(path: &Path, out_dir: Option<&Path>, log_log: bool) -> Result<PathBuf> {
    let (header, rows) = csv::read_columns(path)?;
    let numeric: Vec<bool> = (0..header.len())
        .map(|c| rows.iter().all(|r| r[c].parse::<f64>().is_ok()))
        .collect();
    let group_col = (1..header.len()).find(|&c| !numeric[c]);
    let mut groups: Vec<String> = Vec::new();
    for r in &rows {
        let g = group_col.map(|c| r[c].clone()).unwrap_or_default();
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    let mut curves = Vec::new();
    for g in &groups {
        for c in (1..header.len()).filter(|&c| numeric[c]) {
            let points = rows
                .iter()
                .filter(|r| group_col.is_none_or(|gc| &r[gc] == g))
                .filter_map(|r| Some((r[0].parse().ok()?, r[c].parse().ok()?)))
                .collect();
            let label = if g.is_empty() {
                header[c].clone()
            } else {
                format!("{} {g}", header[c])
            };
            curves.push(Curve::new(label, points));
        }
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let opts = PlotOptions {
        title: stem.clone(),
        x_label: header[0].clone(),
        y_label: String::new(),
        log_log,
    };
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| path.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    let target = dir.join(format!("{stem}.svg"));
    emit_plot(&curves, &opts, &target)?;
    Ok(target)
}
