//! Plain CSV tables: comma separated, `\n` terminated, floats in scientific
//! notation at a fixed number of significant digits. At 17 digits every
//! binary64 value survives a write/read round trip unchanged.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::diagnostics::{DiagnosticsReport, ModulusPoint, ResidualEntry, ScalarRow};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::solver::{State, StepRecord, Trajectory};
use crate::study::StudyReport;

pub const SCALARS: &str = "scalars.csv";
pub const OMEGA_SPACE: &str = "omega_space.csv";
pub const OMEGA_TIME: &str = "omega_time.csv";
pub const RESIDUALS: &str = "residuals.csv";
pub const SUMMARY: &str = "summary.csv";
pub const STEPS: &str = "steps.csv";

/// Float formatter with `digits` significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision(pub usize);

impl Default for Precision {
    fn default() -> Self {
        Self(17)
    }
}

impl Precision {
    pub fn fmt(&self, v: f64) -> String {
        format!("{:.*e}", self.0.saturating_sub(1), v)
    }
}

/// Write `contents` next to `path` and rename into place, so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parsed table: header plus string cells.
struct Table {
    path: PathBuf,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path, header: &[&str]) -> Result<Self> {
        let text = read_text(path)?;
        let mut lines = text.lines();
        let found = lines.next().unwrap_or("");
        if found != header.join(",") {
            return Err(Error::Csv {
                path: path.into(),
                message: format!("unexpected header `{found}`"),
            });
        }
        let rows: Vec<Vec<String>> = lines
            .filter(|l| !l.is_empty())
            .map(|l| l.split(',').map(str::to_owned).collect())
            .collect();
        if let Some(i) = rows.iter().position(|r| r.len() != header.len()) {
            return Err(Error::Csv {
                path: path.into(),
                message: format!("row {} has {} fields, expected {}", i + 1, rows[i].len(), header.len()),
            });
        }
        Ok(Self {
            path: path.into(),
            rows,
        })
    }

    fn parse<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<T> {
        let cell = &self.rows[row][col];
        cell.parse().map_err(|_| Error::Csv {
            path: self.path.clone(),
            message: format!("row {}: cannot parse `{cell}`", row + 1),
        })
    }
}

fn write_moduli(path: &Path, lag: &str, pts: &[ModulusPoint], p: Precision) -> Result<()> {
    let rows = pts.iter().map(|m| vec![p.fmt(m.lag), p.fmt(m.rho), p.fmt(m.mu)]);
    write_atomic(path, &table(&[lag, "omega_rho", "omega_mu"], rows))
}

fn read_moduli(path: &Path, lag: &str) -> Result<Vec<ModulusPoint>> {
    let t = Table::read(path, &[lag, "omega_rho", "omega_mu"])?;
    (0..t.rows.len())
        .map(|i| {
            Ok(ModulusPoint {
                lag: t.parse(i, 0)?,
                rho: t.parse(i, 1)?,
                mu: t.parse(i, 2)?,
            })
        })
        .collect()
}

/// `scalars.csv`, `omega_space.csv`, `omega_time.csv`, `residuals.csv` and a
/// `summary.csv` of the scalar report fields, all in `dir`.
pub fn write_report_csv(report: &DiagnosticsReport, dir: &Path, p: Precision) -> Result<()> {
    let rows = report
        .rows
        .iter()
        .map(|r| r.to_array().iter().map(|&v| p.fmt(v)).collect());
    write_atomic(&dir.join(SCALARS), &table(&ScalarRow::HEADER, rows))?;
    write_moduli(&dir.join(OMEGA_SPACE), "h", &report.omega_space, p)?;
    write_moduli(&dir.join(OMEGA_TIME), "k", &report.omega_time, p)?;
    let rows = report
        .residuals
        .iter()
        .map(|e| vec![e.phi_id.to_string(), e.species.as_str().to_owned(), p.fmt(e.residual)]);
    write_atomic(&dir.join(RESIDUALS), &table(&["phi_id", "species", "residual"], rows))?;
    let summary = [
        vec!["clamp_events".to_owned(), report.clamp_events.to_string()],
        vec!["entropy_budget_c".to_owned(), p.fmt(report.entropy_budget_c)],
        vec!["energy_budget_c".to_owned(), p.fmt(report.energy_budget_c)],
    ];
    write_atomic(&dir.join(SUMMARY), &table(&["key", "value"], summary))
}

pub fn read_report_csv(dir: &Path) -> Result<DiagnosticsReport> {
    let t = Table::read(&dir.join(SCALARS), &ScalarRow::HEADER)?;
    let rows = (0..t.rows.len())
        .map(|i| {
            let mut a = [0.0; 14];
            for (j, v) in a.iter_mut().enumerate() {
                *v = t.parse(i, j)?;
            }
            Ok(ScalarRow::from_array(a))
        })
        .collect::<Result<Vec<_>>>()?;
    let omega_space = read_moduli(&dir.join(OMEGA_SPACE), "h")?;
    let omega_time = read_moduli(&dir.join(OMEGA_TIME), "k")?;
    let t = Table::read(&dir.join(RESIDUALS), &["phi_id", "species", "residual"])?;
    let residuals = (0..t.rows.len())
        .map(|i| {
            Ok(ResidualEntry {
                phi_id: t.parse(i, 0)?,
                species: t.parse(i, 1)?,
                residual: t.parse(i, 2)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let t = Table::read(&dir.join(SUMMARY), &["key", "value"])?;
    let lookup = |key: &str| {
        t.rows.iter().position(|r| r[0] == key).ok_or_else(|| Error::Csv {
            path: t.path.clone(),
            message: format!("missing key `{key}`"),
        })
    };
    Ok(DiagnosticsReport {
        rows,
        omega_space,
        omega_time,
        residuals,
        clamp_events: t.parse(lookup("clamp_events")?, 1)?,
        entropy_budget_c: t.parse(lookup("entropy_budget_c")?, 1)?,
        energy_budget_c: t.parse(lookup("energy_budget_c")?, 1)?,
    })
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_{t}.csv")
}

pub fn write_snapshot(state: &State, dir: &Path, p: Precision) -> Result<()> {
    let grid = state.rho.grid();
    let rows = grid
        .centers()
        .enumerate()
        .map(|(i, x)| vec![p.fmt(x), p.fmt(state.rho[i]), p.fmt(state.mu[i])]);
    write_atomic(&dir.join(snapshot_file_name(state.t)), &table(&["x", "rho", "mu"], rows))
}

/// All `snapshot_<t>.csv` files in `dir`, sorted by time.
pub fn read_snapshots(dir: &Path) -> Result<Vec<State>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut found = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(t) = name
            .strip_prefix("snapshot_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<f64>().ok())
        else {
            continue;
        };
        found.push((t, entry.path()));
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    found
        .into_iter()
        .map(|(t, path)| {
            let tab = Table::read(&path, &["x", "rho", "mu"])?;
            let n = tab.rows.len();
            let grid = GridSpec::new(n)?;
            let col = |c: usize| (0..n).map(|i| tab.parse::<f64>(i, c)).collect::<Result<Vec<_>>>();
            Ok(State::new(t, Field::new(grid, col(1)?)?, Field::new(grid, col(2)?)?))
        })
        .collect()
}

pub fn write_steps(log: &[StepRecord], dir: &Path, p: Precision) -> Result<()> {
    let rows = log.iter().map(|s| {
        vec![
            p.fmt(s.t),
            p.fmt(s.dt),
            s.clamps.to_string(),
            s.newton_iterations.to_string(),
        ]
    });
    write_atomic(&dir.join(STEPS), &table(&["t", "dt", "clamps", "newton_iterations"], rows))
}

pub fn read_steps(dir: &Path) -> Result<Vec<StepRecord>> {
    let t = Table::read(&dir.join(STEPS), &["t", "dt", "clamps", "newton_iterations"])?;
    (0..t.rows.len())
        .map(|i| {
            Ok(StepRecord {
                t: t.parse(i, 0)?,
                dt: t.parse(i, 1)?,
                clamps: t.parse(i, 2)?,
                newton_iterations: t.parse(i, 3)?,
            })
        })
        .collect()
}

/// Snapshots plus the step log of a trajectory.
pub fn write_trajectory(traj: &Trajectory, dir: &Path, p: Precision) -> Result<()> {
    for s in &traj.snapshots {
        write_snapshot(s, dir, p)?;
    }
    write_steps(&traj.step_log, dir, p)
}

fn opt(p: Precision, v: Option<f64>) -> String {
    v.map(|v| p.fmt(v)).unwrap_or_default()
}

/// `uniformity.csv`, `cauchy.csv`, `rates.csv`, and one report directory
/// `level_<l>/` per level.
pub fn write_study_csv(study: &StudyReport, dir: &Path, p: Precision) -> Result<()> {
    let rows = study.uniformity.iter().map(|u| {
        vec![
            u.level.to_string(),
            u.n_cells.to_string(),
            p.fmt(u.eps),
            p.fmt(u.mass_rho),
            p.fmt(u.mass_mu),
            p.fmt(u.entropy_min),
            p.fmt(u.entropy_max),
            p.fmt(u.sup_bv_u),
            p.fmt(u.sup_bv_r),
            p.fmt(u.grad_half_alpha),
            p.fmt(u.max_residual),
            opt(p, u.ref_error),
        ]
    });
    write_atomic(
        &dir.join("uniformity.csv"),
        &table(&crate::study::UniformityRow::HEADER, rows),
    )?;
    let rows = study
        .cauchy_l1
        .iter()
        .zip(&study.cauchy_l1_mu)
        .enumerate()
        .map(|(l, (r, m))| vec![l.to_string(), (l + 1).to_string(), p.fmt(*r), p.fmt(*m)]);
    write_atomic(
        &dir.join("cauchy.csv"),
        &table(&["coarse", "fine", "cauchy_l1_rho", "cauchy_l1_mu"], rows),
    )?;
    let mut rates = String::from("key,value\n");
    let _ = writeln!(rates, "residual_rate,{}", opt(p, study.residual_rate));
    let _ = writeln!(rates, "reference_rate,{}", opt(p, study.reference_rate));
    let _ = writeln!(rates, "viscosity_convention,{}", study.viscosity_convention.replace(',', ";"));
    write_atomic(&dir.join("rates.csv"), &rates)?;
    let rows = study.levels.iter().map(|l| {
        vec![
            l.level.to_string(),
            l.n_cells.to_string(),
            p.fmt(l.dx),
            p.fmt(l.eps),
            l.steps.to_string(),
            p.fmt(l.max_dt),
        ]
    });
    write_atomic(
        &dir.join("levels.csv"),
        &table(&["level", "n_cells", "dx", "eps", "steps", "max_dt"], rows),
    )?;
    for l in &study.levels {
        write_report_csv(&l.report, &dir.join(format!("level_{}", l.level)), p)?;
    }
    Ok(())
}

/// Generic numeric read for plotting: header plus columns, with cells that do
/// not parse as floats kept as text.
pub fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = read_text(path)?;
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Csv {
            path: path.into(),
            message: "empty file".into(),
        })?
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    if let Some(i) = rows.iter().position(|r| r.len() != header.len()) {
        return Err(Error::Csv {
            path: path.into(),
            message: format!("row {} has {} fields, expected {}", i + 1, rows[i].len(), header.len()),
        });
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::Species;

    fn one_row_report() -> DiagnosticsReport {
        DiagnosticsReport {
            rows: vec![ScalarRow::from_array(std::array::from_fn(|i| 0.1 * i as f64 - 1.0 / 3.0))],
            omega_space: vec![],
            omega_time: vec![],
            residuals: vec![],
            clamp_events: 0,
            entropy_budget_c: 0.0,
            energy_budget_c: 0.0,
        }
    }

    #[test]
    fn headers_and_line_counts() {
        let dir = tempfile::tempdir().unwrap();
        write_report_csv(&one_row_report(), dir.path(), Precision::default()).unwrap();
        let scalars = std::fs::read_to_string(dir.path().join(SCALARS)).unwrap();
        assert_eq!(scalars.lines().count(), 2);
        assert!(scalars.starts_with(
            "t,mass_rho,mass_mu,entropy,energy,diss_entropy,diss_beta_a,diss_beta_1ma,fisher_log,bv_r,bv_u,norm_S_2ma,sup_S_pow,h_minus_one\n"
        ));
        let res = std::fs::read_to_string(dir.path().join(RESIDUALS)).unwrap();
        assert_eq!(res, "phi_id,species,residual\n");
        assert_eq!(
            std::fs::read_to_string(dir.path().join(OMEGA_SPACE)).unwrap(),
            "h,omega_rho,omega_mu\n"
        );
        assert_eq!(
            std::fs::read_to_string(dir.path().join(OMEGA_TIME)).unwrap(),
            "k,omega_rho,omega_mu\n"
        );
    }

    #[test]
    fn report_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rep = one_row_report();
        rep.residuals.push(ResidualEntry {
            phi_id: 3,
            species: Species::Mu,
            residual: -1e-300,
        });
        rep.omega_space.push(ModulusPoint {
            lag: 1.0 / 64.0,
            rho: std::f64::consts::PI,
            mu: 5e-324,
        });
        rep.clamp_events = 7;
        rep.energy_budget_c = 0.1 + 0.2;
        write_report_csv(&rep, dir.path(), Precision::default()).unwrap();
        assert_eq!(read_report_csv(dir.path()).unwrap(), rep);
    }

    #[test]
    fn snapshot_names_use_plain_display() {
        assert_eq!(snapshot_file_name(0.0), "snapshot_0.csv");
        assert_eq!(snapshot_file_name(0.025), "snapshot_0.025.csv");
    }

    #[test]
    fn unwritable_destination_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let e = write_report_csv(&one_row_report(), &blocker.join("sub"), Precision::default()).unwrap_err();
        assert!(e.to_string().contains("file"), "{e}");
    }
}
