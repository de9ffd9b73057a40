//! Refinement and vanishing-viscosity campaigns: run the same physical data on
//! a family of levels and check that the bounded functionals stay bounded, that
//! consecutive levels form an `L^1`-Cauchy sequence, and how fast the weak
//! residual and the reference error decay.

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::diagnostics::{grad_half_alpha_sq, report, DiagnosticsReport, TestFunctionBank, DEFAULT_BANK_PROFILES};
use crate::error::{Error, Result};
use crate::grid::{prolong, Field, GridSpec};
use crate::model::{build_potentials, validate_initial, InitialProfile, Model, ProblemSpec};
use crate::solver::{run, State, Trajectory};

/// Closed-form solutions the study can measure errors against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// `alpha = 1` without potentials: `S` solves the heat equation with
    /// diffusivity `1 + eps`, evolved spectrally from the sampled initial total.
    LinearHeat,
}

impl Reference {
    fn check(&self, model: &Model) -> Result<()> {
        match self {
            Reference::LinearHeat => {
                if !model.nonlinearity.is_linear() || model.potentials.max_drift() != 0.0 {
                    return Err(Error::InvalidProblem(
                        "linear heat reference needs alpha = 1 and zero potentials".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Reference total density at time `t` on the grid of `s0`.
    pub fn total_at(&self, s0: &Field, t: f64, eps: f64) -> Field {
        match self {
            Reference::LinearHeat => heat_evolve(s0, t, 1.0 + eps),
        }
    }
}

fn heat_evolve(s0: &Field, t: f64, diffusivity: f64) -> Field {
    let n = s0.len();
    let mut buf: Vec<Complex<f64>> = s0.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let freq = k.min(n - k) as f64;
        let decay = (-4.0 * std::f64::consts::PI.powi(2) * freq * freq * diffusivity * t).exp();
        *c *= decay / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Field::from_vec(s0.grid(), buf.iter().map(|c| c.re).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    /// Level-0 problem. Its grid, viscosity and snapshot schedule are the
    /// starting point of every refinement axis.
    pub base: ProblemSpec,
    /// Initial data, resampled on each level's grid.
    pub rho0: InitialProfile,
    pub mu0: InitialProfile,
    pub levels: usize,
    /// Level `l` uses `n_base * 2^l` cells when set, the base grid otherwise.
    pub refine_space: bool,
    /// Level `l` doubles the number of uniformly spaced snapshots when set.
    pub refine_snapshots: bool,
    /// One viscosity per level, or empty to keep the base viscosity.
    pub viscosity_schedule: Vec<f64>,
    /// Times at which consecutive levels are compared. Must be snapshot times.
    pub comparison_times: Vec<f64>,
    pub reference: Option<Reference>,
    pub bank_k: usize,
}

/// `eps0 * 2^-l` for `l = 0..levels`.
pub fn halving_viscosity(eps0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|l| eps0 * 0.5f64.powi(l as i32)).collect()
}

impl StudyPlan {
    pub fn new(base: ProblemSpec, rho0: InitialProfile, mu0: InitialProfile, levels: usize) -> Self {
        let comparison_times = vec![base.t_final];
        Self {
            base,
            rho0,
            mu0,
            levels,
            refine_space: true,
            refine_snapshots: false,
            viscosity_schedule: Vec::new(),
            comparison_times,
            reference: None,
            bank_k: crate::diagnostics::DEFAULT_BANK_K,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProblem(m));
        self.base.validate()?;
        if self.levels < 2 {
            return bad(format!("a study needs at least 2 levels, got {}", self.levels));
        }
        if !self.viscosity_schedule.is_empty() {
            if self.viscosity_schedule.len() != self.levels {
                return bad(format!(
                    "viscosity schedule has {} entries for {} levels",
                    self.viscosity_schedule.len(),
                    self.levels
                ));
            }
            if let Some(e) = self.viscosity_schedule.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
                return bad(format!("viscosity must be finite and >= 0, got {e}"));
            }
        }
        if self.refine_snapshots && !is_uniform(&self.base.snapshot_times) {
            return bad("refine_snapshots needs a uniform base schedule".into());
        }
        if self.comparison_times.is_empty() {
            return bad("comparison_times is empty".into());
        }
        for &t in &self.comparison_times {
            if find_time(&self.base.snapshot_times, t).is_none() {
                return bad(format!("comparison time {t} is not a snapshot time"));
            }
        }
        if let Some(r) = &self.reference {
            r.check(&self.base.model)?;
        }
        Ok(())
    }

    pub fn level_eps(&self, level: usize) -> f64 {
        self.viscosity_schedule
            .get(level)
            .copied()
            .unwrap_or(self.base.model.eps_viscosity)
    }

    pub fn level_problem(&self, level: usize) -> Result<ProblemSpec> {
        let base = &self.base;
        let n = if self.refine_space {
            base.grid.n_cells() << level
        } else {
            base.grid.n_cells()
        };
        let grid = GridSpec::new(n)?;
        let potentials = build_potentials(base.model.potentials.modes_v(), base.model.potentials.modes_w(), grid)?;
        let initial = validate_initial(self.rho0.sample(grid)?, self.mu0.sample(grid)?)?;
        let snapshot_times = if self.refine_snapshots {
            let count = (base.snapshot_times.len() - 1) << level;
            ProblemSpec::uniform_snapshots(base.t_final, count)
        } else {
            base.snapshot_times.clone()
        };
        let problem = ProblemSpec {
            grid,
            model: Model {
                nonlinearity: base.model.nonlinearity,
                potentials,
                eps_viscosity: self.level_eps(level),
            },
            initial,
            t_final: base.t_final,
            stepper: base.stepper,
            cfl_safety: base.cfl_safety,
            snapshot_times,
        };
        problem.validate()?;
        Ok(problem)
    }
}

fn is_uniform(times: &[f64]) -> bool {
    if times.len() < 2 {
        return true;
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
}

fn find_time(times: &[f64], t: f64) -> Option<usize> {
    let tol = 1e-12 * t.abs().max(1.0);
    times.iter().position(|&s| (s - t).abs() <= tol)
}

/// Per-level sup-in-time of each functional that is bounded independently of
/// the level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformityRow {
    pub level: usize,
    pub n_cells: usize,
    pub eps: f64,
    pub mass_rho: f64,
    pub mass_mu: f64,
    pub entropy_min: f64,
    pub entropy_max: f64,
    pub sup_bv_u: f64,
    pub sup_bv_r: f64,
    /// `int_0^T int |d_x S^(alpha/2)|^2`, trapezoid in time.
    pub grad_half_alpha: f64,
    pub max_residual: f64,
    pub ref_error: Option<f64>,
}

impl UniformityRow {
    pub const HEADER: [&'static str; 12] = [
        "level",
        "n_cells",
        "eps",
        "mass_rho",
        "mass_mu",
        "entropy_min",
        "entropy_max",
        "sup_bv_u",
        "sup_bv_r",
        "grad_half_alpha",
        "max_residual",
        "ref_error",
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub level: usize,
    pub n_cells: usize,
    pub dx: f64,
    pub eps: f64,
    pub steps: usize,
    pub max_dt: f64,
    pub report: DiagnosticsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub levels: Vec<LevelSummary>,
    pub uniformity: Vec<UniformityRow>,
    /// `max_t int |rho_{l+1} - P rho_l|` over the comparison times.
    pub cauchy_l1: Vec<f64>,
    pub cauchy_l1_mu: Vec<f64>,
    /// Fitted order of `max |R|` against the refinement scale.
    pub residual_rate: Option<f64>,
    pub reference_rate: Option<f64>,
    /// Human-readable record of how viscosity varies with the level.
    pub viscosity_convention: String,
}

impl StudyReport {
    /// `cauchy_l1[l] / cauchy_l1[l + 1]`.
    pub fn cauchy_ratios(&self) -> Vec<f64> {
        self.cauchy_l1.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

struct LevelRun {
    traj: Trajectory,
    report: DiagnosticsReport,
    ref_error: Option<f64>,
}

fn run_level(plan: &StudyPlan, level: usize) -> Result<LevelRun> {
    let problem = plan.level_problem(level)?;
    let traj = run(&problem)?;
    let bank = TestFunctionBank::new(problem.grid, problem.t_final, plan.bank_k, DEFAULT_BANK_PROFILES)?;
    let report = report(&traj, (problem.t_final > 0.0).then_some(&bank))?;
    let ref_error = plan.reference.map(|r| {
        let s0 = traj.snapshots[0].total();
        plan.comparison_times
            .iter()
            .filter_map(|&t| find_time(&traj.times(), t))
            .map(|k| {
                let st = &traj.snapshots[k];
                let exact = r.total_at(&s0, st.t, problem.model.eps_viscosity);
                st.total().zip_map(&exact, |a, b| (a - b).abs()).max_abs()
            })
            .fold(0.0, f64::max)
    });
    Ok(LevelRun {
        traj,
        report,
        ref_error,
    })
}

fn uniformity_row(l: usize, run: &LevelRun) -> UniformityRow {
    let traj = &run.traj;
    let rep = &run.report;
    let model = &traj.problem.model;
    let g: Vec<f64> = traj.snapshots.iter().map(|s| grad_half_alpha_sq(s, model)).collect();
    let times = traj.times();
    let grad_half_alpha = g
        .windows(2)
        .zip(times.windows(2))
        .map(|(v, t)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
        .sum();
    let first = &rep.rows[0];
    UniformityRow {
        level: l,
        n_cells: traj.problem.grid.n_cells(),
        eps: model.eps_viscosity,
        mass_rho: first.mass_rho,
        mass_mu: first.mass_mu,
        entropy_min: rep.rows.iter().map(|r| r.entropy).fold(f64::INFINITY, f64::min),
        entropy_max: rep.sup_of(|r| r.entropy),
        sup_bv_u: rep.sup_of(|r| r.bv_u),
        sup_bv_r: rep.sup_of(|r| r.bv_r),
        grad_half_alpha,
        max_residual: rep.max_residual(),
        ref_error: run.ref_error,
    }
}

fn l1_against_coarse(fine: &Field, coarse: &Field) -> f64 {
    let mut c = coarse.clone();
    while c.len() < fine.len() {
        c = prolong(&c);
    }
    fine.zip_map(&c, |a, b| (a - b).abs()).integrate()
}

fn state_at(traj: &Trajectory, t: f64) -> &State {
    let k = find_time(&traj.times(), t).expect("comparison time validated against every level");
    &traj.snapshots[k]
}

/// Fit through the positive entries only; `None` when fewer than two remain.
fn fit_positive(pairs: &[(f64, f64)]) -> Option<f64> {
    let kept: Vec<(f64, f64)> = pairs.iter().copied().filter(|&(_, e)| e > 0.0).collect();
    (kept.len() == pairs.len()).then(|| fit_rate(&kept).ok()).flatten()
}

pub fn run_study(plan: &StudyPlan) -> Result<StudyReport> {
    plan.validate()?;
    let runs: Vec<LevelRun> = (0..plan.levels)
        .into_par_iter()
        .map(|l| {
            run_level(plan, l).map_err(|e| Error::AtLevel {
                level: l,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let uniformity: Vec<UniformityRow> = runs.iter().enumerate().map(|(l, r)| uniformity_row(l, r)).collect();

    let mut cauchy_l1 = Vec::new();
    let mut cauchy_l1_mu = Vec::new();
    for pair in runs.windows(2) {
        let (mut dr, mut dm) = (0.0f64, 0.0f64);
        for &t in &plan.comparison_times {
            let (c, f) = (state_at(&pair[0].traj, t), state_at(&pair[1].traj, t));
            dr = dr.max(l1_against_coarse(&f.rho, &c.rho));
            dm = dm.max(l1_against_coarse(&f.mu, &c.mu));
        }
        cauchy_l1.push(dr);
        cauchy_l1_mu.push(dm);
    }

    let scale = |r: &LevelRun| {
        if plan.refine_space {
            r.traj.problem.grid.dx()
        } else {
            r.traj.problem.model.eps_viscosity
        }
    };
    let residual_pairs: Vec<(f64, f64)> = runs.iter().map(|r| (scale(r), r.report.max_residual())).collect();
    let ref_pairs: Option<Vec<(f64, f64)>> = runs.iter().map(|r| r.ref_error.map(|e| (scale(r), e))).collect();

    let viscosity_convention = if plan.viscosity_schedule.is_empty() {
        format!("fixed eps = {} at every level", plan.base.model.eps_viscosity)
    } else {
        let list: Vec<String> = plan.viscosity_schedule.iter().map(|e| e.to_string()).collect();
        format!("eps per level = [{}]", list.join(", "))
    };

    let levels = runs
        .into_iter()
        .enumerate()
        .map(|(l, r)| LevelSummary {
            level: l,
            n_cells: r.traj.problem.grid.n_cells(),
            dx: r.traj.problem.grid.dx(),
            eps: r.traj.problem.model.eps_viscosity,
            steps: r.traj.step_log.len(),
            max_dt: r.traj.max_dt(),
            report: r.report,
        })
        .collect();

    Ok(StudyReport {
        levels,
        uniformity,
        cauchy_l1,
        cauchy_l1_mu,
        residual_rate: fit_positive(&residual_pairs),
        reference_rate: ref_pairs.as_deref().and_then(fit_positive),
        viscosity_convention,
    })
}

/// Least-squares slope of `log error` against `log scale`.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::RateFit(format!("need at least 2 pairs, got {}", pairs.len())));
    }
    if let Some(&(s, e)) = pairs.iter().find(|(s, e)| !(*s > 0.0 && *e > 0.0 && s.is_finite() && e.is_finite())) {
        return Err(Error::RateFit(format!("nonpositive entry ({s}, {e})")));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::RateFit("all scales are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FourierMode, Nonlinearity, PotentialPair, StepperKind};

    #[test]
    fn fit_rate_examples() {
        assert!((fit_rate(&[(0.1, 0.1), (0.05, 0.05)]).unwrap() - 1.0).abs() < 1e-12);
        assert!((fit_rate(&[(0.1, 0.01), (0.05, 0.0025)]).unwrap() - 2.0).abs() < 1e-12);
        let r = fit_rate(&[(0.1, 3e-2), (0.05, 1.6e-2), (0.025, 8.3e-3)]).unwrap();
        assert!((r - 0.925).abs() < 5e-3, "{r}");
        assert!(matches!(fit_rate(&[(0.1, 0.0), (0.05, 1.0)]), Err(Error::RateFit(_))));
        assert!(matches!(fit_rate(&[(0.1, 1.0)]), Err(Error::RateFit(_))));
    }

    #[test]
    fn heat_reference_decays_single_mode() {
        let grid = GridSpec::new(32).unwrap();
        let pi = std::f64::consts::PI;
        let s0 = Field::from_fn(grid, |x| 1.0 + 0.5 * (2.0 * pi * x).cos());
        let s = heat_evolve(&s0, 0.05, 1.0);
        let amp = 0.5 * (-4.0 * pi * pi * 0.05f64).exp();
        for (i, x) in grid.centers().enumerate() {
            assert!((s[i] - (1.0 + amp * (2.0 * pi * x).cos())).abs() < 1e-14);
        }
    }

    fn stationary_plan(levels: usize) -> StudyPlan {
        let grid = GridSpec::new(16).unwrap();
        let rho = InitialProfile::Modes {
            offset: 0.5,
            modes: vec![FourierMode::cos(1, 0.25)],
        };
        let mu = InitialProfile::Modes {
            offset: 0.5,
            modes: vec![FourierMode::cos(1, -0.25)],
        };
        let base = ProblemSpec {
            grid,
            model: Model {
                nonlinearity: Nonlinearity::new(0.5).unwrap(),
                potentials: PotentialPair::zero(grid),
                eps_viscosity: 0.0,
            },
            initial: validate_initial(rho.sample(grid).unwrap(), mu.sample(grid).unwrap()).unwrap(),
            t_final: 0.01,
            stepper: StepperKind::Explicit,
            cfl_safety: 0.5,
            snapshot_times: ProblemSpec::uniform_snapshots(0.01, 2),
        };
        let mut plan = StudyPlan::new(base, rho, mu, levels);
        plan.refine_space = false;
        plan.bank_k = 2;
        plan
    }

    #[test]
    fn stationary_study_is_trivially_cauchy() {
        let rep = run_study(&stationary_plan(2)).unwrap();
        assert_eq!(rep.cauchy_l1.len(), 1);
        assert!(rep.cauchy_l1[0] <= 1e-12);
        let (a, b) = (rep.uniformity[0], rep.uniformity[1]);
        assert_eq!(a.sup_bv_u, b.sup_bv_u);
        assert_eq!(a.entropy_max, b.entropy_max);
    }

    #[test]
    fn plan_validation() {
        assert!(stationary_plan(1).validate().is_err());
        let mut p = stationary_plan(2);
        p.comparison_times = vec![0.0033];
        assert!(p.validate().is_err());
        let mut p = stationary_plan(3);
        p.viscosity_schedule = vec![1e-2, 5e-3];
        assert!(p.validate().is_err());
        p.viscosity_schedule = halving_viscosity(1e-2, 3);
        assert_eq!(p.viscosity_schedule, vec![1e-2, 5e-3, 2.5e-3]);
        p.validate().unwrap();
        let mut p = stationary_plan(2);
        p.reference = Some(Reference::LinearHeat);
        assert!(p.validate().is_err());
    }

    #[test]
    fn level_failure_names_level() {
        let mut p = stationary_plan(2);
        p.refine_space = true;
        // bank too large for the level-0 grid only
        p.bank_k = 5;
        match run_study(&p) {
            Err(Error::AtLevel { level: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
