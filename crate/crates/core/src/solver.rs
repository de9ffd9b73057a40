//! Conservative, positivity-preserving time integration of the two-species
//! system
//!
//! ```text
//! d_t rho = d_x( rho (d_x f'(rho + mu) + V') ) + eps d_xx rho
//! d_t mu  = d_x( mu  (d_x f'(rho + mu) + W') ) + eps d_xx mu
//! ```
//!
//! on the torus. Both species are advanced in flux form with donor-cell
//! mobilities, so per-species mass is conserved to roundoff.

use crate::error::{Error, Result};
use crate::grid::{div_cell, grad_interface, Field, InterfaceField};
use crate::model::{Model, ProblemSpec, StepperKind};

/// Guard against a zero velocity bound in the advective CFL limit.
pub const VELOCITY_FLOOR: f64 = 1e-30;
pub const NEWTON_TOL: f64 = 1e-11;
pub const NEWTON_MAX_ITER: usize = 50;
const MAX_LINE_SEARCH: usize = 40;
const MAX_STEPS: usize = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub rho: Field,
    pub mu: Field,
}

impl State {
    pub fn new(t: f64, rho: Field, mu: Field) -> Self {
        Self { t, rho, mu }
    }

    pub fn total(&self) -> Field {
        self.rho.zip_map(&self.mu, |a, b| a + b)
    }

    pub fn mass_rho(&self) -> f64 {
        self.rho.integrate()
    }

    pub fn mass_mu(&self) -> f64 {
        self.mu.integrate()
    }

    /// Exchange the species.
    pub fn swapped(&self) -> Self {
        Self::new(self.t, self.mu.clone(), self.rho.clone())
    }

    pub fn shift(&self, m: isize) -> Self {
        Self::new(self.t, self.rho.shift(m), self.mu.shift(m))
    }

    fn check_positive(&self) -> Result<()> {
        for field in [&self.rho, &self.mu] {
            if let Some(cell) = field.values().iter().position(|&v| !(v > 0.0)) {
                return Err(Error::PositivityViolated { cell });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    pub clamps: usize,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub problem: ProblemSpec,
    pub snapshots: Vec<State>,
    pub step_log: Vec<StepRecord>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn clamp_events(&self) -> usize {
        self.step_log.iter().map(|r| r.clamps).sum()
    }

    pub fn max_dt(&self) -> f64 {
        self.step_log.iter().map(|r| r.dt).fold(0.0, f64::max)
    }
}

/// Interface velocities `a = d_x f'(S) + V'` (rho) and `d_x f'(S) + W'` (mu).
pub fn interface_velocities(state: &State, model: &Model) -> (InterfaceField, InterfaceField) {
    let (a_rho, a_mu, _) = velocities_counted(state, model);
    (a_rho, a_mu)
}

fn velocities_counted(state: &State, model: &Model) -> (InterfaceField, InterfaceField, usize) {
    let nl = &model.nonlinearity;
    let s = state.total();
    let clamps = s.values().iter().filter(|&&v| nl.clamps(v)).count();
    let pressure = grad_interface(&s.map(|v| nl.f_prime(v)));
    let a_rho = pressure.zip_map(model.potentials.v_pot.grad_faces(), |p, d| p + d);
    let a_mu = pressure.zip_map(model.potentials.w_pot.grad_faces(), |p, d| p + d);
    (a_rho, a_mu, clamps)
}

/// Flux `c^up a + eps d_x c` with the donor cell picked so that transport
/// along `-a` drains it.
fn upwind_flux(c: &Field, a: &InterfaceField, eps: f64) -> InterfaceField {
    let n = c.len();
    let inv_dx = n as f64;
    let v = c.values();
    let out = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let donor = if a[i] < 0.0 { v[i] } else { v[j] };
            let mut flux = donor * a[i];
            if eps > 0.0 {
                flux += eps * (v[j] - v[i]) * inv_dx;
            }
            flux
        })
        .collect();
    InterfaceField::from_vec(c.grid(), out)
}

fn advance(c: &Field, flux: &InterfaceField, dt: f64) -> Field {
    c.zip_map(&div_cell(flux), |v, d| v + dt * d)
}

/// Semi-discrete right-hand side `(d_t rho, d_t mu)` of the explicit scheme.
pub fn rate_of_change(state: &State, model: &Model) -> (Field, Field) {
    let (a_rho, a_mu) = interface_velocities(state, model);
    let eps = model.eps_viscosity;
    (
        div_cell(&upwind_flux(&state.rho, &a_rho, eps)),
        div_cell(&upwind_flux(&state.mu, &a_mu, eps)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub clamps: usize,
    pub newton_iterations: usize,
}

pub fn step_explicit(state: &State, dt: f64, model: &Model) -> Result<State> {
    step_explicit_with_stats(state, dt, model).map(|(s, _)| s)
}

pub fn step_explicit_with_stats(
    state: &State,
    dt: f64,
    model: &Model,
) -> Result<(State, StepStats)> {
    let (a_rho, a_mu, clamps) = velocities_counted(state, model);
    let eps = model.eps_viscosity;
    let next = State {
        t: state.t + dt,
        rho: advance(&state.rho, &upwind_flux(&state.rho, &a_rho, eps), dt),
        mu: advance(&state.mu, &upwind_flux(&state.mu, &a_mu, eps), dt),
    };
    next.check_positive()?;
    Ok((
        next,
        StepStats {
            clamps,
            newton_iterations: 0,
        },
    ))
}

pub fn step_semi_implicit(state: &State, dt: f64, model: &Model) -> Result<State> {
    step_semi_implicit_with_stats(state, dt, model).map(|(s, _)| s)
}

/// Explicit upwind drift by the potentials, then an implicit step for the
/// aggregate diffusion `S - dt Lap_h Phi(S) = S*` solved by damped Newton.
/// The resulting interface fluxes of `S` are split between the species in
/// proportion to the donor cell's composition after the drift stage.
pub fn step_semi_implicit_with_stats(
    state: &State,
    dt: f64,
    model: &Model,
) -> Result<(State, StepStats)> {
    let nl = &model.nonlinearity;
    let eps = model.eps_viscosity;
    let pot = &model.potentials;
    let rho_star = advance(&state.rho, &upwind_flux(&state.rho, pot.v_pot.grad_faces(), eps), dt);
    let mu_star = advance(&state.mu, &upwind_flux(&state.mu, pot.w_pot.grad_faces(), eps), dt);
    State::new(state.t, rho_star.clone(), mu_star.clone()).check_positive()?;

    let s_star = rho_star.zip_map(&mu_star, |a, b| a + b);
    let clamps = s_star.values().iter().filter(|&&v| nl.clamps(v)).count();
    let (s_new, iterations) = solve_implicit_diffusion(&s_star, dt, model)?;

    let n = s_new.len();
    let inv_dx = n as f64;
    let phi: Vec<f64> = s_new.values().iter().map(|&v| nl.phi(v)).collect();
    let mut flux_rho = Vec::with_capacity(n);
    let mut flux_mu = Vec::with_capacity(n);
    for i in 0..n {
        let j = (i + 1) % n;
        let g = dt * (phi[j] - phi[i]) * inv_dx;
        // g > 0 moves mass from cell j into cell i
        let d = if g > 0.0 { j } else { i };
        let total = s_star[d];
        flux_rho.push(g * (rho_star[d] / total));
        flux_mu.push(g * (mu_star[d] / total));
    }
    let grid = s_new.grid();
    let next = State {
        t: state.t + dt,
        rho: advance(&rho_star, &InterfaceField::from_vec(grid, flux_rho), 1.0),
        mu: advance(&mu_star, &InterfaceField::from_vec(grid, flux_mu), 1.0),
    };
    next.check_positive()?;
    Ok((
        next,
        StepStats {
            clamps,
            newton_iterations: iterations,
        },
    ))
}

fn diffusion_residual(s: &[f64], s_star: &[f64], c: f64, model: &Model) -> Vec<f64> {
    let n = s.len();
    let nl = &model.nonlinearity;
    let phi: Vec<f64> = s.iter().map(|&v| nl.phi(v)).collect();
    (0..n)
        .map(|i| {
            let lap = phi[(i + 1) % n] - 2.0 * phi[i] + phi[(i + n - 1) % n];
            s[i] - s_star[i] - c * lap
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn solve_implicit_diffusion(s_star: &Field, dt: f64, model: &Model) -> Result<(Field, usize)> {
    let nl = &model.nonlinearity;
    let n = s_star.len();
    let c = dt * (n * n) as f64;
    let target = s_star.values();
    let mut s = target.to_vec();
    let mut res = diffusion_residual(&s, target, c, model);
    let mut res_norm = max_abs(&res);
    let mut iterations = 0;
    while res_norm > NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: res_norm,
            });
        }
        iterations += 1;
        let dphi: Vec<f64> = s.iter().map(|&v| nl.phi_prime(v)).collect();
        let sub: Vec<f64> = (0..n).map(|i| -c * dphi[(i + n - 1) % n]).collect();
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + 2.0 * c * dphi[i]).collect();
        let sup: Vec<f64> = (0..n).map(|i| -c * dphi[(i + 1) % n]).collect();
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let delta = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_LINE_SEARCH {
            let trial: Vec<f64> = s.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            if trial.iter().all(|&v| v > 0.0) {
                let trial_res = diffusion_residual(&trial, target, c, model);
                let trial_norm = max_abs(&trial_res);
                if trial_norm < res_norm {
                    s = trial;
                    res = trial_res;
                    res_norm = trial_norm;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: res_norm,
            });
        }
    }
    Ok((Field::from_vec(s_star.grid(), s), iterations))
}

/// Solve the periodic tridiagonal system
/// `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]` (indices mod n)
/// by the Sherman-Morrison correction of the Thomas algorithm.
pub fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 3 && sub.len() == n && sup.len() == n && rhs.len() == n);
    let top_right = sub[0];
    let bottom_left = sup[n - 1];
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= bottom_left * top_right / gamma;

    let x = thomas(sub, &b, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = bottom_left;
    let z = thomas(sub, &b, sup, &u);
    let fact = (x[0] + top_right * x[n - 1] / gamma) / (1.0 + z[0] + top_right * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

/// Non-periodic tridiagonal solve; `sub[0]` and `sup[n-1]` are ignored.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c_prime = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut beta = diag[0];
    x[0] = rhs[0] / beta;
    for i in 1..n {
        c_prime[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c_prime[i];
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i + 1] * x[i + 1];
    }
    x
}

/// Largest stable step:
/// `safety * min(dx^2 / (2 (max Phi'(S) + eps)), dx / max|a|)`.
/// The semi-implicit stepper only needs the potential drift bound (and the
/// viscous bound when `eps > 0`, since viscosity stays explicit).
pub fn cfl_dt(state: &State, model: &Model, cfl_safety: f64, kind: StepperKind) -> f64 {
    let grid = state.rho.grid();
    let dx = grid.dx();
    let eps = model.eps_viscosity;
    match kind {
        StepperKind::Explicit => {
            let nl = &model.nonlinearity;
            let max_diff = state
                .total()
                .values()
                .iter()
                .map(|&s| nl.phi_prime(s))
                .fold(0.0, f64::max);
            let (a_rho, a_mu) = interface_velocities(state, model);
            let vmax = a_rho.max_abs().max(a_mu.max_abs()).max(VELOCITY_FLOOR);
            cfl_safety * (dx * dx / (2.0 * (max_diff + eps))).min(dx / vmax)
        }
        StepperKind::SemiImplicit => {
            let pot = &model.potentials;
            let vmax = pot
                .v_pot
                .grad_faces()
                .max_abs()
                .max(pot.w_pot.grad_faces().max_abs())
                .max(VELOCITY_FLOOR);
            let mut dt = dx / vmax;
            if eps > 0.0 {
                dt = dt.min(dx * dx / (2.0 * eps));
            }
            cfl_safety * dt
        }
    }
}

pub fn step(state: &State, dt: f64, model: &Model, kind: StepperKind) -> Result<(State, StepStats)> {
    match kind {
        StepperKind::Explicit => step_explicit_with_stats(state, dt, model),
        StepperKind::SemiImplicit => step_semi_implicit_with_stats(state, dt, model),
    }
}

/// Integrate from `t = 0` to `t_final`, truncating steps so that every
/// snapshot time is hit exactly.
pub fn run(problem: &ProblemSpec) -> Result<Trajectory> {
    problem.validate()?;
    let model = &problem.model;
    let mut state = State::new(0.0, problem.initial.rho0.clone(), problem.initial.mu0.clone());
    let mut snapshots = vec![state.clone()];
    let mut step_log = Vec::new();
    for &target in &problem.snapshot_times[1..] {
        while state.t < target {
            if step_log.len() >= MAX_STEPS {
                return Err(Error::AtTime {
                    t: state.t,
                    source: Box::new(Error::InvalidProblem("step budget exhausted".into())),
                });
            }
            let at = |e: Error| Error::AtTime {
                t: state.t,
                source: Box::new(e),
            };
            let mut dt = cfl_dt(&state, model, problem.cfl_safety, problem.stepper);
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(at(Error::InvalidProblem(format!("degenerate time step {dt}"))));
            }
            let landing = state.t + dt >= target;
            if landing {
                dt = target - state.t;
            }
            let (mut next, stats) = step(&state, dt, model, problem.stepper).map_err(at)?;
            if landing {
                next.t = target;
            }
            step_log.push(StepRecord {
                t: next.t,
                dt,
                clamps: stats.clamps,
                newton_iterations: stats.newton_iterations,
            });
            state = next;
        }
        snapshots.push(state.clone());
    }
    Ok(Trajectory {
        problem: problem.clone(),
        snapshots,
        step_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::model::{build_potentials, FourierMode, Nonlinearity, PotentialPair};
    use std::f64::consts::PI;

    fn model(grid: GridSpec, alpha: f64, modes_v: &[FourierMode], eps: f64) -> Model {
        Model {
            nonlinearity: Nonlinearity::new(alpha).unwrap(),
            potentials: build_potentials(modes_v, &[], grid).unwrap(),
            eps_viscosity: eps,
        }
    }

    #[test]
    fn cyclic_solver_matches_dense_elimination() {
        let n = 7;
        let sub: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let sup: Vec<f64> = (0..n).map(|i| -0.5 + 0.02 * i as f64).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
        for i in 0..n {
            let lhs = sub[i] * x[(i + n - 1) % n] + diag[i] * x[i] + sup[i] * x[(i + 1) % n];
            assert!((lhs - rhs[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn velocities_vanish_for_constant_total_without_potentials() {
        let grid = GridSpec::new(32).unwrap();
        let m = model(grid, 0.5, &[], 0.0);
        let rho = Field::from_fn(grid, |x| 0.5 + 0.25 * (2.0 * PI * x).cos());
        let mu = rho.map(|r| 1.0 - r);
        let (a, b) = interface_velocities(&State::new(0.0, rho, mu), &m);
        assert_eq!(a.max_abs(), 0.0);
        assert_eq!(b.max_abs(), 0.0);
    }

    #[test]
    fn velocities_pick_up_the_potential() {
        let grid = GridSpec::new(64).unwrap();
        let m = model(grid, 1.0, &[FourierMode::sin(1, 1.0)], 0.0);
        let st = State::new(0.0, Field::constant(grid, 0.5), Field::constant(grid, 0.5));
        let (a, b) = interface_velocities(&st, &m);
        assert!((a[63] - 2.0 * PI).abs() < 1e-12);
        assert_eq!(b.max_abs(), 0.0);
    }

    #[test]
    fn explicit_step_stationary_and_conservative() {
        let grid = GridSpec::new(64).unwrap();
        let m = model(grid, 1.0, &[], 0.0);
        let rho = Field::from_fn(grid, |x| 0.5 + 0.25 * (2.0 * PI * x).cos());
        let mu = rho.map(|r| 1.0 - r);
        let st = State::new(0.0, rho, mu);
        let next = step_explicit(&st, 1e-4, &m).unwrap();
        for i in 0..64 {
            assert!((next.rho[i] - st.rho[i]).abs() <= 1e-15);
        }

        let m = model(grid, 0.5, &[FourierMode::sin(1, 1.0)], 0.01);
        let rho = Field::from_fn(grid, |x| 1.0 + 0.4 * (2.0 * PI * x).sin());
        let mu = Field::from_fn(grid, |x| 0.6 + 0.3 * (4.0 * PI * x).cos());
        let st = State::new(0.0, rho, mu);
        let dt = cfl_dt(&st, &m, 0.5, StepperKind::Explicit);
        let next = step_explicit(&st, dt, &m).unwrap();
        assert!((next.mass_rho() - st.mass_rho()).abs() <= 1e-14);
        assert!((next.mass_mu() - st.mass_mu()).abs() <= 1e-14);
    }

    #[test]
    fn explicit_step_reports_positivity_breach() {
        let grid = GridSpec::new(16).unwrap();
        let m = model(grid, 1.0, &[FourierMode::sin(1, 1.0)], 0.0);
        let rho = Field::from_fn(grid, |x| 1e-3 + (2.0 * PI * x).cos().powi(2));
        let st = State::new(0.0, rho, Field::constant(grid, 1.0));
        let err = step_explicit(&st, 10.0, &m).unwrap_err();
        assert!(err.to_string().contains("positivity violated"));
    }

    #[test]
    fn cfl_formula_examples() {
        let grid = GridSpec::new(128).unwrap();
        let st = State::new(0.0, Field::constant(grid, 0.6), Field::constant(grid, 0.6));
        let dt0 = cfl_dt(&st, &model(grid, 1.0, &[], 0.0), 0.5, StepperKind::Explicit);
        assert!((dt0 - 0.5 * (1.0 / 128.0f64).powi(2) / 2.0).abs() < 1e-18);
        let dt1 = cfl_dt(&st, &model(grid, 1.0, &[], 1.0), 0.5, StepperKind::Explicit);
        assert!((dt1 - 0.5 * dt0).abs() < 1e-18);

        let low = State::new(0.0, Field::constant(grid, 0.5e-4), Field::constant(grid, 0.5e-4));
        let dt_low = cfl_dt(&low, &model(grid, 0.5, &[], 0.0), 0.5, StepperKind::Explicit);
        let dt_unit = 0.5 * (1.0 / 128.0f64).powi(2) / 2.0;
        assert!((dt_low - dt_unit / 50.0).abs() < 1e-12 * dt_unit);
    }

    #[test]
    fn semi_implicit_constant_state_is_fixed_point() {
        let grid = GridSpec::new(32).unwrap();
        let m = model(grid, 0.5, &[], 0.0);
        let st = State::new(0.0, Field::constant(grid, 0.3), Field::constant(grid, 0.9));
        let (next, stats) = step_semi_implicit_with_stats(&st, 1e-2, &m).unwrap();
        assert_eq!(stats.newton_iterations, 0);
        for i in 0..32 {
            assert!((next.rho[i] - 0.3).abs() <= 1e-13);
            assert!((next.mu[i] - 0.9).abs() <= 1e-13);
        }
    }

    #[test]
    fn semi_implicit_newton_converges_quickly() {
        let grid = GridSpec::new(128).unwrap();
        let m = model(grid, 0.5, &[FourierMode::sin(1, 1.0)], 0.0);
        let rho = Field::from_fn(grid, |x| 0.5 + 0.2 * (2.0 * PI * x).cos());
        let mu = Field::from_fn(grid, |x| 0.5 + 0.2 * (2.0 * PI * x).sin());
        let st = State::new(0.0, rho, mu);
        let dt = cfl_dt(&st, &m, 0.5, StepperKind::SemiImplicit);
        let (next, stats) = step_semi_implicit_with_stats(&st, dt, &m).unwrap();
        assert!(stats.newton_iterations >= 1 && stats.newton_iterations <= 12);
        assert!((next.mass_rho() - st.mass_rho()).abs() <= 1e-14);
        assert!((next.mass_mu() - st.mass_mu()).abs() <= 1e-14);
    }

    #[test]
    fn run_with_zero_horizon_returns_initial_state() {
        let grid = GridSpec::new(8).unwrap();
        let initial = crate::model::validate_initial(
            Field::constant(grid, 1.0),
            Field::constant(grid, 2.0),
        )
        .unwrap();
        let problem = ProblemSpec {
            grid,
            model: Model {
                nonlinearity: Nonlinearity::new(1.0).unwrap(),
                potentials: PotentialPair::zero(grid),
                eps_viscosity: 0.0,
            },
            initial,
            t_final: 0.0,
            stepper: StepperKind::Explicit,
            cfl_safety: 0.5,
            snapshot_times: vec![0.0],
        };
        let traj = run(&problem).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert!(traj.step_log.is_empty());
        assert_eq!(traj.snapshots[0].rho, problem.initial.rho0);
    }
}
