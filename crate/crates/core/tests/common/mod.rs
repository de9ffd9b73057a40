#![allow(dead_code)]

use std::f64::consts::PI;

use crossdiff::grid::{Field, GridSpec};
use crossdiff::model::{
    build_potentials, validate_initial, FourierMode, InitialProfile, Model, Nonlinearity,
    ProblemSpec, StepperKind,
};

/// Adaptive Simpson quadrature with Richardson correction.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

pub struct Scenario {
    pub problem: ProblemSpec,
    pub rho0: InitialProfile,
    pub mu0: InitialProfile,
}

pub fn profile(offset: f64, modes: &[FourierMode]) -> InitialProfile {
    InitialProfile::Modes {
        offset,
        modes: modes.to_vec(),
    }
}

pub fn scenario(
    n: usize,
    alpha: f64,
    v: &[FourierMode],
    w: &[FourierMode],
    rho0: InitialProfile,
    mu0: InitialProfile,
    t_final: f64,
    snapshots: usize,
) -> Scenario {
    let grid = GridSpec::new(n).unwrap();
    let initial = validate_initial(rho0.sample(grid).unwrap(), mu0.sample(grid).unwrap()).unwrap();
    let problem = ProblemSpec {
        grid,
        model: Model {
            nonlinearity: Nonlinearity::new(alpha).unwrap(),
            potentials: build_potentials(v, w, grid).unwrap(),
            eps_viscosity: 0.0,
        },
        initial,
        t_final,
        stepper: StepperKind::Explicit,
        cfl_safety: 0.5,
        snapshot_times: ProblemSpec::uniform_snapshots(t_final, snapshots),
    };
    Scenario { problem, rho0, mu0 }
}

/// `V = W = 0`, `rho0 = 0.5 + 0.25 cos`, `mu0 = 1 - rho0`: constant total,
/// so nothing moves.
pub fn stationary(n: usize, alpha: f64, t_final: f64, snapshots: usize) -> Scenario {
    scenario(
        n,
        alpha,
        &[],
        &[],
        profile(0.5, &[FourierMode::cos(1, 0.25)]),
        profile(0.5, &[FourierMode::cos(1, -0.25)]),
        t_final,
        snapshots,
    )
}

/// `alpha = 1`, no potentials, `rho0 = mu0 = (1 + 0.5 cos)/2`.
pub fn heat(n: usize, t_final: f64, snapshots: usize) -> Scenario {
    let p = profile(0.5, &[FourierMode::cos(1, 0.25)]);
    scenario(n, 1.0, &[], &[], p.clone(), p, t_final, snapshots)
}

/// `alpha = 1/2`, `V = sin`, `W = cos`, `rho0 = mu0 = 0.5 + 0.2 cos`.
pub fn fast_diffusion(n: usize, t_final: f64, snapshots: usize) -> Scenario {
    let p = profile(0.5, &[FourierMode::cos(1, 0.2)]);
    scenario(
        n,
        0.5,
        &[FourierMode::sin(1, 1.0)],
        &[FourierMode::cos(1, 1.0)],
        p.clone(),
        p,
        t_final,
        snapshots,
    )
}

/// Closed-form heat solution for the total density.
pub fn heat_total(grid: GridSpec, t: f64) -> Field {
    let amp = 0.5 * (-4.0 * PI * PI * t).exp();
    Field::from_fn(grid, |x| 1.0 + amp * (2.0 * PI * x).cos())
}
