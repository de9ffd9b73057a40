//! Resolution of the pressure velocity against the analytic log gradient.
//!
//! The two-point difference of `log S` has leading error `dx^2/24 |(log S)'''|`,
//! which for `S = 1 + 0.5 cos(2 pi x)` at `n = 256` is 2.021e-4. The 2e-4
//! target below is therefore missed by about 1% and this test is expected to
//! fail; it is kept at the target value rather than relaxed.

use std::f64::consts::PI;

use crossdiff::grid::{Field, GridSpec};
use crossdiff::model::{Model, Nonlinearity, PotentialPair};
use crossdiff::solver::{interface_velocities, State};

fn worst_error(n: usize) -> f64 {
    let grid = GridSpec::new(n).unwrap();
    let s = |x: f64| 1.0 + 0.5 * (2.0 * PI * x).cos();
    let half = Field::from_fn(grid, |x| 0.5 * s(x));
    let st = State::new(0.0, half.clone(), half);
    let model = Model {
        nonlinearity: Nonlinearity::new(1.0).unwrap(),
        potentials: PotentialPair::zero(grid),
        eps_viscosity: 0.0,
    };
    let (a_rho, _) = interface_velocities(&st, &model);
    grid.interfaces()
        .enumerate()
        .map(|(i, x)| (a_rho[i] + PI * (2.0 * PI * x).sin() / s(x)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn velocity_error_is_second_order() {
    let (e1, e2) = (worst_error(256), worst_error(512));
    assert!((e1 / e2 - 4.0).abs() < 0.05, "{e1} {e2}");
}

#[test]
fn velocity_matches_log_gradient_at_256() {
    let e = worst_error(256);
    assert!(e <= 2e-4, "max |a_rho - d_x log S| = {e}");
}
