//! Change of variables `(rho, mu) <-> (S, r)` with `S = rho + mu` and
//! `r = log(rho / mu)`, plus the auxiliary functions of the log-ratio and the
//! shifted gradient `u = d_x r - 2 w y(S)`.

use crate::error::{Error, Result};
use crate::grid::{grad_interface, interface_mean, Field, InterfaceField};
use crate::model::{Nonlinearity, PotentialPair};
use crate::solver::State;

#[derive(Debug, Clone, PartialEq)]
pub struct SumRatioState {
    pub s: Field,
    pub r: Field,
}

/// Logistic function, branch-selected so that `exp` never overflows.
pub fn logistic(r: f64) -> f64 {
    if r >= 0.0 {
        1.0 / (1.0 + (-r).exp())
    } else {
        let e = r.exp();
        e / (1.0 + e)
    }
}

pub fn to_sum_ratio(state: &State) -> Result<SumRatioState> {
    for field in [&state.rho, &state.mu] {
        if let Some(i) = field.values().iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositive(i));
        }
    }
    Ok(SumRatioState {
        s: state.rho.zip_map(&state.mu, |a, b| a + b),
        r: state.rho.zip_map(&state.mu, |a, b| (a / b).ln()),
    })
}

/// Inverse map. Densities whose share underflows (`|r|` beyond ~745) come back
/// as exact zeros rather than NaN.
pub fn from_sum_ratio(sr: &SumRatioState, t: f64) -> State {
    State {
        t,
        rho: sr.s.zip_map(&sr.r, |s, r| s * logistic(r)),
        mu: sr.s.zip_map(&sr.r, |s, r| s * logistic(-r)),
    }
}

/// `h(r) = (e^r - 1)/(e^r + 1)`, `h'(r) = 2 e^r / (e^r + 1)^2` and
/// `g'(r) = (1 - e^r)/(1 + e^r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioFunctions {
    pub h: f64,
    pub h_prime: f64,
    pub g_prime: f64,
}

pub fn hg_eval(r: f64) -> RatioFunctions {
    let h = (0.5 * r).tanh();
    RatioFunctions {
        h,
        h_prime: 2.0 * logistic(r) * logistic(-r),
        g_prime: -h,
    }
}

/// `u_{i+1/2} = (r_{i+1} - r_i)/dx - 2 w_{i+1/2} y(S_{i+1/2})` with the
/// interface total density taken as the mean of the two neighbours.
pub fn shifted_gradient_u(
    sr: &SumRatioState,
    pot: &PotentialPair,
    nl: &Nonlinearity,
) -> InterfaceField {
    let dr = grad_interface(&sr.r);
    let s_face = interface_mean(&sr.s);
    let y_face = s_face.map(|s| nl.y(s));
    let w = &pot.half_diff;
    let out = (0..dr.len())
        .map(|i| dr[i] - 2.0 * w[i] * y_face[i])
        .collect();
    InterfaceField::from_vec(dr.grid(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::model::{build_potentials, FourierMode};

    fn state(grid: GridSpec, rho: f64, mu: f64) -> State {
        State {
            t: 0.0,
            rho: Field::constant(grid, rho),
            mu: Field::constant(grid, mu),
        }
    }

    #[test]
    fn forward_examples() {
        let grid = GridSpec::new(8).unwrap();
        let sr = to_sum_ratio(&state(grid, 1.0, 1.0)).unwrap();
        assert_eq!(sr.s[0], 2.0);
        assert_eq!(sr.r[0], 0.0);
        let sr = to_sum_ratio(&state(grid, 3.0, 1.0)).unwrap();
        assert_eq!(sr.s[3], 4.0);
        assert!((sr.r[3] - 3f64.ln()).abs() < 1e-15);
        assert!(matches!(
            to_sum_ratio(&state(grid, 0.0, 1.0)),
            Err(Error::NonPositive(0))
        ));
    }

    #[test]
    fn inverse_examples() {
        let grid = GridSpec::new(8).unwrap();
        let st = from_sum_ratio(
            &SumRatioState {
                s: Field::constant(grid, 2.0),
                r: Field::constant(grid, 0.0),
            },
            0.0,
        );
        assert_eq!((st.rho[0], st.mu[0]), (1.0, 1.0));

        let st = from_sum_ratio(
            &SumRatioState {
                s: Field::constant(grid, 4.0),
                r: Field::constant(grid, 3f64.ln()),
            },
            0.0,
        );
        assert!((st.rho[0] - 3.0).abs() < 1e-14 && (st.mu[0] - 1.0).abs() < 1e-14);

        let st = from_sum_ratio(
            &SumRatioState {
                s: Field::constant(grid, 1.0),
                r: Field::constant(grid, 800.0),
            },
            0.0,
        );
        assert_eq!(st.rho[0], 1.0);
        assert!(st.mu[0] >= 0.0 && st.mu[0].is_finite());
    }

    #[test]
    fn ratio_function_examples() {
        let z = hg_eval(0.0);
        assert_eq!((z.h, z.h_prime, z.g_prime), (0.0, 0.5, 0.0));
        assert!((hg_eval(3f64.ln()).h - 0.5).abs() < 1e-15);
        let big = hg_eval(800.0);
        assert_eq!((big.h, big.h_prime, big.g_prime), (1.0, 0.0, -1.0));
        let neg = hg_eval(-800.0);
        assert_eq!((neg.h, neg.h_prime, neg.g_prime), (-1.0, 0.0, 1.0));
    }

    #[test]
    fn ratio_function_identities() {
        let mut prev = f64::NEG_INFINITY;
        for j in 0..=400 {
            let r = -20.0 + 0.1 * j as f64;
            let f = hg_eval(r);
            let e = r.exp();
            assert!((f.h - (e - 1.0) / (e + 1.0)).abs() < 1e-14);
            assert!((f.h_prime - 2.0 * e / ((e + 1.0) * (e + 1.0))).abs() < 1e-14);
            assert_eq!(f.g_prime, -f.h);
            assert!(f.h.abs() < 1.0 || r.abs() > 36.0);
            assert!(f.h_prime > 0.0 && f.h_prime <= 0.5);
            assert!(f.h > prev || r.abs() > 36.0);
            prev = f.h;
        }
    }

    #[test]
    fn shift_vanishes_for_equal_potentials() {
        let grid = GridSpec::new(32).unwrap();
        let modes = [FourierMode::sin(1, 1.0)];
        let pot = build_potentials(&modes, &modes, grid).unwrap();
        let nl = Nonlinearity::new(0.5).unwrap();
        let rho = Field::from_fn(grid, |x| 1.0 + 0.3 * (6.0 * x).sin());
        let mu = Field::constant(grid, 0.7);
        let sr = to_sum_ratio(&State { t: 0.0, rho, mu }).unwrap();
        assert_eq!(shifted_gradient_u(&sr, &pot, &nl), grad_interface(&sr.r));
    }

    #[test]
    fn shift_at_linear_diffusion_is_potential_gradient() {
        let grid = GridSpec::new(64).unwrap();
        let pot = build_potentials(&[FourierMode::sin(1, 1.0)], &[], grid).unwrap();
        let nl = Nonlinearity::new(1.0).unwrap();
        let sr = to_sum_ratio(&state(grid, 0.8, 0.8)).unwrap();
        let u = shifted_gradient_u(&sr, &pot, &nl);
        for i in 0..64 {
            assert!((u[i] - pot.v_pot.faces[1][i]).abs() < 1e-13);
        }
    }

    #[test]
    fn shift_at_half_uses_y_of_four() {
        let grid = GridSpec::new(64).unwrap();
        let pot = build_potentials(&[FourierMode::sin(1, 1.0)], &[], grid).unwrap();
        let nl = Nonlinearity::new(0.5).unwrap();
        let sr = to_sum_ratio(&state(grid, 2.0, 2.0)).unwrap();
        let u = shifted_gradient_u(&sr, &pot, &nl);
        for i in 0..64 {
            assert!((u[i] - 16.0 * pot.half_diff[i]).abs() < 1e-12);
        }
    }
}
