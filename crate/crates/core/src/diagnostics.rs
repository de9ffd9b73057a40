//! Functionals controlled by the a priori estimates, the weak-formulation
//! residual, and the space/time translation moduli, evaluated on trajectories.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{cell_mean, grad_interface, Field, GridSpec};
use crate::model::Model;
use crate::solver::{rate_of_change, State, Trajectory};
use crate::transforms::{shifted_gradient_u, to_sum_ratio};

/// `alpha + beta` closer to 1 than this switches to the logarithmic branch.
const LOG_BRANCH_TOL: f64 = 1e-9;

pub fn entropy(state: &State) -> f64 {
    state
        .rho
        .zip_map(&state.mu, |r, m| r * r.ln() + m * m.ln())
        .integrate()
}

/// `F[rho, mu] = int f(rho + mu) + rho V + mu W`.
pub fn energy(state: &State, model: &Model) -> f64 {
    let nl = &model.nonlinearity;
    let v = model.potentials.v_pot.value().values();
    let w = model.potentials.w_pot.value().values();
    let dx = state.rho.grid().dx();
    let sum: f64 = (0..state.rho.len())
        .map(|i| {
            let (r, m) = (state.rho[i], state.mu[i]);
            nl.f(r + m) + r * v[i] + m * w[i]
        })
        .sum();
    sum * dx
}

/// `int f''(S)|d_x S|^2`, discretised as `sum d_x f'(S) d_x S dx` (nonnegative
/// because `f'` is increasing).
pub fn entropy_dissipation(state: &State, model: &Model) -> f64 {
    let nl = &model.nonlinearity;
    let s = state.total();
    let ds = grad_interface(&s);
    let dp = grad_interface(&s.map(|v| nl.f_prime(v)));
    ds.zip_map(&dp, |a, b| a * b).integrate()
}

/// `int rho V'' + mu W''`, the right-hand side of the entropy identity.
pub fn entropy_source(state: &State, model: &Model) -> f64 {
    let v2 = model.potentials.v_pot.laplacian_cells();
    let w2 = model.potentials.w_pot.laplacian_cells();
    let dx = state.rho.grid().dx();
    let sum: f64 = (0..state.rho.len())
        .map(|i| state.rho[i] * v2[i] + state.mu[i] * w2[i])
        .sum();
    sum * dx
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaDissipation {
    /// `d/dt int -S^beta` from the semi-discrete right-hand side.
    pub lhs_rate_proxy: f64,
    /// `alpha beta (1 - beta) int S^(alpha+beta-3) |d_x S|^2`.
    pub dissipation: f64,
    /// `C int S^(beta+1-alpha)` with `C = beta (1-beta) M^2 / (2 alpha)` and
    /// `M = max(|V'|, |W'|)`.
    pub rhs_bound: f64,
}

pub fn dissipation_beta(state: &State, model: &Model, beta: f64) -> Result<BetaDissipation> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::BetaOutOfRange(beta));
    }
    let alpha = model.nonlinearity.alpha();
    let floor = model.nonlinearity.s_floor();
    let s = state.total().map(|v| v.max(floor));
    let weight = alpha * beta * (1.0 - beta);

    let dissipation = if weight == 0.0 {
        0.0
    } else if (alpha + beta - 1.0).abs() < LOG_BRANCH_TOL {
        let g = grad_interface(&s.map(f64::ln));
        weight * g.map(|v| v * v).integrate()
    } else {
        let p = 0.5 * (alpha + beta - 1.0);
        let g = grad_interface(&s.map(|v| v.powf(p)));
        weight / (p * p) * g.map(|v| v * v).integrate()
    };

    let (drho, dmu) = rate_of_change(state, model);
    let dx = s.grid().dx();
    let lhs_rate_proxy = -beta
        * (0..s.len())
            .map(|i| s[i].powf(beta - 1.0) * (drho[i] + dmu[i]))
            .sum::<f64>()
        * dx;

    let m = model.potentials.max_drift();
    let c = beta * (1.0 - beta) * m * m / (2.0 * alpha);
    let rhs_bound = c * s.map(|v| v.powf(beta + 1.0 - alpha)).integrate();
    Ok(BetaDissipation {
        lhs_rate_proxy,
        dissipation,
        rhs_bound,
    })
}

/// `(sum |r_{i+1} - r_i|, sum |u_{i+1/2}| dx)`.
pub fn bv_norms(state: &State, model: &Model) -> Result<(f64, f64)> {
    let sr = to_sum_ratio(state)?;
    let n = sr.r.len();
    let r = sr.r.values();
    let bv_r = (0..n).map(|i| (r[(i + 1) % n] - r[i]).abs()).sum();
    let u = shifted_gradient_u(&sr, &model.potentials, &model.nonlinearity);
    Ok((bv_r, u.map(f64::abs).integrate()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LebesgueNorms {
    /// `int S^(2-alpha)`
    pub norm_s_2ma: f64,
    /// `max S^(1-alpha)`
    pub sup_s_pow: f64,
    /// `int |d_x log S|^2`
    pub fisher_log: f64,
    /// `||S - mean(S)||_{H^-1}`
    pub h_minus_one: f64,
}

pub fn lebesgue_norms(state: &State, model: &Model) -> LebesgueNorms {
    let alpha = model.nonlinearity.alpha();
    let floor = model.nonlinearity.s_floor();
    let s = state.total().map(|v| v.max(floor));
    let glog = grad_interface(&s.map(f64::ln));
    LebesgueNorms {
        norm_s_2ma: s.map(|v| v.powf(2.0 - alpha)).integrate(),
        sup_s_pow: s.map(|v| v.powf(1.0 - alpha)).max(),
        fisher_log: glog.map(|v| v * v).integrate(),
        h_minus_one: h_minus_one_norm(&s),
    }
}

/// `||f - mean(f)||_{H^-1} = ||d_x phi||_{L^2}` with `-phi'' = f - mean(f)`,
/// evaluated from the discrete Fourier coefficients of the cell values.
pub fn h_minus_one_norm(f: &Field) -> f64 {
    let n = f.len();
    let mut buf: Vec<Complex<f64>> = f.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let sum: f64 = (1..n)
        .map(|k| {
            let freq = k.min(n - k) as f64;
            let c = buf[k] * scale;
            c.norm_sqr() / (2.0 * PI * freq).powi(2)
        })
        .sum();
    sum.sqrt()
}

/// `int |d_x S^(alpha/2)|^2`, the quantity bounded in `L^2` in time by the
/// entropy dissipation.
pub fn grad_half_alpha_sq(state: &State, model: &Model) -> f64 {
    let nl = &model.nonlinearity;
    let p = 0.5 * nl.alpha();
    let s = state.total().map(|v| v.max(nl.s_floor()).powf(p));
    grad_interface(&s).map(|v| v * v).integrate()
}

/// Raised-cosine cutoff `chi(t) = (1 + cos(pi t / tau)) / 2` on `[0, tau)`,
/// zero afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub tau: f64,
}

impl Cutoff {
    pub fn value(&self, t: f64) -> f64 {
        if t >= self.tau {
            0.0
        } else {
            0.5 * (1.0 + (PI * t / self.tau).cos())
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t >= self.tau {
            0.0
        } else {
            -0.5 * PI / self.tau * (PI * t / self.tau).sin()
        }
    }

    /// `(int_a^b chi, int_a^b (t - a) chi)`, exact.
    fn moments(&self, a: f64, b: f64) -> (f64, f64) {
        if a >= self.tau {
            return (0.0, 0.0);
        }
        let b = b.min(self.tau);
        let om = PI / self.tau;
        let m0 = 0.5 * (b - a) + 0.5 * ((om * b).sin() - (om * a).sin()) / om;
        // int (t - a) cos(om t) = [(t - a) sin(om t)/om + cos(om t)/om^2]
        let m1 = 0.25 * (b - a) * (b - a)
            + 0.5 * ((b - a) * (om * b).sin() / om + ((om * b).cos() - (om * a).cos()) / (om * om));
        (m0, m1)
    }

    /// `(int_a^b chi', int_a^b (t - a) chi')`, exact.
    fn derivative_moments(&self, a: f64, b: f64) -> (f64, f64) {
        if a >= self.tau {
            return (0.0, 0.0);
        }
        let bc = b.min(self.tau);
        let (m0, _) = self.moments(a, bc);
        let d0 = self.value(bc) - self.value(a);
        let d1 = (bc - a) * self.value(bc) - m0;
        (d0, d1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialMode {
    Constant,
    Cos(usize),
    Sin(usize),
}

impl SpatialMode {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Constant => 1.0,
            Self::Cos(k) => (2.0 * PI * k as f64 * x).cos(),
            Self::Sin(k) => (2.0 * PI * k as f64 * x).sin(),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Self::Constant => 0.0,
            Self::Cos(k) => {
                let om = 2.0 * PI * k as f64;
                -om * (om * x).sin()
            }
            Self::Sin(k) => {
                let om = 2.0 * PI * k as f64;
                om * (om * x).cos()
            }
        }
    }
}

/// Separable test function `phi(t, x) = chi(t) m(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub id: usize,
    pub cutoff: Cutoff,
    pub mode: SpatialMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionBank {
    pub k_max: usize,
    pub t_final: f64,
    pub functions: Vec<TestFunction>,
}

pub const DEFAULT_BANK_K: usize = 8;
pub const DEFAULT_BANK_PROFILES: usize = 2;

impl TestFunctionBank {
    /// Modes `k = 0..=k_max` (cosine and sine) times `n_profiles` cutoffs whose
    /// support ends at `(7/8) T (j + 1) / n_profiles`, so every test function
    /// vanishes identically on `[7T/8, T]`.
    pub fn new(grid: GridSpec, t_final: f64, k_max: usize, n_profiles: usize) -> Result<Self> {
        if 4 * k_max > grid.n_cells() {
            return Err(Error::ModeTooHigh {
                k: k_max,
                n_cells: grid.n_cells(),
            });
        }
        if !(t_final > 0.0) || n_profiles == 0 {
            return Err(Error::InvalidProblem(
                "test function bank needs t_final > 0 and at least one profile".into(),
            ));
        }
        let mut functions = Vec::new();
        for j in 0..n_profiles {
            let cutoff = Cutoff {
                tau: 0.875 * t_final * (j + 1) as f64 / n_profiles as f64,
            };
            let modes = std::iter::once(SpatialMode::Constant)
                .chain((1..=k_max).map(SpatialMode::Cos))
                .chain((1..=k_max).map(SpatialMode::Sin));
            for mode in modes {
                functions.push(TestFunction {
                    id: functions.len(),
                    cutoff,
                    mode,
                });
            }
        }
        Ok(Self {
            k_max,
            t_final,
            functions,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Species {
    Rho,
    Mu,
}

impl Species {
    pub fn as_str(&self) -> &'static str {
        match self {
            Species::Rho => "rho",
            Species::Mu => "mu",
        }
    }
}

impl std::str::FromStr for Species {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(Species::Rho),
            "mu" => Ok(Species::Mu),
            other => Err(Error::Config(format!("unknown species `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualEntry {
    pub phi_id: usize,
    pub species: Species,
    pub residual: f64,
}

pub fn max_abs_residual(entries: &[ResidualEntry]) -> f64 {
    entries.iter().fold(0.0, |m, e| m.max(e.residual.abs()))
}

/// Residual of the weak formulation against every test function in the bank,
/// for both species.
///
/// Space integrals use the midpoint rule with `d_x f'(S)` and `d_x rho` taken
/// as central differences at cell centers. In time the snapshot data are
/// interpolated linearly and integrated exactly against the analytic cutoff
/// and its derivative, so spatially constant test functions reproduce the
/// mass identity to roundoff.
pub fn weak_residual(traj: &Trajectory, bank: &TestFunctionBank) -> Result<Vec<ResidualEntry>> {
    let snaps = &traj.snapshots;
    if snaps.len() < 2 {
        return Err(Error::TooFewSnapshots {
            needed: 2,
            got: snaps.len(),
        });
    }
    let model = &traj.problem.model;
    let grid = traj.problem.grid;
    let nl = &model.nonlinearity;
    let eps = model.eps_viscosity;
    let dx = grid.dx();
    let xs: Vec<f64> = grid.centers().collect();

    // per snapshot: density and flux density rho (d_x f'(S) + V') at cells
    let per_snap: Vec<[(Vec<f64>, Vec<f64>); 2]> = snaps
        .par_iter()
        .map(|st| {
            let s = st.total();
            let dp = cell_mean(&grad_interface(&s.map(|v| nl.f_prime(v))));
            let mk = |c: &Field, d: &Field| {
                let dens = c.values().to_vec();
                let dc = cell_mean(&grad_interface(c));
                let flux = (0..c.len())
                    .map(|i| c[i] * (dp[i] + d[i]) + eps * dc[i])
                    .collect();
                (dens, flux)
            };
            [
                mk(&st.rho, model.potentials.v_pot.grad_cells()),
                mk(&st.mu, model.potentials.w_pot.grad_cells()),
            ]
        })
        .collect();

    let entries = bank
        .functions
        .par_iter()
        .flat_map_iter(|phi| {
            let mv: Vec<f64> = xs.iter().map(|&x| phi.mode.value(x)).collect();
            let md: Vec<f64> = xs.iter().map(|&x| phi.mode.derivative(x)).collect();
            let per_snap = &per_snap;
            [Species::Rho, Species::Mu].into_iter().map(move |sp| {
                let idx = sp as usize;
                let proj: Vec<(f64, f64)> = per_snap
                    .iter()
                    .map(|s| {
                        let (dens, flux) = &s[idx];
                        let p: f64 = dens.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>() * dx;
                        let q: f64 = flux.iter().zip(&md).map(|(a, b)| a * b).sum::<f64>() * dx;
                        (p, q)
                    })
                    .collect();
                let mut lhs = 0.0;
                for n in 0..snaps.len() - 1 {
                    let (a, b) = (snaps[n].t, snaps[n + 1].t);
                    let h = b - a;
                    let (d0, d1) = phi.cutoff.derivative_moments(a, b);
                    let (c0, c1) = phi.cutoff.moments(a, b);
                    let (p0, q0) = proj[n];
                    let (p1, q1) = proj[n + 1];
                    lhs -= p0 * d0 + (p1 - p0) * d1 / h;
                    lhs += q0 * c0 + (q1 - q0) * c1 / h;
                }
                let rhs = proj[0].0 * phi.cutoff.value(snaps[0].t);
                ResidualEntry {
                    phi_id: phi.id,
                    species: sp,
                    residual: lhs - rhs,
                }
            })
        })
        .collect();
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusPoint {
    pub lag: f64,
    pub rho: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Moduli {
    pub space: Vec<ModulusPoint>,
    pub time: Vec<ModulusPoint>,
}

fn l1_diff(a: &Field, b: &Field) -> f64 {
    a.zip_map(b, |x, y| (x - y).abs()).integrate()
}

/// Trapezoid weights on the snapshot times (sum to `T`).
fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for j in 0..n.saturating_sub(1) {
        let h = times[j + 1] - times[j];
        w[j] += 0.5 * h;
        w[j + 1] += 0.5 * h;
    }
    w
}

/// `int_0^T int |c(t, x + m dx) - c(t, x)| dx dt` for both species.
pub fn space_modulus(traj: &Trajectory, m: usize) -> (f64, f64) {
    let w = trapezoid_weights(&traj.times());
    traj.snapshots
        .iter()
        .zip(&w)
        .fold((0.0, 0.0), |(r, u), (st, &wt)| {
            let shift = m as isize;
            (
                r + wt * l1_diff(&st.rho.shift(shift), &st.rho),
                u + wt * l1_diff(&st.mu.shift(shift), &st.mu),
            )
        })
}

/// `sum_n dt_snap int |c(t_n + j dt_snap) - c(t_n)|` over pairs inside the
/// horizon, for both species. Requires uniformly spaced snapshots.
pub fn time_modulus(traj: &Trajectory, j: usize) -> Option<(f64, f64)> {
    let spacing = uniform_spacing(&traj.times())?;
    let snaps = &traj.snapshots;
    let mut acc = (0.0, 0.0);
    for n in 0..snaps.len().saturating_sub(j) {
        acc.0 += spacing * l1_diff(&snaps[n + j].rho, &snaps[n].rho);
        acc.1 += spacing * l1_diff(&snaps[n + j].mu, &snaps[n].mu);
    }
    Some(acc)
}

fn uniform_spacing(times: &[f64]) -> Option<f64> {
    if times.len() < 2 {
        return None;
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    uniform.then_some(h)
}

/// Moduli on dyadic lags: `h = dx, 2dx, 4dx, ... <= 1/4` in space and
/// `k = dt_snap, 2 dt_snap, ...` in time. The time curve is left empty when
/// the snapshots are not uniformly spaced.
pub fn equicontinuity_moduli(traj: &Trajectory) -> Moduli {
    if traj.snapshots.len() < 2 {
        return Moduli::default();
    }
    let grid = traj.problem.grid;
    let n = grid.n_cells();
    let space_lags: Vec<usize> = std::iter::successors(Some(1usize), |m| Some(m * 2))
        .take_while(|&m| 4 * m <= n)
        .collect();
    let space = space_lags
        .par_iter()
        .map(|&m| {
            let (rho, mu) = space_modulus(traj, m);
            ModulusPoint {
                lag: m as f64 * grid.dx(),
                rho,
                mu,
            }
        })
        .collect();

    let times = traj.times();
    let time = match uniform_spacing(&times) {
        Some(h) => std::iter::successors(Some(1usize), |j| Some(j * 2))
            .take_while(|&j| j < times.len())
            .collect::<Vec<_>>()
            .par_iter()
            .filter_map(|&j| {
                time_modulus(traj, j).map(|(rho, mu)| ModulusPoint {
                    lag: j as f64 * h,
                    rho,
                    mu,
                })
            })
            .collect(),
        None => Vec::new(),
    };
    Moduli { space, time }
}

/// One row of `scalars.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRow {
    pub t: f64,
    pub mass_rho: f64,
    pub mass_mu: f64,
    pub entropy: f64,
    pub energy: f64,
    pub diss_entropy: f64,
    pub diss_beta_a: f64,
    pub diss_beta_1ma: f64,
    pub fisher_log: f64,
    pub bv_r: f64,
    pub bv_u: f64,
    pub norm_s_2ma: f64,
    pub sup_s_pow: f64,
    pub h_minus_one: f64,
}

impl ScalarRow {
    pub const HEADER: [&'static str; 14] = [
        "t",
        "mass_rho",
        "mass_mu",
        "entropy",
        "energy",
        "diss_entropy",
        "diss_beta_a",
        "diss_beta_1ma",
        "fisher_log",
        "bv_r",
        "bv_u",
        "norm_S_2ma",
        "sup_S_pow",
        "h_minus_one",
    ];

    pub fn to_array(&self) -> [f64; 14] {
        [
            self.t,
            self.mass_rho,
            self.mass_mu,
            self.entropy,
            self.energy,
            self.diss_entropy,
            self.diss_beta_a,
            self.diss_beta_1ma,
            self.fisher_log,
            self.bv_r,
            self.bv_u,
            self.norm_s_2ma,
            self.sup_s_pow,
            self.h_minus_one,
        ]
    }

    pub fn from_array(a: [f64; 14]) -> Self {
        Self {
            t: a[0],
            mass_rho: a[1],
            mass_mu: a[2],
            entropy: a[3],
            energy: a[4],
            diss_entropy: a[5],
            diss_beta_a: a[6],
            diss_beta_1ma: a[7],
            fisher_log: a[8],
            bv_r: a[9],
            bv_u: a[10],
            norm_s_2ma: a[11],
            sup_s_pow: a[12],
            h_minus_one: a[13],
        }
    }
}

pub fn scalar_row(state: &State, model: &Model) -> Result<ScalarRow> {
    let alpha = model.nonlinearity.alpha();
    let (bv_r, bv_u) = bv_norms(state, model)?;
    let leb = lebesgue_norms(state, model);
    Ok(ScalarRow {
        t: state.t,
        mass_rho: state.mass_rho(),
        mass_mu: state.mass_mu(),
        entropy: entropy(state),
        energy: energy(state, model),
        diss_entropy: entropy_dissipation(state, model),
        diss_beta_a: dissipation_beta(state, model, alpha)?.dissipation,
        diss_beta_1ma: dissipation_beta(state, model, 1.0 - alpha)?.dissipation,
        fisher_log: leb.fisher_log,
        bv_r,
        bv_u,
        norm_s_2ma: leb.norm_s_2ma,
        sup_s_pow: leb.sup_s_pow,
        h_minus_one: leb.h_minus_one,
    })
}

/// Measured constant of a one-sided inequality checked between consecutive
/// snapshots with tolerance `C (dt + dx)(t2 - t1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    /// `lhs - rhs` per snapshot interval; nonpositive means satisfied exactly.
    pub excess: Vec<f64>,
    /// Smallest `C >= 0` making every interval pass.
    pub constant: f64,
}

impl Budget {
    fn from_excess(excess: Vec<f64>, times: &[f64], dt: f64, dx: f64) -> Self {
        let constant = excess
            .iter()
            .zip(times.windows(2))
            .map(|(&e, w)| e.max(0.0) / ((dt + dx) * (w[1] - w[0])))
            .fold(0.0, f64::max);
        Self { excess, constant }
    }
}

/// `entropy(t2) - entropy(t1) <= int_{t1}^{t2} int (rho V'' + mu W'')`, with the
/// source integrated by the trapezoid rule over the snapshot interval.
pub fn entropy_budget(traj: &Trajectory) -> Result<Budget> {
    let model = &traj.problem.model;
    let vals: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| (entropy(s), entropy_source(s, model)))
        .collect();
    let times = traj.times();
    let excess = vals
        .windows(2)
        .zip(times.windows(2))
        .map(|(v, t)| v[1].0 - v[0].0 - 0.5 * (v[0].1 + v[1].1) * (t[1] - t[0]))
        .collect();
    Ok(Budget::from_excess(
        excess,
        &times,
        traj.max_dt(),
        traj.problem.grid.dx(),
    ))
}

/// `energy(t2) <= energy(t1)` between consecutive snapshots.
pub fn energy_budget(traj: &Trajectory) -> Budget {
    let model = &traj.problem.model;
    let e: Vec<f64> = traj.snapshots.iter().map(|s| energy(s, model)).collect();
    let times = traj.times();
    let excess = e.windows(2).map(|w| w[1] - w[0]).collect();
    Budget::from_excess(excess, &times, traj.max_dt(), traj.problem.grid.dx())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub rows: Vec<ScalarRow>,
    pub omega_space: Vec<ModulusPoint>,
    pub omega_time: Vec<ModulusPoint>,
    pub residuals: Vec<ResidualEntry>,
    pub clamp_events: usize,
    pub entropy_budget_c: f64,
    pub energy_budget_c: f64,
}

impl DiagnosticsReport {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn max_residual(&self) -> f64 {
        max_abs_residual(&self.residuals)
    }

    pub fn sup_of(&self, f: impl Fn(&ScalarRow) -> f64) -> f64 {
        self.rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Which optional parts of the report to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportOptions {
    pub moduli: bool,
    pub residuals: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            moduli: true,
            residuals: true,
        }
    }
}

pub fn report(traj: &Trajectory, bank: Option<&TestFunctionBank>) -> Result<DiagnosticsReport> {
    report_with(traj, bank, ReportOptions::default())
}

pub fn report_with(
    traj: &Trajectory,
    bank: Option<&TestFunctionBank>,
    opts: ReportOptions,
) -> Result<DiagnosticsReport> {
    let model = &traj.problem.model;
    let rows = traj
        .snapshots
        .par_iter()
        .map(|s| scalar_row(s, model))
        .collect::<Result<Vec<_>>>()?;
    let moduli = if opts.moduli {
        equicontinuity_moduli(traj)
    } else {
        Moduli::default()
    };
    let residuals = match bank {
        Some(bank) if opts.residuals && traj.snapshots.len() >= 2 => weak_residual(traj, bank)?,
        _ => Vec::new(),
    };
    Ok(DiagnosticsReport {
        rows,
        omega_space: moduli.space,
        omega_time: moduli.time,
        residuals,
        clamp_events: traj.clamp_events(),
        entropy_budget_c: entropy_budget(traj)?.constant,
        energy_budget_c: energy_budget(traj).constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_potentials, FourierMode, Nonlinearity, PotentialPair};

    fn model(grid: GridSpec, alpha: f64) -> Model {
        Model {
            nonlinearity: Nonlinearity::new(alpha).unwrap(),
            potentials: PotentialPair::zero(grid),
            eps_viscosity: 0.0,
        }
    }

    fn constant_state(grid: GridSpec, rho: f64, mu: f64) -> State {
        State::new(0.0, Field::constant(grid, rho), Field::constant(grid, mu))
    }

    #[test]
    fn entropy_and_energy_closed_forms() {
        let grid = GridSpec::new(16).unwrap();
        assert_eq!(entropy(&constant_state(grid, 1.0, 1.0)), 0.0);
        let e = entropy(&constant_state(grid, 3.0, 1.0));
        assert!((e - 3.0 * 3f64.ln()).abs() < 1e-14);

        let one = constant_state(grid, 1.0, 1.0);
        let f1 = energy(&one, &model(grid, 1.0));
        assert!((f1 - (2.0 * 2f64.ln() - 2.0)).abs() < 1e-14);
        let fh = energy(&one, &model(grid, 0.5));
        assert!((fh + 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn beta_endpoints_and_range() {
        let grid = GridSpec::new(32).unwrap();
        let m = model(grid, 0.5);
        let rho = Field::from_fn(grid, |x| 1.0 + 0.3 * (2.0 * PI * x).cos());
        let st = State::new(0.0, rho, Field::constant(grid, 0.5));
        assert_eq!(dissipation_beta(&st, &m, 0.0).unwrap().dissipation, 0.0);
        assert_eq!(dissipation_beta(&st, &m, 1.0).unwrap().dissipation, 0.0);
        assert!(matches!(
            dissipation_beta(&st, &m, 1.5),
            Err(Error::BetaOutOfRange(_))
        ));
    }

    #[test]
    fn power_and_log_branches_agree_near_the_switch() {
        let grid = GridSpec::new(128).unwrap();
        let m = model(grid, 0.5);
        let rho = Field::from_fn(grid, |x| 1.0 + 0.3 * (2.0 * PI * x).cos());
        let st = State::new(0.0, rho, Field::constant(grid, 0.5));
        let at = dissipation_beta(&st, &m, 0.5).unwrap().dissipation;
        let near = dissipation_beta(&st, &m, 0.5 + 1e-6).unwrap().dissipation;
        assert!((at - near).abs() < 1e-5 * at);
    }

    #[test]
    fn bv_of_constant_ratio_is_zero() {
        let grid = GridSpec::new(32).unwrap();
        let (bv_r, bv_u) = bv_norms(&constant_state(grid, 2.0, 0.5), &model(grid, 0.7)).unwrap();
        assert_eq!(bv_r, 0.0);
        assert_eq!(bv_u, 0.0);
    }

    #[test]
    fn lebesgue_norms_of_unit_total() {
        let grid = GridSpec::new(32).unwrap();
        let l = lebesgue_norms(&constant_state(grid, 0.25, 0.75), &model(grid, 0.5));
        assert!((l.norm_s_2ma - 1.0).abs() < 1e-15);
        assert_eq!(l.sup_s_pow, 1.0);
        assert_eq!(l.fisher_log, 0.0);
        assert!(l.h_minus_one < 1e-15);
    }

    #[test]
    fn h_minus_one_single_mode() {
        let grid = GridSpec::new(64).unwrap();
        let s = Field::from_fn(grid, |x| 1.0 + 0.5 * (2.0 * PI * x).cos());
        let expected = 0.25 * 2f64.sqrt() / (2.0 * PI);
        assert!((h_minus_one_norm(&s) - expected).abs() < 1e-14);
        let mut bump = vec![1.0; 64];
        bump[10] = 1.1;
        assert!(h_minus_one_norm(&Field::from_vec(grid, bump)) > 0.0);
    }

    #[test]
    fn cutoff_moments_match_fine_quadrature() {
        let c = Cutoff { tau: 0.7 };
        for (a, b) in [(0.0, 0.1), (0.3, 0.65), (0.6, 0.9), (0.8, 1.0)] {
            let n = 20000;
            let h = (b - a) / n as f64;
            let (mut m0, mut m1, mut d0, mut d1) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..n {
                let t = a + (i as f64 + 0.5) * h;
                m0 += c.value(t) * h;
                m1 += (t - a) * c.value(t) * h;
                d0 += c.derivative(t) * h;
                d1 += (t - a) * c.derivative(t) * h;
            }
            let (e0, e1) = c.moments(a, b);
            let (f0, f1) = c.derivative_moments(a, b);
            assert!((e0 - m0).abs() < 1e-8, "{a} {b}");
            assert!((e1 - m1).abs() < 1e-8);
            assert!((f0 - d0).abs() < 1e-7);
            assert!((f1 - d1).abs() < 1e-7);
        }
    }

    #[test]
    fn bank_layout_and_support() {
        let grid = GridSpec::new(64).unwrap();
        let bank = TestFunctionBank::new(grid, 0.8, 4, 2).unwrap();
        assert_eq!(bank.functions.len(), 2 * 9);
        for f in &bank.functions {
            assert!(f.cutoff.tau <= 0.875 * 0.8 + 1e-15);
            assert_eq!(f.cutoff.value(0.0), 1.0);
            assert_eq!(f.cutoff.value(0.8 * 0.875), 0.0);
        }
        assert!(matches!(
            TestFunctionBank::new(grid, 0.8, 17, 2),
            Err(Error::ModeTooHigh { .. })
        ));
    }

    #[test]
    fn potentials_enter_the_source_term() {
        let grid = GridSpec::new(64).unwrap();
        let mut m = model(grid, 1.0);
        m.potentials = build_potentials(&[FourierMode::cos(1, 1.0)], &[], grid).unwrap();
        let st = State::new(
            0.0,
            Field::from_fn(grid, |x| 1.0 + 0.5 * (2.0 * PI * x).cos()),
            Field::constant(grid, 1.0),
        );
        // int (1 + 0.5 cos)(-4 pi^2 cos) = -pi^2
        assert!((entropy_source(&st, &m) + PI * PI).abs() < 1e-12);
    }
}
