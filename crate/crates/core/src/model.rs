//! Problem data: the power-law pressure family, trigonometric potentials and
//! validated initial densities.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, InterfaceField};

pub const DEFAULT_S_FLOOR: f64 = 1e-12;

/// Which closed-form function of the nonlinearity to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    F,
    FPrime,
    FSecond,
    Phi,
    PhiPrime,
    Y,
    YPrime,
}

/// Pressure law with aggregate diffusion `Phi(s) = s^alpha`, linked to the
/// pressure by `Phi'(s) = s f''(s)`.
///
/// The integration constant of `f'` is fixed by `f'(inf) = 0` for `alpha < 1`
/// and `f'(1) = 0` for `alpha = 1`. Every evaluation clamps its argument at
/// `s_floor` from below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    alpha: f64,
    s_floor: f64,
}

impl Nonlinearity {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_floor(alpha, DEFAULT_S_FLOOR)
    }

    pub fn with_floor(alpha: f64, s_floor: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        if !(s_floor > 0.0 && s_floor.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "s_floor must be positive, got {s_floor}"
            )));
        }
        Ok(Self { alpha, s_floor })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn s_floor(&self) -> f64 {
        self.s_floor
    }

    pub fn is_linear(&self) -> bool {
        self.alpha == 1.0
    }

    /// Whether `s` would be clamped by an evaluation.
    pub fn clamps(&self, s: f64) -> bool {
        !(s >= self.s_floor)
    }

    fn clamp(&self, s: f64) -> f64 {
        if s >= self.s_floor {
            s
        } else {
            self.s_floor
        }
    }

    pub fn eval(&self, s: f64, which: Which) -> f64 {
        match which {
            Which::F => self.f(s),
            Which::FPrime => self.f_prime(s),
            Which::FSecond => self.f_second(s),
            Which::Phi => self.phi(s),
            Which::PhiPrime => self.phi_prime(s),
            Which::Y => self.y(s),
            Which::YPrime => self.y_prime(s),
        }
    }

    pub fn f(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        if self.is_linear() {
            s * s.ln() - s
        } else {
            s.powf(self.alpha) / (self.alpha - 1.0)
        }
    }

    pub fn f_prime(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        if self.is_linear() {
            s.ln()
        } else {
            -(self.alpha / (1.0 - self.alpha)) * s.powf(self.alpha - 1.0)
        }
    }

    pub fn f_second(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        self.alpha * s.powf(self.alpha - 2.0)
    }

    pub fn phi(&self, s: f64) -> f64 {
        self.clamp(s).powf(self.alpha)
    }

    pub fn phi_prime(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        self.alpha * s.powf(self.alpha - 1.0)
    }

    /// Shift profile `y(s) = -s^(1-alpha) / alpha^2`; identically `-1` for `alpha = 1`.
    pub fn y(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        -s.powf(1.0 - self.alpha) / (self.alpha * self.alpha)
    }

    pub fn y_prime(&self, s: f64) -> f64 {
        let s = self.clamp(s);
        -(1.0 - self.alpha) * s.powf(-self.alpha) / (self.alpha * self.alpha)
    }
}

/// One term `cos_coeff * cos(2 pi k x) + sin_coeff * sin(2 pi k x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierMode {
    pub k: usize,
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

impl FourierMode {
    pub fn new(k: usize, cos_coeff: f64, sin_coeff: f64) -> Self {
        Self {
            k,
            cos_coeff,
            sin_coeff,
        }
    }

    pub fn cos(k: usize, c: f64) -> Self {
        Self::new(k, c, 0.0)
    }

    pub fn sin(k: usize, s: f64) -> Self {
        Self::new(k, 0.0, s)
    }

    /// Derivative of the given order (0..=3) at `x`.
    pub fn derivative(&self, order: usize, x: f64) -> f64 {
        let omega = 2.0 * PI * self.k as f64;
        let (sn, cs) = (omega * x).sin_cos();
        let (a, b) = (self.cos_coeff, self.sin_coeff);
        match order {
            0 => a * cs + b * sn,
            1 => omega * (b * cs - a * sn),
            2 => -omega * omega * (a * cs + b * sn),
            3 => omega * omega * omega * (a * sn - b * cs),
            _ => panic!("derivative order {order} not tabulated"),
        }
    }
}

/// Evaluate a finite trigonometric sum (or one of its first three derivatives).
pub fn eval_modes(modes: &[FourierMode], order: usize, x: f64) -> f64 {
    modes.iter().map(|m| m.derivative(order, x)).sum()
}

/// Exact derivative tables of one potential at cell centers and interfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    /// `cells[d][i]` is the `d`-th derivative at `x_i`.
    pub cells: [Field; 4],
    /// `faces[d][i]` is the `d`-th derivative at `x_{i+1/2}`.
    pub faces: [InterfaceField; 4],
}

impl SampledPotential {
    fn sample(modes: &[FourierMode], grid: GridSpec) -> Self {
        Self {
            cells: std::array::from_fn(|d| Field::from_fn(grid, |x| eval_modes(modes, d, x))),
            faces: std::array::from_fn(|d| {
                InterfaceField::from_fn(grid, |x| eval_modes(modes, d, x))
            }),
        }
    }

    fn shifted(&self, m: isize) -> Self {
        Self {
            cells: std::array::from_fn(|d| self.cells[d].shift(m)),
            faces: std::array::from_fn(|d| self.faces[d].shift(m)),
        }
    }

    pub fn value(&self) -> &Field {
        &self.cells[0]
    }

    pub fn grad_faces(&self) -> &InterfaceField {
        &self.faces[1]
    }

    pub fn grad_cells(&self) -> &Field {
        &self.cells[1]
    }

    pub fn laplacian_cells(&self) -> &Field {
        &self.cells[2]
    }
}

/// The external potentials `V` (acting on rho) and `W` (acting on mu).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPair {
    grid: GridSpec,
    modes_v: Vec<FourierMode>,
    modes_w: Vec<FourierMode>,
    pub v_pot: SampledPotential,
    pub w_pot: SampledPotential,
    /// `(V' + W') / 2` at interfaces.
    pub half_sum: InterfaceField,
    /// `(V' - W') / 2` at interfaces.
    pub half_diff: InterfaceField,
    /// `d/dx (V' - W') / 2` at interfaces.
    pub half_diff_dx: InterfaceField,
}

impl PotentialPair {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn modes_v(&self) -> &[FourierMode] {
        &self.modes_v
    }

    pub fn modes_w(&self) -> &[FourierMode] {
        &self.modes_w
    }

    pub fn zero(grid: GridSpec) -> Self {
        build_potentials(&[], &[], grid).expect("empty mode lists are always valid")
    }

    /// Same potentials with every sample table rotated by `m` cells.
    ///
    /// The result no longer corresponds to the stored mode lists; it exists to
    /// test translation equivariance of the scheme on identical sample bits.
    pub fn shifted(&self, m: isize) -> Self {
        Self {
            grid: self.grid,
            modes_v: self.modes_v.clone(),
            modes_w: self.modes_w.clone(),
            v_pot: self.v_pot.shifted(m),
            w_pot: self.w_pot.shifted(m),
            half_sum: self.half_sum.shift(m),
            half_diff: self.half_diff.shift(m),
            half_diff_dx: self.half_diff_dx.shift(m),
        }
    }

    /// Exchange the roles of `V` and `W`.
    pub fn swapped(&self) -> Self {
        Self {
            grid: self.grid,
            modes_v: self.modes_w.clone(),
            modes_w: self.modes_v.clone(),
            v_pot: self.w_pot.clone(),
            w_pot: self.v_pot.clone(),
            half_sum: self.half_sum.clone(),
            half_diff: self.half_diff.map(|v| -v),
            half_diff_dx: self.half_diff_dx.map(|v| -v),
        }
    }

    /// `max(max|V'|, max|W'|)` over all samples.
    pub fn max_drift(&self) -> f64 {
        [
            self.v_pot.faces[1].max_abs(),
            self.v_pot.cells[1].max_abs(),
            self.w_pot.faces[1].max_abs(),
            self.w_pot.cells[1].max_abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn build_potentials(
    modes_v: &[FourierMode],
    modes_w: &[FourierMode],
    grid: GridSpec,
) -> Result<PotentialPair> {
    let n = grid.n_cells();
    for m in modes_v.iter().chain(modes_w) {
        if 4 * m.k > n {
            return Err(Error::ModeTooHigh { k: m.k, n_cells: n });
        }
        if !(m.cos_coeff.is_finite() && m.sin_coeff.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "non-finite potential coefficient for k={}",
                m.k
            )));
        }
    }
    let v_pot = SampledPotential::sample(modes_v, grid);
    let w_pot = SampledPotential::sample(modes_w, grid);
    let half_sum = v_pot.faces[1].zip_map(&w_pot.faces[1], |a, b| 0.5 * (a + b));
    let half_diff = v_pot.faces[1].zip_map(&w_pot.faces[1], |a, b| 0.5 * (a - b));
    let half_diff_dx = v_pot.faces[2].zip_map(&w_pot.faces[2], |a, b| 0.5 * (a - b));
    Ok(PotentialPair {
        grid,
        modes_v: modes_v.to_vec(),
        modes_w: modes_w.to_vec(),
        v_pot,
        w_pot,
        half_sum,
        half_diff,
        half_diff_dx,
    })
}

/// Strictly positive initial densities with their entropy and log-ratio
/// total variation.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub rho0: Field,
    pub mu0: Field,
    pub entropy0: f64,
    pub log_ratio_bv0: f64,
}

pub fn validate_initial(rho0: Field, mu0: Field) -> Result<InitialData> {
    if rho0.grid() != mu0.grid() {
        return Err(Error::LengthMismatch {
            expected: rho0.len(),
            got: mu0.len(),
        });
    }
    for field in [&rho0, &mu0] {
        for (i, &v) in field.values().iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if v <= 0.0 {
                return Err(Error::NonPositive(i));
            }
        }
    }
    let entropy0 = rho0
        .zip_map(&mu0, |r, m| r * r.ln() + m * m.ln())
        .integrate();
    let n = rho0.len();
    let ratio: Vec<f64> = rho0
        .values()
        .iter()
        .zip(mu0.values())
        .map(|(r, m)| (r / m).ln())
        .collect();
    let log_ratio_bv0 = (0..n).map(|i| (ratio[(i + 1) % n] - ratio[i]).abs()).sum();
    Ok(InitialData {
        rho0,
        mu0,
        entropy0,
        log_ratio_bv0,
    })
}

/// Grid-independent description of one initial density.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    /// `offset + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x)` sampled at centers.
    Modes { offset: f64, modes: Vec<FourierMode> },
    /// Explicit cell values. Finer dyadic grids receive them by injection.
    Values(Vec<f64>),
}

impl InitialProfile {
    pub fn constant(c: f64) -> Self {
        Self::Modes {
            offset: c,
            modes: Vec::new(),
        }
    }

    pub fn sample(&self, grid: GridSpec) -> Result<Field> {
        match self {
            Self::Modes { offset, modes } => {
                Field::new(grid, grid.centers().map(|x| offset + eval_modes(modes, 0, x)).collect())
            }
            Self::Values(v) => {
                let n = grid.n_cells();
                if v.is_empty() || !n.is_multiple_of(v.len()) {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        got: v.len(),
                    });
                }
                let rep = n / v.len();
                Field::new(grid, v.iter().flat_map(|&x| std::iter::repeat_n(x, rep)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepperKind {
    #[default]
    Explicit,
    SemiImplicit,
}

impl std::str::FromStr for StepperKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Self::Explicit),
            "semi-implicit" => Ok(Self::SemiImplicit),
            other => Err(Error::Config(format!("unknown stepper `{other}`"))),
        }
    }
}

impl std::fmt::Display for StepperKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Explicit => "explicit",
            Self::SemiImplicit => "semi-implicit",
        })
    }
}

/// Everything the right-hand side of the system depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub nonlinearity: Nonlinearity,
    pub potentials: PotentialPair,
    pub eps_viscosity: f64,
}

impl Model {
    pub fn grid(&self) -> GridSpec {
        self.potentials.grid()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub model: Model,
    pub initial: InitialData,
    pub t_final: f64,
    pub stepper: StepperKind,
    pub cfl_safety: f64,
    pub snapshot_times: Vec<f64>,
}

impl ProblemSpec {
    /// Uniformly spaced snapshot schedule `0, T/count, ..., T`.
    pub fn uniform_snapshots(t_final: f64, count: usize) -> Vec<f64> {
        if count == 0 || t_final == 0.0 {
            return vec![0.0];
        }
        (0..=count)
            .map(|j| {
                if j == count {
                    t_final
                } else {
                    t_final * j as f64 / count as f64
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProblem(m));
        if self.model.grid() != self.grid || self.initial.rho0.grid() != self.grid {
            return bad("grid mismatch between problem components".into());
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be finite and >= 0, got {}", self.t_final));
        }
        if !(self.model.eps_viscosity >= 0.0 && self.model.eps_viscosity.is_finite()) {
            return bad(format!(
                "viscosity must be finite and >= 0, got {}",
                self.model.eps_viscosity
            ));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety must lie in (0,1], got {}", self.cfl_safety));
        }
        let times = &self.snapshot_times;
        if times.first() != Some(&0.0) || times.last() != Some(&self.t_final) {
            return bad("snapshot_times must start at 0 and end at t_final".into());
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("snapshot_times must be strictly increasing".into());
        }
        Ok(())
    }
}
