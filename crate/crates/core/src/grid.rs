//! Uniform periodic grid on the unit torus and the staggered discrete calculus.
//!
//! Cell `i` has center `x_i = (i + 1/2) dx`. Interface values are stored in a
//! separate [`InterfaceField`] whose entry `i` lives at `x_{i+1/2} = (i + 1) dx`,
//! so interface `i` sits between cells `i` and `i + 1` (mod n).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n_cells: usize,
    dx: f64,
}

impl GridSpec {
    pub const MIN_CELLS: usize = 4;

    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < Self::MIN_CELLS {
            return Err(Error::GridTooSmall(n_cells));
        }
        Ok(Self {
            n_cells,
            dx: 1.0 / n_cells as f64,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Cell center `x_i`.
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n_cells as f64
    }

    /// Right interface of cell `i`, `x_{i+1/2}`.
    pub fn interface(&self, i: usize) -> f64 {
        (i as f64 + 1.0) / self.n_cells as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(|i| self.center(i))
    }

    pub fn interfaces(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(|i| self.interface(i))
    }

    /// Periodic index reduction, accepting any signed offset.
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n_cells as isize) as usize
    }

    /// Grid with twice the cells.
    pub fn refined(&self) -> Self {
        Self {
            n_cells: 2 * self.n_cells,
            dx: 1.0 / (2 * self.n_cells) as f64,
        }
    }
}

pub fn make_grid(n_cells: usize) -> Result<GridSpec> {
    GridSpec::new(n_cells)
}

fn check_values(grid: &GridSpec, values: &[f64]) -> Result<()> {
    if values.len() != grid.n_cells() {
        return Err(Error::LengthMismatch {
            expected: grid.n_cells(),
            got: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

/// Cell-averaged scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

/// Scalar field sampled at cell interfaces (entry `i` at `x_{i+1/2}`).
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceField {
    grid: GridSpec,
    values: Vec<f64>,
}

macro_rules! field_common {
    ($ty:ident, $pos:ident) => {
        impl $ty {
            pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
                check_values(&grid, &values)?;
                Ok(Self { grid, values })
            }

            /// Build without the finiteness check. Length is still asserted.
            pub(crate) fn from_vec(grid: GridSpec, values: Vec<f64>) -> Self {
                debug_assert_eq!(values.len(), grid.n_cells());
                Self { grid, values }
            }

            pub fn constant(grid: GridSpec, c: f64) -> Self {
                Self::from_vec(grid, vec![c; grid.n_cells()])
            }

            pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
                Self::from_vec(grid, (0..grid.n_cells()).map(|i| f(grid.$pos(i))).collect())
            }

            pub fn grid(&self) -> GridSpec {
                self.grid
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn len(&self) -> usize {
                self.values.len()
            }

            pub fn is_empty(&self) -> bool {
                self.values.is_empty()
            }

            pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
                Self::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
            }

            pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
                debug_assert_eq!(self.grid, other.grid);
                Self::from_vec(
                    self.grid,
                    self.values
                        .iter()
                        .zip(&other.values)
                        .map(|(&a, &b)| f(a, b))
                        .collect(),
                )
            }

            pub fn max(&self) -> f64 {
                self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }

            pub fn min(&self) -> f64 {
                self.values.iter().copied().fold(f64::INFINITY, f64::min)
            }

            pub fn max_abs(&self) -> f64 {
                self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            /// Midpoint quadrature over the torus.
            pub fn integrate(&self) -> f64 {
                self.values.iter().sum::<f64>() * self.grid.dx()
            }

            /// Circular rotation by `m` cells: `out[i] = self[i - m]`.
            pub fn shift(&self, m: isize) -> Self {
                let n = self.grid.n_cells();
                let start = self.grid.wrap(-m);
                let mut values = Vec::with_capacity(n);
                values.extend_from_slice(&self.values[start..]);
                values.extend_from_slice(&self.values[..start]);
                Self::from_vec(self.grid, values)
            }
        }

        impl std::ops::Index<usize> for $ty {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.values[i]
            }
        }
    };
}

field_common!(Field, center);
field_common!(InterfaceField, interface);

/// `(f_{i+1} - f_i) / dx` at interface `i + 1/2`.
pub fn grad_interface(f: &Field) -> InterfaceField {
    let grid = f.grid();
    let n = grid.n_cells();
    let inv_dx = n as f64;
    let v = f.values();
    let out = (0..n).map(|i| (v[(i + 1) % n] - v[i]) * inv_dx).collect();
    InterfaceField::from_vec(grid, out)
}

/// `(g_{i+1/2} - g_{i-1/2}) / dx` at cell `i`.
pub fn div_cell(g: &InterfaceField) -> Field {
    let grid = g.grid();
    let n = grid.n_cells();
    let inv_dx = n as f64;
    let v = g.values();
    let out = (0..n).map(|i| (v[i] - v[(i + n - 1) % n]) * inv_dx).collect();
    Field::from_vec(grid, out)
}

/// Average of the two adjacent cells at each interface.
pub fn interface_mean(f: &Field) -> InterfaceField {
    let grid = f.grid();
    let n = grid.n_cells();
    let v = f.values();
    let out = (0..n).map(|i| 0.5 * (v[i] + v[(i + 1) % n])).collect();
    InterfaceField::from_vec(grid, out)
}

/// Average of the two adjacent interfaces at each cell.
pub fn cell_mean(g: &InterfaceField) -> Field {
    let grid = g.grid();
    let n = grid.n_cells();
    let v = g.values();
    let out = (0..n).map(|i| 0.5 * (v[i] + v[(i + n - 1) % n])).collect();
    Field::from_vec(grid, out)
}

pub fn integrate(f: &Field) -> f64 {
    f.integrate()
}

pub fn shift(f: &Field, m: isize) -> Field {
    f.shift(m)
}

/// Piecewise-constant injection onto the grid with twice as many cells.
pub fn prolong(f: &Field) -> Field {
    let fine = f.grid().refined();
    let values = f.values().iter().flat_map(|&v| [v, v]).collect();
    Field::from_vec(fine, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    #[test]
    fn make_grid_examples() {
        let g8 = make_grid(8).unwrap();
        assert_eq!(g8.n_cells(), 8);
        assert_eq!(g8.dx(), 0.125);
        assert!(matches!(make_grid(3), Err(Error::GridTooSmall(3))));
        assert_eq!(make_grid(256).unwrap().dx(), 1.0 / 256.0);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let f = Field::constant(g(16), 3.7);
        assert!(grad_interface(&f).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_cosine() {
        let grid = g(256);
        let f = Field::from_fn(grid, |x| (2.0 * PI * x).cos());
        let d = grad_interface(&f);
        // two-point difference damps the mode by sin(pi dx)/(pi dx)
        let damp = (PI * grid.dx()).sin() / (PI * grid.dx());
        let amp = 2.0 * PI;
        for (i, &v) in d.values().iter().enumerate() {
            let exact = -amp * (2.0 * PI * grid.interface(i)).sin();
            assert!((v - exact).abs() <= 1e-3 * amp);
            assert!((v - damp * exact).abs() <= 1e-12 * amp);
        }
    }

    #[test]
    fn gradient_of_two_level_field() {
        let grid = g(8);
        let f = Field::from_vec(grid, vec![1.0, 1.0, 1.0, 3.0, 3.0, 3.0, 1.0, 1.0]);
        let d = grad_interface(&f);
        assert_eq!(d[2], 2.0 / grid.dx());
        assert_eq!(d[5], -2.0 / grid.dx());
        for i in [0, 1, 3, 4, 6, 7] {
            assert_eq!(d[i], 0.0);
        }
    }

    #[test]
    fn divergence_examples() {
        let grid = g(8);
        let c = InterfaceField::constant(grid, 2.5);
        assert!(div_cell(&c).values().iter().all(|&v| v == 0.0));

        let mut spike = vec![0.0; 8];
        spike[3] = 1.0;
        let d = div_cell(&InterfaceField::from_vec(grid, spike));
        assert_eq!(d[3], 1.0 / grid.dx());
        assert_eq!(d[4], -1.0 / grid.dx());
        assert_eq!(d.values().iter().filter(|&&v| v != 0.0).count(), 2);
    }

    #[test]
    fn integrate_examples() {
        let grid = g(64);
        assert!((Field::constant(grid, 2.0).integrate() - 2.0).abs() < 1e-15);
        let s = Field::from_fn(grid, |x| (2.0 * PI * x).sin());
        assert!(s.integrate().abs() < 1e-15);
        let c = Field::from_fn(grid, |x| 1.0 + 0.5 * (2.0 * PI * x).cos());
        assert!((c.integrate() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shift_examples() {
        let grid = g(8);
        let f = Field::from_fn(grid, |x| x * x);
        assert_eq!(f.shift(0), f);
        assert_eq!(f.shift(8), f);
        let mut delta = vec![0.0; 8];
        delta[0] = 1.0;
        let d = Field::from_vec(grid, delta);
        let moved = d.shift(1);
        assert_eq!(moved[1], 1.0);
        assert_eq!(moved.values().iter().sum::<f64>(), 1.0);
        assert_eq!(d.shift(-1)[7], 1.0);
    }

    #[test]
    fn new_rejects_bad_input() {
        let grid = g(4);
        assert!(matches!(
            Field::new(grid, vec![1.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            Field::new(grid, vec![1.0, f64::NAN, 1.0, 1.0]),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn prolong_preserves_mass() {
        let grid = g(16);
        let f = Field::from_fn(grid, |x| 1.0 + (2.0 * PI * x).sin().powi(3));
        let p = prolong(&f);
        assert_eq!(p.len(), 32);
        assert!((p.integrate() - f.integrate()).abs() <= 1e-14);
    }
}
