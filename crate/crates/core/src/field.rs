//! Complex fields on a spacetime grid and their finite-difference derivatives.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{SpacetimeGrid, MIN_NODES};

/// A closed-form complex function of `(x, t)` with analytic derivatives.
///
/// The analytic derivatives are what make the "residual <= 1e-8 with analytic
/// derivatives" checks possible; stencil checks go through [`ComplexField`].
pub trait SpacetimeFunction: Send + Sync {
    fn value(&self, x: f64, t: f64) -> Complex64;
    fn d_t(&self, x: f64, t: f64) -> Complex64;
    fn d_x(&self, x: f64, t: f64) -> Complex64;
    fn d_xx(&self, x: f64, t: f64) -> Complex64;
}

/// `c` everywhere.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub Complex64);

impl SpacetimeFunction for Constant {
    fn value(&self, _x: f64, _t: f64) -> Complex64 {
        self.0
    }
    fn d_t(&self, _x: f64, _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn d_x(&self, _x: f64, _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn d_xx(&self, _x: f64, _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

/// Which axis a stencil runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Space,
    Time,
}

/// Derivative order supported by [`finite_difference`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

/// Complex values on every node of a [`SpacetimeGrid`], plus a validity mask.
///
/// Nodes inside an exclusion window hold NaN and are masked out; derivative
/// fields additionally mask every node whose stencil touched a masked node.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: SpacetimeGrid,
    values: Vec<Complex64>,
    valid: Vec<bool>,
}

impl ComplexField {
    /// Evaluate `f` at every non-excluded node.
    pub fn from_fn<F>(grid: &SpacetimeGrid, what: &'static str, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, f64) -> Complex64,
    {
        let mut values = vec![Complex64::new(f64::NAN, f64::NAN); grid.len()];
        let mut valid = vec![false; grid.len()];
        for j in 0..grid.n_t() {
            if grid.is_excluded(j) {
                continue;
            }
            let t = grid.t(j);
            for i in 0..grid.n_x() {
                let x = grid.x(i);
                let v = f(x, t);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite { what, x, t });
                }
                let k = grid.index(i, j);
                values[k] = v;
                valid[k] = true;
            }
        }
        Ok(Self { grid: grid.clone(), values, valid })
    }

    /// Sample the value of a closed-form function.
    pub fn sample(grid: &SpacetimeGrid, what: &'static str, f: &dyn SpacetimeFunction) -> Result<Self> {
        Self::from_fn(grid, what, |x, t| f.value(x, t))
    }

    pub fn constant(grid: &SpacetimeGrid, c: Complex64) -> Self {
        Self::from_fn(grid, "constant", |_, _| c).expect("finite constant")
    }

    /// Assemble from raw parts; `values` and `valid` must match the grid size.
    pub fn from_parts(grid: SpacetimeGrid, values: Vec<Complex64>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || valid.len() != grid.len() {
            return Err(Error::Mismatch("field storage does not match grid size"));
        }
        Ok(Self { grid, values, valid })
    }

    pub fn grid(&self) -> &SpacetimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[self.grid.index(i, j)]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Nodewise combination; the result is valid where both inputs are.
    pub fn zip_with<F>(&self, other: &Self, mut f: F) -> Result<Self>
    where
        F: FnMut(Complex64, Complex64) -> Complex64,
    {
        if self.grid != other.grid {
            return Err(Error::Mismatch("fields live on different grids"));
        }
        let mut values = Vec::with_capacity(self.values.len());
        let mut valid = Vec::with_capacity(self.values.len());
        for k in 0..self.values.len() {
            let ok = self.valid[k] && other.valid[k];
            valid.push(ok);
            values.push(if ok {
                f(self.values[k], other.values[k])
            } else {
                Complex64::new(f64::NAN, f64::NAN)
            });
        }
        Ok(Self { grid: self.grid.clone(), values, valid })
    }

    /// Nodewise map over the valid nodes.
    pub fn map<F>(&self, mut f: F) -> Self
    where
        F: FnMut(Complex64) -> Complex64,
    {
        let values = self
            .values
            .iter()
            .zip(&self.valid)
            .map(|(v, ok)| if *ok { f(*v) } else { *v })
            .collect();
        Self { grid: self.grid.clone(), values, valid: self.valid.clone() }
    }

    /// Nodewise map with coordinates.
    pub fn map_with_coords<F>(&self, mut f: F) -> Self
    where
        F: FnMut(f64, f64, Complex64) -> Complex64,
    {
        let mut out = self.clone();
        for j in 0..self.grid.n_t() {
            let t = self.grid.t(j);
            for i in 0..self.grid.n_x() {
                let k = self.grid.index(i, j);
                if out.valid[k] {
                    out.values[k] = f(self.grid.x(i), t, self.values[k]);
                }
            }
        }
        out
    }

    /// Largest modulus over valid nodes, or `None` if no node is valid.
    pub fn max_abs(&self) -> Option<f64> {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, ok)| **ok)
            .map(|(v, _)| v.norm())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// Largest modulus over nodes valid in `self` and in `mask`.
    pub fn max_abs_where(&self, mask: &[bool]) -> Option<f64> {
        self.values
            .iter()
            .zip(self.valid.iter().zip(mask))
            .filter(|(_, (a, b))| **a && **b)
            .map(|(v, _)| v.norm())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// Keep only nodes whose index is valid in `mask` as well.
    pub fn restrict(&self, mask: &[bool]) -> Self {
        let mut out = self.clone();
        for (ok, m) in out.valid.iter_mut().zip(mask) {
            *ok = *ok && *m;
        }
        out
    }
}

/// Second-order finite difference along `axis`.
///
/// Interior nodes use the central stencil; the two boundary nodes use
/// second-order one-sided stencils (three points for the first derivative,
/// four for the second). A node is valid only if every node its stencil
/// reads is valid, so nodes adjacent to an exclusion window drop out.
pub fn finite_difference(field: &ComplexField, axis: Axis, order: Order) -> Result<ComplexField> {
    let grid = field.grid();
    let (len, h, name) = match axis {
        Axis::Space => (grid.n_x(), grid.hx(), "space"),
        Axis::Time => (grid.n_t(), grid.ht(), "time"),
    };
    if len < MIN_NODES {
        return Err(Error::AxisTooSmall { axis: name, nodes: len, required: MIN_NODES });
    }
    let (lines, stride_line, stride_axis) = match axis {
        Axis::Space => (grid.n_t(), grid.n_x(), 1),
        Axis::Time => (grid.n_x(), 1, grid.n_x()),
    };

    let mut values = vec![Complex64::new(f64::NAN, f64::NAN); grid.len()];
    let mut valid = vec![false; grid.len()];
    let src = field.values();
    let ok = field.mask();

    for line in 0..lines {
        let base = line * stride_line;
        let idx = |p: usize| base + p * stride_axis;
        for p in 0..len {
            let (taps, weights): (&[isize], &[f64]) = stencil(p, len, order);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut all_valid = true;
            for (off, w) in taps.iter().zip(weights) {
                let q = idx((p as isize + off) as usize);
                if !ok[q] {
                    all_valid = false;
                    break;
                }
                acc += src[q] * *w;
            }
            if all_valid {
                let scale = match order {
                    Order::First => h,
                    Order::Second => h * h,
                };
                values[idx(p)] = acc / scale;
                valid[idx(p)] = true;
            }
        }
    }
    ComplexField::from_parts(grid.clone(), values, valid)
}

fn stencil(p: usize, len: usize, order: Order) -> (&'static [isize], &'static [f64]) {
    match order {
        Order::First => {
            if p == 0 {
                (&[0, 1, 2], &[-1.5, 2.0, -0.5])
            } else if p + 1 == len {
                (&[0, -1, -2], &[1.5, -2.0, 0.5])
            } else {
                (&[-1, 1], &[-0.5, 0.5])
            }
        }
        Order::Second => {
            if p == 0 {
                (&[0, 1, 2, 3], &[2.0, -5.0, 4.0, -1.0])
            } else if p + 1 == len {
                (&[0, -1, -2, -3], &[2.0, -5.0, 4.0, -1.0])
            } else {
                (&[-1, 0, 1], &[1.0, -2.0, 1.0])
            }
        }
    }
}

/// Second-order first derivative of uniformly spaced real samples.
pub fn derivative_samples(values: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < MIN_NODES {
        return Err(Error::AxisTooSmall { axis: "samples", nodes: n, required: MIN_NODES });
    }
    Ok((0..n)
        .map(|p| {
            let (taps, w) = stencil(p, n, Order::First);
            taps.iter()
                .zip(w)
                .map(|(o, w)| values[(p as isize + o) as usize] * w)
                .sum::<f64>()
                / h
        })
        .collect())
}

/// Second-order second derivative of uniformly spaced real samples.
pub fn second_derivative_samples(values: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < MIN_NODES {
        return Err(Error::AxisTooSmall { axis: "samples", nodes: n, required: MIN_NODES });
    }
    Ok((0..n)
        .map(|p| {
            let (taps, w) = stencil(p, n, Order::Second);
            taps.iter()
                .zip(w)
                .map(|(o, w)| values[(p as isize + o) as usize] * w)
                .sum::<f64>()
                / (h * h)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Window;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn quadratic_second_derivative_is_exact() {
        let g = SpacetimeGrid::from_extents(-2.0, 3.0, 21, 0.0, 1.0, 5).unwrap();
        let f = ComplexField::from_fn(&g, "x^2", |x, _| c(x * x)).unwrap();
        let d2 = finite_difference(&f, Axis::Space, Order::Second).unwrap();
        for v in d2.values() {
            assert!((v.re - 2.0).abs() < 1e-10 * 2.0, "{v}");
        }
    }

    #[test]
    fn constant_first_derivative_vanishes() {
        let g = SpacetimeGrid::from_extents(0.0, 1.0, 8, 0.0, 1.0, 8).unwrap();
        let f = ComplexField::constant(&g, Complex64::new(3.0, -1.0));
        for axis in [Axis::Space, Axis::Time] {
            let d = finite_difference(&f, axis, Order::First).unwrap();
            assert!(d.max_abs().unwrap() < 1e-12);
        }
    }

    #[test]
    fn sine_converges_at_second_order() {
        let err = |n: usize| {
            let g = SpacetimeGrid::from_extents(0.0, 3.0, n, 0.0, 1.0, 4).unwrap();
            let f = ComplexField::from_fn(&g, "sin", |x, _| c(x.sin())).unwrap();
            let d2 = finite_difference(&f, Axis::Space, Order::Second).unwrap();
            let exact = ComplexField::from_fn(&g, "-sin", |x, _| c(-x.sin())).unwrap();
            d2.zip_with(&exact, |a, b| a - b).unwrap().max_abs().unwrap()
        };
        let e1 = err(161);
        let e2 = err(321);
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn time_axis_masks_nodes_next_to_exclusions() {
        let g = SpacetimeGrid::from_extents(0.0, 1.0, 4, 0.0, 1.0, 11)
            .unwrap()
            .with_exclusion(Window::new(0.45, 0.55).unwrap())
            .unwrap();
        let f = ComplexField::from_fn(&g, "t", |_, t| c(t)).unwrap();
        assert!(!f.is_valid(0, 5));
        let d = finite_difference(&f, Axis::Time, Order::First).unwrap();
        assert!(!d.is_valid(0, 4));
        assert!(!d.is_valid(0, 6));
        assert!(d.is_valid(0, 3));
        assert!((d.at(0, 3).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_short_axis() {
        let g = SpacetimeGrid::from_extents(0.0, 1.0, 4, 0.0, 1.0, 4).unwrap();
        let f = ComplexField::constant(&g, c(1.0));
        assert!(finite_difference(&f, Axis::Time, Order::Second).is_ok());
        assert!(derivative_samples(&[1.0, 2.0, 3.0], 1.0).is_err());
    }

    #[test]
    fn non_finite_sample_names_the_node() {
        let g = SpacetimeGrid::from_extents(0.0, 1.0, 5, 0.0, 1.0, 5).unwrap();
        let err = ComplexField::from_fn(&g, "probe", |x, _| c(1.0 / (x - 0.5))).unwrap_err();
        assert!(matches!(err, Error::NonFinite { what: "probe", .. }));
    }
}
