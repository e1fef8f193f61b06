//! Propagator factors `R`, `S` and assembly of `K = exp(R + iS/hbar)`.

use alloc::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::field::{ComplexField, SpacetimeFunction};
use crate::grid::SpacetimeGrid;

/// Two-point form of a propagator family: `S(x, x0, tau)` and `R(x, x0, tau)`
/// with `tau` the elapsed time since the initial point.
pub trait TwoPointAction: Send + Sync {
    fn action(&self, x: f64, x0: f64, tau: f64) -> f64;
    fn transport(&self, x: f64, x0: f64, tau: f64) -> Complex64;
}

/// One exponent factor, either closed-form or already sampled.
#[derive(Clone)]
pub enum Factor {
    Closed(Arc<dyn SpacetimeFunction>),
    Gridded(ComplexField),
}

impl core::fmt::Debug for Factor {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Factor::Closed(_) => f.write_str("Factor::Closed(..)"),
            Factor::Gridded(g) => write!(f, "Factor::Gridded({} nodes)", g.values().len()),
        }
    }
}

impl Factor {
    /// Values on `grid`; a gridded factor must already live there.
    pub fn sample(&self, grid: &SpacetimeGrid, what: &'static str) -> Result<ComplexField> {
        match self {
            Factor::Closed(f) => ComplexField::sample(grid, what, f.as_ref()),
            Factor::Gridded(field) => {
                if field.grid() != grid {
                    return Err(Error::Mismatch("gridded factor lives on a different grid"));
                }
                Ok(field.clone())
            }
        }
    }

    pub fn closed(&self) -> Option<&dyn SpacetimeFunction> {
        match self {
            Factor::Closed(f) => Some(f.as_ref()),
            Factor::Gridded(_) => None,
        }
    }
}

/// `R`, `S`, `hbar` and the mass, optionally with the two-point family the
/// pair was cut from.
#[derive(Clone, Debug)]
pub struct PropagatorFactors {
    pub transport: Factor,
    pub action: Factor,
    pub hbar: f64,
    pub mass: f64,
    pub two_point: Option<TwoPoint>,
}

/// A two-point family together with the source point `x0` used for the
/// one-point factors.
#[derive(Clone)]
pub struct TwoPoint {
    pub family: Arc<dyn TwoPointAction>,
    pub x0: f64,
}

impl core::fmt::Debug for TwoPoint {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "TwoPoint {{ x0: {} }}", self.x0)
    }
}

impl PropagatorFactors {
    pub fn new(transport: Factor, action: Factor, hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(invalid("hbar", "must be positive and finite"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(invalid("mass", "must be positive and finite"));
        }
        Ok(Self { transport, action, hbar, mass, two_point: None })
    }

    pub fn with_two_point(mut self, family: Arc<dyn TwoPointAction>, x0: f64) -> Self {
        self.two_point = Some(TwoPoint { family, x0 });
        self
    }
}

/// `K(x, t) = exp(R + (i/hbar) S)` at every valid node.
///
/// A non-finite exponent or an overflowing exponential is an error naming the
/// node, never clamped.
pub fn assemble_propagator(factors: &PropagatorFactors, grid: &SpacetimeGrid) -> Result<ComplexField> {
    let r = factors.transport.sample(grid, "R")?;
    let s = factors.action.sample(grid, "S")?;
    assemble_from_fields(&r, &s, factors.hbar)
}

/// Assembly from already sampled `R` and `S`.
pub fn assemble_from_fields(r: &ComplexField, s: &ComplexField, hbar: f64) -> Result<ComplexField> {
    if r.grid() != s.grid() {
        return Err(Error::Mismatch("R and S live on different grids"));
    }
    let grid = r.grid();
    let i_over_hbar = Complex64::new(0.0, 1.0 / hbar);
    let mut values = alloc::vec::Vec::with_capacity(grid.len());
    let mut valid = alloc::vec::Vec::with_capacity(grid.len());
    for j in 0..grid.n_t() {
        for i in 0..grid.n_x() {
            let ok = r.is_valid(i, j) && s.is_valid(i, j);
            if !ok {
                values.push(Complex64::new(f64::NAN, f64::NAN));
                valid.push(false);
                continue;
            }
            let exponent = r.at(i, j) + i_over_hbar * s.at(i, j);
            let (x, t) = (grid.x(i), grid.t(j));
            if !(exponent.re.is_finite() && exponent.im.is_finite()) {
                return Err(Error::NonFinite { what: "exponent", x, t });
            }
            let k = exponent.exp();
            if !(k.re.is_finite() && k.im.is_finite()) {
                return Err(Error::NonFinite { what: "propagator (exp overflow)", x, t });
            }
            values.push(k);
            valid.push(true);
        }
    }
    ComplexField::from_parts(grid.clone(), values, valid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Constant;
    use core::f64::consts::{LN_2, PI};

    fn grid() -> SpacetimeGrid {
        SpacetimeGrid::from_extents(-1.0, 1.0, 5, 0.0, 1.0, 5).unwrap()
    }

    fn constant_factors(r: Complex64, s: Complex64, hbar: f64) -> PropagatorFactors {
        PropagatorFactors::new(
            Factor::Closed(Arc::new(Constant(r))),
            Factor::Closed(Arc::new(Constant(s))),
            hbar,
            1.0,
        )
        .unwrap()
    }

    fn all_close(k: &ComplexField, want: Complex64) -> bool {
        k.values().iter().all(|v| (v - want).norm() < 1e-14)
    }

    #[test]
    fn identity_real_and_quarter_phase() {
        let z = Complex64::new(0.0, 0.0);
        let k = assemble_propagator(&constant_factors(z, z, 1.0), &grid()).unwrap();
        assert!(all_close(&k, Complex64::new(1.0, 0.0)));

        let k = assemble_propagator(&constant_factors(Complex64::new(LN_2, 0.0), z, 1.0), &grid()).unwrap();
        assert!(all_close(&k, Complex64::new(2.0, 0.0)));

        let hbar = 0.7;
        let s = Complex64::new(PI * hbar / 2.0, 0.0);
        let k = assemble_propagator(&constant_factors(z, s, hbar), &grid()).unwrap();
        assert!(all_close(&k, Complex64::new(0.0, 1.0)));
    }

    #[test]
    fn overflow_is_reported() {
        let z = Complex64::new(0.0, 0.0);
        let err = assemble_propagator(&constant_factors(Complex64::new(800.0, 0.0), z, 1.0), &grid()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn rejects_bad_constants() {
        let z = Arc::new(Constant(Complex64::new(0.0, 0.0)));
        assert!(PropagatorFactors::new(Factor::Closed(z.clone()), Factor::Closed(z.clone()), 0.0, 1.0).is_err());
        assert!(PropagatorFactors::new(Factor::Closed(z.clone()), Factor::Closed(z), 1.0, -1.0).is_err());
    }
}
