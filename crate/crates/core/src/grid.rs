//! Uniform grids and caustic exclusion windows.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{invalid, Result};

/// Minimum node count along any axis; the one-sided second-derivative
/// stencil touches four nodes.
pub const MIN_NODES: usize = 4;

/// A uniform one-dimensional grid `min, min + h, ..., max` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Grid1d {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(invalid("grid", "bounds must be finite"));
        }
        if n < MIN_NODES {
            return Err(invalid(
                "grid",
                format!("need at least {MIN_NODES} nodes, got {n}"),
            ));
        }
        if max <= min {
            return Err(invalid("grid", format!("max {max} must exceed min {min}")));
        }
        Ok(Self { min, max, n })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    /// Same extent, `2(n - 1) + 1` nodes: every spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * (self.n - 1) + 1,
            ..*self
        }
    }
}

/// Open time interval `(start, end)` skipped by residual norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start < end) {
            return Err(invalid("exclusion", format!("empty window ({start}, {end})")));
        }
        Ok(Self { start, end })
    }

    /// Symmetric window of half-width `half` around `centre`.
    pub fn around(centre: f64, half: f64) -> Result<Self> {
        Self::new(centre - half, centre + half)
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        t > self.start && t < self.end
    }
}

/// Uniform space grid crossed with a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeGrid {
    pub space: Grid1d,
    pub time: Grid1d,
    exclusions: Vec<Window>,
}

impl SpacetimeGrid {
    pub fn new(space: Grid1d, time: Grid1d) -> Self {
        Self {
            space,
            time,
            exclusions: Vec::new(),
        }
    }

    /// Build from raw extents, the common case in tests and the CLI.
    pub fn from_extents(
        x_min: f64,
        x_max: f64,
        n_x: usize,
        t_min: f64,
        t_max: f64,
        n_t: usize,
    ) -> Result<Self> {
        Ok(Self::new(
            Grid1d::new(x_min, x_max, n_x)?,
            Grid1d::new(t_min, t_max, n_t)?,
        ))
    }

    /// Add an exclusion window; it must overlap `[t_min, t_max]`.
    pub fn with_exclusion(mut self, window: Window) -> Result<Self> {
        if window.end < self.time.min || window.start > self.time.max {
            return Err(invalid(
                "exclusion",
                format!(
                    "window ({}, {}) lies outside [{}, {}]",
                    window.start, window.end, self.time.min, self.time.max
                ),
            ));
        }
        self.exclusions.push(window);
        Ok(self)
    }

    /// Exclude a half-width `half` window around every `n * period` inside the
    /// time range (oscillator caustics at `n pi / omega`).
    pub fn with_periodic_exclusions(mut self, period: f64, half: f64) -> Result<Self> {
        if !(period > 0.0) || !(half > 0.0) {
            return Err(invalid("exclusion", "period and half-width must be positive"));
        }
        let first = ((self.time.min - half) / period).ceil() as i64;
        let last = ((self.time.max + half) / period).floor() as i64;
        for n in first..=last {
            let centre = n as f64 * period;
            self.exclusions.push(Window::around(centre, half)?);
        }
        Ok(self)
    }

    pub fn exclusions(&self) -> &[Window] {
        &self.exclusions
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.space.spacing()
    }

    #[inline]
    pub fn ht(&self) -> f64 {
        self.time.spacing()
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.space.point(i)
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        self.time.point(j)
    }

    #[inline]
    pub fn n_x(&self) -> usize {
        self.space.n
    }

    #[inline]
    pub fn n_t(&self) -> usize {
        self.time.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.space.n * self.time.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index, time-slowest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.space.n + i
    }

    pub fn is_excluded_time(&self, t: f64) -> bool {
        self.exclusions.iter().any(|w| w.contains(t))
    }

    pub fn is_excluded(&self, j: usize) -> bool {
        self.is_excluded_time(self.t(j))
    }

    /// Both spacings halved; exclusions kept.
    pub fn refined(&self) -> Self {
        Self {
            space: self.space.refined(),
            time: self.time.refined(),
            exclusions: self.exclusions.clone(),
        }
    }

    /// Same time axis, a different spatial node count.
    pub fn with_space_nodes(&self, n_x: usize) -> Result<Self> {
        Ok(Self {
            space: Grid1d::new(self.space.min, self.space.max, n_x)?,
            time: self.time,
            exclusions: self.exclusions.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_endpoints() {
        let g = Grid1d::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.point(0), -1.0);
        assert_eq!(g.point(4), 1.0);
        let r = g.refined();
        assert_eq!(r.n, 9);
        assert_eq!(r.spacing(), 0.25);
    }

    #[test]
    fn rejects_small_or_inverted_axes() {
        assert!(Grid1d::new(0.0, 1.0, 3).is_err());
        assert!(Grid1d::new(1.0, 0.0, 10).is_err());
        assert!(Grid1d::new(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn exclusion_windows_are_open_and_inside() {
        let g = SpacetimeGrid::from_extents(0.0, 1.0, 5, 0.0, 4.0, 9)
            .unwrap()
            .with_exclusion(Window::new(1.0, 2.0).unwrap())
            .unwrap();
        assert!(!g.is_excluded_time(1.0));
        assert!(g.is_excluded_time(1.5));
        assert!(g.clone().with_exclusion(Window::new(5.0, 6.0).unwrap()).is_err());
    }

    #[test]
    fn periodic_exclusions_cover_multiples() {
        let g = SpacetimeGrid::from_extents(0.0, 1.0, 5, 0.1, 7.0, 50)
            .unwrap()
            .with_periodic_exclusions(core::f64::consts::PI, 0.05)
            .unwrap();
        assert!(g.is_excluded_time(core::f64::consts::PI));
        assert!(g.is_excluded_time(2.0 * core::f64::consts::PI));
        assert!(!g.is_excluded_time(1.5));
    }
}
