//! Uniform sampling grids and sampled one-dimensional densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Axis, Representation};

/// Relative tolerance on the spacing when a grid is built from explicit points.
const UNIFORM_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    start: f64,
    step: f64,
    len: usize,
}

impl Grid {
    /// `len` points from `start` to `end` inclusive.
    pub fn linspace(start: f64, end: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::EmptyGrid);
        }
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid bounds must be finite and increasing, got [{start}, {end}]"
            )));
        }
        Ok(Self { start, step: (end - start) / (len - 1) as f64, len })
    }

    pub fn from_step(start: f64, step: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::EmptyGrid);
        }
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() {
            return Err(Error::InvalidParameter(format!("bad grid step {step}")));
        }
        Ok(Self { start, step, len })
    }

    /// Checks that explicit sample points are strictly increasing and evenly spaced.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::EmptyGrid);
        }
        let step = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
        if !(step > 0.0) {
            return Err(Error::NonUniformGrid { index: 1 });
        }
        for (i, w) in points.windows(2).enumerate() {
            let d = w[1] - w[0];
            if !(d > 0.0) || ((d - step) / step).abs() > UNIFORM_RTOL {
                return Err(Error::NonUniformGrid { index: i + 1 });
            }
        }
        Ok(Self { start: points[0], step, len: points.len() })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.point(i))
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.len == other.len
            && (self.start - other.start).abs() <= 1e-12 * self.step.max(other.step)
            && ((self.step - other.step) / self.step).abs() <= 1e-12
    }
}

/// A density sampled on a uniform grid.
///
/// Serializes to the JSON record `{axis, representation, grid_start, grid_step, values}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub axis: Axis,
    pub representation: Representation,
    pub grid_start: f64,
    pub grid_step: f64,
    pub values: Vec<f64>,
}

impl Distribution {
    pub fn new(axis: Axis, representation: Representation, grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { axis, representation, grid_start: grid.start(), grid_step: grid.step(), values }
    }

    /// Samples `f` on every grid point.
    pub fn from_fn(
        axis: Axis,
        representation: Representation,
        grid: &Grid,
        f: impl Fn(f64) -> f64,
    ) -> Self {
        let values = grid.points().map(f).collect();
        Self::new(axis, representation, grid, values)
    }

    pub fn grid(&self) -> Grid {
        Grid { start: self.grid_start, step: self.grid_step, len: self.values.len() }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.grid_start + self.grid_step * i as f64
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid_step)
    }

    /// Copy rescaled to unit trapezoidal integral.
    pub fn normalized(&self) -> Result<Self> {
        let z = self.integral();
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::EmptyDistribution);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v /= z);
        Ok(out)
    }

    /// Running trapezoidal integral, starting at zero on the first point.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * self.grid_step;
            out.push(acc);
        }
        out
    }

    /// Same samples with the coordinate axis divided by `unit` (e.g. p/p').
    pub fn rescaled(&self, unit: f64) -> Self {
        let mut out = self.clone();
        out.grid_start /= unit;
        out.grid_step /= unit;
        out.values.iter_mut().for_each(|v| *v *= unit);
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 32 + 20);
        s.push_str("coordinate,density\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{:e},{:e}\n", self.coordinate(i), v));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("distribution serializes")
    }
}

pub(crate) fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            step * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}
