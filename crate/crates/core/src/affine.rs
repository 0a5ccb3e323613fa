//! Continuous piecewise-affine paths `R -> R^n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{axpy, distance, norm};

/// Relative tolerance on continuity at joins.
pub const CONTINUITY_TOL: f64 = 1e-12;

/// One affine piece, stored as `value(t) = base + (t - base_t) * slope`.
///
/// Storing a base point rather than the offset keeps the value at `base_t`
/// exact, which is what interpolation relies on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub slope: Vec<f64>,
    pub base_t: f64,
    pub base: Vec<f64>,
}

impl Segment {
    pub fn value(&self, t: f64) -> Vec<f64> {
        let mut out = self.base.clone();
        axpy(&mut out, t - self.base_t, &self.slope);
        out
    }

    /// `offset` with `value(t) = slope * t + offset`.
    pub fn offset(&self) -> Vec<f64> {
        let mut out = self.base.clone();
        axpy(&mut out, -self.base_t, &self.slope);
        out
    }
}

/// A continuous path that is affine on each `(tau_i, tau_{i+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffinePath {
    dimension: usize,
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
}

impl PiecewiseAffinePath {
    /// Builds the path and checks continuity at every interior breakpoint.
    pub fn new(breakpoints: Vec<f64>, segments: Vec<Segment>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::input("a piecewise-affine path needs at least two breakpoints"));
        }
        if segments.len() + 1 != breakpoints.len() {
            return Err(Error::input(format!(
                "{} breakpoints need {} segments, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                segments.len()
            )));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(Error::input("breakpoints must be finite"));
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::input(format!(
                "breakpoints not strictly increasing at index {i}"
            )));
        }
        let dimension = segments[0].slope.len();
        if dimension == 0 {
            return Err(Error::input("dimension must be at least 1"));
        }
        for (i, s) in segments.iter().enumerate() {
            if s.slope.len() != dimension || s.base.len() != dimension {
                return Err(Error::input(format!("segment {i} has the wrong dimension")));
            }
        }
        let path = PiecewiseAffinePath {
            dimension,
            breakpoints,
            segments,
        };
        path.check_continuity()?;
        Ok(path)
    }

    /// Interpolates `values[i]` at `times[i]`.
    pub fn from_knots(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::input("knot times and values differ in length"));
        }
        if times.len() < 2 {
            return Err(Error::input("need at least two knots"));
        }
        let segments = (0..times.len() - 1)
            .map(|i| {
                let dt = times[i + 1] - times[i];
                Segment {
                    slope: values[i + 1]
                        .iter()
                        .zip(&values[i])
                        .map(|(b, a)| (b - a) / dt)
                        .collect(),
                    base_t: times[i + 1],
                    base: values[i + 1].clone(),
                }
            })
            .collect();
        Self::new(times, segments)
    }

    fn check_continuity(&self) -> Result<()> {
        for i in 1..self.segments.len() {
            let t = self.breakpoints[i];
            let left = self.segments[i - 1].value(t);
            let right = self.segments[i].value(t);
            let scale = 1.0 + norm(&left).max(norm(&right));
            let gap = distance(&left, &right);
            if gap > CONTINUITY_TOL * scale {
                return Err(Error::Invariant(format!(
                    "discontinuity {gap:e} at breakpoint {i} (t = {t})"
                )));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// `(tau_1, tau_m)`; the path is defined on the half-open `(tau_1, tau_m]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    /// Index `i` with `tau_i < t <= tau_{i+1}`.
    pub fn segment_index(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        if !(t > lo && t <= hi) {
            return Err(Error::Domain { t, lo, hi });
        }
        Ok(self.breakpoints.partition_point(|&b| b < t) - 1)
    }

    /// Segment index for `t` in the closed range, clamping the left end.
    pub(crate) fn segment_index_closed(&self, t: f64) -> usize {
        let i = self.breakpoints.partition_point(|&b| b < t);
        i.saturating_sub(1).min(self.segments.len() - 1)
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.segments[self.segment_index(t)?].value(t))
    }

    /// Slope on the interval containing `t` (left limit at breakpoints).
    pub fn derivative(&self, t: f64) -> Result<&[f64]> {
        Ok(&self.segments[self.segment_index(t)?].slope)
    }

    /// Breakpoints strictly inside `(lo, hi)`, ascending.
    pub fn breakpoints_within(&self, lo: f64, hi: f64) -> &[f64] {
        let a = self.breakpoints.partition_point(|&b| b <= lo);
        let b = self.breakpoints.partition_point(|&b| b < hi);
        &self.breakpoints[a..b.max(a)]
    }

    /// Sum of the slope norms over all segments.
    pub fn total_slope_norm(&self) -> f64 {
        self.segments.iter().map(|s| norm(&s.slope)).sum()
    }

    /// The same path with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                slope: s.slope.iter().map(|v| v * factor).collect(),
                base_t: s.base_t,
                base: s.base.iter().map(|v| v * factor).collect(),
            })
            .collect();
        PiecewiseAffinePath {
            dimension: self.dimension,
            breakpoints: self.breakpoints.clone(),
            segments,
        }
    }
}

/// Free-function form of [`PiecewiseAffinePath::eval`].
pub fn eval_affine(path: &PiecewiseAffinePath, t: f64) -> Result<Vec<f64>> {
    path.eval(t)
}

/// Free-function form of [`PiecewiseAffinePath::derivative`].
pub fn eval_affine_derivative(path: &PiecewiseAffinePath, t: f64) -> Result<Vec<f64>> {
    path.derivative(t).map(<[f64]>::to_vec)
}
