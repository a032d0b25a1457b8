//! Monotone cubic interpolation.
//!
//! Two constructors: Fritsch-Carlson slope limiting for raw data, and an
//! exact-slope variant for samples whose derivatives are known (ODE
//! output). Both evaluate as a C^1 piecewise cubic Hermite.

use crate::error::{Error, Result};

/// Cubic Hermite basis evaluation on `[u0, u1]`.
#[inline]
pub fn hermite(u0: f64, y0: f64, d0: f64, u1: f64, y1: f64, d1: f64, u: f64) -> f64 {
    let h = u1 - u0;
    let t = (u - u0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + d0 * h * (t3 - 2.0 * t2 + t)
        + y1 * (-2.0 * t3 + 3.0 * t2)
        + d1 * h * (t3 - t2)
}

/// Piecewise cubic Hermite interpolant over strictly increasing knots.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds from knots with known slopes (no limiting applied).
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.len() != ds.len() {
            return Err(Error::InvalidParam(format!(
                "interpolant needs matching knot arrays of length >= 2 (got {}, {}, {})",
                xs.len(),
                ys.len(),
                ds.len()
            )));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParam("knots must be strictly increasing".into()));
        }
        Ok(MonotoneCubic { xs, ys, ds })
    }

    /// Builds with Fritsch-Carlson limited slopes: the interpolant is
    /// monotone on every interval where the data is.
    pub fn fritsch_carlson(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidParam("need at least two knots".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParam("knots must be strictly increasing".into()));
        }
        let k = xs.len();
        let mut sec = vec![0.0; k - 1];
        for i in 0..k - 1 {
            sec[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        }
        let mut ds = vec![0.0; k];
        ds[0] = sec[0];
        ds[k - 1] = sec[k - 2];
        for i in 1..k - 1 {
            ds[i] = if sec[i - 1] * sec[i] <= 0.0 { 0.0 } else { 0.5 * (sec[i - 1] + sec[i]) };
        }
        for i in 0..k - 1 {
            if sec[i] == 0.0 {
                ds[i] = 0.0;
                ds[i + 1] = 0.0;
                continue;
            }
            let a = ds[i] / sec[i];
            let b = ds[i + 1] / sec[i];
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                ds[i] = t * a * sec[i];
                ds[i + 1] = t * b * sec[i];
            }
        }
        Ok(MonotoneCubic { xs, ys, ds })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Evaluates at `x`; errors outside the knot range.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if x < lo || x > hi {
            return Err(Error::ExtrapolationError(format!(
                "x = {x} outside interpolation range [{lo}, {hi}]"
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluates with clamping to the knot range.
    pub fn eval_clamped(&self, x: f64) -> f64 {
        let (lo, hi) = self.range();
        self.eval_unchecked(x.clamp(lo, hi))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(0) => 0,
            Err(i) if i >= self.xs.len() => self.xs.len() - 2,
            Err(i) => i - 1,
        };
        hermite(self.xs[i], self.ys[i], self.ds[i], self.xs[i + 1], self.ys[i + 1], self.ds[i + 1], x)
    }
}
