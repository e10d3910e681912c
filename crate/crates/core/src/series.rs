//! Time series of bivariate fields and the global range window.

use serde::{Deserialize, Serialize};

use crate::atoms::AtomList;
use crate::error::{Error, Result};
use crate::grid::BivariateField;
use crate::num::Real;

#[derive(Clone, Debug)]
pub struct TimeStep<T> {
    /// Application time units (e.g. femtoseconds).
    pub time: T,
    pub field: BivariateField<T>,
    pub seeds: AtomList<T>,
}

#[derive(Clone, Debug)]
pub struct BivariateTimeSeries<T> {
    state_label: String,
    steps: Vec<TimeStep<T>>,
}

impl<T: Real> BivariateTimeSeries<T> {
    /// Time stamps must be strictly increasing and all grids share dims.
    pub fn new(state_label: impl Into<String>, steps: Vec<TimeStep<T>>) -> Result<Self> {
        for w in steps.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(Error::InvalidInput(format!(
                    "time stamps not strictly increasing: {} then {}",
                    w[0].time, w[1].time
                )));
            }
            if w[0].field.spec().dims != w[1].field.spec().dims {
                return Err(Error::InvalidInput("time steps have differing grid dims".into()));
            }
        }
        Ok(BivariateTimeSeries {
            state_label: state_label.into(),
            steps,
        })
    }

    pub fn state_label(&self) -> &str {
        &self.state_label
    }

    pub fn steps(&self) -> &[TimeStep<T>] {
        &self.steps
    }
}

/// Axis-aligned rectangle in range space fixing the CSP coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeWindow<T> {
    pub min1: T,
    pub max1: T,
    pub min2: T,
    pub max2: T,
}

impl<T: Real> RangeWindow<T> {
    pub fn new(min1: T, max1: T, min2: T, max2: T) -> Result<Self> {
        let w = RangeWindow { min1, max1, min2, max2 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.min1, self.max1, self.min2, self.max2]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.min1 < self.max1) || !(self.min2 < self.max2) {
            return Err(Error::InvalidWindow(format!(
                "[{}, {}] x [{}, {}]",
                self.min1, self.max1, self.min2, self.max2
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> T {
        self.max1 - self.min1
    }

    pub fn height(&self) -> T {
        self.max2 - self.min2
    }

    pub fn contains(&self, p: [T; 2]) -> bool {
        p[0] >= self.min1 && p[0] <= self.max1 && p[1] >= self.min2 && p[1] <= self.max2
    }

    /// Maps a range-space point into `[0, 1]^2` window coordinates.
    pub fn normalize(&self, p: [T; 2]) -> [T; 2] {
        [(p[0] - self.min1) / self.width(), (p[1] - self.min2) / self.height()]
    }

    pub fn denormalize(&self, q: [T; 2]) -> [T; 2] {
        [self.min1 + q[0] * self.width(), self.min2 + q[1] * self.height()]
    }

    pub fn cast<U: Real>(&self) -> RangeWindow<U> {
        RangeWindow {
            min1: U::lit(self.min1.as_f64()),
            max1: U::lit(self.max1.as_f64()),
            min2: U::lit(self.min2.as_f64()),
            max2: U::lit(self.max2.as_f64()),
        }
    }
}

/// Running per-channel min/max, for building a window without holding every
/// field in memory at once.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeBounds<T> {
    pub lo: [T; 2],
    pub hi: [T; 2],
    pub count: usize,
}

impl<T: Real> Default for RangeBounds<T> {
    fn default() -> Self {
        RangeBounds {
            lo: [T::infinity(); 2],
            hi: [T::neg_infinity(); 2],
            count: 0,
        }
    }
}

impl<T: Real> RangeBounds<T> {
    pub fn include_field(&mut self, field: &BivariateField<T>) {
        let (l1, h1) = field.f1().min_max();
        let (l2, h2) = field.f2().min_max();
        self.lo = [self.lo[0].min(l1), self.lo[1].min(l2)];
        self.hi = [self.hi[0].max(h1), self.hi[1].max(h2)];
        self.count += 1;
    }

    pub fn merge(&mut self, other: &RangeBounds<T>) {
        for c in 0..2 {
            self.lo[c] = self.lo[c].min(other.lo[c]);
            self.hi[c] = self.hi[c].max(other.hi[c]);
        }
        self.count += other.count;
    }

    /// Expands each channel by `padding * (max - min)` on both sides; a
    /// constant channel becomes a unit-width interval centred on its value.
    pub fn to_window(&self, padding: T) -> Result<RangeWindow<T>> {
        if self.count == 0 {
            return Err(Error::InvalidInput("no fields to derive a range window from".into()));
        }
        if !(padding >= T::zero()) || !padding.is_finite() {
            return Err(Error::InvalidInput(format!("padding must be >= 0, got {padding}")));
        }
        let half = T::lit(0.5);
        let axis = |lo: T, hi: T| {
            if hi > lo {
                let pad = padding * (hi - lo);
                (lo - pad, hi + pad)
            } else {
                (lo - half, lo + half)
            }
        };
        let (min1, max1) = axis(self.lo[0], self.hi[0]);
        let (min2, max2) = axis(self.lo[1], self.hi[1]);
        RangeWindow::new(min1, max1, min2, max2)
    }
}

/// Window covering every value of every step of every series.
pub fn global_range_window<T: Real>(series_list: &[BivariateTimeSeries<T>], padding: T) -> Result<RangeWindow<T>> {
    let mut bounds = RangeBounds::default();
    for s in series_list {
        for step in s.steps() {
            bounds.include_field(&step.field);
        }
    }
    bounds.to_window(padding)
}
