//! McCormick relaxation of the VID product `w = Δb · δ`, with `δ` the angle
//! difference across the line, and the box splitting used by spatial branching.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::LineId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("term on {0} has an unbounded or inverted factor box")]
    Unbounded(LineId),
    #[error("split point {at} not strictly inside [{lo}, {hi}]")]
    BadSplit { at: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// the susceptance deviation `Δb`
    X,
    /// the angle difference `δ`
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearTerm {
    pub line: LineId,
    pub x_bounds: (f64, f64),
    pub y_bounds: (f64, f64),
    /// index of `w` in the owning formulation
    pub aux_var: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutSense {
    /// `w >= cx·x + cy·y + c0`
    Below,
    /// `w <= cx·x + cy·y + c0`
    Above,
}

/// One envelope inequality, linear in `(x, y, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCut {
    pub sense: CutSense,
    pub cx: f64,
    pub cy: f64,
    pub c0: f64,
}

impl EnvelopeCut {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.cx * x + self.cy * y + self.c0
    }

    pub fn holds(&self, x: f64, y: f64, w: f64, tol: f64) -> bool {
        match self.sense {
            CutSense::Below => w >= self.value(x, y) - tol,
            CutSense::Above => w <= self.value(x, y) + tol,
        }
    }
}

impl BilinearTerm {
    pub fn width(&self, axis: Axis) -> f64 {
        let (lo, hi) = match axis {
            Axis::X => self.x_bounds,
            Axis::Y => self.y_bounds,
        };
        hi - lo
    }

    /// Largest envelope gap over the box, attained at its centre.
    pub fn max_gap(&self) -> f64 {
        self.width(Axis::X) * self.width(Axis::Y) / 4.0
    }

    /// Interval of `w` admitted by the envelope at `(x, y)`.
    pub fn admitted(&self, x: f64, y: f64) -> Result<(f64, f64), RelaxError> {
        let cuts = mccormick_envelope(self)?;
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for c in &cuts {
            match c.sense {
                CutSense::Below => lo = lo.max(c.value(x, y)),
                CutSense::Above => hi = hi.min(c.value(x, y)),
            }
        }
        Ok((lo, hi))
    }

    fn check(&self) -> Result<(), RelaxError> {
        let (xl, xu) = self.x_bounds;
        let (yl, yu) = self.y_bounds;
        if [xl, xu, yl, yu].iter().all(|v| v.is_finite()) && xl <= xu && yl <= yu {
            Ok(())
        } else {
            Err(RelaxError::Unbounded(self.line))
        }
    }
}

/// The four McCormick inequalities: two under-estimators then two
/// over-estimators.
pub fn mccormick_envelope(t: &BilinearTerm) -> Result<[EnvelopeCut; 4], RelaxError> {
    t.check()?;
    let (xl, xu) = t.x_bounds;
    let (yl, yu) = t.y_bounds;
    let cut = |sense, cx, cy, c0| EnvelopeCut { sense, cx, cy, c0 };
    Ok([
        cut(CutSense::Below, yl, xl, -xl * yl),
        cut(CutSense::Below, yu, xu, -xu * yu),
        cut(CutSense::Above, yl, xu, -xu * yl),
        cut(CutSense::Above, yu, xl, -xl * yu),
    ])
}

pub fn split_term(t: &BilinearTerm, on: Axis, at: f64) -> Result<(BilinearTerm, BilinearTerm), RelaxError> {
    t.check()?;
    let (lo, hi) = match on {
        Axis::X => t.x_bounds,
        Axis::Y => t.y_bounds,
    };
    if !(at > lo && at < hi) {
        return Err(RelaxError::BadSplit { at, lo, hi });
    }
    let (mut a, mut b) = (*t, *t);
    match on {
        Axis::X => {
            a.x_bounds.1 = at;
            b.x_bounds.0 = at;
        }
        Axis::Y => {
            a.y_bounds.1 = at;
            b.y_bounds.0 = at;
        }
    }
    Ok((a, b))
}

/// `|w - x·y|`.
pub fn envelope_violation(_t: &BilinearTerm, point: (f64, f64, f64)) -> f64 {
    let (x, y, w) = point;
    (w - x * y).abs()
}
