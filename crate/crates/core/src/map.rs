//! The piecewise exponential map and its three working forms.
//!
//! The model iterates `x' = f_a(x, y)`, `y' = y - m(x + 1 - s)` where `f_a`
//! is piecewise smooth on four planar domains `D1-D4`. The second branch
//! (`D2`, the exponential branch) carries the main dynamics; the reduced map
//! restricts to it, and the shifted map moves its fixed point to the origin.

use crate::error::{Error, Result};
use serde::Serialize;

/// Largest exponent argument accepted before the overflow guard trips.
/// `e^x` overflows f64 near 709.78; failing loudly beats propagating inf.
pub const EXP_ARG_LIMIT: f64 = 700.0;

/// Default `m` threshold below which the system counts as slow-fast.
pub const SLOW_FAST_THRESHOLD: f64 = 0.1;

#[inline]
fn guarded_exp(arg: f64) -> Result<f64> {
    if arg > EXP_ARG_LIMIT {
        return Err(Error::ExpOverflow {
            arg,
            limit: EXP_ARG_LIMIT,
        });
    }
    Ok(arg.exp())
}

/// Model parameters `(a, s, m)`: branch slope, target voltage, slow time scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapParams {
    pub a: f64,
    pub s: f64,
    pub m: f64,
}

impl MapParams {
    pub fn new(a: f64, s: f64, m: f64) -> Result<Self> {
        if !(a.is_finite() && s.is_finite() && m.is_finite()) {
            return Err(Error::NonFiniteInput("MapParams requires finite a, s, m"));
        }
        if m < 0.0 {
            return Err(Error::NonFiniteInput("MapParams requires m >= 0"));
        }
        Ok(Self { a, s, m })
    }

    /// `e^(s-1)`, the constant the fixed-point and bifurcation formulas share.
    #[inline]
    pub fn exp_s1(&self) -> f64 {
        (self.s - 1.0).exp()
    }

    /// Slow-fast regime test `0 < m < threshold` at the default threshold.
    pub fn is_slow_fast(&self) -> bool {
        self.is_slow_fast_with(SLOW_FAST_THRESHOLD)
    }

    pub fn is_slow_fast_with(&self, threshold: f64) -> bool {
        self.m > 0.0 && self.m < threshold
    }

    /// Classifies `(x, y)` into the domain of `f_a` it falls in.
    ///
    /// The partition is total and exclusive: `D1` iff `x < -a`; otherwise
    /// `D2` iff `x < y+1`, `D3` iff `y+1 <= x < y+2`, `D4` iff `x >= y+2`.
    pub fn classify_domain(&self, st: State) -> DomainLabel {
        if st.x < -self.a {
            DomainLabel::D1
        } else if st.x < st.y + 1.0 {
            DomainLabel::D2
        } else if st.x < st.y + 2.0 {
            DomainLabel::D3
        } else {
            DomainLabel::D4
        }
    }

    /// Evaluates the piecewise function `f_a` at `(x, y)`.
    pub fn eval_fa(&self, st: State) -> Result<f64> {
        let (a, x, y) = (self.a, st.x, st.y);
        match self.classify_domain(st) {
            DomainLabel::D1 => Ok(a * (-a) - guarded_exp(-a)? + y),
            DomainLabel::D2 => Ok(a * x - guarded_exp(x)? + y),
            DomainLabel::D3 => Ok(a * (y + 1.0) - guarded_exp(y + 1.0)? + y),
            DomainLabel::D4 => Ok(-1.0),
        }
    }

    /// One step of the full piecewise map.
    pub fn step_full(&self, st: State) -> Result<State> {
        let x_next = self.eval_fa(st)?;
        Ok(State {
            x: x_next,
            y: st.y - self.m * (st.x + 1.0 - self.s),
        })
    }

    /// One step of the reduced map (the `D2` exponential branch only).
    ///
    /// Errors with [`Error::OutsideReducedDomain`] when `-a <= x < y+1`
    /// fails; callers that must continue fall back to [`Self::step_full`].
    pub fn step_reduced(&self, st: State) -> Result<State> {
        if !(st.x >= -self.a && st.x < st.y + 1.0) {
            return Err(Error::OutsideReducedDomain { x: st.x, y: st.y });
        }
        let x_next = self.a * st.x - guarded_exp(st.x)? + st.y;
        Ok(State {
            x: x_next,
            y: st.y - self.m * (st.x + 1.0 - self.s),
        })
    }

    /// One step of the shifted map (reduced map with the fixed point at the
    /// origin), restricted to its validity region
    /// `-a <= s-1+x < a + (1-a)s + e^(s-1) + y`.
    pub fn step_shifted(&self, st: State) -> Result<State> {
        let lhs = self.s - 1.0 + st.x;
        let upper = self.a + (1.0 - self.a) * self.s + self.exp_s1() + st.y;
        if !(lhs >= -self.a && lhs < upper) {
            return Err(Error::OutsideShiftedDomain { x: st.x, y: st.y });
        }
        self.step_shifted_unchecked(st)
    }

    /// The shifted-map formula without the validity-region check.
    ///
    /// Local bifurcation analysis works on the smooth exponential branch as
    /// a map of the whole plane; seeds and cycle points may sit outside the
    /// region where the branch coincides with the full model.
    pub fn step_shifted_unchecked(&self, st: State) -> Result<State> {
        let x_next =
            st.y + self.a * st.x + guarded_exp(self.s - 1.0)? - guarded_exp(st.x + self.s - 1.0)?;
        Ok(State {
            x: x_next,
            y: st.y - self.m * st.x,
        })
    }

    /// Offset between reduced-map and shifted-map coordinates; equals the
    /// reduced map's fixed point `(s-1, (1-a)(s-1) + e^(s-1))`.
    pub fn shift_offset(&self) -> State {
        State {
            x: self.s - 1.0,
            y: (1.0 - self.a) * (self.s - 1.0) + self.exp_s1(),
        }
    }
}

/// A point `(x, y)` of the phase plane: fast (voltage-like) and slow variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::NonFiniteInput("State requires finite x, y"));
        }
        Ok(Self { x, y })
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Which branch of `f_a` applies at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DomainLabel {
    D1,
    D2,
    D3,
    D4,
}

impl std::fmt::Display for DomainLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DomainLabel::D1 => "D1",
            DomainLabel::D2 => "D2",
            DomainLabel::D3 => "D3",
            DomainLabel::D4 => "D4",
        };
        f.write_str(s)
    }
}
