//! Fixed points and local linear data.
//!
//! At `m = 0` the slow variable freezes and the fast equation has up to two
//! fixed points, the roots of `h(x) = (a-1)x - e^x + Y0`. For `m > 0` the
//! reduced map has the unique fixed point `A(s-1, (1-a)(s-1) + e^(s-1))`,
//! whose Jacobian and multipliers drive the bifurcation analysis.

use crate::error::{Error, Result};
use crate::map::{MapParams, State};
use num_complex::Complex64;
use serde::Serialize;

/// Newton/bisection residual target on `|h|`.
const ROOT_TOL: f64 = 1e-12;
/// Half-width of the declared marginal-stability band around `|multiplier| = 1`.
const MARGINAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

/// One fixed point of the frozen (`m = 0`) fast equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointM0 {
    pub x: f64,
    pub stability: Stability,
}

/// Outcome of the `m = 0` fixed-point case analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointM0Report {
    /// Fixed points in increasing order (0, 1 or 2 of them).
    pub points: Vec<FixedPointM0>,
    /// Critical point `ln(a-1)` of `h`, present when `a > 1`.
    pub x0: Option<f64>,
    /// `h(x0)`, present when `a > 1`; its sign decides the root count.
    pub h_at_x0: Option<f64>,
}

impl FixedPointM0Report {
    pub fn count(&self) -> usize {
        self.points.len()
    }
}

/// Jacobian of the shifted map at the origin and its multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearData {
    /// Row-major `[[a - e^(s-1), 1], [-m, 1]]`.
    pub jacobian: [[f64; 2]; 2],
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// `(e^(s-1) - a + 1)^2 - 4m`; negative discriminant means a complex pair.
    pub discriminant: f64,
}

fn classify_multiplier(mult: f64) -> Stability {
    let mag = mult.abs();
    if (mag - 1.0).abs() <= MARGINAL_BAND {
        Stability::Marginal
    } else if mag < 1.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

/// Safeguarded Newton on a bracket `[lo, hi]` with `f(lo)` and `f(hi)` of
/// opposite sign; falls back to bisection whenever a Newton step misbehaves.
fn newton_bracketed(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let (mut flo, fhi) = (f(lo), f(hi));
    debug_assert!(flo * fhi <= 0.0, "newton_bracketed needs a sign change");
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() <= ROOT_TOL {
            return x;
        }
        if (fx > 0.0) == (flo > 0.0) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        if (hi - lo).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            return x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

/// Expands `[anchor - w0, anchor]` (direction -1) or `[anchor, anchor + w0]`
/// (direction +1) until `f` changes sign; `h -> -inf` on both ends makes
/// expansion terminate for any root that exists.
fn expand_bracket(f: &impl Fn(f64) -> f64, anchor: f64, direction: f64) -> (f64, f64) {
    let mut width = 50.0;
    for _ in 0..60 {
        let far = anchor + direction * width;
        if f(far) < 0.0 {
            return if direction < 0.0 {
                (far, anchor)
            } else {
                (anchor, far)
            };
        }
        width *= 2.0;
    }
    // unreachable for finite parameters; fall back to the widest bracket
    let far = anchor + direction * width;
    if direction < 0.0 {
        (far, anchor)
    } else {
        (anchor, far)
    }
}

/// Fixed points of the fast equation at `m = 0`, where `Y0` is a parameter.
///
/// Case analysis on `a`: one root for `a < 1`; for `a = 1` none unless
/// `Y0 > 0` (then `X = ln Y0`); for `a > 1` zero, one or two roots by the
/// sign of `h` at its critical point `x0 = ln(a-1)`.
pub fn fixed_points_m0(a: f64, y0: f64) -> Result<FixedPointM0Report> {
    if !(a.is_finite() && y0.is_finite()) {
        return Err(Error::NonFiniteInput("fixed_points_m0 requires finite a, Y0"));
    }
    let h = |x: f64| (a - 1.0) * x - x.exp() + y0;
    let dh = |x: f64| (a - 1.0) - x.exp();
    let point = |x: f64| FixedPointM0 {
        x,
        stability: classify_multiplier(a - x.exp()),
    };

    if a < 1.0 {
        // h is strictly decreasing with h(-inf) = +inf, h(inf) = -inf
        let mut lo = 0.0;
        let mut width = 50.0;
        while h(lo) <= 0.0 {
            lo -= width;
            width *= 2.0;
        }
        let (blo, bhi) = expand_bracket(&h, lo, 1.0);
        let x = newton_bracketed(h, dh, blo, bhi);
        return Ok(FixedPointM0Report {
            points: vec![point(x)],
            x0: None,
            h_at_x0: None,
        });
    }
    if a == 1.0 {
        let points = if y0 > 0.0 { vec![point(y0.ln())] } else { vec![] };
        return Ok(FixedPointM0Report {
            points,
            x0: None,
            h_at_x0: None,
        });
    }

    let x0 = (a - 1.0).ln();
    let h0 = h(x0);
    let points = if h0 < 0.0 {
        vec![]
    } else if h0 == 0.0 {
        vec![point(x0)]
    } else {
        let (llo, lhi) = expand_bracket(&h, x0, -1.0);
        let (rlo, rhi) = expand_bracket(&h, x0, 1.0);
        let x1 = newton_bracketed(h, dh, llo, lhi);
        let x2 = newton_bracketed(h, dh, rlo, rhi);
        vec![point(x1), point(x2)]
    };
    Ok(FixedPointM0Report {
        points,
        x0: Some(x0),
        h_at_x0: Some(h0),
    })
}

/// The unique fixed point `A(s-1, (1-a)(s-1) + e^(s-1))` of the reduced map.
///
/// Requires `m > 0` and the validity inequality
/// `-a < s-1 < a + (1-a)s + e^(s-1)`; the error reports which side failed.
pub fn fixed_point_A(p: &MapParams) -> Result<State> {
    if p.m <= 0.0 {
        return Err(Error::NonPositiveM(p.m));
    }
    let lhs = p.s - 1.0;
    if !(lhs > -p.a) {
        return Err(Error::FixedPointValidity {
            which: "-a < s-1",
        });
    }
    if !(lhs < p.a + (1.0 - p.a) * p.s + p.exp_s1()) {
        return Err(Error::FixedPointValidity {
            which: "s-1 < a + (1-a)s + e^(s-1)",
        });
    }
    let a_pt = p.shift_offset();
    debug_assert!({
        let next = p.step_reduced(a_pt)?;
        ((next.x - a_pt.x).powi(2) + (next.y - a_pt.y).powi(2)).sqrt() <= 1e-12
    });
    Ok(a_pt)
}

/// Jacobian and multipliers of the shifted map at the origin.
pub fn linear_data(p: &MapParams) -> Result<LinearData> {
    if p.m <= 0.0 {
        return Err(Error::NonPositiveM(p.m));
    }
    let es = p.exp_s1();
    let trace = p.a - es + 1.0;
    let disc = (es - p.a + 1.0).powi(2) - 4.0 * p.m;
    let (lambda_plus, lambda_minus) = if disc >= 0.0 {
        let root = disc.sqrt();
        (
            Complex64::new(0.5 * (trace + root), 0.0),
            Complex64::new(0.5 * (trace - root), 0.0),
        )
    } else {
        let root = (-disc).sqrt();
        (
            Complex64::new(0.5 * trace, 0.5 * root),
            Complex64::new(0.5 * trace, -0.5 * root),
        )
    };
    Ok(LinearData {
        jacobian: [[p.a - es, 1.0], [-p.m, 1.0]],
        lambda_plus,
        lambda_minus,
        discriminant: disc,
    })
}
