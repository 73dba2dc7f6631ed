//! Period-doubling (flip) bifurcation of the shifted map.
//!
//! When the multipliers are real, stability is lost at `m0 = 2(e^(s-1)-a-1)`
//! through a multiplier crossing -1. The module carries the center-manifold
//! reduction to a cubic 1-D map, the critical normal-form coefficient `c(0)`
//! computed by two independent routes, and a Newton search for the period-2
//! cycle of the 2-D map itself.

use crate::error::{Error, Result};
use crate::map::{MapParams, State};
use crate::equilibria::Stability;
use serde::Serialize;

/// Newton step for finite-difference Jacobians (central differences).
const FD_STEP: f64 = 1e-6;
/// Convergence target on the period-2 residual.
const CYCLE_TOL: f64 = 1e-12;
/// Converged points closer to the origin than this are the trivial fixed point.
const ORIGIN_RADIUS: f64 = 1e-8;

/// Coefficients of the center-manifold graph
/// `y = x*x + x2*x^2 + x3*x^3 + mu_x*mu*x + mu_x2*mu*x^2 + mu2_x*mu^2*x`
/// with `mu = m - m0` (the pure-`mu` coefficients vanish).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CenterManifoldCoeffs {
    pub x: f64,
    pub x2: f64,
    pub x3: f64,
    pub mu_x: f64,
    pub mu_x2: f64,
    pub mu2_x: f64,
}

/// Coefficients of the reduced 1-D map `x' = linear*x + quadratic*x^2 + cubic*x^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedPDMap {
    pub linear: f64,
    pub quadratic: f64,
    pub cubic: f64,
}

/// Flip-bifurcation summary at `m = m0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PDAnalysis {
    pub m0: f64,
    /// Third multiplier `a - e^(s-1) + 2` of the parameter-extended system.
    pub lambda3: f64,
    /// Sign of the cubic normal-form term: -1 for `0 < m0 < 4`, +1 for `m0 > 4`.
    pub normal_form_sign: f64,
    /// `c(0)` from the center-manifold route, `2 e^(s-1) / (3 (m0 - 4))`.
    pub c0_center_manifold: f64,
    /// `c(0)` from the eigenvector/multilinear-form route,
    /// `4 e^(s-1) / (m0 - 4)`; same sign, different positive scale.
    pub c0_eigenvector: f64,
    pub dbeta_dm_at_m0: f64,
}

impl PDAnalysis {
    /// Unfolding parameter `beta(m) = -1 - linear(m)`; zero at `m0`.
    pub fn beta(&self, m: f64) -> f64 {
        let mu = m - self.m0;
        let d = self.m0 - 4.0;
        2.0 * (4.0 * mu + d * d) * mu / (d * d * d)
    }
}

/// A period-two cycle of the shifted map: `step(first) = second` and back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Period2Cycle {
    pub first: State,
    pub second: State,
    /// Cycle amplitude in normal-form units (half the point separation
    /// rescaled by `sqrt(|c0|)`), directly comparable to `sqrt(-beta)`.
    pub amplitude: f64,
    /// Stability along the center manifold: judged from the tangential
    /// multiplier of the second-iterate Jacobian, with the transverse
    /// multiplier identified as the one nearest `lambda3^2`.
    pub stability: Stability,
    /// Both multipliers of the second-iterate Jacobian at `first`.
    pub multipliers: [f64; 2],
}

/// The flip threshold `m0 = 2(e^(s-1) - a - 1)` when positive.
pub fn pd_threshold(a: f64, s: f64) -> Option<f64> {
    let gap = (s - 1.0).exp() - a - 1.0;
    if gap > 0.0 {
        Some(2.0 * gap)
    } else {
        None
    }
}

fn threshold_or_err(a: f64, s: f64) -> Result<f64> {
    let m0 = pd_threshold(a, s).ok_or(Error::NoPdThreshold)?;
    if m0 == 4.0 {
        return Err(Error::DegeneratePdThreshold);
    }
    Ok(m0)
}

/// Closed-form coefficients of the center manifold through the flip point.
pub fn center_manifold(a: f64, s: f64) -> Result<CenterManifoldCoeffs> {
    let m0 = threshold_or_err(a, s)?;
    let es = (s - 1.0).exp();
    let d = 4.0 - m0;
    Ok(CenterManifoldCoeffs {
        x: m0 / 2.0,
        x2: es / 2.0,
        x3: -es / 6.0 * m0 / d,
        mu_x: 2.0 / d,
        mu_x2: 4.0 * es / (m0 * d),
        mu2_x: 8.0 / (d * d * d),
    })
}

/// The 1-D map obtained by restricting to the center manifold, valid for
/// `|m - m0| <= 0.5`.
pub fn reduced_map(a: f64, s: f64, m: f64) -> Result<ReducedPDMap> {
    let m0 = threshold_or_err(a, s)?;
    if (m - m0).abs() > 0.5 {
        return Err(Error::TooFarFromPdThreshold { m, m0 });
    }
    let es = (s - 1.0).exp();
    let mu = m - m0;
    let d = 4.0 - m0;
    Ok(ReducedPDMap {
        linear: (2.0 * d * d * mu + 8.0 * mu * mu) / (d * d * d) - 1.0,
        quadratic: 4.0 * es * mu / (m0 * d),
        cubic: -2.0 * es / (3.0 * d),
    })
}

/// Bilinear form of the quadratic part of the shifted map's Taylor expansion.
pub fn eval_b(z: [f64; 2], u: [f64; 2], s: f64) -> [f64; 2] {
    [-z[0] * u[0] * (s - 1.0).exp(), 0.0]
}

/// Trilinear form of the cubic part.
pub fn eval_c(z: [f64; 2], u: [f64; 2], v: [f64; 2], s: f64) -> [f64; 2] {
    [-z[0] * u[0] * v[0] * (s - 1.0).exp(), 0.0]
}

fn solve2(a11: f64, a12: f64, a21: f64, a22: f64, r1: f64, r2: f64) -> (f64, f64) {
    let det = a11 * a22 - a12 * a21;
    ((r1 * a22 - r2 * a12) / det, (a11 * r2 - a21 * r1) / det)
}

/// Both routes to the critical normal-form coefficient plus the unfolding data.
///
/// The eigenvector route assembles `<p, C(q,q,q)> - 3 <p, B(q, (J-I)^-1 B(q,q))>`
/// from the multilinear forms; the center-manifold route evaluates
/// `quadratic^2 + cubic` of the reduced map at `m = m0`. Only the common sign
/// is meaningful, and it equals `sign(m0 - 4)`.
pub fn pd_coefficient(a: f64, s: f64) -> Result<PDAnalysis> {
    let m0 = threshold_or_err(a, s)?;
    let es = (s - 1.0).exp();

    let at_threshold = reduced_map(a, s, m0)?;
    let c0_cm = at_threshold.quadratic * at_threshold.quadratic + at_threshold.cubic;

    // eigenvector route: q for the -1 multiplier, adjoint p with <p, q> = 1
    let q = [1.0, es - a - 1.0];
    let denom = a - es + 3.0;
    let p = [2.0 / denom, -1.0 / denom];
    let c_qqq = eval_c(q, q, q, s);
    let b_qq = eval_b(q, q, s);
    // (J - I) w = B(q,q) with J - I = [[a-es-1, 1], [-m0, 0]]
    let (w0, w1) = solve2(a - es - 1.0, 1.0, -m0, 0.0, b_qq[0], b_qq[1]);
    let b_qw = eval_b(q, [w0, w1], s);
    let c0_inv = (p[0] * c_qqq[0] + p[1] * c_qqq[1]) - 3.0 * (p[0] * b_qw[0] + p[1] * b_qw[1]);

    Ok(PDAnalysis {
        m0,
        lambda3: a - es + 2.0,
        normal_form_sign: if c0_cm > 0.0 { 1.0 } else { -1.0 },
        c0_center_manifold: c0_cm,
        c0_eigenvector: c0_inv,
        dbeta_dm_at_m0: 2.0 / (m0 - 4.0),
    })
}

fn second_iterate(p: &MapParams, st: State) -> Result<State> {
    p.step_shifted_unchecked(p.step_shifted_unchecked(st)?)
}

fn second_iterate_jacobian(p: &MapParams, st: State) -> Result<[[f64; 2]; 2]> {
    let mut jac = [[0.0; 2]; 2];
    for col in 0..2 {
        let mut plus = st;
        let mut minus = st;
        if col == 0 {
            plus.x += FD_STEP;
            minus.x -= FD_STEP;
        } else {
            plus.y += FD_STEP;
            minus.y -= FD_STEP;
        }
        let fp = second_iterate(p, plus)?;
        let fm = second_iterate(p, minus)?;
        jac[0][col] = (fp.x - fm.x) / (2.0 * FD_STEP);
        jac[1][col] = (fp.y - fm.y) / (2.0 * FD_STEP);
    }
    Ok(jac)
}

/// Real parts of the 2x2 eigenvalues; a complex pair collapses to the
/// common magnitude on both slots.
fn multipliers_2x2(jac: [[f64; 2]; 2]) -> [f64; 2] {
    let trace = jac[0][0] + jac[1][1];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let disc = trace * trace - 4.0 * det;
    if disc >= 0.0 {
        let root = disc.sqrt();
        [0.5 * (trace + root), 0.5 * (trace - root)]
    } else {
        let mag = det.abs().sqrt();
        [mag, mag]
    }
}

fn newton_cycle(p: &MapParams, seed: State) -> Option<State> {
    let mut st = seed;
    for _ in 0..60 {
        let g = second_iterate(p, st).ok()?;
        let (gx, gy) = (g.x - st.x, g.y - st.y);
        if gx.hypot(gy) <= CYCLE_TOL {
            return Some(st);
        }
        let j = second_iterate_jacobian(p, st).ok()?;
        // Jacobian of G = F^2 - id
        let (dx, dy) = solve2(j[0][0] - 1.0, j[0][1], j[1][0], j[1][1] - 1.0, gx, gy);
        if !(dx.is_finite() && dy.is_finite()) {
            return None;
        }
        st = State {
            x: st.x - dx,
            y: st.y - dy,
        };
    }
    None
}

/// Newton search for the period-2 cycle born at the flip bifurcation.
///
/// Seeds run along the -1 eigendirection `(1, m0/2)` at eight radii spanning
/// `[0.1 r, 4 r]` on both sides, where `r` is `seed_radius` when positive and
/// `sqrt(|beta(m)|)` otherwise. Convergence back to the origin is rejected.
pub fn find_period2(p: &MapParams, seed_radius: f64) -> Result<Option<Period2Cycle>> {
    if p.m <= 0.0 {
        return Err(Error::NonPositiveM(p.m));
    }
    let analysis = pd_coefficient(p.a, p.s)?;
    let base = if seed_radius > 0.0 {
        seed_radius
    } else {
        analysis.beta(p.m).abs().sqrt()
    };
    if base == 0.0 {
        return Ok(None);
    }
    let dir_norm = (1.0 + (analysis.m0 / 2.0).powi(2)).sqrt();
    let dir = (1.0 / dir_norm, analysis.m0 / 2.0 / dir_norm);

    for k in 0..8 {
        let r = base * (0.1 + 3.9 * (k as f64) / 7.0);
        for sign in [1.0, -1.0] {
            let seed = State {
                x: sign * r * dir.0,
                y: sign * r * dir.1,
            };
            let Some(first) = newton_cycle(p, seed) else {
                continue;
            };
            if first.norm() < ORIGIN_RADIUS {
                continue;
            }
            let Ok(second) = p.step_shifted_unchecked(first) else {
                continue;
            };
            let sep = (first.x - second.x).hypot(first.y - second.y);
            if sep < ORIGIN_RADIUS {
                continue; // converged to a fixed point, not a 2-cycle
            }
            let Ok(jac) = second_iterate_jacobian(p, first) else {
                continue;
            };
            let multipliers = multipliers_2x2(jac);
            let transverse = analysis.lambda3 * analysis.lambda3;
            let tangential = if (multipliers[0] - transverse).abs()
                >= (multipliers[1] - transverse).abs()
            {
                multipliers[0]
            } else {
                multipliers[1]
            };
            let stability = if tangential.abs() < 1.0 {
                Stability::Stable
            } else {
                Stability::Unstable
            };
            let amplitude = 0.5 * sep * analysis.c0_center_manifold.abs().sqrt();
            return Ok(Some(Period2Cycle {
                first,
                second,
                amplitude,
                stability,
                multipliers,
            }));
        }
    }
    Ok(None)
}
