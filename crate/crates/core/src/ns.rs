//! Neimark-Sacker bifurcation of the shifted map.
//!
//! With a complex multiplier pair, the unit circle is crossed on the surface
//! `a_ns = e^(s-1) - m + 1`. The module evaluates the complex normal-form
//! coefficients there, the first Lyapunov coefficient `d(0)` by two routes
//! (it is negative throughout, so the bifurcating closed curve is stable),
//! and detects the invariant curve numerically by direct iteration.

use crate::error::{Error, Result};
use crate::map::{MapParams, State};
use num_complex::Complex64;
use serde::Serialize;

/// Default transient length before curve classification.
pub const DEFAULT_CURVE_TRANSIENT: u64 = 100_000;
/// Default number of sampled iterates on the curve.
pub const DEFAULT_CURVE_SAMPLE: u64 = 10_000;
/// Orbits converged below this norm count as the fixed-point attractor.
const FP_TOL: f64 = 1e-8;
/// Orbits beyond this norm count as escaped.
const ESCAPE_NORM: f64 = 1e3;

/// Critical-surface data at `a = a_ns(s, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NsThreshold {
    pub a_ns: f64,
    /// Rotation angle `theta0` of the critical multiplier, in `(0, pi)`.
    pub theta0: f64,
    /// Real part `(2-m)/2` of the critical multiplier.
    pub h0: f64,
    /// Imaginary part `sqrt(4m - m^2)/2`.
    pub omega0: f64,
    /// `e^(i theta0) = h0 + i omega0`.
    pub mu0: Complex64,
    /// `false` exactly at the strong resonances `m = 2` (k=4) and `m = 3` (k=3).
    pub nondegenerate: bool,
    pub resonance_k: Option<u8>,
}

/// Quadratic and cubic coefficients of the map in complex eigenbasis form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GCoefficients {
    pub g20: Complex64,
    pub g11: Complex64,
    pub g02: Complex64,
    pub g21: Complex64,
}

/// First Lyapunov coefficient data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NsLyapunov {
    /// Resonant cubic coefficient assembled from the `g` coefficients.
    pub c1_0: Complex64,
    /// `Re(e^(-i theta0) c1(0))`; equals `-(e^(s-1)/16) m (1 + e^(s-1))`.
    pub d0: f64,
    /// The same quantity from the eigenvector/multilinear-form route,
    /// `-(e^(s-1)/(16 m (4-m))) (1 + e^(s-1))`; same sign, positive scale apart.
    pub d0_alt: f64,
}

/// How an iterated orbit of the shifted map settles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurveClass {
    FixedPointAttractor,
    ClosedCurve,
    Escaped,
}

/// Result of iterating toward the invariant curve.
///
/// `mean_radius`, `rotation_number` and `points` are filled for
/// `ClosedCurve` only. The rotation number is signed; the eigenbasis change
/// reverses orientation, so orbits advance clockwise and the measured value
/// is near `-theta0 / 2pi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCurve {
    pub classification: CurveClass,
    pub mean_radius: f64,
    pub rotation_number: f64,
    pub points: Vec<State>,
}

fn check_m_range(m: f64) -> Result<()> {
    if !(m > 0.0 && m < 4.0) {
        return Err(Error::MOutOfRange(m));
    }
    Ok(())
}

fn resonance_k(m: f64) -> Option<u8> {
    if m == 2.0 {
        Some(4)
    } else if m == 3.0 {
        Some(3)
    } else {
        None
    }
}

/// The critical surface `a_ns = e^(s-1) - m + 1` and the rotation data on it.
///
/// `theta0` comes from the two-argument arctangent of `(omega0, h0)`, which
/// lands in `(0, pi)` for any `m` in `(0, 4)`; the plain tangent formula
/// would be sign-ambiguous past `m = 2`.
pub fn ns_threshold(s: f64, m: f64) -> Result<NsThreshold> {
    check_m_range(m)?;
    let h0 = 0.5 * (2.0 - m);
    let omega0 = 0.5 * (4.0 * m - m * m).sqrt();
    let k = resonance_k(m);
    Ok(NsThreshold {
        a_ns: (s - 1.0).exp() - m + 1.0,
        theta0: omega0.atan2(h0),
        h0,
        omega0,
        mu0: Complex64::new(h0, omega0),
        nondegenerate: k.is_none(),
        resonance_k: k,
    })
}

/// The four complex coefficients of the eigenbasis normal form at `a = a_ns`.
pub fn ns_g_coefficients(s: f64, m: f64) -> Result<GCoefficients> {
    check_m_range(m)?;
    let es = (s - 1.0).exp();
    let thr = ns_threshold(s, m)?;
    let (h, w) = (thr.h0, thr.omega0);
    let i = Complex64::i();
    let g20 = es / 4.0 * (-i * h + w + i).powu(2) * i / w;
    let g11 = -i * es / 4.0 * ((h - 1.0).powi(2) + w * w) / w;
    let g02 = i * es / 4.0 * (i * h + w - i).powu(2) / w;
    let g21 = es / (8.0 * w) * (i * h + w - i) * (h + i * w - 1.0).powu(2);
    Ok(GCoefficients { g20, g11, g02, g21 })
}

/// The first Lyapunov coefficient by both routes.
pub fn ns_lyapunov(s: f64, m: f64) -> Result<NsLyapunov> {
    check_m_range(m)?;
    if let Some(k) = resonance_k(m) {
        return Err(Error::Resonance { m, k });
    }
    let thr = ns_threshold(s, m)?;
    let g = ns_g_coefficients(s, m)?;
    let mu0 = thr.mu0;
    let c1_0 = g.g20 * g.g11 * (1.0 - 2.0 * mu0) / (2.0 * (mu0 * mu0 - mu0))
        + g.g11.norm_sqr() / (1.0 - mu0.conj())
        + g.g02.norm_sqr() / (2.0 * (mu0 * mu0 - mu0.conj()))
        + g.g21 / 2.0;
    let d0 = ((-Complex64::i() * thr.theta0).exp() * c1_0).re;
    let es = (s - 1.0).exp();
    debug_assert!({
        let closed = -es / 16.0 * m * (1.0 + es);
        (d0 - closed).abs() <= 1e-8 * closed.abs()
    });
    Ok(NsLyapunov {
        c1_0,
        d0,
        d0_alt: -es / (16.0 * m * (4.0 - m)) * (1.0 + es),
    })
}

/// Leading-order radius `sqrt(-beta / d0)` of the bifurcated curve in
/// normal-form units, with `beta = sqrt(a + m - e^(s-1)) - 1`.
///
/// Only the square-root growth law carries over to measured radii; the
/// eigenbasis change rescales absolute distances.
pub fn predict_curve_radius(s: f64, m: f64, a: f64) -> Result<f64> {
    let thr = ns_threshold(s, m)?;
    if a < thr.a_ns {
        return Err(Error::BelowNsSurface { a, a_ns: thr.a_ns });
    }
    if a - thr.a_ns > 0.1 {
        return Err(Error::TooFarFromNsSurface { a, a_ns: thr.a_ns });
    }
    let lyap = ns_lyapunov(s, m)?;
    let beta = (a + m - (s - 1.0).exp()).sqrt() - 1.0;
    Ok((-beta / lyap.d0).sqrt())
}

/// Iterates the shifted map from `(0.01, 0)` and classifies the attractor.
///
/// After `n_transient` discarded iterates the orbit is either inside the
/// fixed-point tolerance, escaped (norm beyond 1e3 or a domain violation,
/// including the overflow guard), or taken as a closed curve and sampled
/// for `n_sample` further iterates.
pub fn detect_invariant_curve(p: &MapParams, n_transient: u64, n_sample: u64) -> Result<InvariantCurve> {
    if p.m <= 0.0 {
        return Err(Error::NonPositiveM(p.m));
    }
    let escaped = InvariantCurve {
        classification: CurveClass::Escaped,
        mean_radius: 0.0,
        rotation_number: 0.0,
        points: Vec::new(),
    };
    let mut st = State { x: 0.01, y: 0.0 };
    for _ in 0..n_transient {
        st = match p.step_shifted(st) {
            Ok(next) => next,
            Err(_) => return Ok(escaped),
        };
        if !st.is_finite() || st.norm() > ESCAPE_NORM {
            return Ok(escaped);
        }
    }
    if st.norm() < FP_TOL {
        return Ok(InvariantCurve {
            classification: CurveClass::FixedPointAttractor,
            mean_radius: 0.0,
            rotation_number: 0.0,
            points: Vec::new(),
        });
    }
    let mut points = Vec::with_capacity(n_sample.min(1 << 20) as usize);
    let mut radius_sum = 0.0;
    let mut angle_sum = 0.0;
    let mut prev_angle = st.y.atan2(st.x);
    for _ in 0..n_sample {
        st = match p.step_shifted(st) {
            Ok(next) => next,
            Err(_) => return Ok(escaped),
        };
        if !st.is_finite() || st.norm() > ESCAPE_NORM {
            return Ok(escaped);
        }
        radius_sum += st.norm();
        let angle = st.y.atan2(st.x);
        let mut advance = angle - prev_angle;
        if advance > std::f64::consts::PI {
            advance -= 2.0 * std::f64::consts::PI;
        } else if advance <= -std::f64::consts::PI {
            advance += 2.0 * std::f64::consts::PI;
        }
        angle_sum += advance;
        prev_angle = angle;
        points.push(st);
    }
    let n = n_sample.max(1) as f64;
    Ok(InvariantCurve {
        classification: CurveClass::ClosedCurve,
        mean_radius: radius_sum / n,
        rotation_number: angle_sum / (2.0 * std::f64::consts::PI * n),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn surface_at_the_reference_point() {
        let thr = ns_threshold(1.1, 0.02).unwrap();
        assert_abs_diff_eq!(thr.a_ns, 2.0851709180756477, epsilon = 1e-15);
        assert_abs_diff_eq!(thr.h0, 0.99, epsilon = 1e-15);
        assert_abs_diff_eq!(thr.mu0.norm(), 1.0, epsilon = 1e-12);
        assert!(thr.nondegenerate);
        assert!(thr.theta0 > 0.0 && thr.theta0 < PI);
    }

    #[test]
    fn resonances_are_flagged_not_errors() {
        let at2 = ns_threshold(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(at2.theta0, PI / 2.0, epsilon = 1e-15);
        assert!(!at2.nondegenerate);
        assert_eq!(at2.resonance_k, Some(4));

        let at3 = ns_threshold(1.0, 3.0).unwrap();
        assert_abs_diff_eq!(at3.theta0, 2.0 * PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at3.mu0.norm(), 1.0, epsilon = 1e-12);
        assert!(!at3.nondegenerate);
        assert_eq!(at3.resonance_k, Some(3));
    }

    #[test]
    fn m_out_of_range_is_an_error() {
        for m in [0.0, -1.0, 4.0, 5.0] {
            assert!(matches!(ns_threshold(1.0, m), Err(Error::MOutOfRange(_))));
            assert!(ns_g_coefficients(1.0, m).is_err());
        }
        assert!(matches!(
            ns_lyapunov(1.0, 2.0),
            Err(Error::Resonance { k: 4, .. })
        ));
        assert!(matches!(
            ns_lyapunov(1.0, 3.0),
            Err(Error::Resonance { k: 3, .. })
        ));
    }

    #[test]
    fn g_coefficient_structure() {
        // discovered algebraic relation: g02 = -conj(g20); g11 purely imaginary
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..100 {
            let s: f64 = rng.gen_range(-2.0..3.0);
            let m: f64 = rng.gen_range(0.05..3.95);
            let g = ns_g_coefficients(s, m).unwrap();
            assert!((g.g02 + g.g20.conj()).norm() <= 1e-12 * (1.0 + g.g20.norm()));
            assert_abs_diff_eq!(g.g11.re, 0.0, epsilon = 1e-14);
        }
        let g = ns_g_coefficients(1.0, 1.0).unwrap();
        for v in [g.g20, g.g11, g.g02, g.g21] {
            assert!(v.re.is_finite() && v.im.is_finite());
        }
    }

    /// Independent oracle: pull the eigenbasis form of the true nonlinear map
    /// and extract its Taylor coefficients by finite differences.
    #[test]
    fn g_coefficients_match_a_taylor_extraction_of_the_transformed_map() {
        let (s, m) = (1.0, 1.0);
        let thr = ns_threshold(s, m).unwrap();
        let p = MapParams::new(thr.a_ns, s, m).unwrap();
        let (h, w) = (thr.h0, thr.omega0);
        // (x, y) = T (u, v) with T = [[1-h, w], [m, 0]]; T^-1 = [[0, 1/m], [1/w, -(1-h)/(w m)]]
        let fwd = |u: f64, v: f64| -> (f64, f64) {
            let x = (1.0 - h) * u + w * v;
            let y = m * u;
            let next = p.step_shifted_unchecked(State { x, y }).unwrap();
            (next.y / m, next.x / w - (1.0 - h) * next.y / (w * m))
        };
        // complex Wirtinger derivatives of z' = P + iQ as combinations of
        // real (u, v) partials
        let hstep = 0.02;
        let second = |f: &dyn Fn(f64, f64) -> f64, du: bool, dv: bool| -> f64 {
            let g = |i: f64, j: f64| f(i * hstep, j * hstep);
            if du && dv {
                (g(1.0, 1.0) - g(1.0, -1.0) - g(-1.0, 1.0) + g(-1.0, -1.0)) / (4.0 * hstep * hstep)
            } else if du {
                (g(1.0, 0.0) - 2.0 * g(0.0, 0.0) + g(-1.0, 0.0)) / (hstep * hstep)
            } else {
                (g(0.0, 1.0) - 2.0 * g(0.0, 0.0) + g(0.0, -1.0)) / (hstep * hstep)
            }
        };
        let pf = |u: f64, v: f64| fwd(u, v).0;
        let qf = |u: f64, v: f64| fwd(u, v).1;
        let (p_uu, p_vv, p_uv) = (second(&pf, true, false), second(&pf, false, true), second(&pf, true, true));
        let (q_uu, q_vv, q_uv) = (second(&qf, true, false), second(&qf, false, true), second(&qf, true, true));
        let g20_fd = Complex64::new(p_uu - p_vv + 2.0 * q_uv, q_uu - q_vv - 2.0 * p_uv) / 4.0;
        let g11_fd = Complex64::new(p_uu + p_vv, q_uu + q_vv) / 4.0;
        let g02_fd = Complex64::new(p_uu - p_vv - 2.0 * q_uv, q_uu - q_vv + 2.0 * p_uv) / 4.0;

        let g = ns_g_coefficients(s, m).unwrap();
        assert!((g.g20 - g20_fd).norm() <= 1e-4, "g20 {} vs fd {}", g.g20, g20_fd);
        assert!((g.g11 - g11_fd).norm() <= 1e-4, "g11 {} vs fd {}", g.g11, g11_fd);
        assert!((g.g02 - g02_fd).norm() <= 1e-4, "g02 {} vs fd {}", g.g02, g02_fd);

        // third-order: g21 = (w_uuu + w_uvv - i (w_uuv + w_vvv)) / 8
        let third = |f: &dyn Fn(f64, f64) -> f64, pattern: u8| -> f64 {
            let g = |i: f64, j: f64| f(i * hstep, j * hstep);
            match pattern {
                0 => (-g(-2.0, 0.0) + 2.0 * g(-1.0, 0.0) - 2.0 * g(1.0, 0.0) + g(2.0, 0.0))
                    / (2.0 * hstep.powi(3)),
                1 => (-g(0.0, -2.0) + 2.0 * g(0.0, -1.0) - 2.0 * g(0.0, 1.0) + g(0.0, 2.0))
                    / (2.0 * hstep.powi(3)),
                2 => {
                    // d/du of d^2/dv^2
                    let fvv = |u: f64| {
                        (f(u, hstep) - 2.0 * f(u, 0.0) + f(u, -hstep)) / (hstep * hstep)
                    };
                    (fvv(hstep) - fvv(-hstep)) / (2.0 * hstep)
                }
                _ => {
                    // d/dv of d^2/du^2
                    let fuu = |v: f64| {
                        (f(hstep, v) - 2.0 * f(0.0, v) + f(-hstep, v)) / (hstep * hstep)
                    };
                    (fuu(hstep) - fuu(-hstep)) / (2.0 * hstep)
                }
            }
        };
        let w_uuu = Complex64::new(third(&pf, 0), third(&qf, 0));
        let w_vvv = Complex64::new(third(&pf, 1), third(&qf, 1));
        let w_uvv = Complex64::new(third(&pf, 2), third(&qf, 2));
        let w_uuv = Complex64::new(third(&pf, 3), third(&qf, 3));
        let g21_fd = (w_uuu + w_uvv - Complex64::i() * (w_uuv + w_vvv)) / 8.0;
        assert!((g.g21 - g21_fd).norm() <= 1e-3, "g21 {} vs fd {}", g.g21, g21_fd);
    }

    #[test]
    fn lyapunov_coefficient_at_the_reference_point() {
        let lyap = ns_lyapunov(1.1, 0.02).unwrap();
        // frozen from a 30-digit evaluation of both routes
        assert_abs_diff_eq!(lyap.d0, -0.0029082170952947723, epsilon = 1e-15);
        assert!(lyap.d0 < 0.0 && lyap.d0_alt < 0.0);
    }

    #[test]
    fn lyapunov_negative_and_consistent_on_a_grid() {
        for i in 0..50 {
            let s = -2.0 + 5.0 * (i as f64) / 49.0;
            for j in 0..50 {
                let m = 4.0 * (j as f64 + 0.5) / 50.0;
                if (m - 2.0).abs() < 1e-9 || (m - 3.0).abs() < 1e-9 {
                    continue;
                }
                let lyap = ns_lyapunov(s, m).unwrap();
                let es = (s - 1.0_f64).exp();
                let closed = -es / 16.0 * m * (1.0 + es);
                assert_relative_eq!(lyap.d0, closed, max_relative = 1e-8);
                assert!(lyap.d0 < 0.0);
                assert_eq!(lyap.d0 < 0.0, lyap.d0_alt < 0.0);
            }
        }
    }

    #[test]
    fn predicted_radius_values_and_scaling() {
        let thr = ns_threshold(1.1, 0.02).unwrap();
        assert_eq!(predict_curve_radius(1.1, 0.02, thr.a_ns).unwrap(), 0.0);
        let r = predict_curve_radius(1.1, 0.02, 2.1).unwrap();
        assert_abs_diff_eq!(r, 1.5937791442802341, epsilon = 1e-12);
        // sqrt growth: radius(4 delta) / radius(delta) = 2 within 10%
        let r1 = predict_curve_radius(1.1, 0.02, thr.a_ns + 0.01).unwrap();
        let r4 = predict_curve_radius(1.1, 0.02, thr.a_ns + 0.04).unwrap();
        assert!((r4 / r1 - 2.0).abs() <= 0.2, "ratio {}", r4 / r1);
        assert!(matches!(
            predict_curve_radius(1.1, 0.02, 2.0),
            Err(Error::BelowNsSurface { .. })
        ));
        assert!(matches!(
            predict_curve_radius(1.1, 0.02, thr.a_ns + 0.2),
            Err(Error::TooFarFromNsSurface { .. })
        ));
    }

    #[test]
    fn curve_detection_across_the_surface() {
        let below = MapParams::new(2.0, 1.1, 0.02).unwrap();
        let at_fp = detect_invariant_curve(&below, 100_000, 1_000).unwrap();
        assert_eq!(at_fp.classification, CurveClass::FixedPointAttractor);

        let above = MapParams::new(2.1, 1.1, 0.02).unwrap();
        let curve = detect_invariant_curve(&above, 100_000, 10_000).unwrap();
        assert_eq!(curve.classification, CurveClass::ClosedCurve);
        assert!(curve.mean_radius > 10.0 * FP_TOL);
        assert_eq!(curve.points.len(), 10_000);
        assert!(curve.points.iter().all(|pt| pt.is_finite()));

        let far = MapParams::new(2.2, 1.1, 0.02).unwrap();
        let esc = detect_invariant_curve(&far, 100_000, 1_000).unwrap();
        assert_eq!(esc.classification, CurveClass::Escaped);
    }

    #[test]
    fn rotation_number_near_the_linear_angle() {
        let thr = ns_threshold(1.1, 0.02).unwrap();
        let p = MapParams::new(thr.a_ns + 0.002, 1.1, 0.02).unwrap();
        let curve = detect_invariant_curve(&p, 100_000, 10_000).unwrap();
        assert_eq!(curve.classification, CurveClass::ClosedCurve);
        let linear = thr.theta0 / (2.0 * PI);
        // orientation is reversed by the coordinate change
        assert!(curve.rotation_number < 0.0);
        assert_relative_eq!(
            curve.rotation_number.abs(),
            linear,
            max_relative = 0.05
        );
    }
}
