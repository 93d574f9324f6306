//! Complex special functions used by the closed-form steady states:
//! log-gamma, rising factorials, `0F2` and the terminating `2F1(-m, y; z; 2)`.

mod ddouble;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use ddouble::{CDd, Dd};

/// Distance from a nonpositive integer below which an argument is a pole.
pub const POLE_DISTANCE: f64 = 1e-12;
/// A Pochhammer factor smaller than this is treated as a vanishing denominator.
pub const DENOMINATOR_UNDERFLOW: f64 = 1e-300;
/// Relative size a term must stay below to count towards convergence.
pub const SERIES_RTOL: f64 = 1e-16;
/// Number of consecutive small terms required before a series stops.
pub const SERIES_QUIET_TERMS: usize = 5;
pub const SERIES_MAX_TERMS: usize = 100_000;

/// Value of a summed series together with how the summation ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub value: Complex64,
    pub terms_used: usize,
    pub converged: bool,
    /// Estimated relative size of the discarded tail.
    pub tail_estimate: f64,
}

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

fn nonpositive_integer_distance(z: Complex64) -> Option<f64> {
    let k = z.re.round();
    if k > 0.0 {
        return None;
    }
    Some(Complex64::new(z.re - k, z.im).norm())
}

fn is_pole(z: Complex64) -> bool {
    matches!(nonpositive_integer_distance(z), Some(d) if d < POLE_DISTANCE)
}

/// Principal-branch `log Γ(z)`: the analytic continuation of the real
/// log-gamma from the positive axis, with its cut along the negative axis.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidParams(format!("log_gamma of non-finite {z}")));
    }
    if is_pole(z) {
        return Err(Error::Pole { z });
    }
    if z.re < 0.5 {
        // Reflection; the 2πi shift keeps the continuation off the principal
        // branch of log sin.
        let shift = (2.0 * PI).copysign(z.im) * (0.5 * z.re + 0.25).floor();
        Ok(Complex64::new(LN_PI, shift) - log_sin_pi(z) - lanczos_log_gamma(1.0 - z))
    } else {
        Ok(lanczos_log_gamma(z))
    }
}

fn lanczos_log_gamma(z: Complex64) -> Complex64 {
    let w = z - 1.0;
    let mut series = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (w + k as f64);
    }
    let t = w + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (w + 0.5) * t.ln() - t + series.ln()
}

/// `sin(πx)` and `cos(πx)` with exact zeros at the integers / half-integers.
fn sin_cos_pi(x: f64) -> (f64, f64) {
    let r = x - 2.0 * (0.5 * x).round();
    if r == 0.0 {
        return (0.0, 1.0);
    }
    if r.abs() == 0.5 {
        return (r.signum(), 0.0);
    }
    if r.abs() == 1.0 {
        return (0.0, -1.0);
    }
    ((PI * r).sin(), (PI * r).cos())
}

/// Principal logarithm of `sin(πz)`, safe for large `|Im z|`.
fn log_sin_pi(z: Complex64) -> Complex64 {
    let (s, c) = sin_cos_pi(z.re);
    let y = PI * z.im;
    if y.abs() < 20.0 {
        return Complex64::new(s * y.cosh(), c * y.sinh()).ln();
    }
    // sin(πz) = ∓(1/2i) e^{∓iπz} (1 − e^{±2πiz}); the dominant exponential
    // is e^{π|y|}.
    let sign = z.im.signum();
    let small = Complex64::new(0.0, 2.0 * PI * sign * z.re).exp() * (-2.0 * y.abs()).exp();
    let phase = sign * (PI / 2.0 - PI * z.re);
    let raw = Complex64::new(y.abs() - std::f64::consts::LN_2, phase) + (1.0 - small).ln();
    Complex64::new(raw.re, wrap_angle(raw.im))
}

fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    } else if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

/// Rising factorial `(x)_m = x (x+1) ... (x+m-1)`, by direct product.
pub fn pochhammer(x: Complex64, m: usize) -> Complex64 {
    (0..m).fold(Complex64::new(1.0, 0.0), |acc, j| acc * (x + j as f64))
}

/// `0F2(; b1, b2; z) = Σ z^m / ((b1)_m (b2)_m m!)` by direct summation.
pub fn hyp0f2(b1: Complex64, b2: Complex64, z: Complex64) -> Result<SeriesResult> {
    for b in [b1, b2] {
        if let Some(d) = nonpositive_integer_distance(b) {
            if d < POLE_DISTANCE {
                return Err(Error::DenominatorPole {
                    index: (-b.re.round()) as usize,
                    magnitude: d,
                });
            }
        }
    }
    let one = Complex64::new(1.0, 0.0);
    if z == Complex64::new(0.0, 0.0) {
        return Ok(SeriesResult {
            value: one,
            terms_used: 1,
            converged: true,
            tail_estimate: 0.0,
        });
    }

    // past this index |b1 + m| and |b2 + m| only grow, so the term ratio
    // decreases monotonically and a small ratio really bounds the tail
    let monotone_from = [b1, b2]
        .iter()
        .map(|b| (-b.re).ceil().max(0.0) as usize)
        .max()
        .unwrap_or(0);
    let mut sum = one;
    let mut term = one;
    let mut quiet = 0;
    let mut last_ratio = f64::INFINITY;
    for m in 0..SERIES_MAX_TERMS - 1 {
        let mf = m as f64;
        let den = (b1 + mf) * (b2 + mf);
        let mag = (b1 + mf).norm().min((b2 + mf).norm());
        if mag < DENOMINATOR_UNDERFLOW || den.norm() < DENOMINATOR_UNDERFLOW {
            return Err(Error::DenominatorPole {
                index: m,
                magnitude: mag,
            });
        }
        let next = term * z / (den * (mf + 1.0));
        last_ratio = if term.norm() > 0.0 {
            next.norm() / term.norm()
        } else {
            0.0
        };
        term = next;
        sum += term;

        let rel = term.norm() / sum.norm().max(f64::MIN_POSITIVE);
        if rel < SERIES_RTOL {
            quiet += 1;
        } else {
            quiet = 0;
        }
        // early small terms can precede growth when b1 + m or b2 + m passes near zero
        if quiet >= SERIES_QUIET_TERMS && last_ratio < 0.5 && m >= monotone_from {
            let tail = rel * last_ratio / (1.0 - last_ratio);
            return Ok(SeriesResult {
                value: sum,
                terms_used: m + 2,
                converged: true,
                tail_estimate: tail,
            });
        }
    }
    let rel = term.norm() / sum.norm().max(f64::MIN_POSITIVE);
    Ok(SeriesResult {
        value: sum,
        terms_used: SERIES_MAX_TERMS,
        converged: false,
        tail_estimate: if last_ratio < 1.0 {
            rel * last_ratio / (1.0 - last_ratio)
        } else {
            f64::INFINITY
        },
    })
}

/// Terminating `2F1(-m, y; z; 2) = Σ_{n≤m} (-m)_n (y)_n / (z)_n · 2^n / n!`.
///
/// Terms alternate in sign and can exceed the result by many orders of
/// magnitude, so the sum and every term are carried in double-double
/// arithmetic. The integer prefactor `(-m)_n 2^n / n! = (-2)^n C(m, n)` is
/// exact in that representation well past `m = 60`.
pub fn hyp2f1_terminating(m: usize, y: Complex64, z: Complex64) -> Result<Complex64> {
    for n in 0..m {
        let f = z + n as f64;
        if f.norm() < POLE_DISTANCE {
            return Err(Error::DenominatorPole {
                index: n,
                magnitude: f.norm(),
            });
        }
    }
    let y = CDd::from_c64(y);
    let z = CDd::from_c64(z);
    let mut sum = CDd::ONE;
    let mut coef = Dd::ONE;
    let mut ratio = CDd::ONE;
    for n in 0..m {
        let nd = CDd::from_c64(Complex64::new(n as f64, 0.0));
        coef = (coef * Dd::from_f64(-2.0 * (m - n) as f64)).div(Dd::from_f64((n + 1) as f64));
        ratio = (ratio * (y + nd)).div(z + nd);
        sum = sum + ratio.scale(coef);
    }
    let v = sum.to_c64();
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::NonConvergence {
            what: "terminating 2F1 overflowed",
            limit: m,
        });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn log_gamma_at_one_and_half() {
        assert!(log_gamma(c(1.0, 0.0)).unwrap().norm() < 1e-15);
        assert!(log_gamma(c(2.0, 0.0)).unwrap().norm() < 1e-15);
        let v = log_gamma(c(0.5, 0.0)).unwrap();
        assert_relative_eq!(v.re, 0.572_364_942_924_700_1, max_relative = 1e-14);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn log_gamma_rejects_poles() {
        for z in [c(0.0, 0.0), c(-3.0, 0.0), c(-7.0 + 5e-13, 1e-13)] {
            assert!(matches!(log_gamma(z), Err(Error::Pole { .. })));
        }
        assert!(log_gamma(c(-3.0, 1e-6)).is_ok());
    }

    #[test]
    fn log_gamma_recurrence() {
        for &(re, im) in &[
            (0.7, 0.3),
            (3.0, -4.0),
            (-2.4, 0.8),
            (55.0, 20.0),
            (-40.2, -3.0),
        ] {
            let z = c(re, im);
            let d = log_gamma(z + 1.0).unwrap() - log_gamma(z).unwrap() - z.ln();
            let k = (d.im / (2.0 * PI)).round();
            assert!(
                d.re.abs() < 1e-12 && (d.im - 2.0 * PI * k).abs() < 1e-12,
                "{z}: {d}"
            );
        }
    }

    #[test]
    fn large_imaginary_part_takes_stable_path() {
        // Compare the asymptotic log-sin branch against the direct one where both apply.
        for &(re, im) in &[(-3.3, 6.5), (-0.2, -6.6), (-11.9, 7.0)] {
            let z = c(re, im);
            let (s, co) = sin_cos_pi(z.re);
            let direct = Complex64::new(s * (PI * z.im).cosh(), co * (PI * z.im).sinh()).ln();
            let d = log_sin_pi(z) - direct;
            assert!(d.norm() < 1e-13, "{z}: {d}");
        }
    }

    #[test]
    fn pochhammer_basics() {
        assert_eq!(pochhammer(c(3.3, -1.0), 0), c(1.0, 0.0));
        assert_eq!(pochhammer(c(1.0, 0.0), 5), c(120.0, 0.0));
        assert_eq!(pochhammer(c(-2.0, 0.0), 4), c(0.0, 0.0));
        let x = c(2.5, -0.1);
        let via_gamma = (log_gamma(x + 7.0).unwrap() - log_gamma(x).unwrap()).exp();
        let direct = pochhammer(x, 7);
        assert!((via_gamma - direct).norm() / direct.norm() < 1e-12);
    }

    #[test]
    fn hyp0f2_trivial_argument() {
        let r = hyp0f2(c(2.0, 1.0), c(-0.5, 0.3), c(0.0, 0.0)).unwrap();
        assert_eq!(r.value, c(1.0, 0.0));
        assert_eq!(r.terms_used, 1);
        assert!(r.converged);
    }

    #[test]
    fn hyp0f2_pole_parameters() {
        let e = hyp0f2(c(-4.0, 0.0), c(1.0, 0.0), c(1.0, 0.0));
        assert!(matches!(e, Err(Error::DenominatorPole { .. })));
        let e = hyp0f2(c(1.0, 0.0), c(-4.0 + 1e-14, 0.0), c(1.0, 0.0));
        assert!(matches!(e, Err(Error::DenominatorPole { .. })));
    }

    #[test]
    fn hyp0f2_symmetric_in_lower_parameters() {
        let (b1, b2, z) = (c(1.3, 0.4), c(-6.5, -2.0), c(40.0, -3.0));
        let a = hyp0f2(b1, b2, z).unwrap();
        let b = hyp0f2(b2, b1, z).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn hyp0f2_reports_tail() {
        let r = hyp0f2(c(2.0, 0.0), c(3.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!(r.converged);
        assert!(r.tail_estimate <= SERIES_RTOL);
        assert!(r.terms_used > SERIES_QUIET_TERMS);
    }

    #[test]
    fn hyp2f1_small_orders() {
        let (y, z) = (c(0.3, -1.2), c(-2.5, 0.7));
        assert_eq!(hyp2f1_terminating(0, y, z).unwrap(), c(1.0, 0.0));
        let one = hyp2f1_terminating(1, y, z).unwrap();
        let expect = 1.0 - 2.0 * y / z;
        assert!((one - expect).norm() < 1e-15);
    }

    #[test]
    fn hyp2f1_binomial_identity_is_exact() {
        for m in 0..=30 {
            let y = c(-0.655, -0.0538);
            let v = hyp2f1_terminating(m, y, y).unwrap();
            let expect = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(v, c(expect, 0.0), "m = {m}");
        }
    }

    #[test]
    fn hyp2f1_rejects_denominator_pole() {
        let e = hyp2f1_terminating(5, c(1.0, 0.0), c(-3.0, 0.0));
        assert!(matches!(e, Err(Error::DenominatorPole { index: 3, .. })));
        // a pole beyond the last term is harmless
        assert!(hyp2f1_terminating(2, c(1.0, 0.0), c(-3.0, 0.0)).is_ok());
    }
}
