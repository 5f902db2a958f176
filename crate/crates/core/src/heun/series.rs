//! Local power-series solutions of the Heun equation.
//!
//! Multiplying the equation by `P(z) = z(z−1)(z−a)` gives
//! `P v'' + Q v' + R v = 0` with `Q = γ(z−1)(z−a) + δ z(z−a) + ε z(z−1)` and
//! `R = αβ z − q_a`. Expanding `P`, `Q`, `R` about the centre and matching
//! powers yields the coefficient recurrences used here: four terms at an
//! ordinary point, three terms at a singular point (where `P` has no
//! constant term).

use num_complex::Complex64;

use super::HeunData;
use crate::error::{domain, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Expansion point for [`local_series`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesCenter {
    Zero,
    One,
    /// `z = a = 1/k²`.
    SingularA,
    Ordinary(Complex64),
}

/// Which local solution to build.
///
/// At a singular point `First` is the exponent-0 Frobenius solution and
/// `Second` the one with exponent `1 − γ` (resp. `1 − δ`, `1 − ε`). At an
/// ordinary point they are the solutions with `(v, v') = (1, 0)` and
/// `(0, 1)` at the centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentChoice {
    First,
    Second,
}

/// Truncated local solution `v(z) = (z − c)^ρ Σ c_n (z − c)^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSeries {
    pub center: Complex64,
    pub exponent: f64,
    pub coefficients: Vec<Complex64>,
    /// Distance from the centre to the nearest other finite singular point.
    pub radius: f64,
}

impl LocalSeries {
    /// Returns `(v, v', v'')` at `z` using the principal branch of
    /// `(z − c)^ρ`.
    pub fn eval(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let t = z - self.center;
        let (s0, s1, s2) = power_sums(&self.coefficients, t);
        let rho = self.exponent;
        if rho == 0.0 {
            return (s0, s1, s2);
        }
        if t == ZERO {
            // Only the exponent-0 pieces survive; ρ > 0 here.
            return (ZERO, ZERO, ZERO);
        }
        let tr = (rho * t.ln()).exp();
        (
            tr * s0,
            tr * (s1 + rho * s0 / t),
            tr * (s2 + 2.0 * rho * s1 / t + rho * (rho - 1.0) * s0 / (t * t)),
        )
    }

    /// `|v'' + P v' + Q v|` at `z`.
    pub fn residual(&self, data: &HeunData, z: Complex64) -> f64 {
        let (v, dv, d2v) = self.eval(z);
        data.residual(z, v, dv, d2v)
    }
}

/// `(Σ c_n t^n, Σ n c_n t^(n−1), Σ n(n−1) c_n t^(n−2))` by Horner's rule.
pub(crate) fn power_sums(c: &[Complex64], t: Complex64) -> (Complex64, Complex64, Complex64) {
    let mut s0 = ZERO;
    let mut s1 = ZERO;
    let mut s2 = ZERO;
    for (n, &cn) in c.iter().enumerate().rev() {
        s0 = s0 * t + cn;
        if n >= 1 {
            s1 = s1 * t + cn * n as f64;
        }
        if n >= 2 {
            s2 = s2 * t + cn * (n * (n - 1)) as f64;
        }
    }
    (s0, s1, s2)
}

/// Taylor coefficients of `P`, `Q`, `R` about `center`.
struct Expanded {
    p: [Complex64; 4],
    q: [Complex64; 3],
    r: [Complex64; 2],
}

fn expand(data: &HeunData, c: Complex64) -> Expanded {
    let a = data.singular_a;
    let (g, d, e) = (data.gamma, data.delta, data.epsilon);
    Expanded {
        p: [
            c * (c - 1.0) * (c - a),
            3.0 * c * c - 2.0 * (1.0 + a) * c + a,
            3.0 * c - (1.0 + a),
            ONE,
        ],
        q: [
            g * (c - 1.0) * (c - a) + d * c * (c - a) + e * c * (c - 1.0),
            2.0 * (g + d + e) * c - (g * (1.0 + a) + d * a + e),
            Complex64::new(g + d + e, 0.0),
        ],
        r: [
            data.alpha * data.beta * c - data.accessory,
            Complex64::new(data.alpha * data.beta, 0.0),
        ],
    }
}

/// Taylor coefficients at an ordinary point from `v(c)` and `v'(c)`.
pub(crate) fn ordinary_coefficients(
    data: &HeunData,
    center: Complex64,
    value: Complex64,
    slope: Complex64,
    n_terms: usize,
) -> Vec<Complex64> {
    let ex = expand(data, center);
    let mut c = vec![ZERO; n_terms.max(2)];
    c[0] = value;
    c[1] = slope;
    let coef = |c: &[Complex64], m: isize| -> Complex64 {
        if m < 0 {
            ZERO
        } else {
            c[m as usize]
        }
    };
    for n in 2..n_terms {
        let ni = n as isize;
        let mut acc = ZERO;
        for j in 1..4isize {
            let m = ni - j;
            acc += ex.p[j as usize] * (m * (m - 1)) as f64 * coef(&c, m);
        }
        for j in 0..3isize {
            let m = ni - 1 - j;
            acc += ex.q[j as usize] * m as f64 * coef(&c, m);
        }
        for j in 0..2isize {
            acc += ex.r[j as usize] * coef(&c, ni - 2 - j);
        }
        c[n] = -acc / (ex.p[0] * (n * (n - 1)) as f64);
    }
    c.truncate(n_terms);
    c
}

/// Frobenius coefficients at a singular centre with exponent `rho`.
fn frobenius_coefficients(
    data: &HeunData,
    center: Complex64,
    rho: f64,
    other: f64,
    n_terms: usize,
) -> Result<Vec<Complex64>> {
    let ex = expand(data, center);
    let mut c = vec![ZERO; n_terms];
    c[0] = ONE;
    for n in 1..n_terms {
        let x = n as f64 + rho;
        // p1·x(x−1) + q0·x = p1·n·(n + ρ − ρ_other)
        let lead = ex.p[1] * x * (x - 1.0) + ex.q[0] * x;
        if lead.norm() < 1e-12 * ex.p[1].norm() * (n as f64).powi(2) {
            return Err(Error::LogarithmicCase(rho, other));
        }
        let prev = c[n - 1];
        let prev2 = if n >= 2 { c[n - 2] } else { ZERO };
        let x1 = x - 1.0;
        let x2 = x - 2.0;
        let acc = ex.p[2] * x1 * (x1 - 1.0) * prev
            + ex.p[3] * x2 * (x2 - 1.0) * prev2
            + ex.q[1] * x1 * prev
            + ex.q[2] * x2 * prev2
            + ex.r[0] * prev
            + ex.r[1] * prev2;
        c[n] = -acc / lead;
    }
    Ok(c)
}

/// Builds a local solution of the Heun equation about `center`.
pub fn local_series(
    data: &HeunData,
    center: SeriesCenter,
    choice: ExponentChoice,
    n_terms: usize,
) -> Result<LocalSeries> {
    if n_terms < 8 {
        return Err(domain(format!(
            "need at least 8 series terms, got {n_terms}"
        )));
    }
    let points = data.singular_points();
    let (z0, local_gamma) = match center {
        SeriesCenter::Zero => (points[0], Some(data.gamma)),
        SeriesCenter::One => (points[1], Some(data.delta)),
        SeriesCenter::SingularA => (points[2], Some(data.epsilon)),
        SeriesCenter::Ordinary(z) => (z, None),
    };
    let radius = points
        .iter()
        .map(|s| (z0 - s).norm())
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);

    match local_gamma {
        None => {
            if data.nearest_singularity(z0).0 == 0.0 {
                return Err(domain(
                    "ordinary-point expansion requested at a singular point",
                ));
            }
            let (value, slope) = match choice {
                ExponentChoice::First => (ONE, ZERO),
                ExponentChoice::Second => (ZERO, ONE),
            };
            Ok(LocalSeries {
                center: z0,
                exponent: 0.0,
                coefficients: ordinary_coefficients(data, z0, value, slope, n_terms),
                radius,
            })
        }
        Some(g) => {
            let second = 1.0 - g;
            let (rho, other) = match choice {
                ExponentChoice::First => (0.0, second),
                ExponentChoice::Second => (second, 0.0),
            };
            if choice == ExponentChoice::Second && second.abs() < 1e-12 {
                return Err(Error::LogarithmicCase(rho, other));
            }
            Ok(LocalSeries {
                center: z0,
                exponent: rho,
                coefficients: frobenius_coefficients(data, z0, rho, other, n_terms)?,
                radius,
            })
        }
    }
}
