//! Jacobi elliptic functions and complete elliptic integrals of the first
//! kind for real argument and modulus `k ∈ [0, 1]`.
//!
//! Both routines are built on the arithmetic-geometric mean. `jacobi` uses
//! the descending Landen sequence (Abramowitz & Stegun 16.4) after reducing
//! the argument modulo the real period `4K`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{domain, Result};

/// Hard cap on AGM iterations; convergence is quadratic so this is never hit
/// for finite input.
const AGM_MAX_ITER: usize = 64;
const AGM_REL_TOL: f64 = 1e-15;

/// Values of `(sn, cn, dn)` at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticTriple {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

impl EllipticTriple {
    pub const ORIGIN: EllipticTriple = EllipticTriple {
        sn: 0.0,
        cn: 1.0,
        dn: 1.0,
    };
}

/// Real and imaginary quarter periods `K(k)` and `K'(k) = K(k')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarterPeriods {
    pub k: f64,
    pub k_prime: f64,
}

fn check_modulus(k: f64) -> Result<()> {
    if !k.is_finite() || !(0.0..=1.0).contains(&k) {
        return Err(domain(format!("modulus k = {k} outside [0, 1]")));
    }
    Ok(())
}

/// Complementary modulus `√(1 − k²)`, computed without cancellation.
pub fn complementary(k: f64) -> f64 {
    ((1.0 - k) * (1.0 + k)).sqrt()
}

/// Arithmetic-geometric mean of two positive numbers.
fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= AGM_REL_TOL * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// `K(k) = π / (2·AGM(1, k'))` for `0 ≤ k < 1`.
pub fn complete_k(k: f64) -> Result<f64> {
    if !k.is_finite() || !(0.0..1.0).contains(&k) {
        return Err(domain(format!(
            "complete elliptic integral needs 0 <= k < 1, got {k}"
        )));
    }
    if k == 0.0 {
        return Ok(FRAC_PI_2);
    }
    Ok(FRAC_PI_2 / agm(1.0, complementary(k)))
}

/// Both quarter periods. `K'` is infinite at `k = 0`.
pub fn complete_elliptic(k: f64) -> Result<QuarterPeriods> {
    let big_k = complete_k(k)?;
    let kc = complementary(k);
    let k_prime = if k == 0.0 {
        f64::INFINITY
    } else {
        complete_k(kc)?
    };
    Ok(QuarterPeriods { k: big_k, k_prime })
}

/// `sn(u, k)`, `cn(u, k)`, `dn(u, k)`.
///
/// `k = 0` and `k = 1` use the trigonometric and hyperbolic closed forms.
/// Otherwise the argument is reduced into `[-2K, 2K]` and evaluated by
/// descending Landen transformation.
pub fn jacobi(u: f64, k: f64) -> Result<EllipticTriple> {
    if !u.is_finite() {
        return Err(domain(format!("non-finite argument u = {u}")));
    }
    check_modulus(k)?;

    if k == 0.0 {
        let (s, c) = u.sin_cos();
        return Ok(EllipticTriple {
            sn: s,
            cn: c,
            dn: 1.0,
        });
    }
    if k == 1.0 {
        let sech = 1.0 / u.cosh();
        return Ok(EllipticTriple {
            sn: u.tanh(),
            cn: sech,
            dn: sech,
        });
    }

    let period = 4.0 * complete_k(k)?;
    let u = u - period * (u / period).round();

    // Descending Landen sequence: a_n, c_n with a_0 = 1, b_0 = k', c_0 = k.
    let mut a = [0.0f64; AGM_MAX_ITER + 1];
    let mut c = [0.0f64; AGM_MAX_ITER + 1];
    a[0] = 1.0;
    c[0] = k;
    let mut b = complementary(k);
    let mut n = 0;
    while n < AGM_MAX_ITER && c[n].abs() > f64::EPSILON * a[n] {
        let an = a[n];
        a[n + 1] = 0.5 * (an + b);
        c[n + 1] = 0.5 * (an - b);
        b = (an * b).sqrt();
        n += 1;
    }

    let mut phi = (2f64).powi(n as i32) * a[n] * u;
    for i in (1..=n).rev() {
        let ratio = (c[i] / a[i] * phi.sin()).clamp(-1.0, 1.0);
        phi = 0.5 * (phi + ratio.asin());
    }
    let (sn, cn) = phi.sin_cos();
    let dn = ((1.0 - k * sn) * (1.0 + k * sn)).sqrt();
    Ok(EllipticTriple { sn, cn, dn })
}

/// `(|sn² + cn² − 1|, |dn² + k²·sn² − 1|)`.
pub fn jacobi_identity_residuals(t: EllipticTriple, k: f64) -> (f64, f64) {
    (
        (t.sn * t.sn + t.cn * t.cn - 1.0).abs(),
        (t.dn * t.dn + k * k * t.sn * t.sn - 1.0).abs(),
    )
}

/// Jacobi amplitude `am(u, k)` as a continuous function of `u`
/// (`sn = sin am`, `cn = cos am`).
pub fn amplitude(u: f64, k: f64) -> Result<f64> {
    let t = jacobi(u, k)?;
    if k == 1.0 {
        return Ok(t.sn.atan2(t.cn));
    }
    // am(u + 4K) = am(u) + 2π; unwrap the principal angle around the
    // winding count of the reduced argument.
    let period = 4.0 * complete_k(k)?;
    let turns = (u / period).round();
    Ok(t.sn.atan2(t.cn) + 2.0 * std::f64::consts::PI * turns)
}
