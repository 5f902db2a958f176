//! Reduction of the spin-flip amplitude equation to the general Heun
//! equation, and an independent computation of the flip probability from
//! Heun solutions.
//!
//! Shifting the time by the imaginary quarter period (`τ = τ' + iK'`) and
//! moving to the half argument turns the generalized Lamé equation for `φ₂`
//! into a Fuchsian equation in `z = sn²(τ'/2)` with regular singular points
//! `0`, `1`, `1/k²` and `∞`. Removing the local power behaviour
//! `w(z) = z^p (z−1)^q (z−1/k²)^r` leaves the Heun equation
//!
//! ```text
//! v'' + (γ/z + δ/(z−1) + ε/(z−a)) v' + (αβ z − q_a) / (z (z−1) (z−a)) v = 0,   a = 1/k².
//! ```
//!
//! For real `τ` the path `z(τ)` runs on the circle `|z| = 1/k`, which stays
//! away from all three finite singular points for `0 < k < 1`.

mod continuation;
mod series;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::elliptic;
use crate::error::{domain, Error, Result};
use crate::spin::SimParams;

pub use continuation::{
    continue_along_path, flip_probability_heun, flip_probability_heun_with, w_factor_along,
    Continuation, FundamentalPair, HeunOptions,
};
pub use series::{local_series, ExponentChoice, LocalSeries, SeriesCenter};

/// Tolerance for identities that hold exactly in exact arithmetic.
const IDENTITY_TOL: f64 = 1e-12;

/// Coefficients of the algebraic (Fuchsian) form
///
/// ```text
/// y'' + Σ A_i/(z−α_i) y' + (Σ B_i/(z−α_i)² + Σ C_i/(z−α_i)) y = 0
/// ```
///
/// with `α = (0, 1, 1/k²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraicCoefficients {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    /// `Δ/(4ω)`.
    pub small_a: f64,
    /// `Δ²/(4ω²)`.
    pub small_b: f64,
    pub modulus: f64,
}

impl AlgebraicCoefficients {
    /// Finite singular points `(0, 1, 1/k²)`.
    pub fn singular_points(&self) -> [f64; 3] {
        [0.0, 1.0, 1.0 / (self.modulus * self.modulus)]
    }

    /// `Σ (B_i + α_i C_i)`, the constant term of the indicial equation at
    /// infinity.
    pub fn infinity_constant(&self) -> f64 {
        let alpha = self.singular_points();
        (0..3).map(|i| self.b[i] + alpha[i] * self.c[i]).sum()
    }

    /// Indicial polynomial at finite singular point `i`:
    /// `ρ(ρ−1) + A_i ρ + B_i`.
    pub fn indicial_at(&self, i: usize, rho: f64) -> f64 {
        rho * (rho - 1.0) + self.a[i] * rho + self.b[i]
    }

    /// Indicial polynomial at infinity:
    /// `ρ(ρ−1) + (2 − ΣA)ρ + Σ(B_i + α_i C_i)`.
    pub fn indicial_at_infinity(&self, rho: f64) -> f64 {
        let sum_a: f64 = self.a.iter().sum();
        rho * (rho - 1.0) + (2.0 - sum_a) * rho + self.infinity_constant()
    }
}

fn check_open_modulus(k: f64) -> Result<()> {
    if !k.is_finite() || !(k > 0.0 && k < 1.0) {
        return Err(domain(format!(
            "Heun reduction requires 0 < k < 1, got k = {k}"
        )));
    }
    Ok(())
}

/// Coefficients of the algebraic form for the given parameters.
///
/// The residues satisfy `C₁ + C₂ + C₃ = 0` because infinity is a regular
/// singular point; this is checked before returning.
pub fn algebraic_coefficients(params: &SimParams) -> Result<AlgebraicCoefficients> {
    params.validate()?;
    let k = params.modulus;
    check_open_modulus(k)?;
    let d = params.detuning();
    let small_a = d / 4.0;
    let small_b = d * d / 4.0;
    let omega2 = params.rabi().powi(2);
    let k2 = k * k;

    let bracket = (small_a * (k2 - 1.0) - small_b * (k2 + 1.0) + omega2) / (k2 - 1.0);
    let c1 = 2.0 * (small_a - small_b) - 2.0 * small_b * k2 + omega2;
    let c2 = -2.0 * (small_a - small_b) - (small_a + small_b) + bracket;
    let c3 = k2 * (small_a + small_b) - k2 * bracket;

    let coeffs = AlgebraicCoefficients {
        a: [0.5; 3],
        b: [small_a - small_b, small_a - small_b, -(small_a + small_b)],
        c: [c1, c2, c3],
        small_a,
        small_b,
        modulus: k,
    };
    let scale = 1.0f64.max(c1.abs()).max(c2.abs()).max(c3.abs());
    let sum = c1 + c2 + c3;
    if sum.abs() > IDENTITY_TOL * scale {
        return Err(Error::Consistency(format!(
            "C1 + C2 + C3 = {sum:e} (expected 0)"
        )));
    }
    Ok(coeffs)
}

/// Which root of an indicial quadratic to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn symbol(self) -> char {
        match self {
            Branch::Plus => '+',
            Branch::Minus => '-',
        }
    }
}

/// Characteristic exponents at `0`, `1`, `1/k²` and `∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentSet {
    pub p_plus: f64,
    pub p_minus: f64,
    pub q_plus: f64,
    pub q_minus: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub rho_inf_plus: f64,
    pub rho_inf_minus: f64,
}

impl ExponentSet {
    pub fn p(&self, b: Branch) -> f64 {
        match b {
            Branch::Plus => self.p_plus,
            Branch::Minus => self.p_minus,
        }
    }

    pub fn q(&self, b: Branch) -> f64 {
        match b {
            Branch::Plus => self.q_plus,
            Branch::Minus => self.q_minus,
        }
    }

    pub fn r(&self, b: Branch) -> f64 {
        match b {
            Branch::Plus => self.r_plus,
            Branch::Minus => self.r_minus,
        }
    }

    /// True when the two roots at `z = 0` (equivalently `z = 1`) differ by
    /// an integer, so a Frobenius basis there may need a logarithm.
    pub fn degenerate_at_zero(&self) -> bool {
        is_integer(self.p_plus - self.p_minus)
    }

    pub fn degenerate_at_singular_a(&self) -> bool {
        is_integer(self.r_plus - self.r_minus)
    }
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < IDENTITY_TOL
}

/// Roots of the indicial equations `ρ(ρ−1) + ρ/2 + B = 0` at every singular
/// point.
pub fn indicial_exponents(params: &SimParams) -> ExponentSet {
    let d = params.detuning();
    let near = (d / 2.0 - 0.25).abs();
    let far = (d / 2.0 + 0.25).abs();
    ExponentSet {
        p_plus: 0.25 + near,
        p_minus: 0.25 - near,
        q_plus: 0.25 + near,
        q_minus: 0.25 - near,
        r_plus: 0.25 + far,
        r_minus: 0.25 - far,
        rho_inf_plus: 0.25 + far,
        rho_inf_minus: 0.25 - far,
    }
}

/// One of the eight exponent triples `(p±, q±, r±)` usable in the
/// substitution `y = w·v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExponentSelection {
    pub p: Branch,
    pub q: Branch,
    pub r: Branch,
}

impl ExponentSelection {
    pub const fn new(p: Branch, q: Branch, r: Branch) -> Self {
        ExponentSelection { p, q, r }
    }

    /// All eight selections in the order `+++, +-+, ++-, +--, -++, --+, -+-, ---`.
    pub const ALL: [ExponentSelection; 8] = {
        use Branch::{Minus as M, Plus as P};
        [
            ExponentSelection::new(P, P, P),
            ExponentSelection::new(P, M, P),
            ExponentSelection::new(P, P, M),
            ExponentSelection::new(P, M, M),
            ExponentSelection::new(M, P, P),
            ExponentSelection::new(M, M, P),
            ExponentSelection::new(M, P, M),
            ExponentSelection::new(M, M, M),
        ]
    };

    /// Smallest exponents at every point.
    pub const ALL_MINUS: ExponentSelection =
        ExponentSelection::new(Branch::Minus, Branch::Minus, Branch::Minus);
}

impl Default for ExponentSelection {
    fn default() -> Self {
        Self::ALL_MINUS
    }
}

impl fmt::Display for ExponentSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            self.p.symbol(),
            self.q.symbol(),
            self.r.symbol()
        )
    }
}

impl FromStr for ExponentSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let branches: Vec<Branch> = s
            .chars()
            .map(|c| match c {
                '+' => Ok(Branch::Plus),
                '-' => Ok(Branch::Minus),
                other => Err(domain(format!("invalid exponent branch '{other}'"))),
            })
            .collect::<Result<_>>()?;
        match branches[..] {
            [p, q, r] => Ok(ExponentSelection { p, q, r }),
            _ => Err(domain(format!(
                "exponent selection needs three of '+'/'-', got {s:?}"
            ))),
        }
    }
}

/// Parameters of the Heun equation for one exponent selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeunData {
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Accessory parameter `q_a`.
    pub accessory: f64,
    /// Third finite singular point `a = 1/k²`.
    pub singular_a: f64,
    pub selection: ExponentSelection,
    /// Chosen exponents `(p, q, r)` of the prefactor `w(z)`.
    pub exponents: [f64; 3],
}

impl HeunData {
    pub fn singular_points(&self) -> [Complex64; 3] {
        [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(self.singular_a, 0.0),
        ]
    }

    /// Coefficient of `v'`: `γ/z + δ/(z−1) + ε/(z−a)`.
    pub fn first_order_coefficient(&self, z: Complex64) -> Complex64 {
        self.gamma / z + self.delta / (z - 1.0) + self.epsilon / (z - self.singular_a)
    }

    /// Coefficient of `v`: `(αβ z − q_a)/(z(z−1)(z−a))`.
    pub fn zeroth_order_coefficient(&self, z: Complex64) -> Complex64 {
        (self.alpha * self.beta * z - self.accessory) / (z * (z - 1.0) * (z - self.singular_a))
    }

    /// `|v'' + P v' + Q v|` for supplied values and derivatives.
    pub fn residual(&self, z: Complex64, v: Complex64, dv: Complex64, d2v: Complex64) -> f64 {
        (d2v + self.first_order_coefficient(z) * dv + self.zeroth_order_coefficient(z) * v).norm()
    }

    /// `γ + δ + ε − (α + β + 1)`.
    pub fn fuchs_defect(&self) -> f64 {
        self.gamma + self.delta + self.epsilon - (self.alpha + self.beta + 1.0)
    }

    /// Distance from `z` to the nearest finite singular point, and that point.
    pub fn nearest_singularity(&self, z: Complex64) -> (f64, Complex64) {
        self.singular_points()
            .into_iter()
            .map(|s| ((z - s).norm(), s))
            .fold((f64::INFINITY, Complex64::new(0.0, 0.0)), |best, cur| {
                if cur.0 < best.0 {
                    cur
                } else {
                    best
                }
            })
    }

    pub fn riemann_symbol(&self) -> RiemannSymbol {
        RiemannSymbol {
            singular_a: self.singular_a,
            columns: [
                (0.0, 1.0 - self.gamma),
                (0.0, 1.0 - self.delta),
                (0.0, 1.0 - self.epsilon),
                (self.alpha, self.beta),
            ],
            accessory: self.accessory,
        }
    }
}

/// Singular points with their exponent pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannSymbol {
    pub singular_a: f64,
    /// Exponent pairs at `0`, `1`, `a`, `∞`.
    pub columns: [(f64, f64); 4],
    pub accessory: f64,
}

impl fmt::Display for RiemannSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.columns;
        writeln!(f, "  0        1        {:<8.4} inf", self.singular_a)?;
        writeln!(
            f,
            "  {:<8.4} {:<8.4} {:<8.4} {:<8.4}  z; q_a = {:.6}",
            c[0].0, c[1].0, c[2].0, c[3].0, self.accessory
        )?;
        write!(
            f,
            "  {:<8.4} {:<8.4} {:<8.4} {:<8.4}",
            c[0].1, c[1].1, c[2].1, c[3].1
        )
    }
}

/// Heun parameters for the given exponent selection. Verifies the Fuchs
/// relation `γ + δ + ε = α + β + 1`.
pub fn heun_parameters(params: &SimParams, selection: ExponentSelection) -> Result<HeunData> {
    let coeffs = algebraic_coefficients(params)?;
    let ex = indicial_exponents(params);
    let (p, q, r) = (ex.p(selection.p), ex.q(selection.q), ex.r(selection.r));
    let k2 = params.modulus * params.modulus;
    let gamma = 2.0 * p + 0.5;
    let delta = 2.0 * q + 0.5;
    let epsilon = 2.0 * r + 0.5;
    let shift = p + q + r;
    let data = HeunData {
        gamma,
        delta,
        epsilon,
        alpha: ex.rho_inf_plus + shift,
        beta: ex.rho_inf_minus + shift,
        accessory: gamma * r + 0.5 * p - (coeffs.c[0] - gamma * q - 0.5 * p) / k2,
        singular_a: 1.0 / k2,
        selection,
        exponents: [p, q, r],
    };
    let defect = data.fuchs_defect();
    if defect.abs() > IDENTITY_TOL * (1.0 + gamma.abs() + delta.abs() + epsilon.abs()) {
        return Err(Error::Consistency(format!(
            "Fuchs relation violated by {defect:e} for selection {selection}"
        )));
    }
    Ok(data)
}

/// The explicit shifted half-argument value
/// `k^(−1/2)·((1+k)·sn(τ/2) − i·cn(τ/2)·dn(τ/2)) / (1 + k·sn²(τ/2))`,
/// which equals `sn((τ − iK')/2, k)`.
pub fn shifted_half_sn(tau: f64, k: f64) -> Result<Complex64> {
    check_open_modulus(k)?;
    let e = elliptic::jacobi(0.5 * tau, k)?;
    let num = Complex64::new((1.0 + k) * e.sn, -e.cn * e.dn);
    Ok(num / (k.sqrt() * (1.0 + k * e.sn * e.sn)))
}

/// Heun variable `z(τ) = sn²((τ − iK')/2, k)`.
pub fn z_of_tau(tau: f64, k: f64) -> Result<Complex64> {
    let s = shifted_half_sn(tau, k)?;
    Ok(s * s)
}

/// `dz/dτ`, from differentiating the explicit expression with
/// `d sn = cn·dn`, `d cn = −sn·dn`, `d dn = −k²·sn·cn`.
pub fn dz_dtau(tau: f64, k: f64) -> Result<Complex64> {
    check_open_modulus(k)?;
    let e = elliptic::jacobi(0.5 * tau, k)?;
    let (s, c, d) = (e.sn, e.cn, e.dn);
    let num = Complex64::new((1.0 + k) * s, -c * d);
    let den = 1.0 + k * s * s;
    // Derivatives with respect to τ (half of those with respect to τ/2).
    let d_num = 0.5 * Complex64::new((1.0 + k) * c * d, s * (d * d + k * k * c * c));
    let d_den = k * s * c * d;
    let scale = 1.0 / k.sqrt();
    let sval = scale * num / den;
    let d_s = scale * (d_num * den - num * d_den) / (den * den);
    Ok(2.0 * sval * d_s)
}

/// Principal-branch prefactor `w(z) = z^p (z−1)^q (z−a)^r`.
pub fn w_factor(z: Complex64, data: &HeunData) -> Result<Complex64> {
    let mut w = Complex64::new(1.0, 0.0);
    for (point, &e) in data.singular_points().iter().zip(&data.exponents) {
        let t = z - point;
        if t == Complex64::new(0.0, 0.0) {
            if e < 0.0 {
                return Err(Error::Pole(z));
            }
            if e > 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            continue;
        }
        if e != 0.0 {
            w *= (e * t.ln()).exp();
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(h: f64, d: f64, k: f64) -> SimParams {
        SimParams::from_detuning(h, d, k).unwrap()
    }

    #[test]
    fn coefficients_at_resonance() {
        let c = algebraic_coefficients(&params(0.2, 0.0, 0.5)).unwrap();
        assert_eq!(c.a, [0.5; 3]);
        assert_eq!((c.small_a, c.small_b), (0.0, 0.0));
        assert_eq!(c.b, [0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(c.c[0], 0.04, epsilon = 1e-15);
    }

    #[test]
    fn residues_sum_to_zero() {
        for &(h, d, k) in &[(0.2, 0.1, 0.5), (1.3, -0.7, 0.1), (0.05, 2.5, 0.95)] {
            let c = algebraic_coefficients(&params(h, d, k)).unwrap();
            assert!((c.c.iter().sum::<f64>()).abs() < 1e-12 * c.c[1].abs().max(1.0));
            // Regular singular point at infinity with exponents ρ∞±.
            assert_abs_diff_eq!(
                c.infinity_constant(),
                c.b[2],
                epsilon = 1e-12 * c.c[2].abs().max(1.0)
            );
        }
    }

    #[test]
    fn coefficient_domain() {
        assert!(algebraic_coefficients(&params(0.2, 0.1, 0.0)).is_err());
        assert!(algebraic_coefficients(&params(0.2, 0.1, 1.0)).is_err());
    }

    #[test]
    fn exponents_at_resonance() {
        let e = indicial_exponents(&params(0.2, 0.0, 0.5));
        assert_eq!((e.p_plus, e.p_minus), (0.5, 0.0));
        assert_eq!((e.q_plus, e.q_minus), (0.5, 0.0));
        assert_eq!((e.r_plus, e.r_minus), (0.5, 0.0));
        assert_eq!((e.rho_inf_plus, e.rho_inf_minus), (0.5, 0.0));
    }

    #[test]
    fn degenerate_exponents_flagged() {
        let e = indicial_exponents(&params(0.2, 0.5, 0.5));
        assert_eq!(e.p_plus, 0.25);
        assert_eq!(e.p_minus, 0.25);
        assert!(e.degenerate_at_zero());
        assert!(!indicial_exponents(&params(0.2, 0.1, 0.5)).degenerate_at_zero());
    }

    #[test]
    fn exponents_solve_indicial_equations() {
        let p = params(0.3, 0.37, 0.6);
        let c = algebraic_coefficients(&p).unwrap();
        let e = indicial_exponents(&p);
        for (i, roots) in [
            (0, [e.p_plus, e.p_minus]),
            (1, [e.q_plus, e.q_minus]),
            (2, [e.r_plus, e.r_minus]),
        ] {
            for rho in roots {
                assert!(c.indicial_at(i, rho).abs() < 1e-12);
            }
        }
        for rho in [e.rho_inf_plus, e.rho_inf_minus] {
            assert!(c.indicial_at_infinity(rho).abs() < 1e-12);
        }
    }

    #[test]
    fn resonance_heun_parameters() {
        let d = heun_parameters(&params(0.2, 0.0, 0.5), ExponentSelection::ALL_MINUS).unwrap();
        assert_eq!((d.gamma, d.delta, d.epsilon), (0.5, 0.5, 0.5));
        assert_eq!((d.alpha, d.beta), (0.5, 0.0));
        assert_eq!(d.gamma + d.delta + d.epsilon, 1.5);
        assert_abs_diff_eq!(d.accessory, -0.04 / 0.25, epsilon = 1e-14);
        assert_eq!(d.singular_a, 4.0);
    }

    #[test]
    fn selection_round_trip() {
        for s in ExponentSelection::ALL {
            assert_eq!(s.to_string().parse::<ExponentSelection>().unwrap(), s);
        }
        assert_eq!(ExponentSelection::default().to_string(), "---");
        assert!("+-".parse::<ExponentSelection>().is_err());
        assert!("+x-".parse::<ExponentSelection>().is_err());
    }

    #[test]
    fn riemann_symbol_lists_exponents() {
        let d = heun_parameters(&params(0.2, 0.0, 0.5), ExponentSelection::ALL_MINUS).unwrap();
        let r = d.riemann_symbol();
        assert_eq!(r.columns[0], (0.0, 0.5));
        assert_eq!(r.columns[3], (0.5, 0.0));
        assert!(r.to_string().contains("inf"));
    }

    #[test]
    fn variable_at_origin() {
        let k: f64 = 0.5;
        let s = shifted_half_sn(0.0, k).unwrap();
        assert_abs_diff_eq!(s.re, 0.0);
        assert_abs_diff_eq!(s.im, -1.0 / k.sqrt(), epsilon = 1e-15);
        let z = z_of_tau(0.0, k).unwrap();
        assert_abs_diff_eq!(z.re, -1.0 / k, epsilon = 1e-14);
        assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-14);
        assert!(z_of_tau(1.0, 0.0).is_err());
        assert!(z_of_tau(1.0, 1.0).is_err());
    }

    #[test]
    fn variable_stays_on_circle_away_from_singularities() {
        let k = 0.5;
        let d = heun_parameters(&params(0.2, 0.1, k), ExponentSelection::ALL_MINUS).unwrap();
        let mut min_dist = f64::INFINITY;
        for i in 0..=4000 {
            let z = z_of_tau(i as f64 * 1e-3, k).unwrap();
            assert_abs_diff_eq!(z.norm(), 1.0 / k, epsilon = 1e-12);
            min_dist = min_dist.min(d.nearest_singularity(z).0);
        }
        assert!(min_dist > 0.05);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let k = 0.7;
        for tau in [0.0, 0.4, 1.7, 5.2] {
            let h = 1e-5;
            let fd = (z_of_tau(tau + h, k).unwrap() - z_of_tau(tau - h, k).unwrap()) / (2.0 * h);
            assert!((dz_dtau(tau, k).unwrap() - fd).norm() < 1e-8);
        }
        let z0 = dz_dtau(0.0, k).unwrap();
        assert_abs_diff_eq!(z0.im, -(1.0 + k) / k, epsilon = 1e-14);
    }

    #[test]
    fn w_factor_values() {
        let mut d = heun_parameters(&params(0.2, 0.0, 0.5), ExponentSelection::ALL_MINUS).unwrap();
        assert_eq!(
            w_factor(Complex64::new(0.3, 0.8), &d).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        d.exponents = [0.5, 0.0, 0.0];
        let w = w_factor(Complex64::new(4.0, 0.0), &d).unwrap();
        assert_abs_diff_eq!(w.re, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.im, 0.0);
        d.exponents = [-0.25, 0.0, 0.0];
        assert!(matches!(
            w_factor(Complex64::new(0.0, 0.0), &d),
            Err(Error::Pole(_))
        ));
    }
}
