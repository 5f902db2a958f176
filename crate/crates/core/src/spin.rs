//! Two-level dynamics in the elliptic driving field
//! `(h₀·cn(ωt,k), h₀·sn(ωt,k), H₀·dn(ωt,k))`.
//!
//! Time is measured in the dimensionless variable `τ = ωt` and all field
//! amplitudes are expressed in units of the drive frequency ω. Two frames are
//! available:
//!
//! * the lab frame, where the transverse field winds as `cn ∓ i·sn`;
//! * the rotating frame reached through the unimodular gauge factor
//!   `f = √(cn − i·sn)`, where the Hamiltonian becomes real with a constant
//!   off-diagonal coupling `h/ω` and diagonal `±(Δ/ω)·dn`.
//!
//! Numerical integration happens in the rotating frame unless the caller asks
//! for the lab frame explicitly.

use num_complex::Complex64;

use crate::elliptic::{self, EllipticTriple};
use crate::error::{domain, Error, Result};
use crate::observables::{polarization, Polarization};
use crate::ode;

/// Bohr magneton in J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Reduced Planck constant in J·s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Default local tolerance for [`evolve`].
pub const DEFAULT_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// 2×2 complex matrix, row major.
pub type Matrix2 = [[Complex64; 2]; 2];

/// Dimensionless problem parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Transverse amplitude `h/ω`.
    pub transverse: f64,
    /// Longitudinal amplitude `H/ω`.
    pub longitudinal: f64,
    /// Elliptic modulus `k ∈ [0, 1]`.
    pub modulus: f64,
}

impl SimParams {
    pub fn new(transverse: f64, longitudinal: f64, modulus: f64) -> Result<Self> {
        let p = SimParams {
            transverse,
            longitudinal,
            modulus,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from the detuning `Δ/ω = H/ω − 1/2`.
    pub fn from_detuning(transverse: f64, detuning: f64, modulus: f64) -> Result<Self> {
        Self::new(transverse, detuning + 0.5, modulus)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.transverse.is_finite() || !self.longitudinal.is_finite() {
            return Err(domain("field amplitudes must be finite"));
        }
        if !self.modulus.is_finite() || !(0.0..=1.0).contains(&self.modulus) {
            return Err(domain(format!(
                "modulus k = {} outside [0, 1]",
                self.modulus
            )));
        }
        Ok(())
    }

    /// `Δ/ω = H/ω − 1/2`.
    pub fn detuning(&self) -> f64 {
        self.longitudinal - 0.5
    }

    /// `Ω_R/ω = √((h/ω)² + (Δ/ω)²)`.
    pub fn rabi(&self) -> f64 {
        self.transverse.hypot(self.detuning())
    }
}

/// Converts physical amplitudes to dimensionless parameters through
/// `H = g·μ_B·H₀/(2ħ)` and `h = g·μ_B·h₀/(2ħ)`.
///
/// `h0` and `big_h0` are in tesla, `omega` in rad/s.
pub fn derive_parameters(g: f64, h0: f64, big_h0: f64, omega: f64, k: f64) -> Result<SimParams> {
    if !omega.is_finite() || omega <= 0.0 {
        return Err(domain(format!(
            "drive frequency must be positive, got {omega}"
        )));
    }
    let scale = g * BOHR_MAGNETON / (2.0 * HBAR) / omega;
    SimParams::new(scale * h0, scale * big_h0, k)
}

/// Choice of frame for the Hamiltonian and integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Rotating,
}

/// Direction of [`map_frame`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameMap {
    LabToRot,
    RotToLab,
}

/// Spin-1/2 state `(Ψ₁, Ψ₂)` in the `σ_z` eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    pub psi1: Complex64,
    pub psi2: Complex64,
}

impl SpinState {
    pub const UP: SpinState = SpinState {
        psi1: ONE,
        psi2: ZERO,
    };
    pub const DOWN: SpinState = SpinState {
        psi1: ZERO,
        psi2: ONE,
    };

    pub fn new(psi1: Complex64, psi2: Complex64) -> Self {
        SpinState { psi1, psi2 }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi1.norm_sqr() + self.psi2.norm_sqr()
    }

    /// Probability of the spin-down component, `|Ψ₂|²`.
    pub fn flip_probability(&self) -> f64 {
        self.psi2.norm_sqr()
    }

    fn as_array(&self) -> [Complex64; 2] {
        [self.psi1, self.psi2]
    }

    fn from_array(a: [Complex64; 2]) -> Self {
        SpinState {
            psi1: a[0],
            psi2: a[1],
        }
    }
}

/// One trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub tau: f64,
    pub lab: SpinState,
    pub rotating: SpinState,
    pub p_flip: f64,
    pub polarization: Polarization,
}

/// Ordered samples of an evolution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    /// Builds a trajectory from rotating-frame states.
    pub fn from_rotating_states(taus: &[f64], states: &[SpinState], k: f64) -> Result<Self> {
        let samples = taus
            .iter()
            .zip(states)
            .map(|(&tau, &rot)| {
                let lab = map_frame(rot, tau, k, FrameMap::RotToLab)?;
                Ok(Sample {
                    tau,
                    lab,
                    rotating: rot,
                    p_flip: lab.flip_probability(),
                    polarization: polarization(&lab),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest `| |Ψ|² − 1 |` over the samples.
    pub fn max_norm_drift(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.lab.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Evolution operator `U(τ)` in the lab frame: `Ψ(τ) = U·Ψ(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub u11: Complex64,
    pub u12: Complex64,
    pub u21: Complex64,
    pub u22: Complex64,
}

impl Propagator {
    pub const IDENTITY: Propagator = Propagator {
        u11: ONE,
        u12: ZERO,
        u21: ZERO,
        u22: ONE,
    };

    pub fn from_columns(first: SpinState, second: SpinState) -> Self {
        Propagator {
            u11: first.psi1,
            u21: first.psi2,
            u12: second.psi1,
            u22: second.psi2,
        }
    }

    pub fn apply(&self, s: &SpinState) -> SpinState {
        SpinState {
            psi1: self.u11 * s.psi1 + self.u12 * s.psi2,
            psi2: self.u21 * s.psi1 + self.u22 * s.psi2,
        }
    }

    pub fn determinant(&self) -> Complex64 {
        self.u11 * self.u22 - self.u12 * self.u21
    }

    pub fn as_matrix(&self) -> Matrix2 {
        [[self.u11, self.u12], [self.u21, self.u22]]
    }

    /// `max |(U†U − I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.as_matrix();
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = ZERO;
                for row in &m {
                    acc += row[i].conj() * row[j];
                }
                if i == j {
                    acc -= ONE;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }
}

/// Hamiltonian in units of ω at dimensionless time `τ`.
pub fn hamiltonian(tau: f64, params: &SimParams, frame: Frame) -> Result<Matrix2> {
    let e = elliptic::jacobi(tau, params.modulus)?;
    Ok(hamiltonian_at(&e, params, frame))
}

fn hamiltonian_at(e: &EllipticTriple, params: &SimParams, frame: Frame) -> Matrix2 {
    let h = params.transverse;
    match frame {
        Frame::Lab => {
            let diag = params.longitudinal * e.dn;
            let off = Complex64::new(h * e.cn, -h * e.sn);
            [
                [Complex64::new(diag, 0.0), off],
                [off.conj(), Complex64::new(-diag, 0.0)],
            ]
        }
        Frame::Rotating => {
            let diag = params.detuning() * e.dn;
            [
                [Complex64::new(diag, 0.0), Complex64::new(h, 0.0)],
                [Complex64::new(h, 0.0), Complex64::new(-diag, 0.0)],
            ]
        }
    }
}

/// Right-hand side `−i·H(τ)·ψ` of the Schrödinger equation in `frame`.
pub fn schrodinger_rhs(
    tau: f64,
    params: &SimParams,
    frame: Frame,
    state: &SpinState,
) -> Result<SpinState> {
    let m = hamiltonian(tau, params, frame)?;
    Ok(SpinState {
        psi1: -I * (m[0][0] * state.psi1 + m[0][1] * state.psi2),
        psi2: -I * (m[1][0] * state.psi1 + m[1][1] * state.psi2),
    })
}

/// Gauge factor `f = √((1+cn)/2) − i·sign(sn)·√((1−cn)/2)`, so that
/// `f² = cn − i·sn`. `sign(0)` is taken as `+1`.
pub fn gauge_factor(tau: f64, k: f64) -> Result<Complex64> {
    if !tau.is_finite() {
        return Err(domain(format!("non-finite tau = {tau}")));
    }
    let e = elliptic::jacobi(tau, k)?;
    Ok(gauge_from_triple(&e))
}

fn gauge_from_triple(e: &EllipticTriple) -> Complex64 {
    // The smaller component comes from `re·im = −sn/2` to avoid cancellation.
    if e.cn >= 0.0 {
        let re = (0.5 * (1.0 + e.cn)).sqrt();
        Complex64::new(re, -0.5 * e.sn / re)
    } else {
        let sign = if e.sn < 0.0 { -1.0 } else { 1.0 };
        let im = -sign * (0.5 * (1.0 - e.cn)).sqrt();
        Complex64::new(-0.5 * e.sn / im, im)
    }
}

/// Applies `Ψ = diag(f, f*)·φ` or its inverse.
pub fn map_frame(state: SpinState, tau: f64, k: f64, direction: FrameMap) -> Result<SpinState> {
    let f = gauge_factor(tau, k)?;
    Ok(match direction {
        FrameMap::RotToLab => SpinState {
            psi1: f * state.psi1,
            psi2: f.conj() * state.psi2,
        },
        FrameMap::LabToRot => SpinState {
            psi1: f.conj() * state.psi1,
            psi2: f * state.psi2,
        },
    })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    match grid.first() {
        None => return Err(domain("empty tau grid")),
        Some(&t0) if t0 != 0.0 => {
            return Err(domain(format!("tau grid must start at 0, starts at {t0}")))
        }
        _ => {}
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(domain("tau grid contains non-finite values"));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(domain(format!(
            "tau grid must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Integrates the Schrödinger equation in the given frame and returns the
/// states (in that frame) at each grid time. No renormalisation is applied.
pub fn integrate_states(
    initial: SpinState,
    params: &SimParams,
    tau_grid: &[f64],
    tol: f64,
    frame: Frame,
) -> Result<Vec<SpinState>> {
    params.validate()?;
    check_grid(tau_grid)?;
    check_tol(tol)?;
    let k = params.modulus;
    let rhs = |tau: f64, y: &[Complex64; 2]| -> Result<[Complex64; 2]> {
        let e = elliptic::jacobi(tau, k).map_err(|e| Error::Integration {
            last_tau: tau,
            reason: e.to_string(),
        })?;
        let m = hamiltonian_at(&e, params, frame);
        Ok([
            -I * (m[0][0] * y[0] + m[0][1] * y[1]),
            -I * (m[1][0] * y[0] + m[1][1] * y[1]),
        ])
    };
    let ys = ode::integrate_to_grid(rhs, initial.as_array(), tau_grid, tol)?;
    Ok(ys.into_iter().map(SpinState::from_array).collect())
}

/// Evolves a lab-frame initial state over `tau_grid`.
///
/// The rotating-frame system is integrated; lab-frame states follow from
/// [`map_frame`]. Since `f(0) = 1` the initial state is the same in both
/// frames.
pub fn evolve(
    initial: SpinState,
    params: &SimParams,
    tau_grid: &[f64],
    tol: f64,
) -> Result<Trajectory> {
    if ((initial.norm_sqr() - 1.0).abs()) > 1e-10 {
        return Err(domain(format!(
            "initial state not normalised (|psi|^2 = {})",
            initial.norm_sqr()
        )));
    }
    let states = integrate_states(initial, params, tau_grid, tol, Frame::Rotating)?;
    Trajectory::from_rotating_states(tau_grid, &states, params.modulus)
}

/// Lab-frame propagator `U(τ)` from evolving the two basis states.
pub fn propagator(tau: f64, params: &SimParams, tol: f64) -> Result<Propagator> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(domain(format!(
            "propagator needs finite tau >= 0, got {tau}"
        )));
    }
    if tau == 0.0 {
        return Ok(Propagator::IDENTITY);
    }
    let grid = [0.0, tau];
    let first = integrate_states(SpinState::UP, params, &grid, tol, Frame::Rotating)?[1];
    let second = integrate_states(SpinState::DOWN, params, &grid, tol, Frame::Rotating)?[1];
    let k = params.modulus;
    Ok(Propagator::from_columns(
        map_frame(first, tau, k, FrameMap::RotToLab)?,
        map_frame(second, tau, k, FrameMap::RotToLab)?,
    ))
}

/// `(h²/Ω_R²)·sin²(Ω_R·τ)`, valid only for `k = 0`.
pub fn rabi_probability(tau: f64, params: &SimParams) -> Result<f64> {
    if params.modulus != 0.0 {
        return Err(Error::Precondition(format!(
            "Rabi formula requires k = 0, got k = {}",
            params.modulus
        )));
    }
    let omega_r = params.rabi();
    if omega_r == 0.0 {
        return Ok(0.0);
    }
    let amp = params.transverse / omega_r;
    Ok(amp * amp * (omega_r * tau).sin().powi(2))
}

/// Resonance detuning tolerance for the closed-form solution.
const RESONANCE_EPS: f64 = 1e-12;

/// Exact solution at `Δ = 0` starting from spin up:
/// `(f·cos((h/ω)τ), −i·f*·sin((h/ω)τ))`.
pub fn resonance_solution(tau: f64, params: &SimParams) -> Result<SpinState> {
    if params.detuning().abs() > RESONANCE_EPS {
        return Err(Error::Precondition(format!(
            "closed form requires zero detuning, got {}",
            params.detuning()
        )));
    }
    let f = gauge_factor(tau, params.modulus)?;
    let (s, c) = (params.transverse * tau).sin_cos();
    Ok(SpinState {
        psi1: f * c,
        psi2: -I * f.conj() * s,
    })
}

/// Closed-form resonance propagator; first column is [`resonance_solution`],
/// second column evolves spin down.
pub fn resonance_propagator(tau: f64, params: &SimParams) -> Result<Propagator> {
    let first = resonance_solution(tau, params)?;
    let f = gauge_factor(tau, params.modulus)?;
    let (s, c) = (params.transverse * tau).sin_cos();
    let second = SpinState {
        psi1: -I * f * s,
        psi2: f.conj() * c,
    };
    Ok(Propagator::from_columns(first, second))
}

/// Trajectory of the closed-form resonance solution.
pub fn resonance_trajectory(params: &SimParams, tau_grid: &[f64]) -> Result<Trajectory> {
    check_grid(tau_grid)?;
    let k = params.modulus;
    let states = tau_grid
        .iter()
        .map(|&tau| {
            let lab = resonance_solution(tau, params)?;
            map_frame(lab, tau, k, FrameMap::LabToRot)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::from_rotating_states(tau_grid, &states, k)
}

/// Uniform grid of `n` points on `[0, tau_max]`.
pub fn uniform_grid(tau_max: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    let step = tau_max / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { tau_max } else { i as f64 * step })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn assert_c(a: Complex64, b: Complex64, eps: f64) {
        assert!((a - b).norm() < eps, "{a} != {b}");
    }

    #[test]
    fn physical_units() {
        let p = derive_parameters(2.0, 0.0, 0.1, 1e9, 0.5).unwrap();
        assert_eq!(p.transverse, 0.0);
        assert!(derive_parameters(2.0, 1.0, 1.0, 0.0, 0.5).is_err());
        assert!(derive_parameters(2.0, 1.0, 1.0, -1.0, 0.5).is_err());

        // μ_B/ħ = e/(2 m_e): independent route through the electron charge
        // and mass (CODATA 2018).
        let gyro = 1.602_176_634e-19 / (2.0 * 9.109_383_701_5e-31);
        let p = derive_parameters(2.0, 1e-3, 0.0, 1e9, 0.0).unwrap();
        assert_abs_diff_eq!(p.transverse, gyro * 1e-3 / 1e9, epsilon = 1e-10);
        assert_abs_diff_eq!(p.transverse, 0.087_941, epsilon = 1e-6);

        // Resonance: g μ_B H₀ / 2ħ = ω/2.
        let omega = 2.0e10;
        let big_h0 = omega / 2.0 * 2.0 * HBAR / (2.0 * BOHR_MAGNETON);
        let p = derive_parameters(2.0, 1e-4, big_h0, omega, 0.3).unwrap();
        assert_abs_diff_eq!(p.detuning(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn hamiltonian_at_origin() {
        let p = SimParams::new(0.2, 0.9, 0.6).unwrap();
        let m = hamiltonian(0.0, &p, Frame::Lab).unwrap();
        assert_eq!(m[0][0].re, 0.9);
        assert_eq!(m[0][1], Complex64::new(0.2, 0.0));
        assert_eq!(m[1][0], Complex64::new(0.2, 0.0));
        assert_eq!(m[1][1].re, -0.9);
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        let p = SimParams::new(0.3, 0.77, 0.8).unwrap();
        for frame in [Frame::Lab, Frame::Rotating] {
            for tau in [0.1, 1.7, 5.3] {
                let m = hamiltonian(tau, &p, frame).unwrap();
                assert_eq!(m[0][1], m[1][0].conj());
                assert_eq!(m[0][0].im, 0.0);
                assert_eq!(m[0][0], -m[1][1]);
            }
        }
    }

    #[test]
    fn rotating_hamiltonian_constant_at_resonance() {
        let p = SimParams::from_detuning(0.25, 0.0, 0.7).unwrap();
        for tau in [0.0, 0.4, 3.0, 11.0] {
            let m = hamiltonian(tau, &p, Frame::Rotating).unwrap();
            assert_eq!(m[0][0].re, 0.0);
            assert_eq!(m[0][1].re, 0.25);
        }
    }

    #[test]
    fn lab_hamiltonian_rabi_limit() {
        let p = SimParams::new(0.3, 0.6, 0.0).unwrap();
        let tau = 1.1f64;
        let m = hamiltonian(tau, &p, Frame::Lab).unwrap();
        assert_c(
            m[1][0],
            Complex64::new(0.3 * tau.cos(), 0.3 * tau.sin()),
            1e-15,
        );
        assert_eq!(m[0][0].re, 0.6);
    }

    #[test]
    fn gauge_factor_values() {
        assert_eq!(gauge_factor(0.0, 0.4).unwrap(), ONE);
        assert_c(
            gauge_factor(FRAC_PI_2, 0.0).unwrap(),
            Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
            1e-15,
        );
        for &(tau, k) in &[
            (0.3, 0.2),
            (2.9, 0.9),
            (-4.0, 0.5),
            (17.0, 0.99),
            (3.0, 1.0),
        ] {
            let f = gauge_factor(tau, k).unwrap();
            let e = elliptic::jacobi(tau, k).unwrap();
            assert_abs_diff_eq!(f.norm(), 1.0, epsilon = 1e-12);
            assert_c(f * f, Complex64::new(e.cn, -e.sn), 1e-12);
        }
    }

    #[test]
    fn sign_choice_at_cn_minus_one_cancels() {
        // k = 0, τ = π: cn = −1 and sn is zero up to rounding, so f = ±i.
        let p = SimParams::new(0.3, 0.9, 0.0).unwrap();
        let f = gauge_factor(PI, 0.0).unwrap();
        assert_abs_diff_eq!(f.re, 0.0, epsilon = 1e-7);
        let rot = SpinState::new(
            Complex64::new(0.6, 0.1),
            Complex64::new(0.2, -0.7681145747868608),
        );
        let lab_plus = map_frame(rot, PI, 0.0, FrameMap::RotToLab).unwrap();
        let flipped = SpinState::new(-lab_plus.psi1, -lab_plus.psi2);
        assert_eq!(lab_plus.flip_probability(), flipped.flip_probability());
        assert_eq!(polarization(&lab_plus), polarization(&flipped));
        let _ = p;
    }

    #[test]
    fn frame_map_round_trip() {
        let s = SpinState::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        assert_eq!(map_frame(s, 0.0, 0.5, FrameMap::LabToRot).unwrap(), s);
        let r = map_frame(s, 2.3, 0.5, FrameMap::LabToRot).unwrap();
        let back = map_frame(r, 2.3, 0.5, FrameMap::RotToLab).unwrap();
        assert_c(back.psi1, s.psi1, 1e-14);
        assert_c(back.psi2, s.psi2, 1e-14);
        assert_abs_diff_eq!(r.psi2.norm(), s.psi2.norm(), epsilon = 1e-15);
    }

    #[test]
    fn rabi_formula() {
        let p = SimParams::from_detuning(0.3, 0.4, 0.0).unwrap();
        assert_abs_diff_eq!(rabi_probability(PI, &p).unwrap(), 0.36, epsilon = 1e-15);
        let p0 = SimParams::from_detuning(0.0, 0.4, 0.0).unwrap();
        assert_eq!(rabi_probability(2.0, &p0).unwrap(), 0.0);
        let pr = SimParams::from_detuning(0.3, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(
            rabi_probability(2.0, &pr).unwrap(),
            (0.6f64).sin().powi(2),
            epsilon = 1e-15
        );
        let pk = SimParams::from_detuning(0.3, 0.0, 0.1).unwrap();
        assert!(matches!(
            rabi_probability(1.0, &pk),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn resonance_closed_form() {
        let p = SimParams::from_detuning(0.25, 0.0, 0.7).unwrap();
        assert_eq!(resonance_solution(0.0, &p).unwrap(), SpinState::UP);
        let s = resonance_solution(FRAC_PI_2 / 0.25, &p).unwrap();
        assert_abs_diff_eq!(s.flip_probability(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
        let off = SimParams::from_detuning(0.25, 0.1, 0.7).unwrap();
        assert!(resonance_solution(1.0, &off).is_err());
    }

    #[test]
    fn evolve_matches_resonance_and_starts_unflipped() {
        let p = SimParams::from_detuning(0.25, 0.0, 0.7).unwrap();
        let grid = uniform_grid(10.0, 201);
        let traj = evolve(SpinState::UP, &p, &grid, DEFAULT_TOL).unwrap();
        assert_eq!(traj.samples[0].p_flip, 0.0);
        for s in &traj.samples {
            assert_abs_diff_eq!(s.p_flip, (0.25 * s.tau).sin().powi(2), epsilon = 1e-8);
        }
    }

    #[test]
    fn evolve_rabi_limit() {
        let p = SimParams::from_detuning(0.3, 0.4, 0.0).unwrap();
        let traj = evolve(SpinState::UP, &p, &[0.0, 1.0, PI], DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(traj.samples[2].p_flip, 0.36, epsilon = 1e-8);
    }

    #[test]
    fn evolve_rejects_bad_input() {
        let p = SimParams::from_detuning(0.3, 0.4, 0.5).unwrap();
        assert!(evolve(SpinState::UP, &p, &[0.1, 1.0], 1e-8).is_err());
        assert!(evolve(SpinState::UP, &p, &[0.0, 1.0, 1.0], 1e-8).is_err());
        assert!(evolve(SpinState::UP, &p, &[0.0, 1.0], 0.0).is_err());
        let unnorm = SpinState::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        assert!(evolve(unnorm, &p, &[0.0, 1.0], 1e-8).is_err());
    }

    #[test]
    fn propagator_identity_and_resonance() {
        let p = SimParams::from_detuning(0.2, 0.0, 0.5).unwrap();
        assert_eq!(propagator(0.0, &p, 1e-10).unwrap(), Propagator::IDENTITY);
        for tau in [0.7, 3.3, 9.1] {
            let u = propagator(tau, &p, 1e-10).unwrap();
            let exact = resonance_propagator(tau, &p).unwrap();
            for (a, b) in u
                .as_matrix()
                .iter()
                .flatten()
                .zip(exact.as_matrix().iter().flatten())
            {
                assert_c(*a, *b, 1e-8);
            }
            assert!(u.unitarity_defect() < 1e-9);
            assert_abs_diff_eq!(u.determinant().norm(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn uniform_grid_endpoints() {
        let g = uniform_grid(20.0, 2000);
        assert_eq!(g.len(), 2000);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 20.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
