//! Polarization vector, Bloch-equation residual and the conservation laws of
//! the rotating-frame system, used as numerical validators.

use num_complex::Complex64;

use crate::elliptic;
use crate::error::{domain, Result};
use crate::spin::{integrate_states, schrodinger_rhs, Frame, SimParams, SpinState, Trajectory};

/// Expectation values `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Polarization {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl Polarization {
    pub fn norm(&self) -> f64 {
        (self.px * self.px + self.py * self.py + self.pz * self.pz).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.px, self.py, self.pz]
    }
}

/// `|LHS − RHS|` of the four conservation relations satisfied by the
/// rotating-frame amplitudes `φ₁ = x + iy`, `φ₂ = u + iv`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InvariantResiduals {
    /// `x² + y² + u² + v² = 1`.
    pub sphere: f64,
    /// `v·x' − u·y' + y·u' − x·v' = h/ω`.
    pub first_integral: f64,
    /// `|φ'|² + (Δk/ω)²·sn² = (h² + Δ²)/ω²`.
    pub energy_like: f64,
    /// `y·x' − x·y' + u·v' − v·u' = (Δ/ω)·dn`.
    pub angular: f64,
}

impl InvariantResiduals {
    pub fn max(&self) -> f64 {
        self.sphere
            .max(self.first_integral)
            .max(self.energy_like)
            .max(self.angular)
    }
}

/// Polarization `P_i = Ψ†σ_iΨ`.
pub fn polarization(state: &SpinState) -> Polarization {
    let cross = state.psi1.conj() * state.psi2;
    Polarization {
        px: 2.0 * cross.re,
        py: 2.0 * cross.im,
        pz: state.psi1.norm_sqr() - state.psi2.norm_sqr(),
    }
}

/// Lab field scaled to a precession vector: `γ_m·H⃗/ω = 2·(h·cn, h·sn, H·dn)`.
pub fn precession_vector(tau: f64, params: &SimParams) -> Result<[f64; 3]> {
    let e = elliptic::jacobi(tau, params.modulus)?;
    Ok([
        2.0 * params.transverse * e.cn,
        2.0 * params.transverse * e.sn,
        2.0 * params.longitudinal * e.dn,
    ])
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Closed-form resonance polarization
/// `(sn(τ)·sin(2(h/ω)τ), −cn(τ)·sin(2(h/ω)τ), cos(2(h/ω)τ))`.
pub fn resonance_polarization(tau: f64, params: &SimParams) -> Result<Polarization> {
    let e = elliptic::jacobi(tau, params.modulus)?;
    let (s, c) = (2.0 * params.transverse * tau).sin_cos();
    Ok(Polarization {
        px: e.sn * s,
        py: -e.cn * s,
        pz: c,
    })
}

/// Largest deviation from `dP/dτ = (γ_m H⃗/ω) × P` over interior samples,
/// with `dP/dτ` taken by central differences.
pub fn bloch_residual(traj: &Trajectory, params: &SimParams) -> Result<f64> {
    let samples = &traj.samples;
    if samples.len() < 3 {
        return Err(domain(format!(
            "Bloch residual needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let step = samples[1].tau - samples[0].tau;
    if step.is_nan() || step <= 0.0 {
        return Err(domain("trajectory times must increase"));
    }
    for w in samples.windows(2) {
        if ((w[1].tau - w[0].tau) - step).abs() > 1e-9 * step.max(w[1].tau.abs()) {
            return Err(domain("Bloch residual needs uniform spacing"));
        }
    }

    let mut worst = 0.0f64;
    for w in samples.windows(3) {
        let before = w[0].polarization.as_array();
        let after = w[2].polarization.as_array();
        let span = w[2].tau - w[0].tau;
        let omega = precession_vector(w[1].tau, params)?;
        let rhs = cross(omega, w[1].polarization.as_array());
        for i in 0..3 {
            let d = (after[i] - before[i]) / span;
            worst = worst.max((d - rhs[i]).abs());
        }
    }
    Ok(worst)
}

/// Residuals of the four conservation relations at one rotating-frame
/// sample. `derivative` should come from the equation of motion.
pub fn four_vector_residuals(
    tau: f64,
    params: &SimParams,
    state: &SpinState,
    derivative: &SpinState,
) -> Result<InvariantResiduals> {
    let e = elliptic::jacobi(tau, params.modulus)?;
    let (x, y) = (state.psi1.re, state.psi1.im);
    let (u, v) = (state.psi2.re, state.psi2.im);
    let (dx, dy) = (derivative.psi1.re, derivative.psi1.im);
    let (du, dv) = (derivative.psi2.re, derivative.psi2.im);
    let h = params.transverse;
    let delta = params.detuning();
    let k = params.modulus;

    let sphere = (x * x + y * y + u * u + v * v - 1.0).abs();
    let first_integral = (v * dx - u * dy + y * du - x * dv - h).abs();
    let energy_like = (dx * dx + dy * dy + du * du + dv * dv + delta * delta * k * k * e.sn * e.sn
        - (h * h + delta * delta))
        .abs();
    let angular = (y * dx - x * dy + u * dv - v * du - delta * e.dn).abs();
    Ok(InvariantResiduals {
        sphere,
        first_integral,
        energy_like,
        angular,
    })
}

/// Largest invariant residual along the rotating-frame states of `traj`.
pub fn trajectory_invariant_residuals(
    traj: &Trajectory,
    params: &SimParams,
) -> Result<InvariantResiduals> {
    let mut worst = InvariantResiduals::default();
    for s in &traj.samples {
        let d = schrodinger_rhs(s.tau, params, Frame::Rotating, &s.rotating)?;
        let r = four_vector_residuals(s.tau, params, &s.rotating, &d)?;
        worst.sphere = worst.sphere.max(r.sphere);
        worst.first_integral = worst.first_integral.max(r.first_integral);
        worst.energy_like = worst.energy_like.max(r.energy_like);
        worst.angular = worst.angular.max(r.angular);
    }
    Ok(worst)
}

/// Second derivative of the rotating-frame state, from differentiating the
/// equation of motion: `φ'' = −i(M'φ + Mφ')` with `M' = diag(1, −1)·Δ·dn'`.
pub fn rotating_second_derivative(
    tau: f64,
    params: &SimParams,
    state: &SpinState,
) -> Result<SpinState> {
    let i = Complex64::new(0.0, 1.0);
    let e = elliptic::jacobi(tau, params.modulus)?;
    let k = params.modulus;
    let d_dn = -k * k * e.sn * e.cn;
    let d = schrodinger_rhs(tau, params, Frame::Rotating, state)?;
    let delta = params.detuning();
    let h = params.transverse;
    let dn_term = delta * e.dn;
    Ok(SpinState {
        psi1: -i * (delta * d_dn * state.psi1 + dn_term * d.psi1 + h * d.psi2),
        psi2: -i * (-delta * d_dn * state.psi2 + h * d.psi1 - dn_term * d.psi2),
    })
}

/// `|φ₂'' + (i(Δ/ω)k²·sn·cn − (Δ/ω)²k²·sn² + (Ω_R/ω)²)·φ₂|` at a single
/// state.
pub fn lame_residual_at(tau: f64, params: &SimParams, state: &SpinState) -> Result<f64> {
    let e = elliptic::jacobi(tau, params.modulus)?;
    let k2 = params.modulus * params.modulus;
    let delta = params.detuning();
    let omega_r = params.rabi();
    let coefficient = Complex64::new(
        -delta * delta * k2 * e.sn * e.sn + omega_r * omega_r,
        delta * k2 * e.sn * e.cn,
    );
    let second = rotating_second_derivative(tau, params, state)?;
    Ok((second.psi2 + coefficient * state.psi2).norm())
}

/// Generalized-Lamé residual for `φ₂` obtained by integrating the
/// rotating-frame system from spin up to `tau`.
pub fn lame_residual(params: &SimParams, tau: f64, tol: f64) -> Result<f64> {
    let state = if tau == 0.0 {
        SpinState::UP
    } else {
        integrate_states(
            SpinState::UP,
            params,
            &[0.0, tau.abs()],
            tol,
            Frame::Rotating,
        )?[1]
    };
    lame_residual_at(tau.abs(), params, &state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{
        evolve, resonance_solution, resonance_trajectory, uniform_grid, DEFAULT_TOL,
    };
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn basis_polarizations() {
        assert_eq!(
            polarization(&SpinState::UP),
            Polarization {
                px: 0.0,
                py: 0.0,
                pz: 1.0
            }
        );
        let plus_x = SpinState::new(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        );
        let p = polarization(&plus_x);
        assert_abs_diff_eq!(p.px, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.py, 0.0);
        assert_abs_diff_eq!(p.pz, 0.0, epsilon = 1e-15);
        let plus_y = SpinState::new(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, FRAC_1_SQRT_2),
        );
        assert_abs_diff_eq!(polarization(&plus_y).py, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn resonance_polarization_closed_form() {
        for k in [0.0, 0.5, 0.9] {
            let p = SimParams::from_detuning(0.3, 0.0, k).unwrap();
            for tau in [0.2, 1.9, 7.4, 15.0] {
                let a = polarization(&resonance_solution(tau, &p).unwrap());
                let b = resonance_polarization(tau, &p).unwrap();
                assert_abs_diff_eq!(a.px, b.px, epsilon = 1e-12);
                assert_abs_diff_eq!(a.py, b.py, epsilon = 1e-12);
                assert_abs_diff_eq!(a.pz, b.pz, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bloch_residual_resonance() {
        let p = SimParams::from_detuning(0.25, 0.0, 0.5).unwrap();
        let grid: Vec<f64> = (0..=2000).map(|i| i as f64 * 1e-3).collect();
        let traj = resonance_trajectory(&p, &grid).unwrap();
        assert!(bloch_residual(&traj, &p).unwrap() < 1e-5);
    }

    #[test]
    fn bloch_sign_is_cross_product() {
        // The opposite orientation H⃗ × P⃗ → P⃗ × H⃗ must fail the check.
        let p = SimParams::from_detuning(0.25, 0.13, 0.5).unwrap();
        let grid: Vec<f64> = (0..=500).map(|i| i as f64 * 1e-3).collect();
        let traj = evolve(SpinState::UP, &p, &grid, DEFAULT_TOL).unwrap();
        assert!(bloch_residual(&traj, &p).unwrap() < 1e-5);
        let flipped = SimParams::new(-p.transverse, -p.longitudinal, p.modulus).unwrap();
        assert!(bloch_residual(&traj, &flipped).unwrap() > 1e-2);
    }

    #[test]
    fn free_precession_about_z() {
        // k = 0, h = 0: P rotates about z at rate 2H/ω.
        let p = SimParams::new(0.0, 0.8, 0.0).unwrap();
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 1e-3).collect();
        let start = SpinState::new(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        );
        let traj = evolve(start, &p, &grid, DEFAULT_TOL).unwrap();
        for s in &traj.samples {
            let angle = 1.6 * s.tau;
            assert_abs_diff_eq!(s.polarization.px, angle.cos(), epsilon = 1e-8);
            assert_abs_diff_eq!(s.polarization.py, angle.sin(), epsilon = 1e-8);
        }
        assert!(bloch_residual(&traj, &p).unwrap() < 1e-6);
    }

    #[test]
    fn bloch_needs_three_samples() {
        let p = SimParams::from_detuning(0.25, 0.0, 0.5).unwrap();
        let traj = resonance_trajectory(&p, &[0.0]).unwrap();
        assert!(bloch_residual(&traj, &p).is_err());
    }

    #[test]
    fn four_vector_at_origin() {
        let p = SimParams::from_detuning(0.3, 0.2, 0.6).unwrap();
        let d = schrodinger_rhs(0.0, &p, Frame::Rotating, &SpinState::UP).unwrap();
        assert_abs_diff_eq!(d.psi2.im, -0.3);
        let r = four_vector_residuals(0.0, &p, &SpinState::UP, &d).unwrap();
        assert_eq!(r.first_integral, 0.0);
        assert!(r.max() < 1e-15);

        let half = SpinState::new(Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5));
        let d = schrodinger_rhs(0.0, &p, Frame::Rotating, &half).unwrap();
        let r = four_vector_residuals(0.0, &p, &half, &d).unwrap();
        assert_abs_diff_eq!(r.sphere, 0.5);
    }

    #[test]
    fn four_vector_along_trajectory() {
        let p = SimParams::from_detuning(0.21, -0.17, 0.83).unwrap();
        let traj = evolve(SpinState::UP, &p, &uniform_grid(20.0, 400), DEFAULT_TOL).unwrap();
        assert!(trajectory_invariant_residuals(&traj, &p).unwrap().max() < 1e-8);
    }

    #[test]
    fn lame_residuals() {
        let res = SimParams::from_detuning(0.2, 0.0, 0.7).unwrap();
        assert!(lame_residual(&res, 3.1, 1e-10).unwrap() < 1e-9);
        let rabi = SimParams::from_detuning(0.2, 0.3, 0.0).unwrap();
        assert!(lame_residual(&rabi, 2.5, 1e-10).unwrap() < 1e-9);
        let general = SimParams::from_detuning(0.35, 0.2, 0.6).unwrap();
        for tau in [0.3, 1.1, 4.7, 9.9] {
            assert!(lame_residual(&general, tau, 1e-10).unwrap() < 1e-8);
        }
    }

    #[test]
    fn lame_rejects_other_readings_of_the_coefficient() {
        // Replacing cn by dn in the imaginary term leaves a visible residual.
        let p = SimParams::from_detuning(0.35, 0.2, 0.6).unwrap();
        let tau = 1.3;
        let state =
            integrate_states(SpinState::UP, &p, &[0.0, tau], 1e-10, Frame::Rotating).unwrap()[1];
        let e = elliptic::jacobi(tau, p.modulus).unwrap();
        let k2 = p.modulus * p.modulus;
        let delta = p.detuning();
        let wrong = Complex64::new(
            -delta * delta * k2 * e.sn * e.sn + p.rabi().powi(2),
            delta * k2 * e.sn * e.dn,
        );
        let second = rotating_second_derivative(tau, &p, &state).unwrap();
        assert!((second.psi2 + wrong * state.psi2).norm() > 1e-4);
    }
}
