//! Fixed inputs shared by the criterion benches.

use ellipspin::spin::SimParams;
use ellipspin::wigner::EulerAngles;

/// Detuned, strongly modulated drive used by the evolution benches.
pub fn detuned() -> SimParams {
    SimParams::from_detuning(0.2, 0.1, 0.7).expect("valid parameters")
}

/// Arguments spread over several periods for the elliptic-function bench.
pub fn jacobi_arguments(n: usize) -> Vec<f64> {
    (0..n).map(|i| -20.0 + 40.0 * i as f64 / n as f64).collect()
}

/// Generic rotation for the D-matrix bench.
pub const ANGLES: EulerAngles = EulerAngles {
    phi: 0.4,
    theta: 1.3,
    psi: -0.9,
};
