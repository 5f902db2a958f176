//! Spin-1/2 dynamics in elliptically modulated magnetic fields.
//!
//! The field components follow the Jacobi elliptic functions `sn`, `cn`, `dn`
//! of a dimensionless time `τ`. The crate integrates the Schrödinger equation
//! in the lab and rotating frames, evaluates polarization observables and
//! conservation laws, reduces the rotating-frame problem to the general Heun
//! equation for an independent flip probability, and lifts the spin-1/2
//! propagator to arbitrary spin through Wigner D-matrices.

pub mod elliptic;
pub mod error;
pub mod heun;
pub mod observables;
mod ode;
pub mod spin;
pub mod wigner;

pub use elliptic::{complete_k, jacobi, EllipticTriple, QuarterPeriods};
pub use error::{Error, Result};
pub use heun::{flip_probability_heun, ExponentSelection, HeunData, HeunOptions};
pub use observables::{polarization, InvariantResiduals, Polarization};
pub use spin::{
    evolve, propagator, Frame, FrameMap, Propagator, Sample, SimParams, SpinState, Trajectory,
    DEFAULT_TOL,
};
pub use wigner::{
    euler_angles, transition_probability_j, wigner_d, EulerAngles, SpinJ, SpinJMatrix,
};
