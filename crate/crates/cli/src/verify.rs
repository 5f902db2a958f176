//! Self-verification suites run by `ellipspin verify`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use ellipspin::elliptic::{complete_k, jacobi, jacobi_identity_residuals};
use ellipspin::heun::{
    algebraic_coefficients, flip_probability_heun, heun_parameters, indicial_exponents,
    local_series, ExponentChoice, ExponentSelection, SeriesCenter,
};
use ellipspin::observables::{bloch_residual, lame_residual, trajectory_invariant_residuals};
use ellipspin::spin::{
    evolve, propagator, rabi_probability, resonance_trajectory, uniform_grid, SimParams, SpinState,
    DEFAULT_TOL,
};
use ellipspin::wigner::{euler_angles, transition_probability_j, wigner_d, EulerAngles, SpinJ};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::CliError;

const SEED: u64 = 0x5eed;

/// Which checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Invariants,
    Heun,
    Wigner,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "invariants" => Ok(Suite::Invariants),
            "heun" => Ok(Suite::Heun),
            "wigner" => Ok(Suite::Wigner),
            "all" => Ok(Suite::All),
            other => Err(format!(
                "unknown suite `{other}` (expected invariants, heun, wigner or all)"
            )),
        }
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub worst: f64,
    pub limit: f64,
    /// Set when the check could not be evaluated at all.
    pub error: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.worst < self.limit
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        match &self.error {
            Some(e) => write!(f, "[{status}] {}/{}: error: {e}", self.suite, self.name),
            None => write!(
                f,
                "[{status}] {}/{}: max residual {:.3e} (limit {:.0e})",
                self.suite, self.name, self.worst, self.limit
            ),
        }
    }
}

/// All checks of a verification run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed: Vec<String> = self
            .failures()
            .map(|c| format!("{}/{}", c.suite, c.name))
            .collect();
        if failed.is_empty() {
            writeln!(f, "all {} checks passed", self.checks.len())
        } else {
            writeln!(
                f,
                "{} of {} checks failed: {}",
                failed.len(),
                self.checks.len(),
                failed.join(", ")
            )
        }
    }
}

fn check(
    suite: &'static str,
    name: &'static str,
    limit: f64,
    body: impl FnOnce() -> ellipspin::Result<f64>,
) -> Check {
    match body() {
        Ok(worst) => Check {
            suite,
            name,
            worst,
            limit,
            error: None,
        },
        Err(e) => Check {
            suite,
            name,
            worst: f64::INFINITY,
            limit,
            error: Some(e.to_string()),
        },
    }
}

fn random_params(rng: &mut StdRng, n: usize) -> Vec<SimParams> {
    (0..n)
        .map(|_| {
            SimParams::from_detuning(
                rng.gen_range(0.05..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(0.0..0.99),
            )
            .expect("parameters in range")
        })
        .collect()
}

fn random_state(rng: &mut StdRng) -> SpinState {
    let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    SpinState::new(
        Complex64::new(v[0] / n, v[1] / n),
        Complex64::new(v[2] / n, v[3] / n),
    )
}

/// `K(k) = (π/2)·Σ [(2n)!/(2^{2n} n!²)]² k^{2n}`.
fn quarter_period_series(k: f64) -> f64 {
    let mut coeff = 1.0;
    let mut total = 0.0;
    let mut power = 1.0;
    for n in 0..2000 {
        let term = coeff * coeff * power;
        total += term;
        if term < 1e-18 * total {
            break;
        }
        let nf = n as f64;
        coeff *= (2.0 * nf + 1.0) / (2.0 * nf + 2.0);
        power *= k * k;
    }
    FRAC_PI_2 * total
}

fn invariants(tol: f64) -> Vec<Check> {
    const S: &str = "invariants";
    let mut rng = StdRng::seed_from_u64(SEED);
    let params = random_params(&mut rng, 10);
    let states: Vec<SpinState> = (0..params.len()).map(|_| random_state(&mut rng)).collect();
    let long_grid = uniform_grid(50.0, 501);
    let trajs: ellipspin::Result<Vec<_>> = params
        .iter()
        .zip(&states)
        .map(|(p, s)| evolve(*s, p, &long_grid, tol))
        .collect();

    vec![
        check(S, "jacobi_identities", 1e-12, || {
            let mut worst = 0.0f64;
            for k in [0.0, 0.3, 0.7, 0.99, 1.0] {
                for i in 0..1000 {
                    let u = -25.0 + 50.0 * i as f64 / 999.0;
                    let (a, b) = jacobi_identity_residuals(jacobi(u, k)?, k);
                    worst = worst.max(a).max(b);
                }
            }
            Ok(worst)
        }),
        check(S, "quarter_period_series", 1e-10, || {
            let mut worst = 0.0f64;
            for k in [0.1, 0.5, 0.8] {
                worst = worst.max((complete_k(k)? - quarter_period_series(k)).abs());
            }
            Ok(worst)
        }),
        check(S, "resonance_k_independence", 1e-8, || {
            let grid = uniform_grid(20.0, 2000);
            let mut worst = 0.0f64;
            for k in [0.0, 0.3, 0.7, 0.99] {
                let p = SimParams::from_detuning(0.25, 0.0, k)?;
                for s in evolve(SpinState::UP, &p, &grid, tol)?.samples {
                    worst = worst.max((s.p_flip - (0.25 * s.tau).sin().powi(2)).abs());
                }
            }
            Ok(worst)
        }),
        check(S, "rabi_limit", 1e-8, || {
            let p = SimParams::from_detuning(0.3, 0.4, 0.0)?;
            let mut worst = 0.0f64;
            for s in evolve(SpinState::UP, &p, &uniform_grid(20.0, 2000), tol)?.samples {
                worst = worst.max((s.p_flip - rabi_probability(s.tau, &p)?).abs());
            }
            Ok(worst)
        }),
        check(S, "norm_conservation", 1e-8, || {
            let trajs = trajs.as_ref().map_err(Clone::clone)?;
            Ok(trajs.iter().map(|t| t.max_norm_drift()).fold(0.0, f64::max))
        }),
        check(S, "four_vector", 1e-8, || {
            let trajs = trajs.as_ref().map_err(Clone::clone)?;
            let mut worst = 0.0f64;
            for (t, p) in trajs.iter().zip(&params) {
                worst = worst.max(trajectory_invariant_residuals(t, p)?.max());
            }
            Ok(worst)
        }),
        check(S, "lame_residual", 1e-8, || {
            let mut rng = StdRng::seed_from_u64(SEED + 1);
            let mut worst = 0.0f64;
            for p in params.iter().take(5) {
                for _ in 0..10 {
                    let tau = rng.gen_range(0.0..20.0);
                    worst = worst.max(lame_residual(p, tau, tol)?);
                }
            }
            Ok(worst)
        }),
        check(S, "bloch_resonance", 1e-5, || {
            let p = SimParams::from_detuning(0.25, 0.0, 0.6)?;
            let grid: Vec<f64> = (0..=4000).map(|i| i as f64 * 1e-3).collect();
            bloch_residual(&resonance_trajectory(&p, &grid)?, &p)
        }),
        check(S, "propagator_unitarity", 1e-9, || {
            let mut rng = StdRng::seed_from_u64(SEED + 2);
            let mut worst = 0.0f64;
            for p in random_params(&mut rng, 20) {
                let tau = rng.gen_range(0.1..10.0);
                worst = worst.max(propagator(tau, &p, tol)?.unitarity_defect());
            }
            Ok(worst)
        }),
    ]
}

fn heun(tol: f64) -> Vec<Check> {
    const S: &str = "heun";
    let mut rng = StdRng::seed_from_u64(SEED + 3);
    let params: Vec<SimParams> = (0..100)
        .map(|_| {
            SimParams::from_detuning(
                rng.gen_range(0.01..1.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.01..0.99),
            )
            .expect("parameters in range")
        })
        .collect();
    vec![
        check(S, "coefficient_sum", 1e-12, || {
            let mut worst = 0.0f64;
            for p in &params {
                let c = algebraic_coefficients(p)?;
                let scale = c.c.iter().map(|x| x.abs()).fold(1.0, f64::max);
                worst = worst.max((c.c[0] + c.c[1] + c.c[2]).abs() / scale);
            }
            Ok(worst)
        }),
        check(S, "fuchs_condition", 1e-12, || {
            let mut worst = 0.0f64;
            for p in &params {
                for sel in ExponentSelection::ALL {
                    worst = worst.max(heun_parameters(p, sel)?.fuchs_defect());
                }
            }
            Ok(worst)
        }),
        check(S, "indicial_exponents", 1e-12, || {
            let mut worst = 0.0f64;
            for p in &params {
                let c = algebraic_coefficients(p)?;
                let ex = indicial_exponents(p);
                for sel in ExponentSelection::ALL {
                    for (i, rho) in [ex.p(sel.p), ex.q(sel.q), ex.r(sel.r)]
                        .into_iter()
                        .enumerate()
                    {
                        worst = worst.max(c.indicial_at(i, rho).abs());
                    }
                }
            }
            Ok(worst)
        }),
        check(S, "local_series_residual", 1e-10, || {
            let mut worst = 0.0f64;
            for (k, delta) in [(0.4, 0.07), (0.6, -0.13), (0.8, 0.21)] {
                let p = SimParams::from_detuning(0.2, delta, k)?;
                let d = heun_parameters(&p, ExponentSelection::default())?;
                for center in [
                    SeriesCenter::Zero,
                    SeriesCenter::One,
                    SeriesCenter::SingularA,
                ] {
                    for choice in [ExponentChoice::First, ExponentChoice::Second] {
                        let s = local_series(&d, center, choice, 60)?;
                        for i in 0..5 {
                            let angle = 0.3 + 2.0 * PI * i as f64 / 5.0;
                            let z = s.center + Complex64::from_polar(0.25 * s.radius, angle);
                            worst = worst.max(s.residual(&d, z));
                        }
                    }
                }
            }
            Ok(worst)
        }),
        check(S, "heun_vs_ode", 1e-6, || {
            let mut worst = 0.0f64;
            for k in [0.3, 0.5, 0.7] {
                for delta in [0.0, 0.05, 0.1] {
                    let p = SimParams::from_detuning(0.2, delta, k)?;
                    let taus = [0.0, 0.5, 1.0, 2.0];
                    let traj = evolve(SpinState::UP, &p, &taus, tol)?;
                    for s in &traj.samples[1..] {
                        let h = flip_probability_heun(s.tau, &p, ExponentSelection::default())?;
                        worst = worst.max((h - s.p_flip).abs());
                    }
                }
            }
            Ok(worst)
        }),
        check(S, "selection_independence", 1e-10, || {
            let p = SimParams::from_detuning(0.2, 0.1, 0.5)?;
            let reference = flip_probability_heun(1.5, &p, ExponentSelection::default())?;
            let mut worst = 0.0f64;
            for sel in ExponentSelection::ALL {
                worst = worst.max((flip_probability_heun(1.5, &p, sel)? - reference).abs());
            }
            Ok(worst)
        }),
    ]
}

fn wigner(tol: f64) -> Vec<Check> {
    const S: &str = "wigner";
    let spins = [0.5, 1.0, 1.5, 2.0, 5.0];
    let angles = EulerAngles {
        phi: 0.3,
        theta: 1.1,
        psi: -0.8,
    };
    vec![
        check(S, "euler_pipeline", 1e-8, || {
            let mut rng = StdRng::seed_from_u64(SEED + 4);
            let half = SpinJ::new(0.5)?;
            let mut worst = 0.0f64;
            for p in random_params(&mut rng, 10) {
                let tau = rng.gen_range(0.1..10.0);
                let theta = euler_angles(&propagator(tau, &p, tol)?)?.theta;
                let p_ode = evolve(SpinState::UP, &p, &[0.0, tau], tol)?.samples[1].p_flip;
                worst =
                    worst.max((transition_probability_j(half, 0.5, -0.5, theta)? - p_ode).abs());
            }
            Ok(worst)
        }),
        check(S, "d_matrix_unitarity", 1e-10, || {
            let mut worst = 0.0f64;
            for j in spins {
                worst = worst.max(wigner_d(SpinJ::new(j)?, &angles)?.unitarity_defect());
            }
            Ok(worst)
        }),
        check(S, "row_sums", 1e-10, || {
            let mut worst = 0.0f64;
            for j in spins {
                for s in wigner_d(SpinJ::new(j)?, &angles)?.row_probability_sums() {
                    worst = worst.max((s - 1.0).abs());
                }
            }
            Ok(worst)
        }),
        check(S, "probability_formula", 1e-10, || {
            let mut worst = 0.0f64;
            for j in spins {
                let j = SpinJ::new(j)?;
                let d = wigner_d(j, &angles)?;
                for m in j.projections() {
                    for mp in j.projections() {
                        let p = transition_probability_j(j, m, mp, angles.theta)?;
                        worst = worst.max((p - d.get(m, mp)?.norm_sqr()).abs());
                    }
                }
            }
            Ok(worst)
        }),
        check(S, "projection_symmetry", 1e-10, || {
            let mut worst = 0.0f64;
            for j in spins {
                let j = SpinJ::new(j)?;
                for m in j.projections() {
                    for mp in j.projections() {
                        let a = transition_probability_j(j, m, mp, angles.theta)?;
                        let b = transition_probability_j(j, -m, -mp, angles.theta)?;
                        worst = worst.max((a - b).abs());
                    }
                }
            }
            Ok(worst)
        }),
    ]
}

/// Runs `suite` with ODE tolerance `tol`.
pub fn run(suite: Suite, tol: f64) -> Result<Report, CliError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::Usage(format!(
            "tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let mut checks = Vec::new();
    if matches!(suite, Suite::Invariants | Suite::All) {
        checks.extend(invariants(tol));
    }
    if matches!(suite, Suite::Heun | Suite::All) {
        checks.extend(heun(tol));
    }
    if matches!(suite, Suite::Wigner | Suite::All) {
        checks.extend(wigner(tol));
    }
    Ok(Report { checks })
}

/// Default ODE tolerance of the verification run.
pub const VERIFY_TOL: f64 = DEFAULT_TOL;
