//! Analytic continuation of a fundamental pair of Heun solutions along a
//! path of straight segments, by repeated Taylor re-expansion, and assembly
//! of the spin-flip probability from it.

use num_complex::Complex64;

use super::series::{ordinary_coefficients, power_sums};
use super::{dz_dtau, heun_parameters, z_of_tau, ExponentSelection, HeunData};
use crate::error::{domain, Error, Result};
use crate::spin::SimParams;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Wronskian drift tolerated before a continuation is rejected.
const WRONSKIAN_TOL: f64 = 1e-8;
/// Singular points closer than this stop the continuation.
const MIN_CLEARANCE: f64 = 1e-9;
const MAX_STEPS: usize = 1_000_000;

/// Values and `z`-derivatives of two solutions at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalPair {
    pub v1: Complex64,
    pub dv1: Complex64,
    pub v2: Complex64,
    pub dv2: Complex64,
}

impl FundamentalPair {
    /// `(v₁, v₁', v₂, v₂') = (1, 0, 0, 1)`.
    pub const CANONICAL: FundamentalPair = FundamentalPair {
        v1: ONE,
        dv1: ZERO,
        v2: ZERO,
        dv2: ONE,
    };

    pub fn wronskian(&self) -> Complex64 {
        self.v1 * self.dv2 - self.v2 * self.dv1
    }
}

/// Tunables for continuation and the Heun-route probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeunOptions {
    /// Taylor terms per re-expansion.
    pub n_terms: usize,
    /// Each step is at most this fraction of the distance to the nearest
    /// singular point.
    pub step_fraction: f64,
}

impl Default for HeunOptions {
    fn default() -> Self {
        HeunOptions {
            n_terms: 64,
            step_fraction: 0.5,
        }
    }
}

/// Result of [`continue_along_path`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Continuation {
    pub end: FundamentalPair,
    pub steps: usize,
    /// Largest relative deviation of the numerical Wronskian from
    /// `W₀·exp(−∫(γ/z + δ/(z−1) + ε/(z−a)) dz)`.
    pub wronskian_defect: f64,
}

/// Continuous logarithms of `z − s` for the three finite singular points.
#[derive(Debug, Clone, Copy)]
struct LogTracker {
    points: [Complex64; 3],
    z: Complex64,
    logs: [Complex64; 3],
}

impl LogTracker {
    fn new(points: [Complex64; 3], z: Complex64) -> Self {
        LogTracker {
            points,
            z,
            logs: points.map(|s| (z - s).ln()),
        }
    }

    /// Moves to `z_new`; the step must not wind around any point.
    fn advance(&mut self, z_new: Complex64) {
        for (log, s) in self.logs.iter_mut().zip(self.points) {
            *log += ((z_new - s) / (self.z - s)).ln();
        }
        self.z = z_new;
    }
}

fn check_options(n_terms: usize, step_fraction: f64) -> Result<()> {
    if n_terms < 8 {
        return Err(domain(format!(
            "need at least 8 series terms, got {n_terms}"
        )));
    }
    if !(step_fraction > 0.0 && step_fraction < 1.0) {
        return Err(domain(format!(
            "step fraction must lie in (0, 1), got {step_fraction}"
        )));
    }
    Ok(())
}

/// One Taylor step carrying both solutions from `from` to `to`.
fn taylor_step(
    data: &HeunData,
    from: Complex64,
    to: Complex64,
    pair: &FundamentalPair,
    n_terms: usize,
) -> Result<FundamentalPair> {
    let t = to - from;
    // Basis solutions with (1, 0) and (0, 1) data at `from`.
    let ca = ordinary_coefficients(data, from, ONE, ZERO, n_terms);
    let cb = ordinary_coefficients(data, from, ZERO, ONE, n_terms);
    let tail = |c: &[Complex64]| -> f64 {
        let tn = t.norm();
        let mut total = 0.0;
        let mut last = 0.0;
        let mut pow = 1.0;
        for (n, cn) in c.iter().enumerate() {
            let term = cn.norm() * pow;
            total += term;
            if n + 2 >= c.len() {
                last += term;
            }
            pow *= tn;
        }
        last / total.max(f64::MIN_POSITIVE)
    };
    let worst = tail(&ca).max(tail(&cb));
    if worst.is_nan() || worst >= 1e-14 {
        return Err(Error::StepNotConverged {
            z: from,
            tail: worst,
        });
    }
    let (a0, a1, _) = power_sums(&ca, t);
    let (b0, b1, _) = power_sums(&cb, t);
    Ok(FundamentalPair {
        v1: pair.v1 * a0 + pair.dv1 * b0,
        dv1: pair.v1 * a1 + pair.dv1 * b1,
        v2: pair.v2 * a0 + pair.dv2 * b0,
        dv2: pair.v2 * a1 + pair.dv2 * b1,
    })
}

/// Internal driver that also reports the continuous logarithms at the end.
fn march(
    data: &HeunData,
    path: &[Complex64],
    start: FundamentalPair,
    n_terms: usize,
    step_fraction: f64,
) -> Result<(Continuation, LogTracker)> {
    check_options(n_terms, step_fraction)?;
    let Some(&z_start) = path.first() else {
        return Err(domain("empty continuation path"));
    };
    let points = data.singular_points();
    for &vertex in path {
        let (d, s) = data.nearest_singularity(vertex);
        if d < MIN_CLEARANCE {
            return Err(Error::PathTooClose {
                z: vertex,
                singular_point: s,
                distance: d,
            });
        }
    }

    let mut tracker = LogTracker::new(points, z_start);
    let start_logs = tracker.logs;
    let w0 = start.wronskian();
    let mut pair = start;
    let mut z = z_start;
    let mut steps = 0usize;
    let mut defect = 0.0f64;

    for &target in &path[1..] {
        loop {
            let remaining = target - z;
            if remaining.norm() == 0.0 {
                break;
            }
            let (dist, nearest) = data.nearest_singularity(z);
            if dist < MIN_CLEARANCE || steps >= MAX_STEPS {
                return Err(Error::PathTooClose {
                    z,
                    singular_point: nearest,
                    distance: dist,
                });
            }
            let max_step = step_fraction * dist;
            let next = if remaining.norm() <= max_step {
                target
            } else {
                z + remaining * (max_step / remaining.norm())
            };
            pair = taylor_step(data, z, next, &pair, n_terms)?;
            tracker.advance(next);
            z = next;
            steps += 1;

            let decay = data.gamma * (tracker.logs[0] - start_logs[0])
                + data.delta * (tracker.logs[1] - start_logs[1])
                + data.epsilon * (tracker.logs[2] - start_logs[2]);
            let predicted = w0 * (-decay).exp();
            let rel =
                (pair.wronskian() - predicted).norm() / predicted.norm().max(f64::MIN_POSITIVE);
            defect = defect.max(rel);
        }
    }
    if defect > WRONSKIAN_TOL {
        return Err(Error::Consistency(format!(
            "Wronskian drifted by {defect:e} along the continuation path"
        )));
    }
    Ok((
        Continuation {
            end: pair,
            steps,
            wronskian_defect: defect,
        },
        tracker,
    ))
}

/// Continues `start` (given at `path[0]`) along the polygon `path`.
///
/// Each segment is subdivided so that every Taylor step is at most
/// `step_fraction` times the distance to the nearest singular point. The
/// Wronskian is compared against its closed form after every step.
pub fn continue_along_path(
    data: &HeunData,
    path: &[Complex64],
    start: FundamentalPair,
    n_terms: usize,
    step_fraction: f64,
) -> Result<Continuation> {
    march(data, path, start, n_terms, step_fraction).map(|(c, _)| c)
}

/// `w(z) = z^p (z−1)^q (z−a)^r` at every vertex of `path`, continuous along
/// it and on the principal branch at `path[0]`.
pub fn w_factor_along(data: &HeunData, path: &[Complex64]) -> Result<Vec<Complex64>> {
    let Some(&z0) = path.first() else {
        return Ok(Vec::new());
    };
    let points = data.singular_points();
    let mut tracker = LogTracker::new(points, z0);
    let eval = |t: &LogTracker| -> Complex64 {
        (data.exponents[0] * t.logs[0]
            + data.exponents[1] * t.logs[1]
            + data.exponents[2] * t.logs[2])
            .exp()
    };
    let mut out = vec![eval(&tracker)];
    for &z in &path[1..] {
        // Subdivide so no single step turns more than a quarter turn about
        // any singular point.
        let (dist, nearest) = data.nearest_singularity(tracker.z);
        if dist < MIN_CLEARANCE {
            return Err(Error::PathTooClose {
                z: tracker.z,
                singular_point: nearest,
                distance: dist,
            });
        }
        let pieces = ((z - tracker.z).norm() / (0.5 * dist)).ceil().max(1.0) as usize;
        let from = tracker.z;
        for i in 1..=pieces {
            tracker.advance(from + (z - from) * (i as f64 / pieces as f64));
        }
        out.push(eval(&tracker));
    }
    Ok(out)
}

/// Vertices `z(τ_j)` on a `τ` grid fine enough that each chord stays close
/// to the arc compared with the clearance from the singular points.
fn tau_path(tau: f64, k: f64, data: &HeunData) -> Result<Vec<Complex64>> {
    let clearance = (1.0 / k - 1.0).min(data.singular_a - 1.0 / k);
    // |dz/dτ| ≤ (1 + k)/k on the circle |z| = 1/k.
    let dtau = (0.5 * clearance * k / (1.0 + k)).min(0.05);
    let m = (tau / dtau).ceil().max(1.0) as usize;
    (0..=m)
        .map(|j| z_of_tau(tau * j as f64 / m as f64, k))
        .collect()
}

/// Spin-flip probability at `tau` from Heun solutions, starting in spin up.
pub fn flip_probability_heun(
    tau: f64,
    params: &SimParams,
    selection: ExponentSelection,
) -> Result<f64> {
    flip_probability_heun_with(tau, params, selection, &HeunOptions::default())
}

/// [`flip_probability_heun`] with explicit options.
///
/// With `f_i = w·v_i` and the `τ`-Wronskian `W_τ = (dz/dτ)·w²·W_z`,
///
/// ```text
/// P = (h/ω)² |w(τ)·(v₁(τ)v₂(0) − v₂(τ)v₁(0))|² / |w(0)·(dz/dτ)(0)·W_z(0)|²
/// ```
pub fn flip_probability_heun_with(
    tau: f64,
    params: &SimParams,
    selection: ExponentSelection,
    options: &HeunOptions,
) -> Result<f64> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(domain(format!("tau must be finite and >= 0, got {tau}")));
    }
    let data = heun_parameters(params, selection)?;
    if tau == 0.0 {
        return Ok(0.0);
    }
    let k = params.modulus;
    let path = tau_path(tau, k, &data)?;
    let start = FundamentalPair::CANONICAL;
    let (cont, tracker) = march(&data, &path, start, options.n_terms, options.step_fraction)?;
    let start_tracker = LogTracker::new(data.singular_points(), path[0]);

    let log_w = |t: &LogTracker| {
        data.exponents[0] * t.logs[0]
            + data.exponents[1] * t.logs[1]
            + data.exponents[2] * t.logs[2]
    };
    let w_ratio = (log_w(&tracker) - log_w(&start_tracker)).exp();
    let end = cont.end;
    let numerator = w_ratio * (end.v1 * start.v2 - end.v2 * start.v1);
    let denominator = dz_dtau(0.0, k)? * start.wronskian();
    Ok(params.transverse.powi(2) * (numerator / denominator).norm_sqr())
}
