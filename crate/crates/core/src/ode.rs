//! Dormand-Prince 5(4) integrator for small complex linear systems.
//!
//! Steps are clipped so that every requested output time is hit exactly;
//! no interpolation is involved in the reported states.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th-order and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 50_000_000;

pub(crate) type State<const N: usize> = [Complex64; N];

fn axpy<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..N {
            out[i] += k[i] * (h * coef);
        }
    }
    out
}

fn scaled_norm<const N: usize>(v: &State<N>, y: &State<N>, tol: f64) -> f64 {
    (0..N)
        .map(|i| v[i].norm() / (tol + tol * y[i].norm()))
        .fold(0.0, f64::max)
}

/// Starting step from the size of `y` and of its first two derivatives,
/// never longer than `span`.
fn initial_step<const N: usize, F>(
    rhs: &mut F,
    t0: f64,
    y0: &State<N>,
    f0: &State<N>,
    span: f64,
    tol: f64,
) -> Result<f64>
where
    F: FnMut(f64, &State<N>) -> Result<State<N>>,
{
    if span.is_nan() || span <= 0.0 {
        return Ok(0.0);
    }
    let d0 = scaled_norm(y0, y0, tol);
    let d1 = scaled_norm(f0, y0, tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(span);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = rhs(t0 + h0, &y1)?;
    let mut diff = f1;
    for i in 0..N {
        diff[i] -= f0[i];
    }
    let d2 = scaled_norm(&diff, y0, tol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}

/// Integrates `y' = rhs(t, y)` from `grid[0]` and returns the state at every
/// grid time. Absolute and relative tolerance are both `tol`.
pub(crate) fn integrate_to_grid<const N: usize, F>(
    mut rhs: F,
    y0: State<N>,
    grid: &[f64],
    tol: f64,
) -> Result<Vec<State<N>>>
where
    F: FnMut(f64, &State<N>) -> Result<State<N>>,
{
    let mut out = Vec::with_capacity(grid.len());
    let Some(&t0) = grid.first() else {
        return Ok(out);
    };
    out.push(y0);

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;
    let span = grid[grid.len() - 1] - t0;
    let mut h = initial_step(&mut rhs, t0, &y0, &k1, span, tol)?;
    let mut steps = 0usize;

    for &target in &grid[1..] {
        while t < target {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::Integration {
                    last_tau: t,
                    reason: "step budget exhausted".into(),
                });
            }
            let remaining = target - t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            if step < 1e-14 * t.abs().max(1.0) && !clipped {
                return Err(Error::Integration {
                    last_tau: t,
                    reason: format!("step size underflow (h = {step:e})"),
                });
            }

            let k2 = rhs(t + C2 * step, &axpy(&y, step, &[(A21, &k1)]))?;
            let k3 = rhs(t + C3 * step, &axpy(&y, step, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = rhs(
                t + C4 * step,
                &axpy(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            )?;
            let k5 = rhs(
                t + C5 * step,
                &axpy(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = rhs(
                t + step,
                &axpy(
                    &y,
                    step,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            )?;
            let y_new = axpy(
                &y,
                step,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let t_new = if clipped { target } else { t + step };
            let k7 = rhs(t_new, &y_new)?;

            let mut err = 0.0f64;
            for i in 0..N {
                let e =
                    (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                        * step;
                let scale = tol + tol * y[i].norm().max(y_new[i].norm());
                err = err.max(e.norm() / scale);
            }
            if !err.is_finite() {
                return Err(Error::Integration {
                    last_tau: t,
                    reason: "non-finite error estimate".into(),
                });
            }

            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if err <= 1.0 {
                t = t_new;
                y = y_new;
                k1 = k7;
                // A step shortened only to land on the grid says nothing
                // about the controller's preferred size.
                if !clipped || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * factor.min(1.0);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Integration {
                        last_tau: t,
                        reason: format!("step size underflow (h = {h:e})"),
                    });
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}
