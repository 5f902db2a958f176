//! `simulate`, `sweep` and `elliptic-table`.

use std::fmt::Write as _;
use std::io::Write;

use ellipspin::elliptic::{amplitude, jacobi};
use ellipspin::heun::{flip_probability_heun, ExponentSelection};
use ellipspin::spin::{evolve, propagator, uniform_grid, Trajectory};
use ellipspin::wigner::{euler_angles, transition_probability_j, SpinJ};
use rayon::prelude::*;

use crate::config::{parse_scenario, parse_sweep, GridPoint, Output, Scenario};
use crate::CliError;

/// Header of the `simulate` CSV.
pub const SIMULATE_HEADER: &str = "tau,re_psi1,im_psi1,re_psi2,im_psi2,p_flip,px,py,pz,norm_drift";
/// Header of the `sweep` CSV.
pub const SWEEP_HEADER: &str = "k,delta_over_omega,h_over_omega,tau,p_flip";
/// Header of the `elliptic-table` CSV.
pub const ELLIPTIC_HEADER: &str = "u,sn,cn,dn,am";
/// Environment variable capping sweep worker threads.
pub const THREADS_ENV: &str = "ELLIPSPIN_THREADS";
const HEUN_CHECK_POINTS: usize = 16;
const HEUN_CHECK_LIMIT: f64 = 1e-6;

/// Seventeen significant digits, `.` as decimal separator.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_row(out: &mut String, fields: &[f64]) {
    for (i, x) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_real(*x));
    }
    out.push('\n');
}

/// Renders a trajectory in the `simulate` schema.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(200 * (traj.len() + 1));
    out.push_str(SIMULATE_HEADER);
    out.push('\n');
    for s in &traj.samples {
        let p = s.polarization;
        csv_row(
            &mut out,
            &[
                s.tau,
                s.lab.psi1.re,
                s.lab.psi1.im,
                s.lab.psi2.re,
                s.lab.psi2.im,
                s.p_flip,
                p.px,
                p.py,
                p.pz,
                s.lab.norm_sqr() - 1.0,
            ],
        );
    }
    out
}

/// Output of a simulation: the CSV plus human-readable reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub csv: String,
    pub report: String,
}

/// Runs a parsed scenario.
pub fn run_scenario(sc: &Scenario) -> Result<SimulationOutput, CliError> {
    let grid = uniform_grid(sc.tau_max, sc.n_samples);
    let traj = evolve(sc.initial, &sc.params, &grid, sc.tol)?;
    let mut report = String::new();
    for w in &sc.warnings {
        let _ = writeln!(report, "warning: {w}");
    }
    if sc.outputs.contains(&Output::HeunCheck) {
        heun_report(sc, &traj, &mut report);
    }
    if sc.outputs.contains(&Output::Wigner) {
        wigner_report(sc, &mut report)?;
    }
    Ok(SimulationOutput {
        csv: trajectory_csv(&traj),
        report,
    })
}

fn heun_report(sc: &Scenario, traj: &Trajectory, report: &mut String) {
    let k = sc.params.modulus;
    if !(k > 0.0 && k < 1.0) {
        let _ = writeln!(report, "heun_check: skipped, needs 0 < k < 1 (k = {k})");
        return;
    }
    if sc.initial != ellipspin::SpinState::UP {
        let _ = writeln!(
            report,
            "heun_check: skipped, needs the spin-up initial state"
        );
        return;
    }
    let n = traj.len();
    let stride = (n / HEUN_CHECK_POINTS).max(1);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for s in traj.samples.iter().step_by(stride) {
        match flip_probability_heun(s.tau, &sc.params, ExponentSelection::default()) {
            Ok(p) => {
                worst = worst.max((p - s.p_flip).abs());
                checked += 1;
            }
            Err(e) => {
                let _ = writeln!(report, "heun_check: failed at tau = {}: {e}", s.tau);
                return;
            }
        }
    }
    let verdict = if worst < HEUN_CHECK_LIMIT {
        "ok"
    } else {
        "MISMATCH"
    };
    let _ = writeln!(
        report,
        "heun_check: {checked} samples, max |P_heun - P_ode| = {worst:e} ({verdict}, limit {HEUN_CHECK_LIMIT:e})"
    );
}

fn wigner_report(sc: &Scenario, report: &mut String) -> Result<(), CliError> {
    let u = propagator(sc.tau_max, &sc.params, sc.tol)?;
    let angles = euler_angles(&u)?;
    let j = SpinJ::new(sc.spin_j)?;
    let _ = writeln!(
        report,
        "wigner: tau = {}, phi = {}, theta = {}, psi = {}",
        sc.tau_max, angles.phi, angles.theta, angles.psi
    );
    let _ = writeln!(
        report,
        "wigner: transition probabilities for J = {} (rows m, columns m')",
        j.value()
    );
    for m in j.projections() {
        let row = j
            .projections()
            .map(|mp| transition_probability_j(j, m, mp, angles.theta).map(|p| format!("{p:.12}")))
            .collect::<Result<Vec<_>, _>>()?;
        let _ = writeln!(report, "  m = {m:>5}: {}", row.join(" "));
    }
    Ok(())
}

fn read_config(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// `simulate <config>`.
pub fn simulate(path: &std::path::Path) -> Result<SimulationOutput, CliError> {
    let sc = parse_scenario(&read_config(path)?)?;
    run_scenario(&sc)
}

/// Worker-thread count from the environment, if set.
fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn sweep_run(
    point: &GridPoint,
    grid: &[f64],
    initial: ellipspin::SpinState,
    tol: f64,
) -> Result<String, CliError> {
    let traj = evolve(initial, &point.params, grid, tol)?;
    let mut out = String::new();
    for s in &traj.samples {
        csv_row(
            &mut out,
            &[
                point.k,
                point.delta_over_omega,
                point.h_over_omega,
                s.tau,
                s.p_flip,
            ],
        );
    }
    Ok(out)
}

/// `sweep <config>`.
pub fn sweep(path: &std::path::Path) -> Result<String, CliError> {
    let cfg = parse_sweep(&read_config(path)?)?;
    let grid = uniform_grid(cfg.tau_max, cfg.n_samples);
    let points = cfg.grid()?;
    let work = || -> Vec<Result<String, CliError>> {
        points
            .par_iter()
            .map(|p| sweep_run(p, &grid, cfg.initial, cfg.tol))
            .collect()
    };
    let blocks = match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for b in blocks {
        out.push_str(&b?);
    }
    Ok(out)
}

/// `elliptic-table <k> <u_max> <n>`.
pub fn elliptic_table(k: f64, u_max: f64, n: usize) -> Result<String, CliError> {
    if n < 2 {
        return Err(CliError::Usage("need at least 2 table rows".into()));
    }
    if !u_max.is_finite() {
        return Err(CliError::Usage("u_max must be finite".into()));
    }
    let mut out = String::from(ELLIPTIC_HEADER);
    out.push('\n');
    for i in 0..n {
        let u = u_max * i as f64 / (n - 1) as f64;
        let usage = |e: ellipspin::Error| CliError::Usage(e.to_string());
        let t = jacobi(u, k).map_err(usage)?;
        csv_row(
            &mut out,
            &[u, t.sn, t.cn, t.dn, amplitude(u, k).map_err(usage)?],
        );
    }
    Ok(out)
}

/// Writes `text` to `path`, or to standard output when `path` is `None`.
pub fn emit(text: &str, path: Option<&std::path::Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("cannot write output: {e}")))
        }
    }
}
