//! Flat `key = value` scenario files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may appear at
//! most once. Sweep files accept comma-separated lists for `k`,
//! `delta_over_omega` and `h_over_omega`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ellipspin::spin::{derive_parameters, SimParams, SpinState, DEFAULT_TOL};
use num_complex::Complex64;

/// Default cap on the number of sweep runs.
pub const DEFAULT_MAX_RUNS: usize = 100_000;
const MAX_TOL: f64 = 1e-4;
const NORM_TOL: f64 = 1e-10;

const SCENARIO_KEYS: &[&str] = &[
    "k",
    "h_over_omega",
    "delta_over_omega",
    "tau_max",
    "n_samples",
    "tol",
    "spin_j",
    "initial_re1",
    "initial_im1",
    "initial_re2",
    "initial_im2",
    "outputs",
    "g",
    "h0_tesla",
    "H0_tesla",
    "omega_rad_s",
];
const SWEEP_ONLY_KEYS: &[&str] = &["max_runs"];
const PHYSICAL_KEYS: &[&str] = &["g", "h0_tesla", "H0_tesla", "omega_rad_s"];

/// Parse or validation failure, located at a 1-based line and column.
/// Problems not tied to a line (missing keys, invariants) use line 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            column,
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        ConfigError::at(0, 0, message)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(
                f,
                "line {}, column {}: {}",
                self.line, self.column, self.message
            )
        }
    }
}

impl std::error::Error for ConfigError {}

/// Extra reports requested by a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Output {
    Trajectory,
    Probability,
    Polarization,
    HeunCheck,
    Wigner,
}

impl FromStr for Output {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trajectory" => Ok(Output::Trajectory),
            "probability" => Ok(Output::Probability),
            "polarization" => Ok(Output::Polarization),
            "heun_check" => Ok(Output::HeunCheck),
            "wigner" => Ok(Output::Wigner),
            other => Err(format!(
                "unknown output `{other}` (expected trajectory, probability, polarization, heun_check or wigner)"
            )),
        }
    }
}

/// A single simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: SimParams,
    pub tau_max: f64,
    pub n_samples: usize,
    pub tol: f64,
    pub spin_j: f64,
    pub initial: SpinState,
    pub outputs: Vec<Output>,
    pub warnings: Vec<String>,
}

/// A grid of runs sharing time grid, tolerance and initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub k: Vec<f64>,
    pub delta_over_omega: Vec<f64>,
    pub h_over_omega: Vec<f64>,
    pub tau_max: f64,
    pub n_samples: usize,
    pub tol: f64,
    pub initial: SpinState,
    pub max_runs: usize,
}

impl SweepConfig {
    pub fn runs(&self) -> usize {
        self.k.len() * self.delta_over_omega.len() * self.h_over_omega.len()
    }

    /// Grid points in output order: `k` outermost, then detuning, then
    /// transverse field.
    pub fn grid(&self) -> Result<Vec<GridPoint>, ConfigError> {
        let mut out = Vec::with_capacity(self.runs());
        for &k in &self.k {
            for &delta_over_omega in &self.delta_over_omega {
                for &h_over_omega in &self.h_over_omega {
                    let params = SimParams::from_detuning(h_over_omega, delta_over_omega, k).map_err(|e| {
                        ConfigError::global(format!(
                            "invalid grid point (k={k}, delta={delta_over_omega}, h={h_over_omega}): {e}"
                        ))
                    })?;
                    out.push(GridPoint {
                        k,
                        delta_over_omega,
                        h_over_omega,
                        params,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// One sweep run, keeping the configured values for the CSV columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub k: f64,
    pub delta_over_omega: f64,
    pub h_over_omega: f64,
    pub params: SimParams,
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value_column: usize,
    value: String,
}

/// Splits the text into key/value entries, rejecting unknown and repeated
/// keys.
fn tokenize(text: &str, allowed: &[&str]) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let key_column = raw.len() - trimmed.len() + 1;
        let Some(eq) = raw.find('=') else {
            return Err(ConfigError::at(line, key_column, "expected `key = value`"));
        };
        let key = raw[..eq].trim();
        if key.is_empty() {
            return Err(ConfigError::at(line, key_column, "missing key before `=`"));
        }
        if !allowed.contains(&key) {
            return Err(ConfigError::at(
                line,
                key_column,
                format!("unknown key `{key}`"),
            ));
        }
        let after = &raw[eq + 1..];
        let value = after.trim();
        let value_column = eq + 2 + (after.len() - after.trim_start().len());
        if value.is_empty() {
            return Err(ConfigError::at(
                line,
                value_column,
                format!("missing value for `{key}`"),
            ));
        }
        let entry = Entry {
            line,
            value_column,
            value: value.to_string(),
        };
        if let Some(prev) = entries.insert(key.to_string(), entry) {
            return Err(ConfigError::at(
                line,
                key_column,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
    }
    Ok(entries)
}

fn parse_value<T: FromStr>(
    entries: &BTreeMap<String, Entry>,
    key: &str,
) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    let Some(e) = entries.get(key) else {
        return Ok(None);
    };
    e.value.parse::<T>().map(Some).map_err(|err| {
        ConfigError::at(
            e.line,
            e.value_column,
            format!("invalid value for `{key}`: {err}"),
        )
    })
}

fn parse_real(entries: &BTreeMap<String, Entry>, key: &str) -> Result<Option<f64>, ConfigError> {
    let v = parse_value::<f64>(entries, key)?;
    if let (Some(x), Some(e)) = (v, entries.get(key)) {
        if !x.is_finite() {
            return Err(ConfigError::at(
                e.line,
                e.value_column,
                format!("`{key}` must be finite"),
            ));
        }
    }
    Ok(v)
}

fn parse_list(
    entries: &BTreeMap<String, Entry>,
    key: &str,
) -> Result<Option<Vec<f64>>, ConfigError> {
    let Some(e) = entries.get(key) else {
        return Ok(None);
    };
    let mut out = Vec::new();
    let mut offset = 0;
    for piece in e.value.split(',') {
        let column = e.value_column + offset + (piece.len() - piece.trim_start().len());
        offset += piece.len() + 1;
        let item = piece.trim();
        let x: f64 = item.parse().map_err(|err| {
            ConfigError::at(
                e.line,
                column,
                format!("invalid entry `{item}` in `{key}`: {err}"),
            )
        })?;
        if !x.is_finite() {
            return Err(ConfigError::at(
                e.line,
                column,
                format!("`{key}` entries must be finite"),
            ));
        }
        out.push(x);
    }
    Ok(Some(out))
}

fn require<T>(v: Option<T>, key: &str) -> Result<T, ConfigError> {
    v.ok_or_else(|| ConfigError::global(format!("missing required key `{key}`")))
}

fn located(entries: &BTreeMap<String, Entry>, key: &str, message: String) -> ConfigError {
    match entries.get(key) {
        Some(e) => ConfigError::at(e.line, e.value_column, message),
        None => ConfigError::global(message),
    }
}

/// Time grid, tolerance and initial state shared by both file kinds.
fn parse_common(
    entries: &BTreeMap<String, Entry>,
) -> Result<(f64, usize, f64, SpinState), ConfigError> {
    let tau_max = require(parse_real(entries, "tau_max")?, "tau_max")?;
    if tau_max <= 0.0 {
        return Err(located(
            entries,
            "tau_max",
            "`tau_max` must be positive".into(),
        ));
    }
    let n_samples = require(parse_value::<usize>(entries, "n_samples")?, "n_samples")?;
    if n_samples < 2 {
        return Err(located(
            entries,
            "n_samples",
            "`n_samples` must be at least 2".into(),
        ));
    }
    let tol = parse_real(entries, "tol")?.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol <= MAX_TOL) {
        return Err(located(
            entries,
            "tol",
            format!("`tol` must lie in (0, {MAX_TOL:e}]"),
        ));
    }
    let part = |key: &str, default: f64| -> Result<f64, ConfigError> {
        Ok(parse_real(entries, key)?.unwrap_or(default))
    };
    let initial = SpinState::new(
        Complex64::new(part("initial_re1", 1.0)?, part("initial_im1", 0.0)?),
        Complex64::new(part("initial_re2", 0.0)?, part("initial_im2", 0.0)?),
    );
    if (initial.norm_sqr() - 1.0).abs() > NORM_TOL {
        return Err(ConfigError::global(format!(
            "initial state must be normalised, got |psi|^2 = {}",
            initial.norm_sqr()
        )));
    }
    Ok((tau_max, n_samples, tol, initial))
}

/// Parses a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let entries = tokenize(text, SCENARIO_KEYS)?;
    let (tau_max, n_samples, tol, initial) = parse_common(&entries)?;
    let k = require(parse_real(&entries, "k")?, "k")?;
    let mut warnings = Vec::new();

    let h_dimless = parse_real(&entries, "h_over_omega")?;
    let d_dimless = parse_real(&entries, "delta_over_omega")?;
    let physical: Vec<Option<f64>> = PHYSICAL_KEYS
        .iter()
        .map(|key| parse_real(&entries, key))
        .collect::<Result<_, _>>()?;
    let any_physical = physical.iter().any(Option::is_some);

    let derived = if any_physical && (h_dimless.is_none() || d_dimless.is_none()) {
        let missing: Vec<&str> = PHYSICAL_KEYS
            .iter()
            .zip(&physical)
            .filter(|(_, v)| v.is_none())
            .map(|(k, _)| *k)
            .collect();
        if !missing.is_empty() {
            return Err(ConfigError::global(format!(
                "physical-unit parameters need all of g, h0_tesla, H0_tesla, omega_rad_s (missing {})",
                missing.join(", ")
            )));
        }
        let v: Vec<f64> = physical.iter().map(|x| x.unwrap_or_default()).collect();
        Some(
            derive_parameters(v[0], v[1], v[2], v[3], k)
                .map_err(|e| ConfigError::global(format!("invalid physical parameters: {e}")))?,
        )
    } else {
        None
    };
    if any_physical && (h_dimless.is_some() || d_dimless.is_some()) {
        warnings.push("both dimensionless and physical-unit parameters given; dimensionless keys take precedence".into());
    }

    let h = match (h_dimless, &derived) {
        (Some(h), _) => h,
        (None, Some(p)) => p.transverse,
        (None, None) => return Err(ConfigError::global("missing required key `h_over_omega`")),
    };
    let delta = match (d_dimless, &derived) {
        (Some(d), _) => d,
        (None, Some(p)) => p.detuning(),
        (None, None) => {
            return Err(ConfigError::global(
                "missing required key `delta_over_omega`",
            ))
        }
    };
    let params = SimParams::from_detuning(h, delta, k).map_err(|e| {
        let key = if !(0.0..=1.0).contains(&k) {
            "k"
        } else {
            "h_over_omega"
        };
        located(&entries, key, format!("invalid parameters: {e}"))
    })?;

    let spin_j = parse_real(&entries, "spin_j")?.unwrap_or(0.5);
    if ellipspin::wigner::SpinJ::new(spin_j).is_err() {
        return Err(located(
            &entries,
            "spin_j",
            format!(
                "`spin_j` must be a half-integer in [0, {}]",
                ellipspin::wigner::MAX_J
            ),
        ));
    }

    let mut outputs = Vec::new();
    if let Some(e) = entries.get("outputs") {
        let mut offset = 0;
        for piece in e.value.split(',') {
            let column = e.value_column + offset + (piece.len() - piece.trim_start().len());
            offset += piece.len() + 1;
            let o: Output = piece
                .trim()
                .parse()
                .map_err(|m: String| ConfigError::at(e.line, column, m))?;
            if !outputs.contains(&o) {
                outputs.push(o);
            }
        }
    } else {
        outputs.push(Output::Trajectory);
    }

    Ok(Scenario {
        params,
        tau_max,
        n_samples,
        tol,
        spin_j,
        initial,
        outputs,
        warnings,
    })
}

/// Parses a sweep file.
pub fn parse_sweep(text: &str) -> Result<SweepConfig, ConfigError> {
    let allowed: Vec<&str> = SCENARIO_KEYS
        .iter()
        .chain(SWEEP_ONLY_KEYS)
        .copied()
        .filter(|k| !PHYSICAL_KEYS.contains(k) && *k != "outputs" && *k != "spin_j")
        .collect();
    let entries = tokenize(text, &allowed)?;
    let (tau_max, n_samples, tol, initial) = parse_common(&entries)?;
    let k = require(parse_list(&entries, "k")?, "k")?;
    let delta_over_omega = require(
        parse_list(&entries, "delta_over_omega")?,
        "delta_over_omega",
    )?;
    let h_over_omega = require(parse_list(&entries, "h_over_omega")?, "h_over_omega")?;
    let max_runs = parse_value::<usize>(&entries, "max_runs")?.unwrap_or(DEFAULT_MAX_RUNS);
    let cfg = SweepConfig {
        k,
        delta_over_omega,
        h_over_omega,
        tau_max,
        n_samples,
        tol,
        initial,
        max_runs,
    };
    if cfg.runs() > cfg.max_runs {
        return Err(ConfigError::global(format!(
            "sweep has {} runs, more than the cap of {}",
            cfg.runs(),
            cfg.max_runs
        )));
    }
    cfg.grid()?;
    Ok(cfg)
}
