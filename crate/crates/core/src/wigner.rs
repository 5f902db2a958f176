//! Lifting the spin-1/2 propagator to arbitrary spin J through Euler angles
//! and Wigner D-matrices.
//!
//! Row and column indices run over projections `m = J, J−1, …, −J`, so for
//! `J = 1/2` index 0 is spin up, matching [`Propagator`].

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::spin::Propagator;

/// Largest supported angular momentum.
pub const MAX_J: f64 = 25.0;
const UNITARITY_TOL: f64 = 1e-9;
/// Below this `cos(θ/2)` the tangent form of the probability sum is replaced
/// by the equivalent sine/cosine form.
const TAN_FORM_MIN_COS: f64 = 1e-6;

/// Euler angles of an SU(2) rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub phi: f64,
    /// In `[0, π]`.
    pub theta: f64,
    pub psi: f64,
}

/// Half-integer angular momentum, stored as `2J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinJ(u32);

impl SpinJ {
    pub fn new(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !j.is_finite() || j < 0.0 || (twice - twice.round()).abs() > 1e-12 {
            return Err(domain(format!(
                "J = {j} is not a non-negative half-integer"
            )));
        }
        if j > MAX_J {
            return Err(domain(format!(
                "J = {j} exceeds the supported maximum {MAX_J}"
            )));
        }
        Ok(SpinJ(twice.round() as u32))
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// Projections `J, J−1, …, −J`.
    pub fn projections(self) -> impl Iterator<Item = f64> {
        let j = self.0 as i64;
        (0..=j).map(move |i| (j - 2 * i) as f64 / 2.0)
    }

    /// Twice the projection `m`, validated against this J.
    fn twice_projection(self, m: f64) -> Result<i64> {
        let t = 2.0 * m;
        if !m.is_finite() || (t - t.round()).abs() > 1e-12 {
            return Err(domain(format!("projection m = {m} is not a half-integer")));
        }
        let t = t.round() as i64;
        let j = self.0 as i64;
        if t.abs() > j || (j - t) % 2 != 0 {
            return Err(domain(format!(
                "projection m = {m} not in {{-J, ..., J}} for J = {}",
                self.value()
            )));
        }
        Ok(t)
    }
}

/// `(2J+1)×(2J+1)` D-matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinJMatrix {
    pub j: SpinJ,
    pub entries: Vec<Complex64>,
}

impl SpinJMatrix {
    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    /// Entry by row/column index.
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    /// Entry by projections `(m, m')`.
    pub fn get(&self, m: f64, m_prime: f64) -> Result<Complex64> {
        let j = self.j.twice() as i64;
        let row = ((j - self.j.twice_projection(m)?) / 2) as usize;
        let col = ((j - self.j.twice_projection(m_prime)?) / 2) as usize;
        Ok(self.at(row, col))
    }

    /// `max |(D†D − I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for k in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    acc += self.at(r, i).conj() * self.at(r, k);
                }
                if i == k {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    /// `Σ_{m'} |D_{mm'}|²` for every row.
    pub fn row_probability_sums(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|r| (0..n).map(|c| self.at(r, c).norm_sqr()).sum())
            .collect()
    }
}

/// `ln n!` for `n ≤ 2·MAX_J + 1`.
fn ln_factorial(n: i64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let len = (2.0 * MAX_J) as usize + 2;
        let mut t = vec![0.0; len];
        for i in 1..len {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    table[n as usize]
}

/// Binomial coefficient `C(n, r)` for `n ≤ 2·MAX_J`, exact in `f64`.
fn binomial(n: i64, r: i64) -> f64 {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let len = (2.0 * MAX_J) as usize + 1;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(len);
        for n in 0..len {
            let mut row = vec![1.0; n + 1];
            for r in 1..n {
                row[r] = rows[n - 1][r - 1] + rows[n - 1][r];
            }
            rows.push(row);
        }
        rows
    });
    table[n as usize][r as usize]
}

/// Index ranges of the D-matrix sum for twice-projections `(tm, tmp)`.
struct SumLayout {
    /// `J + m`, `J − m`
    jpm: i64,
    jmm: i64,
    /// `m' − m`
    shift: i64,
    /// `ν` runs over `lo..=hi`.
    lo: i64,
    hi: i64,
    /// `½·ln[(J+m')!(J−m')! / ((J+m)!(J−m)!)]`
    half_ln_ratio: f64,
}

impl SumLayout {
    fn new(j: SpinJ, tm: i64, tmp: i64) -> Self {
        let tj = j.twice() as i64;
        let (jpm, jmm) = ((tj + tm) / 2, (tj - tm) / 2);
        let (jpmp, jmmp) = ((tj + tmp) / 2, (tj - tmp) / 2);
        let shift = (tmp - tm) / 2;
        SumLayout {
            jpm,
            jmm,
            shift,
            lo: 0.max(-shift),
            hi: jpm.min(jmmp),
            half_ln_ratio: 0.5
                * (ln_factorial(jpmp) + ln_factorial(jmmp) - ln_factorial(jpm) - ln_factorial(jmm)),
        }
    }

    /// `(−1)^ν·C(J+m, ν)·C(J−m, J−m'−ν)`, the factorial weight of term `ν`
    /// after pulling out `1/((J+m)!(J−m)!)`.
    fn weight(&self, nu: i64) -> f64 {
        let w = binomial(self.jpm, nu) * binomial(self.jmm, nu + self.shift);
        if nu % 2 == 0 {
            w
        } else {
            -w
        }
    }
}

/// Extracts Euler angles from a unitary 2×2 propagator using
/// `U₁₁ = cos(θ/2)·e^{i(φ+ψ)/2}` and `U₂₁ = i·sin(θ/2)·e^{−i(φ−ψ)/2}`.
///
/// When one of the two entries vanishes, the undetermined combination is set
/// to zero.
pub fn euler_angles(u: &Propagator) -> Result<EulerAngles> {
    let defect = u.unitarity_defect();
    if defect.is_nan() || defect >= UNITARITY_TOL {
        return Err(domain(format!(
            "propagator is not unitary (defect {defect:e})"
        )));
    }
    let c = u.u11.norm();
    let s = u.u21.norm();
    let theta = 2.0 * s.atan2(c);
    let sum = if c > 0.0 { 2.0 * u.u11.arg() } else { 0.0 };
    let diff = if s > 0.0 {
        -2.0 * (u.u21 / Complex64::new(0.0, 1.0)).arg()
    } else {
        0.0
    };
    Ok(EulerAngles {
        phi: 0.5 * (sum + diff),
        theta,
        psi: 0.5 * (sum - diff),
    })
}

/// Real factor of the D-matrix entry for twice-projections `(tm, tmp)`:
/// `√F · Σ_ν (−1)^ν s^{2ν−m+m'} c^{2J−2ν+m−m'} / (ν!(ν−m+m')!(J+m−ν)!(J−m'−ν)!)`.
fn small_d(j: SpinJ, tm: i64, tmp: i64, theta: f64) -> f64 {
    let tj = j.twice() as i64;
    let layout = SumLayout::new(j, tm, tmp);
    let (s, c) = (0.5 * theta).sin_cos();
    let mut total = 0.0;
    for nu in layout.lo..=layout.hi {
        let ps = 2 * nu + layout.shift;
        let pc = tj - ps;
        total += layout.weight(nu) * s.powi(ps as i32) * c.powi(pc as i32);
    }
    layout.half_ln_ratio.exp() * total
}

/// Wigner matrix
/// `D_{mm'} = i^{m'−m} e^{i(mφ + m'ψ)} · small_d(m, m', θ)`.
pub fn wigner_d(j: SpinJ, angles: &EulerAngles) -> Result<SpinJMatrix> {
    let tj = j.twice() as i64;
    let n = j.dim();
    let mut entries = Vec::with_capacity(n * n);
    for r in 0..n as i64 {
        let tm = tj - 2 * r;
        for c in 0..n as i64 {
            let tmp = tj - 2 * c;
            let shift = (tmp - tm) / 2;
            let phase_i = match shift.rem_euclid(4) {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
            let angle = 0.5 * (tm as f64 * angles.phi + tmp as f64 * angles.psi);
            let d = small_d(j, tm, tmp, angles.theta);
            entries.push(phase_i * Complex64::from_polar(d, angle));
        }
    }
    Ok(SpinJMatrix { j, entries })
}

/// Transition probability `m → m'` for spin J after a rotation by `θ`:
///
/// ```text
/// F·cos^{4J}(θ/2)·[Σ_ν (−1)^ν tan^{2ν−m+m'}(θ/2) / (ν!(ν−m+m')!(J+m−ν)!(J−m'−ν)!)]²
/// ```
pub fn transition_probability_j(j: SpinJ, m: f64, m_prime: f64, theta: f64) -> Result<f64> {
    let tm = j.twice_projection(m)?;
    let tmp = j.twice_projection(m_prime)?;
    if !theta.is_finite() {
        return Err(domain("non-finite rotation angle"));
    }
    let (s, c) = (0.5 * theta).sin_cos();
    if c.abs() < TAN_FORM_MIN_COS {
        return Ok(small_d(j, tm, tmp, theta).powi(2));
    }
    let tj = j.twice() as i64;
    let layout = SumLayout::new(j, tm, tmp);
    let tan = s / c;
    let mut sum = 0.0;
    for nu in layout.lo..=layout.hi {
        sum += layout.weight(nu) * tan.powi((2 * nu + layout.shift) as i32);
    }
    Ok((2.0 * layout.half_ln_ratio).exp() * c.powi(2 * tj as i32) * sum * sum)
}
