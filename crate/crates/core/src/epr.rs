//! Polarization-entangled photon pairs as latent factors.
//!
//! The left photon's polarizer decides whether the patient takes the drug:
//! the advice turns it from `alpha0` to `alpha1`. The right photon's
//! polarizer decides recovery: the drug turns it from `beta0` to `beta1`.
//! With the pair in the singlet state
//!
//! ```text
//! P(y_j, x_k | z_l) = (1 - (-1)^(j+k) cos(2 alpha_l - 2 beta_k)) / 4
//! ```
//!
//! and the ACE is exactly zero, yet at suitable angles the third lower
//! instrumental bound is strictly positive.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::instrumental_lower;
use crate::linalg::ComplexMatrix;
use crate::operator::{DensityState, Effect, Instrument, KrausMap};
use crate::quantum::QuantumLatentModel;
use crate::trial_data::ObservedDistribution;
use crate::{Error, Result};

/// Relative tolerance for treating two scan values as tied.
const SCAN_TIE_TOL: f64 = 1e-12;

/// Polarizer angles in degrees: `alpha_z` on the left (advice), `beta_x` on
/// the right (drug).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizerAngles {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta0: f64,
    pub beta1: f64,
}

impl PolarizerAngles {
    pub const fn new(alpha0: f64, alpha1: f64, beta0: f64, beta1: f64) -> Self {
        Self { alpha0, alpha1, beta0, beta1 }
    }

    /// The angles at which the third lower bound reaches `(5/sqrt2 - 3)/4`.
    pub const VIOLATION: Self = Self::new(67.5, 22.5, -45.0, 0.0);

    /// Angles giving the extremal CHSH value `-2 sqrt2`.
    pub const CHSH_OPTIMAL: Self = Self::new(0.0, 45.0, 22.5, -22.5);

    pub fn alpha(&self, z: usize) -> f64 {
        if z == 0 {
            self.alpha0
        } else {
            self.alpha1
        }
    }

    pub fn beta(&self, x: usize) -> f64 {
        if x == 0 {
            self.beta0
        } else {
            self.beta1
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.alpha0, self.alpha1, self.beta0, self.beta1].iter().all(|v| v.is_finite())
    }
}

impl fmt::Display for PolarizerAngles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.alpha0, self.alpha1, self.beta0, self.beta1)
    }
}

impl FromStr for PolarizerAngles {
    type Err = Error;

    /// Parses `a0,a1,b0,b1` (degrees).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::InvalidAngles(format!("expected a0,a1,b0,b1, got `{s}`")));
        }
        let mut v = [0.0; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::InvalidAngles(format!("`{p}` is not a finite number")))?;
        }
        Ok(Self::new(v[0], v[1], v[2], v[3]))
    }
}

/// Real rotation by `angle_deg`, mapping `|h>` to `cos a |h> + sin a |v>`.
fn rotation(angle_deg: f64) -> ComplexMatrix {
    let (s, c) = angle_deg.to_radians().sin_cos();
    ComplexMatrix::from_real(&[&[c, -s], &[s, c]])
}

/// `P^a_1`, the projector onto `cos a |h> + sin a |v>`; outcome 0 gives `1 - P^a_1`.
pub fn projector(angle_deg: f64, outcome: u8) -> ComplexMatrix {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let pass = ComplexMatrix::from_real(&[&[c * c, c * s], &[c * s, s * s]]);
    if outcome == 1 {
        pass
    } else {
        &ComplexMatrix::identity(2) - &pass
    }
}

/// `(|h>|v> - |v>|h>) / sqrt2`.
pub fn singlet_state() -> DensityState {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let psi = [0.0, r, -r, 0.0].map(|v| Complex64::new(v, 0.0));
    DensityState::pure(&psi).expect("normalized vector")
}

/// Probability that both polarizers give the same result.
pub fn coincidence_probability(alpha_deg: f64, beta_deg: f64) -> f64 {
    (1.0 - (2.0 * (alpha_deg - beta_deg)).to_radians().cos()) / 2.0
}

/// `P(same) - P(different)` with outcomes coded pass = +1, blocked = -1.
pub fn covariance(alpha_deg: f64, beta_deg: f64) -> f64 {
    -(2.0 * (alpha_deg - beta_deg)).to_radians().cos()
}

/// Closed-form observed distribution of the toy model, with `pz = 1/2`.
pub fn toy_distribution(angles: &PolarizerAngles) -> ObservedDistribution {
    let mut p = [[[0.0; 2]; 2]; 2];
    for (y, row) in p.iter_mut().enumerate() {
        for (x, cell) in row.iter_mut().enumerate() {
            for (z, v) in cell.iter_mut().enumerate() {
                let sign = if (y + x).is_multiple_of(2) { 1.0 } else { -1.0 };
                let c = (2.0 * (angles.alpha(z) - angles.beta(x))).to_radians().cos();
                *v = (1.0 - sign * c) / 4.0;
            }
        }
    }
    ObservedDistribution::from_raw(p, 0.5)
}

/// The toy model as a structured quantum latent model: singlet state, advice
/// rotating the left frame to `alpha_z`, a projective decision in that frame,
/// the drug rotating the right frame to `beta_x` and recovery as passing the
/// right polarizer.
pub fn toy_embedding(angles: &PolarizerAngles) -> QuantumLatentModel {
    let advice = [0, 1].map(|z| KrausMap::conjugation(rotation(-angles.alpha(z))));
    let decision = Instrument::projective(&projector(0.0, 1)).expect("projector");
    let drug = [0, 1].map(|x| KrausMap::conjugation(rotation(-angles.beta(x))));
    let m = Effect::new(projector(0.0, 1)).expect("projector is an effect");
    QuantumLatentModel::structured(singlet_state(), advice, decision, drug, m).expect("toy model is consistent")
}

/// Value of the third lower bound minus the true ACE of the toy model. The
/// singlet's right marginal is maximally mixed, so that ACE is zero for all angles.
pub fn toy_violation(angles: &PolarizerAngles) -> f64 {
    instrumental_lower(&toy_distribution(angles))[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshResult {
    /// `covariances[i][j] = C(alpha_i, beta_j)`.
    pub covariances: [[f64; 2]; 2],
    /// `C(a0,b0) + C(a0,b1) + C(a1,b0) - C(a1,b1)`.
    pub s_value: f64,
}

impl ChshResult {
    fn from_covariances(c: [[f64; 2]; 2]) -> Self {
        Self { covariances: c, s_value: c[0][0] + c[0][1] + c[1][0] - c[1][1] }
    }
}

pub fn chsh(angles: &PolarizerAngles) -> ChshResult {
    let mut c = [[0.0; 2]; 2];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = covariance(angles.alpha(i), angles.beta(j));
        }
    }
    ChshResult::from_covariances(c)
}

/// Largest `|s|` over the 16 deterministic local strategies, i.e. outcome
/// assignments `a(z), b(w)` in `{+1, -1}` fixed before the settings are chosen.
pub fn local_strategies_max_chsh() -> f64 {
    let mut best: f64 = 0.0;
    for strategy in 0..16u32 {
        let bit = |i: u32| if strategy >> i & 1 == 1 { 1.0 } else { -1.0 };
        let (a0, a1, b0, b1) = (bit(0), bit(1), bit(2), bit(3));
        let s = ChshResult::from_covariances([[a0 * b0, a0 * b1], [a1 * b0, a1 * b1]]).s_value;
        best = best.max(s.abs());
    }
    best
}

/// The second-drug experiment: the advice sets the left polarizer to
/// `alpha_z`, a second drug `w` (given under supervision) sets the right
/// polarizer to `beta_w`, and the first drug has no effect on recovery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondExperiment {
    /// `table[z][w][x][y] = P(x, y | z, w)`.
    pub table: [[[[f64; 2]; 2]; 2]; 2],
    pub chsh: ChshResult,
    /// `|s| > 2`: no classical latent variable without an `X -> Y` effect explains the data.
    pub exceeds_classical_bound: bool,
}

pub fn second_experiment(angles: &PolarizerAngles) -> SecondExperiment {
    let mut table = [[[[0.0; 2]; 2]; 2]; 2];
    let mut cov = [[0.0; 2]; 2];
    for z in 0..2 {
        for w in 0..2 {
            let c = (2.0 * (angles.alpha(z) - angles.beta(w))).to_radians().cos();
            for x in 0..2usize {
                for y in 0..2 {
                    let sign = if (x + y).is_multiple_of(2) { 1.0 } else { -1.0 };
                    let p = (1.0 - sign * c) / 4.0;
                    table[z][w][x][y] = p;
                    let e = |b: usize| if b == 1 { 1.0 } else { -1.0 };
                    cov[z][w] += e(x) * e(y) * p;
                }
            }
        }
    }
    let chsh = ChshResult::from_covariances(cov);
    SecondExperiment { table, exceeds_classical_bound: chsh.s_value.abs() > 2.0 + 1e-9, chsh }
}

/// Grid `0, step, 2 step, ...` below 180 degrees.
fn grid(step: f64) -> Vec<f64> {
    assert!(step > 0.0 && step <= 45.0, "grid step must lie in (0, 45]");
    let n = (180.0 / step - 1e-9).ceil() as usize;
    (0..n).map(|i| i as f64 * step).collect()
}

/// Exhaustive search of the angle grid (mod 180 degrees) for the largest
/// [`toy_violation`]. Ties within `1e-12` go to the lexicographically smallest
/// `(alpha0, alpha1, beta0, beta1)`.
///
/// The objective splits into a part depending on `alpha0` and one depending
/// on `alpha1` once the betas are fixed, so each beta pair needs two 1-D
/// maximisations instead of a 2-D one.
pub fn scan_max_violation(step: f64) -> (PolarizerAngles, f64) {
    let g = grid(step);
    let n = g.len();
    // cos(2 a_i - 2 b_k) for grid indices i, k.
    let cos: Vec<f64> = (0..n * n).map(|ik| (2.0 * (g[ik / n] - g[ik % n])).to_radians().cos()).collect();
    let cell = |y: usize, x: usize, a: usize, b: usize| {
        let sign = if (y + x).is_multiple_of(2) { 1.0 } else { -1.0 };
        (1.0 - sign * cos[a * n + b]) / 4.0
    };
    // Index of the first maximiser within tolerance.
    let argmax = |f: &dyn Fn(usize) -> f64| {
        let vals: Vec<f64> = (0..n).map(f).collect();
        let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let i = vals.iter().position(|&v| v >= best - SCAN_TIE_TOL).expect("non-empty grid");
        (i, vals[i])
    };

    let mut best: Option<([usize; 4], f64)> = None;
    for b0 in 0..n {
        for b1 in 0..n {
            // Advice z0: P(y1,x1|z0) - P(y0,x1|z0) - P(y1,x0|z0).
            let (a0, v0) = argmax(&|a| cell(1, 1, a, b1) - cell(0, 1, a, b1) - cell(1, 0, a, b0));
            // Advice z1: -P(y1,x1|z1) - P(y1,x0|z1).
            let (a1, v1) = argmax(&|a| -cell(1, 1, a, b1) - cell(1, 0, a, b0));
            let idx = [a0, a1, b0, b1];
            let v = v0 + v1;
            best = match best {
                None => Some((idx, v)),
                Some((bi, bv)) => {
                    if v > bv + SCAN_TIE_TOL || (v >= bv - SCAN_TIE_TOL && idx < bi) {
                        Some((idx, v))
                    } else {
                        Some((bi, bv))
                    }
                }
            };
        }
    }
    let (idx, _) = best.expect("non-empty grid");
    let angles = PolarizerAngles::new(g[idx[0]], g[idx[1]], g[idx[2]], g[idx[3]]);
    (angles, toy_violation(&angles))
}

/// Every grid point with its violation, in lexicographic order. The grid has
/// `(180 / step)^4` points.
pub fn scan_grid(step: f64) -> impl Iterator<Item = (PolarizerAngles, f64)> {
    let g = grid(step);
    let n = g.len();
    (0..n.pow(4)).map(move |i| {
        let a = PolarizerAngles::new(g[i / (n * n * n)], g[(i / (n * n)) % n], g[(i / n) % n], g[i % n]);
        (a, toy_violation(&a))
    })
}
