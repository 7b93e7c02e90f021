//! Observed trial data: per-patient records and the conditional distribution
//! `P(y, x | z)` a statistician can estimate from them.

use std::fmt;
use std::io::Read;

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Entries above this (negative) value are treated as round-off and clamped to 0.
const CLAMP_TOL: f64 = 1e-12;

/// One patient: advice `z`, whether the drug was taken `x`, recovery `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialRecord {
    pub z: u8,
    pub x: u8,
    pub y: u8,
}

impl TrialRecord {
    pub fn new(z: u8, x: u8, y: u8) -> Result<Self> {
        for (name, v) in [("z", z), ("x", x), ("y", y)] {
            if v > 1 {
                return Err(Error::InvalidDistribution(format!("field {name} must be 0 or 1, got {v}")));
            }
        }
        Ok(Self { z, x, y })
    }
}

/// `P(y, x | z)` indexed as `p[y][x][z]`, plus the advice marginal `P(z = 1)`.
///
/// Values built with [`ObservedDistribution::new`] satisfy the simplex
/// invariants; [`ObservedDistribution::from_raw`] keeps arbitrary numbers so
/// that malformed input can be diagnosed with [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedDistribution {
    p: [[[f64; 2]; 2]; 2],
    pz: f64,
}

impl ObservedDistribution {
    /// Validated constructor. Round-off negatives are clamped and each
    /// z-slice is renormalized; anything further from a distribution than
    /// `tol` is rejected.
    pub fn with_tol(p: [[[f64; 2]; 2]; 2], pz: f64, tol: f64) -> Result<Self> {
        let raw = Self::from_raw(p, pz);
        let violations = validate(&raw, tol);
        if let Some(v) = violations.first() {
            return Err(Error::InvalidDistribution(v.to_string()));
        }
        let mut p = p;
        for z in 0..2 {
            for y in 0..2 {
                for x in 0..2 {
                    if p[y][x][z] < 0.0 {
                        if p[y][x][z] < -CLAMP_TOL.max(tol) {
                            return Err(Error::InvalidDistribution(format!(
                                "P(y{y},x{x}|z{z}) = {} is negative",
                                p[y][x][z]
                            )));
                        }
                        p[y][x][z] = 0.0;
                    }
                }
            }
            let sum: f64 = (0..4).map(|i| p[i / 2][i % 2][z]).sum();
            for i in 0..4 {
                p[i / 2][i % 2][z] /= sum;
            }
        }
        Ok(Self { p, pz: pz.clamp(0.0, 1.0) })
    }

    pub fn new(p: [[[f64; 2]; 2]; 2], pz: f64) -> Result<Self> {
        Self::with_tol(p, pz, crate::DEFAULT_TOL)
    }

    /// Stores the numbers as given, without any checks.
    pub fn from_raw(p: [[[f64; 2]; 2]; 2], pz: f64) -> Self {
        Self { p, pz }
    }

    /// Every cell equal to 1/4.
    pub fn uniform() -> Self {
        Self { p: [[[0.25; 2]; 2]; 2], pz: 0.5 }
    }

    /// `P(y, x | z)`.
    #[inline]
    pub fn prob(&self, y: usize, x: usize, z: usize) -> f64 {
        self.p[y][x][z]
    }

    pub fn cells(&self) -> &[[[f64; 2]; 2]; 2] {
        &self.p
    }

    pub fn pz(&self) -> f64 {
        self.pz
    }

    /// `P(y = 1 | z)`.
    pub fn recovery_rate(&self, z: usize) -> f64 {
        self.p[1][0][z] + self.p[1][1][z]
    }

    /// `P(x = 1 | z)`.
    pub fn take_rate(&self, z: usize) -> f64 {
        self.p[0][1][z] + self.p[1][1][z]
    }

    /// Relabels the advice `z0 <-> z1` (and `pz -> 1 - pz`).
    pub fn swap_z(&self) -> Self {
        self.map_cells(|y, x, z| (y, x, 1 - z), 1.0 - self.pz)
    }

    /// Relabels the outcome `y0 <-> y1`.
    pub fn swap_y(&self) -> Self {
        self.map_cells(|y, x, z| (1 - y, x, z), self.pz)
    }

    /// Relabels treatment and outcome jointly: `x0 <-> x1`, `y0 <-> y1`.
    pub fn swap_xy(&self) -> Self {
        self.map_cells(|y, x, z| (1 - y, 1 - x, z), self.pz)
    }

    fn map_cells(&self, f: impl Fn(usize, usize, usize) -> (usize, usize, usize), pz: f64) -> Self {
        let mut p = [[[0.0; 2]; 2]; 2];
        for y in 0..2 {
            for x in 0..2 {
                for z in 0..2 {
                    let (sy, sx, sz) = f(y, x, z);
                    p[y][x][z] = self.p[sy][sx][sz];
                }
            }
        }
        Self { p, pz }
    }

    /// Largest entrywise difference to `other` (ignores `pz`).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for y in 0..2 {
            for x in 0..2 {
                for z in 0..2 {
                    m = m.max((self.p[y][x][z] - other.p[y][x][z]).abs());
                }
            }
        }
        m
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain numeric struct serializes")
    }

    /// Parses the JSON form without validation; use [`validate`] or
    /// [`ObservedDistribution::new`] afterwards.
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// A problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `sum_{y,x} P(y, x | z)` is off by more than the tolerance. Carries the
    /// redundant decision-marginal residual `|P(x1|z) + P(x0|z) - 1|`.
    SliceSum { z: usize, sum: f64, decision_marginal_residual: f64 },
    /// An entry outside `[-tol, 1 + tol]` or not finite.
    EntryOutOfRange { y: usize, x: usize, z: usize, value: f64 },
    /// `P(z = 1)` outside `[-tol, 1 + tol]` or not finite.
    AdviceMarginal { value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SliceSum { z, sum, .. } => {
                write!(f, "slice z={z} sums to {sum} instead of 1")
            }
            Violation::EntryOutOfRange { y, x, z, value } => {
                write!(f, "P(y{y},x{x}|z{z}) = {value} is not a probability")
            }
            Violation::AdviceMarginal { value } => write!(f, "P(z=1) = {value} is not a probability"),
        }
    }
}

/// Checks the per-z simplex constraints and entry ranges within `tol`.
pub fn validate(dist: &ObservedDistribution, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let in_range = |v: f64| v.is_finite() && v >= -tol && v <= 1.0 + tol;
    for z in 0..2 {
        for y in 0..2 {
            for x in 0..2 {
                let value = dist.p[y][x][z];
                if !in_range(value) {
                    out.push(Violation::EntryOutOfRange { y, x, z, value });
                }
            }
        }
    }
    for z in 0..2 {
        let sum: f64 = (0..4).map(|i| dist.p[i / 2][i % 2][z]).sum();
        if sum.is_nan() || (sum - 1.0).abs() > tol {
            let x1 = dist.take_rate(z);
            let x0 = dist.p[0][0][z] + dist.p[1][0][z];
            out.push(Violation::SliceSum { z, sum, decision_marginal_residual: (x1 + x0 - 1.0).abs() });
        }
    }
    if !in_range(dist.pz) {
        out.push(Violation::AdviceMarginal { value: dist.pz });
    }
    out
}

/// Maximum-likelihood estimate of `P(y, x | z)` from records.
pub fn estimate(records: &[TrialRecord]) -> Result<ObservedDistribution> {
    let mut counts = [[[0u64; 2]; 2]; 2];
    let mut arm = [0u64; 2];
    for r in records {
        counts[r.y as usize][r.x as usize][r.z as usize] += 1;
        arm[r.z as usize] += 1;
    }
    for z in 0..2 {
        if arm[z] == 0 {
            return Err(Error::EmptyArm(z as u8));
        }
    }
    let mut p = [[[0.0; 2]; 2]; 2];
    for y in 0..2 {
        for x in 0..2 {
            for z in 0..2 {
                p[y][x][z] = counts[y][x][z] as f64 / arm[z] as f64;
            }
        }
    }
    let pz = arm[1] as f64 / (arm[0] + arm[1]) as f64;
    Ok(ObservedDistribution { p, pz })
}

/// `P(y1 | z1) - P(y1 | z0)`, the effect read off by ignoring compliance.
pub fn naive_effect(dist: &ObservedDistribution) -> f64 {
    dist.recovery_rate(1) - dist.recovery_rate(0)
}

/// Draws `n` i.i.d. records: `z ~ Bernoulli(pz)`, then `(y, x)` from the z-slice.
pub fn sample_observed(dist: &ObservedDistribution, n: usize, seed: u64) -> Vec<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let advice = Bernoulli::new(dist.pz.clamp(0.0, 1.0)).expect("pz clamped to [0, 1]");
    // Cumulative tables per arm over cells ordered (y, x) = 00, 01, 10, 11.
    let mut cdf = [[0.0; 4]; 2];
    for z in 0..2 {
        let mut acc = 0.0;
        for i in 0..4 {
            acc += dist.p[i / 2][i % 2][z];
            cdf[z][i] = acc;
        }
    }
    (0..n)
        .map(|_| {
            let z = advice.sample(&mut rng) as usize;
            let u: f64 = rand::Rng::random::<f64>(&mut rng) * cdf[z][3];
            let i = cdf[z].iter().position(|&c| u < c).unwrap_or(3);
            TrialRecord { z: z as u8, x: (i % 2) as u8, y: (i / 2) as u8 }
        })
        .collect()
}

/// Reads records from CSV with header `z,x,y`.
pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?.clone();
    if headers.iter().collect::<Vec<_>>() != ["z", "x", "y"] {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `z,x,y`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse { line, msg: e.to_string() }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let mut bits = [0u8; 3];
        for (i, field) in rec.iter().enumerate() {
            bits[i] = match field {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("field {} must be 0 or 1, got `{other}`", ["z", "x", "y"][i]),
                    })
                }
            };
        }
        out.push(TrialRecord { z: bits[0], x: bits[1], y: bits[2] });
    }
    Ok(out)
}

/// Writes records as CSV with header `z,x,y`.
pub fn write_records_csv<W: std::io::Write>(records: &[TrialRecord], mut w: W) -> Result<()> {
    writeln!(w, "z,x,y")?;
    for r in records {
        writeln!(w, "{},{},{}", r.z, r.x, r.y)?;
    }
    Ok(())
}
