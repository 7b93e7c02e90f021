//! The canonical 16-state latent model: a compliance type fixes the decision
//! given the advice, a response type fixes the outcome given the decision.

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::trial_data::{ObservedDistribution, TrialRecord};
use crate::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComplianceType {
    NeverTake,
    AlwaysTake,
    Complier,
    Defier,
}

impl ComplianceType {
    /// Serialization order.
    pub const ALL: [ComplianceType; 4] = [Self::NeverTake, Self::AlwaysTake, Self::Complier, Self::Defier];

    /// Decision `x` taken under advice `z`.
    pub fn decision(self, z: u8) -> u8 {
        match self {
            Self::NeverTake => 0,
            Self::AlwaysTake => 1,
            Self::Complier => z,
            Self::Defier => 1 - z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResponseType {
    NeverRecover,
    AlwaysRecover,
    Helped,
    Hurt,
}

impl ResponseType {
    pub const ALL: [ResponseType; 4] = [Self::NeverRecover, Self::AlwaysRecover, Self::Helped, Self::Hurt];

    /// Outcome `y` given treatment `x`.
    pub fn outcome(self, x: u8) -> u8 {
        match self {
            Self::NeverRecover => 0,
            Self::AlwaysRecover => 1,
            Self::Helped => x,
            Self::Hurt => 1 - x,
        }
    }
}

pub fn decision(b: ComplianceType, z: u8) -> u8 {
    b.decision(z)
}

pub fn outcome(r: ResponseType, x: u8) -> u8 {
    r.outcome(x)
}

/// Joint distribution `q[compliance][response]` over the 16 latent cells and
/// the advice marginal `pz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct CanonicalModel {
    q: [[f64; 4]; 4],
    pz: f64,
}

#[derive(Deserialize)]
struct RawModel {
    q: [[f64; 4]; 4],
    pz: f64,
}

impl TryFrom<RawModel> for CanonicalModel {
    type Error = Error;
    fn try_from(raw: RawModel) -> Result<Self> {
        CanonicalModel::new(raw.q, raw.pz)
    }
}

impl CanonicalModel {
    pub fn new(q: [[f64; 4]; 4], pz: f64) -> Result<Self> {
        let mut total = 0.0;
        for row in &q {
            for &v in row {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidModel(format!("cell probability {v} is negative or not finite")));
                }
                total += v;
            }
        }
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidModel(format!("cell probabilities sum to {total}")));
        }
        if !(0.0..=1.0).contains(&pz) {
            return Err(Error::InvalidModel(format!("pz = {pz} outside [0, 1]")));
        }
        Ok(Self { q, pz })
    }

    /// All mass on one latent cell.
    pub fn point_mass(b: ComplianceType, r: ResponseType) -> Self {
        let mut q = [[0.0; 4]; 4];
        q[b as usize][r as usize] = 1.0;
        Self { q, pz: 0.5 }
    }

    pub fn uniform() -> Self {
        Self { q: [[1.0 / 16.0; 4]; 4], pz: 0.5 }
    }

    pub fn q(&self) -> &[[f64; 4]; 4] {
        &self.q
    }

    pub fn cell(&self, b: ComplianceType, r: ResponseType) -> f64 {
        self.q[b as usize][r as usize]
    }

    pub fn pz(&self) -> f64 {
        self.pz
    }

    pub fn with_pz(&self, pz: f64) -> Result<Self> {
        Self::new(self.q, pz)
    }

    /// Flattened cells in row-major (compliance, response) order.
    pub fn flat(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for b in 0..4 {
            for r in 0..4 {
                out[4 * b + r] = self.q[b][r];
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain numeric struct serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Iterates the 16 latent cells in serialization order.
pub fn cells() -> impl Iterator<Item = (ComplianceType, ResponseType)> {
    ComplianceType::ALL.into_iter().flat_map(|b| ResponseType::ALL.into_iter().map(move |r| (b, r)))
}

/// Maps the latent distribution to `P(y, x | z)`.
pub fn forward(model: &CanonicalModel) -> ObservedDistribution {
    let mut p = [[[0.0; 2]; 2]; 2];
    for z in 0..2u8 {
        for (b, r) in cells() {
            let x = b.decision(z);
            let y = r.outcome(x);
            p[y as usize][x as usize][z as usize] += model.cell(b, r);
        }
    }
    ObservedDistribution::from_raw(p, model.pz)
}

/// `P(helped) - P(hurt)`.
pub fn ace(model: &CanonicalModel) -> f64 {
    ComplianceType::ALL.iter().map(|&b| model.cell(b, ResponseType::Helped) - model.cell(b, ResponseType::Hurt)).sum()
}

/// `P(y1 | do x)`.
pub fn intervene(model: &CanonicalModel, x: u8) -> f64 {
    cells().filter(|&(_, r)| r.outcome(x) == 1).map(|(b, r)| model.cell(b, r)).sum()
}

/// Draws `n` i.i.d. patients from the model.
pub fn sample(model: &CanonicalModel, n: usize, seed: u64) -> Vec<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let advice = Bernoulli::new(model.pz).expect("pz validated");
    let flat = model.flat();
    let mut cdf = [0.0; 16];
    let mut acc = 0.0;
    for (c, v) in cdf.iter_mut().zip(flat) {
        acc += v;
        *c = acc;
    }
    (0..n)
        .map(|_| {
            let z = advice.sample(&mut rng) as u8;
            let u = rand::Rng::random::<f64>(&mut rng) * acc;
            // Skip zero-mass cells so round-off never selects them.
            let i = (0..16)
                .find(|&i| u < cdf[i] && flat[i] > 0.0)
                .unwrap_or_else(|| (0..16).rev().find(|&i| flat[i] > 0.0).expect("model has mass"));
            let b = ComplianceType::ALL[i / 4];
            let r = ResponseType::ALL[i % 4];
            let x = b.decision(z);
            TrialRecord { z, x, y: r.outcome(x) }
        })
        .collect()
}

/// A model drawn uniformly from the 16-cell simplex, with `pz = 0.5`.
pub fn random_model(seed: u64) -> CanonicalModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..16).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = draws.iter().sum();
    let mut q = [[0.0; 4]; 4];
    for (i, v) in draws.iter().enumerate() {
        q[i / 4][i % 4] = v / total;
    }
    CanonicalModel { q, pz: 0.5 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial_data::{estimate, validate};
    use ComplianceType::*;
    use ResponseType::*;

    #[test]
    fn decision_and_outcome_tables() {
        assert_eq!(decision(Complier, 1), 1);
        assert_eq!(decision(Defier, 1), 0);
        assert_eq!(decision(NeverTake, 0), 0);
        assert_eq!(decision(NeverTake, 1), 0);
        assert_eq!(outcome(Helped, 1), 1);
        assert_eq!(outcome(Hurt, 1), 0);
        assert_eq!(outcome(AlwaysRecover, 0), 1);
    }

    #[test]
    fn forward_point_mass() {
        let d = forward(&CanonicalModel::point_mass(Complier, Helped));
        for y in 0..2 {
            for x in 0..2 {
                for z in 0..2 {
                    let expected = if (y, x, z) == (1, 1, 1) || (y, x, z) == (0, 0, 0) { 1.0 } else { 0.0 };
                    assert_eq!(d.prob(y, x, z), expected);
                }
            }
        }
    }

    #[test]
    fn forward_uniform_by_enumeration() {
        // Count, for each observable cell, how many of the 16 latent cells land in it.
        let d = forward(&CanonicalModel::uniform());
        let mut hits = [[[0usize; 2]; 2]; 2];
        for b in 0..4u8 {
            for r in 0..4u8 {
                for z in 0..2u8 {
                    let x = match b {
                        0 => 0,
                        1 => 1,
                        2 => z,
                        _ => 1 - z,
                    };
                    let y = match r {
                        0 => 0,
                        1 => 1,
                        2 => x,
                        _ => 1 - x,
                    };
                    hits[y as usize][x as usize][z as usize] += 1;
                }
            }
        }
        for y in 0..2 {
            for x in 0..2 {
                for z in 0..2 {
                    assert!((d.prob(y, x, z) - hits[y][x][z] as f64 / 16.0).abs() < 1e-15);
                }
            }
        }
        assert!((d.prob(1, 1, 1) - 0.25).abs() < 1e-15);
        assert!(validate(&d, 1e-12).is_empty());
    }

    #[test]
    fn ace_and_intervention() {
        assert_eq!(ace(&CanonicalModel::point_mass(Complier, Helped)), 1.0);
        assert_eq!(ace(&CanonicalModel::uniform()), 0.0);
        let hurt = CanonicalModel::point_mass(Complier, Hurt);
        assert_eq!(intervene(&hurt, 1), 0.0);
        assert_eq!(intervene(&hurt, 0), 1.0);
        assert!((intervene(&CanonicalModel::uniform(), 1) - 0.5).abs() < 1e-15);
        for seed in 0..50 {
            let m = random_model(seed);
            assert!((ace(&m) - (intervene(&m, 1) - intervene(&m, 0))).abs() < 1e-12);
        }
    }

    #[test]
    fn random_models_are_distinct_and_normalized() {
        for seed in 0..20 {
            let m = random_model(seed);
            let s: f64 = m.flat().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(validate(&forward(&m), 1e-12).is_empty());
        }
        assert_ne!(random_model(0), random_model(1));
    }

    #[test]
    fn sampling_determinism_and_point_mass() {
        let m = random_model(3);
        assert_eq!(sample(&m, 500, 11), sample(&m, 500, 11));
        let pm = CanonicalModel::point_mass(Defier, Helped);
        for r in sample(&pm, 200, 5) {
            // Defiers take the drug exactly when not advised; helped recover iff treated.
            assert_eq!(r.x, 1 - r.z);
            assert_eq!(r.y, r.x);
        }
    }

    #[test]
    fn sampling_recovers_forward() {
        let m = CanonicalModel::uniform();
        let est = estimate(&sample(&m, 1_000_000, 42)).unwrap();
        assert!(est.max_abs_diff(&forward(&m)) < 3e-3);
    }

    #[test]
    fn pz_does_not_move_forward_or_ace() {
        let m = random_model(9);
        let m2 = m.with_pz(0.1).unwrap();
        assert_eq!(forward(&m).cells(), forward(&m2).cells());
        assert_eq!(ace(&m), ace(&m2));
    }

    #[test]
    fn rejects_bad_models() {
        assert!(CanonicalModel::new([[0.1; 4]; 4], 0.5).is_err());
        let mut q = [[0.0; 4]; 4];
        q[0][0] = 1.5;
        q[0][1] = -0.5;
        assert!(CanonicalModel::new(q, 0.5).is_err());
        assert!(CanonicalModel::from_json(r#"{"q":[[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]],"pz":0.5}"#).is_ok());
        assert!(CanonicalModel::from_json(r#"{"q":[[2,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]],"pz":0.5}"#).is_err());
    }
}
