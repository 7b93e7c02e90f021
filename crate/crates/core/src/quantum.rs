//! Latent factors described by a quantum state.
//!
//! A patient is a state `rho` on `C^{dim_a} (x) C^{dim_b}`. The advice acts as a
//! unital channel `G_z`, the decision is a two-outcome instrument `(D0, D1)`,
//! the (non-)treatment acts as a unital channel `E_x` and recovery is the
//! effect `m`. In the observable picture
//!
//! ```text
//! P(y1, x_k | z_j) = rho(G_j D_k E_k (m))        (observed, k = l)
//! rho(G_j D_k E_l (m))                           (counterfactual, k != l)
//! ACE = rho(G_1 D(m_1)) - rho(G_1 D(m_0)),       m_l = E_l(m), D = D0 + D1
//! ```
//!
//! The exclusion restriction `rho(G_1 D(m_l)) = rho(G_0 D(m_l))` is what the
//! surviving bounds need; structured models (advice and decision on the first
//! factor, treatment and recovery on the second) satisfy it exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{random_hermitian, random_unit_vector, random_unitary, ComplexMatrix};
use crate::operator::{DensityState, Effect, Instrument, KrausMap};
use crate::trial_data::ObservedDistribution;
use crate::{Error, Result};

/// Exclusion residual above which a model is inadmissible.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumLatentModel {
    dim_a: usize,
    dim_b: usize,
    rho: DensityState,
    g0: KrausMap,
    g1: KrausMap,
    d0: KrausMap,
    d1: KrausMap,
    e0: KrausMap,
    e1: KrausMap,
    m: Effect,
    structured: bool,
}

/// JSON layout of a model file.
#[derive(Deserialize)]
struct ModelFile {
    dim_a: usize,
    dim_b: usize,
    rho: DensityState,
    g0: KrausMap,
    g1: KrausMap,
    d0: KrausMap,
    d1: KrausMap,
    e0: KrausMap,
    e1: KrausMap,
    m: Effect,
    #[serde(default)]
    structured: bool,
}

/// Operator and scalar value of an operator-inequality certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    /// Smallest eigenvalue of the certificate operator `C`.
    pub min_eigenvalue: f64,
    /// `rho(C)`.
    pub state_value: f64,
}

impl QuantumLatentModel {
    /// General model from full-space channels. `advice = [G0, G1]`, `drug = [E0, E1]`.
    pub fn new(
        dim_a: usize,
        dim_b: usize,
        rho: DensityState,
        advice: [KrausMap; 2],
        decision: Instrument,
        drug: [KrausMap; 2],
        m: Effect,
    ) -> Result<Self> {
        let [g0, g1] = advice;
        let [e0, e1] = drug;
        let d0 = decision.branch(0).clone();
        let d1 = decision.branch(1).clone();
        let model = Self { dim_a, dim_b, rho, g0, g1, d0, d1, e0, e1, m, structured: false };
        model.check_consistency()?;
        Ok(model)
    }

    /// Structured model: `advice` and `decision` act on the first factor,
    /// `drug` and `m` on the second; they are lifted by tensoring with identities.
    pub fn structured(
        rho: DensityState,
        advice: [KrausMap; 2],
        decision: Instrument,
        drug: [KrausMap; 2],
        m: Effect,
    ) -> Result<Self> {
        let dim_a = decision.dim();
        let dim_b = m.matrix().dim();
        let lift_a = |k: &KrausMap| k.on_first(dim_b);
        let lift_b = |k: &KrausMap| k.on_second(dim_a);
        let m_full = Effect::new(ComplexMatrix::identity(dim_a).kron(m.matrix()))?;
        let model = Self {
            dim_a,
            dim_b,
            rho,
            g0: lift_a(&advice[0]),
            g1: lift_a(&advice[1]),
            d0: lift_a(decision.branch(0)),
            d1: lift_a(decision.branch(1)),
            e0: lift_b(&drug[0]),
            e1: lift_b(&drug[1]),
            m: m_full,
            structured: true,
        };
        model.check_consistency()?;
        Ok(model)
    }

    fn check_consistency(&self) -> Result<()> {
        let n = self.dim_a * self.dim_b;
        if self.dim_a == 0 || self.dim_b == 0 {
            return Err(Error::InvalidModel("dimensions must be positive".into()));
        }
        for (name, dim) in [
            ("rho", self.rho.dim()),
            ("G0", self.g0.dim()),
            ("G1", self.g1.dim()),
            ("D0", self.d0.dim()),
            ("D1", self.d1.dim()),
            ("E0", self.e0.dim()),
            ("E1", self.e1.dim()),
            ("m", self.m.matrix().dim()),
        ] {
            if dim != n {
                return Err(Error::InvalidModel(format!("{name} has dimension {dim}, expected {n}")));
            }
        }
        for (name, map) in [("G0", &self.g0), ("G1", &self.g1), ("E0", &self.e0), ("E1", &self.e1)] {
            if !map.is_unital() {
                return Err(Error::InvalidModel(format!("{name} is not unital")));
            }
        }
        Instrument::new(self.d0.clone(), self.d1.clone())?;
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn is_structured(&self) -> bool {
        self.structured
    }

    pub fn state(&self) -> &DensityState {
        &self.rho
    }

    pub fn recovery_effect(&self) -> &Effect {
        &self.m
    }

    pub fn advice(&self, j: usize) -> &KrausMap {
        if j == 0 {
            &self.g0
        } else {
            &self.g1
        }
    }

    pub fn decision_branch(&self, k: usize) -> &KrausMap {
        if k == 0 {
            &self.d0
        } else {
            &self.d1
        }
    }

    pub fn drug(&self, l: usize) -> &KrausMap {
        if l == 0 {
            &self.e0
        } else {
            &self.e1
        }
    }

    fn total_decision(&self) -> KrausMap {
        self.d0.sum(&self.d1).expect("consistent dimensions")
    }

    /// Same model with the state replaced.
    pub fn with_state(&self, rho: DensityState) -> Result<Self> {
        if rho.dim() != self.rho.dim() {
            return Err(Error::DimMismatch { expected: self.rho.dim(), got: rho.dim() });
        }
        Ok(Self { rho, ..self.clone() })
    }

    /// `m_l = E_l(m)`.
    pub fn treated_effect(&self, l: usize) -> ComplexMatrix {
        self.drug(l).apply(self.m.matrix()).expect("consistent dimensions")
    }

    /// `G_j D_k (a)`.
    fn advice_decision(&self, j: usize, k: usize, a: &ComplexMatrix) -> ComplexMatrix {
        let inner = self.decision_branch(k).apply(a).expect("consistent dimensions");
        self.advice(j).apply(&inner).expect("consistent dimensions")
    }

    /// `G_j D (a)` with `D = D0 + D1`.
    fn advice_total(&self, j: usize, a: &ComplexMatrix) -> ComplexMatrix {
        let inner = self.total_decision().apply(a).expect("consistent dimensions");
        self.advice(j).apply(&inner).expect("consistent dimensions")
    }

    fn expect(&self, a: &ComplexMatrix) -> f64 {
        self.rho.expect_real(a).expect("consistent dimensions")
    }

    fn identity(&self) -> ComplexMatrix {
        ComplexMatrix::identity(self.dim_a * self.dim_b)
    }

    /// `max_l |rho(G_1 D(m_l)) - rho(G_0 D(m_l))|`.
    pub fn exclusion_residual(&self) -> f64 {
        (0..2)
            .map(|l| {
                let ml = self.treated_effect(l);
                (self.expect(&self.advice_total(1, &ml)) - self.expect(&self.advice_total(0, &ml))).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_admissible(&self, tol: f64) -> bool {
        self.exclusion_residual() <= tol
    }

    fn ensure_admissible(&self) -> Result<()> {
        let residual = self.exclusion_residual();
        if residual > ADMISSIBILITY_TOL {
            return Err(Error::InadmissibleModel { residual, tol: ADMISSIBILITY_TOL });
        }
        Ok(())
    }

    /// `P(y, x | z)` generated by the model; `pz` is carried through.
    pub fn observed_distribution(&self, pz: f64) -> Result<ObservedDistribution> {
        self.ensure_admissible()?;
        let one = self.identity();
        let mut p = [[[0.0; 2]; 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                let mk = self.treated_effect(k);
                let not_mk = &one - &mk;
                p[1][k][j] = self.expect(&self.advice_decision(j, k, &mk));
                p[0][k][j] = self.expect(&self.advice_decision(j, k, &not_mk));
            }
        }
        ObservedDistribution::new(p, pz)
    }

    /// `rho(G_j D_k E_l (m))`.
    pub fn counterfactual(&self, j: usize, k: usize, l: usize) -> Result<f64> {
        self.ensure_admissible()?;
        Ok(self.expect(&self.advice_decision(j, k, &self.treated_effect(l))))
    }

    /// `rho(G_1 D(m_1)) - rho(G_1 D(m_0))`.
    pub fn quantum_ace(&self) -> Result<f64> {
        self.ensure_admissible()?;
        Ok(self.ace_with_advice(1))
    }

    /// ACE evaluated through advice channel `j`; the two agree under exclusion.
    pub fn ace_with_advice(&self, j: usize) -> f64 {
        let m1 = self.treated_effect(1);
        let m0 = self.treated_effect(0);
        self.expect(&self.advice_total(j, &m1)) - self.expect(&self.advice_total(j, &m0))
    }

    fn certificate_of(&self, c: ComplexMatrix) -> Result<Certificate> {
        Ok(Certificate { min_eigenvalue: c.min_eigenvalue(1e-9)?, state_value: self.expect(&c) })
    }

    /// Certificate for the first lower bound:
    /// `C = 1 + G1 D(m1) - G1 D(m0) - G1 D1(m1) - G0 D0(1 - m0)`, so that
    /// `rho(C) = ACE - (P(y1,x1|z1) + P(y0,x0|z0) - 1)`.
    pub fn certificate_group1(&self) -> Result<Certificate> {
        self.ensure_admissible()?;
        let one = self.identity();
        let m1 = self.treated_effect(1);
        let m0 = self.treated_effect(0);
        let not_m0 = &one - &m0;
        let c = &(&(&(&one + &self.advice_total(1, &m1)) - &self.advice_total(1, &m0))
            - &self.advice_decision(1, 1, &m1))
            - &self.advice_decision(0, 0, &not_m0);
        self.certificate_of(c)
    }

    /// Certificate for the natural lower bound: `G1 D0(m1) + G0 D1(1 - m0)`.
    pub fn certificate_natural(&self) -> Result<Certificate> {
        self.ensure_admissible()?;
        let one = self.identity();
        let m1 = self.treated_effect(1);
        let not_m0 = &one - &self.treated_effect(0);
        let c = &self.advice_decision(1, 0, &m1) + &self.advice_decision(0, 1, &not_m0);
        self.certificate_of(c)
    }

    /// Relabels the advice: `G0 <-> G1`.
    pub fn swap_advice(&self) -> Self {
        Self { g0: self.g1.clone(), g1: self.g0.clone(), ..self.clone() }
    }

    /// Uses advice channel `j` for both advice values.
    pub fn fix_advice(&self, j: usize) -> Self {
        let g = self.advice(j).clone();
        Self { g0: g.clone(), g1: g, ..self.clone() }
    }

    /// Joint relabeling of treatment and outcome: `D0 <-> D1`, `E0 <-> E1`,
    /// `m -> 1 - m`, which sends `m_1 -> 1 - m_0` and `m_0 -> 1 - m_1`.
    pub fn relabel_treatment_outcome(&self) -> Self {
        Self {
            d0: self.d1.clone(),
            d1: self.d0.clone(),
            e0: self.e1.clone(),
            e1: self.e0.clone(),
            m: self.m.complement(),
            ..self.clone()
        }
    }

    /// Outcome relabeling alone: `m -> 1 - m` (flips the sign of the ACE).
    pub fn relabel_outcome(&self) -> Self {
        Self { m: self.m.complement(), ..self.clone() }
    }

    /// Certificates for lower bounds 1, 2, 5 and 6, each obtained by running
    /// [`Self::certificate_group1`] on a substituted model: identity, advice
    /// swap, advice fixed to `G1`, advice fixed to `G0`.
    pub fn group_certificates(&self) -> Result<[(usize, Certificate); 4]> {
        self.ensure_admissible()?;
        Ok([
            (1, self.certificate_group1()?),
            (2, self.swap_advice().certificate_group1()?),
            (5, self.fix_advice(1).certificate_group1()?),
            (6, self.fix_advice(0).certificate_group1()?),
        ])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    /// Loads a model file. The exclusion restriction is re-verified for
    /// models flagged as structured.
    pub fn from_json(s: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(s)?;
        let model = Self {
            dim_a: f.dim_a,
            dim_b: f.dim_b,
            rho: f.rho,
            g0: f.g0,
            g1: f.g1,
            d0: f.d0,
            d1: f.d1,
            e0: f.e0,
            e1: f.e1,
            m: f.m,
            structured: f.structured,
        };
        model.check_consistency()?;
        if model.structured && !model.is_admissible(ADMISSIBILITY_TOL) {
            return Err(Error::InvalidModel(format!(
                "model is flagged structured but its exclusion residual is {:.3e}",
                model.exclusion_residual()
            )));
        }
        Ok(model)
    }
}

/// Exclusion residual of a model (see [`QuantumLatentModel::exclusion_residual`]).
pub fn check_exclusion(model: &QuantumLatentModel) -> f64 {
    model.exclusion_residual()
}

/// Random structured model with a pure entangled state.
pub fn random_model(seed: u64, dim_a: usize, dim_b: usize) -> QuantumLatentModel {
    random_model_mixed(seed, dim_a, dim_b, 0.0)
}

/// Random structured model whose state is mixed with weight `w` of the
/// maximally mixed state.
///
/// `G_j` are Haar-random unitary conjugations and `D` a randomly rotated
/// projective split on the first factor; `E_l` are Haar-random unitary
/// conjugations and `m` a random Hermitian matrix rescaled to spectrum
/// `[0, 1]` on the second factor.
pub fn random_model_mixed(seed: u64, dim_a: usize, dim_b: usize, w: f64) -> QuantumLatentModel {
    assert!(dim_a >= 2 && dim_b >= 2, "both factors need dimension >= 2");
    assert!((0.0..=1.0).contains(&w), "mixing weight must lie in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dim_a * dim_b;

    let psi = random_unit_vector(n, &mut rng);
    let rho = DensityState::pure(&psi).expect("unit vector gives a state");
    let rho = if w > 0.0 { rho.mixed_with_identity(w).expect("convex mixture of states") } else { rho };

    let advice = [0, 1].map(|_| KrausMap::conjugation(random_unitary(dim_a, &mut rng)));

    let rank = rng.random_range(1..dim_a);
    let v = random_unitary(dim_a, &mut rng);
    let diag: Vec<f64> = (0..dim_a).map(|i| if i < rank { 1.0 } else { 0.0 }).collect();
    let proj = &(&v * &ComplexMatrix::diag(&diag)) * &v.adjoint();
    let decision = Instrument::projective(&proj).expect("projector splits the identity");

    let drug = [0, 1].map(|_| KrausMap::conjugation(random_unitary(dim_b, &mut rng)));

    let h = random_hermitian(dim_b, &mut rng);
    let ev = h.hermitian_eigenvalues(1e-10).expect("Hermitian by construction");
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let span = (hi - lo).max(1e-12);
    let m = (&h - &ComplexMatrix::identity(dim_b).scale(lo)).scale(1.0 / span);
    // Clamp the spectrum endpoints against round-off from the rescale.
    let m = Effect::with_tol(m, 1e-10, 1e-8).expect("spectrum rescaled to [0, 1]");

    QuantumLatentModel::structured(rho, advice, decision, drug, m).expect("structured model is consistent")
}
