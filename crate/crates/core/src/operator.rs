//! States, effects and completely positive maps on finite-dimensional
//! matrix algebras, in the observable (Heisenberg) picture: a map acts on
//! observables as `a -> sum_i K_i^dag a K_i`, and a state is evaluated as
//! `rho(a) = tr(rho a)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use crate::linalg::ComplexMatrix;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const SPECTRUM_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-10;
pub const UNITAL_TOL: f64 = 1e-9;

/// Kronecker product `a (x) b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    h.min_eigenvalue(HERMITIAN_TOL)
}

/// A yes-no measurement `0 <= m <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct Effect(ComplexMatrix);

impl Effect {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tol(m, HERMITIAN_TOL, SPECTRUM_TOL)
    }

    pub fn with_tol(m: ComplexMatrix, herm_tol: f64, spectrum_tol: f64) -> Result<Self> {
        let ev = m.hermitian_eigenvalues(herm_tol)?;
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if lo < -spectrum_tol || hi > 1.0 + spectrum_tol {
            return Err(Error::InvalidOperator(format!("effect spectrum [{lo}, {hi}] not inside [0, 1]")));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// `1 - m`.
    pub fn complement(&self) -> Self {
        Self(&ComplexMatrix::identity(self.0.dim()) - &self.0)
    }
}

impl TryFrom<ComplexMatrix> for Effect {
    type Error = Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<Effect> for ComplexMatrix {
    fn from(e: Effect) -> Self {
        e.0
    }
}

/// Density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityState(ComplexMatrix);

impl DensityState {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        Self::with_tol(rho, HERMITIAN_TOL, SPECTRUM_TOL, TRACE_TOL)
    }

    pub fn with_tol(rho: ComplexMatrix, herm_tol: f64, psd_tol: f64, trace_tol: f64) -> Result<Self> {
        let lo = rho.min_eigenvalue(herm_tol)?;
        if lo < -psd_tol {
            return Err(Error::InvalidOperator(format!("state has negative eigenvalue {lo}")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::InvalidOperator(format!("state has trace {tr}")));
        }
        Ok(Self(rho))
    }

    /// Pure state `|v><v|` for a unit vector `v`.
    pub fn pure(v: &[Complex64]) -> Result<Self> {
        Self::new(ComplexMatrix::outer(v))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `rho(a) = tr(rho a)`.
    pub fn expectation(&self, a: &ComplexMatrix) -> Result<Complex64> {
        expectation(self, a)
    }

    /// `rho(a)` for Hermitian `a`, as a real number.
    pub fn expect_real(&self, a: &ComplexMatrix) -> Result<f64> {
        Ok(expectation(self, a)?.re)
    }

    /// `rho (x) sigma`.
    pub fn product(&self, other: &DensityState) -> DensityState {
        DensityState(self.0.kron(&other.0))
    }

    /// `(1 - w) rho + w 1/d`.
    pub fn mixed_with_identity(&self, w: f64) -> Result<DensityState> {
        let mix = DensityState::maximally_mixed(self.dim());
        DensityState::new(&self.0.scale(1.0 - w) + &mix.0.scale(w))
    }
}

impl TryFrom<ComplexMatrix> for DensityState {
    type Error = Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityState> for ComplexMatrix {
    fn from(s: DensityState) -> Self {
        s.0
    }
}

/// `tr(rho a)`.
pub fn expectation(state: &DensityState, a: &ComplexMatrix) -> Result<Complex64> {
    let rho = &state.0;
    if rho.dim() != a.dim() {
        return Err(Error::DimMismatch { expected: rho.dim(), got: a.dim() });
    }
    let n = rho.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += rho[(i, k)] * a[(k, i)];
        }
    }
    Ok(acc)
}

/// Completely positive map in Kraus form, acting on observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComplexMatrix>", into = "Vec<ComplexMatrix>")]
pub struct KrausMap {
    kraus: Vec<ComplexMatrix>,
}

impl KrausMap {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::InvalidOperator("a Kraus map needs at least one operator".into()));
        };
        let dim = first.dim();
        if let Some(bad) = kraus.iter().find(|k| k.dim() != dim) {
            return Err(Error::DimMismatch { expected: dim, got: bad.dim() });
        }
        Ok(Self { kraus })
    }

    /// Like [`KrausMap::new`] but rejects maps with `Phi(1) != 1`.
    pub fn unital(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let map = Self::new(kraus)?;
        let dev = map.unitality_deviation();
        if dev > UNITAL_TOL {
            return Err(Error::InvalidOperator(format!("map is not unital (deviation {dev:.3e})")));
        }
        Ok(map)
    }

    pub fn identity(dim: usize) -> Self {
        Self { kraus: vec![ComplexMatrix::identity(dim)] }
    }

    /// `a -> u^dag a u`.
    pub fn conjugation(u: ComplexMatrix) -> Self {
        Self { kraus: vec![u] }
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].dim()
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `Phi(1) = sum_i K_i^dag K_i`.
    pub fn image_of_identity(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim());
        for k in &self.kraus {
            acc = &acc + &(&k.adjoint() * k);
        }
        acc
    }

    pub fn unitality_deviation(&self) -> f64 {
        self.image_of_identity().max_abs_diff(&ComplexMatrix::identity(self.dim()))
    }

    pub fn is_unital(&self) -> bool {
        self.unitality_deviation() <= UNITAL_TOL
    }

    /// `Phi(a)`.
    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_map(self, a)
    }

    /// The map `a -> Phi(a) + Psi(a)`.
    pub fn sum(&self, other: &KrausMap) -> Result<KrausMap> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), got: other.dim() });
        }
        let mut kraus = self.kraus.clone();
        kraus.extend(other.kraus.iter().cloned());
        Ok(KrausMap { kraus })
    }

    /// Lifts to the first factor: `K -> K (x) 1_{dim_b}`.
    pub fn on_first(&self, dim_b: usize) -> KrausMap {
        let id = ComplexMatrix::identity(dim_b);
        KrausMap { kraus: self.kraus.iter().map(|k| k.kron(&id)).collect() }
    }

    /// Lifts to the second factor: `K -> 1_{dim_a} (x) K`.
    pub fn on_second(&self, dim_a: usize) -> KrausMap {
        let id = ComplexMatrix::identity(dim_a);
        KrausMap { kraus: self.kraus.iter().map(|k| id.kron(k)).collect() }
    }
}

impl TryFrom<Vec<ComplexMatrix>> for KrausMap {
    type Error = Error;
    fn try_from(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(kraus)
    }
}

impl From<KrausMap> for Vec<ComplexMatrix> {
    fn from(m: KrausMap) -> Self {
        m.kraus
    }
}

/// `sum_i K_i^dag a K_i`.
pub fn apply_map(phi: &KrausMap, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if phi.dim() != a.dim() {
        return Err(Error::DimMismatch { expected: phi.dim(), got: a.dim() });
    }
    let mut acc = ComplexMatrix::zeros(a.dim());
    for k in &phi.kraus {
        acc = &acc + &(&(&k.adjoint() * a) * k);
    }
    Ok(acc)
}

/// Two-outcome instrument: branches `D0`, `D1` with `D0(1) + D1(1) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[KrausMap; 2]", into = "[KrausMap; 2]")]
pub struct Instrument {
    branches: [KrausMap; 2],
}

impl Instrument {
    pub fn new(d0: KrausMap, d1: KrausMap) -> Result<Self> {
        if d0.dim() != d1.dim() {
            return Err(Error::DimMismatch { expected: d0.dim(), got: d1.dim() });
        }
        let total = &d0.image_of_identity() + &d1.image_of_identity();
        let dev = total.max_abs_diff(&ComplexMatrix::identity(d0.dim()));
        if dev > UNITAL_TOL {
            return Err(Error::InvalidOperator(format!("instrument POVM does not sum to 1 (deviation {dev:.3e})")));
        }
        Ok(Self { branches: [d0, d1] })
    }

    /// Projective instrument with Kraus operators `1 - P` (outcome 0) and `P` (outcome 1).
    pub fn projective(p: &ComplexMatrix) -> Result<Self> {
        let q = &ComplexMatrix::identity(p.dim()) - p;
        Self::new(KrausMap::new(vec![q])?, KrausMap::new(vec![p.clone()])?)
    }

    pub fn branch(&self, k: usize) -> &KrausMap {
        &self.branches[k]
    }

    pub fn dim(&self) -> usize {
        self.branches[0].dim()
    }

    /// The non-selective map `D = D0 + D1`.
    pub fn total(&self) -> KrausMap {
        self.branches[0].sum(&self.branches[1]).expect("branches share a dimension")
    }

    /// POVM element `D_k(1)`.
    pub fn povm(&self, k: usize) -> ComplexMatrix {
        self.branches[k].image_of_identity()
    }

    /// The same instrument with outcome labels exchanged.
    pub fn relabeled(&self) -> Self {
        Self { branches: [self.branches[1].clone(), self.branches[0].clone()] }
    }
}

impl TryFrom<[KrausMap; 2]> for Instrument {
    type Error = Error;
    fn try_from([d0, d1]: [KrausMap; 2]) -> Result<Self> {
        Self::new(d0, d1)
    }
}

impl From<Instrument> for [KrausMap; 2] {
    fn from(i: Instrument) -> Self {
        i.branches
    }
}
