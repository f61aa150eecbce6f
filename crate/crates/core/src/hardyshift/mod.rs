//! Perturbations of the shift semigroup on `L²(0, ∞)` by finite Blaschke
//! products.
//!
//! A family `λ_1, …, λ_N` with `Re λ_k < 0` gives the exponentials
//! `f_n(x) = (−2Re λ_n)^{1/2} e^{λ_n x}`, their orthonormalization `g_n`
//! spanning `K₁`, the inner function `B(λ) = Π (λ + λ̄_k)/(λ − λ_k)` and the
//! isometry `Θ` with Laplace symbol `B`, whose range `K₀ = ΘK` is the
//! orthogonal complement of `K₁`. The approximating semigroup acts by phases
//! on `K₁` and as the shift on `K₀`.
//!
//! `K₀` here is the shift (completely nonunitary) part. The Wold routines name
//! their pieces `unitary` and `cnu` to avoid the clash with the usual labels.
//!
//! Closed forms are used wherever the integrals are exponential; a uniform grid
//! on `[0, T]` is used only for the dilations.

mod basis;
mod blaschke;
mod dilation;
mod theta;
mod wold;

pub use basis::{
    backward_shift_matrix, build_vt, defect_hs_norm, defect_increment, estimate_inequalities,
    gram_exponentials, orthogonalize, EstimateReport, EstimateRow, ExponentialBasis, VtData,
    MAX_CONDITION,
};
pub use blaschke::{blaschke_asymptotics, blaschke_eval, blaschke_minus_one, AsymptoticsReport};
pub use dilation::{unitary_dilation, DilationKind, DilationMatrix, GridDilation, ShiftModel};
pub use theta::{
    prop2_defect, prop2_elements, theta_apply, theta_minus_identity, window_inner, ExpCombination, ExpTerm,
    LaplacePairing, Prop2Element, Prop2Report,
};
pub use wold::{
    condition_n_check, condition_n_generator, wold_decompose, ConditionNReport, WoldDecomposition, CONDITION_N_GROWTH,
};

use crate::error::{Error, Result};
use crate::opalg::C64;

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ExponentialFamily {
    pub lambdas: Vec<C64>,
    pub radius: f64,
}

/// Outcome of checking `Re λ_k < 0`, `|Im λ_k| < R`, `Σ|Re λ_k| < ∞` and
/// pairwise distinctness, in that order.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(tag = "clause", rename_all = "kebab-case")]
pub enum Condition1 {
    Valid,
    NonNegativeRealPart { index: usize, value: C64 },
    ImaginaryPartOutsideRadius { index: usize, value: C64, radius: f64 },
    DivergentSum,
    Coincident { first: usize, second: usize },
}

impl Condition1 {
    pub fn is_valid(&self) -> bool {
        matches!(self, Condition1::Valid)
    }

    /// Clause number 1–3 of the condition, 4 for distinctness, 0 if valid.
    pub fn clause(&self) -> usize {
        match self {
            Condition1::Valid => 0,
            Condition1::NonNegativeRealPart { .. } => 1,
            Condition1::ImaginaryPartOutsideRadius { .. } => 2,
            Condition1::DivergentSum => 3,
            Condition1::Coincident { .. } => 4,
        }
    }
}

pub fn validate_condition1(family: &ExponentialFamily) -> Condition1 {
    for (index, &value) in family.lambdas.iter().enumerate() {
        if !(value.re < 0.0) {
            return Condition1::NonNegativeRealPart { index, value };
        }
    }
    for (index, &value) in family.lambdas.iter().enumerate() {
        if !(value.im.abs() < family.radius) {
            return Condition1::ImaginaryPartOutsideRadius {
                index,
                value,
                radius: family.radius,
            };
        }
    }
    if !family.s().is_finite() {
        return Condition1::DivergentSum;
    }
    for (i, a) in family.lambdas.iter().enumerate() {
        for (j, b) in family.lambdas.iter().enumerate().skip(i + 1) {
            if a == b {
                return Condition1::Coincident { first: i, second: j };
            }
        }
    }
    Condition1::Valid
}

impl ExponentialFamily {
    pub fn new(lambdas: Vec<C64>, radius: f64) -> Self {
        Self { lambdas, radius }
    }

    /// Family with radius just above the largest `|Im λ_k|`.
    pub fn with_auto_radius(lambdas: Vec<C64>) -> Self {
        let radius = lambdas.iter().fold(0.0_f64, |m, l| m.max(l.im.abs())) + 1.0;
        Self { lambdas, radius }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), 1.0)
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `s = −Σ Re λ_k`.
    pub fn s(&self) -> f64 {
        -self.lambdas.iter().map(|l| l.re).sum::<f64>()
    }

    pub fn require_valid(&self) -> Result<()> {
        match validate_condition1(self) {
            Condition1::Valid => Ok(()),
            other => Err(Error::InvalidFamily(format!("{other:?}"))),
        }
    }

    /// Residue of `B` at `λ_k`: `(λ_k + λ̄_k)·Π_{j≠k} (λ_k + λ̄_j)/(λ_k − λ_j)`.
    pub fn residue(&self, k: usize) -> C64 {
        let lk = self.lambdas[k];
        let mut r = lk + lk.conj();
        for (j, &lj) in self.lambdas.iter().enumerate() {
            if j != k {
                r *= (lk + lj.conj()) / (lk - lj);
            }
        }
        r
    }
}
