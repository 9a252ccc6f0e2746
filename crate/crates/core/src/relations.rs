//! Inequalities as LHS/RHS pairs with a saturation-aware status.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QmeasError, Result};
use crate::model::MeasurementModel;
use crate::operator::{commutator, ComplexOperator, PureState, Tolerances};
use crate::quantities::{HeisenbergFrame, QuantitySet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationId {
    /// σ(A)σ(B) ≥ ½|⟨[A,B]⟩|
    #[serde(rename = "R1_ROBERTSON")]
    Robertson,
    /// σ(M^out−A)σ(N^out−B) ≥ ½|⟨[A,B]⟩|
    #[serde(rename = "R2_ERROR_ERROR")]
    ErrorError,
    /// σ(M^out)σ(N^out) ≥ |⟨[A,B]⟩|
    #[serde(rename = "R3_ARTHURS_KELLY")]
    ArthursKelly,
    /// ε(A)η(B) ≥ ½|⟨[A,B]⟩|
    #[serde(rename = "R4_NAIVE_ED")]
    NaiveErrorDisturbance,
    /// εη + σ(A)η + εσ(B) ≥ ½|⟨[A,B]⟩|
    #[serde(rename = "R5_OZAWA")]
    Ozawa,
    /// (ε+σ(A))(η+σ(B)) ≥ |⟨[A,B]⟩|
    #[serde(rename = "R6_UV_HEISENBERG")]
    UniversalHeisenberg,
    /// σ(M^out)σ(B^out) ≥ |⟨[A,B]⟩|
    #[serde(rename = "R7_MOD_AK")]
    ModifiedArthursKelly,
    /// σ(M^out−A)σ(B^out−B) + σ(M^out−A)σ(B) + σ(A)σ(B^out−B) ≥ ½|⟨[A,B]⟩|
    #[serde(rename = "R8_SIGMA_SUM")]
    SigmaSum,
    /// (σ(M^out−A)+σ(A))(σ(B^out−B)+σ(B)) ≥ |⟨[A,B]⟩|
    #[serde(rename = "R9_SIGMA_PRODUCT_SUM")]
    SigmaProductSum,
    /// σ(M^out−A)σ(B^out−B) ≥ ½|⟨[M^out−A, B^out−B]⟩|
    #[serde(rename = "R10_BASE_DIFF")]
    BaseDifference,
    /// ε(A)ε(B) ≥ ½|⟨[A,B]⟩| with ε(B) read from the N pointer
    #[serde(rename = "R11_ERROR_ERROR_EPS")]
    ErrorErrorEps,
    /// ε(A)η(B) = 0 whenever ε(A) = 0
    #[serde(rename = "R12_PRECISE_ZERO")]
    PreciseZero,
    /// Δp Δx ≥ (ħ/2)|1 − L|ψ(L/2)|²| on a periodic interval
    #[serde(rename = "BOX_PX")]
    BoxPx,
}

impl RelationId {
    /// The measurement-model relations, in report order.
    pub const MODEL_SUITE: [RelationId; 12] = [
        RelationId::Robertson,
        RelationId::ErrorError,
        RelationId::ArthursKelly,
        RelationId::NaiveErrorDisturbance,
        RelationId::Ozawa,
        RelationId::UniversalHeisenberg,
        RelationId::ModifiedArthursKelly,
        RelationId::SigmaSum,
        RelationId::SigmaProductSum,
        RelationId::BaseDifference,
        RelationId::ErrorErrorEps,
        RelationId::PreciseZero,
    ];

    pub fn code(self) -> &'static str {
        match self {
            RelationId::Robertson => "R1_ROBERTSON",
            RelationId::ErrorError => "R2_ERROR_ERROR",
            RelationId::ArthursKelly => "R3_ARTHURS_KELLY",
            RelationId::NaiveErrorDisturbance => "R4_NAIVE_ED",
            RelationId::Ozawa => "R5_OZAWA",
            RelationId::UniversalHeisenberg => "R6_UV_HEISENBERG",
            RelationId::ModifiedArthursKelly => "R7_MOD_AK",
            RelationId::SigmaSum => "R8_SIGMA_SUM",
            RelationId::SigmaProductSum => "R9_SIGMA_PRODUCT_SUM",
            RelationId::BaseDifference => "R10_BASE_DIFF",
            RelationId::ErrorErrorEps => "R11_ERROR_ERROR_EPS",
            RelationId::PreciseZero => "R12_PRECISE_ZERO",
            RelationId::BoxPx => "BOX_PX",
        }
    }

    pub fn parse(code: &str) -> Option<Self> {
        Self::MODEL_SUITE
            .iter()
            .chain(std::iter::once(&RelationId::BoxPx))
            .copied()
            .find(|id| id.code().eq_ignore_ascii_case(code) || id.code().split('_').next() == Some(code))
    }

    pub fn universality(self) -> Universality {
        match self {
            RelationId::ErrorError
            | RelationId::ArthursKelly
            | RelationId::NaiveErrorDisturbance
            | RelationId::ModifiedArthursKelly
            | RelationId::ErrorErrorEps => Universality::Conditional,
            _ => Universality::Universal,
        }
    }

    /// Needs a model exposing both pointers M and N.
    pub fn needs_second_pointer(self) -> bool {
        matches!(
            self,
            RelationId::ErrorError | RelationId::ArthursKelly | RelationId::ErrorErrorEps
        )
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Universality {
    Universal,
    Conditional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationStatus {
    Satisfied,
    Saturated,
    Violated,
}

impl RelationStatus {
    pub fn token(self) -> &'static str {
        match self {
            RelationStatus::Satisfied => "satisfied",
            RelationStatus::Saturated => "saturated",
            RelationStatus::Violated => "violated",
        }
    }

    /// Classifies `margin = lhs − rhs` against the band `tol·max(1, rhs)`.
    pub fn classify(margin: f64, rhs: f64, tol_rel: f64) -> Self {
        let band = tol_rel * rhs.max(1.0);
        if margin.abs() <= band {
            RelationStatus::Saturated
        } else if margin < -band {
            RelationStatus::Violated
        } else {
            RelationStatus::Satisfied
        }
    }
}

impl fmt::Display for RelationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub id: RelationId,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub status: RelationStatus,
    pub universality: Universality,
}

impl RelationReport {
    pub fn new(id: RelationId, lhs: f64, rhs: f64, tol_rel: f64) -> Self {
        let margin = lhs - rhs;
        Self {
            id,
            lhs,
            rhs,
            margin,
            status: RelationStatus::classify(margin, rhs, tol_rel),
            universality: id.universality(),
        }
    }

    pub fn is_violated(&self) -> bool {
        self.status == RelationStatus::Violated
    }

    /// Violation of a relation that must hold on every instance.
    pub fn is_universal_violation(&self) -> bool {
        self.is_violated() && self.universality == Universality::Universal
    }
}

/// Reports plus the relations that could not be evaluated, with reasons.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reports: Vec<RelationReport>,
    pub skipped: Vec<SkippedRelation>,
}

impl SuiteReport {
    pub fn get(&self, id: RelationId) -> Option<&RelationReport> {
        self.reports.iter().find(|r| r.id == id)
    }

    pub fn universal_violations(&self) -> impl Iterator<Item = &RelationReport> {
        self.reports.iter().filter(|r| r.is_universal_violation())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedRelation {
    pub id: RelationId,
    pub reason: String,
}

/// Evaluates one relation from a prepared frame and quantity set.
pub fn evaluate_in_frame(
    id: RelationId,
    q: &QuantitySet,
    frame: &HeisenbergFrame,
    tol: &Tolerances,
) -> Result<RelationReport> {
    let (lhs, rhs) = match id {
        RelationId::Robertson => (q.sigma_a * q.sigma_b, q.bound_half),
        RelationId::ErrorError => (
            q.sigma_m_minus_a * second_pointer(q.sigma_n_minus_b)?,
            q.bound_half,
        ),
        RelationId::ArthursKelly => (q.sigma_mout * second_pointer(q.sigma_nout)?, q.bound_full),
        RelationId::NaiveErrorDisturbance => (q.eps_a * q.eta_b, q.bound_half),
        RelationId::Ozawa => (
            q.eps_a * q.eta_b + q.sigma_a * q.eta_b + q.eps_a * q.sigma_b,
            q.bound_half,
        ),
        RelationId::UniversalHeisenberg => (q.bar_eps_a * q.bar_eta_b, q.bound_full),
        RelationId::ModifiedArthursKelly => (q.sigma_mout * q.sigma_bout, q.bound_full),
        RelationId::SigmaSum => {
            let (x, y) = (q.sigma_m_minus_a, q.sigma_b_shift);
            (x * y + x * q.sigma_b + q.sigma_a * y, q.bound_half)
        }
        RelationId::SigmaProductSum => (
            (q.sigma_m_minus_a + q.sigma_a) * (q.sigma_b_shift + q.sigma_b),
            q.bound_full,
        ),
        RelationId::BaseDifference => {
            let c = commutator(&frame.m_minus_a(), &frame.b_shift()?)?;
            (
                q.sigma_m_minus_a * q.sigma_b_shift,
                0.5 * frame.mean(&c).norm(),
            )
        }
        RelationId::ErrorErrorEps => (q.eps_a * second_pointer(q.eps_b)?, q.bound_half),
        RelationId::PreciseZero => {
            if q.eps_a > tol.tol_alg {
                return Err(QmeasError::Validation(format!(
                    "measurement of A is not precise (eps = {:.3e})",
                    q.eps_a
                )));
            }
            (q.eps_a * q.eta_b, 0.0)
        }
        RelationId::BoxPx => {
            return Err(QmeasError::Validation(
                "BOX_PX is evaluated on box states, not measurement models".into(),
            ))
        }
    };
    Ok(RelationReport::new(id, lhs, rhs, tol.tol_rel))
}

fn second_pointer(v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| QmeasError::MissingPointer(crate::model::POINTER_N.to_string()))
}

/// One relation on one instance.
pub fn evaluate(
    id: RelationId,
    q: &QuantitySet,
    model: &MeasurementModel,
    a: &ComplexOperator,
    b: &ComplexOperator,
    psi: &PureState,
    tol: &Tolerances,
) -> Result<RelationReport> {
    let frame = HeisenbergFrame::new(model, a, b, psi)?;
    evaluate_in_frame(id, q, &frame, tol)
}

/// The requested relations, ordered by id; failures are recorded as skips.
pub fn evaluate_all(
    model: &MeasurementModel,
    a: &ComplexOperator,
    b: &ComplexOperator,
    psi: &PureState,
    which: &[RelationId],
    tol: &Tolerances,
) -> Result<(QuantitySet, SuiteReport)> {
    let frame = HeisenbergFrame::new(model, a, b, psi)?;
    let q = QuantitySet::from_frame(&frame)?;
    let mut ids = which.to_vec();
    ids.sort();
    ids.dedup();
    let mut suite = SuiteReport::default();
    for id in ids {
        match evaluate_in_frame(id, &q, &frame, tol) {
            Ok(r) => suite.reports.push(r),
            Err(e) => suite.skipped.push(SkippedRelation {
                id,
                reason: e.to_string(),
            }),
        }
    }
    Ok((q, suite))
}
