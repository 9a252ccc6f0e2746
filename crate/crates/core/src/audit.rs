//! Operator-level unbiasedness checks and the precise-measurement /
//! unbiased-disturbance inconsistency certificate.
//!
//! "Unbiased for every system state" is decided on the reduced operator
//! `⟨ξ|X|ξ⟩`: by the polarization identity, `⟨ψ⊗ξ|X|ψ⊗ξ⟩ = 0` for all ψ
//! holds exactly when that operator vanishes. State sampling is kept only as
//! a cross-check.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::MeasurementModel;
use crate::operator::{commutator, expectation, ComplexOperator, PureState, Tolerances};
use crate::quantities::error_epsilon;
use crate::random::{instance_rng, random_state};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub observable_label: String,
    pub reduced_deviation_norm: f64,
    pub is_unbiased: bool,
}

impl BiasReport {
    fn new(label: &str, norm: f64, tol_alg: f64) -> Self {
        Self {
            observable_label: label.to_string(),
            reduced_deviation_norm: norm,
            is_unbiased: norm <= tol_alg,
        }
    }
}

/// `⟨ξ|X_total|ξ⟩` as an operator on the system.
pub fn reduce_to_system(model: &MeasurementModel, x_total: &ComplexOperator) -> Result<ComplexOperator> {
    model.reduce_to_system(x_total)
}

/// Operator norm of `⟨ξ|M^out − A⊗1|ξ⟩`.
pub fn measurement_bias(model: &MeasurementModel, a: &ComplexOperator) -> Result<f64> {
    let diff = &model.m_out()? - &model.lift_system(a)?;
    Ok(model.reduce_to_system(&diff)?.operator_norm())
}

/// Operator norm of `⟨ξ|B^out − B⊗1|ξ⟩`.
pub fn disturbance_bias(model: &MeasurementModel, b: &ComplexOperator) -> Result<f64> {
    let diff = &model.b_out(b)? - &model.lift_system(b)?;
    Ok(model.reduce_to_system(&diff)?.operator_norm())
}

pub fn check_unbiased_measurement(
    model: &MeasurementModel,
    a: &ComplexOperator,
    tol: &Tolerances,
) -> Result<BiasReport> {
    Ok(BiasReport::new("M^out - A", measurement_bias(model, a)?, tol.tol_alg))
}

pub fn check_unbiased_disturbance(
    model: &MeasurementModel,
    b: &ComplexOperator,
    tol: &Tolerances,
) -> Result<BiasReport> {
    Ok(BiasReport::new("B^out - B", disturbance_bias(model, b)?, tol.tol_alg))
}

/// Largest `|⟨ψ⊗ξ|X|ψ⊗ξ⟩|` over seeded random system states.
pub fn sampled_bias(model: &MeasurementModel, x_total: &ComplexOperator, trials: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for t in 0..trials {
        let psi = random_state(model.d_sys(), &mut instance_rng(seed, t as u64));
        let full = model.joint_state(&psi)?.full;
        worst = worst.max(expectation(x_total, &full)?.norm());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum StrongConsequence {
    /// `max |⟨(M^out−A)(B⊗1)⟩|` and `max |⟨(B⊗1)(M^out−A)⟩|` over the trials,
    /// plus the operator norm of the reduced product.
    Checked {
        max_forward: f64,
        max_reversed: f64,
        reduced_norm: f64,
    },
    /// The model is not unbiased for A, so the identity is not expected.
    Skipped { reason: String, bias: f64 },
}

impl StrongConsequence {
    pub fn max_deviation(&self) -> Option<f64> {
        match self {
            StrongConsequence::Checked {
                max_forward,
                max_reversed,
                ..
            } => Some(max_forward.max(*max_reversed)),
            StrongConsequence::Skipped { .. } => None,
        }
    }
}

/// `⟨(M^out−A)B⟩ = ⟨B(M^out−A)⟩ = 0` for an unbiased measurement of `A`.
pub fn strong_consequence_check(
    model: &MeasurementModel,
    a: &ComplexOperator,
    b: &ComplexOperator,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<StrongConsequence> {
    let bias = measurement_bias(model, a)?;
    if bias > tol.tol_alg {
        return Ok(StrongConsequence::Skipped {
            reason: format!("model is biased for A (reduced deviation norm {bias:.3e})"),
            bias,
        });
    }
    let diff = &model.m_out()? - &model.lift_system(a)?;
    let b_total = model.lift_system(b)?;
    let forward = &diff * &b_total;
    let reversed = &b_total * &diff;
    Ok(StrongConsequence::Checked {
        max_forward: sampled_bias(model, &forward, trials, seed)?,
        max_reversed: sampled_bias(model, &reversed, trials, seed)?,
        reduced_norm: model.reduce_to_system(&forward)?.operator_norm(),
    })
}

/// Both sides of `σ(M^out)² = σ(M^out−A)² + σ(A)²` on `ψ ⊗ ξ`.
///
/// The identity holds for models unbiased for `A`; for biased models the
/// two numbers are returned as computed.
pub fn variance_decomposition_check(
    model: &MeasurementModel,
    a: &ComplexOperator,
    psi: &PureState,
) -> Result<(f64, f64)> {
    let full = model.joint_state(psi)?.full;
    let mout = model.m_out()?;
    let diff = &mout - &model.lift_system(a)?;
    let s_m = crate::operator::dispersion(&mout, &full)?;
    let s_d = crate::operator::dispersion(&diff, &full)?;
    let s_a = crate::operator::dispersion(a, psi)?;
    Ok((s_m * s_m, s_d * s_d + s_a * s_a))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// `⟨[A, B]⟩ ≈ 0`: nothing forbids precise and unbiased together.
    Consistent,
    /// At most two of {precise A, unbiased B-disturbance, ⟨[A,B]⟩ ≠ 0}.
    Tradeoff,
    /// The forbidden triple was observed, or `⟨[M^out, B^out]⟩ ≠ 0`.
    Fault,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyCertificate {
    pub eps_a: f64,
    pub bias_disturbance_b: f64,
    /// `|⟨ψ|[A, B]|ψ⟩|`
    pub commutator_expectation: f64,
    /// `|⟨ψ⊗ξ|[M^out, B^out]|ψ⊗ξ⟩|`, zero for any unitary model.
    pub output_commutator: f64,
    pub verdict: Verdict,
}

pub fn inconsistency_certificate(
    model: &MeasurementModel,
    a: &ComplexOperator,
    b: &ComplexOperator,
    psi: &PureState,
    tol: &Tolerances,
) -> Result<InconsistencyCertificate> {
    let eps_a = error_epsilon(model, a, psi)?;
    let bias_disturbance_b = disturbance_bias(model, b)?;
    let commutator_expectation = expectation(&commutator(a, b)?, psi)?.norm();
    let full = model.joint_state(psi)?.full;
    let out_comm = commutator(&model.m_out()?, &model.b_out(b)?)?;
    let output_commutator = expectation(&out_comm, &full)?.norm();
    let verdict = classify(eps_a, bias_disturbance_b, commutator_expectation, output_commutator, tol);
    Ok(InconsistencyCertificate {
        eps_a,
        bias_disturbance_b,
        commutator_expectation,
        output_commutator,
        verdict,
    })
}

/// Whether (ε, bias, |⟨[A,B]⟩|) lies in the region the theorem excludes.
pub fn in_forbidden_region(eps_a: f64, bias_b: f64, commutator_expectation: f64, tol: &Tolerances) -> bool {
    eps_a <= tol.tol_alg && bias_b <= tol.tol_alg && commutator_expectation > tol.tol_rel
}

fn classify(eps_a: f64, bias_b: f64, comm: f64, out_comm: f64, tol: &Tolerances) -> Verdict {
    // [M^out, B^out] = U†[1⊗M, B⊗1]U vanishes identically
    let scale = 1.0 + comm;
    if in_forbidden_region(eps_a, bias_b, comm, tol) || out_comm > tol.tol_rel * scale {
        Verdict::Fault
    } else if comm <= tol.tol_rel {
        Verdict::Consistent
    } else {
        Verdict::Tradeoff
    }
}

/// Cross-check of unbiasedness by sampling: `max |⟨X⟩|` over random ψ.
pub fn sampled_measurement_bias(
    model: &MeasurementModel,
    a: &ComplexOperator,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let diff = &model.m_out()? - &model.lift_system(a)?;
    sampled_bias(model, &diff, trials, seed)
}
