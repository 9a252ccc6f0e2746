//! Scalars consumed by the uncertainty relations: σ, ε, η and the
//! commutator bounds.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{QmeasError, Result};
use crate::model::{MeasurementModel, POINTER_N};
use crate::operator::{centered_residual, commutator, expectation, ComplexOperator, PureState, C64};

/// All operators needed to evaluate a relation for one
/// (model, A, B, ψ) instance, computed once.
#[derive(Clone, Debug)]
pub struct HeisenbergFrame {
    /// `ψ ⊗ ξ`
    pub joint: DVector<C64>,
    pub a_total: ComplexOperator,
    pub b_total: ComplexOperator,
    pub m_out: ComplexOperator,
    /// `None` on abstract models.
    pub b_out: Option<ComplexOperator>,
    pub n_out: Option<ComplexOperator>,
    /// `⟨ψ|[A, B]|ψ⟩`
    pub commutator_ab: C64,
}

impl HeisenbergFrame {
    pub fn new(
        model: &MeasurementModel,
        a: &ComplexOperator,
        b: &ComplexOperator,
        psi: &PureState,
    ) -> Result<Self> {
        require_hermitian(a)?;
        require_hermitian(b)?;
        let joint = model.joint_state(psi)?.full.amplitudes().clone();
        let b_out = match model.b_out(b) {
            Ok(op) => Some(op),
            Err(QmeasError::NoDynamics) => None,
            Err(e) => return Err(e),
        };
        let n_out = if model.has_pointer(POINTER_N) {
            Some(model.n_out()?)
        } else {
            None
        };
        Ok(Self {
            a_total: model.lift_system(a)?,
            b_total: model.lift_system(b)?,
            m_out: model.m_out()?,
            commutator_ab: expectation(&commutator(a, b)?, psi)?,
            joint,
            b_out,
            n_out,
        })
    }

    /// `‖X ψ⊗ξ‖ = ⟨X†X⟩^{1/2}`
    pub fn rms(&self, x: &ComplexOperator) -> f64 {
        x.apply(&self.joint).norm()
    }

    /// Standard deviation on `ψ ⊗ ξ`.
    pub fn sigma(&self, x: &ComplexOperator) -> f64 {
        centered_residual(x, &self.joint).norm()
    }

    /// `⟨ψ⊗ξ|X|ψ⊗ξ⟩`
    pub fn mean(&self, x: &ComplexOperator) -> C64 {
        self.joint.dotc(&x.apply(&self.joint))
    }

    pub fn m_minus_a(&self) -> ComplexOperator {
        &self.m_out - &self.a_total
    }

    pub fn b_out_or_err(&self) -> Result<&ComplexOperator> {
        self.b_out.as_ref().ok_or(QmeasError::NoDynamics)
    }

    pub fn b_shift(&self) -> Result<ComplexOperator> {
        Ok(self.b_out_or_err()? - &self.b_total)
    }

    pub fn n_minus_b(&self) -> Result<ComplexOperator> {
        let n = self
            .n_out
            .as_ref()
            .ok_or_else(|| QmeasError::MissingPointer(POINTER_N.to_string()))?;
        Ok(n - &self.b_total)
    }

    pub fn epsilon(&self) -> f64 {
        self.rms(&self.m_minus_a())
    }

    pub fn eta(&self) -> Result<f64> {
        Ok(self.rms(&self.b_shift()?))
    }
}

fn require_hermitian(x: &ComplexOperator) -> Result<()> {
    let h = x.hermiticity_defect();
    if h > 1e-10 * (1.0 + x.frobenius_norm()) {
        return Err(QmeasError::NotHermitian(h));
    }
    Ok(())
}

/// Error of `A`: `⟨ψ⊗ξ|(M^out − A⊗1)²|ψ⊗ξ⟩^{1/2}`.
pub fn error_epsilon(model: &MeasurementModel, a: &ComplexOperator, psi: &PureState) -> Result<f64> {
    require_hermitian(a)?;
    let j = model.joint_state(psi)?;
    let diff = &model.m_out()? - &model.lift_system(a)?;
    Ok(diff.apply(j.full.amplitudes()).norm())
}

/// Error of `B` read from the second pointer: `⟨(N^out − B⊗1)²⟩^{1/2}`.
pub fn error_epsilon_n(model: &MeasurementModel, b: &ComplexOperator, psi: &PureState) -> Result<f64> {
    require_hermitian(b)?;
    let j = model.joint_state(psi)?;
    let diff = &model.n_out()? - &model.lift_system(b)?;
    Ok(diff.apply(j.full.amplitudes()).norm())
}

/// Disturbance of `B`: `⟨(B^out − B⊗1)²⟩^{1/2}` under the full unitary.
pub fn disturbance_eta(model: &MeasurementModel, b: &ComplexOperator, psi: &PureState) -> Result<f64> {
    let j = model.joint_state(psi)?;
    let diff = &model.b_out(b)? - &model.lift_system(b)?;
    Ok(diff.apply(j.full.amplitudes()).norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantitySet {
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub eps_a: f64,
    pub eta_b: f64,
    pub bar_eps_a: f64,
    pub bar_eta_b: f64,
    pub sigma_mout: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_nout: Option<f64>,
    pub sigma_bout: f64,
    /// `σ(M^out − A⊗1)`
    pub sigma_m_minus_a: f64,
    /// `σ(B^out − B⊗1)`
    pub sigma_b_shift: f64,
    /// `σ(N^out − B⊗1)`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_n_minus_b: Option<f64>,
    /// `⟨(N^out − B⊗1)²⟩^{1/2}`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_b: Option<f64>,
    /// `½|⟨[A, B]⟩|`
    pub bound_half: f64,
    /// `|⟨[A, B]⟩|`
    pub bound_full: f64,
}

impl QuantitySet {
    pub fn from_frame(frame: &HeisenbergFrame) -> Result<Self> {
        let sigma_a = frame.sigma(&frame.a_total);
        let sigma_b = frame.sigma(&frame.b_total);
        let m_minus_a = frame.m_minus_a();
        let b_shift = frame.b_shift()?;
        let eps_a = frame.rms(&m_minus_a);
        let eta_b = frame.rms(&b_shift);
        let (sigma_n_minus_b, eps_b) = match frame.n_minus_b() {
            Ok(d) => (Some(frame.sigma(&d)), Some(frame.rms(&d))),
            Err(_) => (None, None),
        };
        let bound_full = frame.commutator_ab.norm();
        Ok(Self {
            sigma_a,
            sigma_b,
            eps_a,
            eta_b,
            bar_eps_a: eps_a + sigma_a,
            bar_eta_b: eta_b + sigma_b,
            sigma_mout: frame.sigma(&frame.m_out),
            sigma_nout: frame.n_out.as_ref().map(|n| frame.sigma(n)),
            sigma_bout: frame.sigma(frame.b_out_or_err()?),
            sigma_m_minus_a: frame.sigma(&m_minus_a),
            sigma_b_shift: frame.sigma(&b_shift),
            sigma_n_minus_b,
            eps_b,
            bound_half: 0.5 * bound_full,
            bound_full,
        })
    }
}

/// Every scalar for one instance. σ of system observables is taken on ψ
/// (equal to σ of `A⊗1` on `ψ⊗ξ`); output-operator σ on `ψ⊗ξ`.
pub fn quantity_set(
    model: &MeasurementModel,
    a: &ComplexOperator,
    b: &ComplexOperator,
    psi: &PureState,
) -> Result<QuantitySet> {
    QuantitySet::from_frame(&HeisenbergFrame::new(model, a, b, psi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_no_interaction, build_projective_spin};
    use crate::operator::{sigma_x, sigma_y, sigma_z};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, SQRT_2};

    #[test]
    fn spin_closed_forms_at_named_angles() {
        let psi = PureState::plus_z();
        for (phi, eps, eta) in [
            (0.0, 0.0, SQRT_2),
            (FRAC_PI_6, 0.517_638_090_205_041_5, 1.224_744_871_391_589),
            (FRAC_PI_2, SQRT_2, 0.0),
        ] {
            let m = build_projective_spin(phi);
            assert!((error_epsilon(&m, &sigma_x(), &psi).unwrap() - eps).abs() < 1e-12);
            assert!((disturbance_eta(&m, &sigma_y(), &psi).unwrap() - eta).abs() < 1e-12);
        }
    }

    #[test]
    fn no_interaction_means_no_disturbance() {
        let m = build_no_interaction(2, PureState::basis(2, 0), sigma_z()).unwrap();
        for b in [sigma_x(), sigma_y(), sigma_z()] {
            assert!(disturbance_eta(&m, &b, &PureState::plus_x()).unwrap() < 1e-15);
        }
    }

    #[test]
    fn spin_quantity_set() {
        let q = quantity_set(&build_projective_spin(0.0), &sigma_x(), &sigma_y(), &PureState::plus_z()).unwrap();
        assert!((q.bound_half - 1.0).abs() < 1e-14);
        assert!((q.bound_full - 2.0).abs() < 1e-14);
        assert!((q.sigma_a - 1.0).abs() < 1e-14 && (q.sigma_b - 1.0).abs() < 1e-14);
        assert!(q.eps_a.abs() < 1e-14);
        assert!((q.eta_b - SQRT_2).abs() < 1e-14);
        assert!((q.bar_eps_a - 1.0).abs() < 1e-14);
        assert!((q.bar_eta_b - (SQRT_2 + 1.0)).abs() < 1e-14);
        assert!(q.sigma_nout.is_none() && q.eps_b.is_none());
    }

    #[test]
    fn equal_observables_have_zero_bound() {
        let q = quantity_set(&build_projective_spin(0.3), &sigma_x(), &sigma_x(), &PureState::plus_y()).unwrap();
        assert_eq!(q.bound_half, 0.0);
    }

    #[test]
    fn missing_pointer_is_reported() {
        let m = build_projective_spin(0.2);
        assert!(matches!(
            error_epsilon_n(&m, &sigma_y(), &PureState::plus_z()),
            Err(QmeasError::MissingPointer(_))
        ));
    }
}
