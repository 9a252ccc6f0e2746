//! JSON documents for measurement models and observables.
//!
//! Complex numbers are `[re, im]` pairs; matrices are flattened row-major.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{QmeasError, Result};
use crate::model::{Dynamics, MeasurementModel};
use crate::operator::{ComplexOperator, PureState, C64};

pub type Pair = (f64, f64);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelDocument {
    pub d_sys: usize,
    pub d_app: usize,
    pub xi: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pointers: BTreeMap<String, Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_out: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_out: Option<Vec<Pair>>,
}

pub fn pairs_of(values: &[C64]) -> Vec<Pair> {
    values.iter().map(|z| (z.re, z.im)).collect()
}

pub fn complex_of(pairs: &[Pair]) -> Vec<C64> {
    pairs.iter().map(|&(re, im)| C64::new(re, im)).collect()
}

fn operator_of(pairs: &[Pair]) -> Result<ComplexOperator> {
    let dim = (pairs.len() as f64).sqrt().round() as usize;
    ComplexOperator::from_row_major(dim, &complex_of(pairs))
}

impl From<&MeasurementModel> for ModelDocument {
    fn from(m: &MeasurementModel) -> Self {
        let mut doc = ModelDocument {
            d_sys: m.d_sys(),
            d_app: m.d_app(),
            xi: pairs_of(m.xi().amplitudes().as_slice()),
            unitary: None,
            pointers: m
                .pointers()
                .iter()
                .map(|(k, p)| (k.clone(), pairs_of(&p.row_major())))
                .collect(),
            m_out: None,
            n_out: None,
        };
        match m.dynamics() {
            Dynamics::Unitary(u) => doc.unitary = Some(pairs_of(&u.row_major())),
            Dynamics::Abstract { m_out, n_out } => {
                doc.m_out = Some(pairs_of(&m_out.row_major()));
                doc.n_out = n_out.as_ref().map(|n| pairs_of(&n.row_major()));
            }
        }
        doc
    }
}

impl TryFrom<ModelDocument> for MeasurementModel {
    type Error = QmeasError;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        let xi = PureState::new(complex_of(&doc.xi))?;
        match (doc.unitary, doc.m_out) {
            (Some(u), None) => {
                let pointers = doc
                    .pointers
                    .iter()
                    .map(|(k, v)| Ok((k.clone(), operator_of(v)?)))
                    .collect::<Result<BTreeMap<_, _>>>()?;
                MeasurementModel::from_unitary(doc.d_sys, doc.d_app, xi, operator_of(&u)?, pointers)
            }
            (None, Some(m)) => {
                let n = doc.n_out.as_deref().map(operator_of).transpose()?;
                MeasurementModel::from_outputs(doc.d_sys, doc.d_app, xi, operator_of(&m)?, n)
            }
            _ => Err(QmeasError::Validation(
                "model document needs exactly one of `unitary` or `m_out`".into(),
            )),
        }
    }
}

pub fn model_to_json(model: &MeasurementModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelDocument::from(model))?)
}

pub fn model_from_json(text: &str) -> Result<MeasurementModel> {
    serde_json::from_str::<ModelDocument>(text)?.try_into()
}

/// A Hermitian observable stored as `{"dim": d, "entries": [[re, im], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorDocument {
    pub dim: usize,
    pub entries: Vec<Pair>,
}

pub fn operator_from_json(text: &str) -> Result<ComplexOperator> {
    let doc: OperatorDocument = serde_json::from_str(text)?;
    ComplexOperator::from_row_major(doc.dim, &complex_of(&doc.entries))
}

pub fn operator_to_json(op: &ComplexOperator) -> Result<String> {
    Ok(serde_json::to_string_pretty(&OperatorDocument {
        dim: op.dim(),
        entries: pairs_of(&op.row_major()),
    })?)
}

/// A pure state stored as a list of `[re, im]` amplitudes.
pub fn state_from_json(text: &str) -> Result<PureState> {
    let pairs: Vec<Pair> = serde_json::from_str(text)?;
    PureState::new(complex_of(&pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_joint_unbiased, build_projective_spin};
    use crate::operator::{sigma_x, sigma_y, tensor};

    fn rel_close(a: &ComplexOperator, b: &ComplexOperator) -> bool {
        a.row_major()
            .iter()
            .zip(b.row_major())
            .all(|(x, y)| (x - y).norm() <= 1e-15 * x.norm().max(y.norm()).max(f64::MIN_POSITIVE))
    }

    #[test]
    fn unitary_model_round_trip() {
        let m = build_projective_spin(0.37);
        let back = model_from_json(&model_to_json(&m).unwrap()).unwrap();
        assert!(rel_close(m.unitary().unwrap(), back.unitary().unwrap()));
        assert_eq!(m.xi(), back.xi());
        assert_eq!(m.pointers().len(), back.pointers().len());

        let j = build_joint_unbiased(&sigma_x(), &sigma_y()).unwrap();
        let back = model_from_json(&model_to_json(&j).unwrap()).unwrap();
        assert!(rel_close(&j.n_out().unwrap(), &back.n_out().unwrap()));
    }

    #[test]
    fn abstract_model_round_trip() {
        let mo = tensor(&sigma_x(), &ComplexOperator::identity(2));
        let m = MeasurementModel::from_outputs(2, 2, PureState::basis(2, 1), mo.clone(), None).unwrap();
        let back = model_from_json(&model_to_json(&m).unwrap()).unwrap();
        assert!(rel_close(&back.m_out().unwrap(), &mo));
    }

    #[test]
    fn rejects_ambiguous_document() {
        let text = r#"{"d_sys":1,"d_app":1,"xi":[[1.0,0.0]]}"#;
        assert!(model_from_json(text).is_err());
    }

    #[test]
    fn observable_and_state_documents() {
        let y = operator_from_json(&operator_to_json(&sigma_y()).unwrap()).unwrap();
        assert_eq!(y, sigma_y());
        let s = state_from_json("[[0.6,0.0],[0.0,0.8]]").unwrap();
        assert_eq!(s.dim(), 2);
        assert!(state_from_json("[[1.0,0.0],[1.0,0.0]]").is_err());
    }
}
