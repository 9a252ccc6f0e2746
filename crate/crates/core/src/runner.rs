//! Scenario sweeps, randomized property campaigns and their CSV/JSON output.
//!
//! Work items are evaluated in parallel but every result is collected in
//! index order and each random instance draws from its own seeded stream,
//! so output bytes depend only on the inputs.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{inconsistency_certificate, Verdict};
use crate::box_norm::{check_box_relation, BoxState};
use crate::error::{QmeasError, Result};
use crate::frontier::{BlowupRun, FrontierRun};
use crate::model::{build_projective, build_projective_spin};
use crate::operator::{sigma_x, sigma_y, PureState, Tolerances, C64};
use crate::quantities::QuantitySet;
use crate::random::{instance_rng, random_hermitian, random_instance, random_state};
use crate::relations::{evaluate_all, RelationId, RelationReport, RelationStatus, Universality};

pub const SPIN_SWEEP_HEADER: &str = "phi,eps_A,eta_B,sigma_A,sigma_B,bound_half,bound_full,naive_lhs,ozawa_lhs,uvh_lhs,modak_lhs,sigma_Mout,sigma_Bout,r4_status,r5_status,r6_status,r7_status";

/// Default grid: 91 points on `[0, π/2]`, one degree apart.
pub const SPIN_SWEEP_STEPS: usize = 91;

/// Dimension range for random systems and apparatus.
pub const RANDOM_DIMS: std::ops::RangeInclusive<usize> = 2..=4;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRecord {
    pub parameter: f64,
    pub quantities: QuantitySet,
    pub reports: Vec<RelationReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: String,
    pub parameter_name: String,
    pub records: Vec<SweepRecord>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl SweepResult {
    pub fn report(&self, index: usize, id: RelationId) -> Option<&RelationReport> {
        self.records.get(index)?.reports.iter().find(|r| r.id == id)
    }

    pub fn universal_violations(&self) -> usize {
        self.records
            .iter()
            .flat_map(|r| &r.reports)
            .filter(|r| r.is_universal_violation())
            .count()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from(SPIN_SWEEP_HEADER);
        out.push('\n');
        for rec in &self.records {
            let get = |id| {
                rec.reports
                    .iter()
                    .find(|r| r.id == id)
                    .ok_or_else(|| QmeasError::Validation(format!("sweep record lacks {id}")))
            };
            let (r4, r5, r6, r7) = (
                get(RelationId::NaiveErrorDisturbance)?,
                get(RelationId::Ozawa)?,
                get(RelationId::UniversalHeisenberg)?,
                get(RelationId::ModifiedArthursKelly)?,
            );
            let q = &rec.quantities;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                rec.parameter,
                q.eps_a,
                q.eta_b,
                q.sigma_a,
                q.sigma_b,
                q.bound_half,
                q.bound_full,
                r4.lhs,
                r5.lhs,
                r6.lhs,
                r7.lhs,
                q.sigma_mout,
                q.sigma_bout,
                r4.status,
                r5.status,
                r6.status,
                r7.status
            )
            .expect("writing to a String");
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Projective spin measurement along `σφ` with `A = σx`, `B = σy` on
/// `|+z⟩`, evaluated on `steps` evenly spaced angles in `[start, end]`.
pub fn run_spin_sweep(start: f64, end: f64, steps: usize, seed: u64, tol: &Tolerances) -> Result<SweepResult> {
    if !(start.is_finite() && end.is_finite()) || start >= end || steps < 2 {
        return Err(QmeasError::Validation(format!(
            "invalid grid: need finite start < end and steps >= 2, got [{start}, {end}] with {steps} steps"
        )));
    }
    let (a, b, psi) = (sigma_x(), sigma_y(), PureState::plus_z());
    let records = (0..steps)
        .into_par_iter()
        .map(|i| {
            let phi = if i + 1 == steps {
                end
            } else {
                start + (end - start) * i as f64 / (steps - 1) as f64
            };
            let model = build_projective_spin(phi);
            let (quantities, suite) = evaluate_all(&model, &a, &b, &psi, &RelationId::MODEL_SUITE, tol)?;
            Ok(SweepRecord {
                parameter: phi,
                quantities,
                reports: suite.reports,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        scenario: "projective-spin".into(),
        parameter_name: "phi".into(),
        records,
        seed,
        tolerances: *tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Robertson,
    UniversalRelations,
    UnbiasednessTheorem,
    Box,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Robertson => "robertson",
            Suite::UniversalRelations => "universal-relations",
            Suite::UnbiasednessTheorem => "unbiasedness-theorem",
            Suite::Box => "box",
        }
    }
}

impl FromStr for Suite {
    type Err = QmeasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "robertson" => Ok(Suite::Robertson),
            "universal-relations" => Ok(Suite::UniversalRelations),
            "unbiasedness-theorem" => Ok(Suite::UnbiasednessTheorem),
            "box" => Ok(Suite::Box),
            other => Err(QmeasError::Validation(format!(
                "unknown suite `{other}` (expected robertson, universal-relations, unbiasedness-theorem or box)"
            ))),
        }
    }
}

/// One random instance of a campaign.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignRow {
    pub index: usize,
    pub d_sys: usize,
    pub d_app: usize,
    /// Relation with the smallest margin, or the theorem check.
    pub check: String,
    /// Smallest margin on this instance. For the theorem suite this is the
    /// distance `max(ε(A), bias(B)) − tol_alg` from the excluded region, and
    /// absent when `⟨[A, B]⟩` vanishes.
    pub margin: Option<f64>,
    pub passed: bool,
    /// A universal relation failed or the theorem check reported a fault.
    pub fault: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub suite: Suite,
    pub instances: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub passes: usize,
    pub failures: usize,
    pub faults: usize,
    pub worst_margin: Option<f64>,
    pub worst_instance: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignResult {
    pub summary: CampaignSummary,
    pub rows: Vec<CampaignRow>,
}

impl CampaignResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,suite,d_sys,d_app,check,margin,passed\n");
        for r in &self.rows {
            let margin = r.margin.map(|m| m.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.index,
                self.summary.suite.name(),
                r.d_sys,
                r.d_app,
                r.check,
                margin,
                r.passed
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn universal_ids() -> Vec<RelationId> {
    RelationId::MODEL_SUITE
        .into_iter()
        .filter(|id| id.universality() == Universality::Universal)
        .collect()
}

fn worst_report(reports: &[RelationReport]) -> Option<&RelationReport> {
    reports.iter().min_by(|x, y| x.margin.total_cmp(&y.margin))
}

fn relation_row(index: usize, d_sys: usize, d_app: usize, reports: &[RelationReport]) -> CampaignRow {
    let worst = worst_report(reports);
    let fault = reports.iter().any(|r| r.status == RelationStatus::Violated);
    CampaignRow {
        index,
        d_sys,
        d_app,
        check: worst.map(|r| r.id.code().to_string()).unwrap_or_default(),
        margin: worst.map(|r| r.margin),
        passed: !fault,
        fault,
    }
}

fn robertson_instance(index: usize, seed: u64, tol: &Tolerances) -> Result<CampaignRow> {
    let mut rng = instance_rng(seed, index as u64);
    let inst = random_instance(&mut rng, RANDOM_DIMS);
    let (_, suite) = evaluate_all(&inst.model, &inst.a, &inst.b, &inst.psi, &[RelationId::Robertson], tol)?;
    Ok(relation_row(index, inst.model.d_sys(), inst.model.d_app(), &suite.reports))
}

fn universal_instance(index: usize, seed: u64, tol: &Tolerances) -> Result<CampaignRow> {
    let mut rng = instance_rng(seed, index as u64);
    let inst = random_instance(&mut rng, RANDOM_DIMS);
    let (_, suite) = evaluate_all(&inst.model, &inst.a, &inst.b, &inst.psi, &universal_ids(), tol)?;
    Ok(relation_row(index, inst.model.d_sys(), inst.model.d_app(), &suite.reports))
}

/// Even indices draw Haar-random models; odd indices use the precise
/// projective measurement of a random `A`, where ε(A) = 0 and the theorem
/// forces a biased disturbance of any `B` with `⟨[A, B]⟩ ≠ 0`.
fn theorem_instance(index: usize, seed: u64, tol: &Tolerances) -> Result<CampaignRow> {
    let mut rng = instance_rng(seed, index as u64);
    let (model, a, b, psi) = if index.is_multiple_of(2) {
        let inst = random_instance(&mut rng, RANDOM_DIMS);
        (inst.model, inst.a, inst.b, inst.psi)
    } else {
        let d_sys = rng.random_range(RANDOM_DIMS);
        let a = random_hermitian(d_sys, &mut rng);
        let b = random_hermitian(d_sys, &mut rng);
        let psi = random_state(d_sys, &mut rng);
        (build_projective(&a, d_sys)?, a, b, psi)
    };
    let cert = inconsistency_certificate(&model, &a, &b, &psi, tol)?;
    let margin = (cert.commutator_expectation > tol.tol_rel)
        .then(|| cert.eps_a.max(cert.bias_disturbance_b) - tol.tol_alg);
    let fault = cert.verdict == Verdict::Fault;
    Ok(CampaignRow {
        index,
        d_sys: model.d_sys(),
        d_app: model.d_app(),
        check: match cert.verdict {
            Verdict::Consistent => "consistent",
            Verdict::Tradeoff => "tradeoff",
            Verdict::Fault => "fault",
        }
        .into(),
        margin,
        passed: !fault,
        fault,
    })
}

/// Random truncated box state: `n_max ≤ 16`, `L ∈ [1, 10]`, `ħ = 1`, and
/// complex Gaussian coefficients damped geometrically in `|n|`.
pub fn random_box_state<R: Rng + ?Sized>(rng: &mut R) -> Result<BoxState> {
    let n_max = rng.random_range(1..=16usize);
    let length = rng.random_range(1.0..=10.0);
    let decay: f64 = rng.random_range(0.3..=0.95);
    let coeffs = (0..2 * n_max + 1)
        .map(|k| {
            let n = k.abs_diff(n_max) as i32;
            let w = decay.powi(n);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * w, im * w)
        })
        .collect();
    BoxState::normalized(length, 1.0, n_max, coeffs)
}

fn box_instance(index: usize, seed: u64, tol: &Tolerances) -> Result<CampaignRow> {
    let mut rng = instance_rng(seed, index as u64);
    let state = random_box_state(&mut rng)?;
    let report = check_box_relation(&state, tol)?;
    // d_sys is the number of retained modes; there is no apparatus
    Ok(relation_row(index, 2 * state.n_max() + 1, 0, std::slice::from_ref(&report)))
}

/// Runs `instances` random checks of `suite`, one seeded stream per instance.
pub fn run_campaign(suite: Suite, instances: usize, seed: u64, tol: &Tolerances) -> Result<CampaignResult> {
    if instances == 0 {
        return Err(QmeasError::Validation("a campaign needs at least one instance".into()));
    }
    let run = match suite {
        Suite::Robertson => robertson_instance,
        Suite::UniversalRelations => universal_instance,
        Suite::UnbiasednessTheorem => theorem_instance,
        Suite::Box => box_instance,
    };
    let rows = (0..instances)
        .into_par_iter()
        .map(|i| run(i, seed, tol))
        .collect::<Result<Vec<_>>>()?;
    let passes = rows.iter().filter(|r| r.passed).count();
    let worst = rows
        .iter()
        .filter_map(|r| r.margin.map(|m| (r.index, m)))
        .min_by(|x, y| x.1.total_cmp(&y.1));
    Ok(CampaignResult {
        summary: CampaignSummary {
            suite,
            instances,
            seed,
            tolerances: *tol,
            passes,
            failures: instances - passes,
            faults: rows.iter().filter(|r| r.fault).count(),
            worst_margin: worst.map(|w| w.1),
            worst_instance: worst.map(|w| w.0),
        },
        rows,
    })
}

pub const FRONTIER_HEADER: &str = "eps_A,eta_B,eps_eta,r4_status,r5_status,r6_status";

pub fn frontier_csv(run: &FrontierRun) -> String {
    let mut out = String::from(FRONTIER_HEADER);
    out.push('\n');
    for p in &run.points {
        let status = |id: RelationId| {
            p.reports
                .iter()
                .find(|r| r.id == id)
                .map(|r| r.status.token())
                .unwrap_or("skipped")
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.eps,
            p.eta,
            p.eps * p.eta,
            status(RelationId::NaiveErrorDisturbance),
            status(RelationId::Ozawa),
            status(RelationId::UniversalHeisenberg)
        )
        .expect("writing to a String");
    }
    out
}

pub const BLOWUP_HEADER: &str = "eps_cap,achieved_eps,min_bias_B,evaluations,final_penalty";

pub fn blowup_csv(run: &BlowupRun) -> String {
    let mut out = String::from(BLOWUP_HEADER);
    out.push('\n');
    for r in &run.records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.eps_cap, r.achieved_eps, r.min_bias_b, r.evaluations, r.final_penalty
        )
        .expect("writing to a String");
    }
    out
}
