//! Numerical search over parameterized measurement models.
//!
//! A model is `U(θ) = exp(i Σ_k θ_k G_k)` over a fixed orthonormal Hermitian
//! basis `{G_k}` of the total space, with a fixed apparatus state and
//! pointer. Nelder-Mead runs on scalarized objectives `w·ε + (1−w)·η` to
//! trace the (ε, η) tradeoff, and on penalized objectives to probe how small
//! the disturbance bias of `B` can be made once `ε(A)` is capped.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::audit::in_forbidden_region;
use crate::error::{QmeasError, Result};
use crate::model::{projective_generator, projective_pointer, MeasurementModel, POINTER_M};
use crate::operator::{commutator, expectation, sigma_phi, ComplexOperator, PureState, Tolerances, C64};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::quantities::HeisenbergFrame;
use crate::random::instance_rng;
use crate::relations::{evaluate_all, evaluate_in_frame, RelationId, RelationReport};

/// Minimum evaluation budget accepted by the searches.
pub const MIN_BUDGET: usize = 100;

/// Scalarization weights on ε.
pub const WEIGHTS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Penalty coefficients for the ε cap: ×10 per round, 3 rounds.
pub const PENALTY_SCHEDULE: [f64; 3] = [10.0, 100.0, 1000.0];

/// Relations spot-checked during the search.
pub const SPOT_CHECKED: [RelationId; 4] = [
    RelationId::Robertson,
    RelationId::Ozawa,
    RelationId::UniversalHeisenberg,
    RelationId::BaseDifference,
];

/// ε bound used by the endpoint probes of the frontier.
const ENDPOINT_CAP: f64 = 1e-6;

/// Orthonormal (Frobenius) Hermitian basis of `d × d` matrices: the diagonal
/// units `E_kk`, then `(E_jk + E_kj)/√2` and `i(E_jk − E_kj)/√2` for `j < k`.
pub fn hermitian_basis(d: usize) -> Vec<ComplexOperator> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let unit = |entries: &[(usize, usize, C64)]| {
        let mut e = vec![C64::new(0.0, 0.0); d * d];
        for &(r, c, v) in entries {
            e[r * d + c] = v;
        }
        ComplexOperator::from_row_major(d, &e).unwrap()
    };
    let mut basis = Vec::with_capacity(d * d);
    for k in 0..d {
        basis.push(unit(&[(k, k, C64::new(1.0, 0.0))]));
    }
    for j in 0..d {
        for k in j + 1..d {
            basis.push(unit(&[(j, k, C64::new(h, 0.0)), (k, j, C64::new(h, 0.0))]));
            basis.push(unit(&[(j, k, C64::new(0.0, h)), (k, j, C64::new(0.0, -h))]));
        }
    }
    basis
}

/// Coordinates `Tr(G_k H)` of a Hermitian generator in [`hermitian_basis`].
pub fn theta_of_generator(h: &ComplexOperator) -> Vec<f64> {
    hermitian_basis(h.dim()).iter().map(|g| g.inner(h).re).collect()
}

#[derive(Clone, Debug)]
pub struct ModelParameterization {
    pub d_sys: usize,
    pub d_app: usize,
    pub theta: Vec<f64>,
    pub xi: PureState,
    pub pointer: ComplexOperator,
}

impl ModelParameterization {
    /// θ = 0 (no interaction) with the given apparatus state and pointer.
    pub fn new(d_sys: usize, xi: PureState, pointer: ComplexOperator) -> Result<Self> {
        if pointer.dim() != xi.dim() {
            return Err(QmeasError::DimensionMismatch {
                expected: xi.dim(),
                found: pointer.dim(),
            });
        }
        let d_app = xi.dim();
        Ok(Self {
            d_sys,
            d_app,
            theta: vec![0.0; (d_sys * d_app).pow(2)],
            xi,
            pointer,
        })
    }

    /// Parameters of the controlled-shift precise measurement of `A`.
    pub fn precise_for(a: &ComplexOperator, d_app: usize) -> Result<Self> {
        let mut p = Self::new(a.dim(), PureState::basis(d_app, 0), projective_pointer(a, d_app)?)?;
        p.theta = theta_of_generator(&projective_generator(a, d_app)?);
        Ok(p)
    }

    /// Parameters reproducing the projective spin model at angle `phi`.
    pub fn projective_spin(phi: f64) -> Self {
        Self::precise_for(&sigma_phi(phi), 2).expect("qubit construction is valid")
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Self {
        Self { theta, ..self.clone() }
    }

    pub fn generator(&self) -> Result<ComplexOperator> {
        let d = self.d_sys * self.d_app;
        if self.theta.len() != d * d {
            return Err(QmeasError::DimensionMismatch {
                expected: d * d,
                found: self.theta.len(),
            });
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(QmeasError::NonFinite("model parameters"));
        }
        let mut h = ComplexOperator::zeros(d);
        for (t, g) in self.theta.iter().zip(hermitian_basis(d)) {
            if *t != 0.0 {
                h = &h + &g.scale_real(*t);
            }
        }
        Ok(h)
    }

    pub fn realize(&self) -> Result<MeasurementModel> {
        let u = self.generator()?.exp_i()?;
        let mut pointers = std::collections::BTreeMap::new();
        pointers.insert(POINTER_M.to_string(), self.pointer.clone());
        MeasurementModel::from_unitary(self.d_sys, self.d_app, self.xi.clone(), u, pointers)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub eps: f64,
    pub eta: f64,
    pub theta: Vec<f64>,
    pub reports: Vec<RelationReport>,
}

/// Search bookkeeping shared by the frontier and the blow-up probe.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SearchStats {
    pub evaluations: usize,
    pub spot_checks: usize,
    /// Universal relations found violated during spot checks.
    pub spot_check_violations: usize,
    /// Evaluations landing in {ε ≤ tol_alg, bias_B ≤ tol_alg, |⟨[A,B]⟩| > tol_rel}.
    pub forbidden_hits: usize,
    /// Evaluations whose parameters could not be realized.
    pub failed_evaluations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrontierRun {
    pub points: Vec<FrontierPoint>,
    pub stats: SearchStats,
}

#[derive(Clone, Copy, Debug)]
struct Sample {
    eps: f64,
    eta: f64,
    bias: f64,
}

struct Evaluator<'a> {
    a: &'a ComplexOperator,
    b: &'a ComplexOperator,
    psi: &'a PureState,
    template: &'a ModelParameterization,
    tol: Tolerances,
    commutator_abs: f64,
    stats: SearchStats,
    /// Mutually nondominated (ε, η, θ).
    archive: Vec<(f64, f64, Vec<f64>)>,
}

impl<'a> Evaluator<'a> {
    fn new(
        a: &'a ComplexOperator,
        b: &'a ComplexOperator,
        psi: &'a PureState,
        template: &'a ModelParameterization,
        tol: Tolerances,
    ) -> Result<Self> {
        if a.dim() != template.d_sys || b.dim() != template.d_sys || psi.dim() != template.d_sys {
            return Err(QmeasError::DimensionMismatch {
                expected: template.d_sys,
                found: a.dim(),
            });
        }
        Ok(Self {
            commutator_abs: expectation(&commutator(a, b)?, psi)?.norm(),
            a,
            b,
            psi,
            template,
            tol,
            stats: SearchStats::default(),
            archive: Vec::new(),
        })
    }

    fn measure(&mut self, theta: &[f64]) -> Option<Sample> {
        self.stats.evaluations += 1;
        let model = match self.template.with_theta(theta.to_vec()).realize() {
            Ok(m) => m,
            Err(_) => {
                self.stats.failed_evaluations += 1;
                return None;
            }
        };
        let frame = match HeisenbergFrame::new(&model, self.a, self.b, self.psi) {
            Ok(f) => f,
            Err(_) => {
                self.stats.failed_evaluations += 1;
                return None;
            }
        };
        let eps = frame.epsilon();
        let shift = frame.b_shift().ok()?;
        let eta = frame.rms(&shift);
        let bias = model.reduce_to_system(&shift).ok()?.operator_norm();
        if in_forbidden_region(eps, bias, self.commutator_abs, &self.tol) {
            self.stats.forbidden_hits += 1;
        }
        if self.stats.evaluations.is_multiple_of(10) {
            self.spot_check(&frame);
        }
        self.archive_insert(eps, eta, theta);
        Some(Sample { eps, eta, bias })
    }

    fn spot_check(&mut self, frame: &HeisenbergFrame) {
        self.stats.spot_checks += 1;
        let Ok(q) = crate::quantities::QuantitySet::from_frame(frame) else {
            return;
        };
        for id in SPOT_CHECKED {
            if let Ok(r) = evaluate_in_frame(id, &q, frame, &self.tol) {
                if r.is_universal_violation() {
                    self.stats.spot_check_violations += 1;
                }
            }
        }
    }

    fn archive_insert(&mut self, eps: f64, eta: f64, theta: &[f64]) {
        if self
            .archive
            .iter()
            .any(|(e, h, _)| *e <= eps && *h <= eta)
        {
            return;
        }
        self.archive.retain(|(e, h, _)| !(eps <= *e && eta <= *h));
        self.archive.push((eps, eta, theta.to_vec()));
    }
}

fn random_theta<R: Rng + ?Sized>(len: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..len)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn validate_budget(budget: usize) -> Result<()> {
    if budget < MIN_BUDGET {
        return Err(QmeasError::Validation(format!(
            "budget >= {MIN_BUDGET} required, got {budget}"
        )));
    }
    Ok(())
}

/// Minimizes `objective(sample)` from each start in turn, sharing `budget`.
fn descend(
    ev: &mut Evaluator<'_>,
    starts: &[Vec<f64>],
    budget: usize,
    objective: &dyn Fn(Sample) -> f64,
) -> (Vec<f64>, f64) {
    let mut best = (starts[0].clone(), f64::INFINITY);
    let per_start = (budget / starts.len()).max(1);
    for start in starts {
        let opts = NelderMeadOptions {
            initial_step: 0.2,
            max_evals: per_start,
            f_tol: 1e-13,
        };
        let m = nelder_mead(
            |th| ev.measure(th).map(objective).unwrap_or(f64::INFINITY),
            start,
            &opts,
        );
        if m.value < best.1 {
            best = (m.x, m.value);
        }
    }
    best
}

/// Traces the nondominated (ε(A), η(B)) frontier.
///
/// Each weight `w` in [`WEIGHTS`] minimizes `w·ε + (1−w)·η`, starting from
/// `p0`, the previous weight's optimum and one seeded random point. Two
/// constrained probes then push toward the axes. Every evaluated point feeds
/// a nondominated archive, which is returned sorted by ε.
pub fn trace_frontier(
    a: &ComplexOperator,
    b: &ComplexOperator,
    psi: &PureState,
    p0: &ModelParameterization,
    budget: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<FrontierRun> {
    validate_budget(budget)?;
    p0.realize()?;
    let mut ev = Evaluator::new(a, b, psi, p0, *tol)?;
    let mut rng = instance_rng(seed, 0);
    let tasks = WEIGHTS.len() + 2;
    let per_task = budget / tasks;

    let mut previous = p0.theta.clone();
    let mut best_per_weight = Vec::with_capacity(WEIGHTS.len());
    for &w in &WEIGHTS {
        let mut starts = vec![p0.theta.clone()];
        if previous != p0.theta {
            starts.push(previous.clone());
        }
        starts.push(random_theta(p0.theta.len(), 0.8, &mut rng));
        let (theta, _) = descend(&mut ev, &starts, per_task, &|s| w * s.eps + (1.0 - w) * s.eta);
        best_per_weight.push(theta.clone());
        previous = theta;
    }

    // endpoint probes: η with ε pinned near zero, and ε with η pinned near zero
    // the precise measurement of A and the trivial U = 1 sit on the two axes
    let mut low_eps = vec![best_per_weight[WEIGHTS.len() - 1].clone(), p0.theta.clone()];
    if let Ok(precise) = ModelParameterization::precise_for(a, p0.d_app) {
        if precise.xi == p0.xi && precise.pointer.max_abs_diff(&p0.pointer) == 0.0 {
            low_eps.insert(0, precise.theta);
        }
    }
    descend(&mut ev, &low_eps, per_task, &|s| {
        s.eta + 1e3 * (s.eps - ENDPOINT_CAP).max(0.0)
    });
    let low_eta = vec![vec![0.0; p0.theta.len()], best_per_weight[0].clone()];
    let remaining = budget.saturating_sub(ev.stats.evaluations).max(1);
    descend(&mut ev, &low_eta, remaining, &|s| {
        s.eps + 1e3 * (s.eta - ENDPOINT_CAP).max(0.0)
    });

    let mut archive = std::mem::take(&mut ev.archive);
    archive.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut points = Vec::with_capacity(archive.len());
    for (eps, eta, theta) in archive {
        let model = p0.with_theta(theta.clone()).realize()?;
        let (_, suite) = evaluate_all(&model, a, b, psi, &RelationId::MODEL_SUITE, tol)?;
        if suite.universal_violations().next().is_some() {
            ev.stats.spot_check_violations += 1;
        }
        points.push(FrontierPoint {
            eps,
            eta,
            theta,
            reports: suite.reports,
        });
    }
    Ok(FrontierRun {
        points,
        stats: ev.stats,
    })
}

/// True when no point has both coordinates ≤ another's with one strict.
pub fn is_nondominated(points: &[FrontierPoint]) -> bool {
    points.iter().enumerate().all(|(i, p)| {
        points.iter().enumerate().all(|(j, q)| {
            i == j || !(q.eps <= p.eps && q.eta <= p.eta && (q.eps < p.eps || q.eta < p.eta))
        })
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiasBlowupRecord {
    pub eps_cap: f64,
    /// ε(A) of the best feasible point, `≤ eps_cap`.
    pub achieved_eps: f64,
    /// Smallest disturbance-bias norm of `B` found with `ε(A) ≤ eps_cap`.
    pub min_bias_b: f64,
    /// Evaluations spent on this cap.
    pub evaluations: usize,
    /// Last penalty coefficient used.
    pub final_penalty: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowupRun {
    pub records: Vec<BiasBlowupRecord>,
    pub penalty_schedule: Vec<f64>,
    pub stats: SearchStats,
}

/// For each cap, minimizes the disturbance bias of `B` subject to
/// `ε(A) ≤ cap` with an exact (linear) penalty on the excess.
///
/// The apparatus is a register of `max(2, #distinct eigenvalues of A)`
/// levels in `|0⟩` with the controlled-shift readout pointer; the search is
/// seeded with the precise measurement of `A` and with `U = 1`.
pub fn bias_blowup_probe(
    a: &ComplexOperator,
    b: &ComplexOperator,
    psi: &PureState,
    caps: &[f64],
    budget: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<BlowupRun> {
    validate_budget(budget)?;
    if caps.is_empty() {
        return Err(QmeasError::Validation("at least one eps cap is required".into()));
    }
    if caps.iter().any(|c| !(c.is_finite() && *c > 0.0)) || caps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(QmeasError::Validation("eps caps must be positive and strictly decreasing".into()));
    }
    let levels = crate::operator::projectors_of(a)?.len().max(2);
    let template = ModelParameterization::precise_for(a, levels)?;
    let mut ev = Evaluator::new(a, b, psi, &template, *tol)?;
    let mut rng = instance_rng(seed, 1);
    let zero = vec![0.0; template.theta.len()];
    let mut feasible: Vec<(Vec<f64>, Sample)> = Vec::new();
    for seed_theta in [template.theta.clone(), zero] {
        if let Some(s) = ev.measure(&seed_theta) {
            feasible.push((seed_theta, s));
        }
    }

    let per_cap = budget / caps.len();
    let per_round = (per_cap / PENALTY_SCHEDULE.len()).max(1);
    let mut records = Vec::with_capacity(caps.len());
    for &cap in caps {
        let before = ev.stats.evaluations;
        let incumbent = |pool: &[(Vec<f64>, Sample)]| {
            pool.iter()
                .filter(|(_, s)| s.eps <= cap)
                .min_by(|x, y| x.1.bias.total_cmp(&y.1.bias))
                .cloned()
        };
        let mut start = incumbent(&feasible)
            .map(|(t, _)| t)
            .unwrap_or_else(|| template.theta.clone());
        let mut last_mu = PENALTY_SCHEDULE[0];
        for &mu in &PENALTY_SCHEDULE {
            last_mu = mu;
            let starts = vec![start.clone(), random_theta(template.theta.len(), 0.8, &mut rng)];
            let mut local: Vec<(Vec<f64>, Sample)> = Vec::new();
            {
                let per_start = (per_round / starts.len()).max(1);
                for s0 in &starts {
                    let opts = NelderMeadOptions {
                        initial_step: 0.2,
                        max_evals: per_start,
                        f_tol: 1e-14,
                    };
                    nelder_mead(
                        |th| match ev.measure(th) {
                            Some(s) => {
                                if s.eps <= cap {
                                    local.push((th.to_vec(), s));
                                }
                                s.bias + mu * (s.eps - cap).max(0.0)
                            }
                            None => f64::INFINITY,
                        },
                        s0,
                        &opts,
                    );
                }
            }
            if let Some(best) = incumbent(&local) {
                feasible.push(best);
            }
            if let Some((t, _)) = incumbent(&feasible) {
                start = t;
            }
        }
        let (_, best) = incumbent(&feasible).ok_or_else(|| {
            QmeasError::Validation(format!("no model with eps <= {cap} was found"))
        })?;
        // keep the pool small: only points that could serve a later cap
        feasible.retain(|(_, s)| s.eps <= cap);
        records.push(BiasBlowupRecord {
            eps_cap: cap,
            achieved_eps: best.eps,
            min_bias_b: best.bias,
            evaluations: ev.stats.evaluations - before,
            final_penalty: last_mu,
        });
    }
    Ok(BlowupRun {
        records,
        penalty_schedule: PENALTY_SCHEDULE.to_vec(),
        stats: ev.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_projective_spin;
    use crate::operator::{sigma_x, sigma_y};
    use crate::quantities::{disturbance_eta, error_epsilon};

    #[test]
    fn basis_is_orthonormal_and_hermitian() {
        for d in [2, 3, 4] {
            let basis = hermitian_basis(d);
            assert_eq!(basis.len(), d * d);
            for (i, g) in basis.iter().enumerate() {
                assert!(g.is_hermitian(0.0));
                for (j, h) in basis.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g.inner(h) - C64::new(want, 0.0)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn zero_theta_realizes_identity() {
        let p = ModelParameterization::projective_spin(0.3).with_theta(vec![0.0; 16]);
        let m = p.realize().unwrap();
        assert!(m.unitary().unwrap().max_abs_diff(&ComplexOperator::identity(4)) < 1e-15);
    }

    #[test]
    fn projective_parameters_reproduce_spin_model() {
        for phi in [0.0, 0.6, 1.3] {
            let m = ModelParameterization::projective_spin(phi).realize().unwrap();
            let reference = build_projective_spin(phi);
            let psi = PureState::plus_z();
            let (e1, e2) = (
                error_epsilon(&m, &sigma_x(), &psi).unwrap(),
                error_epsilon(&reference, &sigma_x(), &psi).unwrap(),
            );
            let (h1, h2) = (
                disturbance_eta(&m, &sigma_y(), &psi).unwrap(),
                disturbance_eta(&reference, &sigma_y(), &psi).unwrap(),
            );
            assert!((e1 - e2).abs() < 1e-12 && (h1 - h2).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let mut p = ModelParameterization::projective_spin(0.0);
        p.theta[3] = f64::NAN;
        assert!(matches!(p.realize(), Err(QmeasError::NonFinite(_))));
    }

    #[test]
    fn small_budget_is_rejected() {
        let p = ModelParameterization::projective_spin(0.7);
        let err = trace_frontier(&sigma_x(), &sigma_y(), &PureState::plus_z(), &p, 10, 1, &Tolerances::default())
            .unwrap_err();
        assert!(err.to_string().contains("budget >= 100"));
    }

    #[test]
    fn caps_must_decrease() {
        let t = Tolerances::default();
        let psi = PureState::plus_z();
        assert!(bias_blowup_probe(&sigma_x(), &sigma_y(), &psi, &[0.1, 0.2], 200, 1, &t).is_err());
        assert!(bias_blowup_probe(&sigma_x(), &sigma_y(), &psi, &[], 200, 1, &t).is_err());
    }

    #[test]
    fn unconstrained_probe_reaches_zero_bias() {
        let run = bias_blowup_probe(&sigma_x(), &sigma_y(), &PureState::plus_z(), &[10.0], 200, 3, &Tolerances::default())
            .unwrap();
        assert!(run.records[0].min_bias_b < 1e-12);
    }

    #[test]
    fn equal_observables_reach_zero_bias_at_every_cap() {
        let run = bias_blowup_probe(
            &sigma_x(),
            &sigma_x(),
            &PureState::plus_z(),
            &[0.5, 0.05, 0.001],
            300,
            3,
            &Tolerances::default(),
        )
        .unwrap();
        for r in &run.records {
            assert!(r.achieved_eps <= r.eps_cap);
            assert!(r.min_bias_b < 1e-12, "{r:?}");
        }
    }
}
