//! End-to-end acceptance checks, one test per criterion. Each prints a
//! PASS/FAIL line (visible with `--nocapture`).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, SQRT_2};
use std::process::Command;
use std::time::{Duration, Instant};

use qmeas_core::audit::{strong_consequence_check, variance_decomposition_check};
use qmeas_core::box_norm::{check_box_relation, delta_x, BoxState};
use qmeas_core::frontier::{bias_blowup_probe, trace_frontier, ModelParameterization};
use qmeas_core::model::{build_noisy_unbiased, build_projective_spin};
use qmeas_core::operator::{sigma_x, sigma_y, sigma_z, PureState, Tolerances, C64};
use qmeas_core::quantities::{disturbance_eta, error_epsilon, quantity_set};
use qmeas_core::random::{instance_rng, random_instance, random_state};
use qmeas_core::relations::{evaluate_all, RelationId, RelationStatus};
use qmeas_core::runner::{random_box_state, run_campaign, run_spin_sweep, Suite, SPIN_SWEEP_STEPS};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(started: Instant, limit: Duration) -> Result<(), String> {
    let took = started.elapsed();
    ensure(took < limit, format!("took {took:?}, limit {limit:?}"))
}

fn tol() -> Tolerances {
    Tolerances::default()
}

// the rounded tabulated values trip the constant lint
#[allow(clippy::approx_constant)]
fn spin_closed_forms() -> Check {
    let started = Instant::now();
    let psi = PureState::plus_z();
    let expected = [(0.0, 0.0, 1.41421), (FRAC_PI_6, 0.51764, 1.22474), (FRAC_PI_2, 1.41421, 0.0)];
    for (phi, eps_rounded, eta_rounded) in expected {
        let m = build_projective_spin(phi);
        let eps = error_epsilon(&m, &sigma_x(), &psi).map_err(|e| e.to_string())?;
        let eta = disturbance_eta(&m, &sigma_y(), &psi).map_err(|e| e.to_string())?;
        ensure((eps - 2.0 * (phi / 2.0).sin()).abs() < 1e-10, format!("eps at {phi}: {eps}"))?;
        ensure((eta - SQRT_2 * phi.cos().abs()).abs() < 1e-10, format!("eta at {phi}: {eta}"))?;
        ensure((eps - eps_rounded).abs() < 1e-5 && (eta - eta_rounded).abs() < 1e-5, "tabulated values")?;
    }
    within(started, Duration::from_secs(1))?;
    Ok("closed forms match to 1e-10 at 0, pi/6, pi/2".into())
}

fn naive_relation_fails() -> Check {
    for phi in [0.0, FRAC_PI_2] {
        let m = build_projective_spin(phi);
        let (_, suite) = evaluate_all(&m, &sigma_x(), &sigma_y(), &PureState::plus_z(), &RelationId::MODEL_SUITE, &tol())
            .map_err(|e| e.to_string())?;
        let r4 = suite.get(RelationId::NaiveErrorDisturbance).ok_or("R4 missing")?;
        ensure(r4.lhs.abs() < 1e-10 && (r4.rhs - 1.0).abs() < 1e-12, format!("R4 values at {phi}: {r4:?}"))?;
        ensure(r4.status == RelationStatus::Violated, format!("R4 status at {phi}: {}", r4.status))?;
    }
    Ok("eps*eta = 0 < 1 reported violated at phi = 0 and pi/2".into())
}

fn universal_never_violated() -> Check {
    let started = Instant::now();
    let universal = [
        RelationId::Robertson,
        RelationId::Ozawa,
        RelationId::UniversalHeisenberg,
        RelationId::BaseDifference,
    ];
    let mut worst = f64::INFINITY;
    let sweep = run_spin_sweep(0.0, FRAC_PI_2, SPIN_SWEEP_STEPS, 0, &tol()).map_err(|e| e.to_string())?;
    ensure(sweep.records.len() == 91, "sweep size")?;
    for rec in &sweep.records {
        for r in rec.reports.iter().filter(|r| universal.contains(&r.id)) {
            ensure(r.status != RelationStatus::Violated, format!("sweep {:?} at {}", r.id, rec.parameter))?;
            worst = worst.min(r.margin);
        }
    }
    for i in 0..1000 {
        let inst = random_instance(&mut instance_rng(1234, i), 2..=4);
        let (_, suite) = evaluate_all(&inst.model, &inst.a, &inst.b, &inst.psi, &universal, &tol()).map_err(|e| e.to_string())?;
        for r in &suite.reports {
            ensure(r.status != RelationStatus::Violated, format!("instance {i}: {r:?}"))?;
            worst = worst.min(r.margin);
        }
    }
    ensure(worst >= -1e-8, format!("worst margin {worst}"))?;
    within(started, Duration::from_secs(60))?;
    Ok(format!("91 sweep points + 1000 Haar models, worst margin {worst:.3e}"))
}

fn figure_shape() -> Check {
    let sweep = run_spin_sweep(0.0, FRAC_PI_2, SPIN_SWEEP_STEPS, 0, &tol()).map_err(|e| e.to_string())?;
    let mut r6_min = f64::INFINITY;
    let mut touching = 0;
    let mut r7_below = Vec::new();
    for (i, rec) in sweep.records.iter().enumerate() {
        let r6 = sweep.report(i, RelationId::UniversalHeisenberg).ok_or("R6 missing")?;
        let r7 = sweep.report(i, RelationId::ModifiedArthursKelly).ok_or("R7 missing")?;
        ensure(r6.lhs >= 2.0 - 1e-8, format!("R6 lhs {} at {}", r6.lhs, rec.parameter))?;
        if r6.lhs <= 2.0 + 1e-8 {
            touching += 1;
        }
        r6_min = r6_min.min(r6.lhs);
        if r7.lhs < 2.0 - 1e-8 {
            r7_below.push(i);
        }
    }
    ensure(touching <= 2, format!("R6 touches the bound at {touching} points"))?;
    let r7_zero = sweep.report(0, RelationId::ModifiedArthursKelly).ok_or("R7 missing")?;
    ensure((r7_zero.lhs - 1.0).abs() < 1e-8, format!("R7 lhs at 0: {}", r7_zero.lhs))?;
    ensure(r7_below.first() == Some(&0), "R7 interval does not include phi = 0")?;
    Ok(format!(
        "min R6 lhs {r6_min:.6} >= 2; R7 lhs < 2 on {} of 91 points, = 1 at phi = 0",
        r7_below.len()
    ))
}

fn robertson_saturates_when_precise() -> Check {
    let m = build_projective_spin(0.0);
    let (_, suite) = evaluate_all(&m, &sigma_x(), &sigma_y(), &PureState::plus_z(), &RelationId::MODEL_SUITE, &tol())
        .map_err(|e| e.to_string())?;
    let r10 = suite.get(RelationId::BaseDifference).ok_or("R10 missing")?;
    ensure(r10.lhs.abs() < 1e-10 && r10.rhs.abs() < 1e-10, format!("{r10:?}"))?;
    ensure(r10.status == RelationStatus::Saturated, format!("status {}", r10.status))?;
    Ok("R10 lhs = rhs = 0, saturated at phi = 0".into())
}

fn unbiasedness_machinery() -> Check {
    let a = sigma_x();
    let model = build_noisy_unbiased(&a, &sigma_x().scale_real(0.5), &PureState::plus_z()).map_err(|e| e.to_string())?;
    for b in [sigma_y(), sigma_z()] {
        let check = strong_consequence_check(&model, &a, &b, 100, 6, &tol()).map_err(|e| e.to_string())?;
        let dev = check.max_deviation().ok_or("strong consequence skipped")?;
        ensure(dev < 1e-10, format!("cross term {dev}"))?;
    }
    let mut worst = 0.0f64;
    for i in 0..100 {
        let psi = random_state(2, &mut instance_rng(66, i));
        let (lhs, rhs) = variance_decomposition_check(&model, &a, &psi).map_err(|e| e.to_string())?;
        worst = worst.max((lhs - rhs).abs());
    }
    ensure(worst < 1e-9, format!("decomposition gap {worst}"))?;
    let q = quantity_set(&model, &a, &sigma_y(), &PureState::plus_z()).map_err(|e| e.to_string())?;
    ensure((q.sigma_mout.powi(2) - 1.25).abs() < 1e-10, format!("sigma(Mout)^2 = {}", q.sigma_mout.powi(2)))?;
    Ok(format!("cross term < 1e-10, decomposition gap {worst:.1e}, sigma(Mout)^2 = 1.25"))
}

fn inconsistency_theorem() -> Check {
    let campaign = run_campaign(Suite::UnbiasednessTheorem, 500, 99, &tol()).map_err(|e| e.to_string())?;
    ensure(campaign.summary.faults == 0, format!("{} theorem faults", campaign.summary.faults))?;
    let (a, b, psi) = (sigma_x(), sigma_y(), PureState::plus_z());
    let p0 = ModelParameterization::projective_spin(FRAC_PI_4);
    let frontier = trace_frontier(&a, &b, &psi, &p0, 4000, 3, &tol()).map_err(|e| e.to_string())?;
    ensure(frontier.stats.forbidden_hits == 0, "frontier entered the forbidden region")?;
    let probe = bias_blowup_probe(&a, &b, &psi, &[0.5, 0.2, 0.05, 0.01], 4000, 3, &tol()).map_err(|e| e.to_string())?;
    ensure(probe.stats.forbidden_hits == 0, "probe entered the forbidden region")?;
    let last = probe.records.last().ok_or("no records")?;
    ensure((last.eps_cap - 0.01).abs() < 1e-15 && last.min_bias_b > 0.0, format!("{last:?}"))?;
    Ok(format!(
        "0 forbidden hits over 500 models and {} search evaluations; min bias at cap 0.01 = {:.4}",
        frontier.stats.evaluations + probe.stats.evaluations,
        last.min_bias_b
    ))
}

/// Composite 16-point Gauss-Legendre on `[−L/2, L/2]` with 256 panels.
fn quadrature_delta_x(s: &BoxState) -> f64 {
    let n = 16;
    let rule: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect();
    let (l, panels) = (s.length(), 256);
    let h = l / panels as f64;
    let (mut m1, mut m2) = (0.0, 0.0);
    for p in 0..panels {
        let mid = -l / 2.0 + (p as f64 + 0.5) * h;
        for &(x, w) in &rule {
            let xx = mid + 0.5 * h * x;
            let rho = s.psi_at(xx).norm_sqr() * 0.5 * h * w;
            m1 += xx * rho;
            m2 += xx * xx * rho;
        }
    }
    (m2 - m1 * m1).sqrt()
}

fn box_relation() -> Check {
    let started = Instant::now();
    let single = BoxState::single_mode(3.0, 1.0, 4, 2).map_err(|e| e.to_string())?;
    let r = check_box_relation(&single, &tol()).map_err(|e| e.to_string())?;
    ensure(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12, format!("{r:?}"))?;
    ensure(r.status == RelationStatus::Saturated, "single mode not saturated")?;
    let mut worst_dx = 0.0f64;
    for i in 0..1000 {
        let s = random_box_state(&mut instance_rng(404, i)).map_err(|e| e.to_string())?;
        let r = check_box_relation(&s, &tol()).map_err(|e| e.to_string())?;
        ensure(r.status != RelationStatus::Violated, format!("state {i}: {r:?}"))?;
        if i < 50 {
            worst_dx = worst_dx.max((delta_x(&s).map_err(|e| e.to_string())? - quadrature_delta_x(&s)).abs());
        }
    }
    ensure(worst_dx < 1e-8, format!("delta x vs quadrature {worst_dx}"))?;
    let two = BoxState::new(2.0 * std::f64::consts::PI, 1.0, 1, vec![
        C64::new(0.0, 0.0),
        C64::new(0.5f64.sqrt(), 0.0),
        C64::new(0.5f64.sqrt(), 0.0),
    ])
    .map_err(|e| e.to_string())?;
    ensure((delta_x(&two).map_err(|e| e.to_string())? - quadrature_delta_x(&two)).abs() < 1e-8, "two-mode delta x")?;
    within(started, Duration::from_secs(30))?;
    Ok(format!("single mode saturated, 1000 random states ok, delta x vs 4096-node quadrature {worst_dx:.1e}"))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qmeas"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), format!("{args:?} exited with {:?}", out.status.code()))?;
    Ok(out.stdout)
}

fn determinism() -> Check {
    let sweep = ["spin-sweep", "--seed", "7"];
    let campaign = ["campaign", "--suite", "universal-relations", "--instances", "200", "--seed", "7"];
    for args in [&sweep[..], &campaign[..]] {
        let first = run_cli(args)?;
        let second = run_cli(args)?;
        ensure(!first.is_empty() && first == second, format!("{args:?} output differs between runs"))?;
    }
    let other = run_cli(&["campaign", "--suite", "universal-relations", "--instances", "200", "--seed", "8"])?;
    ensure(other != run_cli(&campaign)?, "campaign output ignores the seed")?;
    let code = Command::new(env!("CARGO_BIN_EXE_qmeas"))
        .args(["frontier", "--budget", "10"])
        .output()
        .map_err(|e| e.to_string())?
        .status
        .code();
    ensure(code == Some(2), format!("validation exit code {code:?}"))?;
    Ok("spin-sweep and campaign CSV byte-identical across runs".into())
}

fn report(number: usize, name: &str, check: fn() -> Check) {
    match check() {
        Ok(detail) => println!("criterion {number}: PASS {name}: {detail}"),
        Err(why) => {
            println!("criterion {number}: FAIL {name}: {why}");
            panic!("criterion {number} failed: {why}");
        }
    }
}

#[test]
fn criterion_1_spin_closed_forms() {
    report(1, "spin scenario closed forms", spin_closed_forms);
}

#[test]
fn criterion_2_naive_relation_failure() {
    report(2, "naive relation failure", naive_relation_fails);
}

#[test]
fn criterion_3_universal_relations_never_violated() {
    report(3, "universal relations never violated", universal_never_violated);
}

#[test]
fn criterion_4_figure_shape() {
    report(4, "figure shape reproduction", figure_shape);
}

#[test]
fn criterion_5_robertson_saturation() {
    report(5, "robertson saturation at precise measurement", robertson_saturates_when_precise);
}

#[test]
fn criterion_6_unbiasedness_machinery() {
    report(6, "unbiasedness machinery", unbiasedness_machinery);
}

#[test]
fn criterion_7_inconsistency_theorem() {
    report(7, "inconsistency theorem", inconsistency_theorem);
}

#[test]
fn criterion_8_box_relation() {
    report(8, "box relation", box_relation);
}

#[test]
fn criterion_9_determinism() {
    report(9, "determinism", determinism);
}
