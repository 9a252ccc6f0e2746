//! Closed-form box moments against composite Gauss-Legendre quadrature on
//! `[−L/2, L/2]`: 256 panels of 16 nodes.

use qmeas_core::box_norm::{check_box_relation, delta_x, BoxState};
use qmeas_core::operator::{Tolerances, C64};
use qmeas_core::random::instance_rng;
use qmeas_core::relations::RelationStatus;
use qmeas_core::runner::random_box_state;

const PANELS: usize = 256;
const ORDER: usize = 16;

/// Nodes and weights on [−1, 1] by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
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
        .collect()
}

fn integrate(l: f64, f: impl Fn(f64) -> C64) -> C64 {
    let rule = gauss_legendre(ORDER);
    let h = l / PANELS as f64;
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..PANELS {
        let mid = -l / 2.0 + (p as f64 + 0.5) * h;
        for &(x, w) in &rule {
            acc += f(mid + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    acc
}

#[test]
fn rule_integrates_polynomials() {
    assert_eq!(PANELS * ORDER, 4096);
    let rule = gauss_legendre(ORDER);
    let total: f64 = rule.iter().map(|(_, w)| w).sum();
    assert!((total - 2.0).abs() < 1e-14);
    let x30: f64 = rule.iter().map(|(x, w)| w * x.powi(30)).sum();
    assert!((x30 - 2.0 / 31.0).abs() < 1e-14);
}

#[test]
fn closed_forms_match_quadrature() {
    for i in 0..100 {
        let s = random_box_state(&mut instance_rng(31, i)).unwrap();
        let l = s.length();
        let norm = integrate(l, |x| C64::new(s.psi_at(x).norm_sqr(), 0.0)).re;
        let mean = integrate(l, |x| C64::new(x * s.psi_at(x).norm_sqr(), 0.0)).re;
        let second = integrate(l, |x| C64::new(x * x * s.psi_at(x).norm_sqr(), 0.0)).re;
        assert!((norm - 1.0).abs() < 1e-10);
        let dx = (second - mean * mean).sqrt();
        assert!((dx - delta_x(&s).unwrap()).abs() < 1e-8, "state {i}: {dx} vs {}", delta_x(&s).unwrap());

        // ⟨pψ|xψ⟩ − ⟨xψ|pψ⟩ with pψ = −iħψ'
        let hbar = s.hbar();
        let p_x = integrate(l, |x| (C64::new(0.0, -hbar) * s.dpsi_at(x)).conj() * x * s.psi_at(x));
        let quad = p_x - p_x.conj();
        assert!((quad - s.px_commutator()).norm() < 1e-8 * hbar.max(1.0) * l, "state {i}");
    }
}

#[test]
fn random_states_never_violate() {
    let tol = Tolerances::default();
    for i in 0..1000 {
        let s = random_box_state(&mut instance_rng(8, i)).unwrap();
        assert_ne!(check_box_relation(&s, &tol).unwrap().status, RelationStatus::Violated);
    }
}

#[test]
fn two_mode_values() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = BoxState::new(2.0 * std::f64::consts::PI, 1.0, 1, vec![
        C64::new(0.0, 0.0),
        C64::new(h, 0.0),
        C64::new(h, 0.0),
    ])
    .unwrap();
    let r = check_box_relation(&s, &Tolerances::default()).unwrap();
    assert!((r.rhs - 0.5).abs() < 1e-12);
    assert!((s.mean_x2() - (std::f64::consts::PI.powi(2) / 3.0 - 2.0)).abs() < 1e-12);
    assert_eq!(r.status, RelationStatus::Satisfied);
}
