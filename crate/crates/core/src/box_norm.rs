//! Position-momentum relation on the periodic interval `[-L/2, L/2]`.
//!
//! States are expanded in plane waves `e^{i 2πn x/L}/√L`, `n ∈ [-n_max, n_max]`.
//! Momentum is diagonal (`p_n = 2πħn/L`). Position is the coordinate on the
//! interval, not a periodic variable, so its plane-wave matrix elements carry
//! the `(−1)^{n−m}` boundary factors below:
//!
//! ```text
//! (1/L)∫ x  e^{iκx} dx = −i(−1)^j / κ        (κ = 2πj/L, j ≠ 0), 0 for j = 0
//! (1/L)∫ x² e^{iκx} dx =  2(−1)^j / κ²       (j ≠ 0),            L²/12 for j = 0
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{QmeasError, Result};
use crate::operator::{sqrt_clamped, Tolerances, C64};
use crate::relations::{RelationId, RelationReport};

#[derive(Clone, Debug, PartialEq)]
pub struct BoxState {
    length: f64,
    hbar: f64,
    n_max: usize,
    /// Index `k` holds mode `n = k − n_max`.
    coeffs: Vec<C64>,
}

impl BoxState {
    pub fn new(length: f64, hbar: f64, n_max: usize, coeffs: Vec<C64>) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(QmeasError::Validation(format!("interval length must be positive, got {length}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(QmeasError::Validation(format!("hbar must be positive, got {hbar}")));
        }
        if coeffs.len() != 2 * n_max + 1 {
            return Err(QmeasError::DimensionMismatch {
                expected: 2 * n_max + 1,
                found: coeffs.len(),
            });
        }
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(QmeasError::NonFinite("box coefficients"));
        }
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QmeasError::NotNormalized(norm));
        }
        Ok(Self {
            length,
            hbar,
            n_max,
            coeffs,
        })
    }

    /// Rescales the coefficients to unit norm before validating.
    pub fn normalized(length: f64, hbar: f64, n_max: usize, mut coeffs: Vec<C64>) -> Result<Self> {
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QmeasError::NotNormalized(norm));
        }
        for c in &mut coeffs {
            *c /= norm;
        }
        Self::new(length, hbar, n_max, coeffs)
    }

    /// Momentum eigenstate `e^{i2πnx/L}/√L`.
    pub fn single_mode(length: f64, hbar: f64, n_max: usize, n: i64) -> Result<Self> {
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * n_max + 1];
        let k = n + n_max as i64;
        if k < 0 || k as usize >= coeffs.len() {
            return Err(QmeasError::Validation(format!("mode {n} outside cutoff {n_max}")));
        }
        coeffs[k as usize] = C64::new(1.0, 0.0);
        Self::new(length, hbar, n_max, coeffs)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// `(mode index n, coefficient)` pairs.
    pub fn modes(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let off = self.n_max as i64;
        self.coeffs.iter().enumerate().map(move |(k, &c)| (k as i64 - off, c))
    }

    pub fn momentum(&self, n: i64) -> f64 {
        2.0 * PI * self.hbar * n as f64 / self.length
    }

    /// `ψ(x) = Σ c_n e^{i2πnx/L}/√L`
    pub fn psi_at(&self, x: f64) -> C64 {
        let k0 = 2.0 * PI / self.length;
        let s = self
            .modes()
            .map(|(n, c)| c * C64::from_polar(1.0, k0 * n as f64 * x))
            .sum::<C64>();
        s / self.length.sqrt()
    }

    /// `ψ'(x)`
    pub fn dpsi_at(&self, x: f64) -> C64 {
        let k0 = 2.0 * PI / self.length;
        let s = self
            .modes()
            .map(|(n, c)| c * C64::new(0.0, k0 * n as f64) * C64::from_polar(1.0, k0 * n as f64 * x))
            .sum::<C64>();
        s / self.length.sqrt()
    }

    /// `ψ(L/2) = Σ c_n (−1)^n / √L`
    pub fn psi_boundary(&self) -> C64 {
        let s = self.modes().map(|(n, c)| if n % 2 == 0 { c } else { -c }).sum::<C64>();
        s / self.length.sqrt()
    }

    pub fn mean_p(&self) -> f64 {
        self.modes().map(|(n, c)| c.norm_sqr() * self.momentum(n)).sum()
    }

    /// `⟨x⟩` from the closed-form plane-wave matrix elements.
    pub fn mean_x(&self) -> f64 {
        self.pair_sum(|j, kappa| {
            if j == 0 {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, -sign(j) / kappa)
            }
        })
        .re
    }

    /// `⟨x²⟩` from the closed-form plane-wave matrix elements.
    pub fn mean_x2(&self) -> f64 {
        let l2 = self.length * self.length;
        self.pair_sum(|j, kappa| {
            if j == 0 {
                C64::new(l2 / 12.0, 0.0)
            } else {
                C64::new(2.0 * sign(j) / (kappa * kappa), 0.0)
            }
        })
        .re
    }

    /// `Σ_{m,n} c_m* c_n f(n − m, 2π(n−m)/L)`
    fn pair_sum(&self, f: impl Fn(i64, f64) -> C64) -> C64 {
        let k0 = 2.0 * PI / self.length;
        let modes: Vec<(i64, C64)> = self.modes().filter(|(_, c)| c.norm_sqr() > 0.0).collect();
        let mut acc = C64::new(0.0, 0.0);
        for &(m, cm) in &modes {
            for &(n, cn) in &modes {
                let j = n - m;
                acc += cm.conj() * cn * f(j, k0 * j as f64);
            }
        }
        acc
    }

    /// `⟨pψ|xψ⟩ − ⟨xψ|pψ⟩` with `p` acting on the periodic state.
    ///
    /// Equals `−iħ(1 − L|ψ(L/2)|²)`; the boundary term is what separates it
    /// from the line value `−iħ`.
    pub fn px_commutator(&self) -> C64 {
        let k0 = 2.0 * PI / self.length;
        // ⟨pψ|xψ⟩ = Σ_{m,n} c_m* c_n p_m X_{mn}
        let modes: Vec<(i64, C64)> = self.modes().filter(|(_, c)| c.norm_sqr() > 0.0).collect();
        let mut px = C64::new(0.0, 0.0);
        for &(m, cm) in &modes {
            for &(n, cn) in &modes {
                let j = n - m;
                if j != 0 {
                    let x_mn = C64::new(0.0, -sign(j) / (k0 * j as f64));
                    px += cm.conj() * cn * self.momentum(m) * x_mn;
                }
            }
        }
        px - px.conj()
    }
}

fn sign(j: i64) -> f64 {
    if j.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Standard deviation of momentum under the weights `|c_n|²`.
pub fn delta_p(s: &BoxState) -> Result<f64> {
    let mean = s.mean_p();
    let var: f64 = s
        .modes()
        .map(|(n, c)| c.norm_sqr() * (s.momentum(n) - mean).powi(2))
        .sum();
    sqrt_clamped(var, 1e-10)
}

pub fn delta_x(s: &BoxState) -> Result<f64> {
    let mean = s.mean_x();
    let var = s.mean_x2() - mean * mean;
    // relative to L² since the moments scale with it
    sqrt_clamped(var, 1e-10 * s.length * s.length)
}

/// `(ħ/2)|1 − L|ψ(L/2)|²|`
pub fn boundary_term(s: &BoxState) -> f64 {
    0.5 * s.hbar * (1.0 - s.length * s.psi_boundary().norm_sqr()).abs()
}

/// `Δp Δx ≥ (ħ/2)|1 − L|ψ(L/2)|²|`
pub fn check_box_relation(s: &BoxState, tol: &Tolerances) -> Result<RelationReport> {
    Ok(RelationReport::new(
        RelationId::BoxPx,
        delta_p(s)? * delta_x(s)?,
        boundary_term(s),
        tol.tol_rel,
    ))
}

/// File layout for [`BoxState`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxStateDocument {
    #[serde(rename = "L")]
    pub length: f64,
    pub hbar: f64,
    pub n_max: usize,
    /// `(re, im)` for modes `-n_max..=n_max`.
    pub coefficients: Vec<(f64, f64)>,
}

impl From<&BoxState> for BoxStateDocument {
    fn from(s: &BoxState) -> Self {
        Self {
            length: s.length,
            hbar: s.hbar,
            n_max: s.n_max,
            coefficients: s.coeffs.iter().map(|c| (c.re, c.im)).collect(),
        }
    }
}

impl TryFrom<BoxStateDocument> for BoxState {
    type Error = QmeasError;
    fn try_from(d: BoxStateDocument) -> Result<Self> {
        let coeffs = d.coefficients.iter().map(|&(re, im)| C64::new(re, im)).collect();
        BoxState::new(d.length, d.hbar, d.n_max, coeffs)
    }
}

impl BoxState {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&BoxStateDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<BoxStateDocument>(text)?.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::RelationStatus;

    fn two_mode() -> BoxState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut c = vec![C64::new(0.0, 0.0); 5];
        c[2] = C64::new(h, 0.0);
        c[3] = C64::new(h, 0.0);
        BoxState::new(2.0 * PI, 1.0, 2, c).unwrap()
    }

    #[test]
    fn single_mode_is_saturated() {
        for (n, l) in [(3, 2.0 * PI), (0, 1.0), (-2, 7.5)] {
            let s = BoxState::single_mode(l, 1.0, 4, n).unwrap();
            assert!(delta_p(&s).unwrap().abs() < 1e-14);
            assert!((delta_x(&s).unwrap() - l / 12f64.sqrt()).abs() < 1e-12);
            assert!(boundary_term(&s).abs() < 1e-14);
            let r = check_box_relation(&s, &Tolerances::default()).unwrap();
            assert_eq!(r.status, RelationStatus::Saturated);
        }
    }

    #[test]
    fn two_mode_values() {
        let s = two_mode();
        assert!((delta_p(&s).unwrap() - 0.5).abs() < 1e-14);
        assert!((boundary_term(&s) - 0.5).abs() < 1e-14);
        // ⟨x⟩ = 0, ⟨x²⟩ = π²/3 − 2
        assert!(s.mean_x().abs() < 1e-14);
        assert!((s.mean_x2() - (PI * PI / 3.0 - 2.0)).abs() < 1e-13);
        let r = check_box_relation(&s, &Tolerances::default()).unwrap();
        assert_eq!(r.status, RelationStatus::Satisfied);
    }

    #[test]
    fn symmetric_coefficients_have_zero_mean_momentum() {
        let c: Vec<C64> = (-3i64..=3).map(|n| C64::new(1.0 / (1.0 + n.abs() as f64), 0.2)).collect();
        let s = BoxState::normalized(3.0, 1.0, 3, c).unwrap();
        assert!(s.mean_p().abs() < 1e-14);
    }

    #[test]
    fn vanishing_boundary_gives_half_hbar() {
        let s = two_mode();
        assert!(s.psi_boundary().norm() < 1e-15);
        let scaled = BoxState::new(2.0 * PI, 3.0, 2, s.coeffs().to_vec()).unwrap();
        assert!((boundary_term(&scaled) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn commutator_matches_boundary_formula() {
        let c: Vec<C64> = (0..9).map(|k| C64::new((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos())).collect();
        let s = BoxState::normalized(4.2, 1.3, 4, c).unwrap();
        let want = C64::new(0.0, -s.hbar()) * (1.0 - s.length() * s.psi_boundary().norm_sqr());
        assert!((s.px_commutator() - want).norm() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(BoxState::new(0.0, 1.0, 0, vec![C64::new(1.0, 0.0)]).is_err());
        assert!(BoxState::new(1.0, 1.0, 1, vec![C64::new(1.0, 0.0)]).is_err());
        assert!(BoxState::new(1.0, 1.0, 0, vec![C64::new(2.0, 0.0)]).is_err());
        assert!(BoxState::single_mode(1.0, 1.0, 2, 5).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = two_mode();
        let back = BoxState::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
