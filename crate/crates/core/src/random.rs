//! Seeded random instances: Hermitian operators, states, Haar unitaries,
//! and whole measurement models.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{MeasurementModel, POINTER_M, POINTER_N};
use crate::operator::{ComplexOperator, PureState, C64};

/// Deterministic per-instance generator: stream `index` of `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Ginibre matrix with i.i.d. standard complex Gaussian entries.
fn ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |_, _| gaussian_c64(rng))
}

/// `(G + G†)/2` for a Ginibre `G`.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexOperator {
    let g = ginibre(d, rng);
    ComplexOperator::from_matrix((&g + g.adjoint()) * C64::new(0.5, 0.0))
}

pub fn random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    loop {
        let v: Vec<C64> = (0..d).map(|_| gaussian_c64(rng)).collect();
        if let Ok(s) = PureState::normalized(v) {
            return s;
        }
    }
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexOperator {
    let qr = ginibre(d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    ComplexOperator::from_matrix(q)
}

/// A random instance for relation checks.
#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub model: MeasurementModel,
    pub a: ComplexOperator,
    pub b: ComplexOperator,
    pub psi: PureState,
}

/// Haar-random model with system and apparatus dimensions drawn from
/// `dims`, a random apparatus state, a random pointer `M` and a second
/// pointer `N` diagonal in the same eigenbasis (so `[M, N] = 0`).
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    dims: std::ops::RangeInclusive<usize>,
) -> RandomInstance {
    let d_sys = rng.random_range(dims.clone());
    let d_app = rng.random_range(dims);
    let u = haar_unitary(d_sys * d_app, rng);
    let xi = random_state(d_app, rng);
    let basis = haar_unitary(d_app, rng);
    let spectrum = |rng: &mut R| {
        let vals = DVector::from_iterator(d_app, (0..d_app).map(|_| C64::new(rng.sample(StandardNormal), 0.0)));
        let v = basis.matrix();
        ComplexOperator::from_matrix(v * DMatrix::from_diagonal(&vals) * v.adjoint())
    };
    let m = spectrum(rng);
    let n = spectrum(rng);
    let mut pointers = BTreeMap::new();
    pointers.insert(POINTER_M.to_string(), hermitize(&m));
    pointers.insert(POINTER_N.to_string(), hermitize(&n));
    let model = MeasurementModel::from_unitary(d_sys, d_app, xi, u, pointers)
        .expect("random model satisfies construction invariants");
    RandomInstance {
        a: random_hermitian(d_sys, rng),
        b: random_hermitian(d_sys, rng),
        psi: random_state(d_sys, rng),
        model,
    }
}

fn hermitize(x: &ComplexOperator) -> ComplexOperator {
    (x + &x.adjoint()).scale_real(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = instance_rng(7, 0);
        for d in 1..=16 {
            assert!(haar_unitary(d, &mut rng).is_unitary(1e-12));
        }
    }

    #[test]
    fn random_hermitian_is_hermitian() {
        let mut rng = instance_rng(7, 1);
        for d in 1..=8 {
            assert!(random_hermitian(d, &mut rng).is_hermitian(0.0));
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = random_state(4, &mut instance_rng(3, 5));
        let b = random_state(4, &mut instance_rng(3, 5));
        let c = random_state(4, &mut instance_rng(3, 6));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_instances_have_commuting_pointers() {
        let mut rng = instance_rng(11, 0);
        for _ in 0..20 {
            let inst = random_instance(&mut rng, 2..=4);
            assert!(inst.model.has_pointer(POINTER_N));
            assert_eq!(inst.a.dim(), inst.model.d_sys());
        }
    }
}
