//! System ⊗ apparatus measurement models in the Heisenberg picture.
//!
//! A model either stores the final interaction unitary `U` (outputs are
//! `U† X U`) or, in the abstract form, stores the pointer output operators
//! directly. Total-space index ordering is `system_index * d_app + app_index`.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{QmeasError, Result};
use crate::operator::{
    commutator, projectors_of, tensor, ComplexOperator, PureState, SpectralProjector, C64,
};

/// Label of the primary pointer observable.
pub const POINTER_M: &str = "M";
/// Label of the optional second pointer observable.
pub const POINTER_N: &str = "N";

/// Validation tolerance applied when a model is constructed.
pub const MODEL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub enum Dynamics {
    Unitary(ComplexOperator),
    /// Output operators given directly; `[m_out, n_out] = 0` is enforced.
    Abstract {
        m_out: ComplexOperator,
        n_out: Option<ComplexOperator>,
    },
}

#[derive(Clone, Debug)]
pub struct MeasurementModel {
    d_sys: usize,
    d_app: usize,
    xi: PureState,
    dynamics: Dynamics,
    pointers: BTreeMap<String, ComplexOperator>,
}

/// The initial joint state `ψ ⊗ ξ`.
#[derive(Clone, Debug)]
pub struct JointState {
    pub psi: PureState,
    pub full: PureState,
}

impl MeasurementModel {
    /// Unitary-generated model. Pointers act on the apparatus factor.
    pub fn from_unitary(
        d_sys: usize,
        d_app: usize,
        xi: PureState,
        u: ComplexOperator,
        pointers: BTreeMap<String, ComplexOperator>,
    ) -> Result<Self> {
        if d_sys == 0 || d_app == 0 {
            return Err(QmeasError::Validation("model dimensions must be positive".into()));
        }
        expect_dim(d_app, xi.dim())?;
        expect_dim(d_sys * d_app, u.dim())?;
        if !u.is_finite() {
            return Err(QmeasError::NonFinite("interaction unitary"));
        }
        let defect = u.unitarity_defect();
        if defect > MODEL_TOL {
            return Err(QmeasError::NotUnitary(defect));
        }
        for p in pointers.values() {
            expect_dim(d_app, p.dim())?;
            let h = p.hermiticity_defect();
            if h > MODEL_TOL {
                return Err(QmeasError::NotHermitian(h));
            }
        }
        check_pointers_commute(&pointers)?;
        Ok(Self {
            d_sys,
            d_app,
            xi,
            dynamics: Dynamics::Unitary(u),
            pointers,
        })
    }

    /// Abstract model specified by its output operators on the total space.
    pub fn from_outputs(
        d_sys: usize,
        d_app: usize,
        xi: PureState,
        m_out: ComplexOperator,
        n_out: Option<ComplexOperator>,
    ) -> Result<Self> {
        if d_sys == 0 || d_app == 0 {
            return Err(QmeasError::Validation("model dimensions must be positive".into()));
        }
        expect_dim(d_app, xi.dim())?;
        for op in std::iter::once(&m_out).chain(n_out.as_ref()) {
            expect_dim(d_sys * d_app, op.dim())?;
            let h = op.hermiticity_defect();
            if h > MODEL_TOL {
                return Err(QmeasError::NotHermitian(h));
            }
        }
        if let Some(n) = &n_out {
            if commutator(&m_out, n)?.frobenius_norm() > MODEL_TOL {
                return Err(QmeasError::PointersDoNotCommute(POINTER_M.into(), POINTER_N.into()));
            }
        }
        Ok(Self {
            d_sys,
            d_app,
            xi,
            dynamics: Dynamics::Abstract { m_out, n_out },
            pointers: BTreeMap::new(),
        })
    }

    pub fn d_sys(&self) -> usize {
        self.d_sys
    }

    pub fn d_app(&self) -> usize {
        self.d_app
    }

    pub fn d_total(&self) -> usize {
        self.d_sys * self.d_app
    }

    pub fn xi(&self) -> &PureState {
        &self.xi
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn unitary(&self) -> Option<&ComplexOperator> {
        match &self.dynamics {
            Dynamics::Unitary(u) => Some(u),
            Dynamics::Abstract { .. } => None,
        }
    }

    pub fn pointers(&self) -> &BTreeMap<String, ComplexOperator> {
        &self.pointers
    }

    pub fn pointer(&self, label: &str) -> Result<&ComplexOperator> {
        self.pointers
            .get(label)
            .ok_or_else(|| QmeasError::MissingPointer(label.to_string()))
    }

    pub fn has_pointer(&self, label: &str) -> bool {
        match &self.dynamics {
            Dynamics::Unitary(_) => self.pointers.contains_key(label),
            Dynamics::Abstract { n_out, .. } => {
                label == POINTER_M || (label == POINTER_N && n_out.is_some())
            }
        }
    }

    /// `A ⊗ 1`
    pub fn lift_system(&self, a: &ComplexOperator) -> Result<ComplexOperator> {
        expect_dim(self.d_sys, a.dim())?;
        Ok(tensor(a, &ComplexOperator::identity(self.d_app)))
    }

    /// `1 ⊗ Y`
    pub fn lift_apparatus(&self, y: &ComplexOperator) -> Result<ComplexOperator> {
        expect_dim(self.d_app, y.dim())?;
        Ok(tensor(&ComplexOperator::identity(self.d_sys), y))
    }

    pub fn joint_state(&self, psi: &PureState) -> Result<JointState> {
        expect_dim(self.d_sys, psi.dim())?;
        Ok(JointState {
            psi: psi.clone(),
            full: psi.tensor(&self.xi),
        })
    }

    /// `U† X U` for an operator on the total space.
    pub fn heisenberg_out(&self, x_total: &ComplexOperator) -> Result<ComplexOperator> {
        expect_dim(self.d_total(), x_total.dim())?;
        match &self.dynamics {
            Dynamics::Unitary(u) => Ok(&(&u.adjoint() * x_total) * u),
            Dynamics::Abstract { .. } => Err(QmeasError::NoDynamics),
        }
    }

    /// `U† (1 ⊗ P) U` for the pointer with the given label.
    pub fn pointer_out(&self, label: &str) -> Result<ComplexOperator> {
        match &self.dynamics {
            Dynamics::Unitary(_) => {
                let p = self.pointer(label)?;
                self.heisenberg_out(&self.lift_apparatus(p)?)
            }
            Dynamics::Abstract { m_out, n_out } => match label {
                POINTER_M => Ok(m_out.clone()),
                POINTER_N => n_out
                    .clone()
                    .ok_or_else(|| QmeasError::MissingPointer(label.to_string())),
                _ => Err(QmeasError::MissingPointer(label.to_string())),
            },
        }
    }

    pub fn m_out(&self) -> Result<ComplexOperator> {
        self.pointer_out(POINTER_M)
    }

    pub fn n_out(&self) -> Result<ComplexOperator> {
        self.pointer_out(POINTER_N)
    }

    /// `U† (B ⊗ 1) U`; unavailable on abstract models.
    pub fn b_out(&self, b: &ComplexOperator) -> Result<ComplexOperator> {
        let h = b.hermiticity_defect();
        if h > MODEL_TOL {
            return Err(QmeasError::NotHermitian(h));
        }
        self.heisenberg_out(&self.lift_system(b)?)
    }

    /// `(1 ⊗ ⟨ξ|) X (1 ⊗ |ξ⟩)` as an operator on the system.
    pub fn reduce_to_system(&self, x_total: &ComplexOperator) -> Result<ComplexOperator> {
        expect_dim(self.d_total(), x_total.dim())?;
        let (ds, da) = (self.d_sys, self.d_app);
        let xi = self.xi.amplitudes();
        let x = x_total.matrix();
        let mut entries = vec![C64::new(0.0, 0.0); ds * ds];
        for i in 0..ds {
            for j in 0..ds {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..da {
                    let mut row = C64::new(0.0, 0.0);
                    for b in 0..da {
                        row += x[(i * da + a, j * da + b)] * xi[b];
                    }
                    acc += xi[a].conj() * row;
                }
                entries[i * ds + j] = acc;
            }
        }
        ComplexOperator::from_row_major(ds, &entries)
    }
}

fn expect_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(QmeasError::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_pointers_commute(pointers: &BTreeMap<String, ComplexOperator>) -> Result<()> {
    let list: Vec<_> = pointers.iter().collect();
    for (i, (la, pa)) in list.iter().enumerate() {
        for (lb, pb) in &list[i + 1..] {
            if commutator(pa, pb)?.frobenius_norm() > MODEL_TOL {
                return Err(QmeasError::PointersDoNotCommute(la.to_string(), lb.to_string()));
            }
        }
    }
    Ok(())
}

/// Cyclic shift `|j⟩ → |j+1 mod d⟩`.
pub fn cyclic_shift(d: usize) -> ComplexOperator {
    let mut entries = vec![C64::new(0.0, 0.0); d * d];
    for j in 0..d {
        entries[((j + 1) % d) * d + j] = C64::new(1.0, 0.0);
    }
    ComplexOperator::from_row_major(d, &entries).unwrap()
}

/// Hermitian `L` with `exp(iL)` equal to the cyclic shift on `d` levels.
pub fn cyclic_shift_generator(d: usize) -> ComplexOperator {
    let mut acc = ComplexOperator::zeros(d);
    let norm = (d as f64).sqrt();
    for j in 1..d {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / d as f64;
        let f = DVector::from_iterator(
            d,
            (0..d).map(|m| C64::from_polar(1.0 / norm, -theta * m as f64)),
        );
        acc = &acc + &ComplexOperator::outer(&f, &f).scale_real(theta);
    }
    acc
}

fn power(op: &ComplexOperator, k: usize) -> ComplexOperator {
    (0..k).fold(ComplexOperator::identity(op.dim()), |acc, _| &acc * op)
}

/// Spectral projectors ordered by decreasing eigenvalue.
fn descending_projectors(a: &ComplexOperator) -> Result<Vec<SpectralProjector>> {
    let mut p = projectors_of(a)?;
    p.reverse();
    Ok(p)
}

/// Pointer `diag(λ_0, …, λ_{r-1}, 0, …)` on a `d`-level register.
fn readout_pointer(projectors: &[SpectralProjector], d: usize) -> ComplexOperator {
    let mut diag = vec![0.0; d];
    for (k, sp) in projectors.iter().enumerate() {
        diag[k] = sp.eigenvalue;
    }
    ComplexOperator::diagonal(&diag)
}

/// Precise projective measurement of a Hermitian `A` by a controlled shift.
///
/// The register starts in `|0⟩` and the `k`-th eigenspace of `A` (eigenvalues
/// in decreasing order) shifts it to `|k⟩`; the pointer reads `λ_k` there.
/// `U = Σ_k P_k ⊗ S^k`. The register has `d_app` levels, at least the number
/// of distinct eigenvalues.
pub fn build_projective(a: &ComplexOperator, d_app: usize) -> Result<MeasurementModel> {
    let projectors = descending_projectors(a)?;
    if projectors.len() > d_app {
        return Err(QmeasError::Validation(format!(
            "register of {d_app} levels cannot record {} outcomes",
            projectors.len()
        )));
    }
    let shift = cyclic_shift(d_app);
    let mut u = ComplexOperator::zeros(a.dim() * d_app);
    for (k, sp) in projectors.iter().enumerate() {
        u = &u + &tensor(&sp.projector, &power(&shift, k));
    }
    let mut pointers = BTreeMap::new();
    pointers.insert(POINTER_M.to_string(), readout_pointer(&projectors, d_app));
    MeasurementModel::from_unitary(a.dim(), d_app, PureState::basis(d_app, 0), u, pointers)
}

/// Hermitian generator `H = Σ_k P_k ⊗ k·L` with `exp(iH)` equal to the
/// unitary of [`build_projective`].
pub fn projective_generator(a: &ComplexOperator, d_app: usize) -> Result<ComplexOperator> {
    let projectors = descending_projectors(a)?;
    let l = cyclic_shift_generator(d_app);
    let mut h = ComplexOperator::zeros(a.dim() * d_app);
    for (k, sp) in projectors.iter().enumerate() {
        h = &h + &tensor(&sp.projector, &l.scale_real(k as f64));
    }
    Ok(h)
}

/// Readout pointer used by [`build_projective`].
pub fn projective_pointer(a: &ComplexOperator, d_app: usize) -> Result<ComplexOperator> {
    Ok(readout_pointer(&descending_projectors(a)?, d_app))
}

/// Projective spin measurement along `σφ = cos φ σx + sin φ σy`.
///
/// `ξ = |0⟩`, `U = P₊(φ) ⊗ 1 + P₋(φ) ⊗ σx`, pointer `σz`.
pub fn build_projective_spin(phi: f64) -> MeasurementModel {
    build_projective(&crate::operator::sigma_phi(phi), 2)
        .expect("qubit projective construction is always valid")
}

/// Unbiased noisy measurement: `M^out` acts as `A ⊗ 1 + 1 ⊗ noise` on every
/// `ψ ⊗ ξ_total`.
///
/// The apparatus is a readout register (prepared in `|0⟩`, as in
/// [`build_projective`]) tensored with a noise space prepared in `xi`. The
/// pointer is `Λ ⊗ 1 + 1 ⊗ noise`.
pub fn build_noisy_unbiased(
    a: &ComplexOperator,
    noise_pointer: &ComplexOperator,
    xi: &PureState,
) -> Result<MeasurementModel> {
    expect_dim(noise_pointer.dim(), xi.dim())?;
    let h = noise_pointer.hermiticity_defect();
    if h > MODEL_TOL {
        return Err(QmeasError::NotHermitian(h));
    }
    let mean = crate::operator::expectation(noise_pointer, xi)?;
    if mean.norm() > MODEL_TOL {
        return Err(QmeasError::BiasedNoise(mean.norm()));
    }
    let projectors = descending_projectors(a)?;
    let reg = projectors.len().max(2);
    let dn = noise_pointer.dim();
    let shift = cyclic_shift(reg);
    let id_noise = ComplexOperator::identity(dn);
    let mut u = ComplexOperator::zeros(a.dim() * reg * dn);
    for (k, sp) in projectors.iter().enumerate() {
        u = &u + &tensor(&sp.projector, &tensor(&power(&shift, k), &id_noise));
    }
    let pointer = &tensor(&readout_pointer(&projectors, reg), &id_noise)
        + &tensor(&ComplexOperator::identity(reg), noise_pointer);
    let mut pointers = BTreeMap::new();
    pointers.insert(POINTER_M.to_string(), pointer);
    let xi_total = PureState::basis(reg, 0).tensor(xi);
    MeasurementModel::from_unitary(a.dim(), reg * dn, xi_total, u, pointers)
}

/// Jointly unbiased two-pointer model for `A` and `B`.
///
/// A fair coin (apparatus qubit in `|+⟩`) selects which observable is read
/// projectively into a shared register. The pointers `M = 2|0⟩⟨0| ⊗ Λ_A` and
/// `N = 2|1⟩⟨1| ⊗ Λ_B` commute, and `⟨M^out⟩ = ⟨A⟩`, `⟨N^out⟩ = ⟨B⟩` for
/// every system state.
pub fn build_joint_unbiased(a: &ComplexOperator, b: &ComplexOperator) -> Result<MeasurementModel> {
    expect_dim(a.dim(), b.dim())?;
    let pa = descending_projectors(a)?;
    let pb = descending_projectors(b)?;
    let reg = pa.len().max(pb.len()).max(2);
    let shift = cyclic_shift(reg);
    let coin0 = ComplexOperator::diagonal(&[1.0, 0.0]);
    let coin1 = ComplexOperator::diagonal(&[0.0, 1.0]);
    let mut u = ComplexOperator::zeros(a.dim() * 2 * reg);
    for (k, sp) in pa.iter().enumerate() {
        u = &u + &tensor(&sp.projector, &tensor(&coin0, &power(&shift, k)));
    }
    for (k, sp) in pb.iter().enumerate() {
        u = &u + &tensor(&sp.projector, &tensor(&coin1, &power(&shift, k)));
    }
    let mut pointers = BTreeMap::new();
    pointers.insert(
        POINTER_M.to_string(),
        tensor(&coin0, &readout_pointer(&pa, reg)).scale_real(2.0),
    );
    pointers.insert(
        POINTER_N.to_string(),
        tensor(&coin1, &readout_pointer(&pb, reg)).scale_real(2.0),
    );
    let xi = PureState::plus_x().tensor(&PureState::basis(reg, 0));
    MeasurementModel::from_unitary(a.dim(), 2 * reg, xi, u, pointers)
}

/// Trivial interaction `U = 1` with pointer `M` on the apparatus.
pub fn build_no_interaction(d_sys: usize, xi: PureState, pointer: ComplexOperator) -> Result<MeasurementModel> {
    let d_app = xi.dim();
    let mut pointers = BTreeMap::new();
    pointers.insert(POINTER_M.to_string(), pointer);
    MeasurementModel::from_unitary(
        d_sys,
        d_app,
        xi,
        ComplexOperator::identity(d_sys * d_app),
        pointers,
    )
}
