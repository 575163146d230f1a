//! Composite ion–phonon Hilbert space.
//!
//! Every ion carries four internal levels ([`IonLevel`]); the CM mode is a Fock space
//! truncated at `n_max`. Flat indices are ion-major and phonon-minor: ion 0 is the most
//! significant digit (base 4), the phonon number the least significant (base
//! `n_max + 1`), so `index = (((l_0·4 + l_1)·4 + …)·(n_max+1)) + n`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_eigen, psd_sqrt, trace_norm};
use crate::{Error, Result, C64};

/// Population allowed on the top Fock level before a phonon-adding operation aborts.
pub const LEAK_TOL: f64 = 1e-8;

/// Populations at or below this are treated as "no support" in domain checks.
pub const SUPPORT_TOL: f64 = 1e-16;

pub const DEFAULT_N_MAX: usize = 32;

pub const LEVELS_PER_ION: usize = 4;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = 1e-10;

/// A value paired with the probability weight that was lost (or would be lost) to
/// the Fock cutoff while producing it.
#[derive(Clone, Debug, PartialEq)]
pub struct Truncated<T> {
    pub value: T,
    pub leakage: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockSpace {
    n_max: usize,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// The same space with `extra` additional levels on top.
    pub fn with_headroom(&self, extra: usize) -> Self {
        Self { n_max: self.n_max + extra }
    }

    /// Copy `amps` into this (larger or equal) space, zero-padding the new levels.
    pub fn embed(&self, amps: &DVector<C64>) -> Result<DVector<C64>> {
        if amps.len() > self.dim() {
            return Err(Error::Shape(format!(
                "cannot embed a {}-level vector into a {}-level Fock space",
                amps.len(),
                self.dim()
            )));
        }
        let mut out = DVector::zeros(self.dim());
        out.rows_mut(0, amps.len()).copy_from(amps);
        Ok(out)
    }

    pub fn embed_density(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let d = rho.dim();
        if d > self.dim() {
            return Err(Error::Shape(format!(
                "cannot embed a {d}-level operator into a {}-level Fock space",
                self.dim()
            )));
        }
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        m.view_mut((0, 0), (d, d)).copy_from(rho.matrix());
        Ok(DensityOperator::from_matrix_unchecked(m))
    }
}

impl Default for FockSpace {
    fn default() -> Self {
        Self { n_max: DEFAULT_N_MAX }
    }
}

/// Internal level of an ion. `Ground`/`Excited` span the qubit; `Shelf` is the
/// auxiliary level reached by adiabatic passage and `Intermediate` the detuned
/// level the pump and Stokes fields couple through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum IonLevel {
    Ground = 0,
    Excited = 1,
    Shelf = 2,
    Intermediate = 3,
}

impl IonLevel {
    pub const ALL: [IonLevel; 4] = [
        IonLevel::Ground,
        IonLevel::Excited,
        IonLevel::Shelf,
        IonLevel::Intermediate,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_qubit(self) -> bool {
        matches!(self, IonLevel::Ground | IonLevel::Excited)
    }
}

impl TryFrom<usize> for IonLevel {
    type Error = Error;

    fn try_from(v: usize) -> Result<Self> {
        IonLevel::ALL
            .get(v)
            .copied()
            .ok_or_else(|| Error::Index(format!("ion level {v} is not one of 0..=3")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CompositeSpace {
    n_ions: usize,
    fock: FockSpace,
}

impl CompositeSpace {
    pub fn new(n_ions: usize, fock: FockSpace) -> Result<Self> {
        if n_ions == 0 {
            return Err(Error::InvalidParameter("at least one ion is required".into()));
        }
        if n_ions > 8 {
            return Err(Error::InvalidParameter(format!(
                "{n_ions} ions would need a 4^{n_ions}-dimensional ion register"
            )));
        }
        Ok(Self { n_ions, fock })
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn fock(&self) -> FockSpace {
        self.fock
    }

    pub fn fock_dim(&self) -> usize {
        self.fock.dim()
    }

    pub fn ion_dim(&self) -> usize {
        LEVELS_PER_ION.pow(self.n_ions as u32)
    }

    pub fn dim(&self) -> usize {
        self.ion_dim() * self.fock_dim()
    }

    /// Distance in flat indices between consecutive levels of `ion`.
    pub fn ion_stride(&self, ion: usize) -> usize {
        LEVELS_PER_ION.pow((self.n_ions - 1 - ion) as u32) * self.fock_dim()
    }

    pub fn encode(&self, levels: &[IonLevel], n: usize) -> Result<usize> {
        if levels.len() != self.n_ions {
            return Err(Error::Index(format!(
                "{} ion levels given for {} ions",
                levels.len(),
                self.n_ions
            )));
        }
        if n > self.fock.n_max() {
            return Err(Error::Index(format!(
                "phonon number {n} exceeds n_max = {}",
                self.fock.n_max()
            )));
        }
        let ion_index = levels
            .iter()
            .fold(0, |acc, l| acc * LEVELS_PER_ION + l.index());
        Ok(ion_index * self.fock_dim() + n)
    }

    pub fn decode(&self, index: usize) -> Result<(Vec<IonLevel>, usize)> {
        if index >= self.dim() {
            return Err(Error::Index(format!(
                "flat index {index} outside dimension {}",
                self.dim()
            )));
        }
        let n = index % self.fock_dim();
        let mut rest = index / self.fock_dim();
        let mut levels = vec![IonLevel::Ground; self.n_ions];
        for slot in levels.iter_mut().rev() {
            *slot = IonLevel::ALL[rest % LEVELS_PER_ION];
            rest /= LEVELS_PER_ION;
        }
        Ok((levels, n))
    }

    #[inline]
    pub fn level_of(&self, index: usize, ion: usize) -> usize {
        (index / self.ion_stride(ion)) % LEVELS_PER_ION
    }

    #[inline]
    pub fn phonon_of(&self, index: usize) -> usize {
        index % self.fock_dim()
    }

    pub fn check_ion(&self, ion: usize) -> Result<()> {
        if ion >= self.n_ions {
            return Err(Error::Index(format!(
                "ion {ion} does not exist (register has {} ions)",
                self.n_ions
            )));
        }
        Ok(())
    }

    /// Total population of `amps` over indices selected by `pred(index)`.
    pub fn population_where(&self, amps: &[C64], pred: impl Fn(usize) -> bool) -> f64 {
        amps.iter()
            .enumerate()
            .filter(|(i, _)| pred(*i))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositeState {
    space: CompositeSpace,
    amplitudes: DVector<C64>,
}

impl CompositeState {
    pub fn new(space: CompositeSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::Shape(format!(
                "amplitude vector of length {} for a space of dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn basis(space: CompositeSpace, levels: &[IonLevel], n: usize) -> Result<Self> {
        let idx = space.encode(levels, n)?;
        let mut amplitudes = DVector::zeros(space.dim());
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(Self { space, amplitudes })
    }

    /// Tensor product of one 4-component vector per ion and a phonon vector.
    pub fn product(
        space: CompositeSpace,
        ions: &[DVector<C64>],
        phonon: &DVector<C64>,
    ) -> Result<Self> {
        if ions.len() != space.n_ions() {
            return Err(Error::Shape(format!(
                "{} ion factors for {} ions",
                ions.len(),
                space.n_ions()
            )));
        }
        if let Some(bad) = ions.iter().find(|v| v.len() != LEVELS_PER_ION) {
            return Err(Error::Shape(format!(
                "ion factor of length {} (expected 4)",
                bad.len()
            )));
        }
        if phonon.len() != space.fock_dim() {
            return Err(Error::Shape(format!(
                "phonon factor of length {} for n_max = {}",
                phonon.len(),
                space.fock().n_max()
            )));
        }
        let ion_part = ions[1..]
            .iter()
            .fold(ions[0].clone(), |acc, v| crate::linalg::kron_vec(&acc, v));
        let amplitudes = crate::linalg::kron_vec(&ion_part, phonon);
        Ok(Self { space, amplitudes })
    }

    pub fn space(&self) -> CompositeSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter(format!("cannot normalize a vector of norm {norm}")));
        }
        self.amplitudes.unscale_mut(norm);
        Ok(())
    }

    pub fn inner(&self, other: &CompositeState) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::Shape("inner product across different spaces".into()));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn population_on(&self, ion: usize, level: IonLevel) -> f64 {
        let s = self.space;
        s.population_where(self.amplitudes.as_slice(), |i| s.level_of(i, ion) == level.index())
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::from_pure(&self.amplitudes)
    }

    /// Reduced phonon state, tracing out every ion.
    pub fn reduced_phonon(&self) -> DensityOperator {
        let fd = self.space.fock_dim();
        let blocks = DMatrix::from_column_slice(fd, self.space.ion_dim(), self.amplitudes.as_slice());
        DensityOperator::from_matrix_unchecked(&blocks * blocks.adjoint())
    }

    /// Reduced state of the ion register, tracing out the phonon mode.
    pub fn reduced_ions(&self) -> DensityOperator {
        let fd = self.space.fock_dim();
        let blocks = DMatrix::from_column_slice(fd, self.space.ion_dim(), self.amplitudes.as_slice());
        DensityOperator::from_matrix_unchecked((blocks.adjoint() * &blocks).transpose())
    }
}

/// A density operator: Hermitian, unit trace, positive semi-definite.
///
/// [`DensityOperator::new`] enforces the invariants. Operators produced internally
/// by unitary evolution or partial traces of valid inputs skip the (costly)
/// eigenvalue check; [`DensityOperator::check`] re-runs it on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(matrix);
        rho.check()?;
        Ok(rho)
    }

    pub fn from_pure(ket: &DVector<C64>) -> Self {
        Self {
            matrix: ket * ket.adjoint(),
        }
    }

    /// Mixture `Σ p_k |k⟩⟨k|` diagonal in the computational basis.
    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(
            probabilities.len(),
            probabilities.iter().map(|&p| C64::new(p, 0.0)),
        );
        Self::new(DMatrix::from_diagonal(&d))
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<C64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn check(&self) -> Result<()> {
        let m = &self.matrix;
        if !m.is_square() {
            return Err(Error::Shape(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
        }
        let herm = crate::linalg::max_abs_diff(m, &m.adjoint());
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (max defect {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace is {tr}, not 1")));
        }
        let (vals, _) = hermitian_eigen(m);
        let min = vals.min();
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> Result<C64> {
        if op.shape() != self.matrix.shape() {
            return Err(Error::Shape("operator and density operator differ in shape".into()));
        }
        Ok((&self.matrix * op).trace())
    }
}

/// Split a phonon amplitude vector into its even- and odd-occupation parts.
/// `even + odd` reproduces the input exactly.
pub fn parity_decompose(amps: &DVector<C64>) -> (DVector<C64>, DVector<C64>) {
    let zero = C64::new(0.0, 0.0);
    let even = DVector::from_iterator(
        amps.len(),
        amps.iter().enumerate().map(|(n, &a)| if n % 2 == 0 { a } else { zero }),
    );
    let odd = DVector::from_iterator(
        amps.len(),
        amps.iter().enumerate().map(|(n, &a)| if n % 2 == 1 { a } else { zero }),
    );
    (even, odd)
}

/// Add one phonon: `out[n+1] = in[n]`. The weight on the top level, which has no
/// successor, is reported as leakage and must not exceed `leak_tol`.
pub fn shift_up(amps: &DVector<C64>, leak_tol: f64) -> Result<Truncated<DVector<C64>>> {
    let len = amps.len();
    if len == 0 {
        return Err(Error::Shape("empty phonon vector".into()));
    }
    let leakage = amps[len - 1].norm_sqr();
    if leakage > leak_tol {
        return Err(Error::TruncationLeakage {
            leakage,
            tol: leak_tol,
            context: format!("adding a phonon to |n_max = {}>", len - 1),
        });
    }
    let mut out = DVector::zeros(len);
    out.rows_mut(1, len - 1).copy_from(&amps.rows(0, len - 1));
    Ok(Truncated { value: out, leakage })
}

/// Remove one phonon: `out[n] = in[n+1]`. Weight on `|0⟩` has no predecessor and is
/// reported as leakage.
pub fn shift_down(amps: &DVector<C64>, leak_tol: f64) -> Result<Truncated<DVector<C64>>> {
    let len = amps.len();
    if len == 0 {
        return Err(Error::Shape("empty phonon vector".into()));
    }
    let leakage = amps[0].norm_sqr();
    if leakage > leak_tol {
        return Err(Error::TruncationLeakage {
            leakage,
            tol: leak_tol,
            context: "removing a phonon from |0>".into(),
        });
    }
    let mut out = DVector::zeros(len);
    out.rows_mut(0, len - 1).copy_from(&amps.rows(1, len - 1));
    Ok(Truncated { value: out, leakage })
}

fn check_composite_shape(rho: &DensityOperator, space: &CompositeSpace) -> Result<()> {
    let m = rho.matrix();
    if m.nrows() != space.dim() || m.ncols() != space.dim() {
        return Err(Error::Shape(format!(
            "{}x{} operator on a composite space of dimension {}",
            m.nrows(),
            m.ncols(),
            space.dim()
        )));
    }
    Ok(())
}

/// Trace out the phonon mode: `ρ_ion[i,j] = Σ_n ρ[(i,n),(j,n)]`.
pub fn partial_trace_phonon(rho: &DensityOperator, space: &CompositeSpace) -> Result<DensityOperator> {
    check_composite_shape(rho, space)?;
    let (di, df) = (space.ion_dim(), space.fock_dim());
    let m = rho.matrix();
    let out = DMatrix::from_fn(di, di, |i, j| (0..df).map(|n| m[(i * df + n, j * df + n)]).sum());
    Ok(DensityOperator::from_matrix_unchecked(out))
}

/// Trace out the ion register: `ρ_ph[n,m] = Σ_i ρ[(i,n),(i,m)]`.
pub fn partial_trace_ions(rho: &DensityOperator, space: &CompositeSpace) -> Result<DensityOperator> {
    check_composite_shape(rho, space)?;
    let (di, df) = (space.ion_dim(), space.fock_dim());
    let m = rho.matrix();
    let mut out = DMatrix::zeros(df, df);
    for i in 0..di {
        out += m.view((i * df, i * df), (df, df));
    }
    Ok(DensityOperator::from_matrix_unchecked(out))
}

/// Either kind of state, for [`fidelity`].
#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a DVector<C64>),
    Mixed(&'a DensityOperator),
}

impl<'a> From<&'a DVector<C64>> for StateRef<'a> {
    fn from(v: &'a DVector<C64>) -> Self {
        StateRef::Pure(v)
    }
}

impl<'a> From<&'a CompositeState> for StateRef<'a> {
    fn from(s: &'a CompositeState) -> Self {
        StateRef::Pure(s.amplitudes())
    }
}

impl<'a> From<&'a DensityOperator> for StateRef<'a> {
    fn from(r: &'a DensityOperator) -> Self {
        StateRef::Mixed(r)
    }
}

/// Uhlmann fidelity `(Tr|√ρ √σ|)²`; reduces to `|⟨a|b⟩|²` for pure states and
/// `⟨ψ|ρ|ψ⟩` for a pure/mixed pair. Clamped to `[0, 1]`.
pub fn fidelity<'a, 'b>(a: impl Into<StateRef<'a>>, b: impl Into<StateRef<'b>>) -> Result<f64> {
    let (a, b) = (a.into(), b.into());
    let dims = |s: &StateRef| match s {
        StateRef::Pure(v) => v.len(),
        StateRef::Mixed(r) => r.dim(),
    };
    if dims(&a) != dims(&b) {
        return Err(Error::Shape(format!(
            "fidelity between dimensions {} and {}",
            dims(&a),
            dims(&b)
        )));
    }
    let f = match (a, b) {
        (StateRef::Pure(x), StateRef::Pure(y)) => x.dotc(y).norm_sqr(),
        (StateRef::Pure(x), StateRef::Mixed(r)) | (StateRef::Mixed(r), StateRef::Pure(x)) => {
            x.dotc(&(r.matrix() * x)).re
        }
        (StateRef::Mixed(r), StateRef::Mixed(s)) => {
            let prod = psd_sqrt(r.matrix()) * psd_sqrt(s.matrix());
            trace_norm(&prod).powi(2)
        }
    };
    Ok(f.clamp(0.0, 1.0))
}
