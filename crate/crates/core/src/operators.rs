//! Ideal, instantaneous operators of the gate protocol and the physical-parameter
//! formulas behind the conditional phase.
//!
//! Conventions (normative for the whole crate):
//!
//! - `ħ = 1`. Frequencies are angular (rad/s), durations in seconds.
//! - `σz` has eigenvalue `+1/2` on `|1⟩` and `-1/2` on `|0⟩`, so `σz + 1/2` is the
//!   projector onto `|1⟩`. The conditional-phase Hamiltonian
//!   `H = χ a†a (σz + 1/2)` therefore only acts on the `|1⟩` branch, and after
//!   `τ = π/χ` that branch picks up `(-1)^n`.
//! - Single-qubit rotations are `R(θ, φ) = exp(-i θ/2 (cos φ σx + sin φ σy))` on
//!   `{|0⟩, |1⟩}` with `σx = |0⟩⟨1| + |1⟩⟨0|` and `σy = -i|0⟩⟨1| + i|1⟩⟨0|`.
//! - The ideal adiabatic passages carry amplitude exactly `+1`:
//!   `A⁺: |1⟩|n⟩ → |2⟩|n+1⟩`, `A⁻: |2⟩|n+1⟩ → |1⟩|n⟩`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hilbert::{CompositeSpace, CompositeState, DensityOperator, IonLevel, LEAK_TOL, SUPPORT_TOL};
use crate::{Error, Result, C64};

/// Trap and laser parameters of the conditional-phase interaction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Lamb-Dicke parameter.
    pub eta: f64,
    /// Rabi frequency of the internal transition.
    #[serde(rename = "omega_rad_per_s")]
    pub omega: f64,
    /// Number of ions sharing the CM mode.
    pub n_ions: usize,
    /// Detuning of the standing-wave laser from the internal transition.
    #[serde(rename = "delta_rad_per_s")]
    pub delta: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.eta, self.omega, self.delta].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("physical parameters must be finite".into()));
        }
        if self.eta <= 0.0 {
            return Err(Error::InvalidParameter(format!("eta must be > 0, got {}", self.eta)));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParameter(format!("omega must be > 0, got {}", self.omega)));
        }
        if self.delta == 0.0 {
            return Err(Error::DivisionByZero("detuning delta is zero".into()));
        }
        if self.n_ions == 0 {
            return Err(Error::DivisionByZero("number of ions is zero".into()));
        }
        Ok(())
    }

    /// Conditional-phase coupling `χ = η²Ω²/(Nδ)` in rad/s; carries the sign of `δ`.
    pub fn chi(&self) -> Result<f64> {
        if self.delta == 0.0 {
            return Err(Error::DivisionByZero("detuning delta is zero".into()));
        }
        if self.n_ions == 0 {
            return Err(Error::DivisionByZero("number of ions is zero".into()));
        }
        Ok(self.eta.powi(2) * self.omega.powi(2) / (self.n_ions as f64 * self.delta))
    }

    /// Duration `τ = π/χ` of the conditional-phase pulse.
    pub fn tau(&self) -> Result<f64> {
        let chi = self.chi()?;
        if chi <= 0.0 {
            return Err(Error::NonPositiveChi(chi));
        }
        Ok(PI / chi)
    }
}

/// Ideal protocol operators, applied by their structured action on the composite
/// space. Each one checks its precondition before acting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IdealUnitary {
    /// `S_j`: `|1⟩_j|n⟩ → (-1)ⁿ e^{-iπεn} |1⟩_j|n⟩`, where `ε` is a relative
    /// pulse-duration error (zero for the exact pulse).
    ConditionalPhase { ion: usize, epsilon: f64 },
    /// `A⁺_j`: `|1⟩_j|n⟩ → |2⟩_j|n+1⟩`.
    AdiabaticUp { ion: usize },
    /// `A⁻_j`: `|2⟩_j|n+1⟩ → |1⟩_j|n⟩`.
    AdiabaticDown { ion: usize },
    /// Carrier rotation `R(θ, φ)` on the qubit levels of one ion.
    CarrierRotation { ion: usize, theta: f64, phi: f64 },
}

pub fn conditional_phase(target: usize) -> IdealUnitary {
    IdealUnitary::ConditionalPhase { ion: target, epsilon: 0.0 }
}

pub fn conditional_phase_with_error(target: usize, epsilon: f64) -> IdealUnitary {
    IdealUnitary::ConditionalPhase { ion: target, epsilon }
}

pub fn adiabatic_up(control: usize) -> IdealUnitary {
    IdealUnitary::AdiabaticUp { ion: control }
}

pub fn adiabatic_down(control: usize) -> IdealUnitary {
    IdealUnitary::AdiabaticDown { ion: control }
}

pub fn carrier_rotation(ion: usize, theta: f64, phi: f64) -> IdealUnitary {
    IdealUnitary::CarrierRotation { ion, theta, phi }
}

/// `2×2` matrix of `R(θ, φ)` in the `(|0⟩, |1⟩)` basis.
pub fn rotation_matrix(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    let minus_i = C64::new(0.0, -1.0);
    [
        [C64::new(c, 0.0), minus_i * C64::from_polar(s, -phi)],
        [minus_i * C64::from_polar(s, phi), C64::new(c, 0.0)],
    ]
}

/// Phase picked up by `|1⟩|n⟩` under the conditional-phase pulse.
pub(crate) fn conditional_phase_factor(n: usize, epsilon: f64) -> C64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    if epsilon == 0.0 {
        C64::new(sign, 0.0)
    } else {
        C64::from_polar(sign, -PI * epsilon * n as f64)
    }
}

fn population_on_levels(space: &CompositeSpace, amps: &[C64], ion: usize, levels: &[IonLevel]) -> f64 {
    space.population_where(amps, |i| {
        let l = space.level_of(i, ion);
        levels.iter().any(|x| x.index() == l)
    })
}

impl IdealUnitary {
    pub fn ion(&self) -> usize {
        match *self {
            IdealUnitary::ConditionalPhase { ion, .. }
            | IdealUnitary::AdiabaticUp { ion }
            | IdealUnitary::AdiabaticDown { ion }
            | IdealUnitary::CarrierRotation { ion, .. } => ion,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            IdealUnitary::ConditionalPhase { ion, epsilon: 0.0 } => format!("S_{ion}"),
            IdealUnitary::ConditionalPhase { ion, epsilon } => format!("S_{ion}(eps={epsilon})"),
            IdealUnitary::AdiabaticUp { ion } => format!("A+_{ion}"),
            IdealUnitary::AdiabaticDown { ion } => format!("A-_{ion}"),
            IdealUnitary::CarrierRotation { ion, theta, phi } => format!("R_{ion}({theta},{phi})"),
        }
    }

    /// Verify the operator's precondition on `amps`.
    pub fn check_domain(&self, space: &CompositeSpace, amps: &[C64]) -> Result<()> {
        let ion = self.ion();
        space.check_ion(ion)?;
        if amps.len() != space.dim() {
            return Err(Error::Shape(format!(
                "vector of length {} on a space of dimension {}",
                amps.len(),
                space.dim()
            )));
        }
        let domain_err = |what: &str, pop: f64| {
            Err(Error::Domain(format!(
                "{} requires {what} (found population {pop:.3e})",
                self.label()
            )))
        };
        use IonLevel::*;
        match *self {
            IdealUnitary::ConditionalPhase { .. } | IdealUnitary::CarrierRotation { .. } => {
                let pop = population_on_levels(space, amps, ion, &[Shelf, Intermediate]);
                if pop > SUPPORT_TOL {
                    return domain_err(&format!("ion {ion} in its qubit subspace"), pop);
                }
            }
            IdealUnitary::AdiabaticUp { .. } => {
                let pop = population_on_levels(space, amps, ion, &[Shelf, Intermediate]);
                if pop > SUPPORT_TOL {
                    return domain_err(&format!("no support on |2> or |3> of ion {ion}"), pop);
                }
                let n_max = space.fock().n_max();
                let leak = space.population_where(amps, |i| {
                    space.level_of(i, ion) == Excited.index() && space.phonon_of(i) == n_max
                });
                if leak > LEAK_TOL {
                    return Err(Error::TruncationLeakage {
                        leakage: leak,
                        tol: LEAK_TOL,
                        context: format!("{} on |1>|n_max = {n_max}>", self.label()),
                    });
                }
            }
            IdealUnitary::AdiabaticDown { .. } => {
                let pop = population_on_levels(space, amps, ion, &[Excited, Intermediate]);
                if pop > SUPPORT_TOL {
                    return domain_err(&format!("no support on |1> or |3> of ion {ion}"), pop);
                }
                let stuck = space.population_where(amps, |i| {
                    space.level_of(i, ion) == Shelf.index() && space.phonon_of(i) == 0
                });
                if stuck > SUPPORT_TOL {
                    return domain_err(&format!("no support on |2>|0> of ion {ion}"), stuck);
                }
            }
        }
        Ok(())
    }

    /// Structured action without the precondition check.
    ///
    /// `A⁺` and `A⁻` share one full-space extension, the involution that swaps
    /// `|1⟩|n⟩ ↔ |2⟩|n+1⟩` for `n < n_max` and fixes everything else; they differ
    /// only in their domains.
    pub fn act(&self, space: &CompositeSpace, amps: &mut [C64]) {
        let ion = self.ion();
        let stride = space.ion_stride(ion);
        let n_max = space.fock().n_max();
        match *self {
            IdealUnitary::ConditionalPhase { epsilon, .. } => {
                let phases: Vec<C64> = (0..=n_max).map(|n| conditional_phase_factor(n, epsilon)).collect();
                for (i, a) in amps.iter_mut().enumerate() {
                    if space.level_of(i, ion) == IonLevel::Excited.index() {
                        *a *= phases[space.phonon_of(i)];
                    }
                }
            }
            IdealUnitary::AdiabaticUp { .. } | IdealUnitary::AdiabaticDown { .. } => {
                for i in 0..amps.len() {
                    if space.level_of(i, ion) == IonLevel::Excited.index() && space.phonon_of(i) < n_max {
                        amps.swap(i, i + stride + 1);
                    }
                }
            }
            IdealUnitary::CarrierRotation { theta, phi, .. } => {
                let r = rotation_matrix(theta, phi);
                for i in 0..amps.len() {
                    if space.level_of(i, ion) == IonLevel::Ground.index() {
                        let j = i + stride;
                        let (a0, a1) = (amps[i], amps[j]);
                        amps[i] = r[0][0] * a0 + r[0][1] * a1;
                        amps[j] = r[1][0] * a0 + r[1][1] * a1;
                    }
                }
            }
        }
    }

    pub fn apply_in_place(&self, space: &CompositeSpace, amps: &mut [C64]) -> Result<()> {
        self.check_domain(space, amps)?;
        self.act(space, amps);
        Ok(())
    }

    pub fn apply(&self, state: &CompositeState) -> Result<CompositeState> {
        let space = state.space();
        let mut amps = state.amplitudes().clone();
        self.apply_in_place(&space, amps.as_mut_slice())?;
        CompositeState::new(space, amps)
    }

    /// `U ρ U†`, checking the precondition on every column.
    pub fn apply_density(&self, rho: &DensityOperator, space: &CompositeSpace) -> Result<DensityOperator> {
        let out = conjugate_operator(rho.matrix(), space.dim(), |amps| self.apply_in_place(space, amps))?;
        Ok(DensityOperator::from_matrix_unchecked(out))
    }

    /// Dense matrix of the full-space extension.
    pub fn matrix(&self, space: &CompositeSpace) -> Result<DMatrix<C64>> {
        space.check_ion(self.ion())?;
        let mut m = DMatrix::<C64>::identity(space.dim(), space.dim());
        for col in m.as_mut_slice().chunks_mut(space.dim()) {
            self.act(space, col);
        }
        Ok(m)
    }
}

/// `X ↦ U X U†` for a linear map `U` given by its in-place action on kets.
/// Works for any square operator `X` (not only density operators).
pub fn conjugate_operator<F>(x: &DMatrix<C64>, dim: usize, apply: F) -> Result<DMatrix<C64>>
where
    F: Fn(&mut [C64]) -> Result<()> + Sync,
{
    if x.nrows() != dim || x.ncols() != dim {
        return Err(Error::Shape(format!(
            "{}x{} operator on a space of dimension {dim}",
            x.nrows(),
            x.ncols()
        )));
    }
    let mut ux = x.clone();
    ux.as_mut_slice().par_chunks_mut(dim).try_for_each(&apply)?;
    // U (U X)† = U X† U†, whose adjoint is U X U†
    let mut y = ux.adjoint();
    y.as_mut_slice().par_chunks_mut(dim).try_for_each(&apply)?;
    Ok(y.adjoint())
}

/// `H = χ (a†a) ⊗ (σz + 1/2)` on `target`, as a dense (diagonal) matrix. With the
/// crate's σz convention `σz + 1/2` is the projector onto `|1⟩`; levels `|2⟩` and
/// `|3⟩` are outside the two-level model and get zero energy.
pub fn hamiltonian_dhelon(target: usize, params: &PhysicalParams, space: &CompositeSpace) -> Result<DMatrix<C64>> {
    space.check_ion(target)?;
    let chi = params.chi()?;
    let diag = DVector::from_fn(space.dim(), |i, _| {
        if space.level_of(i, target) == IonLevel::Excited.index() {
            C64::new(chi * space.phonon_of(i) as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(DMatrix::from_diagonal(&diag))
}
