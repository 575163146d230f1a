//! Simulation of the four-pulse controlled-rotation gate for trapped ions whose
//! centre-of-mass (CM) phonon mode is not in its ground state.
//!
//! The gate is the pulse sequence `S_t, A⁺_c, S_t, A⁻_c`:
//!
//! - `S_t` imprints `(-1)^n` on the `|1⟩` branch of the target ion, where `n` is the
//!   CM phonon number ([`operators::IdealUnitary::ConditionalPhase`]).
//! - `A⁺_c` / `A⁻_c` move the control ion between `|1⟩|n⟩` and `|2⟩|n+1⟩` by adiabatic
//!   passage, adding or removing exactly one phonon ([`operators`] for the ideal maps,
//!   [`stirap`] for the time-resolved three-level dynamics).
//!
//! Together they act as `diag(1, 1, 1, -1)` on the two-qubit subspace and return the
//! phonon mode to its input state, whatever that state was. [`gate`] sequences the
//! pulses, builds CNOT from it and extracts truth tables and fidelities for pure and
//! mixed phonon inputs ([`states`]).
//!
//! Units: `ħ = 1`, angular frequencies in rad/s, times in s.

pub mod error;
pub mod gate;
pub mod hilbert;
mod linalg;
pub mod operators;
pub mod states;
pub mod stirap;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
