//! The four-pulse CROT gate `S_t, A⁺_c, S_t, A⁻_c`, its CNOT wrapper, and the
//! qubit-subspace metrics used to check it against arbitrary phonon inputs.
//!
//! Qubit-register indices follow `2·c + t`, so the ideal CROT is
//! `diag(1, 1, 1, −1)` in the order `|00⟩, |01⟩, |10⟩, |11⟩`. Ions other than the
//! control and target stay in `|0⟩`.
//!
//! Truth tables use a phase reference: with `G` the gate channel,
//! `M[b,a] = Tr[(|00⟩⟨b| ⊗ 1) G(|a⟩⟨00| ⊗ ρ_ph)]`. For a pure phonon input this is
//! `Σ_n ⟨b,n|ψ_a⟩ ⟨ψ_00|00,n⟩`, the overlap of each output with `|b⟩` times the
//! evolved phonon factor of the `|00⟩` branch. When the phonon mode is restored
//! exactly (ideal mode) `M` is the qubit unitary itself.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use serde::{Deserialize, Serialize, Serializer};

use crate::hilbert::{
    fidelity, partial_trace_ions, partial_trace_phonon, CompositeSpace, CompositeState, DensityOperator,
    FockSpace, IonLevel,
};
use crate::operators::{
    adiabatic_down, adiabatic_up, carrier_rotation, conditional_phase_with_error, conjugate_operator,
    IdealUnitary, PhysicalParams,
};
use crate::states::{thermal_state, PhononInput, ThermalSpec};
use crate::stirap::{adiabaticity_margin, phase_of, wrap_phase, BlockPropagators, StirapSchedule};
use crate::{Error, Result, C64};

/// Phase of the `π/2` target rotation applied before the CROT in [`Sequence::Cnot`].
pub const CNOT_PRE_PHASE: f64 = -FRAC_PI_2;
/// Phase of the `π/2` target rotation applied after the CROT.
pub const CNOT_POST_PHASE: f64 = FRAC_PI_2;

/// Truth tables with a phonon-restoration fidelity below this are not extracted.
pub const MIN_RESTORATION_FOR_TABLE: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub enum GateMode {
    Ideal,
    Stirap(StirapSchedule),
}

/// Single-qubit `Z` frame correction applied before computing fidelities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameCorrection {
    #[default]
    Off,
    /// Remove the `|01⟩` and `|10⟩` phases measured in the truth table.
    TruthTable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateConfig {
    pub n_ions: usize,
    pub control: usize,
    pub target: usize,
    pub mode: GateMode,
    pub params: PhysicalParams,
    /// Relative duration error of both conditional-phase pulses.
    pub epsilon: f64,
    pub frame_correction: FrameCorrection,
}

impl GateConfig {
    /// Two ions, control 0, target 1, ideal operators.
    pub fn ideal(params: PhysicalParams) -> Self {
        Self {
            n_ions: 2,
            control: 0,
            target: 1,
            mode: GateMode::Ideal,
            params,
            epsilon: 0.0,
            frame_correction: FrameCorrection::Off,
        }
    }

    pub fn stirap(params: PhysicalParams, schedule: StirapSchedule) -> Self {
        Self { mode: GateMode::Stirap(schedule), ..Self::ideal(params) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.control == self.target {
            return Err(Error::InvalidParameter("control and target must be different ions".into()));
        }
        if self.control >= self.n_ions || self.target >= self.n_ions {
            return Err(Error::InvalidParameter(format!(
                "control {} / target {} out of range for {} ions",
                self.control, self.target, self.n_ions
            )));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter("epsilon must be finite".into()));
        }
        self.params.validate()?;
        if let GateMode::Stirap(schedule) = &self.mode {
            schedule.validate()?;
            if schedule.direction != crate::stirap::Direction::Up {
                return Err(Error::InvalidParameter(
                    "the gate schedule describes the upward passage; the downward one is derived from it".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Which two-qubit operation to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sequence {
    Crot,
    Cnot,
}

impl Sequence {
    pub fn ideal_matrix(&self) -> Matrix4<C64> {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        match self {
            Sequence::Crot => Matrix4::from_diagonal(&Vector4::new(o, o, o, -o)),
            Sequence::Cnot => Matrix4::new(o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z),
        }
    }
}

/// The gate prepared for one composite space: STIRAP block propagators (if any)
/// are computed once here.
#[derive(Clone, Debug)]
pub struct Protocol {
    config: GateConfig,
    space: CompositeSpace,
    passages: Option<(BlockPropagators, BlockPropagators)>,
}

impl Protocol {
    pub fn new(config: &GateConfig, space: CompositeSpace) -> Result<Self> {
        config.validate()?;
        if space.n_ions() != config.n_ions {
            return Err(Error::Shape(format!(
                "gate configured for {} ions, space has {}",
                config.n_ions,
                space.n_ions()
            )));
        }
        let passages = match &config.mode {
            GateMode::Ideal => None,
            GateMode::Stirap(up) => {
                let down = up.reversed();
                Some((
                    BlockPropagators::build(up, &config.params, space.fock())?,
                    BlockPropagators::build(&down, &config.params, space.fock())?,
                ))
            }
        };
        Ok(Self { config: config.clone(), space, passages })
    }

    pub fn config(&self) -> &GateConfig {
        &self.config
    }

    pub fn space(&self) -> CompositeSpace {
        self.space
    }

    pub fn passages(&self) -> Option<&(BlockPropagators, BlockPropagators)> {
        self.passages.as_ref()
    }

    fn phase_pulse(&self) -> IdealUnitary {
        conditional_phase_with_error(self.config.target, self.config.epsilon)
    }

    /// `S_t`, `A⁺_c`, `S_t`, `A⁻_c` in place.
    ///
    /// In STIRAP mode the downward passage is applied without its domain check:
    /// an imperfect upward passage leaves residual population on `|1⟩` and `|3⟩`
    /// of the control ion, which the metrics account for instead.
    pub fn crot_in_place(&self, amps: &mut [C64]) -> Result<()> {
        let space = &self.space;
        let control = self.config.control;
        let s_t = self.phase_pulse();
        s_t.apply_in_place(space, amps)?;
        match &self.passages {
            None => adiabatic_up(control).apply_in_place(space, amps)?,
            Some((up, _)) => {
                up.check_domain(space, control, amps)?;
                up.apply_unchecked(space, control, amps);
            }
        }
        s_t.apply_in_place(space, amps)?;
        match &self.passages {
            None => adiabatic_down(control).apply_in_place(space, amps)?,
            Some((_, down)) => down.apply_unchecked(space, control, amps),
        }
        Ok(())
    }

    pub fn cnot_in_place(&self, amps: &mut [C64]) -> Result<()> {
        let t = self.config.target;
        carrier_rotation(t, FRAC_PI_2, CNOT_PRE_PHASE).apply_in_place(&self.space, amps)?;
        self.crot_in_place(amps)?;
        carrier_rotation(t, FRAC_PI_2, CNOT_POST_PHASE).apply_in_place(&self.space, amps)
    }

    pub fn run_in_place(&self, sequence: Sequence, amps: &mut [C64]) -> Result<()> {
        match sequence {
            Sequence::Crot => self.crot_in_place(amps),
            Sequence::Cnot => self.cnot_in_place(amps),
        }
    }

    fn check_state(&self, state: &CompositeState) -> Result<()> {
        if state.space() != self.space {
            return Err(Error::Shape("state lives in a different composite space".into()));
        }
        Ok(())
    }

    pub fn run(&self, sequence: Sequence, state: &CompositeState) -> Result<CompositeState> {
        self.check_state(state)?;
        let mut amps = state.amplitudes().clone();
        self.run_in_place(sequence, amps.as_mut_slice())?;
        CompositeState::new(self.space, amps)
    }

    pub fn crot(&self, state: &CompositeState) -> Result<CompositeState> {
        self.run(Sequence::Crot, state)
    }

    pub fn cnot(&self, state: &CompositeState) -> Result<CompositeState> {
        self.run(Sequence::Cnot, state)
    }

    /// `G(X) = U X U†` for any square operator `X` on the composite space.
    pub fn run_operator(&self, sequence: Sequence, x: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        conjugate_operator(x, self.space.dim(), |amps| self.run_in_place(sequence, amps))
    }

    pub fn crot_density(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator::from_matrix_unchecked(self.run_operator(Sequence::Crot, rho.matrix())?))
    }

    pub fn cnot_density(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator::from_matrix_unchecked(self.run_operator(Sequence::Cnot, rho.matrix())?))
    }

    /// Flat ion-register index of qubit basis state `q = 2·c + t`.
    pub fn register_index(&self, q: usize) -> usize {
        let mut levels = vec![IonLevel::Ground; self.space.n_ions()];
        levels[self.config.control] = if q & 2 != 0 { IonLevel::Excited } else { IonLevel::Ground };
        levels[self.config.target] = if q & 1 != 0 { IonLevel::Excited } else { IonLevel::Ground };
        levels.iter().fold(0, |acc, l| acc * 4 + l.index())
    }

    /// Embed a two-qubit vector into the ion register.
    pub fn register_vector(&self, qubits: &Vector4<C64>) -> DVector<C64> {
        let mut v = DVector::zeros(self.space.ion_dim());
        for q in 0..4 {
            v[self.register_index(q)] = qubits[q];
        }
        v
    }

    /// Restrict an ion-register operator to the two-qubit block.
    pub fn qubit_block(&self, ions: &DMatrix<C64>) -> Matrix4<C64> {
        Matrix4::from_fn(|i, j| ions[(self.register_index(i), self.register_index(j))])
    }

    fn composite_ket(&self, qubits: &Vector4<C64>, phonon: &DVector<C64>) -> Result<CompositeState> {
        let amps = crate::linalg::kron_vec(&self.register_vector(qubits), phonon);
        CompositeState::new(self.space, amps)
    }
}

/// CROT on a composite state.
pub fn crot(state: &CompositeState, config: &GateConfig) -> Result<CompositeState> {
    Protocol::new(config, state.space())?.crot(state)
}

/// CROT on a density operator over `space`.
pub fn crot_density(rho: &DensityOperator, space: CompositeSpace, config: &GateConfig) -> Result<DensityOperator> {
    Protocol::new(config, space)?.crot_density(rho)
}

/// CNOT (CROT between `π/2` target rotations) on a composite state.
pub fn cnot(state: &CompositeState, config: &GateConfig) -> Result<CompositeState> {
    Protocol::new(config, state.space())?.cnot(state)
}

pub fn cnot_density(rho: &DensityOperator, space: CompositeSpace, config: &GateConfig) -> Result<DensityOperator> {
    Protocol::new(config, space)?.cnot_density(rho)
}

fn basis(q: usize) -> Vector4<C64> {
    let mut v = Vector4::zeros();
    v[q] = C64::new(1.0, 0.0);
    v
}

/// Input states for the average fidelity: the four basis states and the four
/// products of `|±⟩` (which make the relative sign of `|11⟩` observable).
pub fn probe_states() -> Vec<Vector4<C64>> {
    let h = FRAC_1_SQRT_2;
    let pm = |s: f64| [C64::new(h, 0.0), C64::new(s * h, 0.0)];
    let mut probes: Vec<Vector4<C64>> = (0..4).map(basis).collect();
    for (sc, st) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let (c, t) = (pm(sc), pm(st));
        probes.push(Vector4::new(c[0] * t[0], c[0] * t[1], c[1] * t[0], c[1] * t[1]));
    }
    probes
}

/// A two-qubit table, serialized row-major as `[[[re, im]; 4]; 4]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthTable(pub Matrix4<C64>);

impl TruthTable {
    pub fn deviation_from(&self, ideal: &Matrix4<C64>) -> f64 {
        (self.0 - ideal).camax()
    }
}

impl Serialize for TruthTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..4)
            .map(|i| (0..4).map(|j| [self.0[(i, j)].re, self.0[(i, j)].im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchPhase {
    pub n: usize,
    pub up_efficiency: f64,
    pub up_phase: Option<f64>,
    pub down_efficiency: f64,
    pub down_phase: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StirapDiagnostics {
    pub adiabaticity_margin: f64,
    pub min_up_efficiency: f64,
    pub min_down_efficiency: f64,
    /// Upward-passage phase of the `n = 1` branch relative to `n = 0`.
    pub phase_difference_n0_n1: Option<f64>,
    pub branches: Vec<BranchPhase>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GateReport {
    pub mode: String,
    pub n_ions: usize,
    pub control: usize,
    pub target: usize,
    pub epsilon: f64,
    pub n_max: usize,
    pub mean_occupation: f64,
    /// `None` when the phonon mode is not restored well enough for a clean table.
    pub truth_table: Option<TruthTable>,
    pub truth_table_deviation: Option<f64>,
    /// Average fidelity with the chosen frame correction applied.
    pub qubit_fidelity: f64,
    pub raw_qubit_fidelity: f64,
    pub compensated_qubit_fidelity: f64,
    /// `Z` phases removed from the control and target qubits by the frame correction.
    pub frame_phases: [f64; 2],
    /// Worst phonon fidelity, over the basis inputs, between output and input.
    pub phonon_restoration_fidelity: f64,
    /// Worst population left outside the two-qubit subspace.
    pub leakage: f64,
    /// Worst `1 − Tr ρ_ion²` over the probe inputs.
    pub entanglement_residue: f64,
    /// Weight discarded when the phonon input was cut at `n_max`.
    pub input_discarded_weight: f64,
    pub chi_rad_per_s: Option<f64>,
    pub tau_s: Option<f64>,
    pub stirap: Option<StirapDiagnostics>,
}

/// Everything the metrics need from runs on one phonon input.
struct Runs {
    table: Matrix4<C64>,
    restoration: f64,
    /// Reduced ion-register state per probe.
    probe_ions: Vec<DensityOperator>,
}

fn simulation_space(config: &GateConfig, phonon: &PhononInput) -> Result<(CompositeSpace, PhononInput)> {
    // The protocol adds at most one phonon; give it a level of headroom so no
    // input is ever pushed past the cutoff.
    let fock: FockSpace = phonon.fock()?.with_headroom(1);
    let space = CompositeSpace::new(config.n_ions, fock)?;
    Ok((space, phonon.embed(fock)?))
}

fn collect_runs(protocol: &Protocol, sequence: Sequence, phonon: &PhononInput) -> Result<Runs> {
    let space = protocol.space();
    let fd = space.fock_dim();
    let reference = protocol.register_index(0);
    let probes = probe_states();
    match phonon {
        PhononInput::Pure(phi) => {
            let outputs = probes
                .iter()
                .map(|q| protocol.run(sequence, &protocol.composite_ket(q, phi)?))
                .collect::<Result<Vec<_>>>()?;
            let out_ref = outputs[0].amplitudes();
            let table = Matrix4::from_fn(|b, a| {
                let row = protocol.register_index(b);
                let out = outputs[a].amplitudes();
                (0..fd).map(|n| out[row * fd + n] * out_ref[reference * fd + n].conj()).sum()
            });
            let restoration = outputs[..4]
                .iter()
                .map(|o| fidelity(phi, &o.reduced_phonon()))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(1.0, f64::min);
            let probe_ions = outputs.iter().map(|o| o.reduced_ions()).collect();
            Ok(Runs { table, restoration, probe_ions })
        }
        PhononInput::Mixed(rho) => {
            let ph = rho.matrix();
            let ion_op = |ket: &Vector4<C64>, bra: &Vector4<C64>| {
                protocol.register_vector(ket) * protocol.register_vector(bra).adjoint()
            };
            let mut table = Matrix4::zeros();
            for a in 0..4 {
                let x = ion_op(&basis(a), &basis(0)).kronecker(ph);
                let y = protocol.run_operator(sequence, &x)?;
                for b in 0..4 {
                    let row = protocol.register_index(b);
                    table[(b, a)] = (0..fd).map(|n| y[(row * fd + n, reference * fd + n)]).sum();
                }
            }
            let mut restoration: f64 = 1.0;
            let mut probe_ions = Vec::with_capacity(probes.len());
            for (k, q) in probes.iter().enumerate() {
                let x = ion_op(q, q).kronecker(ph);
                let out = DensityOperator::from_matrix_unchecked(protocol.run_operator(sequence, &x)?);
                if k < 4 {
                    let phonon_out = partial_trace_ions(&out, &space)?;
                    restoration = restoration.min(fidelity(rho, &phonon_out)?);
                }
                probe_ions.push(partial_trace_phonon(&out, &space)?);
            }
            Ok(Runs { table, restoration, probe_ions })
        }
    }
}

fn stirap_diagnostics(protocol: &Protocol, params: &PhysicalParams, input_n_max: usize) -> Option<StirapDiagnostics> {
    let (up, down) = protocol.passages()?;
    let branches: Vec<BranchPhase> = (0..=input_n_max)
        .map(|n| {
            let ua = up.transfer_amplitude(n).unwrap_or_default();
            // A⁻ returns |2,n+1⟩ to |1,n⟩ through block n
            let da = down.transfer_amplitude(n).unwrap_or_default();
            BranchPhase {
                n,
                up_efficiency: ua.norm_sqr(),
                up_phase: phase_of(ua).ok(),
                down_efficiency: da.norm_sqr(),
                down_phase: phase_of(da).ok(),
            }
        })
        .collect();
    let min_of = |f: fn(&BranchPhase) -> f64| branches.iter().map(f).fold(1.0, f64::min);
    let phase_difference_n0_n1 = match (branches.first(), branches.get(1)) {
        (Some(b0), Some(b1)) => match (b0.up_phase, b1.up_phase) {
            (Some(p0), Some(p1)) => Some(wrap_phase(p1 - p0)),
            _ => None,
        },
        _ => None,
    };
    Some(StirapDiagnostics {
        adiabaticity_margin: (0..=input_n_max)
            .map(|n| adiabaticity_margin(up.schedule(), params, n))
            .fold(f64::INFINITY, f64::min),
        min_up_efficiency: min_of(|b| b.up_efficiency),
        min_down_efficiency: min_of(|b| b.down_efficiency),
        phase_difference_n0_n1,
        branches,
    })
}

fn average_fidelity(protocol: &Protocol, sequence: Sequence, ions: &[DensityOperator], frame: &Matrix4<C64>) -> f64 {
    let ideal = sequence.ideal_matrix();
    let probes = probe_states();
    let total: f64 = probes
        .iter()
        .zip(ions)
        .map(|(q, rho)| {
            let block = frame * protocol.qubit_block(rho.matrix()) * frame.adjoint();
            let target = ideal * q;
            target.dotc(&(block * target)).re
        })
        .sum();
    (total / probes.len() as f64).clamp(0.0, 1.0)
}

/// Run the gate on every probe input and summarize it.
pub fn analyze(config: &GateConfig, phonon: &PhononInput, sequence: Sequence) -> Result<GateReport> {
    let input_n_max = phonon.fock()?.n_max();
    let (space, embedded) = simulation_space(config, phonon)?;
    let protocol = Protocol::new(config, space)?;
    let runs = collect_runs(&protocol, sequence, &embedded)?;

    let ambiguous = matches!(config.mode, GateMode::Stirap(_)) && runs.restoration < MIN_RESTORATION_FOR_TABLE;
    let frame_phases = [wrap_phase(runs.table[(2, 2)].arg()), wrap_phase(runs.table[(1, 1)].arg())];
    let correction = {
        let [pc, pt] = frame_phases;
        let z = |phi: f64| C64::from_polar(1.0, -phi);
        Matrix4::from_diagonal(&Vector4::new(C64::new(1.0, 0.0), z(pt), z(pc), z(pc + pt)))
    };
    let raw = average_fidelity(&protocol, sequence, &runs.probe_ions, &Matrix4::identity());
    let compensated = average_fidelity(&protocol, sequence, &runs.probe_ions, &correction);
    let leakage = runs
        .probe_ions
        .iter()
        .map(|rho| 1.0 - protocol.qubit_block(rho.matrix()).trace().re)
        .fold(0.0, f64::max)
        .max(0.0);
    let entanglement_residue = runs
        .probe_ions
        .iter()
        .map(|rho| 1.0 - rho.purity())
        .fold(0.0, f64::max)
        .max(0.0);
    let table = (!ambiguous).then_some(TruthTable(runs.table));

    Ok(GateReport {
        mode: match config.mode {
            GateMode::Ideal => "ideal".into(),
            GateMode::Stirap(_) => "stirap".into(),
        },
        n_ions: config.n_ions,
        control: config.control,
        target: config.target,
        epsilon: config.epsilon,
        n_max: input_n_max,
        mean_occupation: phonon.mean_occupation(),
        truth_table_deviation: table.map(|t| t.deviation_from(&sequence.ideal_matrix())),
        truth_table: table,
        qubit_fidelity: match config.frame_correction {
            FrameCorrection::Off => raw,
            FrameCorrection::TruthTable => compensated,
        },
        raw_qubit_fidelity: raw,
        compensated_qubit_fidelity: compensated,
        frame_phases,
        phonon_restoration_fidelity: runs.restoration,
        leakage,
        entanglement_residue,
        input_discarded_weight: 0.0,
        chi_rad_per_s: config.params.chi().ok(),
        tau_s: config.params.tau().ok(),
        stirap: stirap_diagnostics(&protocol, &config.params, input_n_max),
    })
}

/// Qubit-subspace table of the CROT for one phonon input.
pub fn truth_table(config: &GateConfig, phonon: &PhononInput) -> Result<Matrix4<C64>> {
    table_for(config, phonon, Sequence::Crot)
}

pub fn table_for(config: &GateConfig, phonon: &PhononInput, sequence: Sequence) -> Result<Matrix4<C64>> {
    let (space, embedded) = simulation_space(config, phonon)?;
    let protocol = Protocol::new(config, space)?;
    let runs = collect_runs(&protocol, sequence, &embedded)?;
    if matches!(config.mode, GateMode::Stirap(_)) && runs.restoration < MIN_RESTORATION_FOR_TABLE {
        return Err(Error::AmbiguousExtraction(runs.restoration));
    }
    Ok(runs.table)
}

/// Average CROT fidelity over [`probe_states`] for one phonon input.
pub fn gate_fidelity(config: &GateConfig, phonon: &PhononInput) -> Result<f64> {
    Ok(analyze(config, phonon, Sequence::Crot)?.qubit_fidelity)
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub n_bar: f64,
    pub n_max: usize,
    pub discarded: f64,
    /// Largest element-wise difference between the density-operator run and the
    /// Fock-ensemble average, over all probe inputs.
    pub max_deviation: f64,
}

/// Run the CROT on a thermal phonon state directly and as the `p_n`-weighted
/// ensemble of Fock-state runs, and compare the outputs.
pub fn mixed_state_equivalence(
    config: &GateConfig,
    spec: ThermalSpec,
    n_max: usize,
    max_discarded: f64,
) -> Result<EquivalenceReport> {
    let fock = FockSpace::new(n_max)?;
    let thermal = thermal_state(spec, fock, max_discarded)?;
    let (space, embedded) = simulation_space(config, &PhononInput::Mixed(thermal.rho.clone()))?;
    let protocol = Protocol::new(config, space)?;
    let PhononInput::Mixed(rho) = embedded else {
        unreachable!("thermal input is mixed")
    };

    let mut max_deviation: f64 = 0.0;
    for q in probe_states() {
        let reg = protocol.register_vector(&q);
        let x = (&reg * reg.adjoint()).kronecker(rho.matrix());
        let direct = protocol.run_operator(Sequence::Crot, &x)?;

        let mut ensemble = DMatrix::<C64>::zeros(space.dim(), space.dim());
        for (n, &p) in thermal.populations.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let phonon = crate::states::fock_state(n, space.fock())?;
            let out = protocol.crot(&protocol.composite_ket(&q, &phonon)?)?;
            let amps = out.amplitudes();
            ensemble += (amps * amps.adjoint()) * C64::new(p, 0.0);
        }
        max_deviation = max_deviation.max(crate::linalg::max_abs_diff(&direct, &ensemble));
    }
    Ok(EquivalenceReport {
        n_bar: spec.n_bar,
        n_max,
        discarded: thermal.discarded,
        max_deviation,
    })
}

/// `R(θ, φ)` as a `2×2` block embedded on the target qubit of the register
/// (`1 ⊗ R`), for building independent oracles.
pub fn target_rotation_matrix(theta: f64, phi: f64) -> Matrix4<C64> {
    let r = crate::operators::rotation_matrix(theta, phi);
    let mut m = Matrix4::zeros();
    for c in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                m[(2 * c + i, 2 * c + j)] = r[i][j];
            }
        }
    }
    m
}
