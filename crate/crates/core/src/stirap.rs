//! Time-resolved adiabatic passage on the control ion.
//!
//! The pump couples `|1⟩|n⟩ ↔ |3⟩|n⟩` on the carrier with Rabi frequency `Ω_p(t)`; the
//! Stokes field drives the red sideband `|2⟩|n+1⟩ ↔ |3⟩|n⟩` with
//! `Ω_{S,n}(t) = η√(n+1)·Ω_S(t)`. Both share the single-photon detuning `Δ` from
//! `|3⟩` (two-photon resonance), so in the rotating frame each phonon number `n`
//! gives an independent Λ system over `{|1,n⟩, |3,n⟩, |2,n+1⟩}`:
//!
//! ```text
//!         | 0      Ω_p/2    0       |
//!   H_n = | Ω_p/2  Δ        Ω_S,n/2 |
//!         | 0      Ω_S,n/2  0       |
//! ```
//!
//! Propagation is fixed-step: the Hamiltonian is frozen at each step midpoint and
//! exponentiated exactly, so every step is unitary to round-off and the only error
//! is the time discretization (second order in `dt`).

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hilbert::{CompositeSpace, CompositeState, FockSpace, IonLevel, LEAK_TOL, SUPPORT_TOL};
use crate::linalg::expi_symmetric3;
use crate::operators::PhysicalParams;
use crate::{Error, Result, C64};

/// Fraction of the total duration covered by each pulse of the default schedule.
pub const DEFAULT_WIDTH_FRACTION: f64 = 0.75;

const NORM_DRIFT_TOL: f64 = 1e-9;

/// Position of the block components in [`hamiltonian_block`] and [`block_propagator`].
pub const EXCITED: usize = 0;
pub const INTERMEDIATE: usize = 1;
pub const SHELF: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    /// `peak·cos²(π(t−center)/width)` on `|t−center| ≤ width/2`, zero outside.
    Sin2,
    /// `peak·exp(−(t−center)²/(2·width²))`.
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub shape: PulseShape,
    #[serde(rename = "peak_rabi_rad_per_s")]
    pub peak_rabi: f64,
    #[serde(rename = "center_s")]
    pub center: f64,
    #[serde(rename = "width_s")]
    pub width: f64,
}

impl PulseEnvelope {
    pub fn sin2(peak_rabi: f64, center: f64, width: f64) -> Self {
        Self { shape: PulseShape::Sin2, peak_rabi, center, width }
    }

    pub fn value(&self, t: f64) -> f64 {
        let x = t - self.center;
        match self.shape {
            PulseShape::Sin2 => {
                if x.abs() <= self.width / 2.0 {
                    self.peak_rabi * (PI * x / self.width).cos().powi(2)
                } else {
                    0.0
                }
            }
            PulseShape::Gaussian => self.peak_rabi * (-x * x / (2.0 * self.width * self.width)).exp(),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.peak_rabi.is_finite() && self.peak_rabi >= 0.0) {
            return Err(Error::InvalidParameter(format!("{name} peak Rabi frequency must be finite and >= 0")));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} width must be > 0")));
        }
        if !self.center.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} center must be finite")));
        }
        Ok(())
    }
}

/// `Up` realizes `A⁺` (`|1,n⟩ → |2,n+1⟩`, Stokes first); `Down` realizes `A⁻`
/// (`|2,n+1⟩ → |1,n⟩`, pump first).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

/// Shape and peaks of a pump/Stokes pair, before placement in time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulsePair {
    pub shape: PulseShape,
    pub width_fraction: f64,
    pub pump_peak: f64,
    pub stokes_peak: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StirapSchedule {
    pub pump: PulseEnvelope,
    pub stokes: PulseEnvelope,
    #[serde(rename = "total_duration_s")]
    pub total_duration: f64,
    #[serde(rename = "detuning_rad_per_s")]
    pub detuning: f64,
    #[serde(rename = "dt_s")]
    pub dt: f64,
    pub direction: Direction,
}

impl StirapSchedule {
    /// Counter-intuitively ordered sin² pulses filling `[0, T]`: each pulse spans
    /// [`DEFAULT_WIDTH_FRACTION`]` · T`, the leading one starts at 0 and the trailing
    /// one ends at `T`. `Up` leads with the Stokes field, `Down` with the pump.
    pub fn counter_intuitive(
        direction: Direction,
        total_duration: f64,
        pump_peak: f64,
        stokes_peak: f64,
        detuning: f64,
        steps: usize,
    ) -> Result<Self> {
        let pulses = PulsePair { shape: PulseShape::Sin2, width_fraction: DEFAULT_WIDTH_FRACTION, pump_peak, stokes_peak };
        Self::from_pulses(direction, total_duration, pulses, detuning, steps)
    }

    /// Like [`counter_intuitive`](Self::counter_intuitive) with any shape and
    /// width. The width is `width_fraction · T` (the σ for Gaussians) and the
    /// centres sit half a width in from either end of the window.
    pub fn from_pulses(
        direction: Direction,
        total_duration: f64,
        pulses: PulsePair,
        detuning: f64,
        steps: usize,
    ) -> Result<Self> {
        let width = pulses.width_fraction * total_duration;
        let first = width / 2.0;
        let last = total_duration - width / 2.0;
        let (pump_center, stokes_center) = match direction {
            Direction::Up => (last, first),
            Direction::Down => (first, last),
        };
        let envelope = |peak_rabi, center| PulseEnvelope { shape: pulses.shape, peak_rabi, center, width };
        let schedule = Self {
            pump: envelope(pulses.pump_peak, pump_center),
            stokes: envelope(pulses.stokes_peak, stokes_center),
            total_duration,
            detuning,
            dt: total_duration / steps.max(1) as f64,
            direction,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        self.pump.validate("pump")?;
        self.stokes.validate("stokes")?;
        if !(self.total_duration.is_finite() && self.total_duration > 0.0) {
            return Err(Error::InvalidParameter("total duration must be > 0".into()));
        }
        if !self.detuning.is_finite() {
            return Err(Error::InvalidParameter("detuning must be finite".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter("time step must be > 0".into()));
        }
        let ratio = self.total_duration / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "total duration is not an integer number of steps (T/dt = {ratio})"
            )));
        }
        let ordered = match self.direction {
            Direction::Up => self.stokes.center < self.pump.center,
            Direction::Down => self.pump.center < self.stokes.center,
        };
        if !ordered {
            return Err(Error::InvalidParameter(format!(
                "{:?} passage needs counter-intuitive ordering ({} pulse first)",
                self.direction,
                if self.direction == Direction::Up { "Stokes" } else { "pump" }
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.total_duration / self.dt).round() as usize
    }

    /// The passage backwards: pump and Stokes swap their timing (each keeps its
    /// peak Rabi frequency) and the direction flips.
    pub fn reversed(&self) -> Self {
        let swap = |from: &PulseEnvelope, to: &PulseEnvelope| PulseEnvelope {
            shape: to.shape,
            center: to.center,
            width: to.width,
            peak_rabi: from.peak_rabi,
        };
        Self {
            pump: swap(&self.pump, &self.stokes),
            stokes: swap(&self.stokes, &self.pump),
            direction: match self.direction {
                Direction::Up => Direction::Down,
                Direction::Down => Direction::Up,
            },
            ..*self
        }
    }

    /// Time-stretch to a new total duration, keeping the step size (rounded so
    /// the duration stays an integer number of steps).
    pub fn stretched(&self, total_duration: f64) -> Self {
        let k = total_duration / self.total_duration;
        let scale = |p: &PulseEnvelope| PulseEnvelope {
            center: p.center * k,
            width: p.width * k,
            ..*p
        };
        let steps = (total_duration / self.dt).round().max(1.0);
        Self {
            pump: scale(&self.pump),
            stokes: scale(&self.stokes),
            total_duration,
            dt: total_duration / steps,
            ..*self
        }
    }

    pub fn with_steps(&self, steps: usize) -> Self {
        Self { dt: self.total_duration / steps.max(1) as f64, ..*self }
    }

    pub fn stokes_rabi(&self, n: usize, t: f64, params: &PhysicalParams) -> f64 {
        params.eta * ((n + 1) as f64).sqrt() * self.stokes.value(t)
    }
}

fn block_h(n: usize, t: f64, schedule: &StirapSchedule, params: &PhysicalParams) -> Matrix3<f64> {
    let p = schedule.pump.value(t) / 2.0;
    let s = schedule.stokes_rabi(n, t, params) / 2.0;
    Matrix3::new(0.0, p, 0.0, p, schedule.detuning, s, 0.0, s, 0.0)
}

/// Rotating-frame Hamiltonian of block `n` at time `t`, over
/// `(|1,n⟩, |3,n⟩, |2,n+1⟩)`. All couplings are real, so the block is real
/// symmetric.
pub fn hamiltonian_block(
    n: usize,
    t: f64,
    schedule: &StirapSchedule,
    params: &PhysicalParams,
    fock: FockSpace,
) -> Result<Matrix3<f64>> {
    if n >= fock.n_max() {
        return Err(Error::Index(format!(
            "block n = {n} has no |n+1> partner below n_max = {}",
            fock.n_max()
        )));
    }
    Ok(block_h(n, t, schedule, params))
}

fn step_unitary(n: usize, k: usize, schedule: &StirapSchedule, params: &PhysicalParams) -> Matrix3<C64> {
    let dt = schedule.dt;
    let h = block_h(n, (k as f64 + 0.5) * dt, schedule, params);
    if h[(0, 1)] == 0.0 && h[(1, 2)] == 0.0 {
        let mut u = Matrix3::<C64>::identity();
        u[(1, 1)] = C64::from_polar(1.0, -schedule.detuning * dt);
        u
    } else {
        expi_symmetric3(&h, dt)
    }
}

/// Time-ordered propagator of block `n` over the whole schedule.
pub fn block_propagator(n: usize, schedule: &StirapSchedule, params: &PhysicalParams) -> Result<Matrix3<C64>> {
    schedule.validate()?;
    Ok((0..schedule.steps()).fold(Matrix3::identity(), |u, k| step_unitary(n, k, schedule, params) * u))
}

fn source_target(direction: Direction) -> (usize, usize) {
    match direction {
        Direction::Up => (EXCITED, SHELF),
        Direction::Down => (SHELF, EXCITED),
    }
}

/// Transfer amplitude `⟨2,n+1|U|1,n⟩` (up) or `⟨1,n|U|2,n+1⟩` (down).
pub fn transfer_amplitude(n: usize, schedule: &StirapSchedule, params: &PhysicalParams) -> Result<C64> {
    let u = block_propagator(n, schedule, params)?;
    let (src, dst) = source_target(schedule.direction);
    Ok(u[(dst, src)])
}

pub fn transfer_efficiency(n: usize, schedule: &StirapSchedule, params: &PhysicalParams) -> Result<f64> {
    Ok(transfer_amplitude(n, schedule, params)?.norm_sqr())
}

/// Phase of the transfer amplitude in `(−π, π]`. The ideal passage is phase-free,
/// so this is the deviation from it.
pub fn residual_phase(n: usize, schedule: &StirapSchedule, params: &PhysicalParams) -> Result<f64> {
    phase_of(transfer_amplitude(n, schedule, params)?)
}

pub(crate) fn phase_of(amplitude: C64) -> Result<f64> {
    let eff = amplitude.norm_sqr();
    if eff < 0.5 {
        return Err(Error::UndefinedPhase(eff));
    }
    Ok(wrap_phase(amplitude.arg()))
}

/// Map an angle into `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// `min(T·Ω_p,peak, T·Ω_{S,n},peak)`.
pub fn adiabaticity_margin(schedule: &StirapSchedule, params: &PhysicalParams, n: usize) -> f64 {
    let stokes = params.eta * ((n + 1) as f64).sqrt() * schedule.stokes.peak_rabi;
    schedule.total_duration * schedule.pump.peak_rabi.min(stokes)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub pump: f64,
    pub stokes: f64,
    /// Populations of `|1,n⟩`, `|3,n⟩`, `|2,n+1⟩`.
    pub populations: [f64; 3],
}

/// Populations of block `n` sampled at `t = 0` and after every step, starting from
/// `|1,n⟩` (up) or `|2,n+1⟩` (down).
pub fn trace_block(n: usize, schedule: &StirapSchedule, params: &PhysicalParams) -> Result<Vec<TracePoint>> {
    schedule.validate()?;
    let (src, _) = source_target(schedule.direction);
    let mut psi = Vector3::<C64>::zeros();
    psi[src] = C64::new(1.0, 0.0);
    let point = |t: f64, psi: &Vector3<C64>| TracePoint {
        t,
        pump: schedule.pump.value(t),
        stokes: schedule.stokes_rabi(n, t, params),
        populations: [psi[0].norm_sqr(), psi[1].norm_sqr(), psi[2].norm_sqr()],
    };
    let mut out = Vec::with_capacity(schedule.steps() + 1);
    out.push(point(0.0, &psi));
    for k in 0..schedule.steps() {
        psi = step_unitary(n, k, schedule, params) * psi;
        out.push(point((k + 1) as f64 * schedule.dt, &psi));
    }
    Ok(out)
}

/// Largest population of the intermediate level `|3,n⟩` over the passage.
pub fn max_intermediate_population(n: usize, schedule: &StirapSchedule, params: &PhysicalParams) -> Result<f64> {
    Ok(trace_block(n, schedule, params)?
        .iter()
        .map(|p| p.populations[INTERMEDIATE])
        .fold(0.0, f64::max))
}

/// Block propagators for every `n < n_max` of one Fock space, ready to apply to
/// composite states.
#[derive(Clone, Debug)]
pub struct BlockPropagators {
    schedule: StirapSchedule,
    fock: FockSpace,
    blocks: Vec<Matrix3<C64>>,
}

impl BlockPropagators {
    pub fn build(schedule: &StirapSchedule, params: &PhysicalParams, fock: FockSpace) -> Result<Self> {
        schedule.validate()?;
        let blocks = (0..fock.n_max())
            .into_par_iter()
            .map(|n| block_propagator(n, schedule, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { schedule: *schedule, fock, blocks })
    }

    pub fn schedule(&self) -> &StirapSchedule {
        &self.schedule
    }

    pub fn fock(&self) -> FockSpace {
        self.fock
    }

    pub fn block(&self, n: usize) -> Option<&Matrix3<C64>> {
        self.blocks.get(n)
    }

    pub fn transfer_amplitude(&self, n: usize) -> Option<C64> {
        let (src, dst) = source_target(self.schedule.direction);
        self.blocks.get(n).map(|u| u[(dst, src)])
    }

    /// Check the passage's precondition on the control ion.
    pub fn check_domain(&self, space: &CompositeSpace, control: usize, amps: &[C64]) -> Result<()> {
        use IonLevel::*;
        space.check_ion(control)?;
        if space.fock() != self.fock {
            return Err(Error::Shape("propagators built for a different Fock space".into()));
        }
        let on = |levels: &[IonLevel]| {
            space.population_where(amps, |i| levels.iter().any(|l| l.index() == space.level_of(i, control)))
        };
        let n_max = self.fock.n_max();
        match self.schedule.direction {
            Direction::Up => {
                let pop = on(&[Shelf, Intermediate]);
                if pop > SUPPORT_TOL {
                    return Err(Error::Domain(format!(
                        "upward passage needs control ion {control} in {{|0>, |1>}} (population {pop:.3e} elsewhere)"
                    )));
                }
                let leak = space.population_where(amps, |i| {
                    space.level_of(i, control) == Excited.index() && space.phonon_of(i) == n_max
                });
                if leak > LEAK_TOL {
                    return Err(Error::TruncationLeakage {
                        leakage: leak,
                        tol: LEAK_TOL,
                        context: format!("adiabatic passage from |1>|n_max = {n_max}>"),
                    });
                }
            }
            Direction::Down => {
                let pop = on(&[Excited, Intermediate]);
                if pop > SUPPORT_TOL {
                    return Err(Error::Domain(format!(
                        "downward passage needs control ion {control} in {{|0>, |2>}} (population {pop:.3e} elsewhere)"
                    )));
                }
                let stuck = space.population_where(amps, |i| {
                    space.level_of(i, control) == Shelf.index() && space.phonon_of(i) == 0
                });
                if stuck > SUPPORT_TOL {
                    return Err(Error::Domain(format!(
                        "downward passage from |2>|0> has no phonon to remove (population {stuck:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Apply the block propagators to every `(|1,n⟩, |3,n⟩, |2,n+1⟩)` triple of the
    /// control ion. Components outside the blocks (`|0⟩`, `|2,0⟩`, `|1,n_max⟩`,
    /// `|3,n_max⟩`) are left unchanged.
    pub fn apply_unchecked(&self, space: &CompositeSpace, control: usize, amps: &mut [C64]) {
        let stride = space.ion_stride(control);
        let n_max = self.fock.n_max();
        for i in 0..amps.len() {
            if space.level_of(i, control) != IonLevel::Excited.index() {
                continue;
            }
            let n = space.phonon_of(i);
            if n >= n_max {
                continue;
            }
            let idx = [i, i + 2 * stride, i + stride + 1];
            let v = Vector3::new(amps[idx[0]], amps[idx[1]], amps[idx[2]]);
            let w = self.blocks[n] * v;
            for (k, &j) in idx.iter().enumerate() {
                amps[j] = w[k];
            }
        }
    }
}

/// Propagate a composite state through the adiabatic passage on `control`.
pub fn propagate(
    state: &CompositeState,
    control: usize,
    schedule: &StirapSchedule,
    params: &PhysicalParams,
) -> Result<CompositeState> {
    let space = state.space();
    let props = BlockPropagators::build(schedule, params, space.fock())?;
    let mut amps = state.amplitudes().clone();
    props.check_domain(&space, control, amps.as_slice())?;
    props.apply_unchecked(&space, control, amps.as_mut_slice());
    let drift = (amps.norm() - state.norm()).abs();
    if drift > NORM_DRIFT_TOL {
        return Err(Error::NormDrift(drift));
    }
    CompositeState::new(space, amps)
}

/// Outcome of [`find_adiabatic_schedule`].
#[derive(Clone, Debug, Serialize)]
pub struct AdiabaticSearch {
    pub schedule: StirapSchedule,
    /// Smallest adiabaticity margin over the phonon numbers checked.
    pub margin: f64,
    pub efficiencies: Vec<f64>,
    /// `(total duration, worst efficiency)` for every duration tried, in order.
    pub tried: Vec<(f64, f64)>,
}

/// Try `durations` in ascending order, stretching `template` (fixed step size),
/// and return the first schedule whose transfer efficiency reaches `threshold` for
/// every `n` in `0..=max_n`.
pub fn find_adiabatic_schedule(
    template: &StirapSchedule,
    params: &PhysicalParams,
    max_n: usize,
    threshold: f64,
    durations: &[f64],
) -> Result<Option<AdiabaticSearch>> {
    template.validate()?;
    let mut sorted = durations.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut tried = Vec::new();
    for total in sorted {
        let schedule = template.stretched(total);
        let efficiencies = (0..=max_n)
            .into_par_iter()
            .map(|n| transfer_efficiency(n, &schedule, params))
            .collect::<Result<Vec<_>>>()?;
        let worst = efficiencies.iter().copied().fold(f64::INFINITY, f64::min);
        tried.push((total, worst));
        if worst >= threshold {
            let margin = (0..=max_n)
                .map(|n| adiabaticity_margin(&schedule, params, n))
                .fold(f64::INFINITY, f64::min);
            return Ok(Some(AdiabaticSearch { schedule, margin, efficiencies, tried }));
        }
    }
    Ok(None)
}
