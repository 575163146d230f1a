//! Experiment configuration file (JSON). Every physical quantity carries its
//! unit in the key name.

use std::path::PathBuf;
use std::str::FromStr;

use hotion::gate::{FrameCorrection, GateConfig, GateMode};
use hotion::hilbert::{FockSpace, DEFAULT_N_MAX};
use hotion::operators::PhysicalParams;
use hotion::states::{StateSpec, DEFAULT_MAX_DISCARDED};
use hotion::stirap::{Direction, PulsePair, PulseShape, StirapSchedule, DEFAULT_WIDTH_FRACTION};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ideal,
    Stirap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    pub mode: Mode,
    #[serde(default = "two")]
    pub n_ions: usize,
    #[serde(default)]
    pub control: usize,
    #[serde(default = "one")]
    pub target: usize,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub frame_correction: FrameCorrection,
    pub eta: f64,
    pub omega_rad_per_s: f64,
    pub delta_rad_per_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default = "sin2")]
    pub shape: PulseShape,
    pub total_duration_s: f64,
    /// Pulse width (σ for Gaussians) as a fraction of the total duration.
    #[serde(default = "default_width_fraction")]
    pub width_fraction: f64,
    pub pump_peak_rad_per_s: f64,
    pub stokes_peak_rad_per_s: f64,
    #[serde(default)]
    pub detuning_rad_per_s: f64,
    /// Integrator step; the duration is rounded to a whole number of steps.
    pub dt_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhononSection {
    pub state: String,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_max_discarded")]
    pub max_discarded_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<Axis>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    #[serde(default)]
    pub n: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gate: GateSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
    pub phonon: PhononSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSection>,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> usize {
    1
}
fn two() -> usize {
    2
}
fn sin2() -> PulseShape {
    PulseShape::Sin2
}
fn default_width_fraction() -> f64 {
    DEFAULT_WIDTH_FRACTION
}
fn default_n_max() -> usize {
    DEFAULT_N_MAX
}
fn default_max_discarded() -> f64 {
    DEFAULT_MAX_DISCARDED
}

/// Names accepted as sweep axes.
pub const SWEEP_PARAMETERS: [&str; 10] = [
    "epsilon",
    "eta",
    "omega_rad_per_s",
    "delta_rad_per_s",
    "total_duration_s",
    "width_fraction",
    "pump_peak_rad_per_s",
    "stokes_peak_rad_per_s",
    "detuning_rad_per_s",
    "n_max",
];

const SCHEDULE_PARAMETERS: [&str; 5] =
    ["total_duration_s", "width_fraction", "pump_peak_rad_per_s", "stokes_peak_rad_per_s", "detuning_rad_per_s"];

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn state_spec(&self) -> Result<StateSpec, CliError> {
        StateSpec::from_str(&self.phonon.state).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn fock(&self) -> Result<FockSpace, CliError> {
        FockSpace::new(self.phonon.n_max).map_err(|e| CliError::Config(format!("phonon.n_max: {e}")))
    }

    pub fn params(&self) -> PhysicalParams {
        PhysicalParams {
            eta: self.gate.eta,
            omega: self.gate.omega_rad_per_s,
            n_ions: self.gate.n_ions,
            delta: self.gate.delta_rad_per_s,
        }
    }

    /// The upward-passage schedule, if a schedule section is present.
    pub fn up_schedule(&self) -> Result<Option<StirapSchedule>, hotion::Error> {
        let Some(s) = &self.schedule else { return Ok(None) };
        let pulses = PulsePair {
            shape: s.shape,
            width_fraction: s.width_fraction,
            pump_peak: s.pump_peak_rad_per_s,
            stokes_peak: s.stokes_peak_rad_per_s,
        };
        if !(s.dt_s.is_finite() && s.dt_s > 0.0) {
            return Err(hotion::Error::InvalidParameter("schedule.dt_s must be > 0".into()));
        }
        let steps = (s.total_duration_s / s.dt_s).round().max(1.0) as usize;
        StirapSchedule::from_pulses(Direction::Up, s.total_duration_s, pulses, s.detuning_rad_per_s, steps).map(Some)
    }

    pub fn gate_config(&self) -> Result<GateConfig, hotion::Error> {
        let mode = match self.gate.mode {
            Mode::Ideal => GateMode::Ideal,
            Mode::Stirap => GateMode::Stirap(
                self.up_schedule()?
                    .ok_or_else(|| hotion::Error::InvalidParameter("schedule required for stirap mode".into()))?,
            ),
        };
        let config = GateConfig {
            n_ions: self.gate.n_ions,
            control: self.gate.control,
            target: self.gate.target,
            mode,
            params: self.params(),
            epsilon: self.gate.epsilon,
            frame_correction: self.gate.frame_correction,
        };
        config.validate()?;
        Ok(config)
    }

    /// Structural checks shared by every command.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.gate.mode == Mode::Stirap && self.schedule.is_none() {
            return Err(CliError::Config("schedule required: stirap mode needs a schedule section".into()));
        }
        self.state_spec()?;
        self.fock()?;
        if !(self.phonon.max_discarded_weight >= 0.0 && self.phonon.max_discarded_weight < 1.0) {
            return Err(CliError::Config("phonon.max_discarded_weight must be in [0, 1)".into()));
        }
        self.gate_config().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(sweep) = &self.sweep {
            for axis in &sweep.axes {
                axis.validate()?;
                if SCHEDULE_PARAMETERS.contains(&axis.parameter.as_str()) && self.schedule.is_none() {
                    return Err(CliError::Config(format!(
                        "sweep axis {:?} needs a schedule section",
                        axis.parameter
                    )));
                }
            }
        }
        Ok(())
    }

    /// Copy of `self` with one sweep parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self, CliError> {
        let mut c = self.clone();
        fn schedule<'a>(c: &'a mut ExperimentConfig, name: &str) -> Result<&'a mut ScheduleSection, CliError> {
            c.schedule
                .as_mut()
                .ok_or_else(|| CliError::Config(format!("sweep axis {name:?} needs a schedule section")))
        }
        match name {
            "epsilon" => c.gate.epsilon = value,
            "eta" => c.gate.eta = value,
            "omega_rad_per_s" => c.gate.omega_rad_per_s = value,
            "delta_rad_per_s" => c.gate.delta_rad_per_s = value,
            "total_duration_s" => schedule(&mut c, name)?.total_duration_s = value,
            "width_fraction" => schedule(&mut c, name)?.width_fraction = value,
            "pump_peak_rad_per_s" => schedule(&mut c, name)?.pump_peak_rad_per_s = value,
            "stokes_peak_rad_per_s" => schedule(&mut c, name)?.stokes_peak_rad_per_s = value,
            "detuning_rad_per_s" => schedule(&mut c, name)?.detuning_rad_per_s = value,
            "n_max" => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(CliError::Config(format!("n_max must be a whole number, got {value}")));
                }
                c.phonon.n_max = value as usize
            }
            other => return Err(CliError::Config(format!("unknown sweep parameter {other:?}"))),
        }
        Ok(c)
    }
}

impl Axis {
    pub fn validate(&self) -> Result<(), CliError> {
        if !SWEEP_PARAMETERS.contains(&self.parameter.as_str()) {
            return Err(CliError::Config(format!(
                "unknown sweep parameter {:?} (expected one of {})",
                self.parameter,
                SWEEP_PARAMETERS.join(", ")
            )));
        }
        if self.steps == 0 {
            return Err(CliError::Config(format!("sweep axis {:?} has no steps", self.parameter)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::Config(format!("sweep axis {:?} has a non-finite range", self.parameter)));
        }
        Ok(())
    }

    /// Evenly spaced values from `start` to `stop` inclusive.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.stop } else { self.start + step * i as f64 })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDEAL: &str = r#"{
        "gate": {"mode": "ideal", "eta": 0.1, "omega_rad_per_s": 628318.5307179586, "delta_rad_per_s": 62831853.07179586},
        "phonon": {"state": "thermal:2.0"}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(IDEAL).unwrap();
        assert_eq!((c.gate.n_ions, c.gate.control, c.gate.target), (2, 0, 1));
        assert_eq!(c.phonon.n_max, DEFAULT_N_MAX);
        assert_eq!(c.gate.frame_correction, FrameCorrection::Off);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = IDEAL.replace("\"eta\"", "\"eta\": 0.1, \"delta\"");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(CliError::Config(_))));
    }

    #[test]
    fn axis_values() {
        let axis = Axis { parameter: "epsilon".into(), start: 0.0, stop: 0.01, steps: 3 };
        assert_eq!(axis.values(), vec![0.0, 0.005, 0.01]);
        let single = Axis { steps: 1, ..axis.clone() };
        assert_eq!(single.values(), vec![0.0]);
        assert!(Axis { steps: 0, ..axis.clone() }.validate().is_err());
        assert!(Axis { parameter: "omega".into(), ..axis }.validate().is_err());
    }

    #[test]
    fn stirap_without_schedule() {
        let c = ExperimentConfig::from_json(&IDEAL.replace("\"ideal\"", "\"stirap\"")).unwrap();
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("schedule required"));
    }

    #[test]
    fn sweeping_a_schedule_parameter() {
        let mut c = ExperimentConfig::from_json(IDEAL).unwrap();
        assert!(c.with_parameter("total_duration_s", 10.0).is_err());
        c.schedule = Some(ScheduleSection {
            shape: PulseShape::Sin2,
            total_duration_s: 100.0,
            width_fraction: 0.7,
            pump_peak_rad_per_s: 1.0,
            stokes_peak_rad_per_s: 10.0,
            detuning_rad_per_s: 0.0,
            dt_s: 0.025,
        });
        let longer = c.with_parameter("total_duration_s", 200.0).unwrap();
        let s = longer.up_schedule().unwrap().unwrap();
        assert_eq!(s.steps(), 8000);
        assert!(c.with_parameter("n_max", 3.5).is_err());
        assert_eq!(c.with_parameter("n_max", 12.0).unwrap().phonon.n_max, 12);
    }
}
