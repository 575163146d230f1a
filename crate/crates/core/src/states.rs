//! Initial CM phonon states: Fock, coherent, thermal and seeded random pure states.
//!
//! Coherent and thermal distributions have infinite support. They are cut at the
//! Fock space's `n_max`, renormalized, and the discarded weight is returned with
//! the state; generation fails when that weight exceeds the caller's bound.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::hilbert::{DensityOperator, FockSpace, Truncated};
use crate::{Error, Result, C64};

/// Default bound on the probability weight a generator may discard above `n_max`.
pub const DEFAULT_MAX_DISCARDED: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    pub n_bar: f64,
}

impl ThermalSpec {
    pub fn new(n_bar: f64) -> Result<Self> {
        if !n_bar.is_finite() || n_bar < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mean occupation must be finite and >= 0, got {n_bar}"
            )));
        }
        Ok(Self { n_bar })
    }
}

pub fn fock_state(n: usize, fock: FockSpace) -> Result<DVector<C64>> {
    if n > fock.n_max() {
        return Err(Error::Index(format!(
            "Fock state |{n}> outside n_max = {}",
            fock.n_max()
        )));
    }
    let mut v = DVector::zeros(fock.dim());
    v[n] = C64::new(1.0, 0.0);
    Ok(v)
}

fn check_discarded(discarded: f64, max_discarded: f64, what: &str) -> Result<()> {
    if discarded > max_discarded {
        return Err(Error::TruncationLeakage {
            leakage: discarded,
            tol: max_discarded,
            context: what.to_string(),
        });
    }
    Ok(())
}

/// `|α⟩ ∝ Σ αⁿ/√(n!) |n⟩`, truncated and renormalized.
pub fn coherent_state(
    alpha: C64,
    fock: FockSpace,
    max_discarded: f64,
) -> Result<Truncated<DVector<C64>>> {
    let mut amps = DVector::zeros(fock.dim());
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..fock.dim() {
        if n > 0 {
            c *= alpha / (n as f64).sqrt();
        }
        amps[n] = c;
    }
    let kept = amps.norm_squared();
    let discarded = (1.0 - kept).max(0.0);
    check_discarded(
        discarded,
        max_discarded,
        &format!("coherent state alpha = {alpha} cut at n_max = {}", fock.n_max()),
    )?;
    amps.unscale_mut(kept.sqrt());
    Ok(Truncated { value: amps, leakage: discarded })
}

#[derive(Clone, Debug)]
pub struct ThermalState {
    pub rho: DensityOperator,
    /// Renormalized occupation probabilities.
    pub populations: Vec<f64>,
    pub discarded: f64,
    /// `⟨n̂⟩` of the renormalized, truncated distribution.
    pub mean_occupation: f64,
}

/// Thermal (geometric) phonon distribution `p_n = n̄ⁿ/(1+n̄)ⁿ⁺¹`.
pub fn thermal_state(spec: ThermalSpec, fock: FockSpace, max_discarded: f64) -> Result<ThermalState> {
    let spec = ThermalSpec::new(spec.n_bar)?;
    let ratio = spec.n_bar / (1.0 + spec.n_bar);
    let raw: Vec<f64> = (0..fock.dim())
        .map(|n| (1.0 - ratio) * ratio.powi(n as i32))
        .collect();
    let discarded = ratio.powi(fock.dim() as i32);
    check_discarded(
        discarded,
        max_discarded,
        &format!("thermal state n_bar = {} cut at n_max = {}", spec.n_bar, fock.n_max()),
    )?;
    let kept: f64 = raw.iter().sum();
    let populations: Vec<f64> = raw.iter().map(|p| p / kept).collect();
    let mean_occupation = populations.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let rho = DensityOperator::diagonal(&populations)?;
    Ok(ThermalState { rho, populations, discarded, mean_occupation })
}

/// Normalized vector of independent complex Gaussian deviates, reproducible per seed.
pub fn random_pure_state(seed: u64, fock: FockSpace) -> DVector<C64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(fock.dim(), |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let norm = v.norm();
    v.unscale_mut(norm);
    v
}

pub fn mean_occupation(amps: &DVector<C64>) -> f64 {
    amps.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum()
}

pub fn mean_occupation_mixed(rho: &DensityOperator) -> f64 {
    let m = rho.matrix();
    (0..rho.dim()).map(|n| n as f64 * m[(n, n)].re).sum()
}

/// A phonon state handed to the gate.
#[derive(Clone, Debug, PartialEq)]
pub enum PhononInput {
    Pure(DVector<C64>),
    Mixed(DensityOperator),
}

impl PhononInput {
    pub fn fock(&self) -> Result<FockSpace> {
        let dim = match self {
            PhononInput::Pure(v) => v.len(),
            PhononInput::Mixed(r) => r.dim(),
        };
        FockSpace::new(dim.saturating_sub(1))
    }

    pub fn mean_occupation(&self) -> f64 {
        match self {
            PhononInput::Pure(v) => mean_occupation(v),
            PhononInput::Mixed(r) => mean_occupation_mixed(r),
        }
    }

    pub fn embed(&self, fock: FockSpace) -> Result<PhononInput> {
        Ok(match self {
            PhononInput::Pure(v) => PhononInput::Pure(fock.embed(v)?),
            PhononInput::Mixed(r) => PhononInput::Mixed(fock.embed_density(r)?),
        })
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            PhononInput::Pure(v) => DensityOperator::from_pure(v),
            PhononInput::Mixed(r) => r.clone(),
        }
    }
}

/// Textual state-family specification: `fock:n`, `coherent:re,im`, `thermal:nbar`,
/// `random:seed` (or bare `random`, which takes the seed from the caller).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateSpec {
    Fock(usize),
    Coherent(C64),
    Thermal(ThermalSpec),
    Random(Option<u64>),
}

#[derive(Clone, Debug)]
pub struct PreparedPhonon {
    pub input: PhononInput,
    pub discarded: f64,
    pub mean_occupation: f64,
}

impl StateSpec {
    pub fn prepare(&self, fock: FockSpace, default_seed: u64, max_discarded: f64) -> Result<PreparedPhonon> {
        let (input, discarded) = match *self {
            StateSpec::Fock(n) => (PhononInput::Pure(fock_state(n, fock)?), 0.0),
            StateSpec::Coherent(alpha) => {
                let t = coherent_state(alpha, fock, max_discarded)?;
                (PhononInput::Pure(t.value), t.leakage)
            }
            StateSpec::Thermal(spec) => {
                let t = thermal_state(spec, fock, max_discarded)?;
                (PhononInput::Mixed(t.rho), t.discarded)
            }
            StateSpec::Random(seed) => (
                PhononInput::Pure(random_pure_state(seed.unwrap_or(default_seed), fock)),
                0.0,
            ),
        };
        let mean_occupation = input.mean_occupation();
        Ok(PreparedPhonon { input, discarded, mean_occupation })
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("state spec {s:?}: {why}"));
        let (family, arg) = match s.split_once(':') {
            Some((f, a)) => (f.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: &str| a.parse::<f64>().map_err(|_| bad("expected a number"));
        match (family, arg) {
            ("fock", Some(a)) if !a.is_empty() => a
                .parse::<usize>()
                .map(StateSpec::Fock)
                .map_err(|_| bad("expected a non-negative integer occupation")),
            ("coherent", Some(a)) if !a.is_empty() => {
                let (re, im) = match a.split_once(',') {
                    Some((re, im)) => (num(re.trim())?, num(im.trim())?),
                    None => (num(a)?, 0.0),
                };
                Ok(StateSpec::Coherent(C64::new(re, im)))
            }
            ("thermal", Some(a)) if !a.is_empty() => {
                ThermalSpec::new(num(a)?).map(StateSpec::Thermal).map_err(|e| bad(&e.to_string()))
            }
            ("random", None) => Ok(StateSpec::Random(None)),
            ("random", Some(a)) if !a.is_empty() => a
                .parse::<u64>()
                .map(|seed| StateSpec::Random(Some(seed)))
                .map_err(|_| bad("expected an unsigned integer seed")),
            ("fock" | "coherent" | "thermal" | "random", _) => Err(bad("missing argument")),
            _ => Err(bad("unknown family (expected fock, coherent, thermal or random)")),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Fock(n) => write!(f, "fock:{n}"),
            StateSpec::Coherent(a) => write!(f, "coherent:{},{}", a.re, a.im),
            StateSpec::Thermal(t) => write!(f, "thermal:{}", t.n_bar),
            StateSpec::Random(Some(seed)) => write!(f, "random:{seed}"),
            StateSpec::Random(None) => write!(f, "random"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::parity_decompose;

    fn fock(n_max: usize) -> FockSpace {
        FockSpace::new(n_max).unwrap()
    }

    #[test]
    fn fock_states() {
        let v = fock_state(0, fock(4)).unwrap();
        assert_eq!(v[0], C64::new(1.0, 0.0));
        assert_eq!(v.norm(), 1.0);

        let three = fock_state(3, fock(4)).unwrap();
        let (_, odd) = parity_decompose(&three);
        assert_eq!(odd, three);

        assert_eq!(mean_occupation(&fock_state(5, fock(8)).unwrap()), 5.0);
        assert!(matches!(fock_state(5, fock(4)), Err(Error::Index(_))));
    }

    #[test]
    fn coherent_states() {
        let vac = coherent_state(C64::new(0.0, 0.0), fock(8), DEFAULT_MAX_DISCARDED).unwrap();
        assert_eq!(vac.value, fock_state(0, fock(8)).unwrap());
        assert_eq!(vac.leakage, 0.0);

        let c = coherent_state(C64::new(1.5, 0.0), fock(32), DEFAULT_MAX_DISCARDED).unwrap();
        assert!((mean_occupation(&c.value) - 2.25).abs() < 1e-6);
        assert!(c.leakage < 1e-15);

        for alpha in [C64::new(0.3, -0.2), C64::new(-1.0, 2.0), C64::new(2.5, 0.5)] {
            let c = coherent_state(alpha, fock(40), DEFAULT_MAX_DISCARDED).unwrap();
            assert!((c.value.norm() - 1.0).abs() < 1e-12);
        }

        let err = coherent_state(C64::new(5.0, 0.0), fock(20), DEFAULT_MAX_DISCARDED);
        assert!(matches!(err, Err(Error::TruncationLeakage { .. })));
    }

    #[test]
    fn thermal_states() {
        let vac = thermal_state(ThermalSpec::new(0.0).unwrap(), fock(8), DEFAULT_MAX_DISCARDED).unwrap();
        assert_eq!(vac.populations[0], 1.0);
        assert!(vac.populations[1..].iter().all(|&p| p == 0.0));

        let one = thermal_state(ThermalSpec::new(1.0).unwrap(), fock(32), DEFAULT_MAX_DISCARDED).unwrap();
        // geometric oracle: p_n = 2^-(n+1) before renormalization; the tail beyond 32 is 2^-33
        let norm_oracle: f64 = (0..33).map(|n| 0.5f64.powi(n + 1)).sum();
        assert!((norm_oracle - (1.0 - 0.5f64.powi(33))).abs() < 1e-15);
        assert!((one.populations[0] - 0.5).abs() < 1e-9);
        assert!((one.populations[1] - 0.25).abs() < 1e-9);
        assert!((one.discarded - 0.5f64.powi(33)).abs() < 1e-20);

        let two = thermal_state(ThermalSpec::new(2.0).unwrap(), fock(64), DEFAULT_MAX_DISCARDED).unwrap();
        assert!((two.mean_occupation - 2.0).abs() < 1e-6);
        assert!((mean_occupation_mixed(&two.rho) - two.mean_occupation).abs() < 1e-12);
        two.rho.check().unwrap();

        assert!(ThermalSpec::new(-1.0).is_err());
        let err = thermal_state(ThermalSpec { n_bar: 20.0 }, fock(16), DEFAULT_MAX_DISCARDED);
        assert!(matches!(err, Err(Error::TruncationLeakage { .. })));
    }

    #[test]
    fn thermal_state_is_diagonal() {
        let t = thermal_state(ThermalSpec::new(3.0).unwrap(), fock(40), DEFAULT_MAX_DISCARDED).unwrap();
        let m = t.rho.matrix();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j {
                    assert_eq!(m[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn random_states_are_deterministic_and_normalized() {
        let a = random_pure_state(42, fock(16));
        let b = random_pure_state(42, fock(16));
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_ne!(a, random_pure_state(43, fock(16)));
    }

    #[test]
    fn random_states_are_uniform_on_average() {
        let f = fock(15);
        let samples = 10_000;
        let mut mean = vec![0.0; f.dim()];
        for seed in 0..samples {
            let v = random_pure_state(seed, f);
            for (m, a) in mean.iter_mut().zip(v.iter()) {
                *m += a.norm_sqr() / samples as f64;
            }
        }
        let expected = 1.0 / f.dim() as f64;
        for m in mean {
            assert!((m - expected).abs() < 0.05 * expected, "{m} vs {expected}");
        }
    }

    #[test]
    fn state_spec_parsing() {
        assert_eq!("fock:3".parse::<StateSpec>().unwrap(), StateSpec::Fock(3));
        assert_eq!(
            "coherent:1.5,-0.5".parse::<StateSpec>().unwrap(),
            StateSpec::Coherent(C64::new(1.5, -0.5))
        );
        assert_eq!(
            "thermal:2.0".parse::<StateSpec>().unwrap(),
            StateSpec::Thermal(ThermalSpec { n_bar: 2.0 })
        );
        assert_eq!("random:7".parse::<StateSpec>().unwrap(), StateSpec::Random(Some(7)));
        assert_eq!("random".parse::<StateSpec>().unwrap(), StateSpec::Random(None));
        for bad in ["fock:", "fock", "fock:-1", "thermal:-2", "coherent:a,b", "squeezed:1", ""] {
            assert!(matches!(bad.parse::<StateSpec>(), Err(Error::Parse(_))), "{bad}");
        }
        for spec in ["fock:3", "coherent:1.5,-0.5", "thermal:2", "random:7", "random"] {
            let parsed: StateSpec = spec.parse().unwrap();
            assert_eq!(parsed.to_string().parse::<StateSpec>().unwrap(), parsed);
        }
    }

    #[test]
    fn prepared_inputs_pass_state_invariants() {
        let f = fock(32);
        for spec in ["fock:4", "coherent:1.5,0", "thermal:2", "random:3"] {
            let p = spec.parse::<StateSpec>().unwrap().prepare(f, 0, DEFAULT_MAX_DISCARDED).unwrap();
            p.input.to_density().check().unwrap();
            assert_eq!(p.input.fock().unwrap(), f);
        }
    }
}
