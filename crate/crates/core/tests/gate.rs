use std::f64::consts::PI;

use hotion::gate::{analyze, mixed_state_equivalence, table_for, truth_table, GateConfig, Sequence};
use hotion::hilbert::FockSpace;
use hotion::operators::PhysicalParams;
use hotion::states::{fock_state, random_pure_state, thermal_state, PhononInput, ThermalSpec, DEFAULT_MAX_DISCARDED};
use hotion::stirap::{Direction, StirapSchedule};
use hotion::Error;

fn params() -> PhysicalParams {
    PhysicalParams { eta: 0.1, omega: 2.0 * PI * 1e5, n_ions: 2, delta: 2.0 * PI * 1e7 }
}

fn stirap(margin: f64, steps_per_unit: f64) -> GateConfig {
    let p = params();
    let s = StirapSchedule::counter_intuitive(
        Direction::Up,
        margin,
        1.0,
        1.0 / p.eta,
        0.0,
        (margin * steps_per_unit) as usize,
    )
    .unwrap();
    GateConfig::stirap(p, s)
}

#[test]
fn timing_error_table_deviation_grows_with_occupation() {
    let config = GateConfig { epsilon: 0.01, ..GateConfig::ideal(params()) };
    let fock = FockSpace::new(16).unwrap();
    let deviations: Vec<f64> = (0..=8)
        .map(|n| {
            let t = truth_table(&config, &PhononInput::Pure(fock_state(n, fock).unwrap())).unwrap();
            (t - Sequence::Crot.ideal_matrix()).camax()
        })
        .collect();
    assert!(deviations[0] > 1e-3, "{deviations:?}");
    for w in deviations.windows(2) {
        assert!(w[1] > w[0], "{deviations:?}");
    }
}

#[test]
fn stirap_gate_at_the_adiabatic_margin() {
    // 175 is the smallest margin on a 5-unit grid reaching 0.999 transfer for n <= 10
    let config = stirap(175.0, 100.0);
    let fock = FockSpace::new(8).unwrap();
    let inputs = [
        PhononInput::Pure(fock_state(0, fock).unwrap()),
        PhononInput::Pure(random_pure_state(11, fock)),
        PhononInput::Mixed(thermal_state(ThermalSpec::new(0.5).unwrap(), fock, DEFAULT_MAX_DISCARDED).unwrap().rho),
    ];
    for input in &inputs {
        let report = analyze(&config, input, Sequence::Crot).unwrap();
        assert!(report.raw_qubit_fidelity >= 0.99, "{report:?}");
        assert!(report.compensated_qubit_fidelity >= 0.99);
        assert!(report.phonon_restoration_fidelity > 0.9);
        assert!(report.truth_table.is_some());
        assert!((0.0..=1.0).contains(&report.qubit_fidelity));
        assert!(report.leakage >= 0.0 && report.leakage < 1e-2);
        let diag = report.stirap.unwrap();
        assert!(diag.min_up_efficiency >= 0.999);
        assert_eq!(diag.adiabaticity_margin, 175.0);
    }
}

#[test]
fn fast_passage_gives_no_clean_table() {
    let config = stirap(2.0, 100.0);
    let input = PhononInput::Pure(fock_state(3, FockSpace::new(6).unwrap()).unwrap());
    let report = analyze(&config, &input, Sequence::Crot).unwrap();
    assert!(report.phonon_restoration_fidelity < 0.9, "{}", report.phonon_restoration_fidelity);
    assert!(report.truth_table.is_none());
    assert!(report.entanglement_residue > 0.0 || report.leakage > 0.0);
    assert!(matches!(table_for(&config, &input, Sequence::Crot), Err(Error::AmbiguousExtraction(_))));
}

#[test]
fn mixed_equivalence_is_repeatable() {
    let config = GateConfig { epsilon: 0.013, ..GateConfig::ideal(params()) };
    let spec = ThermalSpec::new(1.5).unwrap();
    let a = mixed_state_equivalence(&config, spec, 12, DEFAULT_MAX_DISCARDED).unwrap();
    let b = mixed_state_equivalence(&config, spec, 12, DEFAULT_MAX_DISCARDED).unwrap();
    assert_eq!(a.max_deviation, b.max_deviation);
    assert!(a.max_deviation < 1e-10);
}

#[test]
fn swapping_roles_gives_the_same_table() {
    let config = GateConfig::ideal(params());
    let swapped = GateConfig { control: 1, target: 0, ..config.clone() };
    let input = PhononInput::Pure(random_pure_state(4, FockSpace::new(12).unwrap()));
    let a = truth_table(&config, &input).unwrap();
    let b = truth_table(&swapped, &input).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cnot_on_three_ions() {
    let p = PhysicalParams { n_ions: 3, ..params() };
    let config = GateConfig { n_ions: 3, control: 2, target: 0, ..GateConfig::ideal(p) };
    let input = PhononInput::Pure(random_pure_state(6, FockSpace::new(6).unwrap()));
    let t = table_for(&config, &input, Sequence::Cnot).unwrap();
    assert!((t - Sequence::Cnot.ideal_matrix()).camax() < 1e-12);
}
