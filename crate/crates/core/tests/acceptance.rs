//! Acceptance criteria for the simulator. Runs as a plain binary so every
//! criterion prints one PASS/FAIL line even when the others succeed.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use hotion::gate::{analyze, mixed_state_equivalence, table_for, GateConfig, Sequence};
use hotion::hilbert::{CompositeSpace, CompositeState, FockSpace, IonLevel};
use hotion::operators::{adiabatic_up, conditional_phase, hamiltonian_dhelon, PhysicalParams};
use hotion::states::{
    coherent_state, fock_state, random_pure_state, thermal_state, PhononInput, ThermalSpec, DEFAULT_MAX_DISCARDED,
};
use hotion::stirap::{
    block_propagator, find_adiabatic_schedule, AdiabaticSearch, Direction, StirapSchedule, EXCITED,
};
use hotion::C64;
use nalgebra::{DVector, Matrix2, Matrix4};

const N_MAX: usize = 32;
const STEPS_PER_UNIT_MARGIN: f64 = 400.0;
const MAX_TRANSFER_N: usize = 10;
/// Margins, relative to M*, at which the round trip is checked.
const MARGIN_SCALES: [f64; 5] = [1.0, 1.1, 1.25, 1.5, 2.0];

fn params() -> PhysicalParams {
    PhysicalParams { eta: 0.1, omega: 2.0 * PI * 1e5, n_ions: 2, delta: 2.0 * PI * 1e7 }
}

fn fock() -> FockSpace {
    FockSpace::new(N_MAX).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> hotion::Result<Outcome>;

fn outcome(pass: bool, detail: String) -> hotion::Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn phonon_inputs() -> hotion::Result<Vec<(String, PhononInput)>> {
    let mut inputs = Vec::new();
    for n in 0..=8 {
        inputs.push((format!("fock:{n}"), PhononInput::Pure(fock_state(n, fock())?)));
    }
    let alpha = C64::new(1.5, 0.0);
    inputs.push(("coherent:1.5".into(), PhononInput::Pure(coherent_state(alpha, fock(), DEFAULT_MAX_DISCARDED)?.value)));
    for n_bar in [0.5, 2.0, 5.0] {
        let t = thermal_state(ThermalSpec::new(n_bar)?, fock(), DEFAULT_MAX_DISCARDED)?;
        inputs.push((format!("thermal:{n_bar}"), PhononInput::Mixed(t.rho)));
    }
    for seed in 0..20 {
        inputs.push((format!("random:{seed}"), PhononInput::Pure(random_pure_state(seed, fock()))));
    }
    Ok(inputs)
}

fn truth_table_exactness() -> hotion::Result<Outcome> {
    let start = Instant::now();
    let config = GateConfig::ideal(params());
    let inputs = phonon_inputs()?;
    let (mut worst_dev, mut worst_rest) = (0.0f64, 1.0f64);
    let mut bad = Vec::new();
    for (name, input) in &inputs {
        let report = analyze(&config, input, Sequence::Crot)?;
        let dev = report.truth_table_deviation.unwrap_or(f64::INFINITY);
        worst_dev = worst_dev.max(dev);
        worst_rest = worst_rest.min(report.phonon_restoration_fidelity);
        if dev >= 1e-12 || report.phonon_restoration_fidelity <= 1.0 - 1e-12 {
            bad.push(name.clone());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        bad.is_empty() && elapsed < Duration::from_secs(10),
        format!(
            "{} inputs, max deviation {worst_dev:.2e}, min restoration 1-{:.2e}, {:.2}s{}",
            inputs.len(),
            1.0 - worst_rest,
            elapsed.as_secs_f64(),
            if bad.is_empty() { String::new() } else { format!(", failing: {bad:?}") }
        ),
    )
}

fn operator_oracle() -> hotion::Result<Outcome> {
    let p = params();
    let tau = p.tau()?;
    let mut worst = 0.0f64;
    let mut cases = Vec::new();
    for n_max in [1, 2, 8, 16, 32, 64] {
        cases.push((1, 0, n_max));
    }
    for n_max in [1, 8, 16] {
        cases.push((2, 0, n_max));
        cases.push((2, 1, n_max));
    }
    for &(ions, target, n_max) in &cases {
        let space = CompositeSpace::new(ions, FockSpace::new(n_max)?)?;
        let h = hamiltonian_dhelon(target, &PhysicalParams { n_ions: ions.max(1), ..p }, &space)?;
        // χ depends on the ion count, so rescale τ to keep χτ = π
        let chi = PhysicalParams { n_ions: ions.max(1), ..p }.chi()?;
        let t = if ions == 2 { tau } else { PI / chi };
        let dense = (h * C64::new(0.0, -t)).exp();
        let structured = conditional_phase(target).matrix(&space)?;
        worst = worst.max((dense - structured).camax());
    }
    outcome(worst < 1e-12, format!("{} spaces up to n_max = 64, max deviation {worst:.2e}", cases.len()))
}

fn even_support_inputs() -> hotion::Result<Vec<DVector<C64>>> {
    let mut inputs = Vec::new();
    for n in (0..N_MAX).step_by(2) {
        inputs.push(fock_state(n, fock())?);
    }
    for seed in 0..20u64 {
        let mut v = random_pure_state(seed, fock());
        for (n, a) in v.iter_mut().enumerate() {
            if n % 2 == 1 || n == N_MAX {
                *a = C64::new(0.0, 0.0);
            }
        }
        inputs.push(v.normalize());
    }
    Ok(inputs)
}

fn parity_bookkeeping() -> hotion::Result<Outcome> {
    let space = CompositeSpace::new(2, fock())?;
    let level = |l: IonLevel| {
        let mut v = DVector::zeros(4);
        v[l.index()] = C64::new(1.0, 0.0);
        v
    };
    let inputs = even_support_inputs()?;
    let mut nonzero_even = 0usize;
    let mut worst_norm = 0.0f64;
    for phi in &inputs {
        let psi = CompositeState::product(space, &[level(IonLevel::Excited), level(IonLevel::Ground)], phi)?;
        let out = adiabatic_up(0).apply(&psi)?;
        for (i, a) in out.amplitudes().iter().enumerate() {
            let even = space.phonon_of(i) % 2 == 0;
            if even && *a != C64::new(0.0, 0.0) {
                nonzero_even += 1;
            }
        }
        let on_shelf_odd = space.population_where(out.amplitudes().as_slice(), |i| {
            space.level_of(i, 0) == IonLevel::Shelf.index() && space.phonon_of(i) % 2 == 1
        });
        worst_norm = worst_norm.max((on_shelf_odd - 1.0).abs());
    }
    outcome(
        nonzero_even == 0 && worst_norm < 1e-12,
        format!("{} even inputs, {nonzero_even} nonzero even amplitudes, |P(odd) - 1| <= {worst_norm:.1e}", inputs.len()),
    )
}

static SEARCH: OnceLock<hotion::Result<Option<(AdiabaticSearch, Duration)>>> = OnceLock::new();

fn adiabatic_search() -> &'static hotion::Result<Option<(AdiabaticSearch, Duration)>> {
    SEARCH.get_or_init(|| {
        let start = Instant::now();
        let p = params();
        let t0 = 5.0;
        let template = StirapSchedule::counter_intuitive(
            Direction::Up,
            t0,
            1.0,
            1.0 / p.eta,
            0.0,
            (t0 * STEPS_PER_UNIT_MARGIN) as usize,
        )?;
        let durations: Vec<f64> = (1..=100).map(|k| 5.0 * k as f64).collect();
        let found = find_adiabatic_schedule(&template, &p, MAX_TRANSFER_N, 0.999, &durations)?;
        Ok(found.map(|s| (s, start.elapsed())))
    })
}

fn final_populations(n: usize, schedule: &StirapSchedule) -> hotion::Result<[f64; 3]> {
    let source = match schedule.direction {
        Direction::Up => EXCITED,
        Direction::Down => hotion::stirap::SHELF,
    };
    let u = block_propagator(n, schedule, &params())?;
    Ok([0, 1, 2].map(|i| u[(i, source)].norm_sqr()))
}

fn stirap_transfer() -> hotion::Result<Outcome> {
    let (search, elapsed) = match adiabatic_search() {
        Ok(Some(found)) => found,
        Ok(None) => return outcome(false, "no duration up to 500 reached 0.999".into()),
        Err(e) => return Err(e.clone()),
    };
    let start = Instant::now();
    let up = search.schedule;
    let mut worst_dt = 0.0f64;
    for schedule in [up, up.reversed()] {
        for n in 0..=MAX_TRANSFER_N {
            let coarse = final_populations(n, &schedule)?;
            let fine = final_populations(n, &schedule.with_steps(2 * schedule.steps()))?;
            for (a, b) in coarse.iter().zip(&fine) {
                worst_dt = worst_dt.max((a - b).abs());
            }
        }
    }
    let total = *elapsed + start.elapsed();
    let min_eff = search.efficiencies.iter().copied().fold(1.0, f64::min);

    let artifact = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("stirap_margin.json");
    let record = format!(
        "{{\"margin\": {}, \"total_duration\": {}, \"steps\": {}, \"min_efficiency\": {}, \"dt_halving_change\": {}}}\n",
        search.margin,
        up.total_duration,
        up.steps(),
        min_eff,
        worst_dt
    );
    let _ = std::fs::write(&artifact, record);

    outcome(
        min_eff >= 0.999 && worst_dt < 1e-8 && total < Duration::from_secs(60),
        format!(
            "M* = {} (T = {}, {} durations tried), min efficiency n<=10 {min_eff:.6}, dt-halving change {worst_dt:.2e}, {:.2}s, written to {}",
            search.margin,
            up.total_duration,
            search.tried.len(),
            total.as_secs_f64(),
            artifact.display()
        ),
    )
}

fn round_trip() -> hotion::Result<Outcome> {
    let search = match adiabatic_search() {
        Ok(Some((s, _))) => s,
        Ok(None) => return outcome(false, "no schedule reached the transfer threshold".into()),
        Err(e) => return Err(e.clone()),
    };
    let p = params();
    let mut worst = 1.0f64;
    for scale in MARGIN_SCALES {
        let up = search.schedule.stretched(search.schedule.total_duration * scale);
        let down = up.reversed();
        for n in 0..=MAX_TRANSFER_N {
            let u = block_propagator(n, &down, &p)? * block_propagator(n, &up, &p)?;
            worst = worst.min(u[(EXCITED, EXCITED)].norm_sqr());
        }
    }
    outcome(worst >= 0.998, format!("margins M* x {MARGIN_SCALES:?}, min return fidelity n<=10 {worst:.6}"))
}

fn mixed_equivalence() -> hotion::Result<Outcome> {
    let report = mixed_state_equivalence(&GateConfig::ideal(params()), ThermalSpec::new(1.0)?, N_MAX, DEFAULT_MAX_DISCARDED)?;
    outcome(
        report.max_deviation < 1e-10,
        format!("thermal n_bar = 1, n_max = {N_MAX}, max element deviation {:.2e}", report.max_deviation),
    )
}

fn rotation_oracle(theta: f64, phi: f64) -> Matrix4<C64> {
    let (o, i) = (C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    let z = C64::new(0.0, 0.0);
    let x = Matrix2::new(z, o, o, z);
    let y = Matrix2::new(z, -i, i, z);
    let generator = (x * C64::new(phi.cos(), 0.0) + y * C64::new(phi.sin(), 0.0)) * C64::new(0.0, -theta / 2.0);
    let r = generator.exp();
    Matrix2::identity().kronecker(&r)
}

fn without_global_phase(m: &Matrix4<C64>) -> Matrix4<C64> {
    let (k, _) = m.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
    let phase = m[k] / m[k].norm();
    m / phase
}

fn cnot_correctness() -> hotion::Result<Outcome> {
    let o = C64::new(1.0, 0.0);
    let crot = Matrix4::from_diagonal(&nalgebra::Vector4::new(o, o, o, -o));
    let oracle = rotation_oracle(FRAC_PI_2, hotion::gate::CNOT_POST_PHASE)
        * crot
        * rotation_oracle(FRAC_PI_2, hotion::gate::CNOT_PRE_PHASE);
    let cnot = Sequence::Cnot.ideal_matrix();
    let oracle_dev = (without_global_phase(&oracle) - cnot).camax();

    let config = GateConfig::ideal(params());
    let inputs = [
        PhononInput::Pure(fock_state(0, fock())?),
        PhononInput::Pure(fock_state(5, fock())?),
        PhononInput::Pure(random_pure_state(3, fock())),
        PhononInput::Mixed(thermal_state(ThermalSpec::new(1.0)?, fock(), DEFAULT_MAX_DISCARDED)?.rho),
    ];
    let mut worst = 0.0f64;
    for input in &inputs {
        let table = table_for(&config, input, Sequence::Cnot)?;
        worst = worst.max((without_global_phase(&table) - cnot).camax());
        worst = worst.max((without_global_phase(&table) - without_global_phase(&oracle)).camax());
    }
    outcome(
        oracle_dev < 1e-12 && worst < 1e-12,
        format!("oracle product deviation {oracle_dev:.2e}, simulated tables ({} inputs) {worst:.2e}", inputs.len()),
    )
}

fn sensitivity() -> hotion::Result<Outcome> {
    let config = GateConfig { epsilon: 0.01, ..GateConfig::ideal(params()) };
    let mut infidelities = Vec::new();
    for n in [0, 2, 4, 8] {
        let report = analyze(&config, &PhononInput::Pure(fock_state(n, fock())?), Sequence::Crot)?;
        infidelities.push(1.0 - report.qubit_fidelity);
    }
    let monotone = infidelities.windows(2).all(|w| w[1] > w[0]);
    let shown: Vec<String> = infidelities.iter().map(|x| format!("{x:.3e}")).collect();
    outcome(monotone, format!("epsilon = 0.01, infidelity at n = 0, 2, 4, 8: {}", shown.join(", ")))
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("truth-table exactness (ideal mode)", truth_table_exactness),
        ("operator-oracle equivalence", operator_oracle),
        ("parity bookkeeping", parity_bookkeeping),
        ("STIRAP transfer", stirap_transfer),
        ("round-trip adiabatic passage", round_trip),
        ("mixed-state equivalence", mixed_equivalence),
        ("CNOT correctness", cnot_correctness),
        ("sensitivity to timing error", sensitivity),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("criterion {} {name}: {} ({detail})", k + 1, if pass { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
