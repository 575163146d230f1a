use std::fmt::Write as _;
use std::time::Instant;

use hotion::gate::{analyze, GateReport, Sequence};
use hotion::stirap::trace_block;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};
use crate::{csv_float, CliError, Format};

/// Seed for `random` phonon states that do not carry their own.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub format: Option<Format>,
    pub seed: Option<u64>,
    /// Add a wall-clock column to sweep output (breaks byte-identical reruns).
    pub timing: bool,
}

/// What a command produced: the document to write and the lines for stdout.
#[derive(Clone, Debug)]
pub struct Output {
    pub document: String,
    pub summary: Vec<String>,
}

fn format_for(config: &ExperimentConfig, opts: &RunOptions, default: Format) -> Format {
    opts.format.or(config.output.format).unwrap_or(default)
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn report_for(config: &ExperimentConfig, seed: u64) -> Result<GateReport, CliError> {
    let gate = config.gate_config()?;
    let prepared = config
        .state_spec()?
        .prepare(config.fock()?, seed, config.phonon.max_discarded_weight)?;
    let mut report = analyze(&gate, &prepared.input, Sequence::Crot)?;
    report.input_discarded_weight = prepared.discarded;
    Ok(report)
}

pub fn truth_table(config: &ExperimentConfig, opts: &RunOptions) -> Result<Output, CliError> {
    config.validate()?;
    let report = report_for(config, opts.seed.unwrap_or(DEFAULT_SEED))?;
    let summary = vec![
        format!("qubit_fidelity {}", csv_float(report.qubit_fidelity)),
        format!("phonon_restoration_fidelity {}", csv_float(report.phonon_restoration_fidelity)),
    ];
    let document = match format_for(config, opts, Format::Json) {
        Format::Json => json(&report),
        Format::Csv => report_csv(&report),
    };
    Ok(Output { document, summary })
}

fn report_csv(report: &GateReport) -> String {
    let mut out = String::from("metric,value\n");
    let mut row = |name: &str, value: Option<f64>| {
        let cell = value.map(csv_float).unwrap_or_default();
        writeln!(out, "{name},{cell}").unwrap();
    };
    row("qubit_fidelity", Some(report.qubit_fidelity));
    row("raw_qubit_fidelity", Some(report.raw_qubit_fidelity));
    row("compensated_qubit_fidelity", Some(report.compensated_qubit_fidelity));
    row("phonon_restoration_fidelity", Some(report.phonon_restoration_fidelity));
    row("leakage", Some(report.leakage));
    row("entanglement_residue", Some(report.entanglement_residue));
    row("input_discarded_weight", Some(report.input_discarded_weight));
    row("truth_table_deviation", report.truth_table_deviation);
    for b in 0..4 {
        for a in 0..4 {
            let m = report.truth_table.map(|t| t.0[(b, a)]);
            row(&format!("table_{b:02b}_{a:02b}_re"), m.map(|z| z.re));
            row(&format!("table_{b:02b}_{a:02b}_im"), m.map(|z| z.im));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub gate_fidelity: f64,
    pub phonon_restoration: f64,
    pub leakage: f64,
    /// Worst up/down transfer efficiency; absent in ideal mode.
    pub min_transfer_efficiency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

/// Grid points in lexicographic order (the first axis varies slowest).
pub fn grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |points, values| {
        points
            .iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect()
    })
}

pub fn sweep(config: &ExperimentConfig, opts: &RunOptions) -> Result<Output, CliError> {
    config.validate()?;
    let axes = match &config.sweep {
        Some(s) if !s.axes.is_empty() => &s.axes,
        _ => return Err(CliError::Config("sweep needs at least one axis".into())),
    };
    let names: Vec<&str> = axes.iter().map(|a| a.parameter.as_str()).collect();
    let points = grid(&axes.iter().map(|a| a.values()).collect::<Vec<_>>());
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);

    let rows = points
        .par_iter()
        .map(|point| {
            let start = Instant::now();
            let mut c = config.clone();
            for (name, &v) in names.iter().zip(point) {
                c = c.with_parameter(name, v)?;
            }
            let report = report_for(&c, seed)?;
            Ok(SweepRow {
                values: point.clone(),
                gate_fidelity: report.qubit_fidelity,
                phonon_restoration: report.phonon_restoration_fidelity,
                leakage: report.leakage,
                min_transfer_efficiency: report.stirap.map(|d| d.min_up_efficiency.min(d.min_down_efficiency)),
                runtime_s: opts.timing.then(|| start.elapsed().as_secs_f64()),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let document = match format_for(config, opts, Format::Csv) {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                parameters: &'a [&'a str],
                rows: &'a [SweepRow],
            }
            json(&Doc { parameters: &names, rows: &rows })
        }
        Format::Csv => {
            let mut header: Vec<&str> = names.clone();
            header.extend(["gate_fidelity", "phonon_restoration", "leakage", "min_transfer_efficiency"]);
            if opts.timing {
                header.push("runtime_s");
            }
            let mut out = header.join(",");
            out.push('\n');
            for row in &rows {
                let mut cells: Vec<String> = row.values.iter().copied().map(csv_float).collect();
                cells.extend([row.gate_fidelity, row.phonon_restoration, row.leakage].map(csv_float));
                cells.push(row.min_transfer_efficiency.map(csv_float).unwrap_or_default());
                if let Some(t) = row.runtime_s {
                    cells.push(csv_float(t));
                }
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
    };
    Ok(Output { document, summary: vec![format!("{} grid points", rows.len())] })
}

pub fn stirap_trace(config: &ExperimentConfig, opts: &RunOptions) -> Result<Output, CliError> {
    config.validate()?;
    if config.gate.mode != Mode::Stirap {
        return Err(CliError::Config("stirap-trace needs gate.mode = \"stirap\"".into()));
    }
    let schedule = config
        .up_schedule()?
        .ok_or_else(|| CliError::Config("schedule required".into()))?;
    let n = config.trace.as_ref().map_or(0, |t| t.n);
    let points = trace_block(n, &schedule, &config.params())?;
    let last = points.last().map(|p| p.populations[2]).unwrap_or(0.0);

    let document = match format_for(config, opts, Format::Csv) {
        Format::Json => json(&points),
        Format::Csv => {
            let mut out = String::from("t,pump,stokes_n,p1,p3,p2\n");
            for p in &points {
                let [p1, p3, p2] = p.populations;
                let cells = [p.t, p.pump, p.stokes, p1, p3, p2].map(csv_float);
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
    };
    Ok(Output { document, summary: vec![format!("final population of |2,{}> {}", n + 1, csv_float(last))] })
}
