//! Command-line front end.
//!
//! Exit codes: `0` success, `1` validation failure (bad input, violated
//! check), `2` numerical failure (non-converged eigensolver, bound table off
//! its analytic value).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use crate::circuit::{
    build_rac_circuit, builtin_gate, computational_noise, evans_schulman_check,
    exact_circuit_information, EsVerdict, ReliabilityQuery, TreeCircuit,
};
use crate::error::{Error, Result};
use crate::ic_bounds::{ic_quantity, IcReport};
use crate::infotheory::signal_decay_sweep;
use crate::nsbox::{validate_no_signaling, NsBox};
use crate::rac::{Case, RacProtocol};
use crate::sdp::{bound_table, parse_k_range, write_csv, write_json, SolverParams};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;

/// Relative tolerance of `bounds` against the analytic value.
pub const BOUNDS_REL_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "tsirelson-lab", version, about = "Information causality and Tsirelson-type bounds for no-signaling boxes")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "TSIRELSON_LAB_SEED", default_value_t = 42)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    A,
    B,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Case {
        match c {
            CaseArg::A => Case::A,
            CaseArg::B => Case::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SDP bound table over a range of k.
    Bounds {
        #[arg(long, value_enum, default_value_t = CaseArg::A)]
        case: CaseArg,
        /// A single k or an inclusive range like 2..8.
        #[arg(long, default_value = "2..8")]
        k: String,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Information causality quantities of one box.
    IcCheck {
        /// Box JSON file, or one of pr, uniform, quantum-optimal.
        #[arg(long = "box", default_value = "quantum-optimal")]
        box_source: String,
        #[arg(long, value_enum, default_value_t = CaseArg::A)]
        case: CaseArg,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Exact information through a gate tree, or a reliability verdict.
    Circuit {
        /// Gate box for pyramids: a JSON file or a builtin name.
        #[arg(long = "box", default_value = "quantum-optimal")]
        box_source: String,
        /// Number of leaves (pyramid) or circuit inputs (--es-check).
        #[arg(long)]
        n: Option<u64>,
        /// Gate arity.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Circuit description file; overrides the pyramid options.
        #[arg(long)]
        circuit: Option<PathBuf>,
        /// Evaluate only the reliability conditions.
        #[arg(long)]
        es_check: bool,
        /// Target unreliability, in (0, 1/2).
        #[arg(long)]
        delta: Option<f64>,
        /// Sum of squared per-query gate noise; derived from the gates if omitted.
        #[arg(long)]
        eps_sq: Option<f64>,
        /// Circuit depth.
        #[arg(long)]
        l: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized check of information decay through binary symmetric channels.
    SignalDecay {
        #[arg(long, default_value_t = 10_000)]
        sweep: usize,
        #[command(flatten)]
        output: Output,
    },
    /// No-signaling checks of a box file.
    ValidateBox {
        #[arg(long = "box")]
        box_source: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK });
        }
    };
    ExitCode::from(match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    })
}

pub fn exit_code_for(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_VALIDATION
    }
}

pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Bounds {
            case,
            k,
            restarts,
            max_iter,
            tol,
            output,
        } => {
            let params = SolverParams {
                restarts: *restarts,
                max_iter: *max_iter,
                tol: *tol,
                seed: cli.seed,
            };
            cmd_bounds((*case).into(), k, &params, output)
        }
        Command::IcCheck {
            box_source,
            case,
            k,
            output,
        } => cmd_ic_check(box_source, (*case).into(), *k, output),
        Command::Circuit {
            box_source,
            n,
            k,
            circuit,
            es_check,
            delta,
            eps_sq,
            l,
            out,
        } => {
            if *es_check {
                cmd_es_check(*delta, *eps_sq, *n, *l, out.as_deref())
            } else {
                cmd_circuit(box_source, *n, *k, circuit.as_deref(), *delta, out.as_deref())
            }
        }
        Command::SignalDecay { sweep, output } => cmd_signal_decay(*sweep, cli.seed, output),
        Command::ValidateBox { box_source, out } => cmd_validate_box(box_source, out.as_deref()),
    }
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_pretty<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_bounds(case: Case, k: &str, params: &SolverParams, output: &Output) -> Result<u8> {
    params.validate()?;
    let ks = parse_k_range(k)?;
    let rows = bound_table(case, &ks, params)?;
    let mut w = open_output(output.out.as_deref())?;
    match output.format {
        Format::Csv => write_csv(&rows, &mut w)?,
        Format::Json => write_json(&rows, &mut w)?,
    }
    w.flush()?;
    let mut code = EXIT_OK;
    for r in &rows {
        if r.abs_error > BOUNDS_REL_TOL * r.analytic {
            eprintln!(
                "k={}: sdp value {} is off the analytic {} by {:e}",
                r.k, r.sdp_value, r.analytic, r.abs_error
            );
            code = EXIT_NUMERICAL;
        }
        if !r.certified {
            eprintln!(
                "k={}: dual certificate not accepted (gap {:e}, min eigenvalue {:e})",
                r.k, r.gap, r.min_eig_s
            );
        }
    }
    Ok(code)
}

/// A builtin name or a path to a box JSON file.
pub fn load_box(source: &str, protocol: &RacProtocol) -> Result<NsBox> {
    match source {
        "pr" => protocol.pr_box(),
        "uniform" => protocol.uniform_box(),
        "quantum-optimal" => protocol.quantum_optimal_box(),
        path => {
            let text = std::fs::read_to_string(path)?;
            NsBox::from_json(&text)
        }
    }
}

#[derive(Debug, Serialize)]
struct IcCheckOutput<'a> {
    #[serde(rename = "box")]
    box_source: &'a str,
    case: Case,
    k: usize,
    report: &'a IcReport,
    super_quantum: bool,
    consistent: bool,
}

/// Whether the report matches what the named builtin must produce.
fn consistent_with_class(source: &str, r: &IcReport, k: usize) -> bool {
    match source {
        "pr" => r.super_quantum() && (r.i_total - k as f64).abs() < 1e-9,
        "quantum-optimal" => {
            (r.quadratic_sum - 1.0).abs() <= 1e-9 && !r.super_quantum() && r.satisfied.signal_decay
        }
        "uniform" => r.i_total.abs() < 1e-12 && r.quadratic_sum.abs() < 1e-12 && r.linear_sum.abs() < 1e-12,
        _ => true,
    }
}

pub fn cmd_ic_check(source: &str, case: Case, k: usize, output: &Output) -> Result<u8> {
    let protocol = RacProtocol::new(k, case)?;
    let nsbox = load_box(source, &protocol)?;
    let report = ic_quantity(&nsbox, &protocol)?;
    let consistent = consistent_with_class(source, &report, k);
    let mut w = open_output(output.out.as_deref())?;
    match output.format {
        Format::Json => {
            let doc = IcCheckOutput {
                box_source: source,
                case,
                k,
                report: &report,
                super_quantum: report.super_quantum(),
                consistent,
            };
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record([
                "box",
                "case",
                "k",
                "I_total",
                "quadratic_sum",
                "linear_sum",
                "lhs_correlator_form",
                "super_quantum",
                "consistent",
            ])?;
            c.write_record([
                source.to_string(),
                case.to_string(),
                k.to_string(),
                format!("{:.6}", report.i_total),
                format!("{:.6}", report.quadratic_sum),
                format!("{:.6}", report.linear_sum),
                format!("{:.6}", report.lhs_correlator_form),
                report.super_quantum().to_string(),
                consistent.to_string(),
            ])?;
            c.flush()?;
        }
    }
    w.flush()?;
    if !consistent {
        eprintln!("box {source:?} does not behave as its class requires");
        return Ok(EXIT_VALIDATION);
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct CircuitOutput {
    k: usize,
    l: usize,
    n: usize,
    gates: usize,
    #[serde(rename = "I_total")]
    i_total: f64,
    per_bit: Vec<f64>,
    information_causality: bool,
    epsilon_sq_sum: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    evans_schulman: Option<EsVerdict>,
}

pub fn cmd_circuit(
    source: &str,
    n: Option<u64>,
    k: usize,
    circuit_path: Option<&Path>,
    delta: Option<f64>,
    out: Option<&Path>,
) -> Result<u8> {
    let circuit = match circuit_path {
        Some(path) => TreeCircuit::from_json(&std::fs::read_to_string(path)?)?,
        None => {
            let n = n.unwrap_or(k as u64) as usize;
            let protocol = RacProtocol::new(k, Case::A)?;
            let gate = match builtin_gate(source, k)? {
                Some(b) => b,
                None => load_box(source, &protocol)?,
            };
            build_rac_circuit(n, k, &gate)?
        }
    };
    let protocol = RacProtocol::new(circuit.k(), Case::A)?;
    // Gates may differ; the reliability conditions use the noisiest-looking (largest) one.
    let epsilon_sq_sum = circuit
        .boxes()
        .values()
        .map(|b| computational_noise(b, &protocol).map(|g| g.epsilon_sq_sum()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    info!(
        "circuit k={} l={} n={} gates={}",
        circuit.k(),
        circuit.depth(),
        circuit.n(),
        circuit.gate_count()
    );
    let info = exact_circuit_information(&circuit)?;
    let evans_schulman = delta
        .map(|delta| {
            evans_schulman_check(&ReliabilityQuery {
                delta,
                epsilon_sq_sum,
                n: circuit.n() as u64,
                l: Some(circuit.depth() as u32),
            })
        })
        .transpose()?;
    let doc = CircuitOutput {
        k: circuit.k(),
        l: circuit.depth(),
        n: circuit.n(),
        gates: circuit.gate_count(),
        information_causality: info.i_total <= 1.0 + crate::ic_bounds::VIOLATION_TOL,
        i_total: info.i_total,
        per_bit: info.per_bit,
        epsilon_sq_sum,
        evans_schulman,
    };
    write_pretty(&doc, out)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct EsOutput {
    query: ReliabilityQuery,
    verdict: EsVerdict,
}

pub fn cmd_es_check(
    delta: Option<f64>,
    eps_sq: Option<f64>,
    n: Option<u64>,
    l: Option<u32>,
    out: Option<&Path>,
) -> Result<u8> {
    let missing = |name: &str| Error::domain(format!("--es-check needs --{name}"));
    let query = ReliabilityQuery {
        delta: delta.ok_or_else(|| missing("delta"))?,
        epsilon_sq_sum: eps_sq.ok_or_else(|| missing("eps-sq"))?,
        n: n.ok_or_else(|| missing("n"))?,
        l,
    };
    let verdict = evans_schulman_check(&query)?;
    write_pretty(&EsOutput { query, verdict }, out)?;
    Ok(EXIT_OK)
}

pub fn cmd_signal_decay(sweep: usize, seed: u64, output: &Output) -> Result<u8> {
    if sweep == 0 {
        return Err(Error::domain("sweep size must be at least 1"));
    }
    let rows = signal_decay_sweep(sweep, seed)?;
    let violations = rows.iter().filter(|r| !r.report.pass).count();
    let mut w = open_output(output.out.as_deref())?;
    match output.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &rows)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record([
                "trial",
                "n_x",
                "epsilon",
                "i_xy",
                "i_xz",
                "ratio",
                "bound",
                "data_processing",
                "pass",
            ])?;
            for r in &rows {
                let s = &r.report;
                c.write_record([
                    r.trial.to_string(),
                    r.n_x.to_string(),
                    format!("{:.6}", s.epsilon),
                    format!("{:.6}", s.i_xy),
                    format!("{:.6}", s.i_xz),
                    s.ratio.map_or(String::new(), |v| format!("{v:.6}")),
                    format!("{:.6}", s.bound),
                    s.data_processing.to_string(),
                    s.pass.to_string(),
                ])?;
            }
            c.flush()?;
        }
    }
    w.flush()?;
    eprintln!("{} trials, {violations} violations", rows.len());
    Ok(if violations == 0 { EXIT_OK } else { EXIT_VALIDATION })
}

pub fn cmd_validate_box(path: &Path, out: Option<&Path>) -> Result<u8> {
    let nsbox = NsBox::from_json_unchecked(&std::fs::read_to_string(path)?)?;
    let report = validate_no_signaling(&nsbox);
    write_pretty(&report, out)?;
    if let Err(e) = nsbox.validate() {
        eprintln!("{e}");
        return Ok(EXIT_VALIDATION);
    }
    Ok(EXIT_OK)
}
