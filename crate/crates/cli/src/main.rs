//! `qmeas`: scenario sweeps, property campaigns, frontier searches and
//! audits of measurement models.
//!
//! Exit status: 0 on success, 2 on invalid input, 3 when a universally
//! valid relation fails or the consistency audit reports a fault.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qmeas_core::audit::{
    check_unbiased_disturbance, check_unbiased_measurement, inconsistency_certificate, BiasReport,
    InconsistencyCertificate, Verdict,
};
use qmeas_core::box_norm::{boundary_term, check_box_relation, delta_p, delta_x, BoxState};
use qmeas_core::frontier::{bias_blowup_probe, trace_frontier, ModelParameterization};
use qmeas_core::io::{model_from_json, model_to_json, operator_from_json, state_from_json};
use qmeas_core::model::{build_joint_unbiased, build_noisy_unbiased, build_projective_spin, MeasurementModel};
use qmeas_core::operator::{sigma_x, sigma_y, sigma_z, ComplexOperator, PureState, Tolerances};
use qmeas_core::relations::{evaluate_all, RelationId, RelationReport, SuiteReport};
use qmeas_core::runner::{blowup_csv, frontier_csv, run_campaign, run_spin_sweep, Suite, SPIN_SWEEP_STEPS};
use qmeas_core::QmeasError;

const EXIT_VALIDATION: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "qmeas", version, about = "Error-disturbance relations for finite-dimensional measurement models")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Absolute tolerance for algebraic identities.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_alg: f64,
    /// Relative tolerance for inequality classification.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_rel: f64,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Projective spin measurement of σx along σφ, disturbing σy, on |+z⟩.
    SpinSweep {
        /// First angle in radians.
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        /// Last angle in radians.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        end: f64,
        #[arg(long, default_value_t = SPIN_SWEEP_STEPS)]
        steps: usize,
    },
    /// Randomized property checks.
    Campaign {
        /// robertson, universal-relations, unbiasedness-theorem or box.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 1000)]
        instances: usize,
    },
    /// Search over qubit-apparatus models for the (ε, η) tradeoff, or for the
    /// smallest disturbance bias under ε caps.
    Frontier {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_enum, default_value_t = FrontierMode::Tradeoff)]
        mode: FrontierMode,
        /// Objective evaluations, at least 100.
        #[arg(long, default_value_t = 4000)]
        budget: usize,
        /// Angle in radians of the projective spin model used as the start.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        phi0: f64,
        /// Decreasing ε caps for the bias mode.
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.2,0.05,0.01")]
        caps: Vec<f64>,
    },
    /// Momentum-position relation on a periodic interval.
    Box {
        /// Box state file; a single plane wave is used when omitted.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Mode of the single plane wave.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        mode: i64,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
    },
    /// Unbiasedness audit and relation suite for a model file.
    Audit {
        /// Model file as written by `export-model`.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        target: Target,
    },
    /// Writes a built-in model as a model file.
    ExportModel {
        #[arg(long, value_enum, default_value_t = Scenario::Spin)]
        scenario: Scenario,
        /// Angle for the spin scenario, radians.
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        /// Noise strength for the noisy scenario.
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
    },
}

#[derive(Args, Debug)]
struct Target {
    /// Measured observable: sx, sy, sz or an observable file.
    #[arg(long, default_value = "sx")]
    a: String,
    /// Disturbed observable: sx, sy, sz or an observable file.
    #[arg(long, default_value = "sy")]
    b: String,
    /// System state: +z, -z, +x, +y or a state file.
    #[arg(long, default_value = "+z", allow_hyphen_values = true)]
    psi: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FrontierMode {
    Tradeoff,
    Bias,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scenario {
    /// Projective spin measurement along σφ.
    Spin,
    /// Unbiased σx measurement with σx noise on a qubit.
    Noisy,
    /// Joint measurement of σx and σy with two commuting pointers.
    Joint,
}

/// Rendered output plus whether it records a universal failure.
struct Outcome {
    text: String,
    violation: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if let Err(e) = emit(&cli.global, &outcome.text) {
                eprintln!("error: {e:#}");
                return ExitCode::from(EXIT_VALIDATION);
            }
            if outcome.violation {
                eprintln!("universal relation violated or audit fault detected");
                ExitCode::from(EXIT_VIOLATION)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn emit(global: &Global, text: &str) -> anyhow::Result<()> {
    match &global.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let g = &cli.global;
    let tol = Tolerances::new(g.tol_alg, g.tol_rel)?;
    match &cli.command {
        Command::SpinSweep { start, end, steps } => {
            let sweep = run_spin_sweep(*start, *end, *steps, g.seed, &tol)?;
            Ok(Outcome {
                text: render(g.format, || Ok(sweep.to_csv()?), || Ok(sweep.to_json()?))?,
                violation: sweep.universal_violations() > 0,
            })
        }
        Command::Campaign { suite, instances } => {
            let suite: Suite = suite.parse()?;
            let result = run_campaign(suite, *instances, g.seed, &tol)?;
            let s = &result.summary;
            eprintln!(
                "{}: {} instances, {} passed, {} failed, worst margin {}",
                suite.name(),
                s.instances,
                s.passes,
                s.failures,
                s.worst_margin.map_or("n/a".into(), |m| format!("{m:e}"))
            );
            Ok(Outcome {
                text: render(g.format, || Ok(result.to_csv()), || Ok(result.to_json()?))?,
                violation: s.faults > 0,
            })
        }
        Command::Frontier {
            target,
            mode,
            budget,
            phi0,
            caps,
        } => {
            let (a, b, psi) = target.resolve()?;
            match mode {
                FrontierMode::Tradeoff => {
                    let p0 = qubit_start(&a, *phi0)?;
                    let run = trace_frontier(&a, &b, &psi, &p0, *budget, g.seed, &tol)?;
                    let violation = run.stats.forbidden_hits > 0
                        || run.stats.spot_check_violations > 0
                        || run.points.iter().flat_map(|p| &p.reports).any(|r| r.is_universal_violation());
                    Ok(Outcome {
                        text: render(g.format, || Ok(frontier_csv(&run)), || json(&run))?,
                        violation,
                    })
                }
                FrontierMode::Bias => {
                    let run = bias_blowup_probe(&a, &b, &psi, caps, *budget, g.seed, &tol)?;
                    Ok(Outcome {
                        violation: run.stats.forbidden_hits > 0 || run.stats.spot_check_violations > 0,
                        text: render(g.format, || Ok(blowup_csv(&run)), || json(&run))?,
                    })
                }
            }
        }
        Command::Box {
            state,
            mode,
            length,
            hbar,
        } => {
            let s = match state {
                Some(path) => BoxState::from_json(&read(path)?)?,
                None => BoxState::single_mode(*length, *hbar, mode.unsigned_abs() as usize, *mode)?,
            };
            let report = check_box_relation(&s, &tol)?;
            let (dp, dx) = (delta_p(&s)?, delta_x(&s)?);
            let csv = || {
                Ok(format!(
                    "delta_p,delta_x,lhs,rhs,margin,status\n{},{},{},{},{},{}\n",
                    dp, dx, report.lhs, report.rhs, report.margin, report.status
                ))
            };
            let doc = BoxOutput {
                delta_p: dp,
                delta_x: dx,
                boundary_term: boundary_term(&s),
                report: &report,
            };
            Ok(Outcome {
                text: render(g.format, csv, || json(&doc))?,
                violation: report.is_universal_violation(),
            })
        }
        Command::Audit { model, target } => {
            let model = model_from_json(&read(model)?)?;
            let (a, b, psi) = target.resolve()?;
            audit(&model, &a, &b, &psi, &tol, g.format)
        }
        Command::ExportModel { scenario, phi, noise } => {
            let model = match scenario {
                Scenario::Spin => build_projective_spin(*phi),
                Scenario::Noisy => build_noisy_unbiased(&sigma_x(), &sigma_x().scale_real(*noise), &PureState::plus_z())?,
                Scenario::Joint => build_joint_unbiased(&sigma_x(), &sigma_y())?,
            };
            let mut text = model_to_json(&model)?;
            text.push('\n');
            Ok(Outcome { text, violation: false })
        }
    }
}

/// Projective spin parameters at `phi0` when `A` is a qubit observable, else
/// the precise measurement of `A` on a register.
fn qubit_start(a: &ComplexOperator, phi0: f64) -> anyhow::Result<ModelParameterization> {
    if a.dim() == 2 {
        Ok(ModelParameterization::projective_spin(phi0))
    } else {
        let levels = qmeas_core::operator::projectors_of(a)?.len().max(2);
        Ok(ModelParameterization::precise_for(a, levels)?)
    }
}

#[derive(serde::Serialize)]
struct BoxOutput<'a> {
    delta_p: f64,
    delta_x: f64,
    boundary_term: f64,
    report: &'a RelationReport,
}

#[derive(serde::Serialize)]
struct AuditOutput<'a> {
    measurement: &'a BiasReport,
    disturbance: &'a BiasReport,
    certificate: &'a InconsistencyCertificate,
    relations: &'a SuiteReport,
}

fn audit(
    model: &MeasurementModel,
    a: &ComplexOperator,
    b: &ComplexOperator,
    psi: &PureState,
    tol: &Tolerances,
    format: Format,
) -> anyhow::Result<Outcome> {
    let measurement = check_unbiased_measurement(model, a, tol)?;
    let certificate = inconsistency_certificate(model, a, b, psi, tol)?;
    let disturbance = check_unbiased_disturbance(model, b, tol)?;
    let (_, relations) = evaluate_all(model, a, b, psi, &RelationId::MODEL_SUITE, tol)?;
    let violation = certificate.verdict == Verdict::Fault || relations.universal_violations().next().is_some();
    let csv = || {
        let mut out = String::from("item,value,status\n");
        for r in [&measurement, &disturbance] {
            let status = if r.is_unbiased { "unbiased" } else { "biased" };
            writeln!(out, "bias {},{},{}", r.observable_label, r.reduced_deviation_norm, status)?;
        }
        writeln!(out, "eps_A,{},", certificate.eps_a)?;
        writeln!(out, "commutator_AB,{},", certificate.commutator_expectation)?;
        let verdict = match certificate.verdict {
            Verdict::Consistent => "consistent",
            Verdict::Tradeoff => "tradeoff",
            Verdict::Fault => "fault",
        };
        writeln!(out, "certificate,,{verdict}")?;
        for r in &relations.reports {
            writeln!(out, "{} margin,{},{}", r.id.code(), r.margin, r.status)?;
        }
        for s in &relations.skipped {
            writeln!(out, "{},,skipped", s.id.code())?;
        }
        Ok(out)
    };
    let doc = AuditOutput {
        measurement: &measurement,
        disturbance: &disturbance,
        certificate: &certificate,
        relations: &relations,
    };
    Ok(Outcome {
        text: render(format, csv, || json(&doc))?,
        violation,
    })
}

fn render<C, J>(format: Format, csv: C, json: J) -> anyhow::Result<String>
where
    C: FnOnce() -> anyhow::Result<String>,
    J: FnOnce() -> anyhow::Result<String>,
{
    match format {
        Format::Csv => csv(),
        Format::Json => json(),
    }
}

fn json<T: serde::Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

impl Target {
    fn resolve(&self) -> anyhow::Result<(ComplexOperator, ComplexOperator, PureState)> {
        let (a, b, psi) = (observable(&self.a)?, observable(&self.b)?, state(&self.psi)?);
        if a.dim() != b.dim() || a.dim() != psi.dim() {
            bail!(QmeasError::DimensionMismatch {
                expected: a.dim(),
                found: if b.dim() != a.dim() { b.dim() } else { psi.dim() },
            });
        }
        Ok((a, b, psi))
    }
}

fn observable(spec: &str) -> anyhow::Result<ComplexOperator> {
    Ok(match spec {
        "sx" => sigma_x(),
        "sy" => sigma_y(),
        "sz" => sigma_z(),
        path => operator_from_json(&read(Path::new(path))?)?,
    })
}

fn state(spec: &str) -> anyhow::Result<PureState> {
    Ok(match spec {
        "+z" => PureState::plus_z(),
        "-z" => PureState::minus_z(),
        "+x" => PureState::plus_x(),
        "+y" => PureState::plus_y(),
        path => state_from_json(&read(Path::new(path))?)?,
    })
}
