use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use homdiff::constraints::{newton_solve, ratios_from_init, solve_designated_coefficients, solve_z_pivot};
use homdiff::harness::{ExampleCase, EXAMPLE_SEED};
use homdiff::io::{self as docs, ExactFormat};
use homdiff::{
    closed_form_state, enumerate_multi_indices, iterate_with_budget, random_solvable_instance, run_example,
    verify_instance_with_budget, ConstructionMode, Error, Regime, ScalarError, SizeBudget, SolvableInstance, SolveSpec,
    StateVector, Verdict, VerificationReport,
};

#[derive(Debug, Parser)]
#[command(
    name = "homdiff",
    version,
    about = "Explicitly solvable homogeneous polynomial difference equations"
)]
struct Cli {
    /// Arithmetic regime. Defaults to the regime of the input documents
    /// (exact when there are none); `float` converts exact inputs.
    #[arg(long, global = true)]
    regime: Option<Regime>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenerateMode {
    Coefficients,
    ZPivot,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the exponent vectors of N variables summing to M.
    Enumerate { n: usize, m: u32 },

    /// Write a seeded random solvable instance as JSON.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "coefficients")]
        mode: GenerateMode,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Solve the constraints of a system according to a solve spec and write
    /// the resulting instance.
    Solve {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Iterate a system from initial data and write the trajectory as CSV.
    Iterate {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        steps: u64,
        #[command(flatten)]
        csv: CsvArgs,
    },

    /// Evaluate the closed-form solution and write it as CSV.
    ClosedForm {
        #[arg(long)]
        init: PathBuf,
        /// `re` or `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        steps: u64,
        #[command(flatten)]
        csv: CsvArgs,
    },

    /// Compare iteration with the closed form for an instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 5)]
        horizon: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = SizeBudget::default().max_bits)]
        budget_bits: u64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },

    /// Build, solve and verify the two-variable degree-four demonstration.
    Example {
        #[arg(long, default_value_t = EXAMPLE_SEED)]
        seed: u64,
        /// Print both instances as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, clap::Args)]
struct CsvArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// Decimal places for exact values.
    #[arg(long, default_value_t = 12)]
    digits: usize,
    /// Write exact values as `p/q` instead of decimals.
    #[arg(long)]
    rational: bool,
    #[arg(long, default_value_t = SizeBudget::default().max_bits)]
    budget_bits: u64,
}

impl CsvArgs {
    fn format(&self) -> ExactFormat {
        if self.rational {
            ExactFormat::Rational
        } else {
            ExactFormat::Decimal { digits: self.digits }
        }
    }
}

enum Failure {
    Mismatch,
    Input(Error),
    Solver(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularJacobian { .. }
            | Error::NotConverged(_)
            | Error::ZeroMonomial { .. }
            | Error::ZeroPivotRatio { .. }
            | Error::Scalar(ScalarError::DivisionByZero)
            | Error::Scalar(ScalarError::Overflow { .. }) => Failure::Solver(e),
            other => Failure::Input(other),
        }
    }
}

/// Scalar errors outside a solve come from converting or parsing inputs.
impl From<ScalarError> for Failure {
    fn from(e: ScalarError) -> Self {
        Failure::Input(Error::Scalar(e))
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(Error::Io(e))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(Error::Document(format!("{}: {e}", path.display()))))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn emit_csv(args: &CsvArgs, states: &[StateVector]) -> Result<(), Failure> {
    let format = args.format();
    match &args.out {
        Some(path) => docs::write_trajectory_csv(fs::File::create(path)?, states, format)?,
        None => docs::write_trajectory_csv(io::stdout().lock(), states, format)?,
    }
    Ok(())
}

fn convert_instance(inst: SolvableInstance, regime: Option<Regime>) -> Result<SolvableInstance, Failure> {
    match (regime, inst.regime()) {
        (Some(Regime::Float), Regime::Exact) => Ok(inst.to_float()?),
        (Some(Regime::Exact), Regime::Float) => Err(Failure::Input(Error::Document(
            "a float instance cannot be verified in the exact regime".into(),
        ))),
        _ => Ok(inst),
    }
}

fn paint(text: &str, code: &str) -> String {
    if std::env::var_os("NO_COLOR").is_none() && io::stdout().is_terminal() {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn verdict_label(v: Verdict) -> String {
    match v {
        Verdict::ExactMatch => paint("exact-match", "32"),
        Verdict::WithinTolerance => paint("within-tolerance", "32"),
        Verdict::Mismatch => paint("mismatch", "31"),
        Verdict::Truncated => paint("truncated", "33"),
    }
}

fn print_report(report: &VerificationReport) {
    println!("verdict: {}", verdict_label(report.verdict));
    println!(
        "regime: {}  horizon: {}/{}  tol: {:e}",
        report.regime, report.horizon_achieved, report.horizon_requested, report.tol
    );
    if let Some(t) = report.truncation {
        println!("truncated at step {} ({:?})", t.step, t.reason);
    }
    if let Some(m) = report.first_mismatch {
        println!("first mismatch: step {}, component {}", m.step, m.component);
    }
    if report.degenerate {
        println!("degenerate: Z = 0");
    }
    println!("{:>5}  {:>12}  {:>12}", "step", "max_abs", "max_rel");
    for d in &report.steps {
        println!("{:>5}  {:>12.3e}  {:>12.3e}", d.step, d.max_abs, d.max_rel);
    }
}

fn report_exit(report: &VerificationReport) -> Result<(), Failure> {
    match report.verdict {
        Verdict::Mismatch => Err(Failure::Mismatch),
        _ => Ok(()),
    }
}

fn solve(system: &Path, spec: &Path, out: Option<&Path>, regime: Option<Regime>) -> Result<(), Failure> {
    let mut sys = docs::system_from_json(&read(system)?)?;
    if regime == Some(Regime::Float) {
        sys = sys.to_float()?;
    }
    let req = docs::solve_request_from_json(&read(spec)?, sys.regime())?;
    let need_init = || {
        req.init
            .clone()
            .ok_or_else(|| Failure::Input(Error::InvalidSolveSpec("init is required in this mode".into())))
    };
    let inst = match &req.spec {
        SolveSpec::Coefficients { designated } => {
            let z = req
                .z
                .clone()
                .ok_or_else(|| Failure::Input(Error::InvalidSolveSpec("Z is required in coefficients mode".into())))?;
            let init = need_init()?;
            let r = ratios_from_init(&init)?;
            let solved = solve_designated_coefficients(&sys, &z, &r, designated)?;
            SolvableInstance::certify(solved, init, z, ConstructionMode::Coefficients)?
        }
        SolveSpec::ZPivot {
            pivot_equation,
            designated,
        } => {
            let init = need_init()?;
            let r = ratios_from_init(&init)?;
            let (z, solved) = solve_z_pivot(&sys, &r, *pivot_equation, designated)?;
            SolvableInstance::certify(solved, init, z, ConstructionMode::ZPivot)?
        }
        SolveSpec::Newton {
            z,
            free_ratios,
            controls,
        } => {
            let sys = sys.to_float()?;
            let found = newton_solve(&sys, z, free_ratios, controls)?;
            eprintln!(
                "newton: converged in {} iterations, residual {:e}",
                found.iterations, found.residual_norm
            );
            SolvableInstance::certify(sys, found.ratios.to_state(), found.z, ConstructionMode::Newton)?
        }
    };
    emit(out, &docs::instance_to_json(&inst)?)
}

fn print_case(name: &str, case: &ExampleCase) {
    let inst = &case.instance;
    println!("[{name}]");
    for d in &case.solved {
        println!(
            "  solved c_{}{} = {}",
            d.equation,
            d.index,
            inst.system.coefficient_or_zero(d.equation, &d.index)
        );
    }
    println!("  Z = {}", inst.z);
    println!(
        "  z(0) = ({})",
        inst.z0.z.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
    );
    println!("  coefficients: {}", inst.system.len());
    println!("  max residual: {}", inst.certificate.max_residual);
    println!(
        "  verification: {} to horizon {}",
        verdict_label(case.report.verdict),
        case.report.horizon_achieved
    );
}

fn run(cli: Cli) -> Result<(), Failure> {
    let regime = cli.regime;
    match cli.command {
        Command::Enumerate { n, m } => {
            let mut text = String::new();
            for index in enumerate_multi_indices(n, m) {
                let row: Vec<String> = index.exponents().iter().map(ToString::to_string).collect();
                text.push_str(&row.join(" "));
                text.push('\n');
            }
            emit(None, &text)
        }
        Command::Generate {
            n,
            m,
            seed,
            mode,
            density,
            out,
        } => {
            let mode = match mode {
                GenerateMode::Coefficients => ConstructionMode::Coefficients,
                GenerateMode::ZPivot => ConstructionMode::ZPivot,
            };
            let inst = random_solvable_instance(n, m, seed, mode, density, regime.unwrap_or(Regime::Exact))
                .map_err(Failure::Input)?;
            emit(out.as_deref(), &docs::instance_to_json(&inst)?)
        }
        Command::Solve { system, spec, out } => solve(&system, &spec, out.as_deref(), regime),
        Command::Iterate {
            system,
            init,
            steps,
            csv,
        } => {
            let mut sys = docs::system_from_json(&read(&system)?)?;
            if regime == Some(Regime::Float) {
                sys = sys.to_float()?;
            }
            let z0 = docs::state_from_json(&read(&init)?, sys.regime())?;
            let traj = iterate_with_budget(
                &sys,
                &z0,
                steps,
                SizeBudget {
                    max_bits: csv.budget_bits,
                },
            )?;
            if let Some(t) = traj.truncation {
                eprintln!("trajectory truncated at step {} ({:?})", t.step, t.reason);
            }
            emit_csv(&csv, &traj.states)
        }
        Command::ClosedForm { init, z, m, steps, csv } => {
            let regime = regime.unwrap_or(Regime::Exact);
            let z0 = docs::state_from_json(&read(&init)?, regime)?;
            let z = docs::parse_scalar_arg(&z, regime)?;
            if m < 2 {
                return Err(Failure::Input(Error::Document(format!(
                    "degree must be >= 2 (got {m})"
                ))));
            }
            let mut states = Vec::new();
            for s in 0..=steps {
                match closed_form_state(&z0, &z, m, s) {
                    Ok(state) if state.bit_size() > csv.budget_bits => {
                        eprintln!("closed form truncated at step {s} (size budget)");
                        break;
                    }
                    Ok(state) => states.push(state),
                    Err(Error::Scalar(ScalarError::Overflow { .. })) => {
                        eprintln!("closed form truncated at step {s} (overflow)");
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            emit_csv(&csv, &states)
        }
        Command::Verify {
            instance,
            horizon,
            tol,
            budget_bits,
            json,
        } => {
            let inst = convert_instance(docs::instance_from_json(&read(&instance)?)?, regime)?;
            let report = verify_instance_with_budget(&inst, horizon, tol, SizeBudget { max_bits: budget_bits })?;
            if json {
                emit(None, &docs::report_to_json(&report)?)?;
            } else {
                print_report(&report);
            }
            report_exit(&report)
        }
        Command::Example { seed, json } => {
            let run = run_example(seed)?;
            if json {
                let both = serde_json::json!({
                    "coefficients": docs::InstanceDoc::from_instance(&run.coefficients.instance),
                    "z_pivot": docs::InstanceDoc::from_instance(&run.z_pivot.instance),
                });
                emit(None, &serde_json::to_string_pretty(&both).map_err(Error::from)?)?;
            } else {
                println!("N = 2, M = 4: z_n(s) = z_n(0) z_2(0)^(4^s - 1) Z^((4^s - 1)/3)");
                print_case("coefficients mode", &run.coefficients);
                print_case("z-pivot mode", &run.z_pivot);
            }
            report_exit(&run.coefficients.report)?;
            report_exit(&run.z_pivot.report)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver error: {e}");
            ExitCode::from(3)
        }
    }
}
