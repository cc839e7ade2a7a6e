//! Command-line front end: analyze a system's security index, simulate
//! (optionally attacked) trajectories, and run detection or correction on
//! received data.
//!
//! Exit codes are part of the contract: 0 success or clean data, 1 attack
//! detected, 2 usage or data errors, 3 unobservable system, 4 method
//! disagreement, 5 no correctable support, 6 ambiguous correction.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use secidx::io::{
    attack_metadata_to_json, correction_result_to_json, detection_report_to_json, format_complex,
    parse_complex, read_poly_matrix, read_system, read_trajectory, trajectory_to_csv, write_attack,
    write_trajectory, AttackMetadata,
};
use secidx::{
    correct, detect_with_check_matrix, detect_with_kernel_rep, inject, is_maximally_secure,
    random_attack, random_attack_prefix, security_index_eigen, security_index_from_kernel_rep,
    security_index_subset, simulate, spark, survey_methods, CVector, CheckMatrix, CodingMatrix,
    EigenStructure, Error, SensorSet, ToleranceConfig, Trajectory, DEFAULT_SPARK_BUDGET,
};

#[derive(Parser)]
#[command(
    name = "secidx",
    version,
    about = "Security-index analysis, simulation, detection and correction \
             for sensor attacks on discrete-time linear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Numerical tolerances shared by every subcommand.
#[derive(Args)]
struct TolArgs {
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, default_value_t = 1e-10)]
    rank_tol: f64,
    /// Relative residual below which a least-squares fit counts as consistent.
    #[arg(long, default_value_t = 1e-8)]
    residual_tol: f64,
    /// Relative syndrome threshold separating clean from attacked data.
    #[arg(long, default_value_t = 1e-9)]
    detect_tol: f64,
}

impl TolArgs {
    fn build(&self) -> Result<ToleranceConfig, Failure> {
        ToleranceConfig::new(self.rank_tol, self.residual_tol, self.detect_tol)
            .map_err(|e| Failure::Usage(e.to_string()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Largest sensor subset whose stacked coding blocks keep a kernel.
    Subset,
    /// Smallest dependent set of check-matrix column blocks.
    Spark,
    /// Sparsest sensor footprint over the eigenspaces of the state matrix.
    Eigen,
    /// Every applicable method, cross-checked.
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Rule {
    /// Check-matrix syndrome over sliding windows.
    #[value(name = "H")]
    H,
    /// Kernel-representation residual (requires --R).
    #[value(name = "R")]
    R,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the security index and report each method's value.
    Analyze {
        /// System description JSON: {"A": [[..]], "C": [[..]]}.
        system: PathBuf,
        /// Which computation to run.
        #[arg(long, value_enum, default_value_t = Method::All)]
        method: Method,
        /// Kernel-representation JSON to cross-check against.
        #[arg(long = "R", value_name = "FILE")]
        rep: Option<PathBuf>,
        /// Skip the spark cross-check above this many sensors.
        #[arg(long, default_value_t = DEFAULT_SPARK_BUDGET)]
        spark_budget: usize,
        /// Emit a machine-readable JSON report instead of text.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Simulate a trajectory, optionally with a seeded random attack.
    Simulate {
        /// System description JSON.
        system: PathBuf,
        /// Initial state as comma-separated scalars (e.g. "1,-2" or "1+2j,0").
        #[arg(long)]
        x0: String,
        /// Number of time samples.
        #[arg(long = "T")]
        horizon: usize,
        /// Number of sensors to corrupt (0 = no attack).
        #[arg(long, default_value_t = 0)]
        attack_weight: usize,
        /// Seed for the attack draw; echoed so runs can be reproduced.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scale of the Gaussian attack entries.
        #[arg(long, default_value_t = 1.0)]
        magnitude: f64,
        /// Confine corruptions to the first this-many samples.
        #[arg(long)]
        active_prefix: Option<usize>,
        /// Write the clean trajectory CSV here (stdout when no attack).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the attacked trajectory CSV here (stdout by default).
        #[arg(long)]
        attacked_out: Option<PathBuf>,
        /// Write the attack signal CSV here.
        #[arg(long)]
        attack_out: Option<PathBuf>,
        /// Write the attack metadata sidecar JSON here.
        #[arg(long)]
        meta_out: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Check received data for attacks; exits 1 when one is detected.
    Detect {
        /// System description JSON.
        system: PathBuf,
        /// Received trajectory CSV.
        trajectory: PathBuf,
        /// Detection rule: check-matrix syndrome or kernel representation.
        #[arg(long, value_enum, default_value_t = Rule::H)]
        rule: Rule,
        /// Kernel-representation JSON (required with --rule R).
        #[arg(long = "R", value_name = "FILE")]
        rep: Option<PathBuf>,
        /// Emit the detection report as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Identify attacked sensors and recover the clean trajectory.
    Correct {
        /// System description JSON.
        system: PathBuf,
        /// Received trajectory CSV.
        trajectory: PathBuf,
        /// Write the corrected trajectory CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit the correction report as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        tol: TolArgs,
    },
}

/// A failed run: either a usage problem detected here or a library error.
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Lib(e) => match e {
                Error::NotObservable { .. } => 3,
                Error::MethodDisagreement { .. } => 4,
                Error::NoConsistentSupport { .. } => 5,
                Error::AmbiguousCorrection { .. } => 6,
                _ => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.code()
        }
    };
    std::process::exit(code.into());
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Analyze {
            system,
            method,
            rep,
            spark_budget,
            json,
            tol,
        } => cmd_analyze(
            &system,
            method,
            rep.as_deref(),
            spark_budget,
            json,
            &tol.build()?,
        ),
        Command::Simulate {
            system,
            x0,
            horizon,
            attack_weight,
            seed,
            magnitude,
            active_prefix,
            out,
            attacked_out,
            attack_out,
            meta_out,
            tol,
        } => {
            let files = SimulateOutputs {
                out,
                attacked_out,
                attack_out,
                meta_out,
            };
            let attack = AttackArgs {
                weight: attack_weight,
                seed,
                magnitude,
                active_prefix,
            };
            cmd_simulate(&system, &x0, horizon, &attack, &files, &tol.build()?)
        }
        Command::Detect {
            system,
            trajectory,
            rule,
            rep,
            json,
            tol,
        } => cmd_detect(
            &system,
            &trajectory,
            rule,
            rep.as_deref(),
            json,
            &tol.build()?,
        ),
        Command::Correct {
            system,
            trajectory,
            out,
            json,
            tol,
        } => cmd_correct(&system, &trajectory, out.as_deref(), json, &tol.build()?),
    }
}

fn cmd_analyze(
    system: &Path,
    method: Method,
    rep: Option<&Path>,
    spark_budget: usize,
    json: bool,
    tol: &ToleranceConfig,
) -> Result<u8, Failure> {
    let sys = read_system(system, tol)?;
    let cm = CodingMatrix::build(&sys);
    let sensors = sys.sensor_count();

    let mut subset_report = None;
    let mut spark_value = None;
    let mut eigen_report = None;
    let delta = match method {
        Method::All => {
            let survey = survey_methods(&sys, tol, spark_budget);
            let delta = survey.consensus()?;
            subset_report = Some(survey.subset);
            spark_value = survey.spark;
            eigen_report = survey.eigen;
            delta
        }
        Method::Subset => {
            let report = security_index_subset(&cm, tol);
            let delta = report.delta;
            subset_report = Some(report);
            delta
        }
        Method::Spark => {
            if sensors > spark_budget {
                return Err(Failure::Usage(format!(
                    "sensor count {sensors} exceeds the spark budget {spark_budget}; \
                     raise --spark-budget"
                )));
            }
            let h = CheckMatrix::build(&cm, tol);
            let value = spark(&h, tol);
            spark_value = Some(value);
            value
        }
        Method::Eigen => {
            let structure = EigenStructure::compute(&sys, tol)?;
            let report = security_index_eigen(&sys, &structure, tol)?;
            let delta = report.delta;
            eigen_report = Some(report);
            delta
        }
    };

    let rep_delta = match rep {
        Some(path) => {
            let r = read_poly_matrix(path)?;
            Some(security_index_from_kernel_rep(&r, tol)?)
        }
        None => None,
    };
    if let Some(rep_delta) = rep_delta {
        if rep_delta != delta {
            eprintln!(
                "error: kernel representation yields delta = {rep_delta}, \
                 direct methods yield delta = {delta}"
            );
            return Ok(4);
        }
    }

    let maximal = is_maximally_secure(&cm, tol);
    let witness = subset_report
        .as_ref()
        .or(eigen_report.as_ref())
        .map(|r| &r.witness_support);

    if json {
        // serde_json maps iterate in key order, so the output is byte-stable.
        let mut methods = serde_json::Map::new();
        if let Some(report) = &subset_report {
            methods.insert("subset".into(), report.delta.into());
        }
        if let Some(value) = spark_value {
            methods.insert("spark".into(), value.into());
        }
        if let Some(report) = &eigen_report {
            methods.insert("eigen".into(), report.delta.into());
        }
        if let Some(value) = rep_delta {
            methods.insert("kernel_rep".into(), value.into());
        }
        let mut root = serde_json::Map::new();
        root.insert("delta".into(), delta.into());
        root.insert("maximally_secure".into(), maximal.into());
        root.insert("methods".into(), methods.into());
        root.insert("sensors".into(), sensors.into());
        root.insert("state_dim".into(), sys.state_dim().into());
        if let Some(support) = witness {
            let support: Vec<usize> = support.iter().copied().collect();
            root.insert("witness_support".into(), support.into());
        }
        println!("{}", serde_json::Value::Object(root));
    } else {
        if maximal {
            println!("delta = {delta}; maximally secure: yes (N = {sensors})");
        } else {
            println!("delta = {delta}; maximally secure: no (delta < N = {sensors})");
        }
        if let Some(report) = &subset_report {
            println!(
                "subset search: delta = {}, witness support {}",
                report.delta,
                format_sensor_set(&report.witness_support)
            );
        }
        match (method, spark_value) {
            (_, Some(value)) => println!("spark: delta = {value}"),
            (Method::All, None) => {
                println!("spark: skipped ({sensors} sensors exceed budget {spark_budget})");
            }
            _ => {}
        }
        if let Some(report) = &eigen_report {
            println!(
                "eigenspace search: delta = {}, witness support {}",
                report.delta,
                format_sensor_set(&report.witness_support)
            );
        } else if method == Method::All {
            println!("eigenspace search: not applicable (state matrix not diagonalizable)");
        }
        if let Some(value) = rep_delta {
            println!("kernel representation: delta = {value}");
        }
    }
    Ok(0)
}

struct AttackArgs {
    weight: usize,
    seed: u64,
    magnitude: f64,
    active_prefix: Option<usize>,
}

struct SimulateOutputs {
    out: Option<PathBuf>,
    attacked_out: Option<PathBuf>,
    attack_out: Option<PathBuf>,
    meta_out: Option<PathBuf>,
}

fn cmd_simulate(
    system: &Path,
    x0: &str,
    horizon: usize,
    attack: &AttackArgs,
    files: &SimulateOutputs,
    tol: &ToleranceConfig,
) -> Result<u8, Failure> {
    if horizon == 0 {
        return Err(Failure::Usage("--T must be at least 1".into()));
    }
    let sys = read_system(system, tol)?;
    let x0 = parse_state(x0, sys.state_dim())?;
    let clean = simulate(&sys, &x0, horizon);

    if attack.weight == 0 {
        if files.attacked_out.is_some() || files.attack_out.is_some() || files.meta_out.is_some() {
            return Err(Failure::Usage(
                "attack output flags need --attack-weight >= 1".into(),
            ));
        }
        deliver_trajectory(&clean, files.out.as_deref())?;
        return Ok(0);
    }

    let signal = match attack.active_prefix {
        Some(prefix) => random_attack_prefix(
            sys.sensor_count(),
            horizon,
            attack.weight,
            attack.seed,
            attack.magnitude,
            prefix,
        )?,
        None => random_attack(
            sys.sensor_count(),
            horizon,
            attack.weight,
            attack.seed,
            attack.magnitude,
        )?,
    };
    eprintln!(
        "attack seed: {}, support: {}, magnitude: {}",
        attack.seed,
        format_sensor_set(signal.support()),
        attack.magnitude
    );
    let attacked = inject(&clean, &signal)?;
    if let Some(path) = &files.out {
        write_trajectory(path, &clean)?;
    }
    deliver_trajectory(&attacked, files.attacked_out.as_deref())?;
    if let Some(path) = &files.attack_out {
        write_attack(path, &signal)?;
    }
    if let Some(path) = &files.meta_out {
        let meta = AttackMetadata {
            support: signal.support().iter().copied().collect(),
            weight: signal.weight(),
            seed: attack.seed,
            magnitude: attack.magnitude,
            horizon,
            active_prefix: attack.active_prefix.map(|p| p.min(horizon)),
        };
        fs::write(path, attack_metadata_to_json(&meta)).map_err(Error::from)?;
    }
    Ok(0)
}

fn cmd_detect(
    system: &Path,
    trajectory: &Path,
    rule: Rule,
    rep: Option<&Path>,
    json: bool,
    tol: &ToleranceConfig,
) -> Result<u8, Failure> {
    let sys = read_system(system, tol)?;
    let traj = read_trajectory(trajectory)?;
    let report = match rule {
        Rule::H => detect_with_check_matrix(&sys, &traj, tol)?,
        Rule::R => {
            let path = rep.ok_or_else(|| Failure::Usage("--rule R requires --R FILE".into()))?;
            let r = read_poly_matrix(path)?;
            if r.cols() != sys.sensor_count() {
                return Err(Failure::Usage(format!(
                    "kernel representation has {} columns but the system has {} sensors",
                    r.cols(),
                    sys.sensor_count()
                )));
            }
            detect_with_kernel_rep(&r, &traj, tol)?
        }
    };
    if json {
        println!("{}", detection_report_to_json(&report));
    } else if report.attacked {
        println!(
            "attack detected (max syndrome {:.3e}, first window {})",
            report.max_syndrome_norm,
            report.first_flagged_window.unwrap_or(0)
        );
    } else {
        println!("clean (max syndrome {:.3e})", report.max_syndrome_norm);
    }
    Ok(report.attacked.into())
}

fn cmd_correct(
    system: &Path,
    trajectory: &Path,
    out: Option<&Path>,
    json: bool,
    tol: &ToleranceConfig,
) -> Result<u8, Failure> {
    let sys = read_system(system, tol)?;
    let traj = read_trajectory(trajectory)?;
    let result = correct(&sys, &traj, tol)?;
    if let Some(path) = out {
        write_trajectory(path, &result.corrected)?;
    }
    if json {
        println!("{}", correction_result_to_json(&result));
    } else {
        println!(
            "attack support: {}",
            format_sensor_set(&result.attack_support)
        );
        println!("x0 estimate: {}", format_state(&result.x0_estimate));
        println!("residual: {:.3e}", result.residual);
        println!("supports examined: {}", result.search_size);
    }
    Ok(0)
}

/// Parses `--x0` as comma-separated complex scalars.
fn parse_state(text: &str, state_dim: usize) -> Result<CVector, Failure> {
    let entries = text
        .split(',')
        .map(parse_complex)
        .collect::<secidx::Result<Vec<_>>>()?;
    if entries.len() != state_dim {
        return Err(Failure::Usage(format!(
            "--x0 has {} entries but the state dimension is {}",
            entries.len(),
            state_dim
        )));
    }
    Ok(CVector::from_vec(entries))
}

/// Writes a trajectory CSV to a file, or to stdout when no path is given.
fn deliver_trajectory(traj: &Trajectory, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => write_trajectory(p, traj).map_err(Failure::from),
        None => {
            print!("{}", trajectory_to_csv(traj));
            Ok(())
        }
    }
}

fn format_sensor_set(set: &SensorSet) -> String {
    let inner = set
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ");
    format!("{{{inner}}}")
}

fn format_state(x: &CVector) -> String {
    let inner = x
        .iter()
        .map(|&z| format_complex(z))
        .collect::<Vec<_>>()
        .join(", ");
    format!("[{inner}]")
}
