//! `phcbi` command line.
//!
//! Exit codes: 0 success, 1 input error, 2 oracle mismatch, 3 divergence.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};

use crate::casimir::{build_controller, obstacle_check, solve_casimir, CasimirSolution};
use crate::error::PhError;
use crate::ph_core::model::{load_system, save_system};
use crate::ph_core::numerics::{sup_norm_vec, SYM_TOL_FACTOR};
use crate::ph_core::{output, vector_field, LtiPhSystem, QuadraticHamiltonian};
use crate::pipeline::verify;
use crate::report::{OracleSection, Report, SimulationSection};
use crate::rlc::{feedforward_case, output_feedback_case, RlcCase, RlcParams};
use crate::sim::{simulate, simulate_closed_loop, ClosedLoop, SimConfig, Trajectory};

/// Relative tolerance for closed-form oracle diffs.
pub const ORACLE_TOL: f64 = 1e-10;
/// Absolute tolerance on the simulated final state of the feedforward demo.
pub const CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    InputError = 1,
    OracleMismatch = 2,
    Diverged = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(name = "phcbi", version, about = "Casimir-based control by interconnection for linear port-Hamiltonian systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a built-in RLC benchmark and diff against closed forms.
    Demo(DemoArgs),
    /// Solve the Casimir equations and classify the dissipation obstacle.
    Synthesize(ModelArgs),
    /// Synthesize, then run the shaping and stability checks.
    Verify(ModelArgs),
    /// Simulate a closed loop (or an open-loop model) and audit conservation.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    /// Feedforward recovery: Gc = -u*, Hc(ξ) = ξ.
    RlcFf,
    /// Output feedback: Hc(ξ) = ½a1ξ² + a2ξ.
    RlcOf,
}

#[derive(Debug, Clone, Args)]
pub struct RlcArgs {
    #[arg(long = "L", default_value_t = 1.0)]
    pub l: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long = "r", default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub ustar: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ControllerArgs {
    /// Controller port gain, rows separated by ';' (e.g. "1" or "1,0;0,2").
    #[arg(long, allow_hyphen_values = true)]
    pub gc: Option<String>,
    /// Curvature of Hc (n_c x n_c).
    #[arg(long, allow_hyphen_values = true)]
    pub a1: Option<String>,
    /// Linear term of Hc (length n_c).
    #[arg(long, allow_hyphen_values = true)]
    pub a2: Option<String>,
    /// Casimir level; defaults to ξ0 - Kᵀx0, else 0.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi0: Option<String>,
    /// Target Hessian for the IDA path (defaults to the plant's Q).
    #[arg(long = "W", allow_hyphen_values = true)]
    pub w: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = crate::sim::DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = crate::sim::DEFAULT_T_FINAL)]
    pub tfinal: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[arg(value_enum)]
    pub name: DemoName,
    #[command(flatten)]
    pub rlc: RlcArgs,
    #[command(flatten)]
    pub ctrl: ControllerArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub ctrl: ControllerArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, conflicts_with = "demo", required_unless_present = "demo")]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub demo: Option<DemoName>,
    #[command(flatten)]
    pub rlc: RlcArgs,
    #[command(flatten)]
    pub ctrl: ControllerArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Constant input for open-loop model runs.
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Diverged(String),
}

impl From<PhError> for Failure {
    fn from(e: PhError) -> Self {
        match e {
            PhError::NonFinite { .. } => Failure::Diverged(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn parse_number(tok: &str, what: &str) -> CliResult<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Failure::Input(format!("{what}: cannot parse '{tok}' as a number")))?;
    if !v.is_finite() {
        return Err(Failure::Input(format!("{what}: non-finite value '{tok}'")));
    }
    Ok(v)
}

/// Parses `"a,b;c,d"` (rows separated by `;`) into a matrix.
pub fn parse_matrix(text: &str, what: &str) -> std::result::Result<DMatrix<f64>, String> {
    parse_matrix_inner(text, what).map_err(|f| match f {
        Failure::Input(m) | Failure::Diverged(m) => m,
    })
}

fn parse_matrix_inner(text: &str, what: &str) -> CliResult<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| parse_number(t, what))
                .collect::<CliResult<Vec<f64>>>()
        })
        .collect::<CliResult<_>>()?;
    let ncols = rows.first().map_or(0, Vec::len);
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Failure::Input(format!("{what}: ragged or empty matrix '{text}'")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn parse_vector(text: &str, what: &str) -> CliResult<DVector<f64>> {
    let vals = text
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| parse_number(t, what))
        .collect::<CliResult<Vec<f64>>>()?;
    Ok(DVector::from_vec(vals))
}

fn expect_len(v: &DVector<f64>, n: usize, what: &str) -> CliResult<()> {
    if v.len() != n {
        return Err(Failure::Input(format!("{what}: expected {n} entries, got {}", v.len())));
    }
    Ok(())
}

fn check_sim(sim: &SimArgs) -> CliResult<SimConfig> {
    if !(sim.dt > 0.0 && sim.dt.is_finite() && sim.tfinal.is_finite() && sim.tfinal >= sim.dt) {
        return Err(Failure::Input(format!(
            "need dt > 0 and tfinal >= dt (got dt = {}, tfinal = {})",
            sim.dt, sim.tfinal
        )));
    }
    Ok(SimConfig::new(sim.dt, sim.tfinal))
}

/// Resolved initial condition on the Casimir leaf.
struct Level {
    kappa: DVector<f64>,
    x0: DVector<f64>,
    xi0: DVector<f64>,
}

fn resolve_level(k: &DMatrix<f64>, ctrl: &ControllerArgs) -> CliResult<Level> {
    let (n, nc) = k.shape();
    let x0 = match &ctrl.x0 {
        Some(s) => parse_vector(s, "x0")?,
        None => DVector::zeros(n),
    };
    expect_len(&x0, n, "x0")?;
    let s0 = k.transpose() * &x0;
    let kappa = ctrl.kappa.as_deref().map(|s| parse_vector(s, "kappa")).transpose()?;
    let xi0 = ctrl.xi0.as_deref().map(|s| parse_vector(s, "xi0")).transpose()?;
    if let Some(kp) = &kappa {
        expect_len(kp, nc, "kappa")?;
    }
    if let Some(x) = &xi0 {
        expect_len(x, nc, "xi0")?;
    }
    Ok(match (kappa, xi0) {
        (Some(kappa), Some(xi0)) => {
            let gap = sup_norm_vec(&(&xi0 - &s0 - &kappa));
            if gap > SYM_TOL_FACTOR * (1.0 + sup_norm_vec(&xi0)) {
                return Err(Failure::Input(format!(
                    "kappa and xi0 disagree: xi0 - Kᵀx0 - kappa = {gap:e}"
                )));
            }
            Level { kappa, x0, xi0 }
        }
        (Some(kappa), None) => Level {
            xi0: &s0 + &kappa,
            kappa,
            x0,
        },
        (None, Some(xi0)) => Level {
            kappa: &xi0 - &s0,
            x0,
            xi0,
        },
        (None, None) => Level {
            kappa: DVector::zeros(nc),
            xi0: s0,
            x0,
        },
    })
}

fn controller_hamiltonian(ctrl: &ControllerArgs, nc: usize) -> CliResult<QuadraticHamiltonian> {
    let a1 = match &ctrl.a1 {
        Some(s) => parse_matrix_inner(s, "a1")?,
        None => DMatrix::zeros(nc, nc),
    };
    let a2 = match &ctrl.a2 {
        Some(s) => parse_vector(s, "a2")?,
        None => DVector::zeros(nc),
    };
    if a1.shape() != (nc, nc) {
        return Err(Failure::Input(format!("a1: expected {nc}x{nc}, got {}x{}", a1.nrows(), a1.ncols())));
    }
    expect_len(&a2, nc, "a2")?;
    Ok(QuadraticHamiltonian::new(a1, a2, 0.0)?)
}

fn write_outputs(out: &Path, report: &Report, traj: Option<&Trajectory>) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;
    fs::write(out.join("report.json"), report.to_json())
        .map_err(|e| Failure::Input(format!("report.json: {e}")))?;
    if let Some(traj) = traj {
        let file = fs::File::create(out.join("trajectory.csv"))
            .map_err(|e| Failure::Input(format!("trajectory.csv: {e}")))?;
        traj.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Failure::Input(format!("trajectory.csv: {e}")))?;
    }
    Ok(())
}

/// Loads a model and solves its Casimir equations for the given `--gc`.
fn synthesize_from(args: &ModelArgs) -> CliResult<(LtiPhSystem, CasimirSolution, Level)> {
    let plant = load_system(&args.model)?;
    let gc_text = args
        .ctrl
        .gc
        .as_deref()
        .ok_or_else(|| Failure::Input("--gc is required".into()))?;
    let gc = parse_matrix_inner(gc_text, "gc")?;
    if gc.ncols() != plant.m() {
        return Err(Failure::Input(format!(
            "gc: expected n_c x {} (one column per plant port), got {}x{}",
            plant.m(),
            gc.nrows(),
            gc.ncols()
        )));
    }
    let sol = solve_casimir(&plant, &gc, &DVector::zeros(gc.nrows()))?;
    let level = resolve_level(&sol.k, &args.ctrl)?;
    let sol = CasimirSolution {
        kappa: level.kappa.clone(),
        ..sol
    };
    Ok((plant, sol, level))
}

fn run_synthesize(args: &ModelArgs) -> CliResult<ExitStatus> {
    let (plant, sol, _) = synthesize_from(args)?;
    let mut report = Report::new("synthesize");
    report.with_casimir(&sol, obstacle_check(&plant, &sol));
    if !sol.exact {
        report.notes.push(format!(
            "exact: false (least-squares fallback: {}, residual {:.3e})",
            sol.least_squares, sol.residual_pde1
        ));
    }
    write_outputs(&args.out, &report, None)?;
    Ok(ExitStatus::Success)
}

fn run_verify(args: &ModelArgs) -> CliResult<ExitStatus> {
    let (plant, sol, _) = synthesize_from(args)?;
    let hc = controller_hamiltonian(&args.ctrl, sol.nc())?;
    let w = args.ctrl.w.as_deref().map(|s| parse_matrix_inner(s, "W")).transpose()?;
    let ctrl = build_controller(&sol, &hc)?;
    let ver = verify(&plant, &sol, &hc, w.as_ref())?;
    let mut report = Report::new("verify");
    report.with_casimir(&sol, ver.obstacle.clone());
    report.with_controller(&ctrl);
    report.with_verification(&ver);
    write_outputs(&args.out, &report, None)?;
    Ok(ExitStatus::Success)
}

fn demo_case(name: DemoName, rlc: &RlcArgs, ctrl: &ControllerArgs) -> CliResult<RlcCase> {
    let p = RlcParams::new(rlc.l, rlc.c, rlc.r, rlc.ustar);
    let scalar = |s: &Option<String>, what: &str, default: f64| -> CliResult<f64> {
        match s {
            Some(t) => parse_number(t, what),
            None => Ok(default),
        }
    };
    let kappa = scalar(&ctrl.kappa, "kappa", 0.0)?;
    Ok(match name {
        DemoName::RlcFf => feedforward_case(&p, kappa)?,
        DemoName::RlcOf => {
            let a1 = scalar(&ctrl.a1, "a1", -1.0)?;
            let a2 = scalar(&ctrl.a2, "a2", -1.0)?;
            let gc = scalar(&ctrl.gc, "gc", 1.0)?;
            output_feedback_case(&p, a1, a2, gc, kappa)?
        }
    })
}

fn demo_label(name: DemoName) -> &'static str {
    match name {
        DemoName::RlcFf => "rlc-ff",
        DemoName::RlcOf => "rlc-of",
    }
}

fn simulate_case(case: &RlcCase, x0: &Option<String>, cfg: &SimConfig) -> CliResult<(ClosedLoop, Trajectory)> {
    let x0 = match x0 {
        Some(s) => parse_vector(s, "x0")?,
        None => DVector::zeros(2),
    };
    expect_len(&x0, 2, "x0")?;
    let xi0 = case.casimir.s(&x0) + &case.casimir.kappa;
    let cl = ClosedLoop::new(case.plant.clone(), case.controller.clone(), Some(case.casimir.clone()))?;
    let traj = simulate_closed_loop(&cl, &x0, &xi0, cfg)?;
    Ok((cl, traj))
}

fn run_demo(args: &DemoArgs) -> CliResult<ExitStatus> {
    if args.ctrl.xi0.is_some() {
        return Err(Failure::Input("demo: set --kappa instead of --xi0".into()));
    }
    let cfg = check_sim(&args.sim)?;
    let case = demo_case(args.name, &args.rlc, &args.ctrl)?;
    let label = demo_label(args.name);
    let ver = verify(&case.plant, &case.casimir, &case.hc, None)?;

    let mut report = Report::new(&format!("demo {label}"));
    report.with_casimir(&case.casimir, ver.obstacle.clone());
    report.with_controller(&case.controller);
    report.with_verification(&ver);

    let o = &case.oracle;
    let mut oracle = OracleSection::new(label, case.params, o.clone());
    oracle.check("K[0]", o.k_expected[0], case.casimir.k[(0, 0)], ORACLE_TOL);
    oracle.check("K[1]", o.k_expected[1], case.casimir.k[(1, 0)], ORACLE_TOL);
    oracle.check("Rc", o.rc_expected, case.casimir.rc[(0, 0)], ORACLE_TOL);
    oracle.check("Jc", 0.0, case.casimir.jc[(0, 0)], ORACLE_TOL);
    match &ver.shaped {
        Some(s) => {
            oracle.check("x_star[0]", o.x_star[0], s.x_bar[0], ORACLE_TOL);
            oracle.check("x_star[1]", o.x_star[1], s.x_bar[1], ORACLE_TOL);
            if let Some(xi) = &ver.xi_star {
                oracle.check("xi_star", o.xi_star, xi[0], ORACLE_TOL);
            }
            if let (Some(jd), Some(rd)) = (o.jd_expected, o.rd_expected) {
                for i in 0..2 {
                    for j in 0..2 {
                        oracle.check(&format!("Jd[{i}][{j}]"), jd[i][j], s.jd[(i, j)], ORACLE_TOL);
                        oracle.check(&format!("Rd[{i}][{j}]"), rd[i][j], s.rd[(i, j)], ORACLE_TOL);
                    }
                }
            }
        }
        None => {
            oracle.all_pass = false;
            report.notes.push("no shaped form produced; oracle diff incomplete".into());
        }
    }
    if args.name == DemoName::RlcFf {
        let xi = DVector::from_element(1, 0.0);
        let uc = DVector::from_element(1, 1.0);
        let u = case.params.u_star;
        let y = output(&case.controller, &xi)?[0];
        let rate = vector_field(&case.controller, &xi, &DVector::zeros(1))?[0];
        let slope = vector_field(&case.controller, &xi, &uc)?[0] - rate;
        oracle.check("y_c", -u, y, ORACLE_TOL);
        oracle.check("xi_dot_const", u * u / case.params.r, rate, ORACLE_TOL);
        oracle.check("xi_dot_gain", -u, slope, ORACLE_TOL);
    }

    let (cl, traj) = simulate_case(&case, &args.ctrl.x0, &cfg)?;
    let sim = SimulationSection::new(&traj, cfg.dt, cl.plant.r(), cl.controller.r(), true);
    if args.name == DemoName::RlcFf {
        let x = traj.final_x();
        let conv = |name: &str, expected: f64, actual: f64, oracle: &mut OracleSection| {
            let d = (actual - expected).abs();
            let pass = d <= CONVERGENCE_TOL;
            oracle.all_pass &= pass;
            oracle.checks.insert(
                name.into(),
                crate::report::OracleCheck {
                    expected,
                    actual,
                    abs_diff: d,
                    tolerance: CONVERGENCE_TOL,
                    pass,
                },
            );
        };
        conv("final_x[0]", o.x_star[0], x[0], &mut oracle);
        conv("final_x[1]", o.x_star[1], x[1], &mut oracle);
        conv("final_xi", o.xi_star, traj.final_xi()[0], &mut oracle);
    }
    report.simulation = Some(sim);
    let pass = oracle.all_pass;
    report.oracle = Some(oracle);

    write_outputs(&args.out, &report, Some(&traj))?;
    save_system(&case.plant, &args.out.join("model.json"))?;
    Ok(if pass {
        ExitStatus::Success
    } else {
        ExitStatus::OracleMismatch
    })
}

fn run_simulate(args: &SimulateArgs) -> CliResult<ExitStatus> {
    let cfg = check_sim(&args.sim)?;
    let mut report = Report::new("simulate");
    let traj = if let Some(name) = args.demo {
        let case = demo_case(name, &args.rlc, &args.ctrl)?;
        let (cl, traj) = simulate_case(&case, &args.ctrl.x0, &cfg)?;
        report.with_casimir(&case.casimir, obstacle_check(&case.plant, &case.casimir));
        report.simulation = Some(SimulationSection::new(&traj, cfg.dt, cl.plant.r(), cl.controller.r(), true));
        traj
    } else {
        let model = args.model.clone().expect("clap enforces --model or --demo");
        if args.ctrl.gc.is_some() {
            let margs = ModelArgs {
                model,
                ctrl: args.ctrl.clone(),
                out: args.out.clone(),
            };
            let (plant, sol, level) = synthesize_from(&margs)?;
            let hc = controller_hamiltonian(&args.ctrl, sol.nc())?;
            let ctrl = build_controller(&sol, &hc)?;
            report.with_casimir(&sol, obstacle_check(&plant, &sol));
            report.with_controller(&ctrl);
            let cl = ClosedLoop::new(plant, ctrl, Some(sol))?;
            let traj = simulate_closed_loop(&cl, &level.x0, &level.xi0, &cfg)?;
            report.simulation = Some(SimulationSection::new(&traj, cfg.dt, cl.plant.r(), cl.controller.r(), true));
            traj
        } else {
            let sys = load_system(&model)?;
            let x0 = match &args.ctrl.x0 {
                Some(s) => parse_vector(s, "x0")?,
                None => DVector::zeros(sys.n()),
            };
            expect_len(&x0, sys.n(), "x0")?;
            let input = match &args.u {
                Some(s) => {
                    let u = parse_vector(s, "u")?;
                    expect_len(&u, sys.m(), "u")?;
                    Some(u)
                }
                None => None,
            };
            if input.is_none() && sys.m() > 0 {
                report.notes.push("open-loop run with zero input".into());
            }
            let traj = simulate(&sys, &x0, &SimConfig { input, ..cfg.clone() })?;
            report.simulation = Some(SimulationSection::new(
                &traj,
                cfg.dt,
                sys.r(),
                &DMatrix::zeros(0, 0),
                false,
            ));
            traj
        }
    };
    write_outputs(&args.out, &report, Some(&traj))?;
    Ok(ExitStatus::Success)
}

/// Executes a parsed command line, printing errors to stderr.
pub fn run(cli: &Cli) -> ExitStatus {
    let result = match &cli.command {
        Command::Demo(a) => run_demo(a),
        Command::Synthesize(a) => run_synthesize(a),
        Command::Verify(a) => run_verify(a),
        Command::Simulate(a) => run_simulate(a),
    };
    match result {
        Ok(status) => {
            if status == ExitStatus::OracleMismatch {
                eprintln!("phcbi: oracle mismatch (see report.json)");
            }
            status
        }
        Err(Failure::Input(msg)) => {
            eprintln!("phcbi: {msg}");
            ExitStatus::InputError
        }
        Err(Failure::Diverged(msg)) => {
            eprintln!("phcbi: diverged: {msg}");
            ExitStatus::Diverged
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_parsing() {
        let m = parse_matrix("1,2;3,4", "m").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(parse_matrix("-1", "m").unwrap()[(0, 0)], -1.0);
        assert!(parse_matrix("1,2;3", "m").is_err());
        assert!(parse_matrix("1,x", "m").is_err());
        assert!(parse_matrix("inf", "m").is_err());
    }

    #[test]
    fn level_defaults() {
        let k = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        let mut ctrl = ControllerArgs {
            gc: None,
            a1: None,
            a2: None,
            kappa: None,
            x0: Some("2,5".into()),
            xi0: None,
            w: None,
        };
        let l = resolve_level(&k, &ctrl).unwrap();
        assert_eq!((l.kappa[0], l.xi0[0]), (0.0, 3.0));
        ctrl.xi0 = Some("4".into());
        let l = resolve_level(&k, &ctrl).unwrap();
        assert_eq!(l.kappa[0], 1.0);
        ctrl.kappa = Some("2".into());
        assert!(resolve_level(&k, &ctrl).is_err());
        ctrl.xi0 = None;
        assert_eq!(resolve_level(&k, &ctrl).unwrap().xi0[0], 5.0);
    }
}
