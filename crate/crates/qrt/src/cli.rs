//! Argument parsing and the command implementations behind the `qrt` binary.

use std::fmt::Write as _;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qrt_core::discrimination::verify_advantage_theorem;
use qrt_core::distillation::{bound_report, overhead_bound, solve_tradeoff, target_robustness, Mode, Program};
use qrt_core::free_sets::{FreeSetSpec, Threshold};
use qrt_core::monotones::{
    all_values, free_projective_robustness, generalized_robustness, projective_robustness, projective_robustness_affine,
    sandwich_bounds, standard_robustness, weight, ExtReal, MonotoneValue,
};
use qrt_core::protocols::{
    apply_map, build_conversion_map, build_distillation_map, convertibility_decision, verify_free, ConversionOutcome,
    MeasurePrepareMap, Verdict,
};
use qrt_core::states::maximally_mixed;
use qrt_core::{HermitianOperator, QuantumState};

use crate::config::{parse_grid, Format, RunConfig, SolverConfig};
use crate::error::{CliError, CliResult, EXIT_NUMERICAL, EXIT_OK};
use crate::figures::{run_figure, Figure};
use crate::spec::{parse_map, parse_state_copies, parse_theory, MapJson, OperatorJson};
use crate::table::{Cell, Metadata, Table};

#[derive(Debug, Parser)]
#[command(name = "qrt", version, about = "Resource-theory monotones, distillation bounds and figure sweeps")]
pub struct Cli {
    /// JSON run configuration; command-line flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<String>,
    #[arg(long, global = true)]
    pub tol_gap: Option<f64>,
    #[arg(long, global = true)]
    pub tol_feas: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Omitted: run the `command` field of the config file.
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a monotone of a state.
    Monotone(MonotoneArgs),
    /// Distillation error bounds for a state and target.
    Bound(BoundArgs),
    /// Solve one trade-off program.
    Tradeoff(TradeoffArgs),
    /// Sweep a figure, or a monotone over a one-parameter state family.
    Sweep(SweepArgs),
    /// Decide convertibility of one state into another.
    Decide(DecideArgs),
    /// Build, verify or apply measure-and-prepare maps.
    #[command(subcommand)]
    Protocol(ProtocolCommand),
    /// Check the discrimination advantage against Ω.
    Discriminate(DiscriminateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MonotoneKind {
    Omega,
    OmegaFree,
    OmegaAff,
    Robustness,
    StandardRobustness,
    Weight,
    All,
    Sandwich,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    General,
    Affine,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::General => Mode::General,
            ModeArg::Affine => Mode::Affine,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct StateArgs {
    /// State: factory spec (`isotropic:0.4,2`, `bell:2^2` for copies), inline JSON or @file.
    #[arg(long)]
    pub state: Option<String>,
    /// Theory: incoherent, real, ppt, ppt:da,db, cube, single:<state>, polytope:@file.
    #[arg(long)]
    pub theory: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TargetArgs {
    #[arg(long)]
    pub target: Option<String>,
    /// Theory of the output space; defaults to --theory.
    #[arg(long)]
    pub target_theory: Option<String>,
}

#[derive(Debug, Args)]
pub struct MonotoneArgs {
    pub kind: MonotoneKind,
    #[command(flatten)]
    pub input: StateArgs,
    /// Also print the optimal free operator and the dual witnesses.
    #[arg(long)]
    pub optimizers: bool,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub input: StateArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    /// Copies of the input state.
    #[arg(long)]
    pub copies: Option<usize>,
    /// Also bound the number of copies needed to reach this error.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProgramArg {
    Theta,
    HpEps,
    Hp,
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    pub program: ProgramArg,
    #[command(flatten)]
    pub input: StateArgs,
    /// Threshold: a positive number or `inf`. Without it, the target's robustness is used.
    #[arg(long)]
    pub t: Option<String>,
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::General)]
    pub mode: ModeArg,
    /// Also print the optimal effects W and Z.
    #[arg(long)]
    pub optimizers: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub figure: Option<Figure>,
    /// Allow the three-copy figure.
    #[arg(long)]
    pub slow: bool,
    /// State family with `{}` standing for the grid value, as in `isotropic:{},2`.
    #[arg(long)]
    pub family: Option<String>,
    /// Monotone evaluated along the family.
    #[arg(long, value_enum, default_value_t = MonotoneKind::Omega)]
    pub monotone: MonotoneKind,
    #[arg(long)]
    pub theory: Option<String>,
    /// Family grid: `a:b:n` or a comma-separated list.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub gamma_grid: Option<String>,
    #[arg(long)]
    pub p_grid: Option<String>,
    /// Zero all wall-clock fields so repeated runs are byte-identical.
    #[arg(long)]
    pub stable: bool,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    #[command(flatten)]
    pub input: StateArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::General)]
    pub mode: ModeArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    /// Θ_p-based distillation of the target at probability p.
    Distill,
    /// Exact conversion into the target.
    Convert,
}

#[derive(Debug, Subcommand)]
pub enum ProtocolCommand {
    /// Build a free map and print it as JSON.
    Build {
        #[arg(long, value_enum, default_value_t = MapKind::Distill)]
        kind: MapKind,
        #[command(flatten)]
        input: StateArgs,
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, value_enum, default_value_t = ModeArg::General)]
        mode: ModeArg,
        #[arg(long)]
        output: Option<String>,
    },
    /// Check that a map sends free states to free states.
    Verify {
        #[arg(long)]
        map: String,
        #[arg(long)]
        theory: String,
        #[arg(long)]
        target_theory: Option<String>,
    },
    /// Apply a map to a state.
    Apply {
        #[arg(long)]
        map: String,
        #[arg(long)]
        state: String,
    },
}

#[derive(Debug, Args)]
pub struct DiscriminateArgs {
    #[command(flatten)]
    pub input: StateArgs,
    /// Random instances compared against Ω.
    #[arg(long, default_value_t = 50)]
    pub random: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Text for stdout and the exit code of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { crate::error::EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match execute(cli) {
        Ok((code, stdout)) => Outcome { code, stdout, stderr: String::new() },
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn execute(cli: Cli) -> CliResult<(i32, String)> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.solver = SolverConfig {
        tol_gap: cli.tol_gap.unwrap_or(cfg.solver.tol_gap),
        tol_feas: cli.tol_feas.unwrap_or(cfg.solver.tol_feas),
        max_iter: cli.max_iter.unwrap_or(cfg.solver.max_iter),
    };
    let command = match cli.command {
        Some(c) => c,
        None => {
            let line = cfg
                .command
                .clone()
                .ok_or_else(|| CliError::Config("no command given and none in the config file".into()))?;
            let argv = std::iter::once("qrt").chain(line.split_whitespace());
            Cli::try_parse_from(argv)
                .map_err(|e| CliError::Config(format!("config command '{line}': {e}")))?
                .command
                .ok_or_else(|| CliError::Config(format!("config command '{line}' names no command")))?
        }
    };
    cfg.validate()?;
    cfg.solver.options().configure();
    match command {
        Command::Monotone(a) => cmd_monotone(&cfg, a),
        Command::Bound(a) => cmd_bound(&cfg, a),
        Command::Tradeoff(a) => cmd_tradeoff(&cfg, a),
        Command::Sweep(a) => cmd_sweep(cfg, a),
        Command::Decide(a) => cmd_decide(&cfg, a),
        Command::Protocol(a) => cmd_protocol(&cfg, a),
        Command::Discriminate(a) => cmd_discriminate(&cfg, a),
    }
}

/// Input state and its free set, from flags or the config file.
fn input(cfg: &RunConfig, a: &StateArgs) -> CliResult<(QuantumState, FreeSetSpec)> {
    let state = a.state.as_deref().map_or_else(|| cfg.require(&cfg.state, "state"), Ok)?;
    let theory = a.theory.as_deref().map_or_else(|| cfg.require(&cfg.theory, "theory"), Ok)?;
    let rho = parse_state_copies(state)?;
    let f = parse_theory(theory, &rho)?;
    Ok((rho, f))
}

fn target(cfg: &RunConfig, input: &StateArgs, a: &TargetArgs) -> CliResult<(QuantumState, FreeSetSpec)> {
    let spec = a.target.as_deref().map_or_else(|| cfg.require(&cfg.target, "target"), Ok)?;
    let theory = a
        .target_theory
        .as_deref()
        .or(cfg.target_theory.as_deref())
        .or(input.theory.as_deref())
        .or(cfg.theory.as_deref())
        .ok_or_else(|| CliError::Config("missing --target-theory".into()))?;
    let phi = parse_state_copies(spec)?;
    let f = parse_theory(theory, &phi)?;
    Ok((phi, f))
}

fn show(x: ExtReal) -> String {
    match x {
        ExtReal::Finite(v) => format!("{v:.10}"),
        ExtReal::Infinite => "infinite".into(),
    }
}

fn show_value(mv: &MonotoneValue) -> String {
    match (mv.value, &mv.certificate) {
        (ExtReal::Infinite, Some(_)) => "infinite (certified)".into(),
        (ExtReal::Infinite, None) => "infinite (exact)".into(),
        (v, _) => format!("{} (optimal)", show(v)),
    }
}

fn op_json(op: &HermitianOperator) -> String {
    serde_json::to_string(&OperatorJson::from_operator(op)).expect("operators serialize")
}

fn cmd_monotone(cfg: &RunConfig, a: MonotoneArgs) -> CliResult<(i32, String)> {
    let (rho, f) = input(cfg, &a.input)?;
    let rho = rho.op();
    let mut out = String::new();
    let single = |mv: MonotoneValue, out: &mut String| {
        let _ = writeln!(out, "{}", show_value(&mv));
        if a.optimizers {
            if let Some(s) = &mv.sigma_tilde {
                let _ = writeln!(out, "sigma_tilde = {}", op_json(s));
            }
            if let Some(d) = &mv.duals {
                let _ = writeln!(out, "dual_a = {}", op_json(&d.a));
                let _ = writeln!(out, "dual_b = {}", op_json(&d.b));
            }
            if let Some(c) = &mv.certificate {
                let _ = writeln!(out, "certificate_violation = {:e}", c.check.violation);
            }
        }
    };
    match a.kind {
        MonotoneKind::Omega => single(projective_robustness(rho, &f)?, &mut out),
        MonotoneKind::OmegaFree => single(free_projective_robustness(rho, &f)?, &mut out),
        MonotoneKind::OmegaAff => single(projective_robustness_affine(rho, &f)?, &mut out),
        MonotoneKind::Robustness => single(generalized_robustness(rho, &f)?, &mut out),
        MonotoneKind::StandardRobustness => single(standard_robustness(rho, &f)?, &mut out),
        MonotoneKind::Weight => single(weight(rho, &f)?, &mut out),
        MonotoneKind::All => {
            for (name, v) in all_values(rho, &f)? {
                let _ = writeln!(out, "{name} = {}", show(v));
            }
        }
        MonotoneKind::Sandwich => {
            let s = sandwich_bounds(rho, &f)?;
            for (name, v) in [
                ("robustness", s.robustness),
                ("weight", ExtReal::Finite(s.weight)),
                ("lower", s.lower),
                ("omega", s.omega),
                ("upper_robustness", s.upper_robustness),
                ("upper_eigenvalue", s.upper_eigenvalue),
                ("upper_weight", s.upper_weight),
            ] {
                let _ = writeln!(out, "{name} = {}", show(v));
            }
            let _ = writeln!(out, "ordered = {}", s.is_ordered(1e-6));
        }
    }
    Ok((EXIT_OK, out))
}

fn cmd_bound(cfg: &RunConfig, a: BoundArgs) -> CliResult<(i32, String)> {
    let (mut rho, mut f_in) = input(cfg, &a.input)?;
    if let Some(n) = a.copies.filter(|&n| n > 1) {
        rho = qrt_core::states::n_copies(&rho, n)?;
        let theory = a.input.theory.as_deref().or(cfg.theory.as_deref()).unwrap_or("ppt");
        f_in = parse_theory(theory, &rho)?;
    }
    let (phi, f_out) = target(cfg, &a.input, &a.target)?;
    let r = bound_report(rho.op(), &f_in, phi.op(), &f_out)?;
    let mut out = String::new();
    let _ = writeln!(out, "free_overlap = {:.10}", r.overlap);
    let _ = writeln!(out, "omega = {}", show(r.omega));
    let _ = writeln!(out, "error_lower_bound = {:.10}", r.lower_error);
    match r.achievable_error {
        Some(e) => {
            let _ = writeln!(out, "achievable_error = {e:.10}");
        }
        None => out.push_str("achievable_error = unavailable\n"),
    }
    let _ = writeln!(out, "exact = {}", r.exact);
    let _ = writeln!(out, "eigenvalue_bound = {:.10}", r.eigenvalue.eigenvalue_bound);
    let _ = writeln!(out, "intermediate_bound = {:.10}", r.eigenvalue.intermediate);
    if let Some(eps) = a.eps.or(cfg.eps) {
        let n = overhead_bound(rho.op(), &f_in, phi.op(), &f_out, eps)?;
        let _ = writeln!(out, "copies_needed_at_least = {}", show(n));
    }
    Ok((EXIT_OK, out))
}

fn parse_threshold(s: &str) -> CliResult<Threshold> {
    match s.trim() {
        "inf" | "infinity" => Ok(Threshold::Infinite),
        x => x
            .parse::<f64>()
            .map(Threshold::Finite)
            .map_err(|_| CliError::Config(format!("bad threshold '{s}'"))),
    }
}

fn cmd_tradeoff(cfg: &RunConfig, a: TradeoffArgs) -> CliResult<(i32, String)> {
    let (rho, f) = input(cfg, &a.input)?;
    let mode: Mode = a.mode.into();
    let t = match (&a.t, cfg.t) {
        (Some(s), _) => parse_threshold(s)?,
        (None, Some(x)) => Threshold::Finite(x),
        (None, None) => {
            let (phi, f_out) = target(cfg, &a.input, &a.target)?;
            match target_robustness(phi.op(), &f_out, mode)? {
                ExtReal::Finite(x) => Threshold::Finite(x),
                ExtReal::Infinite => Threshold::Infinite,
            }
        }
    };
    let affine = mode == Mode::Affine;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::Config(format!("missing --{name}")));
    let program = match a.program {
        ProgramArg::Hp if affine => Program::HpAff,
        ProgramArg::Hp => Program::Hp,
        ProgramArg::HpEps => {
            let e = need(a.eps.or(cfg.eps), "eps")?;
            if affine { Program::HpEpsAff(e) } else { Program::HpEps(e) }
        }
        ProgramArg::Theta => {
            let p = need(a.p.or(cfg.p), "p")?;
            if affine { Program::ThetaPAff(p) } else { Program::ThetaP(p) }
        }
    };
    let r = solve_tradeoff(rho.op(), &f, t, program)?;
    let mut out = String::new();
    let _ = writeln!(out, "program = {}", r.program.name());
    let _ = writeln!(out, "t = {}", match r.t {
        Threshold::Finite(x) => format!("{x:.10}"),
        Threshold::Infinite => "infinite".into(),
    });
    let _ = writeln!(out, "value = {:.10}", r.value);
    if matches!(program, Program::ThetaP(_) | Program::ThetaPAff(_)) {
        let _ = writeln!(out, "error = {:.10}", 1.0 - r.value);
    }
    let _ = writeln!(out, "ordering_violation = {:e}", r.ordering_violation());
    let _ = writeln!(out, "iterations = {}", r.iterations);
    if a.optimizers {
        let _ = writeln!(out, "W = {}", op_json(&r.w));
        let _ = writeln!(out, "Z = {}", op_json(&r.z));
    }
    Ok((EXIT_OK, out))
}

fn meta(name: &str, cfg: &RunConfig, wall: u128) -> Metadata {
    Metadata {
        version: env!("CARGO_PKG_VERSION"),
        name: name.to_string(),
        tolerances: cfg.solver,
        wall_time_ms: wall,
    }
}

fn emit(table: &Table, format: Format, meta: &Metadata, output: Option<&str>) -> CliResult<(i32, String)> {
    let text = table.render(format, meta)?;
    let code = if table.has_trouble() { EXIT_NUMERICAL } else { EXIT_OK };
    match output {
        Some(path) => {
            std::fs::write(path, &text)?;
            Ok((code, format!("wrote {} rows to {path}\n", table.rows.len())))
        }
        None => Ok((code, text)),
    }
}

fn monotone_value(kind: MonotoneKind, rho: &HermitianOperator, f: &FreeSetSpec) -> CliResult<ExtReal> {
    Ok(match kind {
        MonotoneKind::Omega | MonotoneKind::All | MonotoneKind::Sandwich => projective_robustness(rho, f)?.value,
        MonotoneKind::OmegaFree => free_projective_robustness(rho, f)?.value,
        MonotoneKind::OmegaAff => projective_robustness_affine(rho, f)?.value,
        MonotoneKind::Robustness => generalized_robustness(rho, f)?.value,
        MonotoneKind::StandardRobustness => standard_robustness(rho, f)?.value,
        MonotoneKind::Weight => ExtReal::Finite(weight(rho, f)?.finite().unwrap_or(0.0)),
    })
}

fn cmd_sweep(cfg: RunConfig, a: SweepArgs) -> CliResult<(i32, String)> {
    let format = a.format.unwrap_or(cfg.format);
    let threads = a.threads.or(cfg.threads);
    if threads == Some(0) {
        return Err(CliError::Config("threads must be positive".into()));
    }
    let output = a.output.as_deref().or(cfg.output.as_deref());
    let grid_or = |flag: &Option<String>, file: &Option<Vec<f64>>| -> CliResult<Option<Vec<f64>>> {
        match flag {
            Some(s) => Ok(Some(parse_grid(s)?)),
            None => Ok(file.clone()),
        }
    };
    let check = RunConfig {
        gamma_grid: grid_or(&a.gamma_grid, &cfg.gamma_grid)?,
        p_grid: grid_or(&a.p_grid, &cfg.p_grid)?,
        ..cfg.clone()
    };
    check.validate()?;
    let start = Instant::now();
    let wall = |stable: bool| if stable { 0 } else { start.elapsed().as_millis() };
    if let Some(fig) = a.figure {
        if fig.is_slow() && !a.slow {
            return Err(CliError::Config("figure 2c runs 64-dimensional solves; pass --slow to run it".into()));
        }
        let table = run_figure(fig, check.gamma_grid.as_deref(), check.p_grid.as_deref(), threads)?;
        let m = meta(&format!("figure {}", fig.name()), &cfg, wall(a.stable));
        return emit(&table, format, &m, output);
    }
    let family = a
        .family
        .as_deref()
        .ok_or_else(|| CliError::Config("sweep needs --figure or --family".into()))?;
    if !family.contains("{}") {
        return Err(CliError::Config("--family must contain {} for the grid value".into()));
    }
    let grid = parse_grid(a.grid.as_deref().ok_or_else(|| CliError::Config("missing --grid".into()))?)?;
    if grid.is_empty() {
        return Err(CliError::Config("grid is empty".into()));
    }
    let theory = a
        .theory
        .as_deref()
        .or(cfg.theory.as_deref())
        .ok_or_else(|| CliError::Config("missing --theory".into()))?;
    let mut table = Table::new(&["x", "value", "status", "wall_ms"]);
    for &x in &grid {
        let rho = parse_state_copies(&family.replace("{}", &x.to_string()))?;
        let f = parse_theory(theory, &rho)?;
        let t0 = Instant::now();
        let v = monotone_value(a.monotone, rho.op(), &f);
        let ms = if a.stable { 0 } else { t0.elapsed().as_millis() as i64 };
        let (value, status) = match v {
            Ok(ExtReal::Finite(v)) => (v, "optimal"),
            Ok(ExtReal::Infinite) => (f64::INFINITY, "certified_infinite"),
            Err(CliError::Numerical(msg)) => {
                log::warn!("sweep point {x}: {msg}");
                (f64::NAN, "numerical_trouble")
            }
            Err(e) => return Err(e),
        };
        table.rows.push(vec![Cell::Num(x), Cell::Num(value), status.into(), Cell::Int(ms)]);
    }
    let m = meta(family, &cfg, wall(a.stable));
    emit(&table, format, &m, output)
}

fn cmd_decide(cfg: &RunConfig, a: DecideArgs) -> CliResult<(i32, String)> {
    let (rho, f_in) = input(cfg, &a.input)?;
    let (phi, f_out) = target(cfg, &a.input, &a.target)?;
    let d = convertibility_decision(rho.op(), &f_in, phi.op(), &f_out, a.mode.into())?;
    let mut out = String::new();
    let _ = writeln!(out, "verdict = {}", d.verdict.label());
    let _ = writeln!(out, "omega_input = {}", show(d.omega_rho));
    let _ = writeln!(out, "omega_target = {}", show(d.omega_target));
    if let (Some(a), Some(b)) = (d.free_omega_rho, d.free_omega_target) {
        let _ = writeln!(out, "omega_free_input = {}", show(a));
        let _ = writeln!(out, "omega_free_target = {}", show(b));
    }
    if !d.reason.is_empty() {
        let _ = writeln!(out, "reason = {}", d.reason);
    }
    match &d.verdict {
        Verdict::YesWithMap(m) => {
            let _ = writeln!(out, "probability = {:.10}", m.apply(rho.op()).trace());
        }
        Verdict::YesAsymptotic(flag) => {
            let _ = writeln!(out, "note = {}", flag.reason);
        }
        Verdict::No | Verdict::Undecided => {}
    }
    Ok((EXIT_OK, out))
}

fn map_json(map: &MeasurePrepareMap) -> String {
    serde_json::to_string_pretty(&MapJson::from_map(map)).expect("maps serialize") + "\n"
}

fn cmd_protocol(cfg: &RunConfig, a: ProtocolCommand) -> CliResult<(i32, String)> {
    match a {
        ProtocolCommand::Build {
            kind,
            input: ia,
            target: ta,
            p,
            mode,
            output,
        } => {
            let (rho, f_in) = input(cfg, &ia)?;
            let (phi, f_out) = target(cfg, &ia, &ta)?;
            let mode: Mode = mode.into();
            let (map, summary) = match kind {
                MapKind::Distill => {
                    let p = p.or(cfg.p).ok_or_else(|| CliError::Config("missing --p".into()))?;
                    let r = qrt_core::distillation::theta_at_target(rho.op(), &f_in, phi.op(), &f_out, p, mode)?;
                    let map = build_distillation_map(&r.w, &r.z, phi.op(), &f_in, &f_out, mode)?;
                    (map, format!("probability = {p:.10}\nerror = {:.10}\n", 1.0 - r.value))
                }
                MapKind::Convert => match build_conversion_map(rho.op(), &f_in, phi.op(), &f_out, mode)? {
                    ConversionOutcome::Map { map, branch, probability } => {
                        (map, format!("branch = {branch:?}\nprobability = {probability:.10}\n"))
                    }
                    ConversionOutcome::Asymptotic(flag) => {
                        return Ok((EXIT_OK, format!("asymptotic = {}\n", flag.reason)));
                    }
                },
            };
            match output.as_deref().or(cfg.output.as_deref()) {
                Some(path) => {
                    std::fs::write(path, map_json(&map))?;
                    Ok((EXIT_OK, format!("{summary}wrote map to {path}\n")))
                }
                None => Ok((EXIT_OK, map_json(&map))),
            }
        }
        ProtocolCommand::Verify {
            map,
            theory,
            target_theory,
        } => {
            let map = parse_map(&map)?;
            let f_in = parse_theory(&theory, &maximally_mixed(map.input_dim()))?;
            let out_theory = target_theory.as_deref().unwrap_or(&theory);
            let f_out = parse_theory(out_theory, &maximally_mixed(map.output_dim()))?;
            let c = verify_free(&map, &f_in, &f_out)?;
            let mut out = String::new();
            let _ = writeln!(out, "free = {}", c.passed);
            let _ = writeln!(out, "method = {:?}", c.method);
            let _ = writeln!(out, "max_violation = {:e}", c.max_violation);
            let _ = writeln!(out, "detail = {}", c.detail);
            if let Some(x) = &c.offending {
                let _ = writeln!(out, "offending_input = {}", op_json(x));
            }
            Ok((if c.passed { EXIT_OK } else { EXIT_NUMERICAL }, out))
        }
        ProtocolCommand::Apply { map, state } => {
            let map = parse_map(&map)?;
            let rho = parse_state_copies(&state)?;
            let (p, out_state) = apply_map(&map, rho.op())?;
            let mut out = format!("probability = {p:.10}\n");
            if let Some(s) = out_state {
                let _ = writeln!(out, "output = {}", op_json(s.op()));
            }
            Ok((EXIT_OK, out))
        }
    }
}

fn cmd_discriminate(cfg: &RunConfig, a: DiscriminateArgs) -> CliResult<(i32, String)> {
    let (rho, f) = input(cfg, &a.input)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let r = verify_advantage_theorem(rho.op(), &f, a.random, seed)?;
    let mut out = String::new();
    let _ = writeln!(out, "omega = {:.10}", r.omega);
    let _ = writeln!(out, "constructed_ratio = {:.10}", r.constructed);
    let _ = writeln!(out, "random_max_ratio = {:.10}", r.random_max);
    let _ = writeln!(out, "random_instances = {}", r.n_random);
    Ok((EXIT_OK, out))
}
