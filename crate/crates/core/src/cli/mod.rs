//! The `trapstab` command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 physics precondition failure.

pub mod config;
pub mod output;
pub mod svg;

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::dynamics::{rhs_csl, rhs_homogeneous, CslMathieuSystem, CslParams, ShapeMode, State, BENCHMARK_RC};
use crate::floquet::{Construction, Criterion, MonodromyPolicy};
use crate::integrator::{integrate_sampled_with, IntegratorSettings};
use crate::params::{dehmelt_index, mathieu_from_trap, MathieuParams, TrapConfig};
use crate::scan::{scan_aq, scan_exclusion, GridSpec, ScanError, ScanResult};

use config::{pick, ConfigFile};
use output::{num, scan_csv_string, state_json, GridTable};
use svg::{benchmark_markers, render_svg, Marker, SvgStyle};

/// Default drive when neither a trap nor `--omega` fixes it: Ω = 1e8 rad/s.
pub const DEFAULT_OMEGA: f64 = 1e8;
/// Near-boundary reference point used by the exclusion scan by default.
pub const REFERENCE_POINT: (f64, f64) = (-0.000526947, 0.0326158);

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("{0}")]
    Physics(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Physics(_) => 4,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "trapstab", version, about = "Paul-trap stability under CSL forcing")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Unit,
    Computed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// trace of the homogeneous monodromy
    Trace,
    /// trace of the transfer matrix built from forced solutions
    TraceForced,
    /// direct integration, bounded growth
    Bounded,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// flat `key = value` config file; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub q: Option<f64>,

    /// RF frequency; requires --angular (rad/s) or --hz (cycles/s)
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true, conflicts_with = "hz")]
    pub angular: bool,
    #[arg(long, global = true)]
    pub hz: bool,

    /// dc voltage U (V)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub dc_voltage: Option<f64>,
    /// zero-to-peak RF amplitude V (V)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ac_voltage: Option<f64>,
    /// centre-to-electrode distance (m)
    #[arg(long, global = true)]
    pub r0: Option<f64>,
    /// ion charge (C)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub charge: Option<f64>,
    /// ion mass (kg)
    #[arg(long, global = true)]
    pub mass: Option<f64>,

    /// collapse rate (1/s)
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// correlation length (m)
    #[arg(long, global = true, conflicts_with = "rc_cm")]
    pub rc: Option<f64>,
    /// correlation length (cm)
    #[arg(long, global = true)]
    pub rc_cm: Option<f64>,
    /// particle radius (m); defaults to r_c
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub shape_factor: Option<ShapeArg>,

    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodArg>,
    /// start of the first period window (s); defaults to one RF period
    #[arg(long, global = true)]
    pub t_start: Option<f64>,
    /// position scale of the first fundamental solution (m)
    #[arg(long, global = true)]
    pub ic_scale_x: Option<f64>,
    /// periods integrated by --method bounded
    #[arg(long, global = true)]
    pub bound_periods: Option<usize>,
    /// growth factor over x_c that counts as escape for --method bounded
    #[arg(long, global = true)]
    pub growth_limit: Option<f64>,
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,

    #[arg(long, global = true, env = "TRAPSTAB_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print Mathieu (a, q) for both trap axes and Dehmelt's index
    TrapParams,
    /// Integrate one trajectory and stream NDJSON samples
    Trajectory {
        /// integration span in RF periods
        #[arg(long, default_value_t = 10.0)]
        periods: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Stability chart over (a, q)
    StabilityScan {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, allow_hyphen_values = true)]
        a_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        a_max: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        q_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        q_max: Option<f64>,
        /// also scan with lambda = 0 and write a cell-difference report here
        #[arg(long)]
        diff_report: Option<PathBuf>,
    },
    /// Allowed region in (log10 r_c, log10 lambda) for a reference point
    ExclusionScan {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, allow_hyphen_values = true)]
        log_rc_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        log_rc_max: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        log_lambda_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        log_lambda_max: Option<f64>,
    },
    /// Render a scan CSV as SVG
    Render {
        input: PathBuf,
        #[arg(long, default_value_t = 800)]
        width: u32,
        #[arg(long, default_value_t = 600)]
        height: u32,
        /// extra marker `label,x,y` in axis coordinates (repeatable)
        #[arg(long = "marker")]
        markers: Vec<String>,
    },
}

/// Where the motion parameters came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Trap(TrapConfig),
    Direct { a: f64, q: f64 },
    Unspecified,
}

/// Flags merged over the config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: Source,
    pub omega: f64,
    pub csl: CslParams,
    pub policy: MonodromyPolicy,
    pub criterion: Criterion,
    pub settings: IntegratorSettings,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    file: ConfigFile,
}

impl RunConfig {
    pub fn resolve(c: &CommonArgs) -> Result<Self, CliError> {
        let file = match &c.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };

        let omega_flag = match c.omega {
            Some(w) if c.hz => Some(2.0 * PI * w),
            Some(w) if c.angular => Some(w),
            Some(_) => {
                return Err(CliError::Config(
                    "--omega needs --angular (rad/s) or --hz (cycles/s)".into(),
                ))
            }
            None => None,
        };

        let trap_flags = [c.dc_voltage, c.ac_voltage, c.r0, c.charge, c.mass];
        let wants_trap = file.has_prefix("trap.") || trap_flags.iter().any(Option::is_some);
        let a = pick(c.a, &file, "mathieu.a")?;
        let q = pick(c.q, &file, "mathieu.q")?;
        let wants_direct = a.is_some() || q.is_some();
        if wants_trap && wants_direct {
            return Err(CliError::Config(
                "give either a trap configuration or direct (a, q), not both".into(),
            ));
        }

        let source = if wants_trap {
            let need = |flag: Option<f64>, key: &str| -> Result<f64, CliError> {
                pick(flag, &file, key)?
                    .ok_or_else(|| CliError::Config(format!("trap configuration is missing `{key}`")))
            };
            let omega = match omega_flag {
                Some(w) => w,
                None => need(None, "trap.omega_rad_per_s")?,
            };
            let trap = TrapConfig {
                dc_voltage: need(c.dc_voltage, "trap.dc_voltage_V")?,
                ac_amplitude: need(c.ac_voltage, "trap.ac_amplitude_V")?,
                omega,
                r0: need(c.r0, "trap.r0_m")?,
                charge: need(c.charge, "trap.charge_C")?,
                mass: need(c.mass, "trap.mass_kg")?,
            };
            trap.validate().map_err(config_err)?;
            Source::Trap(trap)
        } else if wants_direct {
            match (a, q) {
                (Some(a), Some(q)) => Source::Direct { a, q },
                _ => return Err(CliError::Config("direct parameters need both a and q".into())),
            }
        } else {
            Source::Unspecified
        };

        let omega = match source {
            Source::Trap(t) => t.omega,
            _ => match omega_flag {
                Some(w) => w,
                None => file.get("mathieu.omega_rad_per_s")?.unwrap_or(DEFAULT_OMEGA),
            },
        };
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(CliError::Config(format!("omega must be positive, got {omega}")));
        }

        let r_c = match (c.rc, c.rc_cm) {
            (Some(m), _) => m,
            (None, Some(cm)) => cm * 1e-2,
            (None, None) => file.get("csl.rc_m")?.unwrap_or(BENCHMARK_RC),
        };
        let shape = match c.shape_factor {
            Some(s) => s,
            None => match file.raw("csl.shape_factor") {
                None => ShapeArg::Unit,
                Some(v) => ShapeArg::from_str(v, true).map_err(|_| config_err(format!("csl.shape_factor: `{v}`")))?,
            },
        };
        let csl = CslParams {
            lambda: pick(c.lambda, &file, "csl.lambda_per_s")?.unwrap_or(0.0),
            r_c,
            radius: pick(c.radius, &file, "csl.radius_m")?.unwrap_or(r_c),
            shape_mode: match shape {
                ShapeArg::Unit => ShapeMode::UnitF,
                ShapeArg::Computed => ShapeMode::ComputedF,
            },
        };
        csl.validate().map_err(config_err)?;

        let method = match c.method {
            Some(m) => m,
            None => match file.raw("policy.method") {
                None => MethodArg::TraceForced,
                Some(v) => MethodArg::from_str(v, true).map_err(|_| config_err(format!("policy.method: `{v}`")))?,
            },
        };
        let construction = match method {
            MethodArg::Trace => Construction::Homogeneous,
            MethodArg::TraceForced | MethodArg::Bounded => Construction::Forced,
        };
        let mut policy = MonodromyPolicy::for_omega(omega, construction);
        if let Some(t) = pick(c.t_start, &file, "policy.t_start_s")? {
            policy.t_start = t;
        }
        if let Some(x) = pick(c.ic_scale_x, &file, "policy.ic_scale_x_m")? {
            policy.ic_scale_x = x;
            policy.ic_scale_v = x * omega;
        }
        let criterion = match method {
            MethodArg::Bounded => Criterion::Bounded {
                n_periods: pick(c.bound_periods, &file, "policy.bound_periods")?.unwrap_or(100),
                growth_limit: pick(c.growth_limit, &file, "policy.growth_limit")?.unwrap_or(1e3),
            },
            _ => Criterion::Trace,
        };

        let mut settings = IntegratorSettings::default();
        if let Some(r) = pick(c.rel_tol, &file, "integrator.rel_tol")? {
            settings.rel_tol = r;
        }
        if let Some(x) = file.get("integrator.abs_tol_x_m")? {
            settings.abs_tol_x = x;
        }
        if let Some(v) = file.get("integrator.abs_tol_v_m_per_s")? {
            settings.abs_tol_v = v;
        }
        settings.validate().map_err(config_err)?;

        let threads = pick(c.threads, &file, "run.threads")?;
        if threads == Some(0) {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }

        Ok(Self {
            source,
            omega,
            csl,
            policy,
            criterion,
            settings,
            threads,
            out: c.out.clone().or_else(|| file.path("output.out")),
            svg: c.svg.clone().or_else(|| file.path("output.svg")),
            file,
        })
    }

    /// Mathieu parameters of the x axis (trap) or the direct pair.
    pub fn mathieu(&self) -> Result<Option<MathieuParams>, CliError> {
        match self.source {
            Source::Trap(t) => Ok(Some(mathieu_from_trap(&t).map_err(config_err)?.0)),
            Source::Direct { a, q } => Ok(Some(MathieuParams::new(a, q, self.omega).map_err(config_err)?)),
            Source::Unspecified => Ok(None),
        }
    }

    fn grid(&self, base: GridSpec, grid: &GridArgs, bounds: [(Option<f64>, &str); 4]) -> Result<GridSpec, CliError> {
        let mut g = base;
        let targets = [&mut g.x_min, &mut g.x_max, &mut g.y_min, &mut g.y_max];
        for (slot, (flag, key)) in targets.into_iter().zip(bounds) {
            if let Some(v) = pick(flag, &self.file, key)? {
                *slot = v;
            }
        }
        if let Some(n) = pick(grid.nx, &self.file, "grid.nx")? {
            g.nx = n;
        }
        if let Some(n) = pick(grid.ny, &self.file, "grid.ny")? {
            g.ny = n;
        }
        g.validate().map_err(config_err)?;
        Ok(g)
    }

    fn in_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
        match self.threads {
            None => Ok(f()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::BufWriter::new(io::stdout().lock()))),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn io_err(e: io::Error) -> CliError {
    CliError::Config(format!("output error: {e}"))
}

fn cmd_trap_params(run: &RunConfig) -> Result<(), CliError> {
    let (x, y) = match run.source {
        Source::Trap(t) => mathieu_from_trap(&t).map_err(config_err)?,
        Source::Direct { .. } => {
            let x = run.mathieu()?.expect("direct source");
            (x, MathieuParams { a: -x.a, q: -x.q, ..x })
        }
        Source::Unspecified => {
            return Err(CliError::Config(
                "trap-params needs a trap configuration or direct --a/--q".into(),
            ))
        }
    };
    let mut out = open_out(&run.out)?;
    let mu = |p: &MathieuParams| match dehmelt_index(p) {
        Ok(mu) => num(mu),
        Err(e) => e.to_string(),
    };
    let text = format!(
        "omega_rad_per_s = {}\na_x = {}\nq_x = {}\na_y = {}\nq_y = {}\nmu_x = {}\nmu_y = {}\n",
        num(run.omega),
        num(x.a),
        num(x.q),
        num(y.a),
        num(y.q),
        mu(&x),
        mu(&y)
    );
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(io_err)
}

fn cmd_trajectory(run: &RunConfig, periods: f64, samples: usize) -> Result<(), CliError> {
    let p = run
        .mathieu()?
        .ok_or_else(|| CliError::Config("trajectory needs a trap configuration or --a/--q".into()))?;
    if !(periods > 0.0 && periods.is_finite()) || samples == 0 {
        return Err(CliError::Config(
            "--periods must be positive and --samples at least 1".into(),
        ));
    }
    let sys = CslMathieuSystem::new(p, run.csl).map_err(config_err)?;
    if sys.is_forced() && !(run.policy.t_start > 0.0) {
        return Err(CliError::Config("t_start must be > 0 when lambda > 0".into()));
    }
    let s0 = State::new(run.policy.ic_scale_x, 0.0, run.policy.t_start);
    let t1 = s0.t + periods * p.period();
    let settings = run.settings.with_max_step(p.period() / 20.0);

    let mut out = open_out(&run.out)?;
    let mut max_abs = 0.0f64;
    let mut count = 0usize;
    let mut write_failed = None;
    let sink = |s: &State| {
        max_abs = max_abs.max(s.x.abs());
        count += 1;
        match writeln!(out, "{}", state_json(s)) {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                write_failed = Some(e);
                ControlFlow::Break(())
            }
        }
    };
    let result = if sys.is_forced() {
        integrate_sampled_with(|s| rhs_csl(s, &sys), s0, t1, samples, &settings, sink)
    } else {
        integrate_sampled_with(|s| Ok(rhs_homogeneous(s, &p)), s0, t1, samples, &settings, sink)
    };
    if let Some(e) = write_failed {
        return Err(io_err(e));
    }
    if let Err(e) = result {
        out.flush().map_err(io_err)?;
        return Err(CliError::Numeric(e.to_string()));
    }
    writeln!(
        out,
        "{{\"summary\":true,\"samples\":{count},\"max_abs_x\":{},\"x_c\":{}}}",
        num(max_abs),
        num(run.policy.ic_scale_x)
    )
    .and_then(|_| out.flush())
    .map_err(io_err)
}

fn scan_failure(e: ScanError) -> CliError {
    match e {
        ScanError::InvalidGrid(_) | ScanError::Params(_) | ScanError::Dynamics(_) => config_err(e),
        ScanError::ReferenceUnstable { .. } => CliError::Physics(e.to_string()),
        ScanError::NoBracket { .. } | ScanError::Floquet(_) => CliError::Numeric(e.to_string()),
    }
}

fn emit_scan(run: &RunConfig, result: &ScanResult, markers: Vec<Marker>) -> Result<(), CliError> {
    let csv = scan_csv_string(result);
    let mut out = open_out(&run.out)?;
    out.write_all(csv.as_bytes())
        .and_then(|_| out.flush())
        .map_err(io_err)?;
    if let Some(path) = &run.svg {
        let style = SvgStyle {
            markers,
            ..Default::default()
        };
        let svg = render_svg(&GridTable::from_scan(result), &style).map_err(CliError::Config)?;
        write_file(path, &svg)?;
    }
    Ok(())
}

/// Plain-text comparison of a scan against its λ = 0 counterpart.
pub fn diff_report(with: &ScanResult, without: &ScanResult) -> String {
    let (mut differing, mut adjacent) = (0usize, 0usize);
    for iy in 0..with.spec.ny {
        for ix in 0..with.spec.nx {
            if with.classification(ix, iy) != without.classification(ix, iy) {
                differing += 1;
                if without.is_boundary_adjacent(ix, iy) {
                    adjacent += 1;
                }
            }
        }
    }
    format!(
        "cells = {}\ndiffering = {differing}\ndiffering_adjacent_to_boundary = {adjacent}\ndiffering_interior = {}\n",
        with.cells.len(),
        differing - adjacent
    )
}

fn cmd_stability_scan(
    run: &RunConfig,
    grid: &GridArgs,
    bounds: [Option<f64>; 4],
    diff: &Option<PathBuf>,
) -> Result<(), CliError> {
    if !matches!(run.source, Source::Unspecified) && run.mathieu()?.is_some() {
        return Err(CliError::Config(
            "stability-scan takes (a, q) from the grid, not from --a/--q or a trap".into(),
        ));
    }
    let spec = run.grid(
        GridSpec::default_aq(),
        grid,
        [
            (bounds[0], "grid.q_min"),
            (bounds[1], "grid.q_max"),
            (bounds[2], "grid.a_min"),
            (bounds[3], "grid.a_max"),
        ],
    )?;
    let scan = |csl: &CslParams| {
        run.in_pool(|| scan_aq(&spec, csl, run.omega, &run.policy, run.criterion, &run.settings))?
            .map_err(scan_failure)
    };
    let result = scan(&run.csl)?;
    emit_scan(run, &result, Vec::new())?;
    if let Some(path) = diff {
        let baseline = scan(&CslParams { lambda: 0.0, ..run.csl })?;
        write_file(path, &diff_report(&result, &baseline))?;
    }
    Ok(())
}

fn cmd_exclusion_scan(run: &RunConfig, grid: &GridArgs, bounds: [Option<f64>; 4]) -> Result<(), CliError> {
    let p = run
        .mathieu()?
        .unwrap_or(MathieuParams::new(REFERENCE_POINT.0, REFERENCE_POINT.1, run.omega).map_err(config_err)?);
    let spec = run.grid(
        GridSpec::default_exclusion(),
        grid,
        [
            (bounds[0], "grid.log10_rc_min"),
            (bounds[1], "grid.log10_rc_max"),
            (bounds[2], "grid.log10_lambda_min"),
            (bounds[3], "grid.log10_lambda_max"),
        ],
    )?;
    let result = run
        .in_pool(|| {
            scan_exclusion(
                p.a,
                p.q,
                p.omega,
                &spec,
                &run.csl,
                &run.policy,
                run.criterion,
                &run.settings,
            )
        })?
        .map_err(scan_failure)?;
    emit_scan(run, &result, benchmark_markers())
}

fn cmd_render(run: &RunConfig, input: &Path, width: u32, height: u32, markers: &[String]) -> Result<(), CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let table = GridTable::parse_csv(&text).map_err(|e| CliError::Config(format!("malformed CSV: {e}")))?;
    let mut all = if table.kind == crate::scan::ScanKind::Exclusion {
        benchmark_markers()
    } else {
        Vec::new()
    };
    for m in markers {
        all.push(Marker::parse(m).map_err(CliError::Config)?);
    }
    let style = SvgStyle {
        width,
        height,
        markers: all,
        ..Default::default()
    };
    let svg = render_svg(&table, &style).map_err(CliError::Config)?;
    let target = run.svg.clone().or_else(|| run.out.clone());
    let mut out = open_out(&target)?;
    out.write_all(svg.as_bytes()).and_then(|_| out.flush()).map_err(io_err)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let run = RunConfig::resolve(&cli.common)?;
    match &cli.command {
        Command::TrapParams => cmd_trap_params(&run),
        Command::Trajectory { periods, samples } => cmd_trajectory(&run, *periods, *samples),
        Command::StabilityScan {
            grid,
            a_min,
            a_max,
            q_min,
            q_max,
            diff_report,
        } => cmd_stability_scan(&run, grid, [*q_min, *q_max, *a_min, *a_max], diff_report),
        Command::ExclusionScan {
            grid,
            log_rc_min,
            log_rc_max,
            log_lambda_min,
            log_lambda_max,
        } => cmd_exclusion_scan(&run, grid, [*log_rc_min, *log_rc_max, *log_lambda_min, *log_lambda_max]),
        Command::Render {
            input,
            width,
            height,
            markers,
        } => cmd_render(&run, input, *width, *height, markers),
    }
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("trapstab: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(args: &[&str]) -> Result<RunConfig, CliError> {
        let mut full = vec!["trapstab"];
        full.extend_from_slice(args);
        full.push("trap-params");
        let cli = Cli::try_parse_from(full).expect("clap parse");
        RunConfig::resolve(&cli.common)
    }

    #[test]
    fn omega_needs_unit() {
        let err = resolve(&["--a", "0.1", "--q", "0.2", "--omega", "1e8"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let r = resolve(&["--a", "0.1", "--q", "0.2", "--omega", "1e8", "--angular"]).unwrap();
        assert_eq!(r.omega, 1e8);
        let r = resolve(&["--a", "0.1", "--q", "0.2", "--omega", "1e8", "--hz"]).unwrap();
        assert!((r.omega - 2.0 * PI * 1e8).abs() < 1e-3);
    }

    #[test]
    fn defaults() {
        let r = resolve(&[]).unwrap();
        assert_eq!(r.source, Source::Unspecified);
        assert_eq!(r.omega, DEFAULT_OMEGA);
        assert_eq!(r.csl.lambda, 0.0);
        assert_eq!(r.csl.r_c, 1e-7);
        assert_eq!(r.policy.construction, Construction::Forced);
        assert!((r.policy.t_start - 2.0 * PI / DEFAULT_OMEGA).abs() < 1e-20);
        assert_eq!(r.criterion, Criterion::Trace);
    }

    #[test]
    fn rc_in_centimetres() {
        let r = resolve(&["--rc-cm", "1e-5"]).unwrap();
        assert!((r.csl.r_c - 1e-7).abs() < 1e-22);
        assert_eq!(r.csl.radius, r.csl.r_c);
    }

    #[test]
    fn trap_and_direct_are_exclusive() {
        let err = resolve(&["--a", "0.1", "--q", "0.1", "--dc-voltage", "1"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = resolve(&["--dc-voltage", "1"]).unwrap_err();
        assert!(err.to_string().contains("missing"));
        assert!(resolve(&["--a", "0.1"]).is_err());
    }

    #[test]
    fn method_selection() {
        let r = resolve(&["--method", "trace"]).unwrap();
        assert_eq!(r.policy.construction, Construction::Homogeneous);
        let r = resolve(&["--method", "bounded", "--bound-periods", "7"]).unwrap();
        assert_eq!(
            r.criterion,
            Criterion::Bounded {
                n_periods: 7,
                growth_limit: 1e3
            }
        );
    }

    #[test]
    fn config_file_merges_under_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "trap.dc_voltage_V = 70\ntrap.ac_amplitude_V = 8000\ntrap.omega_rad_per_s = 1e8\n\
             trap.r0_m = 1e-6\ntrap.charge_C = 1\ntrap.mass_kg = 100\ncsl.lambda_per_s = 1e-8\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let r = resolve(&["--config", p]).unwrap();
        let m = r.mathieu().unwrap().unwrap();
        assert!((m.a - 5.6e-4).abs() < 1e-15);
        assert_eq!(r.csl.lambda, 1e-8);
        let r = resolve(&["--config", p, "--dc-voltage", "0", "--lambda", "0"]).unwrap();
        assert_eq!(r.mathieu().unwrap().unwrap().a, 0.0);
        assert_eq!(r.csl.lambda, 0.0);
    }
}
