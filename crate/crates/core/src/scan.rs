//! Parallel grid scans over `(q, a)` and `(log10 r_c, log10 λ)`, and
//! bisection for the edge of a stability region.
//!
//! Cells are evaluated at their centres, one row per parallel task, and
//! assembled in index order, so a result never depends on the number of
//! worker threads. A failing cell is recorded as unstable with a flag
//! instead of aborting the scan.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{CslMathieuSystem, CslParams, DynamicsError, ShapeMode};
use crate::floquet::{
    classify, evaluate, transfer_matrix, Classification, Construction, Criterion, FloquetError, MonodromyPolicy,
    VerdictMethod,
};
use crate::integrator::IntegratorSettings;
use crate::params::{MathieuParams, ParamsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("reference point not stable without CSL (a = {a}, q = {q}, trace = {trace})")]
    ReferenceUnstable { a: f64, q: f64, trace: f64 },

    #[error("no stability change between q = {q_lo} and q = {q_hi}")]
    NoBracket { q_lo: f64, q_hi: f64 },

    #[error(transparent)]
    Params(#[from] ParamsError),

    #[error(transparent)]
    Dynamics(#[from] DynamicsError),

    #[error(transparent)]
    Floquet(#[from] FloquetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisScale {
    Linear,
    Log10,
}

/// Quantity plotted along a grid axis. Log axes hold log10 of the SI value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    A,
    Q,
    Log10Rc,
    Log10Lambda,
}

impl Axis {
    pub fn scale(self) -> AxisScale {
        match self {
            Axis::A | Axis::Q => AxisScale::Linear,
            Axis::Log10Rc | Axis::Log10Lambda => AxisScale::Log10,
        }
    }

    /// CSV column name.
    pub fn column(self) -> &'static str {
        match self {
            Axis::A => "a",
            Axis::Q => "q",
            Axis::Log10Rc => "log10_rc_m",
            Axis::Log10Lambda => "log10_lambda_per_s",
        }
    }

    /// Physical value at axis coordinate `c`.
    pub fn physical(self, c: f64) -> f64 {
        match self.scale() {
            AxisScale::Linear => c,
            AxisScale::Log10 => 10f64.powf(c),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// Rectangular grid of `nx × ny` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// `q ∈ [0, 1.2]` across, `a ∈ [-0.1, 0.8]` up, 600 × 600.
    pub fn default_aq() -> Self {
        Self {
            x_axis: Axis::Q,
            y_axis: Axis::A,
            x_min: 0.0,
            x_max: 1.2,
            y_min: -0.1,
            y_max: 0.8,
            nx: 600,
            ny: 600,
        }
    }

    /// `log10 r_c[m] ∈ [-9, -3]` across, `log10 λ[1/s] ∈ [-20, 2]` up, 300 × 300.
    pub fn default_exclusion() -> Self {
        Self {
            x_axis: Axis::Log10Rc,
            y_axis: Axis::Log10Lambda,
            x_min: -9.0,
            x_max: -3.0,
            y_min: -20.0,
            y_max: 2.0,
            nx: 300,
            ny: 300,
        }
    }

    pub fn with_size(self, nx: usize, ny: usize) -> Self {
        Self { nx, ny, ..self }
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        let bad = |msg: String| Err(ScanError::InvalidGrid(msg));
        if self.x_axis == self.y_axis {
            return bad(format!("both axes are {}", self.x_axis));
        }
        for (name, lo, hi) in [("x", self.x_min, self.x_max), ("y", self.y_min, self.y_max)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("{name} range [{lo}, {hi}] must be finite with min < max"));
            }
        }
        if self.nx < 2 || self.ny < 2 {
            return bad(format!("need at least 2x2 cells, got {}x{}", self.nx, self.ny));
        }
        Ok(())
    }

    pub fn x_center(&self, ix: usize) -> f64 {
        self.x_min + (ix as f64 + 0.5) * (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn y_center(&self, iy: usize) -> f64 {
        self.y_min + (iy as f64 + 0.5) * (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn has_axes(&self, a: Axis, b: Axis) -> bool {
        (self.x_axis, self.y_axis) == (a, b) || (self.x_axis, self.y_axis) == (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFlag {
    Ok,
    IntegrationFailed,
}

impl fmt::Display for CellFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellFlag::Ok => "ok",
            CellFlag::IntegrationFailed => "integration-failed",
        })
    }
}

/// Verdict for one grid cell, located by its centre in axis coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub x: f64,
    pub y: f64,
    pub trace: f64,
    pub classification: Classification,
    pub flag: CellFlag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    Stability,
    Exclusion,
}

/// Ordered key/value echo of everything that determined a scan.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance(pub Vec<(String, String)>);

impl Provenance {
    fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, format!("{value:.16e}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Row-major (`iy * nx + ix`) grid of verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub kind: ScanKind,
    pub spec: GridSpec,
    pub cells: Vec<Cell>,
    pub method: VerdictMethod,
    pub provenance: Provenance,
}

impl ScanResult {
    pub fn cell(&self, ix: usize, iy: usize) -> &Cell {
        &self.cells[iy * self.spec.nx + ix]
    }

    pub fn classification(&self, ix: usize, iy: usize) -> Classification {
        self.cell(ix, iy).classification
    }

    pub fn trace(&self, ix: usize, iy: usize) -> f64 {
        self.cell(ix, iy).trace
    }

    /// Index of the cell containing axis point `(x, y)`, if inside the grid.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let s = &self.spec;
        let fx = (x - s.x_min) / (s.x_max - s.x_min) * s.nx as f64;
        let fy = (y - s.y_min) / (s.y_max - s.y_min) * s.ny as f64;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        (ix < s.nx && iy < s.ny).then_some((ix, iy))
    }

    pub fn count_stable(&self) -> usize {
        self.cells.iter().filter(|c| c.classification.is_stable()).count()
    }

    /// True if any of the up-to-8 neighbours of `(ix, iy)` has a different
    /// classification.
    pub fn is_boundary_adjacent(&self, ix: usize, iy: usize) -> bool {
        let own = self.classification(ix, iy);
        let (nx, ny) = (self.spec.nx as isize, self.spec.ny as isize);
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let (jx, jy) = (ix as isize + dx, iy as isize + dy);
                if (dx, dy) == (0, 0) || jx < 0 || jy < 0 || jx >= nx || jy >= ny {
                    continue;
                }
                if self.classification(jx as usize, jy as usize) != own {
                    return true;
                }
            }
        }
        false
    }
}

fn criterion_label(criterion: &Criterion, policy: &MonodromyPolicy) -> String {
    match criterion {
        Criterion::Trace => match policy.construction {
            Construction::Homogeneous => "trace".to_string(),
            Construction::Forced => "trace-forced".to_string(),
        },
        Criterion::Bounded {
            n_periods,
            growth_limit,
        } => format!("bounded(n_periods={n_periods}, growth_limit={growth_limit:.16e})"),
    }
}

fn method_of(criterion: &Criterion) -> VerdictMethod {
    match criterion {
        Criterion::Trace => VerdictMethod::TraceCriterion,
        Criterion::Bounded { .. } => VerdictMethod::Boundedness,
    }
}

fn common_provenance(
    prov: &mut Provenance,
    spec: &GridSpec,
    omega: f64,
    policy: &MonodromyPolicy,
    criterion: &Criterion,
    settings: &IntegratorSettings,
) {
    prov.push("code", concat!("trapstab ", env!("CARGO_PKG_VERSION")));
    prov.push("grid.x_axis", spec.x_axis);
    prov.push("grid.y_axis", spec.y_axis);
    prov.push_f64("grid.x_min", spec.x_min);
    prov.push_f64("grid.x_max", spec.x_max);
    prov.push_f64("grid.y_min", spec.y_min);
    prov.push_f64("grid.y_max", spec.y_max);
    prov.push("grid.nx", spec.nx);
    prov.push("grid.ny", spec.ny);
    prov.push_f64("omega_rad_per_s", omega);
    prov.push("method", criterion_label(criterion, policy));
    prov.push_f64("policy.t_start_s", policy.t_start);
    prov.push_f64("policy.ic_scale_x_m", policy.ic_scale_x);
    prov.push_f64("policy.ic_scale_v_m_per_s", policy.ic_scale_v);
    prov.push_f64("integrator.rel_tol", settings.rel_tol);
    prov.push_f64("integrator.abs_tol_x_m", settings.abs_tol_x);
    prov.push_f64("integrator.abs_tol_v_m_per_s", settings.abs_tol_v);
    prov.push_f64("integrator.max_step_s", settings.max_step);
    prov.push_f64("integrator.initial_step_s", settings.initial_step);
}

fn shape_label(mode: ShapeMode) -> &'static str {
    match mode {
        ShapeMode::UnitF => "unit",
        ShapeMode::ComputedF => "computed",
    }
}

/// Evaluates `cell(x, y)` over the grid in parallel, rows in order.
fn map_grid<F>(spec: &GridSpec, cell: F) -> Vec<Cell>
where
    F: Fn(f64, f64) -> (f64, Classification, CellFlag) + Sync,
{
    (0..spec.ny)
        .into_par_iter()
        .map(|iy| {
            let y = spec.y_center(iy);
            (0..spec.nx)
                .map(|ix| {
                    let x = spec.x_center(ix);
                    let (trace, classification, flag) = cell(x, y);
                    Cell {
                        x,
                        y,
                        trace,
                        classification,
                        flag,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn verdict_to_cell(result: Result<crate::floquet::StabilityVerdict, FloquetError>) -> (f64, Classification, CellFlag) {
    match result {
        Ok(v) => (v.trace, v.classification, CellFlag::Ok),
        Err(_) => (f64::NAN, Classification::Unstable, CellFlag::IntegrationFailed),
    }
}

/// Stability chart over `(a, q)` at fixed collapse parameters.
///
/// The grid axes must be `a` and `q`, in either orientation. The
/// policy's `t_start` and IC scales are used as given for every cell.
pub fn scan_aq(
    spec: &GridSpec,
    csl: &CslParams,
    omega: f64,
    policy: &MonodromyPolicy,
    criterion: Criterion,
    settings: &IntegratorSettings,
) -> Result<ScanResult, ScanError> {
    spec.validate()?;
    if !spec.has_axes(Axis::A, Axis::Q) {
        return Err(ScanError::InvalidGrid("stability scans need a and q axes".into()));
    }
    csl.validate()?;
    let reference = MathieuParams::new(0.0, 0.0, omega)?;
    policy.validate(&CslMathieuSystem::new(reference, *csl)?)?;
    settings.validate().map_err(FloquetError::from)?;

    let a_on_x = spec.x_axis == Axis::A;
    let cells = map_grid(spec, |x, y| {
        let (a, q) = if a_on_x { (x, y) } else { (y, x) };
        let verdict = MathieuParams::new(a, q, omega)
            .map_err(DynamicsError::from)
            .and_then(|p| CslMathieuSystem::new(p, *csl))
            .map_err(FloquetError::from)
            .and_then(|sys| evaluate(&sys, policy, criterion, settings));
        verdict_to_cell(verdict)
    });

    let mut provenance = Provenance::default();
    provenance.push("scan", "stability");
    common_provenance(&mut provenance, spec, omega, policy, &criterion, settings);
    provenance.push_f64("csl.lambda_per_s", csl.lambda);
    provenance.push_f64("csl.rc_m", csl.r_c);
    provenance.push_f64("csl.radius_m", csl.radius);
    provenance.push("csl.shape_factor", shape_label(csl.shape_mode));

    Ok(ScanResult {
        kind: ScanKind::Stability,
        spec: *spec,
        cells,
        method: method_of(&criterion),
        provenance,
    })
}

/// Allowed/excluded map over `(log10 r_c, log10 λ)` for a reference point
/// that is stable without collapse. `base` supplies the particle radius and
/// shape-factor mode; its λ and r_c are replaced cell by cell.
#[allow(clippy::too_many_arguments)]
pub fn scan_exclusion(
    a: f64,
    q: f64,
    omega: f64,
    spec: &GridSpec,
    base: &CslParams,
    policy: &MonodromyPolicy,
    criterion: Criterion,
    settings: &IntegratorSettings,
) -> Result<ScanResult, ScanError> {
    spec.validate()?;
    if !spec.has_axes(Axis::Log10Rc, Axis::Log10Lambda) {
        return Err(ScanError::InvalidGrid(
            "exclusion scans need log10_rc_m and log10_lambda_per_s axes".into(),
        ));
    }
    let mathieu = MathieuParams::new(a, q, omega)?;
    let reference = CslMathieuSystem::homogeneous(mathieu);
    let hom = transfer_matrix(
        &reference,
        &policy.with_construction(Construction::Homogeneous),
        settings,
    )?;
    let verdict = classify(&hom);
    if !verdict.classification.is_stable() {
        return Err(ScanError::ReferenceUnstable {
            a,
            q,
            trace: verdict.trace,
        });
    }

    let rc_on_x = spec.x_axis == Axis::Log10Rc;
    let cells = map_grid(spec, |x, y| {
        let (log_rc, log_lambda) = if rc_on_x { (x, y) } else { (y, x) };
        let r_c = 10f64.powf(log_rc);
        let csl = CslParams {
            lambda: 10f64.powf(log_lambda),
            r_c,
            radius: base.radius,
            shape_mode: base.shape_mode,
        };
        let verdict = CslMathieuSystem::new(mathieu, csl)
            .map_err(FloquetError::from)
            .and_then(|sys| evaluate(&sys, policy, criterion, settings));
        verdict_to_cell(verdict)
    });

    let mut provenance = Provenance::default();
    provenance.push("scan", "exclusion");
    common_provenance(&mut provenance, spec, omega, policy, &criterion, settings);
    provenance.push_f64("mathieu.a", a);
    provenance.push_f64("mathieu.q", q);
    provenance.push_f64("reference.trace", verdict.trace);
    provenance.push_f64("csl.radius_m", base.radius);
    provenance.push("csl.shape_factor", shape_label(base.shape_mode));

    Ok(ScanResult {
        kind: ScanKind::Exclusion,
        spec: *spec,
        cells,
        method: method_of(&criterion),
        provenance,
    })
}

/// Bisects on `|Tr(M(q))| - 2` of the collapse-free monodromy at fixed `a`
/// until the bracket is narrower than `tol`, and returns its midpoint.
pub fn find_boundary_q(
    a: f64,
    q_lo: f64,
    q_hi: f64,
    omega: f64,
    settings: &IntegratorSettings,
    tol: f64,
) -> Result<f64, ScanError> {
    if !(q_lo.is_finite() && q_hi.is_finite()) || q_lo == q_hi {
        return Err(ScanError::NoBracket { q_lo, q_hi });
    }
    if !(tol > 0.0) {
        return Err(ScanError::InvalidGrid(format!(
            "bisection tolerance must be positive, got {tol}"
        )));
    }
    let policy = MonodromyPolicy::homogeneous(omega);
    let excess = |q: f64| -> Result<f64, ScanError> {
        let sys = CslMathieuSystem::homogeneous(MathieuParams::new(a, q, omega)?);
        Ok(transfer_matrix(&sys, &policy, settings)?.trace().abs() - 2.0)
    };
    let (mut lo, mut hi) = (q_lo.min(q_hi), q_lo.max(q_hi));
    let mut f_lo = excess(lo)?;
    let f_hi = excess(hi)?;
    if (f_lo <= 0.0) == (f_hi <= 0.0) {
        return Err(ScanError::NoBracket { q_lo, q_hi });
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = excess(mid)?;
        if (f_mid <= 0.0) == (f_lo <= 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
