//! Equations of motion: the homogeneous Mathieu oscillator and the version
//! driven by the CSL effective force.
//!
//! The CSL contribution is the rms diffusion law
//! `Δx(t) = ħ/(m0 r_c) · √(λf/6) · t^{3/2}` recast as a deterministic
//! trajectory; its restoring-force-corrected second derivative enters the
//! equation of motion as an inhomogeneous term independent of `(x, v)`.

use thiserror::Error;

use crate::params::{check_positive, MathieuParams, ParamsError, PhysicalConstants};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Params(#[from] ParamsError),

    #[error("lambda must be finite and non-negative, got {0}")]
    NegativeLambda(f64),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    /// `t^{-1/2}` is singular at the origin; start forced integrations at `t > 0`.
    #[error("CSL force is singular at t = {0} <= 0; start integration at t > 0")]
    SingularTime(f64),
}

/// Whether the geometric suppression factor is fixed to one or evaluated
/// from the particle radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShapeMode {
    #[default]
    UnitF,
    ComputedF,
}

/// Collapse-model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CslParams {
    /// collapse rate λ (1/s)
    pub lambda: f64,
    /// correlation length r_c (m)
    pub r_c: f64,
    /// particle radius R (m)
    pub radius: f64,
    pub shape_mode: ShapeMode,
}

/// Shared correlation length of the GRW and Adler benchmarks, 1e-5 cm.
pub const BENCHMARK_RC: f64 = 1e-7;
pub const LAMBDA_GRW: f64 = 1e-17;
pub const LAMBDA_ADLER: f64 = 1e-8;

impl CslParams {
    pub fn new(lambda: f64, r_c: f64, radius: f64, shape_mode: ShapeMode) -> Result<Self, DynamicsError> {
        let p = Self {
            lambda,
            r_c,
            radius,
            shape_mode,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(DynamicsError::NegativeLambda(self.lambda));
        }
        check_positive("r_c", self.r_c)?;
        check_positive("radius", self.radius)?;
        Ok(())
    }

    /// No collapse: λ = 0 at the benchmark length scale.
    pub fn off() -> Self {
        Self::with_rate(0.0)
    }

    pub fn grw() -> Self {
        Self::with_rate(LAMBDA_GRW)
    }

    pub fn adler() -> Self {
        Self::with_rate(LAMBDA_ADLER)
    }

    fn with_rate(lambda: f64) -> Self {
        Self {
            lambda,
            r_c: BENCHMARK_RC,
            radius: BENCHMARK_RC,
            shape_mode: ShapeMode::UnitF,
        }
    }

    /// Effective shape factor: 1 under [`ShapeMode::UnitF`], otherwise `f(R/r_c)`.
    pub fn f(&self) -> Result<f64, DynamicsError> {
        match self.shape_mode {
            ShapeMode::UnitF => Ok(1.0),
            ShapeMode::ComputedF => shape_factor(self.radius, self.r_c),
        }
    }
}

/// Phase-space point of the one-dimensional motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    /// m
    pub x: f64,
    /// m/s
    pub v: f64,
    /// s
    pub t: f64,
}

impl State {
    pub fn new(x: f64, v: f64, t: f64) -> Self {
        Self { x, v, t }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite() && self.t.is_finite()
    }
}

/// Mathieu oscillator plus CSL forcing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CslMathieuSystem {
    pub mathieu: MathieuParams,
    pub csl: CslParams,
    pub constants: PhysicalConstants,
}

impl CslMathieuSystem {
    pub fn new(mathieu: MathieuParams, csl: CslParams) -> Result<Self, DynamicsError> {
        let sys = Self {
            mathieu,
            csl,
            constants: PhysicalConstants::default(),
        };
        sys.validate()?;
        Ok(sys)
    }

    /// The same trap with collapse switched off.
    pub fn homogeneous(mathieu: MathieuParams) -> Self {
        Self {
            mathieu,
            csl: CslParams::off(),
            constants: PhysicalConstants::default(),
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.mathieu.validate()?;
        self.csl.validate()?;
        self.constants.validate()?;
        Ok(())
    }

    pub fn is_forced(&self) -> bool {
        self.csl.lambda > 0.0
    }

    /// `ħ/(m0 r_c) · √(λf/6)` in m/s^{3/2}. The diffusion law is this times
    /// `t^{3/2}`, and the force coefficient is the same number.
    pub fn csl_prefactor(&self) -> Result<f64, DynamicsError> {
        let f = self.csl.f()?;
        let velocity_scale = self.constants.hbar / (self.constants.m0 * self.csl.r_c);
        Ok(velocity_scale * (self.csl.lambda * f / 6.0).sqrt())
    }
}

// Below this R/r_c the closed form loses digits to cancellation (its error
// grows like eps/(R/r_c)^6); the power series is used instead.
const SHAPE_SERIES_SWITCH: f64 = 0.5;

/// Geometric suppression factor for a sphere of radius `R`:
/// `f = 6 (r_c/R)^4 [1 - 2 r_c²/R² + (1 + 2 r_c²/R²) e^{-R²/r_c²}]`.
pub fn shape_factor(radius: f64, r_c: f64) -> Result<f64, DynamicsError> {
    check_positive("radius", radius)?;
    check_positive("r_c", r_c)?;
    let ratio = radius / r_c;
    if ratio < SHAPE_SERIES_SWITCH {
        Ok(shape_factor_series(ratio * ratio))
    } else {
        Ok(shape_factor_closed(ratio * ratio))
    }
}

/// `y = (R/r_c)²`
fn shape_factor_closed(y: f64) -> f64 {
    let inv = 1.0 / y;
    6.0 * inv * inv * (1.0 - 2.0 * inv + (1.0 + 2.0 * inv) * (-y).exp())
}

/// `f = 6 Σ_{k≥2} (-1)^k (k-1)/(k+1)! · y^{k-2} = 1 - y/2 + 3y²/20 - ...`
fn shape_factor_series(y: f64) -> f64 {
    // term_k = (-1)^k (k-1) y^{k-2} / (k+1)!, starting at k = 2: 1/6
    let mut sum = 0.0;
    let mut power = 1.0;
    let mut factorial = 6.0;
    for k in 2..40u32 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * f64::from(k - 1) * power / factorial;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        power *= y;
        factorial *= f64::from(k + 2);
    }
    6.0 * sum
}

/// rms CSL displacement after time `t ≥ 0`.
pub fn csl_rms_displacement(t: f64, sys: &CslMathieuSystem) -> Result<f64, DynamicsError> {
    if !(t >= 0.0) {
        return Err(DynamicsError::NegativeTime(t));
    }
    Ok(sys.csl_prefactor()? * t * t.sqrt())
}

/// Effective CSL force per unit mass at `t > 0`:
/// `C·[(3/4) t^{-1/2} - (Ω²/4)(a + 2q cos Ωt) t^{3/2}]` with `C` from
/// [`CslMathieuSystem::csl_prefactor`].
pub fn csl_acceleration(t: f64, sys: &CslMathieuSystem) -> Result<f64, DynamicsError> {
    if !(t > 0.0) {
        return Err(DynamicsError::SingularTime(t));
    }
    let coeff = sys.csl_prefactor()?;
    let sqrt_t = t.sqrt();
    let kick = 0.75 / sqrt_t;
    let restoring = sys.mathieu.stiffness(t) * t * sqrt_t;
    Ok(coeff * (kick - restoring))
}

/// `(ẋ, v̇) = (v, -(Ω²/4)(a + 2q cos Ωt) x)`
#[inline]
pub fn rhs_homogeneous(s: &State, p: &MathieuParams) -> (f64, f64) {
    (s.v, -p.stiffness(s.t) * s.x)
}

/// Homogeneous right-hand side plus the CSL force. With λ = 0 the result is
/// bit-identical to [`rhs_homogeneous`].
pub fn rhs_csl(s: &State, sys: &CslMathieuSystem) -> Result<(f64, f64), DynamicsError> {
    if !(s.t > 0.0) {
        return Err(DynamicsError::SingularTime(s.t));
    }
    let (dx, dv) = rhs_homogeneous(s, &sys.mathieu);
    if sys.csl.lambda == 0.0 {
        return Ok((dx, dv));
    }
    Ok((dx, dv + csl_acceleration(s.t, sys)?))
}
