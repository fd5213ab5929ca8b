//! Physical constants, trap settings and the map onto Mathieu `(a, q)`.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("{name} must be finite and positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("{name} must be finite and non-zero, got {value}")]
    Zero { name: &'static str, value: f64 },

    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("outside Dehmelt stable region: a + q^2/2 = {0:e} < 0")]
    OutsideDehmeltRegion(f64),
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64, ParamsError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ParamsError::NonPositive { name, value })
    }
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<f64, ParamsError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ParamsError::NonFinite { name, value })
    }
}

/// Reduced Planck constant and the nucleon reference mass that sets the CSL
/// coupling scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// J·s
    pub hbar: f64,
    /// kg
    pub m0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.054_571_817e-34,
            m0: 1.672_621_92e-27,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<(), ParamsError> {
        check_positive("hbar", self.hbar)?;
        check_positive("m0", self.m0)?;
        Ok(())
    }
}

/// Electrical and geometric settings of a 2D quadrupole trap, all SI.
///
/// The x electrodes carry `U - V cos(Ωt)`, the y electrodes the negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    /// dc voltage `U` (V)
    pub dc_voltage: f64,
    /// zero-to-peak RF amplitude `V` (V)
    pub ac_amplitude: f64,
    /// angular RF frequency `Ω` (rad/s)
    pub omega: f64,
    /// centre-to-electrode distance `r0` (m)
    pub r0: f64,
    /// ion charge `Q` (C)
    pub charge: f64,
    /// ion mass `m` (kg)
    pub mass: f64,
}

impl TrapConfig {
    pub fn validate(&self) -> Result<(), ParamsError> {
        check_finite("dc_voltage", self.dc_voltage)?;
        check_finite("ac_amplitude", self.ac_amplitude)?;
        check_positive("omega", self.omega)?;
        check_positive("r0", self.r0)?;
        check_positive("mass", self.mass)?;
        if !self.charge.is_finite() || self.charge == 0.0 {
            return Err(ParamsError::Zero {
                name: "charge",
                value: self.charge,
            });
        }
        Ok(())
    }
}

/// Dimensionless stability parameters together with the RF angular
/// frequency that fixes the physical time scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathieuParams {
    pub a: f64,
    pub q: f64,
    /// rad/s
    pub omega: f64,
}

impl MathieuParams {
    pub fn new(a: f64, q: f64, omega: f64) -> Result<Self, ParamsError> {
        check_finite("a", a)?;
        check_finite("q", q)?;
        check_positive("omega", omega)?;
        Ok(Self { a, q, omega })
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        Self::new(self.a, self.q, self.omega).map(|_| ())
    }

    /// RF period `2π/Ω` in seconds.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Dimensionless Mathieu time `ξ = Ωt/2`.
    pub fn xi(&self, t: f64) -> f64 {
        0.5 * self.omega * t
    }

    /// `|a| ≪ |q| ≪ 1`, read with a factor-of-ten margin on each inequality.
    pub fn is_dehmelt_regime(&self) -> bool {
        self.a.abs() < 0.1 * self.q.abs() && self.q.abs() < 0.1
    }

    /// Time-dependent stiffness `(Ω²/4)(a + 2q cos Ωt)` in 1/s².
    #[inline]
    pub fn stiffness(&self, t: f64) -> f64 {
        0.25 * self.omega * self.omega * (self.a + 2.0 * self.q * (self.omega * t).cos())
    }
}

/// Mathieu parameters for the x and y axes of the trap.
///
/// `a_x = 8QU/(mΩ²r0²)`, `q_x = -4QV/(mΩ²r0²)`; the y axis is the exact
/// negation of both.
pub fn mathieu_from_trap(trap: &TrapConfig) -> Result<(MathieuParams, MathieuParams), ParamsError> {
    trap.validate()?;
    let denom = trap.mass * trap.omega * trap.omega * trap.r0 * trap.r0;
    let a = 8.0 * trap.charge * trap.dc_voltage / denom;
    let q = -4.0 * trap.charge * trap.ac_amplitude / denom;
    let x = MathieuParams::new(a, q, trap.omega)?;
    let y = MathieuParams::new(-a, -q, trap.omega)?;
    Ok((x, y))
}

/// Dehmelt's secular index `μ = √(a + q²/2)`.
pub fn dehmelt_index(p: &MathieuParams) -> Result<f64, ParamsError> {
    let radicand = p.a + 0.5 * p.q * p.q;
    if radicand < 0.0 || !radicand.is_finite() {
        return Err(ParamsError::OutsideDehmeltRegion(radicand));
    }
    Ok(radicand.sqrt())
}

/// Secular-plus-micromotion trajectory `A cos(μΩt/2)(1 + (q/2) cos Ωt)`.
pub fn dehmelt_trajectory(t: f64, amplitude: f64, p: &MathieuParams) -> Result<f64, ParamsError> {
    let mu = dehmelt_index(p)?;
    let secular = (0.5 * mu * p.omega * t).cos();
    let micromotion = 1.0 + 0.5 * p.q * (p.omega * t).cos();
    Ok(amplitude * secular * micromotion)
}
