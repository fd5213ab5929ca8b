//! Adaptive Dormand–Prince 5(4) integrator for second-order scalar motion.
//!
//! The solver carries `(x, v)` with a mixed absolute/relative RMS error norm
//! (separate absolute floors for position and velocity, since the two differ
//! by a factor of order Ω) and a proportional-integral step controller.

use std::ops::ControlFlow;

use thiserror::Error;

use crate::dynamics::{DynamicsError, State};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("invalid integrator settings: {0}")]
    InvalidSettings(&'static str),

    #[error("invalid integration span: from t = {from} to t = {to}")]
    InvalidSpan { from: f64, to: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("exceeded {0} steps")]
    TooManySteps(usize),

    #[error(transparent)]
    Rhs(#[from] DynamicsError),
}

/// Error tolerances and step limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    /// m
    pub abs_tol_x: f64,
    /// m/s
    pub abs_tol_v: f64,
    /// s; callers integrating oscillatory systems cap this at a twentieth of
    /// the drive period.
    pub max_step: f64,
    /// s; zero selects an automatic first step.
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol_x: 1e-18,
            abs_tol_v: 1e-12,
            max_step: f64::INFINITY,
            initial_step: 0.0,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<(), IntegrationError> {
        if !(1e-14..=1e-2).contains(&self.rel_tol) {
            return Err(IntegrationError::InvalidSettings("rel_tol must lie in [1e-14, 1e-2]"));
        }
        if !(self.abs_tol_x > 0.0 && self.abs_tol_x.is_finite()) {
            return Err(IntegrationError::InvalidSettings("abs_tol_x must be positive"));
        }
        if !(self.abs_tol_v > 0.0 && self.abs_tol_v.is_finite()) {
            return Err(IntegrationError::InvalidSettings("abs_tol_v must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(IntegrationError::InvalidSettings("max_step must be positive"));
        }
        if !(self.initial_step >= 0.0 && self.initial_step.is_finite()) {
            return Err(IntegrationError::InvalidSettings("initial_step must be non-negative"));
        }
        if self.max_steps == 0 {
            return Err(IntegrationError::InvalidSettings("max_steps must be positive"));
        }
        Ok(())
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = self.max_step.min(max_step);
        self
    }
}

/// Equally spaced samples of an integrated solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<State>,
    /// Always false: samples are step endpoints, not interpolated.
    pub dense: bool,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between 5th- and 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI controller (Hairer & Wanner's DOPRI5 constants)
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

type Vec2 = [f64; 2];

#[inline]
fn axpy(y: Vec2, h: f64, terms: &[(f64, Vec2)]) -> Vec2 {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Stateful stepper that keeps its step size between successive targets.
struct Stepper<'a, F> {
    rhs: F,
    settings: &'a IntegratorSettings,
    t: f64,
    y: Vec2,
    k1: Vec2,
    h: f64,
    fac_old: f64,
    steps: usize,
    rejected_last: bool,
}

impl<'a, F> Stepper<'a, F>
where
    F: FnMut(&State) -> Result<(f64, f64), DynamicsError>,
{
    fn new(mut rhs: F, s0: State, settings: &'a IntegratorSettings) -> Result<Self, IntegrationError> {
        settings.validate()?;
        if !s0.is_finite() {
            return Err(IntegrationError::NonFinite { t: s0.t });
        }
        let k1 = Self::eval(&mut rhs, s0.t, [s0.x, s0.v])?;
        Ok(Self {
            rhs,
            settings,
            t: s0.t,
            y: [s0.x, s0.v],
            k1,
            h: 0.0,
            fac_old: 1e-4,
            steps: 0,
            rejected_last: false,
        })
    }

    #[inline]
    fn eval(rhs: &mut F, t: f64, y: Vec2) -> Result<Vec2, IntegrationError> {
        let (dx, dv) = rhs(&State::new(y[0], y[1], t))?;
        Ok([dx, dv])
    }

    fn state(&self) -> State {
        State::new(self.y[0], self.y[1], self.t)
    }

    #[inline]
    fn scale(&self, i: usize, a: f64, b: f64) -> f64 {
        let abs = if i == 0 {
            self.settings.abs_tol_x
        } else {
            self.settings.abs_tol_v
        };
        abs + self.settings.rel_tol * a.abs().max(b.abs())
    }

    fn norm(&self, v: Vec2, reference: Vec2) -> f64 {
        let a = v[0] / self.scale(0, reference[0], reference[0]);
        let b = v[1] / self.scale(1, reference[1], reference[1]);
        (0.5 * (a * a + b * b)).sqrt()
    }

    /// Starting step from the local derivative scales.
    fn initial_step(&mut self, span: f64) -> Result<f64, IntegrationError> {
        let dir = span.signum();
        let limit = self.settings.max_step.min(span.abs());
        if self.settings.initial_step > 0.0 {
            return Ok(dir * self.settings.initial_step.min(limit));
        }
        let d0 = self.norm(self.y, self.y);
        let d1 = self.norm(self.k1, self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * limit
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(limit);
        let y1 = axpy(self.y, dir * h0, &[(1.0, self.k1)]);
        let k2 = Self::eval(&mut self.rhs, self.t + dir * h0, y1)?;
        let diff = [k2[0] - self.k1[0], k2[1] - self.k1[1]];
        let d2 = self.norm(diff, self.y) / h0;
        let dmax = d1.max(d2);
        let h1 = if dmax <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * limit)
        } else {
            (0.01 / dmax).powf(0.2)
        };
        Ok(dir * (100.0 * h0).min(h1).min(limit))
    }

    /// Advances to exactly `target`, calling `observe` after every accepted
    /// step. Returns `Break` if the observer asked to stop early.
    fn advance_to<O>(&mut self, target: f64, observe: &mut O) -> Result<ControlFlow<()>, IntegrationError>
    where
        O: FnMut(&State) -> ControlFlow<()>,
    {
        let span = target - self.t;
        if span == 0.0 {
            return Ok(ControlFlow::Continue(()));
        }
        let dir = span.signum();
        if self.h == 0.0 || self.h.signum() != dir {
            self.h = self.initial_step(span)?;
        }
        loop {
            let remaining = target - self.t;
            if remaining * dir <= 0.0 {
                return Ok(ControlFlow::Continue(()));
            }
            let mut h = dir * self.h.abs().min(self.settings.max_step);
            let last = (self.t + h - target) * dir >= 0.0 || remaining.abs() <= 1.01 * h.abs();
            if last {
                h = remaining;
            }
            if h.abs() <= 16.0 * f64::EPSILON * self.t.abs().max(f64::MIN_POSITIVE) {
                return Err(IntegrationError::StepUnderflow { t: self.t, h });
            }
            if self.steps >= self.settings.max_steps {
                return Err(IntegrationError::TooManySteps(self.settings.max_steps));
            }
            self.steps += 1;

            let (y_new, k7, err) = self.try_step(h)?;
            let fac11 = err.powf(EXPO);
            if err <= 1.0 {
                let fac = (fac11 / self.fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if self.rejected_last {
                    h_new = dir * h_new.abs().min(h.abs());
                }
                self.fac_old = err.max(1e-4);
                self.rejected_last = false;
                self.t = if last { target } else { self.t + h };
                self.y = y_new;
                self.k1 = k7;
                if !(self.y[0].is_finite() && self.y[1].is_finite()) {
                    return Err(IntegrationError::NonFinite { t: self.t });
                }
                // keep the controller's proposal even across a clipped last step
                if !last || h_new.abs() < self.h.abs() {
                    self.h = h_new;
                }
                if observe(&self.state()).is_break() {
                    return Ok(ControlFlow::Break(()));
                }
                if last {
                    return Ok(ControlFlow::Continue(()));
                }
            } else {
                let shrink = if err.is_finite() {
                    (fac11 / SAFETY).min(1.0 / FAC_MIN)
                } else {
                    1.0 / FAC_MIN
                };
                self.h = h / shrink;
                self.rejected_last = true;
            }
        }
    }

    fn try_step(&mut self, h: f64) -> Result<(Vec2, Vec2, f64), IntegrationError> {
        let (t, y, k1) = (self.t, self.y, self.k1);
        let rhs = &mut self.rhs;
        let k2 = Self::eval(rhs, t + C2 * h, axpy(y, h, &[(A21, k1)]))?;
        let k3 = Self::eval(rhs, t + C3 * h, axpy(y, h, &[(A31, k1), (A32, k2)]))?;
        let k4 = Self::eval(rhs, t + C4 * h, axpy(y, h, &[(A41, k1), (A42, k2), (A43, k3)]))?;
        let k5 = Self::eval(
            rhs,
            t + C5 * h,
            axpy(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]),
        )?;
        let k6 = Self::eval(
            rhs,
            t + h,
            axpy(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]),
        )?;
        let y_new = axpy(y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        let k7 = Self::eval(rhs, t + h, y_new)?;
        let mut err_sq = 0.0;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let r = e / self.scale(i, y[i], y_new[i]);
            err_sq += r * r;
        }
        let err = (0.5 * err_sq).sqrt();
        Ok((y_new, k7, if err.is_nan() { f64::INFINITY } else { err }))
    }
}

fn check_span(s0: &State, t1: f64) -> Result<(), IntegrationError> {
    if !t1.is_finite() || !s0.t.is_finite() {
        return Err(IntegrationError::InvalidSpan { from: s0.t, to: t1 });
    }
    Ok(())
}

/// Integrates from `s0` to `t1` (either direction) and returns the state at
/// `t1`.
pub fn integrate<F>(rhs: F, s0: State, t1: f64, settings: &IntegratorSettings) -> Result<State, IntegrationError>
where
    F: FnMut(&State) -> Result<(f64, f64), DynamicsError>,
{
    integrate_observed(rhs, s0, t1, settings, |_| ControlFlow::Continue(()))
}

/// Like [`integrate`], calling `observe` on every accepted step. If the
/// observer breaks, the state at that step is returned.
pub fn integrate_observed<F, O>(
    rhs: F,
    s0: State,
    t1: f64,
    settings: &IntegratorSettings,
    mut observe: O,
) -> Result<State, IntegrationError>
where
    F: FnMut(&State) -> Result<(f64, f64), DynamicsError>,
    O: FnMut(&State) -> ControlFlow<()>,
{
    check_span(&s0, t1)?;
    let mut stepper = Stepper::new(rhs, s0, settings)?;
    let _ = stepper.advance_to(t1, &mut observe)?;
    Ok(stepper.state())
}

/// Streams `n_samples + 1` equally spaced states (both endpoints included)
/// to `sink` as they are produced. Stops early if `sink` breaks.
pub fn integrate_sampled_with<F, S>(
    rhs: F,
    s0: State,
    t1: f64,
    n_samples: usize,
    settings: &IntegratorSettings,
    mut sink: S,
) -> Result<(), IntegrationError>
where
    F: FnMut(&State) -> Result<(f64, f64), DynamicsError>,
    S: FnMut(&State) -> ControlFlow<()>,
{
    check_span(&s0, t1)?;
    if n_samples == 0 {
        return Err(IntegrationError::InvalidSettings("n_samples must be at least 1"));
    }
    let mut stepper = Stepper::new(rhs, s0, settings)?;
    if sink(&stepper.state()).is_break() {
        return Ok(());
    }
    let span = t1 - s0.t;
    let mut noop = |_: &State| ControlFlow::Continue(());
    for i in 1..=n_samples {
        let target = if i == n_samples {
            t1
        } else {
            s0.t + span * (i as f64 / n_samples as f64)
        };
        let _ = stepper.advance_to(target, &mut noop)?;
        if sink(&stepper.state()).is_break() {
            break;
        }
    }
    Ok(())
}

/// Collects `n_samples + 1` equally spaced states from `s0.t` to `t1`.
pub fn integrate_sampled<F>(
    rhs: F,
    s0: State,
    t1: f64,
    n_samples: usize,
    settings: &IntegratorSettings,
) -> Result<Trajectory, IntegrationError>
where
    F: FnMut(&State) -> Result<(f64, f64), DynamicsError>,
{
    let mut samples = Vec::with_capacity(n_samples + 1);
    integrate_sampled_with(rhs, s0, t1, n_samples, settings, |s| {
        samples.push(*s);
        ControlFlow::Continue(())
    })?;
    Ok(Trajectory { samples, dense: false })
}
