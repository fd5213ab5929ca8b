//! One-period transfer matrices and the trace stability criterion.
//!
//! Two linearly independent solutions `u1`, `u2` are integrated across one
//! RF period `T = 2π/Ω` starting at `t_start`, and
//! `M = [u(t_start+T)] · [u(t_start)]^{-1}`. The [`Construction`] picks
//! whether those solutions obey the homogeneous Mathieu equation (the strict
//! Floquet monodromy, independent of λ) or the full CSL-forced equation, in
//! which case `M` also absorbs the forced response and depends on the window
//! placement and on the initial-condition scales.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{ControlFlow, Mul};

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::{rhs_csl, rhs_homogeneous, CslMathieuSystem, DynamicsError, State};
use crate::integrator::{integrate, integrate_observed, IntegrationError, IntegratorSettings};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloquetError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),

    #[error(transparent)]
    Integration(#[from] IntegrationError),

    #[error("invalid monodromy policy: {0}")]
    InvalidPolicy(&'static str),

    #[error("initial solution matrix is singular")]
    SingularInitialMatrix,

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

/// 2×2 propagator of `(x, v)`; `m12` carries seconds and `m21` 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl TransferMatrix {
    pub const IDENTITY: Self = Self {
        m11: 1.0,
        m12: 0.0,
        m21: 0.0,
        m22: 1.0,
    };

    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn half_trace(&self) -> f64 {
        0.5 * self.trace()
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn is_finite(&self) -> bool {
        [self.m11, self.m12, self.m21, self.m22].iter().all(|v| v.is_finite())
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self::new(
            self.m22 / det,
            -self.m12 / det,
            -self.m21 / det,
            self.m11 / det,
        ))
    }

    pub fn apply(&self, x: f64, v: f64) -> (f64, f64) {
        (self.m11 * x + self.m12 * v, self.m21 * x + self.m22 * v)
    }

    /// `M^n` by repeated squaring.
    pub fn pow(&self, mut n: u32) -> Self {
        let mut base = *self;
        let mut acc = Self::IDENTITY;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    pub fn eigenvalues(&self) -> [Complex64; 2] {
        eigenvalues(self)
    }

    pub fn classify(&self) -> StabilityVerdict {
        classify(self)
    }
}

impl Mul for TransferMatrix {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Stable,
    Unstable,
}

impl Classification {
    pub fn is_stable(self) -> bool {
        self == Classification::Stable
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Stable => "stable",
            Classification::Unstable => "unstable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictMethod {
    TraceCriterion,
    Boundedness,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub trace: f64,
    pub s_half_trace: f64,
    pub eig_moduli: [f64; 2],
    pub classification: Classification,
    pub method: VerdictMethod,
    /// `max|x| / x_c` over the run, boundedness verdicts only.
    pub growth: Option<f64>,
}

/// Roots of `λ² - Tr(M) λ + det(M) = 0`. For `s² ≤ det` they are the
/// complex pair `s ± i√(det - s²)`, otherwise the real pair `s ± √(s² - det)`.
pub fn eigenvalues(m: &TransferMatrix) -> [Complex64; 2] {
    let s = m.half_trace();
    let disc = s * s - m.det();
    if disc < 0.0 {
        let w = (-disc).sqrt();
        [Complex64::new(s, w), Complex64::new(s, -w)]
    } else {
        let w = disc.sqrt();
        [Complex64::new(s + w, 0.0), Complex64::new(s - w, 0.0)]
    }
}

/// Stable iff `|Tr(M)| ≤ 2`; the boundary itself counts as stable.
pub fn classify(m: &TransferMatrix) -> StabilityVerdict {
    let trace = m.trace();
    let [l1, l2] = eigenvalues(m);
    let classification = if trace.abs() <= 2.0 {
        Classification::Stable
    } else {
        Classification::Unstable
    };
    StabilityVerdict {
        trace,
        s_half_trace: 0.5 * trace,
        eig_moduli: [l1.norm(), l2.norm()],
        classification,
        method: VerdictMethod::TraceCriterion,
        growth: None,
    }
}

/// Floquet index β from `Tr(M) = 2 cos(πβ)`, defined for `|Tr(M)| ≤ 2`.
pub fn floquet_beta(trace: f64) -> Option<f64> {
    (trace.abs() <= 2.0).then(|| (0.5 * trace).acos() / PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Construction {
    /// Solutions of the homogeneous Mathieu equation.
    Homogeneous,
    /// Solutions of the full CSL-forced equation.
    #[default]
    Forced,
}

/// Window placement and initial-condition scales for the two fundamental
/// solutions: `u1` starts at `(x_c, 0)` and `u2` at `(0, v_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyPolicy {
    /// s
    pub t_start: f64,
    /// m
    pub ic_scale_x: f64,
    /// m/s
    pub ic_scale_v: f64,
    pub construction: Construction,
}

pub const DEFAULT_IC_SCALE_X: f64 = 1e-6;

impl MonodromyPolicy {
    /// `t_start = T`, `x_c = 1 µm`, `v_c = x_c·Ω`.
    pub fn default_for(omega: f64) -> Self {
        Self::for_omega(omega, Construction::Forced)
    }

    pub fn homogeneous(omega: f64) -> Self {
        Self::for_omega(omega, Construction::Homogeneous)
    }

    pub fn for_omega(omega: f64, construction: Construction) -> Self {
        Self {
            t_start: 2.0 * PI / omega,
            ic_scale_x: DEFAULT_IC_SCALE_X,
            ic_scale_v: DEFAULT_IC_SCALE_X * omega,
            construction,
        }
    }

    pub fn with_construction(self, construction: Construction) -> Self {
        Self { construction, ..self }
    }

    fn uses_forcing(&self, sys: &CslMathieuSystem) -> bool {
        self.construction == Construction::Forced && sys.is_forced()
    }

    pub fn validate(&self, sys: &CslMathieuSystem) -> Result<(), FloquetError> {
        if !(self.t_start >= 0.0 && self.t_start.is_finite()) {
            return Err(FloquetError::InvalidPolicy("t_start must be finite and non-negative"));
        }
        if !(self.ic_scale_x > 0.0 && self.ic_scale_x.is_finite()) {
            return Err(FloquetError::InvalidPolicy("ic_scale_x must be positive"));
        }
        if !(self.ic_scale_v > 0.0 && self.ic_scale_v.is_finite()) {
            return Err(FloquetError::InvalidPolicy("ic_scale_v must be positive"));
        }
        if self.uses_forcing(sys) && self.t_start <= 0.0 {
            return Err(FloquetError::InvalidPolicy("forced construction needs t_start > 0"));
        }
        Ok(())
    }
}

/// How a single point is classified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// `|Tr(M)| ≤ 2` with the policy's construction.
    Trace,
    /// Direct integration of the full equation over `n_periods`.
    Bounded { n_periods: usize, growth_limit: f64 },
}

fn oscillatory_settings(sys: &CslMathieuSystem, settings: &IntegratorSettings) -> IntegratorSettings {
    settings.with_max_step(sys.mathieu.period() / 20.0)
}

fn window_matrix(
    sys: &CslMathieuSystem,
    policy: &MonodromyPolicy,
    t0: f64,
    forced: bool,
    settings: &IntegratorSettings,
) -> Result<TransferMatrix, FloquetError> {
    let t1 = t0 + sys.mathieu.period();
    let (xc, vc) = (policy.ic_scale_x, policy.ic_scale_v);
    let initial = TransferMatrix::new(xc, 0.0, 0.0, vc);
    let initial_inv = initial.inverse().ok_or(FloquetError::SingularInitialMatrix)?;

    let run = |x: f64, v: f64| -> Result<State, FloquetError> {
        let s0 = State::new(x, v, t0);
        let end = if forced {
            integrate(|s| rhs_csl(s, sys), s0, t1, settings)?
        } else {
            let p = sys.mathieu;
            integrate(|s| Ok(rhs_homogeneous(s, &p)), s0, t1, settings)?
        };
        Ok(end)
    };
    let u1 = run(initial.m11, initial.m21)?;
    let u2 = run(initial.m12, initial.m22)?;
    let end = TransferMatrix::new(u1.x, u2.x, u1.v, u2.v);
    Ok(end * initial_inv)
}

/// One-period transfer matrix over `[t_start, t_start + T]`.
pub fn transfer_matrix(
    sys: &CslMathieuSystem,
    policy: &MonodromyPolicy,
    settings: &IntegratorSettings,
) -> Result<TransferMatrix, FloquetError> {
    sys.validate()?;
    policy.validate(sys)?;
    let settings = oscillatory_settings(sys, settings);
    window_matrix(sys, policy, policy.t_start, policy.uses_forcing(sys), &settings)
}

/// Transfer over `n` periods: `M^n` for the homogeneous construction, the
/// ordered product `M_n ··· M_1` of consecutive windows when forced.
pub fn multi_period_transfer(
    sys: &CslMathieuSystem,
    policy: &MonodromyPolicy,
    n: u32,
    settings: &IntegratorSettings,
) -> Result<TransferMatrix, FloquetError> {
    if n == 0 {
        return Err(FloquetError::InvalidArgument("n must be at least 1"));
    }
    sys.validate()?;
    policy.validate(sys)?;
    let settings = oscillatory_settings(sys, settings);
    match policy.construction {
        Construction::Homogeneous => Ok(window_matrix(sys, policy, policy.t_start, false, &settings)?.pow(n)),
        Construction::Forced => {
            let forced = policy.uses_forcing(sys);
            let period = sys.mathieu.period();
            let mut acc = TransferMatrix::IDENTITY;
            for k in 0..n {
                let t0 = policy.t_start + f64::from(k) * period;
                acc = window_matrix(sys, policy, t0, forced, &settings)? * acc;
            }
            Ok(acc)
        }
    }
}

/// Integrates the full equation from `(x_c, 0)` at `t_start` for
/// `n_periods` periods. Unstable iff `max|x| > growth_limit · x_c`.
///
/// The trace fields come from the one-window matrix of the policy's
/// construction; only the classification comes from the trajectory.
pub fn empirical_boundedness(
    sys: &CslMathieuSystem,
    policy: &MonodromyPolicy,
    n_periods: usize,
    growth_limit: f64,
    settings: &IntegratorSettings,
) -> Result<StabilityVerdict, FloquetError> {
    if n_periods == 0 {
        return Err(FloquetError::InvalidArgument("n_periods must be at least 1"));
    }
    if !(growth_limit > 1.0) {
        return Err(FloquetError::InvalidArgument("growth_limit must exceed 1"));
    }
    sys.validate()?;
    policy.validate(sys)?;
    if sys.is_forced() && policy.t_start <= 0.0 {
        return Err(FloquetError::InvalidPolicy("forced integration needs t_start > 0"));
    }
    let settings = oscillatory_settings(sys, settings);
    let one_window = window_matrix(sys, policy, policy.t_start, policy.uses_forcing(sys), &settings)?;

    let xc = policy.ic_scale_x;
    let limit = growth_limit * xc;
    let s0 = State::new(xc, 0.0, policy.t_start);
    let t1 = policy.t_start + n_periods as f64 * sys.mathieu.period();
    let mut max_abs = xc;
    let observe = |s: &State| {
        max_abs = max_abs.max(s.x.abs());
        if max_abs > limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    };
    if sys.is_forced() {
        integrate_observed(|s| rhs_csl(s, sys), s0, t1, &settings, observe)?;
    } else {
        let p = sys.mathieu;
        integrate_observed(|s| Ok(rhs_homogeneous(s, &p)), s0, t1, &settings, observe)?;
    }

    let mut verdict = classify(&one_window);
    verdict.method = VerdictMethod::Boundedness;
    verdict.growth = Some(max_abs / xc);
    verdict.classification = if max_abs > limit {
        Classification::Unstable
    } else {
        Classification::Stable
    };
    Ok(verdict)
}

/// Classifies one point under `criterion`.
pub fn evaluate(
    sys: &CslMathieuSystem,
    policy: &MonodromyPolicy,
    criterion: Criterion,
    settings: &IntegratorSettings,
) -> Result<StabilityVerdict, FloquetError> {
    match criterion {
        Criterion::Trace => Ok(classify(&transfer_matrix(sys, policy, settings)?)),
        Criterion::Bounded {
            n_periods,
            growth_limit,
        } => empirical_boundedness(sys, policy, n_periods, growth_limit, settings),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::CslParams;
    use crate::params::{dehmelt_index, MathieuParams};
    use proptest::prelude::*;

    const OMEGA: f64 = 1e8;
    const REF_A: f64 = -0.000526947;
    const REF_Q: f64 = 0.0326158;

    fn system(a: f64, q: f64) -> CslMathieuSystem {
        CslMathieuSystem::homogeneous(MathieuParams::new(a, q, OMEGA).unwrap())
    }

    fn hom_trace(a: f64, q: f64) -> f64 {
        let sys = system(a, q);
        transfer_matrix(
            &sys,
            &MonodromyPolicy::homogeneous(OMEGA),
            &IntegratorSettings::default(),
        )
        .unwrap()
        .trace()
    }

    #[test]
    fn free_particle_matrix() {
        let sys = system(0.0, 0.0);
        let m = transfer_matrix(
            &sys,
            &MonodromyPolicy::homogeneous(OMEGA),
            &IntegratorSettings::default(),
        )
        .unwrap();
        let period = 2.0 * PI / OMEGA;
        assert!((m.m11 - 1.0).abs() < 1e-12);
        assert!((m.m12 - period).abs() < 1e-12 * period);
        assert!(m.m21.abs() < 1e-6);
        assert!((m.m22 - 1.0).abs() < 1e-12);
        assert!((m.trace() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_coefficient_trace() {
        let t = hom_trace(0.2, 0.0);
        assert!((t - 2.0 * (PI * 0.2f64.sqrt()).cos()).abs() < 1e-8);
        assert!((t - 0.330_149).abs() < 1e-5);
    }

    #[test]
    fn reference_point_is_stable() {
        let t = hom_trace(REF_A, REF_Q);
        assert!(t.abs() <= 2.0, "trace = {t}");
        let beta = floquet_beta(t).unwrap();
        let mu = dehmelt_index(&MathieuParams::new(REF_A, REF_Q, OMEGA).unwrap()).unwrap();
        assert!(((beta - mu) / mu).abs() < 0.02, "beta {beta} mu {mu}");
    }

    #[test]
    fn eigenvalue_cases() {
        let [a, b] = eigenvalues(&TransferMatrix::IDENTITY);
        assert_eq!((a, b), (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)));

        let quarter = TransferMatrix::new(0.0, -1.0, 1.0, 0.0);
        let [a, b] = eigenvalues(&quarter);
        assert!((a - Complex64::i()).norm() < 1e-15);
        assert!((b + Complex64::i()).norm() < 1e-15);

        // lambda^2 - 2.5 lambda + 1 = 0
        let m = TransferMatrix::new(2.0, 0.0, 0.0, 0.5);
        let [a, b] = eigenvalues(&m);
        assert!((a.re - 2.0).abs() < 1e-15 && a.im == 0.0);
        assert!((b.re - 0.5).abs() < 1e-15 && b.im == 0.0);
        let v = classify(&m);
        assert_eq!(v.classification, Classification::Unstable);
        assert!((v.s_half_trace - 1.25).abs() < 1e-15);
    }

    #[test]
    fn classify_threshold() {
        let free = TransferMatrix::new(1.0, 0.1, 0.0, 1.0);
        assert_eq!(classify(&free).classification, Classification::Stable);
        let over = TransferMatrix::new(1.0, 0.0, 0.0, 1.0001);
        assert_eq!(classify(&over).classification, Classification::Unstable);
        let neg = TransferMatrix::new(-1.0, 0.0, 0.0, -1.0);
        assert_eq!(classify(&neg).classification, Classification::Stable);
    }

    #[test]
    fn beyond_first_region_is_unstable() {
        assert!(hom_trace(0.0, 1.0).abs() > 2.0);
        assert!(hom_trace(0.0, 0.5).abs() <= 2.0);
    }

    #[test]
    fn multi_period_n1_and_powers() {
        let sys = system(0.2, 0.0);
        let settings = IntegratorSettings::default();
        for construction in [Construction::Homogeneous, Construction::Forced] {
            let policy = MonodromyPolicy::for_omega(OMEGA, construction);
            let one = transfer_matrix(&sys, &policy, &settings).unwrap();
            let n1 = multi_period_transfer(&sys, &policy, 1, &settings).unwrap();
            assert_eq!(one, n1);
            let n3 = multi_period_transfer(&sys, &policy, 3, &settings).unwrap();
            let expected = 2.0 * (3.0 * PI * 0.2f64.sqrt()).cos();
            assert!((n3.trace() - expected).abs() < 1e-7, "{construction:?}: {}", n3.trace());
            assert!((n3.det() - 1.0).abs() < 3e-8);
        }
        assert!(multi_period_transfer(&sys, &MonodromyPolicy::homogeneous(OMEGA), 0, &settings).is_err());
    }

    #[test]
    fn forced_product_matches_power_without_collapse() {
        let sys = system(0.1, 0.4);
        let settings = IntegratorSettings::default();
        let forced = multi_period_transfer(&sys, &MonodromyPolicy::default_for(OMEGA), 4, &settings).unwrap();
        let power = transfer_matrix(&sys, &MonodromyPolicy::homogeneous(OMEGA), &settings)
            .unwrap()
            .pow(4);
        assert!((forced.m11 - power.m11).abs() < 1e-7);
        assert!((forced.m22 - power.m22).abs() < 1e-7);
        assert!((forced.trace() - power.trace()).abs() < 1e-7);
    }

    #[test]
    fn forced_construction_with_collapse_differs() {
        let p = MathieuParams::new(REF_A, REF_Q, OMEGA).unwrap();
        let csl = CslParams::new(1e2, 1e-9, 1e-9, Default::default()).unwrap();
        let sys = CslMathieuSystem::new(p, csl).unwrap();
        let settings = IntegratorSettings::default();
        let forced = transfer_matrix(&sys, &MonodromyPolicy::default_for(OMEGA), &settings).unwrap();
        let hom = transfer_matrix(&sys, &MonodromyPolicy::homogeneous(OMEGA), &settings).unwrap();
        // forced trace shifts by ~2e-3 at these parameters
        assert!((forced.trace() - hom.trace()) > 1e-3);
        assert_eq!(classify(&forced).classification, Classification::Unstable);
        assert_eq!(classify(&hom).classification, Classification::Stable);
    }

    #[test]
    fn forced_policy_needs_positive_start() {
        let p = MathieuParams::new(0.1, 0.1, OMEGA).unwrap();
        let sys = CslMathieuSystem::new(p, CslParams::adler()).unwrap();
        let mut policy = MonodromyPolicy::default_for(OMEGA);
        policy.t_start = 0.0;
        let err = transfer_matrix(&sys, &policy, &IntegratorSettings::default()).unwrap_err();
        assert!(matches!(err, FloquetError::InvalidPolicy(_)));
        // fine without collapse
        assert!(transfer_matrix(&system(0.1, 0.1), &policy, &IntegratorSettings::default()).is_ok());
    }

    #[test]
    fn boundedness_cases() {
        let settings = IntegratorSettings::default();
        let policy = MonodromyPolicy::default_for(OMEGA);
        let v = empirical_boundedness(&system(0.2, 0.0), &policy, 50, 10.0, &settings).unwrap();
        assert_eq!(v.classification, Classification::Stable);
        assert_eq!(v.method, VerdictMethod::Boundedness);

        let v = empirical_boundedness(&system(-0.001, 0.0), &policy, 200, 1e3, &settings).unwrap();
        assert_eq!(v.classification, Classification::Unstable);
        assert!(v.growth.unwrap() > 1e3);

        let v = empirical_boundedness(&system(REF_A, REF_Q), &policy, 1000, 1e3, &settings).unwrap();
        assert_eq!(v.classification, Classification::Stable);

        assert!(empirical_boundedness(&system(0.2, 0.0), &policy, 0, 10.0, &settings).is_err());
        assert!(empirical_boundedness(&system(0.2, 0.0), &policy, 5, 1.0, &settings).is_err());
    }

    #[test]
    fn start_time_and_ic_scale_invariance() {
        let sys = system(0.3, 0.6);
        let settings = IntegratorSettings::default();
        let base = transfer_matrix(&sys, &MonodromyPolicy::homogeneous(OMEGA), &settings).unwrap();
        let mut shifted = MonodromyPolicy::homogeneous(OMEGA);
        shifted.t_start = 0.37 * sys.mathieu.period();
        let m = transfer_matrix(&sys, &shifted, &settings).unwrap();
        assert!((m.trace() - base.trace()).abs() < 1e-8);

        let mut scaled = MonodromyPolicy::homogeneous(OMEGA);
        scaled.ic_scale_x = 3e-3;
        scaled.ic_scale_v = 7.0;
        let m = transfer_matrix(&sys, &scaled, &settings).unwrap();
        assert!((m.m11 - base.m11).abs() < 1e-8);
        assert!((m.m22 - base.m22).abs() < 1e-8);
        assert!(((m.m12 - base.m12) / base.m12).abs() < 1e-8);
        assert!(((m.m21 - base.m21) / base.m21).abs() < 1e-8);
    }

    #[test]
    fn q_sign_symmetry() {
        for &(a, q) in &[(0.1, 0.3), (0.5, 0.9), (-0.2, 0.6), (0.7, 0.2), (0.0, 1.1)] {
            let plus = hom_trace(a, q);
            let minus = hom_trace(a, -q);
            assert!((plus - minus).abs() < 1e-7, "({a}, {q}): {plus} vs {minus}");
        }
    }

    #[test]
    fn pow_matches_repeated_product() {
        let m = TransferMatrix::new(0.9, 0.2, -0.3, 1.1);
        let mut acc = TransferMatrix::IDENTITY;
        for n in 0..7 {
            let p = m.pow(n);
            assert!((p.m11 - acc.m11).abs() < 1e-12 && (p.m21 - acc.m21).abs() < 1e-12);
            acc = acc * m;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn det_one_without_collapse(a in -1.0..1.0f64, q in -1.0..1.0f64) {
            let sys = system(a, q);
            let m = transfer_matrix(&sys, &MonodromyPolicy::homogeneous(OMEGA), &IntegratorSettings::default()).unwrap();
            prop_assert!((m.det() - 1.0).abs() <= 1e-8);
            // criterion equivalence given det ~ 1
            let v = classify(&m);
            let max_mod = v.eig_moduli[0].max(v.eig_moduli[1]);
            prop_assert_eq!(v.classification.is_stable(), max_mod <= 1.0 + 1e-6);
        }
    }
}
