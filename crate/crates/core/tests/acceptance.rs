//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use trapstab::dynamics::{csl_acceleration, csl_rms_displacement, shape_factor};
use trapstab::floquet::{floquet_beta, transfer_matrix};
use trapstab::params::dehmelt_index;
use trapstab::scan::{find_boundary_q, scan_aq, scan_exclusion};
use trapstab::{
    Classification, Construction, Criterion, CslMathieuSystem, CslParams, GridSpec, IntegratorSettings, MathieuParams,
    MonodromyPolicy, ShapeMode, TransferMatrix,
};

const OMEGA: f64 = 1e8;
const REF_A: f64 = -0.000526947;
const REF_Q: f64 = 0.0326158;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn homogeneous_matrix(a: f64, q: f64, construction: Construction) -> Result<TransferMatrix, String> {
    let p = MathieuParams::new(a, q, OMEGA).map_err(|e| e.to_string())?;
    let sys = CslMathieuSystem::homogeneous(p);
    let policy = MonodromyPolicy::for_omega(OMEGA, construction);
    transfer_matrix(&sys, &policy, &IntegratorSettings::default()).map_err(|e| e.to_string())
}

fn boundary_q() -> Outcome {
    let start = Instant::now();
    let q = find_boundary_q(0.0, 0.5, 1.2, OMEGA, &IntegratorSettings::default(), 1e-9).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    check(
        (0.9075..=0.9085).contains(&q) && took < Duration::from_secs(10),
        format!("q* = {q:.9} in {took:.2?}"),
    )
}

fn harmonic_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for a in [0.04, 0.2, 0.64] {
        let tr = homogeneous_matrix(a, 0.0, Construction::Homogeneous)?.trace();
        worst = worst.max((tr - 2.0 * (PI * f64::sqrt(a)).cos()).abs());
    }
    check(worst < 1e-7, format!("max |Tr - 2cos(pi sqrt a)| = {worst:.3e}"))
}

fn det_invariant() -> Outcome {
    let n = 50;
    let mut worst = 0.0f64;
    for iy in 0..n {
        for ix in 0..n {
            let a = -1.0 + 2.0 * (iy as f64 + 0.5) / n as f64;
            let q = -1.0 + 2.0 * (ix as f64 + 0.5) / n as f64;
            let m = homogeneous_matrix(a, q, Construction::Homogeneous)?;
            worst = worst.max((m.det() - 1.0).abs());
        }
    }
    check(
        worst < 1e-8,
        format!("max |det - 1| = {worst:.3e} over {} cells", n * n),
    )
}

fn reduction() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x7a5e);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = rng.random_range(-1.0..1.0);
        let q = rng.random_range(-1.0..1.0);
        let h = homogeneous_matrix(a, q, Construction::Homogeneous)?;
        let f = homogeneous_matrix(a, q, Construction::Forced)?;
        for (x, y) in [(h.m11, f.m11), (h.m12, f.m12), (h.m21, f.m21), (h.m22, f.m22)] {
            let rel = if x == y {
                0.0
            } else {
                (x - y).abs() / x.abs().max(y.abs())
            };
            worst = worst.max(rel);
        }
    }
    check(
        worst < 1e-12,
        format!("max entry-wise relative difference = {worst:.3e}"),
    )
}

fn reference_point() -> Outcome {
    let m = homogeneous_matrix(REF_A, REF_Q, Construction::Forced)?;
    let verdict = m.classify();
    let p = MathieuParams::new(REF_A, REF_Q, OMEGA).map_err(|e| e.to_string())?;
    let mu = dehmelt_index(&p).map_err(|e| e.to_string())?;
    let beta = floquet_beta(m.trace()).ok_or("trace outside [-2, 2]")?;
    let rel = (beta - mu).abs() / mu;
    check(
        verdict.classification == Classification::Stable && rel < 0.02,
        format!(
            "{} (Tr = {:.8}), beta = {beta:.6e}, mu = {mu:.6e}, rel = {:.2}%",
            verdict.classification,
            m.trace(),
            rel * 100.0
        ),
    )
}

fn exclusion_markers() -> Outcome {
    let spec = GridSpec::default_exclusion();
    let policy = MonodromyPolicy::default_for(OMEGA);
    let settings = IntegratorSettings::default();
    let base = CslParams::off();
    let scan = scan_exclusion(REF_A, REF_Q, OMEGA, &spec, &base, &policy, Criterion::Trace, &settings)
        .map_err(|e| e.to_string())?;

    let mut notes = Vec::new();
    let mut ok = true;
    for (label, lambda) in [("GRW", 1e-17f64), ("Adler", 1e-8)] {
        let (ix, iy) = scan.locate(-7.0, lambda.log10()).ok_or("marker outside grid")?;
        let stable = scan.classification(ix, iy).is_stable();
        ok &= stable;
        notes.push(format!("{label} {}", if stable { "allowed" } else { "excluded" }));
    }

    // the grid is logarithmic, so its lowest row stands in for λ → 0; λ = 0 itself is checked per column too
    let bottom_allowed = (0..spec.nx).all(|ix| scan.classification(ix, 0).is_stable());
    let zero_allowed = (0..spec.nx).try_fold(true, |acc, ix| -> Result<bool, String> {
        let csl = CslParams::new(
            0.0,
            10f64.powf(spec.x_center(ix)),
            10f64.powf(spec.x_center(ix)),
            ShapeMode::UnitF,
        )
        .map_err(|e| e.to_string())?;
        let p = MathieuParams::new(REF_A, REF_Q, OMEGA).map_err(|e| e.to_string())?;
        let sys = CslMathieuSystem::new(p, csl).map_err(|e| e.to_string())?;
        let m = transfer_matrix(&sys, &policy, &settings).map_err(|e| e.to_string())?;
        Ok(acc && m.classify().classification.is_stable())
    })?;
    ok &= bottom_allowed && zero_allowed;
    notes.push(format!("lambda->0 row allowed: {}", bottom_allowed && zero_allowed));

    // once a column turns excluded it must stay excluded for every larger λ
    let mut deviations = Vec::new();
    for ix in 0..spec.nx {
        let first = (0..spec.ny).find(|&iy| !scan.classification(ix, iy).is_stable());
        if let Some(first) = first {
            let back = (first..spec.ny)
                .filter(|&iy| scan.classification(ix, iy).is_stable())
                .count();
            if back > 0 {
                deviations.push(format!(
                    "log10 rc = {:.3}: {back} allowed above the edge",
                    spec.x_center(ix)
                ));
            }
        }
    }
    for d in &deviations {
        println!("    monotonicity deviation: {d}");
    }
    ok &= deviations.is_empty();
    let excluded = spec.len() - scan.count_stable();
    notes.push(format!(
        "{excluded} excluded cells, {} monotonicity deviations",
        deviations.len()
    ));
    check(ok, notes.join("; "))
}

fn no_visible_change() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .map_err(|e| e.to_string())?;
    let spec = GridSpec::default_aq().with_size(200, 200);
    let policy = MonodromyPolicy::default_for(OMEGA);
    let settings = IntegratorSettings::default();
    let start = Instant::now();
    let (with, without) = pool.install(|| {
        let with = scan_aq(&spec, &CslParams::adler(), OMEGA, &policy, Criterion::Trace, &settings);
        let without = scan_aq(&spec, &CslParams::off(), OMEGA, &policy, Criterion::Trace, &settings);
        (with, without)
    });
    let took = start.elapsed();
    let (with, without) = (with.map_err(|e| e.to_string())?, without.map_err(|e| e.to_string())?);
    let (mut differing, mut interior) = (0, 0);
    for iy in 0..spec.ny {
        for ix in 0..spec.nx {
            if with.classification(ix, iy) != without.classification(ix, iy) {
                differing += 1;
                if !without.is_boundary_adjacent(ix, iy) {
                    interior += 1;
                }
            }
        }
    }
    check(
        interior == 0 && took < Duration::from_secs(300),
        format!("{differing} differing cells, {interior} away from a boundary, {took:.2?}"),
    )
}

fn shape_factor_values() -> Outcome {
    let f1 = shape_factor(1.0, 1.0).map_err(|e| e.to_string())?;
    let f_small = shape_factor(1e-4, 1.0).map_err(|e| e.to_string())?;
    check(
        (f1 - 0.621825).abs() <= 1e-5 && (f_small - 1.0).abs() <= 1e-6,
        format!("f(1) = {f1:.7}, f(1e-4) = {f_small:.12}"),
    )
}

fn cli_determinism() -> Outcome {
    let scan = |threads: &str| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_trapstab"))
            .args([
                "--threads",
                threads,
                "--lambda",
                "1e-8",
                "stability-scan",
                "--nx",
                "80",
                "--ny",
                "60",
            ])
            .env_remove("TRAPSTAB_THREADS")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        Ok(out.stdout)
    };
    let one = scan("1")?;
    let eight = scan("8")?;
    check(
        one == eight,
        format!("{} bytes, identical: {}", one.len(), one == eight),
    )
}

/// `(1+h)^{3/2} - 2 + (1-h)^{3/2}` over `h²` for `h = 10^-6`, evaluated in
/// exact integer arithmetic to 18 decimals.
fn exact_second_difference() -> f64 {
    const K: u32 = 40;
    let ten = BigInt::from(10);
    let million = BigInt::from(1_000_000);
    let pow = |e: u32| ten.pow(e);
    // (1 ± h)^{3/2} · 10^{K+6} = (10^6 ± 1) · isqrt((10^6 ± 1) · 10^{2K-6})
    let term = |n: BigInt| &n * (&n * pow(2 * K - 6)).sqrt();
    let num = term(&million + 1) + term(&million - 1) - BigInt::from(2) * &million * pow(K);
    // divide by h² = 10^-12 and rescale from 10^{K+6} to 10^18
    let scaled = num * pow(18) / pow(K - 6);
    scaled.to_string().parse::<f64>().unwrap() / 1e18
}

fn csl_consistency() -> Outcome {
    let p = MathieuParams::new(0.0, 0.0, OMEGA).map_err(|e| e.to_string())?;
    let sys = CslMathieuSystem::new(p, CslParams::adler()).map_err(|e| e.to_string())?;
    let c = sys.csl_prefactor().map_err(|e| e.to_string())?;
    let h = 1e-6;
    let dx = |t: f64| csl_rms_displacement(t, &sys).map_err(|e| e.to_string());

    // the drift is the prefactor times t^{3/2} at each stencil node
    let mut node_err = 0.0f64;
    for t in [1.0 - h, 1.0, 1.0 + h] {
        node_err = node_err.max((dx(t)? - c * t * t.sqrt()).abs() / (c * t * t.sqrt()));
    }
    let stencil = c * exact_second_difference();
    let acc = csl_acceleration(1.0, &sys).map_err(|e| e.to_string())?;
    let rel = (stencil - acc).abs() / acc.abs();

    let rounded = (dx(1.0 + h)? - 2.0 * dx(1.0)? + dx(1.0 - h)?) / (h * h);
    println!(
        "    plain f64 stencil for reference: {rounded:.6e} (rel {:.1e}, dominated by rounding)",
        (rounded - acc).abs() / acc.abs()
    );
    check(
        rel < 1e-6 && node_err < 1e-15,
        format!("exact stencil {stencil:.12e} vs acceleration {acc:.12e}, rel = {rel:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Check; 10] = [
        ("boundary q at a = 0", boundary_q),
        ("harmonic trace oracle", harmonic_oracle),
        ("det invariant on 50x50 grid", det_invariant),
        ("forced construction reduces at lambda = 0", reduction),
        ("reference point stable, beta vs mu", reference_point),
        ("exclusion markers and lambda structure", exclusion_markers),
        ("Adler leaves the chart unchanged", no_visible_change),
        ("shape factor values", shape_factor_values),
        ("CLI thread-count determinism", cli_determinism),
        ("CSL drift and acceleration consistent", csl_consistency),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS AC{:<2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL AC{:<2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
