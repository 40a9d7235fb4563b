//! Named property checks over the built-in problems: closed-form prox against
//! the brute-force oracle, envelope identities, Lipschitz and curvature
//! bounds, instability fixtures, escape experiments, and the model-based
//! certificates. The CLI `verify` subcommand and the acceptance suite both
//! drive this module.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    cone_dynamics_check, escape_experiment, EscapeConfig, InitSampler, TrialStatus,
};
use crate::error::Error;
use crate::matrix::Mat;
use crate::mba::{
    mba_run, rate_bound_check, validate_params, ModelOracle, CERT_SLACK, REL_ERROR_SLACK,
};
use crate::problems::{
    abs_regularizer, absym, absym_composite, absym_manifold_spec, absym_split, brute_force_prox,
    pathological, soft_threshold, tilt, ProblemOracle,
};
use crate::proxengine::{
    moreau_grad, moreau_value, prox, prox_linear_step, IterationMap, ProxParams,
};
use crate::spectra::{
    check_mor_smooth_inequality_with_step, classify_fixed_point, eigen_residual, eigenvalues,
    fd_jacobian, verify_reduced_jacobian, StabilityClass,
};

/// Outcome of one named check. `slack` is the margin left under the check's
/// tolerance; nonnegative iff the check passed (except where noted in
/// `detail`).
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub slack: f64,
    pub detail: String,
    pub elapsed_ms: u128,
}

/// Knobs shared by the finite-difference checks.
#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Overrides every finite-difference step (Jacobians, envelope gradient
    /// probes, envelope Hessians). `None` keeps the per-check defaults.
    pub fd_step: Option<f64>,
}

type CheckFn = fn(&VerifyOptions) -> (bool, f64, String);

const CHECKS: &[(&str, CheckFn)] = &[
    ("brute_force_prox", check_brute_force_prox),
    ("tilt_identity", check_tilt_identity),
    ("subgrad_inequality", check_subgrad_inequality),
    ("moreau_gradient_identity", check_moreau_gradient_identity),
    ("prox_lipschitz", check_prox_lipschitz),
    ("envelope_sandwich", check_envelope_sandwich),
    ("envelope_descent", check_envelope_descent),
    ("cone_dynamics", check_cone_dynamics),
    ("cone_invariance", check_cone_invariance),
    ("instability_fixtures", check_instability_fixtures),
    ("reduced_jacobian", check_reduced_jacobian),
    ("mor_smooth", check_mor_smooth),
    ("eigen", check_eigen),
    ("damped_spectrum_shift", check_damped_spectrum_shift),
    ("fixed_points_coincide", check_fixed_points_coincide),
    ("escape_absym_split", check_escape_absym_split),
    ("cone_attraction", check_cone_attraction),
    ("mba_certificates", check_mba_certificates),
    ("determinism", check_determinism),
];

/// Names of all registered checks, in execution order.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

/// Run every check whose name contains `only` (all checks when `None`).
pub fn run_checks(only: Option<&str>, opts: &VerifyOptions) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .filter(|(name, _)| only.is_none_or(|f| name.contains(f)))
        .map(|(name, check)| {
            let start = Instant::now();
            let (passed, slack, detail) = check(opts);
            CheckResult {
                name: (*name).into(),
                passed,
                slack,
                detail,
                elapsed_ms: start.elapsed().as_millis(),
            }
        })
        .collect()
}

fn rng_for(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + salt)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Built-ins carrying an exact prox, with the μ each is exercised at.
fn prox_catalog() -> Vec<(&'static str, ProblemOracle, f64)> {
    vec![
        ("pathological:rho=2", pathological(2.0), 1.0 / 6.0),
        ("absym", absym(), 0.25),
        ("absreg", abs_regularizer(), 0.25),
        ("tilted-absym", tilt(&absym(), &[0.3, 0.1]).unwrap(), 0.25),
        ("composite-h", absym_composite().h().clone(), 0.25),
    ]
}

fn check_brute_force_prox(_opts: &VerifyOptions) -> (bool, f64, String) {
    const TOL: f64 = 1e-6;
    const POINTS: usize = 1000;
    let mut worst = 0.0f64;
    let mut worst_case = String::new();
    for (name, f, mu) in prox_catalog() {
        let mut rng = rng_for(1);
        for _ in 0..POINTS {
            let x = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
            let exact = f.prox_exact(&x, mu).expect("catalog entries carry exact proxes");
            let brute = match brute_force_prox(&|p: &[f64]| f.value(p), &x, mu) {
                Ok(b) => b,
                Err(e) => return (false, f64::NEG_INFINITY, format!("{name}: {e}")),
            };
            let d = dist(&exact, &brute);
            if d > worst {
                worst = d;
                worst_case = format!("{name} at ({:.3}, {:.3})", x[0], x[1]);
            }
        }
    }
    (
        worst <= TOL,
        TOL - worst,
        format!("worst dist {worst:.3e} ({worst_case}); {POINTS} points x {} built-ins", prox_catalog().len()),
    )
}

fn check_tilt_identity(_opts: &VerifyOptions) -> (bool, f64, String) {
    let mut rng = rng_for(2);
    let base = absym();
    let mut exact_matches = 0usize;
    let total = 500;
    for _ in 0..total {
        let v = [uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -1.0, 1.0)];
        let x = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
        let mu = uniform(&mut rng, 0.05, 0.45);
        let tilted = tilt(&base, &v).unwrap();
        let lhs = tilted.prox_exact(&x, mu).unwrap();
        let rhs = base.prox_exact(&[x[0] + mu * v[0], x[1] + mu * v[1]], mu).unwrap();
        if lhs == rhs {
            exact_matches += 1;
        }
    }
    (
        exact_matches == total,
        0.0,
        format!("{exact_matches}/{total} prox identities bitwise equal"),
    )
}

fn check_subgrad_inequality(_opts: &VerifyOptions) -> (bool, f64, String) {
    const SLACK: f64 = 1e-9;
    let mut rng = rng_for(3);
    let mut worst = f64::NEG_INFINITY;
    let problems = [
        absym(),
        pathological(2.0),
        abs_regularizer(),
        tilt(&absym(), &[0.3, 0.1]).unwrap(),
    ];
    for f in &problems {
        for _ in 0..500 {
            let x = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
            let y = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
            let v = f.subgrad(&x).unwrap();
            let inner: f64 =
                v.iter().zip(y.iter().zip(x.iter())).map(|(vi, (a, b))| vi * (a - b)).sum();
            let lower = f.value(&x) + inner - 0.5 * f.rho() * dist(&x, &y).powi(2);
            worst = worst.max(lower - f.value(&y));
        }
    }
    (worst <= SLACK, SLACK - worst, format!("worst lower-bound violation {worst:.3e}"))
}

/// Sample a point of `[−2,2]²` whose prox input stays at least `margin` away
/// from a kink of the prox map, so finite differences of the envelope see a
/// smooth piece boundary-free neighborhood only at the default step.
fn sample_kink_avoiding(
    f: &ProblemOracle,
    mu: f64,
    rng: &mut ChaCha8Rng,
    margin: f64,
) -> [f64; 2] {
    loop {
        let x = [uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)];
        match f.prox_kink_distance(&x, mu) {
            Some(d) if d <= margin => continue,
            _ => return x,
        }
    }
}

fn check_moreau_gradient_identity(opts: &VerifyOptions) -> (bool, f64, String) {
    const TOL: f64 = 1e-5;
    const MARGIN: f64 = 1e-3;
    let mut worst = 0.0f64;
    let mut rng = rng_for(4);
    let cases = [
        (absym(), 0.25),
        (pathological(2.0), 1.0 / 6.0),
        (abs_regularizer(), 0.25),
        (tilt(&absym(), &[0.3, 0.1]).unwrap(), 0.25),
    ];
    for (f, mu) in &cases {
        let params = ProxParams::new(*mu);
        for _ in 0..100 {
            let x = sample_kink_avoiding(f, *mu, &mut rng, MARGIN);
            let g = moreau_grad(f, &x, &params).unwrap();
            let h = opts
                .fd_step
                .unwrap_or(1e-4 * x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0));
            for i in 0..2 {
                let mut hi = x;
                let mut lo = x;
                hi[i] += h;
                lo[i] -= h;
                let fd = (moreau_value(f, &hi, &params).unwrap()
                    - moreau_value(f, &lo, &params).unwrap())
                    / (hi[i] - lo[i]);
                worst = worst.max((fd - g[i]).abs());
            }
        }
    }
    (worst <= TOL, TOL - worst, format!("worst |fd − grad| = {worst:.3e} over 100 points x {} built-ins", cases.len()))
}

fn check_prox_lipschitz(_opts: &VerifyOptions) -> (bool, f64, String) {
    const SLACK: f64 = 1e-6;
    let mut rng = rng_for(5);
    let mut worst = f64::NEG_INFINITY;
    for (f, mu) in [(absym(), 0.25), (pathological(2.0), 1.0 / 6.0)] {
        let params = ProxParams::new(mu);
        let lip = 1.0 / (1.0 - mu * f.rho());
        for _ in 0..1000 {
            let x = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
            let y = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
            let dx = dist(&x, &y);
            if dx < 1e-12 {
                continue;
            }
            let px = prox(&f, &x, &params).unwrap();
            let py = prox(&f, &y, &params).unwrap();
            worst = worst.max(dist(&px, &py) / dx - lip);
        }
    }
    (worst <= SLACK, SLACK - worst, format!("worst Lipschitz-ratio excess {worst:.3e}"))
}

fn check_envelope_sandwich(_opts: &VerifyOptions) -> (bool, f64, String) {
    const SLACK: f64 = 1e-6;
    let mut rng = rng_for(6);
    let mut worst = f64::NEG_INFINITY;
    for (f, mu) in [(absym(), 0.25), (pathological(2.0), 1.0 / 6.0)] {
        let params = ProxParams::new(mu);
        let lower_mod = f.rho() / (1.0 - mu * f.rho());
        for _ in 0..1000 {
            let x = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
            let xp = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
            let fx = moreau_value(&f, &x, &params).unwrap();
            let fxp = moreau_value(&f, &xp, &params).unwrap();
            let g = moreau_grad(&f, &x, &params).unwrap();
            let inner: f64 = g
                .iter()
                .zip(xp.iter().zip(x.iter()))
                .map(|(gi, (a, b))| gi * (a - b))
                .sum();
            let gap = fxp - fx - inner;
            let d2 = dist(&x, &xp).powi(2);
            // Violations of either side of the two-sided quadratic bound.
            worst = worst.max(-0.5 * lower_mod * d2 - gap);
            worst = worst.max(gap - 0.5 / mu * d2);
        }
    }
    (worst <= SLACK, SLACK - worst, format!("worst sandwich violation {worst:.3e}"))
}

fn check_envelope_descent(_opts: &VerifyOptions) -> (bool, f64, String) {
    let mut rng = rng_for(7);
    let mut worst = f64::NEG_INFINITY;
    for (f, mu) in [(absym(), 0.25), (pathological(2.0), 1.0 / 6.0)] {
        let params = ProxParams::new(mu);
        for _ in 0..500 {
            let x = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
            worst = worst.max(moreau_value(&f, &x, &params).unwrap() - f.value(&x));
        }
    }
    // One-step decrease of the linearized composite step.
    let cp = absym_composite();
    let params = ProxParams::new(0.2);
    for _ in 0..500 {
        let x = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
        let s = prox_linear_step(&cp, &x, &params).unwrap();
        let lhs = cp.objective(&s)
            + (0.5 / params.mu - 0.5 * cp.beta()) * dist(&s, &x).powi(2);
        worst = worst.max(lhs - cp.objective(&x));
    }
    (worst <= 1e-12, 1e-12 - worst, format!("worst descent violation {worst:.3e}"))
}

fn check_cone_dynamics(_opts: &VerifyOptions) -> (bool, f64, String) {
    let lambda = 6.0;
    let mut rng = rng_for(8);
    for trial in 0..100 {
        let y = uniform(&mut rng, 1e-3, 1.0);
        let x = uniform(&mut rng, -1.0, 1.0) * y / (1.0 + lambda);
        if let Err(e) = cone_dynamics_check(2.0, lambda, 0.5, &[x, y], 50) {
            return (false, f64::NEG_INFINITY, format!("trial {trial}: {e}"));
        }
    }
    (true, 0.0, "100 cone starts, 50 steps each, within 1e-10 of the closed form".into())
}

fn check_cone_invariance(_opts: &VerifyOptions) -> (bool, f64, String) {
    let lambda = 6.0;
    let mut rng = rng_for(9);
    let mut worst = f64::NEG_INFINITY;
    let maps: Vec<IterationMap> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&alpha| {
            IterationMap::prox_point(pathological(2.0), ProxParams::new(1.0 / lambda), alpha)
                .unwrap()
        })
        .collect();
    for i in 0..10_000 {
        let y = uniform(&mut rng, 0.0, 2.0);
        let x = uniform(&mut rng, -1.0, 1.0) * y / (1.0 + lambda);
        let next = maps[i % maps.len()].apply_t(&[x, y]).unwrap();
        worst = worst.max(next[0].abs() - next[1] / (1.0 + lambda));
        worst = worst.max(-next[1]);
    }
    (worst <= 1e-12, 1e-12 - worst, format!("worst cone-membership excess {worst:.3e} over 10000 points"))
}

fn builtin_maps(mu: f64, alpha: f64) -> Vec<(&'static str, IterationMap, Vec<f64>)> {
    let (g, r) = absym_split();
    vec![
        (
            "prox-point/absym",
            IterationMap::prox_point(absym(), ProxParams::new(mu), alpha).unwrap(),
            vec![0.0, 1.0 / (1.0 - 2.0 * mu)],
        ),
        (
            "prox-gradient/absym-split",
            IterationMap::prox_gradient(g, r, ProxParams::new(mu), alpha).unwrap(),
            vec![0.0, 1.0 + 2.0 * mu],
        ),
        (
            "prox-linear/absym-composite",
            IterationMap::prox_linear(absym_composite(), ProxParams::new(mu), alpha).unwrap(),
            vec![0.0, 1.0 + 2.0 * mu],
        ),
    ]
}

fn check_instability_fixtures(opts: &VerifyOptions) -> (bool, f64, String) {
    const TOL: f64 = 1e-4;
    let fd_step = opts.fd_step.unwrap_or(1e-5);
    let mut worst = 0.0f64;
    let mut all_unstable = true;
    for (name, map, want) in builtin_maps(0.25, 1.0) {
        let report = match classify_fixed_point(&map, &[0.0, 0.0], fd_step, TOL) {
            Ok(r) => r,
            Err(e) => return (false, f64::NEG_INFINITY, format!("{name}: {e}")),
        };
        let mut got: Vec<f64> = report.eigenvalues.iter().map(|e| e.re).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
        worst = worst.max(
            report.eigenvalues.iter().map(|e| e.im.abs()).fold(0.0, f64::max),
        );
        if report.classification != StabilityClass::Unstable {
            all_unstable = false;
        }
    }
    // A minimizer fixture must classify as not unstable.
    let tilted = tilt(&abs_regularizer(), &[0.3, 0.0]).unwrap();
    let map = IterationMap::prox_point(tilted, ProxParams::new(0.25), 0.9).unwrap();
    let minimizer_ok = matches!(
        classify_fixed_point(&map, &[0.0, 0.0], fd_step, TOL),
        Ok(r) if r.classification == StabilityClass::NotUnstable
    );
    (
        worst <= TOL && all_unstable && minimizer_ok,
        TOL - worst,
        format!(
            "worst eigenvalue error {worst:.3e}; saddles unstable: {all_unstable}; minimizer not unstable: {minimizer_ok}"
        ),
    )
}

fn check_reduced_jacobian(opts: &VerifyOptions) -> (bool, f64, String) {
    const TOL: f64 = 1e-5;
    let fd_step = opts.fd_step.unwrap_or(1e-5);
    let spec = absym_manifold_spec();
    let mut worst = 0.0f64;
    for (name, map, _) in builtin_maps(0.25, 1.0) {
        match verify_reduced_jacobian(&map, &spec, fd_step) {
            Ok(report) => worst = worst.max(report.max_diff),
            Err(e) => return (false, f64::NEG_INFINITY, format!("{name}: {e}")),
        }
    }
    (worst <= TOL, TOL - worst, format!("worst |prediction − fd| = {worst:.3e}"))
}

fn check_mor_smooth(opts: &VerifyOptions) -> (bool, f64, String) {
    const TOL: f64 = 1e-3;
    let step = opts.fd_step.unwrap_or(1e-3);
    let spec = absym_manifold_spec();
    let f = absym();
    let mut worst = 0.0f64;
    let mut all_hold = true;
    for mu in [0.01, 0.1, 0.25] {
        let report = match check_mor_smooth_inequality_with_step(
            &f,
            &spec,
            &ProxParams::new(mu),
            step,
        ) {
            Ok(r) => r,
            Err(e) => return (false, f64::NEG_INFINITY, format!("mu={mu}: {e}")),
        };
        worst = worst.max((report.lhs - (-2.0 / (1.0 - 2.0 * mu))).abs());
        worst = worst.max((report.rhs - (-2.0)).abs());
        all_hold &= report.holds;
    }
    (
        worst <= TOL && all_hold,
        TOL - worst,
        format!("worst curvature error {worst:.3e}; inequality holds: {all_hold}"),
    )
}

fn check_eigen(_opts: &VerifyOptions) -> (bool, f64, String) {
    const TOL: f64 = 1e-8;
    let fixtures: Vec<(Mat, Vec<(f64, f64)>)> = vec![
        (Mat::from_rows(&[vec![0.0, 0.0], vec![0.0, 2.0]]), vec![(0.0, 0.0), (2.0, 0.0)]),
        (Mat::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]), vec![(0.0, -1.0), (0.0, 1.0)]),
        (Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]), vec![(1.0, 0.0), (3.0, 0.0)]),
    ];
    let mut worst = 0.0f64;
    for (m, want) in &fixtures {
        let mut got = match eigenvalues(m) {
            Ok(e) => e,
            Err(e) => return (false, f64::NEG_INFINITY, e.to_string()),
        };
        got.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        for (g, (re, im)) in got.iter().zip(want) {
            worst = worst.max((g.re - re).abs().max((g.im - im).abs()));
        }
    }
    // Residual bound on random matrices.
    let mut rng = rng_for(10);
    let mut worst_rel_residual = 0.0f64;
    for n in [3usize, 6, 10] {
        for _ in 0..4 {
            let mut m = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = uniform(&mut rng, -2.0, 2.0);
                }
            }
            let scale = m.max_abs().max(1.0);
            for lam in eigenvalues(&m).unwrap() {
                match eigen_residual(&m, lam) {
                    Ok(r) => worst_rel_residual = worst_rel_residual.max(r / scale),
                    Err(e) => return (false, f64::NEG_INFINITY, e.to_string()),
                }
            }
        }
    }
    let worst_all = worst.max(worst_rel_residual);
    (
        worst_all <= TOL,
        TOL - worst_all,
        format!("worst fixture error {worst:.3e}, worst relative residual {worst_rel_residual:.3e}"),
    )
}

fn check_damped_spectrum_shift(opts: &VerifyOptions) -> (bool, f64, String) {
    const TOL: f64 = 1e-6;
    let fd_step = opts.fd_step.unwrap_or(1e-5);
    let mut worst = 0.0f64;
    for (name, map, _) in builtin_maps(0.25, 0.7) {
        let report = match classify_fixed_point(&map, &[0.0, 0.0], fd_step, 1e-4) {
            Ok(r) => r,
            Err(e) => return (false, f64::NEG_INFINITY, format!("{name}: {e}")),
        };
        let jac_t = match fd_jacobian(&|p: &[f64]| map.apply_t(p), &[0.0, 0.0], fd_step) {
            Ok(j) => j,
            Err(e) => return (false, f64::NEG_INFINITY, format!("{name}: {e}")),
        };
        let mut direct: Vec<f64> = match eigenvalues(&jac_t) {
            Ok(e) => e.iter().map(|c| c.re).collect(),
            Err(e) => return (false, f64::NEG_INFINITY, format!("{name}: {e}")),
        };
        let mut shifted: Vec<f64> = report.damped_eigenvalues.iter().map(|e| e.re).collect();
        direct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        shifted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in direct.iter().zip(&shifted) {
            worst = worst.max((a - b).abs());
        }
    }
    (worst <= TOL, TOL - worst, format!("worst shifted-spectrum mismatch {worst:.3e}"))
}

fn check_fixed_points_coincide(_opts: &VerifyOptions) -> (bool, f64, String) {
    let mut ok = true;
    for (name, map, _) in builtin_maps(0.25, 0.6) {
        let s = map.apply_s(&[0.0, 0.0]).unwrap();
        let t = map.apply_t(&[0.0, 0.0]).unwrap();
        if s != vec![0.0, 0.0] || t != vec![0.0, 0.0] {
            ok = false;
        }
        let _ = name;
    }
    (ok, 0.0, "S and T share the catalogued critical points exactly".into())
}

fn escape_absym_split_config(n_trials: usize, seed: u64) -> EscapeConfig {
    let (g, r) = absym_split();
    let map = IterationMap::prox_gradient(g, r, ProxParams::new(0.25), 0.4)
        .unwrap()
        .strict()
        .unwrap();
    let sampler = InitSampler::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] };
    EscapeConfig::new(map, sampler, n_trials, seed)
}

fn check_escape_absym_split(_opts: &VerifyOptions) -> (bool, f64, String) {
    let report = match escape_experiment(&escape_absym_split_config(1000, 7)) {
        Ok(r) => r,
        Err(e) => return (false, f64::NEG_INFINITY, e.to_string()),
    };
    let mut worst_fp = 0.0f64;
    let mut failed = 0usize;
    for t in &report.trials {
        if t.status == TrialStatus::Failed {
            failed += 1;
        }
        if let Some(fp) = t.fixed_point_residual {
            worst_fp = worst_fp.max(fp);
        }
    }
    let passed = report.n_to_target == 0 && failed == 0 && worst_fp <= 1e-8;
    (
        passed,
        1e-8 - worst_fp,
        format!(
            "{} trials: {} converged, {} to origin, worst fixed-point residual {worst_fp:.2e}",
            report.n_trials, report.n_converged, report.n_to_target
        ),
    )
}

fn check_cone_attraction(_opts: &VerifyOptions) -> (bool, f64, String) {
    let map = IterationMap::prox_point(pathological(2.0), ProxParams::new(1.0 / 6.0), 0.5)
        .unwrap()
        .strict()
        .unwrap();
    let sampler = InitSampler::Cone { lambda: 6.0, y_max: 1.0 };
    let config = EscapeConfig::new(map, sampler, 500, 11);
    let report = match escape_experiment(&config) {
        Ok(r) => r,
        Err(e) => return (false, f64::NEG_INFINITY, e.to_string()),
    };
    let passed = report.fraction_to_target == 1.0 && report.n_converged == report.n_trials;
    (
        passed,
        report.fraction_to_target - 1.0,
        format!(
            "{}/{} cone starts converged to the non-minimizing critical point",
            report.n_to_target, report.n_trials
        ),
    )
}

fn check_mba_certificates(_opts: &VerifyOptions) -> (bool, f64, String) {
    let f = absym();
    let model = ModelOracle::exact(&f);
    let params = match validate_params(&f, &model, 5.0, 1.0) {
        Ok(p) => p,
        Err(e) => return (false, f64::NEG_INFINITY, e.to_string()),
    };
    let rate_err = (params.rate_constant - 3.0 / 31.5).abs();
    if rate_err > 1e-12 {
        return (false, -rate_err, format!("rate constant off by {rate_err:.2e}"));
    }
    let mut worst = f64::INFINITY;
    // Exact models on the stable axis; certificates plus the rate bound.
    let run = match mba_run(&f, &model, &params, &[0.4, 0.0], 200) {
        Ok(r) => r,
        Err(e) => return (false, f64::NEG_INFINITY, format!("absym run: {e}")),
    };
    for row in &run.log.rows {
        worst = worst
            .min(row.decrease_residual + CERT_SLACK)
            .min(row.comparison_residual + CERT_SLACK)
            .min(run.log.rel_error_constant + REL_ERROR_SLACK - row.rel_error_ratio);
    }
    match rate_bound_check(&run.log, &params, 0.0) {
        Ok(r) => worst = worst.min(r.worst_slack),
        Err(e) => return (false, f64::NEG_INFINITY, format!("rate bound: {e}")),
    }
    // Tilted variant from its stable manifold.
    let tilted = tilt(&absym(), &[0.3, 0.1]).unwrap();
    let tmodel = ModelOracle::exact(&tilted);
    let tparams = validate_params(&tilted, &tmodel, 5.0, 1.0).unwrap();
    let trun = match mba_run(&tilted, &tmodel, &tparams, &[0.4, -0.05], 200) {
        Ok(r) => r,
        Err(e) => return (false, f64::NEG_INFINITY, format!("tilted run: {e}")),
    };
    for row in &trun.log.rows {
        worst = worst
            .min(row.decrease_residual + CERT_SLACK)
            .min(row.comparison_residual + CERT_SLACK);
    }
    match rate_bound_check(&trun.log, &tparams, -1.0) {
        Ok(r) => worst = worst.min(r.worst_slack),
        Err(e) => return (false, f64::NEG_INFINITY, format!("tilted rate bound: {e}")),
    }
    if trun.log.final_env_grad_norm >= 1e-6 {
        return (
            false,
            1e-6 - trun.log.final_env_grad_norm,
            format!("tilted run grad norm {:.2e} not below 1e-6", trun.log.final_env_grad_norm),
        );
    }
    // Negative control: a corrupted inner solve must trip a certificate.
    let corrupted = ModelOracle::new(2.0, 0.0, |_anchor: &[f64]| {
        ProblemOracle::new(2, 2.0, |p: &[f64]| p[0].abs() - p[1] * p[1]).with_prox_exact(
            |p: &[f64], mu: f64| {
                vec![soft_threshold(p[0], mu) + 1e-2, p[1] / (1.0 - 2.0 * mu)]
            },
        )
    });
    let cparams = validate_params(&f, &corrupted, 5.0, 1.0).unwrap();
    let control = matches!(
        mba_run(&f, &corrupted, &cparams, &[0.4, 0.0], 50),
        Err(Error::Certificate(_))
    );
    (
        worst >= 0.0 && control,
        worst,
        format!("worst certificate slack {worst:.3e}; corrupted-step control tripped: {control}"),
    )
}

fn check_determinism(_opts: &VerifyOptions) -> (bool, f64, String) {
    let a = escape_experiment(&escape_absym_split_config(100, 42)).unwrap();
    let b = escape_experiment(&escape_absym_split_config(100, 42)).unwrap();
    let ja = serde_json::to_string_pretty(&a).unwrap();
    let jb = serde_json::to_string_pretty(&b).unwrap();
    let equal = ja == jb;
    (equal, 0.0, format!("two seeded runs, {} bytes each, byte-identical: {equal}", ja.len()))
}
