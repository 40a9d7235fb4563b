//! Relaxed model-based minimization with runtime certificates.
//!
//! Each step minimizes a τ-regularized local model `f_x` of the objective and
//! averages with parameter α. Along the run, three inequalities that the
//! theory guarantees for exact steps are measured: sufficient decrease of the
//! envelope `f_{1/ρ̂}`, a relative-error bound tying the envelope gradient to
//! the step length, and the model-vs-prox comparison inequality. A violation
//! beyond the slack signals an implementation bug, not bad luck.

use std::sync::Arc;

use serde::Serialize;

use crate::dynamics::{fmt_full, RunRecord, Termination};
use crate::error::{Error, Result};
use crate::problems::ProblemOracle;
use crate::proxengine::{moreau_grad, moreau_value, prox, ProxParams};

/// Slack allowed on the decrease and comparison certificates.
pub const CERT_SLACK: f64 = 1e-8;
/// Slack allowed on the relative-error ratio.
pub const REL_ERROR_SLACK: f64 = 1e-6;
/// Below this step length and gradient norm a step counts as stationary.
const STATIONARY_TOL: f64 = 1e-11;

/// A family of local models `x ↦ f_x`, each `eta`-weakly convex, with
/// two-sided model error `|f(y) − f_x(y)| ≤ (beta/2)‖y−x‖²`.
#[derive(Clone)]
pub struct ModelOracle {
    eta: f64,
    beta: f64,
    build: BuildFn,
}

type BuildFn = Arc<dyn Fn(&[f64]) -> ProblemOracle + Send + Sync>;

impl ModelOracle {
    pub fn new(
        eta: f64,
        beta: f64,
        build: impl Fn(&[f64]) -> ProblemOracle + Send + Sync + 'static,
    ) -> Self {
        assert!(eta >= 0.0 && beta >= 0.0);
        ModelOracle { eta, beta, build: Arc::new(build) }
    }

    /// Exact models `f_x ≡ f`: zero model error, `eta = rho`. The resulting
    /// method is the prox-point iteration with `μ = 1/τ`.
    pub fn exact(problem: &ProblemOracle) -> Self {
        let eta = problem.rho();
        let p = problem.clone();
        ModelOracle::new(eta, 0.0, move |_anchor: &[f64]| p.clone())
    }

    /// Model weak-convexity modulus η.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Model error constant β.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The model anchored at `x`.
    pub fn build(&self, anchor: &[f64]) -> ProblemOracle {
        (self.build)(anchor)
    }
}

/// Validated parameters of a model-based run, including the derived envelope
/// parameter `ρ̂ = τ/2 + (ρ+η)/4` and the rate constant
/// `α(2ρ̂−ρ−η−β) / (2ρ̂(ρ̂+τ−ρ−η))`.
#[derive(Debug, Clone, Serialize)]
pub struct MbaParams {
    pub tau: f64,
    pub alpha: f64,
    pub rho: f64,
    pub eta: f64,
    pub beta: f64,
    pub rho_hat: f64,
    pub rate_constant: f64,
}

/// Check the step-size hypothesis `τ > max{η, 2ρ, (4β+ρ+η)/2}` and the four
/// derived inequalities, naming the first violation.
pub fn validate_params(
    problem: &ProblemOracle,
    model: &ModelOracle,
    tau: f64,
    alpha: f64,
) -> Result<MbaParams> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let rho = problem.rho();
    let eta = model.eta();
    let beta = model.beta();
    if tau <= eta {
        return Err(Error::Parameter(format!("tau = {tau} must exceed eta = {eta}")));
    }
    if tau <= 2.0 * rho {
        return Err(Error::Parameter(format!("tau = {tau} must exceed 2*rho = {}", 2.0 * rho)));
    }
    let mix = (4.0 * beta + rho + eta) / 2.0;
    if tau <= mix {
        return Err(Error::Parameter(format!(
            "tau = {tau} must exceed (4*beta + rho + eta)/2 = {mix}"
        )));
    }
    let rho_hat = 0.5 * tau + 0.25 * (rho + eta);
    let gaps = [
        ("tau - rho_hat - beta", tau - rho_hat - beta),
        ("2*rho_hat - rho - eta - beta", 2.0 * rho_hat - rho - eta - beta),
        ("rho_hat + tau - rho - eta", rho_hat + tau - rho - eta),
        (
            "1 - (2*rho_hat - rho - eta - beta)/(rho_hat + tau - rho - eta)",
            1.0 - (2.0 * rho_hat - rho - eta - beta) / (rho_hat + tau - rho - eta),
        ),
    ];
    for (name, gap) in gaps {
        if gap <= 0.0 {
            return Err(Error::Parameter(format!("inequality {name} > 0 fails (value {gap})")));
        }
    }
    let rate_constant = alpha * (2.0 * rho_hat - rho - eta - beta)
        / (2.0 * rho_hat * (rho_hat + tau - rho - eta));
    Ok(MbaParams { tau, alpha, rho, eta, beta, rho_hat, rate_constant })
}

fn envelope_params(params: &MbaParams) -> ProxParams {
    ProxParams::new(1.0 / params.rho_hat)
}

/// Sufficient-decrease residual for the step `x_t → x_{t+1}`:
/// `rhs − lhs` of
/// `f_{1/ρ̂}(x_{t+1}) ≤ f_{1/ρ̂}(x_t) − c₁‖x_{t+1}−x_t‖² − c₂‖∇f_{1/ρ̂}(x_t)‖²`.
/// Passes when the residual is at least `−1e−8`.
pub fn decrease_certificate(
    problem: &ProblemOracle,
    x_t: &[f64],
    x_t1: &[f64],
    params: &MbaParams,
) -> Result<f64> {
    let ep = envelope_params(params);
    let denom = params.rho_hat + params.tau - params.rho - params.eta;
    let c_step = params.rho_hat * (params.tau - params.rho_hat - params.beta)
        / (2.0 * params.alpha * denom);
    let c_grad = params.rate_constant;
    let env_t = moreau_value(problem, x_t, &ep)?;
    let env_t1 = moreau_value(problem, x_t1, &ep)?;
    let grad_t = moreau_grad(problem, x_t, &ep)?;
    let rhs = env_t - c_step * dist2(x_t1, x_t) - c_grad * norm2(&grad_t);
    Ok(rhs - env_t1)
}

/// The constant of the relative-error bound:
/// `max{ρ̂, ρ/(1−ρ/ρ̂)} + (ρ̂/α)/(1 − √(1 − (2ρ̂−ρ−η−β)/(ρ̂+τ−ρ−η)))`.
pub fn relative_error_constant(params: &MbaParams) -> f64 {
    let grad_lip = params.rho_hat.max(params.rho / (1.0 - params.rho / params.rho_hat));
    let contraction = 1.0
        - (2.0 * params.rho_hat - params.rho - params.eta - params.beta)
            / (params.rho_hat + params.tau - params.rho - params.eta);
    grad_lip + params.rho_hat / params.alpha / (1.0 - contraction.sqrt())
}

/// Relative-error ratio `‖∇f_{1/ρ̂}(x_{t+1})‖ / ‖x_{t+1}−x_t‖`, defined as 0
/// for a stationary step. Passes when the ratio does not exceed
/// [`relative_error_constant`] plus `1e−6`.
pub fn relative_error_certificate(
    problem: &ProblemOracle,
    x_t: &[f64],
    x_t1: &[f64],
    params: &MbaParams,
) -> Result<f64> {
    let ep = envelope_params(params);
    let grad_t1 = norm2(&moreau_grad(problem, x_t1, &ep)?).sqrt();
    let step = dist2(x_t1, x_t).sqrt();
    if step <= STATIONARY_TOL && grad_t1 <= STATIONARY_TOL {
        return Ok(0.0);
    }
    Ok(grad_t1 / step)
}

/// Slack of the model-vs-prox comparison for one step:
/// `rhs − lhs` of
/// `‖x̂_t−y_t‖² ≤ ‖x̂_t−x_t‖² − c_a‖x̂_t−x_t‖² − c_b‖x_t−y_t‖²`
/// with `x̂_t = prox_{f/ρ̂}(x_t)`. Nonnegative (up to `1e−8`) for exact steps.
pub fn prox_comparison_residual(
    problem: &ProblemOracle,
    x_t: &[f64],
    y_t: &[f64],
    params: &MbaParams,
) -> Result<f64> {
    let ep = envelope_params(params);
    let x_hat = prox(problem, x_t, &ep)?;
    let denom = params.rho_hat + params.tau - params.rho - params.eta;
    let c_a = (2.0 * params.rho_hat - params.rho - params.eta - params.beta) / denom;
    let c_b = (params.tau - params.rho_hat - params.beta) / denom;
    let lhs = dist2(&x_hat, y_t);
    let rhs = (1.0 - c_a) * dist2(&x_hat, x_t) - c_b * dist2(x_t, y_t);
    Ok(rhs - lhs)
}

/// One row of a certificate log: envelope diagnostics at `x_t` plus the
/// certificate values of the step out of `x_t`.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateRow {
    pub iter: usize,
    pub env_value: f64,
    pub env_grad_norm: f64,
    pub decrease_residual: f64,
    pub rel_error_ratio: f64,
    pub comparison_residual: f64,
}

/// Certificate log of a run, with the run's relative-error constant and the
/// envelope diagnostics at the final iterate.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateLog {
    pub rows: Vec<CertificateRow>,
    pub rel_error_constant: f64,
    pub final_env_value: f64,
    pub final_env_grad_norm: f64,
}

impl CertificateLog {
    /// CSV with columns `iter, env_value, env_grad_norm, decrease_residual,
    /// rel_error_ratio`, full-precision floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,env_value,env_grad_norm,decrease_residual,rel_error_ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iter,
                fmt_full(r.env_value),
                fmt_full(r.env_grad_norm),
                fmt_full(r.decrease_residual),
                fmt_full(r.rel_error_ratio)
            ));
        }
        out
    }

    /// Envelope gradient norms at `x_0, …, x_T` (per-step rows plus the final
    /// iterate).
    pub fn grad_norms(&self) -> Vec<f64> {
        let mut g: Vec<f64> = self.rows.iter().map(|r| r.env_grad_norm).collect();
        g.push(self.final_env_grad_norm);
        g
    }
}

/// A completed model-based run: trajectory plus certificate log.
#[derive(Debug, Clone)]
pub struct MbaRun {
    pub record: RunRecord,
    pub log: CertificateLog,
}

/// Run `y_t = argmin f_{x_t}(y) + (τ/2)‖y−x_t‖²`, `x_{t+1} = (1−α)x_t + αy_t`
/// for `t_max` steps (stopping early at an exact fixed point), certifying
/// every step.
pub fn mba_run(
    problem: &ProblemOracle,
    model: &ModelOracle,
    params: &MbaParams,
    x0: &[f64],
    t_max: usize,
) -> Result<MbaRun> {
    if x0.len() != problem.dim() {
        return Err(Error::Input("x0 dimension differs from problem".into()));
    }
    if t_max == 0 {
        return Err(Error::Parameter("t_max must be at least 1".into()));
    }
    let ep = envelope_params(params);
    let step_params = ProxParams::new(1.0 / params.tau);
    let rel_constant = relative_error_constant(params);

    let mut record = RunRecord {
        iterates: vec![],
        f_values: vec![],
        envelope_grad_norms: vec![],
        terminated: Termination::MaxIters,
        limit_estimate: x0.to_vec(),
        iters: 0,
        fixed_point_residual: None,
    };
    let mut rows = Vec::new();
    let mut x = x0.to_vec();
    for t in 0..t_max {
        let env_value = moreau_value(problem, &x, &ep)?;
        let env_grad_norm = norm2(&moreau_grad(problem, &x, &ep)?).sqrt();
        record.iterates.push((t, x.clone()));
        record.f_values.push(problem.value(&x));
        record.envelope_grad_norms.push(env_grad_norm);

        let local = model.build(&x);
        let y = prox(&local, &x, &step_params)?;
        let x_next: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (1.0 - params.alpha) * xi + params.alpha * yi)
            .collect();

        let comparison_residual = prox_comparison_residual(problem, &x, &y, params)?;
        let decrease_residual = decrease_certificate(problem, &x, &x_next, params)?;
        let rel_error_ratio = relative_error_certificate(problem, &x, &x_next, params)?;
        if decrease_residual < -CERT_SLACK {
            return Err(Error::Certificate(format!(
                "sufficient decrease fails at iteration {t}: residual {decrease_residual:.3e}"
            )));
        }
        if comparison_residual < -CERT_SLACK {
            return Err(Error::Certificate(format!(
                "model-vs-prox comparison fails at iteration {t}: residual {comparison_residual:.3e}"
            )));
        }
        if rel_error_ratio > rel_constant + REL_ERROR_SLACK {
            return Err(Error::Certificate(format!(
                "relative error fails at iteration {t}: ratio {rel_error_ratio:.6} > {rel_constant:.6}"
            )));
        }
        rows.push(CertificateRow {
            iter: t,
            env_value,
            env_grad_norm,
            decrease_residual,
            rel_error_ratio,
            comparison_residual,
        });
        let displacement = dist2(&x_next, &x).sqrt();
        x = x_next;
        record.iters = t + 1;
        if displacement == 0.0 {
            record.terminated = Termination::Converged;
            break;
        }
    }
    let final_env_value = moreau_value(problem, &x, &ep)?;
    let final_env_grad_norm = norm2(&moreau_grad(problem, &x, &ep)?).sqrt();
    record.iterates.push((record.iters, x.clone()));
    record.f_values.push(problem.value(&x));
    record.envelope_grad_norms.push(final_env_grad_norm);
    record.limit_estimate = x;
    if record.terminated == Termination::Converged {
        record.fixed_point_residual = Some(0.0);
    }
    Ok(MbaRun {
        record,
        log: CertificateLog {
            rows,
            rel_error_constant: rel_constant,
            final_env_value,
            final_env_grad_norm,
        },
    })
}

/// Result of checking the prefix rate bound.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    /// Smallest `rhs − lhs` over all prefixes; nonnegative when the bound holds.
    pub worst_slack: f64,
    pub prefixes_checked: usize,
}

/// For every prefix `T`, check
/// `min_{t≤T} ‖∇f_{1/ρ̂}(x_t)‖ ≤ sqrt((f_{1/ρ̂}(x_0) − inf_f)/(c(T+1))) + 1e−8`
/// with `c` the rate constant.
pub fn rate_bound_check(
    log: &CertificateLog,
    params: &MbaParams,
    inf_f_lower_bound: f64,
) -> Result<RateReport> {
    if log.rows.is_empty() {
        return Err(Error::Precondition("certificate log is empty".into()));
    }
    let grads = log.grad_norms();
    let env0 = log.rows[0].env_value;
    let min_env = log
        .rows
        .iter()
        .map(|r| r.env_value)
        .chain(std::iter::once(log.final_env_value))
        .fold(f64::INFINITY, f64::min);
    if inf_f_lower_bound > min_env + 1e-12 {
        return Err(Error::Precondition(format!(
            "inf_f_lower_bound = {inf_f_lower_bound} exceeds the smallest observed envelope value {min_env}"
        )));
    }
    let gap = (env0 - inf_f_lower_bound).max(0.0);
    let mut worst_slack = f64::INFINITY;
    let mut running_min = f64::INFINITY;
    for (t, g) in grads.iter().enumerate() {
        running_min = running_min.min(*g);
        let rhs = (gap / (params.rate_constant * (t as f64 + 1.0))).sqrt() + 1e-8;
        let slack = rhs - running_min;
        worst_slack = worst_slack.min(slack);
        if slack < 0.0 {
            return Err(Error::Certificate(format!(
                "rate bound fails at prefix T = {t}: min grad {running_min:.6e} > bound {rhs:.6e}"
            )));
        }
    }
    Ok(RateReport { worst_slack, prefixes_checked: grads.len() })
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{abs_regularizer, absym, soft_threshold, tilt};
    use crate::proxengine::IterationMap;
    use approx::assert_abs_diff_eq;

    fn absym_exact_params(tau: f64, alpha: f64) -> (ProblemOracle, ModelOracle, MbaParams) {
        let f = absym();
        let model = ModelOracle::exact(&f);
        let params = validate_params(&f, &model, tau, alpha).unwrap();
        (f, model, params)
    }

    #[test]
    fn validate_params_examples() {
        let (_, _, p) = absym_exact_params(5.0, 1.0);
        assert_abs_diff_eq!(p.rho_hat, 3.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.rate_constant, 3.0 / 31.5, epsilon = 1e-15);

        let convex = abs_regularizer();
        let model = ModelOracle::exact(&convex);
        let p = validate_params(&convex, &model, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(p.rho_hat, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.rate_constant, 1.0 / 1.5, epsilon = 1e-15);
    }

    #[test]
    fn validate_params_rejects_small_tau() {
        let f = absym();
        let model = ModelOracle::exact(&f);
        let err = validate_params(&f, &model, 4.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
        assert!(err.to_string().contains("2*rho"));
    }

    #[test]
    fn relative_error_constant_value() {
        let (_, _, p) = absym_exact_params(5.0, 1.0);
        let want = (14.0 / 3.0) + 3.5 / (1.0 - (1.0f64 / 3.0).sqrt());
        assert_abs_diff_eq!(relative_error_constant(&p), want, epsilon = 1e-12);
    }

    #[test]
    fn critical_point_of_convex_builtin_is_stationary() {
        let f = abs_regularizer();
        let model = ModelOracle::exact(&f);
        let params = validate_params(&f, &model, 1.0, 1.0).unwrap();
        let run = mba_run(&f, &model, &params, &[0.0, 0.3], 5).unwrap();
        assert_eq!(run.record.terminated, Termination::Converged);
        assert_eq!(run.record.iters, 1);
        assert_eq!(run.log.rows[0].decrease_residual, 0.0);
        assert_eq!(run.record.limit_estimate, vec![0.0, 0.3]);
    }

    #[test]
    fn exact_models_reproduce_prox_point() {
        let (f, model, params) = absym_exact_params(5.0, 1.0);
        let run = mba_run(&f, &model, &params, &[0.4, 0.0], 12).unwrap();
        // Recompute the prox-point trajectory at mu = 1/tau.
        let map = IterationMap::prox_point(absym(), ProxParams::new(0.2), 1.0).unwrap();
        let mut x = vec![0.4, 0.0];
        for (t, recorded) in run.record.iterates.iter() {
            let d = dist2(recorded, &x).sqrt();
            assert!(d <= 1e-12, "iterate {t} deviates by {d:.2e}");
            x = map.apply_s(&x).unwrap();
        }
    }

    #[test]
    fn certificates_hold_on_absym_run() {
        let (f, model, params) = absym_exact_params(5.0, 1.0);
        let run = mba_run(&f, &model, &params, &[0.4, 0.0], 50).unwrap();
        for row in &run.log.rows {
            assert!(row.decrease_residual >= -CERT_SLACK);
            assert!(row.comparison_residual >= -CERT_SLACK);
            assert!(row.rel_error_ratio <= run.log.rel_error_constant + REL_ERROR_SLACK);
        }
        // Envelope values are nonincreasing.
        for pair in run.log.rows.windows(2) {
            assert!(pair[1].env_value <= pair[0].env_value + 1e-12);
        }
        let report = rate_bound_check(&run.log, &params, 0.0).unwrap();
        assert!(report.worst_slack >= 0.0);
    }

    #[test]
    fn certificates_hold_while_y_direction_diverges() {
        // Off the stable axis, decrease and relative-error certificates hold
        // per step even though the iterates do not converge.
        let (f, model, params) = absym_exact_params(5.0, 1.0);
        let run = mba_run(&f, &model, &params, &[0.3, 0.2], 10).unwrap();
        assert_eq!(run.log.rows.len(), 10);
        for row in &run.log.rows {
            assert!(row.decrease_residual >= -CERT_SLACK);
        }
    }

    #[test]
    fn tilted_run_reaches_stationarity() {
        let f = tilt(&absym(), &[0.3, 0.1]).unwrap();
        let model = ModelOracle::exact(&f);
        let params = validate_params(&f, &model, 5.0, 1.0).unwrap();
        // Start on the stable manifold of the tilted saddle: y* = -v_y/2.
        let run = mba_run(&f, &model, &params, &[0.4, -0.05], 200).unwrap();
        assert!(run.log.final_env_grad_norm < 1e-6);
        let report = rate_bound_check(&run.log, &params, -1.0).unwrap();
        assert!(report.worst_slack >= 0.0);
    }

    #[test]
    fn finite_length_surrogate() {
        let (f, model, params) = absym_exact_params(5.0, 1.0);
        let run = mba_run(&f, &model, &params, &[0.4, 0.0], 100).unwrap();
        let pts: Vec<&Vec<f64>> = run.record.iterates.iter().map(|(_, p)| p).collect();
        let steps: Vec<f64> =
            pts.windows(2).map(|w| dist2(w[0], w[1]).sqrt()).collect();
        let total: f64 = steps.iter().sum();
        assert!(total.is_finite() && total > 0.0);
        let tail_start = steps.len() - steps.len() / 5;
        let tail: f64 = steps[tail_start..].iter().sum();
        assert!(tail < 0.01 * total, "tail {tail} vs total {total}");
    }

    /// Linearized-composite models of `|x| − y²`: convex (η = 0) with model
    /// error constant β = 2, the prox-linear method seen as a model-based one.
    fn prox_linear_models() -> ModelOracle {
        ModelOracle::new(0.0, 2.0, |anchor: &[f64]| {
            let a = anchor[1];
            ProblemOracle::new(2, 0.0, move |p: &[f64]| {
                p[0].abs() + (-a * a - 2.0 * a * (p[1] - a))
            })
            .with_subgrad(move |p: &[f64]| vec![p[0].signum() * f64::from(p[0] != 0.0), -2.0 * a])
            .with_prox_exact(move |z: &[f64], mu: f64| {
                vec![soft_threshold(z[0], mu), z[1] + 2.0 * mu * a]
            })
        })
    }

    #[test]
    fn linearized_models_satisfy_the_error_bound() {
        let f = absym();
        let model = prox_linear_models();
        let pts = [[0.3, -0.9], [-1.2, 0.4], [0.0, 1.5], [0.7, 0.7]];
        for anchor in &pts {
            let local = model.build(anchor);
            for y in &pts {
                let err = (f.value(y) - local.value(y)).abs();
                let d2 = (y[0] - anchor[0]).powi(2) + (y[1] - anchor[1]).powi(2);
                assert!(err <= 0.5 * model.beta() * d2 + 1e-9);
            }
        }
    }

    #[test]
    fn linearized_models_run_certified() {
        let f = absym();
        let model = prox_linear_models();
        // tau must exceed (4*beta + rho + eta)/2 = 5.
        let params = validate_params(&f, &model, 6.0, 1.0).unwrap();
        let run = mba_run(&f, &model, &params, &[0.4, 0.0], 30).unwrap();
        for row in &run.log.rows {
            assert!(row.decrease_residual >= -CERT_SLACK);
            assert!(row.comparison_residual >= -CERT_SLACK);
        }
        rate_bound_check(&run.log, &params, 0.0).unwrap();
    }

    #[test]
    fn corrupted_inner_solve_fails_a_certificate() {
        let f = absym();
        // Model whose prox is off by 1e-2 in the x coordinate.
        let corrupted = ModelOracle::new(2.0, 0.0, |_anchor: &[f64]| {
            ProblemOracle::new(2, 2.0, |p: &[f64]| p[0].abs() - p[1] * p[1]).with_prox_exact(
                |p: &[f64], mu: f64| {
                    vec![soft_threshold(p[0], mu) + 1e-2, p[1] / (1.0 - 2.0 * mu)]
                },
            )
        });
        let params = validate_params(&f, &corrupted, 5.0, 1.0).unwrap();
        let err = mba_run(&f, &corrupted, &params, &[0.4, 0.0], 50).unwrap_err();
        assert!(matches!(err, Error::Certificate(_)), "got {err}");
    }

    #[test]
    fn rate_bound_single_term_case() {
        let (f, model, params) = absym_exact_params(5.0, 1.0);
        let run = mba_run(&f, &model, &params, &[0.4, 0.0], 1).unwrap();
        let g0 = run.log.rows[0].env_grad_norm;
        let bound = ((run.log.rows[0].env_value - 0.0) / params.rate_constant).sqrt();
        assert!(g0 <= bound + 1e-8);
        rate_bound_check(&run.log, &params, 0.0).unwrap();
    }

    #[test]
    fn rate_bound_rejects_bad_lower_bound() {
        let (f, model, params) = absym_exact_params(5.0, 1.0);
        let run = mba_run(&f, &model, &params, &[0.4, 0.0], 5).unwrap();
        let err = rate_bound_check(&run.log, &params, 10.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn certificate_csv_schema() {
        let (f, model, params) = absym_exact_params(5.0, 1.0);
        let run = mba_run(&f, &model, &params, &[0.4, 0.0], 3).unwrap();
        let csv = run.log.to_csv();
        assert!(csv.starts_with("iter,env_value,env_grad_norm,decrease_residual,rel_error_ratio\n"));
        assert_eq!(csv.lines().count(), run.log.rows.len() + 1);
    }
}
