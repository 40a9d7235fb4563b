//! Damped fixed-point iteration runner, limit classification, and Monte
//! Carlo escape/attraction experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::{pathological, ProblemOracle};
use crate::proxengine::{moreau_grad, IterationMap, ProxParams};

/// Consecutive sub-tolerance steps required before declaring convergence;
/// robust against a single small step near a kink.
pub const CONFIRM_WINDOW: usize = 5;
/// Default norm bound beyond which a trajectory counts as diverged.
pub const DEFAULT_DIVERGENCE_GUARD: f64 = 1e6;
/// Default radius for "limit reached the target".
pub const DEFAULT_TARGET_RADIUS: f64 = 1e-6;

/// Configuration of a single damped fixed-point run.
#[derive(Clone)]
pub struct RunConfig {
    pub map: IterationMap,
    pub x0: Vec<f64>,
    pub max_iters: usize,
    /// Threshold on `‖x_{k+1} − x_k‖`.
    pub stop_tol: f64,
    pub record_every: usize,
    /// RNG seed for experiment sampling; unused in single runs.
    pub seed: u64,
    pub divergence_guard: f64,
}

impl RunConfig {
    pub fn new(map: IterationMap, x0: Vec<f64>) -> Self {
        RunConfig {
            map,
            x0,
            max_iters: 1000,
            stop_tol: 1e-9,
            record_every: 1,
            seed: 0,
            divergence_guard: DEFAULT_DIVERGENCE_GUARD,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.x0.len() != self.map.dim() {
            return Err(Error::Input(format!(
                "x0 has dimension {}, map expects {}",
                self.x0.len(),
                self.map.dim()
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if self.stop_tol.is_nan() || self.stop_tol <= 0.0 {
            return Err(Error::Parameter("stop_tol must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Parameter("record_every must be positive".into()));
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    Diverged,
}

/// Trajectory of a run with per-step diagnostics at the recorded indices.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    /// Recorded `(k, x_k)` pairs.
    pub iterates: Vec<(usize, Vec<f64>)>,
    /// Objective values at the recorded iterates.
    pub f_values: Vec<f64>,
    /// Stationarity surrogate `‖x_k − S(x_k)‖/μ` at the recorded iterates.
    pub envelope_grad_norms: Vec<f64>,
    pub terminated: Termination,
    pub limit_estimate: Vec<f64>,
    /// Total iterations performed.
    pub iters: usize,
    /// `‖S(limit) − limit‖`, measured when the run converged.
    pub fixed_point_residual: Option<f64>,
}

impl RunRecord {
    /// CSV with columns `iter, x_0..x_{d−1}, f, env_grad_norm`, full-precision
    /// floats (17 significant digits).
    pub fn to_csv(&self) -> String {
        let d = self.limit_estimate.len();
        let mut out = String::from("iter");
        for i in 0..d {
            out.push_str(&format!(",x_{i}"));
        }
        out.push_str(",f,env_grad_norm\n");
        for (row, (k, x)) in self.iterates.iter().enumerate() {
            out.push_str(&k.to_string());
            for xi in x {
                out.push_str(&format!(",{}", fmt_full(*xi)));
            }
            out.push_str(&format!(
                ",{},{}\n",
                fmt_full(self.f_values[row]),
                fmt_full(self.envelope_grad_norms[row])
            ));
        }
        out
    }
}

/// Full-precision decimal formatting that round-trips through parsing.
pub fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

/// A run that aborted mid-way, carrying the partial record.
#[derive(Debug)]
pub struct RunFailure {
    pub partial: RunRecord,
    pub source: Error,
}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Error {
        Error::RunAborted { iters: f.partial.iters, source: Box::new(f.source) }
    }
}

/// Iterate `x_{k+1} = (1−α)x_k + αS(x_k)` until the displacement stays below
/// `stop_tol` for [`CONFIRM_WINDOW`] consecutive steps (an exactly zero
/// displacement converges immediately), the iterate norm passes the
/// divergence guard, or the budget runs out.
///
/// A converged limit is checked to be a fixed point of `S`:
/// `‖S(limit) − limit‖ ≤ 10·stop_tol`.
#[allow(clippy::result_large_err)]
pub fn run(config: &RunConfig) -> std::result::Result<RunRecord, RunFailure> {
    let empty = |term: Termination, x: &[f64]| RunRecord {
        iterates: vec![],
        f_values: vec![],
        envelope_grad_norms: vec![],
        terminated: term,
        limit_estimate: x.to_vec(),
        iters: 0,
        fixed_point_residual: None,
    };
    if let Err(e) = config.validate() {
        return Err(RunFailure { partial: empty(Termination::MaxIters, &config.x0), source: e });
    }

    let map = &config.map;
    let mut record = empty(Termination::MaxIters, &config.x0);
    let mut x = config.x0.clone();
    let mut streak = 0usize;
    let mut last_displacement;

    let mut k = 0usize;
    loop {
        let s = match map.apply_s(&x) {
            Ok(s) => s,
            Err(e) => {
                record.iters = k;
                record.limit_estimate = x;
                return Err(RunFailure { partial: record, source: e });
            }
        };
        if k.is_multiple_of(config.record_every) {
            record.iterates.push((k, x.clone()));
            record.f_values.push(map.objective(&x));
            record.envelope_grad_norms.push(map.grad_norm_from_step(&x, &s));
        }
        if k == config.max_iters {
            record.terminated = Termination::MaxIters;
            record.limit_estimate = x;
            record.iters = k;
            return Ok(record);
        }

        let next = map.damp(&x, &s);
        last_displacement = dist(&next, &x);
        x = next;
        k += 1;

        if !x.iter().all(|v| v.is_finite()) || norm(&x) > config.divergence_guard {
            record.terminated = Termination::Diverged;
            record.limit_estimate = x.clone();
            record.iters = k;
            push_final_row(&mut record, map, k, &x, last_displacement);
            return Ok(record);
        }

        let converged = if last_displacement == 0.0 {
            true
        } else if last_displacement <= config.stop_tol {
            streak += 1;
            streak >= CONFIRM_WINDOW
        } else {
            streak = 0;
            false
        };
        if converged {
            record.terminated = Termination::Converged;
            record.limit_estimate = x.clone();
            record.iters = k;
            let s_lim = match map.apply_s(&x) {
                Ok(s) => s,
                Err(e) => return Err(RunFailure { partial: record, source: e }),
            };
            let fp = dist(&s_lim, &x);
            if fp > 10.0 * config.stop_tol {
                return Err(RunFailure {
                    partial: record,
                    source: Error::Numerical(format!(
                        "converged limit is not a fixed point: ‖S(x)−x‖ = {fp:.3e}"
                    )),
                });
            }
            record.fixed_point_residual = Some(fp);
            push_final_row(&mut record, map, k, &x, last_displacement);
            return Ok(record);
        }
    }
}

fn push_final_row(
    record: &mut RunRecord,
    map: &IterationMap,
    k: usize,
    x: &[f64],
    last_displacement: f64,
) {
    let already = record.iterates.last().map(|(kk, _)| *kk) == Some(k);
    // A zero final displacement means the last recorded point already equals
    // the limit; skip the duplicate row.
    if already || last_displacement == 0.0 {
        return;
    }
    if let Ok(s) = map.apply_s(x) {
        record.iterates.push((k, x.to_vec()));
        record.f_values.push(map.objective(x));
        record.envelope_grad_norms.push(map.grad_norm_from_step(x, &s));
    }
}

/// Initial-condition sampler for escape experiments.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitSampler {
    /// Uniform over an axis-aligned box.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Uniform over the planar cone `{(x, y) : 0 < y ≤ y_max, |x| ≤ y/(1+λ)}`.
    Cone { lambda: f64, y_max: f64 },
}

impl InitSampler {
    pub fn dim(&self) -> usize {
        match self {
            InitSampler::Box { lo, .. } => lo.len(),
            InitSampler::Cone { .. } => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            InitSampler::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(Error::Input("box bounds must share a positive dimension".into()));
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::Input("box has lo > hi".into()));
                }
            }
            InitSampler::Cone { lambda, y_max } => {
                if !(*lambda > 0.0 && *y_max > 0.0) {
                    return Err(Error::Parameter("cone sampler needs lambda > 0, y_max > 0".into()));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            InitSampler::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| l + (h - l) * rng.gen::<f64>())
                .collect(),
            InitSampler::Cone { lambda, y_max } => {
                let y = y_max * (1.0 - rng.gen::<f64>());
                let x = (2.0 * rng.gen::<f64>() - 1.0) * y / (1.0 + lambda);
                vec![x, y]
            }
        }
    }
}

/// Status of one escape trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Converged,
    MaxIters,
    Diverged,
    Failed,
}

/// Per-trial outcome inside an [`EscapeReport`].
#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub status: TrialStatus,
    pub iters: usize,
    pub limit: Vec<f64>,
    pub distance_to_target: f64,
    pub to_target: bool,
    /// `‖S(limit) − limit‖` when the trial converged.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Monte Carlo escape experiment configuration.
#[derive(Clone)]
pub struct EscapeConfig {
    pub map: IterationMap,
    pub sampler: InitSampler,
    pub n_trials: usize,
    pub seed: u64,
    pub target: Vec<f64>,
    pub target_radius: f64,
    pub max_iters: usize,
    pub stop_tol: f64,
}

impl EscapeConfig {
    pub fn new(map: IterationMap, sampler: InitSampler, n_trials: usize, seed: u64) -> Self {
        let target = vec![0.0; sampler.dim()];
        EscapeConfig {
            map,
            sampler,
            n_trials,
            seed,
            target,
            target_radius: DEFAULT_TARGET_RADIUS,
            max_iters: 2000,
            stop_tol: 1e-9,
        }
    }
}

/// Aggregate of an escape experiment.
#[derive(Debug, Clone, Serialize)]
pub struct EscapeReport {
    pub schema_version: String,
    pub n_trials: usize,
    pub n_converged: usize,
    /// Converged limits within `target_radius` of the target.
    pub n_to_target: usize,
    pub fraction_to_target: f64,
    pub target: Vec<f64>,
    pub target_radius: f64,
    pub seed: u64,
    pub trials: Vec<TrialOutcome>,
}

/// Run `n_trials` independent damped iterations from sampled initializers and
/// classify each limit by its distance to the target point.
///
/// Deterministic given the seed: trial `i` draws from its own RNG stream
/// derived from `(seed, i)`, so results do not depend on execution order.
pub fn escape_experiment(config: &EscapeConfig) -> Result<EscapeReport> {
    config.sampler.validate()?;
    if config.sampler.dim() != config.map.dim() {
        return Err(Error::Input("sampler and map dimensions differ".into()));
    }
    if config.target.len() != config.map.dim() {
        return Err(Error::Input("target dimension differs from map".into()));
    }
    let mut trials = Vec::with_capacity(config.n_trials);
    let mut n_converged = 0usize;
    let mut n_to_target = 0usize;
    for trial in 0..config.n_trials {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(trial as u64 + 1);
        let x0 = config.sampler.sample(&mut rng);
        let mut run_config = RunConfig::new(config.map.clone(), x0);
        run_config.max_iters = config.max_iters;
        run_config.stop_tol = config.stop_tol;
        // Experiments only need the limit; skip intermediate rows.
        run_config.record_every = usize::MAX;
        run_config.seed = config.seed;
        let outcome = match run(&run_config) {
            Ok(record) => {
                let d = dist(&record.limit_estimate, &config.target);
                let converged = record.terminated == Termination::Converged;
                let to_target = converged && d <= config.target_radius;
                if converged {
                    n_converged += 1;
                }
                if to_target {
                    n_to_target += 1;
                }
                TrialOutcome {
                    trial,
                    status: match record.terminated {
                        Termination::Converged => TrialStatus::Converged,
                        Termination::MaxIters => TrialStatus::MaxIters,
                        Termination::Diverged => TrialStatus::Diverged,
                    },
                    iters: record.iters,
                    limit: record.limit_estimate,
                    distance_to_target: d,
                    to_target,
                    fixed_point_residual: record.fixed_point_residual,
                    error: None,
                }
            }
            Err(failure) => TrialOutcome {
                trial,
                status: TrialStatus::Failed,
                iters: failure.partial.iters,
                limit: failure.partial.limit_estimate,
                distance_to_target: f64::NAN,
                to_target: false,
                fixed_point_residual: None,
                error: Some(failure.source.to_string()),
            },
        };
        trials.push(outcome);
    }
    let fraction = if config.n_trials == 0 {
        0.0
    } else {
        n_to_target as f64 / config.n_trials as f64
    };
    Ok(EscapeReport {
        schema_version: "1".into(),
        n_trials: config.n_trials,
        n_converged,
        n_to_target,
        fraction_to_target: fraction,
        target: config.target.clone(),
        target_radius: config.target_radius,
        seed: config.seed,
        trials,
    })
}

/// Closed-form damped prox-point iterate on the pathological family inside
/// its invariant cone, cross-checked against the runner.
///
/// For `x0` in the cone `K = {(x, y) : |x| ≤ y/(1+λ)}`, the k-th damped
/// iterate is `((1−α)^k x0, (1 − α(1 − λ/(1+λ)))^k y0)`; every iterate stays
/// in `K`. Asserts agreement with [`run`] to `1e−10` and cone membership of
/// each intermediate iterate, then returns the closed-form k-th iterate.
pub fn cone_dynamics_check(
    rho: f64,
    lambda: f64,
    alpha: f64,
    x0: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    if !(lambda > rho && rho > 0.0) {
        return Err(Error::Parameter(format!(
            "need lambda > rho > 0, got lambda={lambda}, rho={rho}"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if x0.len() != 2 {
        return Err(Error::Input("cone dynamics live in the plane".into()));
    }
    if !in_cone(x0, lambda, 0.0) {
        return Err(Error::Precondition(format!(
            "x0 = ({}, {}) is outside the cone |x| <= y/(1+lambda)",
            x0[0], x0[1]
        )));
    }
    let x_factor = 1.0 - alpha;
    let y_factor = 1.0 - alpha * (1.0 - lambda / (1.0 + lambda));
    let closed = |j: usize| -> Vec<f64> {
        vec![x_factor.powi(j as i32) * x0[0], y_factor.powi(j as i32) * x0[1]]
    };
    if k > 0 {
        let map = IterationMap::prox_point(
            pathological(rho),
            ProxParams::new(1.0 / lambda),
            alpha,
        )?;
        let mut config = RunConfig::new(map, x0.to_vec());
        config.max_iters = k;
        config.stop_tol = f64::MIN_POSITIVE;
        config.record_every = 1;
        let record = run(&config).map_err(Error::from)?;
        for (j, point) in &record.iterates {
            let want = closed(*j);
            let d = dist(point, &want);
            if d > 1e-10 {
                return Err(Error::Numerical(format!(
                    "iterate {j} deviates from the closed form by {d:.3e}"
                )));
            }
            if !in_cone(point, lambda, 1e-12) {
                return Err(Error::Numerical(format!(
                    "iterate {j} = ({}, {}) left the cone",
                    point[0], point[1]
                )));
            }
        }
    }
    Ok(closed(k))
}

fn in_cone(p: &[f64], lambda: f64, slack: f64) -> bool {
    p[1] >= -slack && p[0].abs() <= p[1] / (1.0 + lambda) + slack
}

/// One node of a flow field table.
#[derive(Debug, Clone, Serialize)]
pub struct FlowNode {
    pub point: Vec<f64>,
    /// `−∇f_μ` at the node: the implicit-Euler subgradient-flow direction.
    pub direction: Vec<f64>,
}

/// Tabulate `−∇f_μ` on a rectangular grid for offline plotting. `resolution`
/// gives the number of nodes per dimension (1 places a node at the low edge).
pub fn flowfield(
    problem: &ProblemOracle,
    params: &ProxParams,
    lo: &[f64],
    hi: &[f64],
    resolution: &[usize],
) -> Result<Vec<FlowNode>> {
    let d = problem.dim();
    if lo.len() != d || hi.len() != d || resolution.len() != d {
        return Err(Error::Input("grid specification does not match problem dimension".into()));
    }
    if resolution.contains(&0) {
        return Err(Error::Parameter("grid resolution must be positive".into()));
    }
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let r = resolution[i];
            if r == 1 {
                vec![lo[i]]
            } else {
                (0..r)
                    .map(|j| lo[i] + (hi[i] - lo[i]) * j as f64 / (r - 1) as f64)
                    .collect()
            }
        })
        .collect();
    let mut nodes = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let point: Vec<f64> = (0..d).map(|i| axes[i][idx[i]]).collect();
        let grad = moreau_grad(problem, &point, params)?;
        nodes.push(FlowNode {
            point,
            direction: grad.iter().map(|g| -g).collect(),
        });
        // Odometer increment over the grid indices.
        let mut carry = d;
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < axes[i].len() {
                carry = i;
                break;
            }
            idx[i] = 0;
        }
        if carry == d {
            break;
        }
    }
    Ok(nodes)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{absym, absym_split};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn absym_prox_point(alpha: f64) -> IterationMap {
        IterationMap::prox_point(absym(), ProxParams::new(0.25), alpha).unwrap()
    }

    fn absym_split_map(alpha: f64) -> IterationMap {
        let (g, r) = absym_split();
        IterationMap::prox_gradient(g, r, ProxParams::new(0.25), alpha).unwrap()
    }

    #[test]
    fn diverging_run_hits_max_iters_when_budget_is_short() {
        // In |y| the damped map multiplies by 1 − α + α/(1 − 2μ) = 1.9.
        let mut config = RunConfig::new(absym_prox_point(0.9), vec![0.0, 0.5]);
        config.max_iters = 12;
        let record = run(&config).unwrap();
        assert_eq!(record.terminated, Termination::MaxIters);
        for win in record.iterates.windows(2) {
            let (_, a) = &win[0];
            let (_, b) = &win[1];
            assert_abs_diff_eq!(b[1] / a[1], 1.9, epsilon = 1e-12);
        }
    }

    #[test]
    fn diverging_run_trips_guard_with_long_budget() {
        let mut config = RunConfig::new(absym_prox_point(0.9), vec![0.0, 0.5]);
        config.max_iters = 10_000;
        let record = run(&config).unwrap();
        assert_eq!(record.terminated, Termination::Diverged);
        assert!(norm(&record.limit_estimate) > DEFAULT_DIVERGENCE_GUARD);
    }

    #[test]
    fn stable_axis_converges_to_origin() {
        let mut config = RunConfig::new(absym_prox_point(0.9), vec![0.4, 0.0]);
        config.stop_tol = 1e-9;
        let record = run(&config).unwrap();
        assert_eq!(record.terminated, Termination::Converged);
        assert!(norm(&record.limit_estimate) <= 1e-6);
        assert!(record.fixed_point_residual.unwrap() <= 1e-8);
        // On convergence the final displacement is below stop_tol.
        let n = record.iterates.len();
        let last = &record.iterates[n - 1].1;
        let prev = &record.iterates[n - 2].1;
        assert!(dist(last, prev) <= config.stop_tol);
    }

    #[test]
    fn fixed_point_start_converges_immediately() {
        let config = RunConfig::new(absym_prox_point(0.9), vec![0.0, 0.0]);
        let record = run(&config).unwrap();
        assert_eq!(record.terminated, Termination::Converged);
        assert_eq!(record.iters, 1);
        assert_eq!(record.limit_estimate, vec![0.0, 0.0]);
        // Single-row trajectory.
        assert_eq!(record.iterates.len(), 1);
        assert_eq!(record.iterates[0].0, 0);
    }

    #[test]
    fn csv_round_trips_full_precision() {
        let mut config = RunConfig::new(absym_prox_point(0.9), vec![0.4, 0.0]);
        config.record_every = 2;
        let record = run(&config).unwrap();
        let csv = record.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iter,x_0,x_1,f,env_grad_norm");
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5);
            let x0: f64 = fields[1].parse().unwrap();
            assert_eq!(x0, record.iterates[row].1[0], "lossless float round-trip");
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let config = {
            let mut c = RunConfig::new(absym_prox_point(0.9), vec![0.37, 0.0]);
            c.stop_tol = 1e-10;
            c
        };
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn escape_zero_trials_is_empty() {
        let config = EscapeConfig::new(
            absym_split_map(0.4),
            InitSampler::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] },
            0,
            7,
        );
        let report = escape_experiment(&config).unwrap();
        assert_eq!(report.n_trials, 0);
        assert_eq!(report.fraction_to_target, 0.0);
        assert!(report.trials.is_empty());
    }

    #[test]
    fn escape_absym_split_never_reaches_origin() {
        let mut config = EscapeConfig::new(
            absym_split_map(0.4),
            InitSampler::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] },
            50,
            7,
        );
        config.max_iters = 500;
        let report = escape_experiment(&config).unwrap();
        assert_eq!(report.n_to_target, 0);
        assert_eq!(report.fraction_to_target, 0.0);
        for t in &report.trials {
            assert_ne!(t.status, TrialStatus::Failed);
        }
    }

    #[test]
    fn escape_cone_sampling_all_reach_origin() {
        let map = IterationMap::prox_point(
            crate::problems::pathological(2.0),
            ProxParams::new(1.0 / 6.0),
            0.5,
        )
        .unwrap();
        let config = EscapeConfig::new(
            map,
            InitSampler::Cone { lambda: 6.0, y_max: 1.0 },
            20,
            11,
        );
        let report = escape_experiment(&config).unwrap();
        assert_eq!(report.n_converged, 20);
        assert_eq!(report.n_to_target, 20);
        assert_eq!(report.fraction_to_target, 1.0);
    }

    #[test]
    fn escape_reports_are_byte_identical_under_fixed_seed() {
        let config = EscapeConfig::new(
            absym_split_map(0.4),
            InitSampler::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] },
            25,
            13,
        );
        let a = serde_json::to_string_pretty(&escape_experiment(&config).unwrap()).unwrap();
        let b = serde_json::to_string_pretty(&escape_experiment(&config).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cone_dynamics_examples() {
        let p = cone_dynamics_check(2.0, 6.0, 0.5, &[0.0, 1.0], 3).unwrap();
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], (13.0f64 / 14.0).powi(3), epsilon = 1e-12);

        // Undamped: the x coordinate is exactly zero after one step.
        let p = cone_dynamics_check(2.0, 6.0, 1.0, &[0.1, 0.8], 1).unwrap();
        assert_eq!(p[0], 0.0);

        // k = 0 returns x0.
        let p = cone_dynamics_check(2.0, 6.0, 0.5, &[0.05, 0.9], 0).unwrap();
        assert_eq!(p, vec![0.05, 0.9]);
    }

    #[test]
    fn cone_dynamics_rejects_outside_cone() {
        let r = cone_dynamics_check(2.0, 6.0, 0.5, &[0.5, 1.0], 3);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn flowfield_examples() {
        let f = absym();
        let params = ProxParams::new(0.25);
        // At the critical point the field vanishes.
        let nodes = flowfield(&f, &params, &[0.0, 0.0], &[0.0, 0.0], &[1, 1]).unwrap();
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].direction, vec![0.0, 0.0]);

        // At (0, 1): direction = (prox(x) − x)/μ = ((0,2) − (0,1))/0.25.
        let nodes = flowfield(&f, &params, &[0.0, 1.0], &[0.0, 1.0], &[1, 1]).unwrap();
        assert_abs_diff_eq!(nodes[0].direction[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(nodes[0].direction[1], 4.0, epsilon = 1e-12);

        let grid = flowfield(&f, &params, &[-1.0, -1.0], &[1.0, 1.0], &[3, 5]).unwrap();
        assert_eq!(grid.len(), 15);
    }

    #[test]
    fn fixed_points_of_damped_and_undamped_maps_coincide() {
        for map in [absym_prox_point(0.6), absym_split_map(0.4)] {
            let x = [0.0, 0.0];
            let s = map.apply_s(&x).unwrap();
            let t = map.apply_t(&x).unwrap();
            assert_eq!(s, x.to_vec());
            assert_eq!(t, x.to_vec());
        }
    }

    proptest! {
        /// Cone invariance of the damped map on the pathological family.
        #[test]
        fn damped_map_preserves_cone(u in -1.0f64..1.0, y in 1e-6f64..1.0, alpha in 0.05f64..1.0) {
            let lambda = 6.0;
            let x = u * y / (1.0 + lambda);
            let map = IterationMap::prox_point(
                crate::problems::pathological(2.0),
                ProxParams::new(1.0 / lambda),
                alpha,
            ).unwrap();
            let next = map.apply_t(&[x, y]).unwrap();
            prop_assert!(in_cone(&next, lambda, 1e-12));
        }

        /// Lipschitz-invertibility surrogate: with α below the damping bound,
        /// the damped prox-point map cannot contract pairs by more than 1 − αL.
        #[test]
        fn damped_map_is_expansive_bounded(
            xa in -2.0f64..2.0, xb in -2.0f64..2.0,
            ya in -2.0f64..2.0, yb in -2.0f64..2.0,
        ) {
            let alpha = 0.9;
            let map = absym_prox_point(alpha);
            let (mu, rho) = (0.25f64, 2.0f64);
            let lip = (mu * rho / (1.0 - mu * rho)).max(1.0);
            let tx = map.apply_t(&[xa, xb]).unwrap();
            let ty = map.apply_t(&[ya, yb]).unwrap();
            let dt = dist(&tx, &ty);
            let dx = dist(&[xa, xb], &[ya, yb]);
            prop_assert!(dt >= (1.0 - alpha * lip) * dx - 1e-12);
        }
    }
}
