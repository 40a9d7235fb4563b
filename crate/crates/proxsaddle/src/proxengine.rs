//! Proximal operators, Moreau envelope values and gradients, and the three
//! one-step update maps (prox-point, prox-gradient, prox-linear), each with
//! its damped variant `T(x) = (1−α)x + αS(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{CompositeProblem, ProblemOracle, SmoothPiece};

/// Which one-step map an [`IterationMap`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    ProxPoint,
    ProxGradient,
    ProxLinear,
}

impl MapKind {
    /// Parse a CLI algorithm name.
    pub fn parse(s: &str) -> Result<MapKind> {
        match s {
            "prox-point" => Ok(MapKind::ProxPoint),
            "prox-gradient" => Ok(MapKind::ProxGradient),
            "prox-linear" => Ok(MapKind::ProxLinear),
            _ => Err(Error::Input(format!(
                "unknown algorithm {s:?}; expected prox-point, prox-gradient, or prox-linear"
            ))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            MapKind::ProxPoint => "prox-point",
            MapKind::ProxGradient => "prox-gradient",
            MapKind::ProxLinear => "prox-linear",
        }
    }
}

/// Parameters of a proximal subproblem solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProxParams {
    /// Prox parameter μ; must satisfy `μ < 1/ρ` for the target problem.
    pub mu: f64,
    /// Displacement tolerance of the numeric inner solver (scaled by μ).
    pub inner_tol: f64,
    /// Iteration budget of the numeric inner solver.
    pub inner_max_iters: usize,
}

impl ProxParams {
    /// Defaults: `inner_tol = 1e−10`, `inner_max_iters = 100000`.
    pub fn new(mu: f64) -> Self {
        assert!(mu > 0.0, "prox parameter must be positive");
        ProxParams { mu, inner_tol: 1e-10, inner_max_iters: 100_000 }
    }

    fn check_against_rho(&self, rho: f64) -> Result<()> {
        if rho > 0.0 && self.mu >= 1.0 / rho {
            return Err(Error::Parameter(format!(
                "mu = {} must be below 1/rho = {}",
                self.mu,
                1.0 / rho
            )));
        }
        Ok(())
    }
}

/// `prox_{μf}(x)`: the exact prox when the oracle carries one, otherwise the
/// numeric inner solve of the strongly convex subproblem.
pub fn prox(problem: &ProblemOracle, x: &[f64], params: &ProxParams) -> Result<Vec<f64>> {
    if x.len() != problem.dim() {
        return Err(Error::Input(format!(
            "point has dimension {}, problem has dimension {}",
            x.len(),
            problem.dim()
        )));
    }
    params.check_against_rho(problem.rho())?;
    if let Some(p) = problem.prox_exact(x, params.mu) {
        return Ok(p);
    }
    if !problem.has_subgrad() {
        return Err(Error::Capability(
            "problem provides neither an exact prox nor a subgradient oracle".into(),
        ));
    }
    let mu = params.mu;
    let value = |y: &[f64]| problem.value(y) + 0.5 / mu * dist2(y, x);
    let subgrad = |y: &[f64]| {
        let mut g = problem.subgrad(y).expect("checked above");
        for i in 0..g.len() {
            g[i] += (y[i] - x[i]) / mu;
        }
        g
    };
    numeric_inner_solve(
        &value,
        &subgrad,
        x,
        1.0 / mu - problem.rho(),
        params.inner_tol * mu,
        params.inner_max_iters,
    )
}

/// Moreau envelope value `f_μ(x) = f(p) + ‖p−x‖²/(2μ)` with `p = prox_{μf}(x)`.
pub fn moreau_value(problem: &ProblemOracle, x: &[f64], params: &ProxParams) -> Result<f64> {
    let p = prox(problem, x, params)?;
    Ok(problem.value(&p) + 0.5 / params.mu * dist2(&p, x))
}

/// Envelope gradient `∇f_μ(x) = μ⁻¹(x − prox_{μf}(x))`.
pub fn moreau_grad(problem: &ProblemOracle, x: &[f64], params: &ProxParams) -> Result<Vec<f64>> {
    let p = prox(problem, x, params)?;
    Ok(x.iter().zip(&p).map(|(xi, pi)| (xi - pi) / params.mu).collect())
}

/// One prox-gradient step `prox_{μr}(x − μ∇g(x))`.
pub fn prox_gradient_step(
    g: &SmoothPiece,
    r: &ProblemOracle,
    x: &[f64],
    params: &ProxParams,
) -> Result<Vec<f64>> {
    let grad = g.gradient(x);
    let stepped: Vec<f64> =
        x.iter().zip(&grad).map(|(xi, gi)| xi - params.mu * gi).collect();
    prox(r, &stepped, params)
}

/// One prox-linear step: minimize
/// `h(F(x) + ∇F(x)(y−x)) + r(y) + ‖y−x‖²/(2μ)` over `y`.
pub fn prox_linear_step(
    cp: &CompositeProblem,
    x: &[f64],
    params: &ProxParams,
) -> Result<Vec<f64>> {
    params.check_against_rho(cp.rho_r())?;
    if let Some(p) = cp.prox_linear_exact(x, params.mu) {
        return Ok(p);
    }
    if !cp.h().has_subgrad() || !cp.r().has_subgrad() {
        return Err(Error::Capability(
            "generic prox-linear solve needs subgradient oracles for h and r".into(),
        ));
    }
    let mu = params.mu;
    let fx = cp.f_map(x);
    let jac = cp.jacobian(x);
    let jac_t = jac.transpose();
    let linearized = |y: &[f64]| -> Vec<f64> {
        let d: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi - xi).collect();
        let jd = jac.matvec(&d);
        fx.iter().zip(&jd).map(|(a, b)| a + b).collect()
    };
    let value = |y: &[f64]| {
        cp.h().value(&linearized(y)) + cp.r().value(y) + 0.5 / mu * dist2(y, x)
    };
    let subgrad = |y: &[f64]| {
        let hz = cp.h().subgrad(&linearized(y)).expect("checked above");
        let mut g = jac_t.matvec(&hz);
        let rg = cp.r().subgrad(y).expect("checked above");
        for i in 0..g.len() {
            g[i] += rg[i] + (y[i] - x[i]) / mu;
        }
        g
    };
    numeric_inner_solve(
        &value,
        &subgrad,
        x,
        1.0 / mu - cp.rho_r(),
        params.inner_tol * mu,
        params.inner_max_iters,
    )
}

/// Exclusive supremum of the admissible damping parameter α for each map
/// kind, so that the damped map is a lipeomorphism (prox-point and
/// prox-gradient) or a local diffeomorphism near critical points
/// (prox-linear).
pub fn max_damping(kind: MapKind, rho: f64, mu: f64, beta: f64) -> Result<f64> {
    if mu <= 0.0 {
        return Err(Error::Parameter("mu must be positive".into()));
    }
    if rho < 0.0 || beta < 0.0 {
        return Err(Error::Parameter("rho and beta must be nonnegative".into()));
    }
    let mu_rho = mu * rho;
    match kind {
        MapKind::ProxPoint => {
            if mu_rho >= 1.0 {
                return Err(Error::Parameter(format!("mu*rho = {mu_rho} must be below 1")));
            }
            if mu_rho == 0.0 {
                Ok(1.0)
            } else {
                Ok((1.0 / mu_rho - 1.0).min(1.0))
            }
        }
        MapKind::ProxGradient => {
            if mu_rho >= 1.0 {
                return Err(Error::Parameter(format!("mu*rho = {mu_rho} must be below 1")));
            }
            let lip = mu * beta
                + (1.0 + mu * beta) * (mu_rho / (1.0 - mu_rho)).max(1.0);
            Ok((1.0 / lip).min(1.0))
        }
        MapKind::ProxLinear => {
            let denom = 1.0 - mu * rho - 2.0 * mu * beta;
            if denom <= 0.0 {
                return Err(Error::Parameter(format!(
                    "mu = {mu} must be below 1/(rho + 2*beta) = {}",
                    1.0 / (rho + 2.0 * beta)
                )));
            }
            let slope = (1.0 + (2.0 * beta * mu / (1.0 - mu * beta - mu_rho)).sqrt())
                * ((mu_rho + mu * beta) / denom).max(1.0);
            Ok((1.0 / (1.0 + slope)).min(1.0))
        }
    }
}

/// Subgradient descent on a strongly convex subproblem.
///
/// Runs stages of fixed-step subgradient steps, the first step being the
/// `1/(2σ)` suggested by the strong-convexity lower bound on the optimality
/// gap, halving the step between stages (restarting a stage from the best
/// point seen when it regressed). Stops once every step of a stage moves less
/// than `tol`.
pub fn numeric_inner_solve(
    value: &dyn Fn(&[f64]) -> f64,
    subgrad: &dyn Fn(&[f64]) -> Vec<f64>,
    seed: &[f64],
    modulus: f64,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    if modulus <= 0.0 {
        return Err(Error::Parameter("strong-convexity modulus must be positive".into()));
    }
    if tol <= 0.0 {
        return Err(Error::Parameter("tolerance must be positive".into()));
    }
    const STAGE_STEPS: usize = 64;

    let mut y = seed.to_vec();
    let mut best = y.clone();
    let mut best_val = value(&y);
    let mut step = 0.5 / modulus;
    let mut iters = 0usize;
    loop {
        let stage_entry_val = value(&y);
        let mut stage_max_move = 0.0f64;
        for _ in 0..STAGE_STEPS {
            let g = subgrad(&y);
            let mut move2 = 0.0;
            for i in 0..y.len() {
                let d = step * g[i];
                y[i] -= d;
                move2 += d * d;
            }
            stage_max_move = stage_max_move.max(move2.sqrt());
            let v = value(&y);
            if v < best_val {
                best_val = v;
                best.copy_from_slice(&y);
            }
            iters += 1;
            if iters >= max_iters {
                if stage_max_move <= tol {
                    return Ok(y);
                }
                return Err(Error::Convergence {
                    best,
                    residual: stage_max_move,
                    iters,
                });
            }
        }
        if stage_max_move <= tol {
            return Ok(y);
        }
        // A regressing stage means the step is too large for the stiffest
        // direction; resume from the best point seen.
        if value(&y) > stage_entry_val {
            y.copy_from_slice(&best);
        }
        step *= 0.5;
    }
}

/// The underlying problem of an iteration map.
#[derive(Clone)]
pub enum MapProblem {
    Plain(ProblemOracle),
    Split { smooth: SmoothPiece, reg: ProblemOracle },
    Composite(CompositeProblem),
}

/// A named one-step map `x ↦ S(x)` together with its damped version
/// `T(x) = (1−α)x + αS(x)`.
#[derive(Clone)]
pub struct IterationMap {
    kind: MapKind,
    problem: MapProblem,
    params: ProxParams,
    alpha: f64,
    damping_warning: bool,
}

impl IterationMap {
    /// Damped prox-point map on a plain oracle.
    pub fn prox_point(problem: ProblemOracle, params: ProxParams, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        params.check_against_rho(problem.rho())?;
        Ok(IterationMap {
            kind: MapKind::ProxPoint,
            problem: MapProblem::Plain(problem),
            params,
            alpha,
            damping_warning: false,
        })
    }

    /// Damped prox-gradient map on an additive split `g + r`.
    pub fn prox_gradient(
        smooth: SmoothPiece,
        reg: ProblemOracle,
        params: ProxParams,
        alpha: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        params.check_against_rho(reg.rho())?;
        if smooth.dim() != reg.dim() {
            return Err(Error::Input("smooth piece and regularizer dimensions differ".into()));
        }
        Ok(IterationMap {
            kind: MapKind::ProxGradient,
            problem: MapProblem::Split { smooth, reg },
            params,
            alpha,
            damping_warning: false,
        })
    }

    /// Damped prox-linear map on a composite problem.
    pub fn prox_linear(cp: CompositeProblem, params: ProxParams, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        params.check_against_rho(cp.rho_r())?;
        Ok(IterationMap {
            kind: MapKind::ProxLinear,
            problem: MapProblem::Composite(cp),
            params,
            alpha,
            damping_warning: false,
        })
    }

    /// Enforce that α is below the admissible damping bound. For prox-linear
    /// the bound guards only the local escape guarantee, so a violation (or a
    /// μ outside the bound's own range) is recorded as a warning rather than
    /// rejected.
    pub fn strict(mut self) -> Result<Self> {
        match self.max_damping() {
            Ok(bound) if self.alpha < bound => {}
            _ if self.kind == MapKind::ProxLinear => self.damping_warning = true,
            Ok(bound) => {
                return Err(Error::Parameter(format!(
                    "alpha = {} is not below the admissible damping bound {:.6} for {}",
                    self.alpha,
                    bound,
                    self.kind.id()
                )))
            }
            Err(e) => return Err(e),
        }
        Ok(self)
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn params(&self) -> &ProxParams {
        &self.params
    }

    pub fn problem(&self) -> &MapProblem {
        &self.problem
    }

    /// Set when [`IterationMap::strict`] found the prox-linear damping bound
    /// violated.
    pub fn damping_warning(&self) -> bool {
        self.damping_warning
    }

    pub fn dim(&self) -> usize {
        match &self.problem {
            MapProblem::Plain(p) => p.dim(),
            MapProblem::Split { reg, .. } => reg.dim(),
            MapProblem::Composite(cp) => cp.dim(),
        }
    }

    /// The weak-convexity modulus relevant to this map's prox subproblem.
    pub fn rho(&self) -> f64 {
        match &self.problem {
            MapProblem::Plain(p) => p.rho(),
            MapProblem::Split { reg, .. } => reg.rho(),
            MapProblem::Composite(cp) => cp.rho_r(),
        }
    }

    /// The smoothness/linearization constant relevant to the damping bound.
    pub fn beta(&self) -> f64 {
        match &self.problem {
            MapProblem::Plain(_) => 0.0,
            MapProblem::Split { smooth, .. } => smooth.beta(),
            MapProblem::Composite(cp) => cp.beta(),
        }
    }

    /// Exclusive supremum of admissible α for this map.
    pub fn max_damping(&self) -> Result<f64> {
        max_damping(self.kind, self.rho(), self.params.mu, self.beta())
    }

    /// The undamped map `S(x)`.
    pub fn apply_s(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.problem {
            MapProblem::Plain(p) => prox(p, x, &self.params),
            MapProblem::Split { smooth, reg } => {
                prox_gradient_step(smooth, reg, x, &self.params)
            }
            MapProblem::Composite(cp) => prox_linear_step(cp, x, &self.params),
        }
    }

    /// The damped map `T(x) = (1−α)x + αS(x)`.
    pub fn apply_t(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.apply_s(x)?;
        Ok(self.damp(x, &s))
    }

    /// Combine a precomputed `S(x)` with `x`.
    pub fn damp(&self, x: &[f64], s: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(s)
            .map(|(xi, si)| (1.0 - self.alpha) * xi + self.alpha * si)
            .collect()
    }

    /// Full objective value driving this map.
    pub fn objective(&self, x: &[f64]) -> f64 {
        match &self.problem {
            MapProblem::Plain(p) => p.value(x),
            MapProblem::Split { smooth, reg } => smooth.value(x) + reg.value(x),
            MapProblem::Composite(cp) => cp.objective(x),
        }
    }

    /// Stationarity surrogate `‖x − S(x)‖/μ` from a precomputed step; equals
    /// `‖∇f_μ(x)‖` for the prox-point map.
    pub fn grad_norm_from_step(&self, x: &[f64], s: &[f64]) -> f64 {
        dist2(x, s).sqrt() / self.params.mu
    }

    /// Distance from `x` to the nearest known kink of `S`, when the problem
    /// carries that information.
    pub fn kink_distance(&self, x: &[f64]) -> Option<f64> {
        let mu = self.params.mu;
        match &self.problem {
            MapProblem::Plain(p) => p.prox_kink_distance(x, mu),
            MapProblem::Split { smooth, reg } => {
                let grad = smooth.gradient(x);
                let z: Vec<f64> =
                    x.iter().zip(&grad).map(|(xi, gi)| xi - mu * gi).collect();
                reg.prox_kink_distance(&z, mu)
            }
            MapProblem::Composite(cp) => cp.step_kink_distance(x, mu),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{
        absym, absym_composite, absym_split, pathological, CompositeProblem, ProblemOracle,
    };
    use crate::matrix::Mat;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p25() -> ProxParams {
        ProxParams::new(0.25)
    }

    #[test]
    fn prox_absym_example() {
        let p = prox(&absym(), &[1.0, 0.2], &p25()).unwrap();
        assert_eq!(p, vec![0.75, 0.4]);
    }

    #[test]
    fn prox_fixes_critical_points() {
        let p = prox(&absym(), &[0.0, 0.0], &p25()).unwrap();
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn prox_pathological_example() {
        let p = prox(&pathological(2.0), &[0.0, 1.0], &ProxParams::new(1.0 / 6.0)).unwrap();
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 6.0 / 7.0, epsilon = 1e-15);
    }

    #[test]
    fn prox_rejects_mu_at_weak_convexity_limit() {
        let r = prox(&absym(), &[1.0, 0.0], &ProxParams::new(0.6));
        assert!(matches!(r, Err(Error::Parameter(_))));
    }

    #[test]
    fn moreau_value_examples() {
        let v = moreau_value(&absym(), &[1.0, 0.2], &p25()).unwrap();
        assert_abs_diff_eq!(v, 0.795, epsilon = 1e-12);
        let at_crit = moreau_value(&absym(), &[0.0, 0.0], &p25()).unwrap();
        assert_abs_diff_eq!(at_crit, 0.0, epsilon = 1e-15);
        let path = moreau_value(&pathological(2.0), &[0.0, 0.0], &ProxParams::new(1.0 / 6.0))
            .unwrap();
        assert_abs_diff_eq!(path, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn moreau_grad_examples() {
        let g = moreau_grad(&absym(), &[1.0, 0.2], &p25()).unwrap();
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], -0.8, epsilon = 1e-12);
        let at_crit = moreau_grad(&absym(), &[0.0, 0.0], &p25()).unwrap();
        assert_eq!(at_crit, vec![0.0, 0.0]);
    }

    #[test]
    fn moreau_grad_matches_finite_differences() {
        let f = absym();
        let params = p25();
        // Points kept away from the envelope's curvature jumps at |x| = mu.
        for p in [[0.8, 0.3], [-1.2, -0.4], [0.05, 1.1], [0.6, -2.0]] {
            let g = moreau_grad(&f, &p, &params).unwrap();
            let h = 1e-4 * p.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            for i in 0..2 {
                let mut hi = p;
                let mut lo = p;
                hi[i] += h;
                lo[i] -= h;
                let fd = (moreau_value(&f, &hi, &params).unwrap()
                    - moreau_value(&f, &lo, &params).unwrap())
                    / (2.0 * h);
                assert_abs_diff_eq!(fd, g[i], epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn prox_gradient_step_examples() {
        let (g, r) = absym_split();
        assert_eq!(prox_gradient_step(&g, &r, &[0.0, 0.0], &p25()).unwrap(), vec![0.0, 0.0]);
        assert_eq!(prox_gradient_step(&g, &r, &[0.0, 1.0], &p25()).unwrap(), vec![0.0, 1.5]);
        assert_eq!(prox_gradient_step(&g, &r, &[0.1, 0.0], &p25()).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn prox_linear_step_examples() {
        let cp = absym_composite();
        assert_eq!(prox_linear_step(&cp, &[0.0, 0.0], &p25()).unwrap(), vec![0.0, 0.0]);
        assert_eq!(prox_linear_step(&cp, &[0.1, 1.0], &p25()).unwrap(), vec![0.0, 1.5]);
        assert_eq!(prox_linear_step(&cp, &[1.0, 0.0], &p25()).unwrap(), vec![0.75, 0.0]);
    }

    #[test]
    fn prox_linear_numeric_agrees_with_closed_form() {
        // Same composite, but without the closed-form shortcut.
        let cp = absym_composite();
        let h = cp.h().clone();
        let r = cp.r().clone();
        let numeric = CompositeProblem::new(
            2,
            2,
            h,
            |p: &[f64]| vec![p[0], -p[1] * p[1]],
            |p: &[f64]| Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, -2.0 * p[1]]]),
            r,
            2.0,
        );
        let mut params = p25();
        params.inner_tol = 1e-9;
        for x in [[0.1, 1.0], [1.0, 0.0], [-0.7, 0.4]] {
            let got = prox_linear_step(&numeric, &x, &params).unwrap();
            let want = prox_linear_step(&cp, &x, &p25()).unwrap();
            let dist = dist2(&got, &want).sqrt();
            assert!(dist <= 1e-6, "x = {x:?}: dist {dist:.2e}");
        }
    }

    #[test]
    fn max_damping_examples() {
        assert_abs_diff_eq!(
            max_damping(MapKind::ProxPoint, 2.0, 0.25, 0.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            max_damping(MapKind::ProxGradient, 0.0, 0.25, 2.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            max_damping(MapKind::ProxLinear, 0.0, 0.1, 2.0).unwrap(),
            1.0 / (2.0 + 0.5f64.sqrt()),
            epsilon = 1e-15
        );
    }

    #[test]
    fn max_damping_rejects_out_of_range() {
        assert!(max_damping(MapKind::ProxPoint, 2.0, 0.5, 0.0).is_err());
        assert!(max_damping(MapKind::ProxLinear, 0.0, 0.3, 2.0).is_err());
    }

    #[test]
    fn numeric_solve_quadratic() {
        let a = [0.3, -1.1];
        let value = |y: &[f64]| 0.5 * dist2(y, &a);
        let subgrad = |y: &[f64]| y.iter().zip(&a).map(|(yi, ai)| yi - ai).collect();
        let out = numeric_inner_solve(&value, &subgrad, &[0.0, 0.0], 1.0, 1e-10, 100_000)
            .unwrap();
        assert!(dist2(&out, &a).sqrt() <= 1e-8);
    }

    #[test]
    fn numeric_solve_matches_absym_prox() {
        let f = absym();
        let mu = 0.25;
        let x = [1.0, 0.2];
        let value = |y: &[f64]| f.value(y) + 0.5 / mu * dist2(y, &x);
        let subgrad = |y: &[f64]| {
            let mut g = f.subgrad(y).unwrap();
            for i in 0..2 {
                g[i] += (y[i] - x[i]) / mu;
            }
            g
        };
        let out = numeric_inner_solve(&value, &subgrad, &x, 1.0 / mu - 2.0, 1e-9, 100_000)
            .unwrap();
        let exact = f.prox_exact(&x, mu).unwrap();
        assert!(dist2(&out, &exact).sqrt() <= 1e-6);
    }

    #[test]
    fn numeric_solve_matches_pathological_prox() {
        let f = pathological(2.0);
        let mu = 1.0 / 6.0;
        let x = [0.5, 1.0];
        let value = |y: &[f64]| f.value(y) + 0.5 / mu * dist2(y, &x);
        let subgrad = |y: &[f64]| {
            let mut g = f.subgrad(y).unwrap();
            for i in 0..2 {
                g[i] += (y[i] - x[i]) / mu;
            }
            g
        };
        let out = numeric_inner_solve(&value, &subgrad, &x, 6.0 - 2.0, 1e-9, 100_000).unwrap();
        let exact = f.prox_exact(&x, mu).unwrap();
        assert!(dist2(&out, &exact).sqrt() <= 1e-6);
    }

    #[test]
    fn numeric_solve_budget_error_carries_best() {
        let value = |y: &[f64]| y[0].abs() + 0.5 * y[0] * y[0];
        let subgrad = |y: &[f64]| vec![y[0].signum() + y[0]];
        let r = numeric_inner_solve(&value, &subgrad, &[10.0], 1.0, 1e-14, 5);
        match r {
            Err(Error::Convergence { best, residual, iters }) => {
                assert_eq!(iters, 5);
                assert!(residual > 0.0);
                assert_eq!(best.len(), 1);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn strict_mode_enforces_damping() {
        let map =
            IterationMap::prox_gradient(absym_split().0, absym_split().1, p25(), 0.6).unwrap();
        assert!(matches!(map.strict(), Err(Error::Parameter(_))));
        let ok = IterationMap::prox_gradient(absym_split().0, absym_split().1, p25(), 0.4)
            .unwrap()
            .strict()
            .unwrap();
        assert!(!ok.damping_warning());
        // Prox-linear strict mode warns instead of rejecting, both above the
        // bound and when mu falls outside the bound's own range.
        let warn = IterationMap::prox_linear(absym_composite(), ProxParams::new(0.2), 0.9)
            .unwrap()
            .strict()
            .unwrap();
        assert!(warn.damping_warning());
        let warn2 = IterationMap::prox_linear(absym_composite(), p25(), 0.9)
            .unwrap()
            .strict()
            .unwrap();
        assert!(warn2.damping_warning());
        let fine = IterationMap::prox_linear(absym_composite(), ProxParams::new(0.1), 0.35)
            .unwrap()
            .strict()
            .unwrap();
        assert!(!fine.damping_warning());
    }

    #[test]
    fn alpha_range_is_validated() {
        assert!(IterationMap::prox_point(absym(), p25(), 0.0).is_err());
        assert!(IterationMap::prox_point(absym(), p25(), 1.2).is_err());
        assert!(IterationMap::prox_point(absym(), p25(), 1.0).is_ok());
    }

    #[test]
    fn envelope_descent_property() {
        // f(prox(x)) + ‖prox(x)−x‖²/(2μ) ≤ f(x).
        let f = absym();
        let params = p25();
        for x in [[1.0, 0.2], [-0.3, 0.9], [0.0, -1.4], [2.0, 2.0]] {
            let v = moreau_value(&f, &x, &params).unwrap();
            assert!(v <= f.value(&x) + 1e-12);
        }
    }

    #[test]
    fn prox_linear_one_step_decrease() {
        // f(S(x)) + (1/(2μ) − β/2)‖S(x)−x‖² ≤ f(x).
        let cp = absym_composite();
        let params = ProxParams::new(0.2);
        for x in [[0.4, 0.3], [-1.0, 0.2], [0.05, -0.6]] {
            let s = prox_linear_step(&cp, &x, &params).unwrap();
            let lhs = cp.objective(&s)
                + (0.5 / params.mu - 0.5 * cp.beta()) * dist2(&s, &x);
            assert!(lhs <= cp.objective(&x) + 1e-12);
        }
    }

    fn quadratic_weakly_convex() -> ProblemOracle {
        // No exact prox attached: exercises the numeric path inside prox().
        ProblemOracle::new(1, 1.0, |p: &[f64]| -0.5 * p[0] * p[0])
            .with_subgrad(|p: &[f64]| vec![-p[0]])
    }

    #[test]
    fn prox_numeric_path_via_oracle() {
        // prox of −½y² at x solves y(1/μ − 1) = x/μ, i.e. y = x/(1−μ).
        let f = quadratic_weakly_convex();
        let params = ProxParams::new(0.5);
        let p = prox(&f, &[1.0], &params).unwrap();
        assert!((p[0] - 2.0).abs() <= 1e-6);
    }

    proptest! {
        /// Lipschitz bound on the prox map with constant 1/(1−μρ).
        #[test]
        fn prox_is_lipschitz(
            xa in -2.0f64..2.0, xb in -2.0f64..2.0,
            ya in -2.0f64..2.0, yb in -2.0f64..2.0,
        ) {
            let params = p25();
            for f in [absym(), pathological(2.0)] {
                if params.mu >= 1.0 / f.rho() { continue; }
                let px = prox(&f, &[xa, xb], &params).unwrap();
                let py = prox(&f, &[ya, yb], &params).unwrap();
                let lip = 1.0 / (1.0 - params.mu * f.rho());
                let dp = dist2(&px, &py).sqrt();
                let dx = ((xa - ya).powi(2) + (xb - yb).powi(2)).sqrt();
                prop_assert!(dp <= (lip + 1e-6) * dx + 1e-12);
            }
        }

        /// Two-sided envelope curvature bound with moduli ρ/(1−μρ) and 1/μ.
        #[test]
        fn envelope_smoothness_sandwich(
            xa in -2.0f64..2.0, xb in -2.0f64..2.0,
            ya in -2.0f64..2.0, yb in -2.0f64..2.0,
        ) {
            let params = p25();
            let f = absym();
            let x = [xa, xb];
            let xp = [ya, yb];
            let fx = moreau_value(&f, &x, &params).unwrap();
            let fxp = moreau_value(&f, &xp, &params).unwrap();
            let g = moreau_grad(&f, &x, &params).unwrap();
            let inner: f64 = g.iter().zip(xp.iter().zip(x.iter()))
                .map(|(gi, (a, b))| gi * (a - b)).sum();
            let gap = fxp - fx - inner;
            let d2 = dist2(&xp, &x);
            let lo = -0.5 * f.rho() / (1.0 - params.mu * f.rho()) * d2;
            let hi = 0.5 / params.mu * d2;
            prop_assert!(gap >= lo - 1e-8);
            prop_assert!(gap <= hi + 1e-8);
        }
    }
}
