//! Problem oracles and the built-in test problems.
//!
//! A [`ProblemOracle`] is a weakly convex objective exposed through callables:
//! a value, optionally one deterministic subgradient selection, and optionally
//! an exact proximal map. Built-ins with known critical-point structure live
//! in [`builtins`]; a derivative-free reference solver for prox subproblems
//! lives in [`brute`].

mod brute;
mod builtins;

pub use brute::brute_force_prox;
pub use builtins::{
    abs_regularizer, absym, absym_composite, absym_manifold_spec, absym_split, pathological,
    pathological_manifold_spec, quadratic, quadratic_manifold_spec, Builtin,
};

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::proxengine::MapKind;

/// A point in `ℝ^d`.
pub type Point = Vec<f64>;

pub(crate) type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub(crate) type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub(crate) type MatrixFn = Arc<dyn Fn(&[f64]) -> Mat + Send + Sync>;
pub(crate) type ProxFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
pub(crate) type KinkFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// A weakly convex objective.
///
/// `rho` is the weak-convexity modulus: `f + (rho/2)‖·‖²` is convex. The
/// subgradient callable, when present, returns one deterministic element of
/// `∂f` (at kinks, the selection containing zero). The exact prox, when
/// present, minimizes `y ↦ f(y) + ‖y−x‖²/(2μ)` for `μ < 1/rho`.
#[derive(Clone)]
pub struct ProblemOracle {
    dim: usize,
    rho: f64,
    value: ValueFn,
    subgrad: Option<VectorFn>,
    prox_exact: Option<ProxFn>,
    prox_kink_distance: Option<KinkFn>,
}

impl ProblemOracle {
    /// New oracle from a value callable. `rho ≥ 0` is required.
    pub fn new(
        dim: usize,
        rho: f64,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(dim > 0, "dimension must be positive");
        assert!(rho >= 0.0, "weak-convexity modulus must be nonnegative");
        ProblemOracle {
            dim,
            rho,
            value: Arc::new(value),
            subgrad: None,
            prox_exact: None,
            prox_kink_distance: None,
        }
    }

    /// Attach a deterministic subgradient selection.
    pub fn with_subgrad(
        mut self,
        subgrad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.subgrad = Some(Arc::new(subgrad));
        self
    }

    /// Attach an exact proximal map `(x, mu) ↦ prox_{μf}(x)`.
    pub fn with_prox_exact(
        mut self,
        prox: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.prox_exact = Some(Arc::new(prox));
        self
    }

    /// Attach a `(z, mu) ↦ distance` callable giving the distance from a
    /// pre-prox point `z` to the nearest nonsmooth locus of the prox map.
    pub fn with_kink_distance(
        mut self,
        dist: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.prox_kink_distance = Some(Arc::new(dist));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Weak-convexity modulus ρ.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Objective value at `x`.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.value)(x)
    }

    /// One element of `∂f(x)`, if a selection was provided.
    pub fn subgrad(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.subgrad.as_ref().map(|g| g(x))
    }

    /// Exact prox at parameter `mu`, if provided. Callers must ensure
    /// `mu < 1/rho`.
    pub fn prox_exact(&self, x: &[f64], mu: f64) -> Option<Vec<f64>> {
        self.prox_exact.as_ref().map(|p| p(x, mu))
    }

    pub fn has_prox_exact(&self) -> bool {
        self.prox_exact.is_some()
    }

    pub fn has_subgrad(&self) -> bool {
        self.subgrad.is_some()
    }

    /// Distance from the pre-prox point `z` to the nearest kink of the prox
    /// map at parameter `mu`, when known for this oracle.
    pub fn prox_kink_distance(&self, z: &[f64], mu: f64) -> Option<f64> {
        self.prox_kink_distance.as_ref().map(|d| d(z, mu))
    }
}

/// A `C²` function with `beta`-Lipschitz gradient, the smooth half of an
/// additive-composite objective.
#[derive(Clone)]
pub struct SmoothPiece {
    dim: usize,
    beta: f64,
    value: ValueFn,
    gradient: VectorFn,
}

impl SmoothPiece {
    pub fn new(
        dim: usize,
        beta: f64,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        assert!(beta >= 0.0);
        SmoothPiece { dim, beta, value: Arc::new(value), gradient: Arc::new(gradient) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Gradient Lipschitz constant β.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

/// A composite objective `h(F(x)) + r(x)` with convex `h`, smooth `F`, and
/// weakly convex `r`. `beta` bounds the linearization error of `h∘F`:
/// `|h(F(y)) − h(F(x) + ∇F(x)(y−x))| ≤ (beta/2)‖y−x‖²`.
#[derive(Clone)]
pub struct CompositeProblem {
    dim: usize,
    range_dim: usize,
    h: ProblemOracle,
    f_map: VectorFn,
    jacobian: MatrixFn,
    r: ProblemOracle,
    beta: f64,
    rho_r: f64,
    prox_linear_exact: Option<ProxFn>,
    step_kink_distance: Option<KinkFn>,
}

impl CompositeProblem {
    pub fn new(
        dim: usize,
        range_dim: usize,
        h: ProblemOracle,
        f_map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> Mat + Send + Sync + 'static,
        r: ProblemOracle,
        beta: f64,
    ) -> Self {
        assert_eq!(h.rho(), 0.0, "outer function must be convex");
        assert_eq!(h.dim(), range_dim);
        assert_eq!(r.dim(), dim);
        let rho_r = r.rho();
        CompositeProblem {
            dim,
            range_dim,
            h,
            f_map: Arc::new(f_map),
            jacobian: Arc::new(jacobian),
            r,
            beta,
            rho_r,
            prox_linear_exact: None,
            step_kink_distance: None,
        }
    }

    /// Attach a closed form for the linearized prox subproblem.
    pub fn with_prox_linear_exact(
        mut self,
        prox: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.prox_linear_exact = Some(Arc::new(prox));
        self
    }

    /// Attach a `(x, mu) ↦ distance` callable for the nonsmooth locus of the
    /// one-step map.
    pub fn with_kink_distance(
        mut self,
        dist: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.step_kink_distance = Some(Arc::new(dist));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range_dim(&self) -> usize {
        self.range_dim
    }

    pub fn h(&self) -> &ProblemOracle {
        &self.h
    }

    pub fn r(&self) -> &ProblemOracle {
        &self.r
    }

    /// Linearization-error constant β.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Weak-convexity modulus of `r`.
    pub fn rho_r(&self) -> f64 {
        self.rho_r
    }

    /// The smooth inner map `F(x)`.
    pub fn f_map(&self, x: &[f64]) -> Vec<f64> {
        (self.f_map)(x)
    }

    /// Jacobian `∇F(x)` (`range_dim × dim`).
    pub fn jacobian(&self, x: &[f64]) -> Mat {
        (self.jacobian)(x)
    }

    /// Full composite objective `h(F(x)) + r(x)`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.h.value(&self.f_map(x)) + self.r.value(x)
    }

    pub fn prox_linear_exact(&self, x: &[f64], mu: f64) -> Option<Vec<f64>> {
        self.prox_linear_exact.as_ref().map(|p| p(x, mu))
    }

    pub fn step_kink_distance(&self, x: &[f64], mu: f64) -> Option<f64> {
        self.step_kink_distance.as_ref().map(|d| d(x, mu))
    }
}

/// Local-structure classification of a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    LocalMin,
    StrictSaddle,
    NonActive,
}

/// Reduced Lagrangian Hessian blocks on the tangent basis of a built-in's
/// manifold, from which the one-step map's tangent Jacobian is predicted as
/// `−H̄_yy⁻¹ H̄_xy`.
#[derive(Debug, Clone)]
pub struct ReducedHessians {
    pub h_xy: Mat,
    pub h_yy: Mat,
}

pub(crate) type ReducedHessFn =
    Arc<dyn Fn(MapKind, f64) -> Option<ReducedHessians> + Send + Sync>;

/// Known manifold structure at a critical point of a built-in problem:
/// the point, an orthonormal tangent basis, and the reduced quadratic form of
/// the objective on the manifold.
#[derive(Clone)]
pub struct ManifoldSpec {
    pub critical_point: Point,
    pub tangent_basis: Vec<Point>,
    pub classification: Classification,
    reduced_quadratic: Option<ValueFn>,
    reduced_hessians: Option<ReducedHessFn>,
}

impl ManifoldSpec {
    pub fn new(
        critical_point: Point,
        tangent_basis: Vec<Point>,
        classification: Classification,
    ) -> Self {
        ManifoldSpec {
            critical_point,
            tangent_basis,
            classification,
            reduced_quadratic: None,
            reduced_hessians: None,
        }
    }

    pub fn with_reduced_quadratic(
        mut self,
        q: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.reduced_quadratic = Some(Arc::new(q));
        self
    }

    pub fn with_reduced_hessians(
        mut self,
        f: impl Fn(MapKind, f64) -> Option<ReducedHessians> + Send + Sync + 'static,
    ) -> Self {
        self.reduced_hessians = Some(Arc::new(f));
        self
    }

    /// The reduced quadratic form `d²f_M` evaluated at an ambient tangent
    /// vector, when the manifold is active.
    pub fn reduced_quadratic(&self, u: &[f64]) -> Option<f64> {
        self.reduced_quadratic.as_ref().map(|q| q(u))
    }

    /// Reduced Hessian blocks for the given map kind at parameter `mu`.
    pub fn reduced_hessians(&self, kind: MapKind, mu: f64) -> Option<ReducedHessians> {
        self.reduced_hessians.as_ref().and_then(|f| f(kind, mu))
    }
}

/// Soft-thresholding `sign(x)·max(|x|−t, 0)`, the prox of `t·|·|`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Linear tilt `x ↦ base(x) − ⟨v, x⟩`.
///
/// The tilt preserves the weak-convexity modulus, shifts subgradients by `−v`,
/// and satisfies the prox identity
/// `prox_{μ(f−⟨v,·⟩)}(x) = prox_{μf}(x + μv)`.
pub fn tilt(base: &ProblemOracle, v: &[f64]) -> Result<ProblemOracle> {
    if v.len() != base.dim {
        return Err(Error::Input(format!(
            "tilt vector has dimension {}, problem has dimension {}",
            v.len(),
            base.dim
        )));
    }
    let v: Arc<[f64]> = v.to_vec().into();
    let dim = base.dim;
    let rho = base.rho;

    let base_value = base.value.clone();
    let vv = v.clone();
    let mut out = ProblemOracle::new(dim, rho, move |x: &[f64]| {
        base_value(x) - dot(&vv, x)
    });

    if let Some(g) = base.subgrad.clone() {
        let vv = v.clone();
        out = out.with_subgrad(move |x: &[f64]| {
            let mut s = g(x);
            for (si, vi) in s.iter_mut().zip(vv.iter()) {
                *si -= vi;
            }
            s
        });
    }
    if let Some(p) = base.prox_exact.clone() {
        let vv = v.clone();
        out = out.with_prox_exact(move |x: &[f64], mu: f64| {
            p(&shifted(x, &vv, mu), mu)
        });
    }
    if let Some(d) = base.prox_kink_distance.clone() {
        let vv = v.clone();
        out = out.with_kink_distance(move |z: &[f64], mu: f64| d(&shifted(z, &vv, mu), mu));
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn shifted(x: &[f64], v: &[f64], mu: f64) -> Vec<f64> {
    x.iter().zip(v).map(|(xi, vi)| xi + mu * vi).collect()
}

/// Closed-form prox of `f(x,y) = ½(|x|+|y|)² − (ρ/2)x²` at parameter `1/λ`.
///
/// Requires `λ > ρ > 0`; the prox subproblem is otherwise not strongly
/// convex. Cases are evaluated in order; the formulas agree on the case
/// boundaries.
pub fn pathological_prox(x: f64, y: f64, rho: f64, lambda: f64) -> Result<(f64, f64)> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::Parameter(format!("rho must be positive, got {rho}")));
    }
    if lambda.is_nan() || lambda <= rho {
        return Err(Error::Parameter(format!(
            "lambda must exceed rho for a well-defined prox (lambda={lambda}, rho={rho})"
        )));
    }
    if x == 0.0 && y == 0.0 {
        return Ok((0.0, 0.0));
    }
    if x.abs() <= y.abs() / (1.0 + lambda) {
        return Ok((0.0, lambda / (1.0 + lambda) * y));
    }
    if y.abs() <= x.abs() / (1.0 + lambda - rho) {
        return Ok((lambda / (1.0 + lambda - rho) * x, 0.0));
    }
    let c = lambda / ((1.0 + lambda) * (1.0 + lambda - rho) - 1.0);
    // Off-diagonal sign flips with sign agreement of the inputs.
    let off = if x.signum() == y.signum() { -1.0 } else { 1.0 };
    Ok((
        c * ((1.0 + lambda) * x + off * y),
        c * (off * x + (1.0 + lambda - rho) * y),
    ))
}

/// Exact prox of `g(x,y) = |x| − y²`: soft-threshold in `x`, expansion
/// `y/(1−2μ)` in `y`. Requires `0 < μ < 1/2`.
pub fn absym_prox(x: f64, y: f64, mu: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0 && mu < 0.5) {
        return Err(Error::Parameter(format!(
            "mu must lie in (0, 1/2) for a strongly convex subproblem, got {mu}"
        )));
    }
    Ok((soft_threshold(x, mu), y / (1.0 - 2.0 * mu)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn pathological_prox_origin() {
        assert_eq!(pathological_prox(0.0, 0.0, 2.0, 6.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn pathological_prox_cone_case() {
        let (px, py) = pathological_prox(0.0, 1.0, 2.0, 6.0).unwrap();
        assert_abs_diff_eq!(px, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(py, 6.0 / 7.0, epsilon = 1e-15);
    }

    #[test]
    fn pathological_prox_middle_same_sign() {
        // Same-sign middle case: factor 6/34 against [[7, -1], [-1, 5]].
        let (px, py) = pathological_prox(0.5, 1.0, 2.0, 6.0).unwrap();
        assert_abs_diff_eq!(px, 7.5 / 17.0, epsilon = 1e-15);
        assert_abs_diff_eq!(py, 13.5 / 17.0, epsilon = 1e-15);
    }

    #[test]
    fn pathological_prox_rejects_bad_lambda() {
        assert!(matches!(
            pathological_prox(1.0, 1.0, 2.0, 2.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            pathological_prox(1.0, 1.0, 0.0, 6.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn pathological_prox_matches_brute_force() {
        let f = pathological(2.0);
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..40 {
            let x = 4.0 * next() - 2.0;
            let y = 4.0 * next() - 2.0;
            let exact = pathological_prox(x, y, 2.0, 6.0).unwrap();
            let brute =
                brute_force_prox(&|p: &[f64]| f.value(p), &[x, y], 1.0 / 6.0).unwrap();
            let dist = ((exact.0 - brute[0]).powi(2) + (exact.1 - brute[1]).powi(2)).sqrt();
            assert!(dist <= 1e-6, "point ({x}, {y}): dist {dist:.2e}");
        }
    }

    #[test]
    fn absym_prox_examples() {
        assert_eq!(absym_prox(1.0, 0.2, 0.25).unwrap(), (0.75, 0.4));
        assert_eq!(absym_prox(0.1, 0.0, 0.25).unwrap(), (0.0, 0.0));
        assert_eq!(absym_prox(0.0, 0.0, 0.1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn absym_prox_rejects_large_mu() {
        assert!(matches!(absym_prox(1.0, 1.0, 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn tilt_zero_is_identity() {
        let f = absym();
        let t = tilt(&f, &[0.0, 0.0]).unwrap();
        for p in [[0.3, -0.7], [1.0, 2.0], [-0.1, 0.0]] {
            assert_eq!(f.value(&p), t.value(&p));
        }
    }

    #[test]
    fn tilt_prox_identity_example() {
        // Soft-threshold of 0.025 at level 0.25 is 0.
        let t = tilt(&absym(), &[0.1, 0.0]).unwrap();
        let p = t.prox_exact(&[0.0, 0.0], 0.25).unwrap();
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn tilt_value_example() {
        let t = tilt(&absym(), &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(t.value(&[1.0, 1.0]), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn tilt_dimension_mismatch() {
        assert!(matches!(tilt(&absym(), &[1.0]), Err(Error::Input(_))));
    }

    #[test]
    fn oracles_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<ProblemOracle>();
        assert_send_sync::<SmoothPiece>();
        assert_send_sync::<CompositeProblem>();
        assert_send_sync::<ManifoldSpec>();
    }

    #[test]
    fn manifold_spec_invariants() {
        let spec = absym_manifold_spec();
        for (i, a) in spec.tangent_basis.iter().enumerate() {
            for (j, b) in spec.tangent_basis.iter().enumerate() {
                let d = dot(a, b);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() <= 1e-12);
            }
        }
        // Strict saddle iff the reduced quadratic is negative somewhere on the basis.
        let has_negative = spec
            .tangent_basis
            .iter()
            .any(|t| spec.reduced_quadratic(t).unwrap() < 0.0);
        assert_eq!(has_negative, spec.classification == Classification::StrictSaddle);
        assert_abs_diff_eq!(
            spec.reduced_quadratic(&[0.0, 3.0]).unwrap(),
            -18.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pathological_spec_is_non_active() {
        let spec = pathological_manifold_spec(2.0);
        assert_eq!(spec.classification, Classification::NonActive);
        assert!(spec.reduced_quadratic(&[1.0, 0.0]).is_none());
    }

    proptest! {
        /// Subgradient inequality of weak convexity on sampled pairs.
        #[test]
        fn subgrad_inequality_holds(
            xa in -2.0f64..2.0, xb in -2.0f64..2.0,
            ya in -2.0f64..2.0, yb in -2.0f64..2.0,
        ) {
            for f in [absym(), pathological(2.0), abs_regularizer()] {
                let x = [xa, xb];
                let y = [ya, yb];
                let v = f.subgrad(&x).unwrap();
                let inner: f64 = v.iter().zip(y.iter().zip(x.iter()))
                    .map(|(vi, (yi, xi))| vi * (yi - xi)).sum();
                let dist2: f64 = y.iter().zip(x.iter()).map(|(a, b)| (a - b).powi(2)).sum();
                let lower = f.value(&x) + inner - 0.5 * f.rho() * dist2;
                prop_assert!(f.value(&y) >= lower - 1e-9);
            }
        }

        /// The tilt prox identity is algebraic: both sides run the same computation.
        #[test]
        fn tilt_prox_identity(
            x in -2.0f64..2.0, y in -2.0f64..2.0,
            vx in -1.0f64..1.0, vy in -1.0f64..1.0,
        ) {
            let base = absym();
            let tilted = tilt(&base, &[vx, vy]).unwrap();
            let mu = 0.25;
            let lhs = tilted.prox_exact(&[x, y], mu).unwrap();
            let rhs = base.prox_exact(&[x + mu * vx, y + mu * vy], mu).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        /// Exact prox minimizes the subproblem: brute-force refinement never
        /// finds a better objective value.
        #[test]
        fn absym_prox_matches_brute(x in -2.0f64..2.0, y in -1.5f64..1.5) {
            let f = absym();
            let mu = 0.25;
            let exact = f.prox_exact(&[x, y], mu).unwrap();
            let brute = brute_force_prox(&|p: &[f64]| f.value(p), &[x, y], mu).unwrap();
            let dist = ((exact[0] - brute[0]).powi(2) + (exact[1] - brute[1]).powi(2)).sqrt();
            prop_assert!(dist <= 1e-6, "dist {}", dist);
        }
    }
}
