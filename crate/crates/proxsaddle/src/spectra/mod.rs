//! Finite-difference Jacobians of iteration maps, eigenvalue computation,
//! and fixed-point instability classification.
//!
//! The classifier follows the real-eigenvalue criterion: a fixed point is
//! reported unstable when the Jacobian of the undamped map has a real
//! eigenvalue strictly greater than one. A magnitude-based flag (any
//! eigenvalue of modulus above one, complex allowed) is reported separately.

mod eig;

pub use eig::{eigen_residual, eigenvalues, MAX_ORDER};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::problems::{Classification, ManifoldSpec, ProblemOracle};
use crate::proxengine::{moreau_value, IterationMap, MapKind, ProxParams};

/// Default relative finite-difference step for Jacobians.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Default step for second-difference Hessians.
pub const DEFAULT_HESSIAN_STEP: f64 = 1e-3;
/// Default tolerance on eigenvalue real parts for classification.
pub const DEFAULT_CLASS_TOL: f64 = 1e-4;

/// One eigenvalue as a serializable (re, im) pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigPair {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for EigPair {
    fn from(c: Complex64) -> Self {
        EigPair { re: c.re, im: c.im }
    }
}

/// Stability verdict of a fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Unstable,
    NotUnstable,
}

/// Jacobian spectrum of an iteration map at an (approximate) fixed point.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub schema_version: String,
    pub jacobian: Vec<Vec<f64>>,
    pub eigenvalues: Vec<EigPair>,
    /// Largest real part among (numerically) real eigenvalues; falls back to
    /// the largest real part overall if no eigenvalue is real.
    pub max_real_eigenvalue: f64,
    pub classification: StabilityClass,
    pub fd_step: f64,
    pub class_tol: f64,
    /// Damping parameter of the map; the damped spectrum is `1 − α + αλ`.
    pub alpha: f64,
    pub damped_eigenvalues: Vec<EigPair>,
    /// Magnitude criterion: some eigenvalue of the undamped Jacobian has
    /// modulus above `1 + class_tol` (complex ones count here).
    pub magnitude_unstable: bool,
    /// Set when the expansion point sits within `2·fd_step` of a known kink
    /// of the map, where the finite differences should not be trusted.
    pub near_kink: Option<bool>,
    /// `‖S(x̄) − x̄‖` measured at the expansion point.
    pub fixed_point_residual: f64,
}

/// Central-difference Jacobian of a map `s`, column `i` being
/// `(s(x + h eᵢ) − s(x − h eᵢ))/(2h)`.
pub fn fd_jacobian(
    s: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    x: &[f64],
    step: f64,
) -> Result<Mat> {
    if step <= 0.0 {
        return Err(Error::Parameter("finite-difference step must be positive".into()));
    }
    let d = x.len();
    let mut jac = Mat::zeros(d, d);
    let mut probe = x.to_vec();
    for i in 0..d {
        // Divide by the representable probe spacing, not the nominal step.
        let hi_coord = x[i] + step;
        let lo_coord = x[i] - step;
        probe[i] = hi_coord;
        let hi = s(&probe)?;
        probe[i] = lo_coord;
        let lo = s(&probe)?;
        probe[i] = x[i];
        if hi.len() != d || lo.len() != d {
            return Err(Error::Input("map output dimension differs from input".into()));
        }
        let denom = hi_coord - lo_coord;
        for r in 0..d {
            jac[(r, i)] = (hi[r] - lo[r]) / denom;
        }
    }
    Ok(jac)
}

/// Scale-aware default Jacobian step `1e−5·max(1, ‖x‖)`.
pub fn default_fd_step(x: &[f64]) -> f64 {
    DEFAULT_FD_STEP * x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0)
}

/// Classify a fixed point of the map by the spectrum of `∇S`.
///
/// Requires `‖S(x̄) − x̄‖ ≤ 10·class_tol`.
pub fn classify_fixed_point(
    map: &IterationMap,
    x_bar: &[f64],
    fd_step: f64,
    class_tol: f64,
) -> Result<SpectrumReport> {
    let s0 = map.apply_s(x_bar)?;
    let fp_residual = dist(&s0, x_bar);
    if fp_residual > 10.0 * class_tol {
        return Err(Error::Precondition(format!(
            "point is not a fixed point: ‖S(x)−x‖ = {fp_residual:.3e} > {:.3e}",
            10.0 * class_tol
        )));
    }
    let jac = fd_jacobian(&|p: &[f64]| map.apply_s(p), x_bar, fd_step)?;
    let eigs = eigenvalues(&jac)?;
    let real_parts: Vec<f64> = eigs
        .iter()
        .filter(|e| e.im.abs() <= class_tol)
        .map(|e| e.re)
        .collect();
    let max_real_eigenvalue = if real_parts.is_empty() {
        eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max)
    } else {
        real_parts.into_iter().fold(f64::NEG_INFINITY, f64::max)
    };
    let unstable = eigs
        .iter()
        .any(|e| e.im.abs() <= class_tol && e.re > 1.0 + class_tol);
    let magnitude_unstable = eigs.iter().any(|e| e.norm() > 1.0 + class_tol);
    let alpha = map.alpha();
    let damped: Vec<EigPair> = eigs
        .iter()
        .map(|&e| EigPair::from(Complex64::new(1.0 - alpha, 0.0) + alpha * e))
        .collect();
    Ok(SpectrumReport {
        schema_version: "1".into(),
        jacobian: jac.to_rows(),
        eigenvalues: eigs.iter().copied().map(EigPair::from).collect(),
        max_real_eigenvalue,
        classification: if unstable {
            StabilityClass::Unstable
        } else {
            StabilityClass::NotUnstable
        },
        fd_step,
        class_tol,
        alpha,
        damped_eigenvalues: damped,
        magnitude_unstable,
        near_kink: map.kink_distance(x_bar).map(|d| d <= 2.0 * fd_step),
        fixed_point_residual: fp_residual,
    })
}

/// Symmetric finite-difference Hessian of the Moreau envelope, from second
/// differences of [`moreau_value`], symmetrized.
pub fn moreau_hessian_fd(
    problem: &ProblemOracle,
    x_bar: &[f64],
    params: &ProxParams,
    step: f64,
) -> Result<Mat> {
    if step <= 0.0 {
        return Err(Error::Parameter("finite-difference step must be positive".into()));
    }
    let d = x_bar.len();
    let f0 = moreau_value(problem, x_bar, params)?;
    let mut hess = Mat::zeros(d, d);
    let mut probe = x_bar.to_vec();
    for i in 0..d {
        probe[i] = x_bar[i] + step;
        let hi = moreau_value(problem, &probe, params)?;
        probe[i] = x_bar[i] - step;
        let lo = moreau_value(problem, &probe, params)?;
        probe[i] = x_bar[i];
        hess[(i, i)] = (hi - 2.0 * f0 + lo) / (step * step);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut v = [0.0; 4];
            for (idx, (si, sj)) in
                [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].iter().enumerate()
            {
                probe[i] = x_bar[i] + si * step;
                probe[j] = x_bar[j] + sj * step;
                v[idx] = moreau_value(problem, &probe, params)?;
                probe[i] = x_bar[i];
                probe[j] = x_bar[j];
            }
            let val = (v[0] - v[1] - v[2] + v[3]) / (4.0 * step * step);
            hess[(i, j)] = val;
            hess[(j, i)] = val;
        }
    }
    hess.symmetrize();
    Ok(hess)
}

/// Comparison of envelope curvature against the objective's reduced
/// quadratic form on the tangent space.
#[derive(Debug, Clone, Serialize)]
pub struct MorSmoothReport {
    /// Minimum of `⟨∇²f_μ(x̄)h, h⟩` over unit tangent vectors.
    pub lhs: f64,
    /// Minimum of the reduced quadratic form over unit tangent vectors.
    pub rhs: f64,
    /// `lhs ≤ rhs + 1e−4`.
    pub holds: bool,
}

/// Verify that the envelope's tangent curvature at the critical point lies
/// below the reduced quadratic form of the objective on its manifold.
pub fn check_mor_smooth_inequality(
    problem: &ProblemOracle,
    spec: &ManifoldSpec,
    params: &ProxParams,
) -> Result<MorSmoothReport> {
    check_mor_smooth_inequality_with_step(problem, spec, params, DEFAULT_HESSIAN_STEP)
}

/// As [`check_mor_smooth_inequality`] with an explicit Hessian step.
pub fn check_mor_smooth_inequality_with_step(
    problem: &ProblemOracle,
    spec: &ManifoldSpec,
    params: &ProxParams,
    step: f64,
) -> Result<MorSmoothReport> {
    if spec.classification == Classification::NonActive {
        return Err(Error::Precondition(
            "no active manifold at this critical point".into(),
        ));
    }
    let basis = &spec.tangent_basis;
    if basis.is_empty() {
        return Err(Error::Precondition("empty tangent basis".into()));
    }
    let hess = moreau_hessian_fd(problem, &spec.critical_point, params, step)?;
    let lhs = min_eig_on_basis(&|u: &[f64]| quad_form(&hess, u), basis)?;
    let rhs = min_eig_on_basis(
        &|u: &[f64]| spec.reduced_quadratic(u).expect("active manifold carries d²f_M"),
        basis,
    )?;
    Ok(MorSmoothReport { lhs, rhs, holds: lhs <= rhs + 1e-4 })
}

/// Tangent-space Jacobian prediction `−H̄_yy⁻¹ H̄_xy` assembled from a
/// built-in's stored reduced Hessian blocks.
pub fn reduced_jacobian_prediction(
    kind: MapKind,
    spec: &ManifoldSpec,
    params: &ProxParams,
) -> Result<Mat> {
    let blocks = spec.reduced_hessians(kind, params.mu).ok_or_else(|| {
        Error::Capability(format!(
            "no reduced Hessian data for {} on this problem",
            kind.id()
        ))
    })?;
    let k = blocks.h_yy.nrows();
    let mut pred = Mat::zeros(k, k);
    for j in 0..k {
        let col: Vec<f64> = (0..k).map(|i| blocks.h_xy[(i, j)]).collect();
        let sol = blocks.h_yy.solve(&col)?;
        for i in 0..k {
            pred[(i, j)] = -sol[i];
        }
    }
    Ok(pred)
}

/// Side-by-side comparison of the tangent Jacobian prediction against the
/// finite-difference Jacobian restricted to the tangent basis.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedJacobianReport {
    pub prediction: Vec<Vec<f64>>,
    pub fd_restricted: Vec<Vec<f64>>,
    pub max_diff: f64,
}

/// Compute the prediction and assert it against the FD Jacobian of the map
/// restricted to the manifold's tangent basis.
pub fn verify_reduced_jacobian(
    map: &IterationMap,
    spec: &ManifoldSpec,
    fd_step: f64,
) -> Result<ReducedJacobianReport> {
    let pred = reduced_jacobian_prediction(map.kind(), spec, map.params())?;
    let jac = fd_jacobian(&|p: &[f64]| map.apply_s(p), &spec.critical_point, fd_step)?;
    let k = spec.tangent_basis.len();
    let mut restricted = Mat::zeros(k, k);
    for (b, tb) in spec.tangent_basis.iter().enumerate() {
        let jtb = jac.matvec(tb);
        for (a, ta) in spec.tangent_basis.iter().enumerate() {
            restricted[(a, b)] = ta.iter().zip(&jtb).map(|(x, y)| x * y).sum();
        }
    }
    let max_diff = pred.max_abs_diff(&restricted);
    Ok(ReducedJacobianReport {
        prediction: pred.to_rows(),
        fd_restricted: restricted.to_rows(),
        max_diff,
    })
}

/// Minimum eigenvalue of a quadratic form restricted to the span of an
/// orthonormal basis, via polarization onto the basis.
fn min_eig_on_basis(form: &dyn Fn(&[f64]) -> f64, basis: &[Vec<f64>]) -> Result<f64> {
    let k = basis.len();
    let mut reduced = Mat::zeros(k, k);
    for a in 0..k {
        reduced[(a, a)] = form(&basis[a]);
    }
    for a in 0..k {
        for b in (a + 1)..k {
            let sum: Vec<f64> =
                basis[a].iter().zip(&basis[b]).map(|(x, y)| x + y).collect();
            let val = 0.5 * (form(&sum) - reduced[(a, a)] - reduced[(b, b)]);
            reduced[(a, b)] = val;
            reduced[(b, a)] = val;
        }
    }
    let eigs = eigenvalues(&reduced)?;
    Ok(eigs.iter().map(|e| e.re).fold(f64::INFINITY, f64::min))
}

fn quad_form(m: &Mat, u: &[f64]) -> f64 {
    let mu = m.matvec(u);
    u.iter().zip(&mu).map(|(a, b)| a * b).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
