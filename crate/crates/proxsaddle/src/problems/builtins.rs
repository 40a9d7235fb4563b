//! Built-in test problems with closed-form proximal maps and known
//! critical-point structure.

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::proxengine::MapKind;

use super::{
    absym_prox, pathological_prox, soft_threshold, Classification, CompositeProblem,
    ManifoldSpec, ProblemOracle, ReducedHessians, SmoothPiece,
};

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `f(x,y) = ½(|x|+|y|)² − (ρ/2)x²`, ρ-weakly convex, with a closed-form prox
/// at any `μ < 1/ρ`. The origin is a critical point with no active manifold;
/// a positive-measure cone around the `y`-axis is attracted to it.
pub fn pathological(rho: f64) -> ProblemOracle {
    assert!(rho > 0.0, "the family is parameterized by rho > 0");
    ProblemOracle::new(2, rho, move |p: &[f64]| {
        let s = p[0].abs() + p[1].abs();
        0.5 * s * s - 0.5 * rho * p[0] * p[0]
    })
    .with_subgrad(move |p: &[f64]| {
        let s = p[0].abs() + p[1].abs();
        vec![s * sign0(p[0]) - rho * p[0], s * sign0(p[1])]
    })
    .with_prox_exact(move |p: &[f64], mu: f64| {
        let (x, y) = pathological_prox(p[0], p[1], rho, 1.0 / mu)
            .expect("caller guarantees mu < 1/rho");
        vec![x, y]
    })
    .with_kink_distance(move |z: &[f64], mu: f64| {
        // Prox case boundaries are the rays |y| = (1+λ)|x| and
        // |y| = |x|/(1+λ−ρ), plus the origin itself.
        let lambda = 1.0 / mu;
        let (a, b) = (z[0].abs(), z[1].abs());
        let line = |c: f64| (b - c * a).abs() / (1.0 + c * c).sqrt();
        line(1.0 + lambda)
            .min(line(1.0 / (1.0 + lambda - rho)))
            .min(a.hypot(b))
    })
}

/// `g(x,y) = |x| − y²`, 2-weakly convex. Its unique critical point is the
/// origin, a strict saddle with active manifold equal to the `y`-axis.
pub fn absym() -> ProblemOracle {
    ProblemOracle::new(2, 2.0, |p: &[f64]| p[0].abs() - p[1] * p[1])
        .with_subgrad(|p: &[f64]| vec![sign0(p[0]), -2.0 * p[1]])
        .with_prox_exact(|p: &[f64], mu: f64| {
            let (x, y) = absym_prox(p[0], p[1], mu).expect("caller guarantees mu < 1/2");
            vec![x, y]
        })
        .with_kink_distance(|z: &[f64], mu: f64| (z[0].abs() - mu).abs())
}

/// `r(x,y) = |x|`, convex, with the soft-threshold prox. Serves as the
/// regularizer of the split form of [`absym`] and, tilted, as a problem whose
/// critical points are minimizers.
pub fn abs_regularizer() -> ProblemOracle {
    ProblemOracle::new(2, 0.0, |p: &[f64]| p[0].abs())
        .with_subgrad(|p: &[f64]| vec![sign0(p[0]), 0.0])
        .with_prox_exact(|p: &[f64], mu: f64| vec![soft_threshold(p[0], mu), p[1]])
        .with_kink_distance(|z: &[f64], mu: f64| (z[0].abs() - mu).abs())
}

/// The additive split of [`absym`]: smooth piece `−y²` (gradient Lipschitz
/// constant 2) plus the regularizer `|x|`.
pub fn absym_split() -> (SmoothPiece, ProblemOracle) {
    let smooth = SmoothPiece::new(
        2,
        2.0,
        |p: &[f64]| -p[1] * p[1],
        |p: &[f64]| vec![0.0, -2.0 * p[1]],
    );
    (smooth, abs_regularizer())
}

/// The composite form of [`absym`]: `h(z₁,z₂) = |z₁| + z₂`, `F(x,y) = (x, −y²)`,
/// `r ≡ 0`. The linearization-error constant is `β = 2`, exact for the
/// quadratic residual of `F`'s second component.
pub fn absym_composite() -> CompositeProblem {
    let h = ProblemOracle::new(2, 0.0, |z: &[f64]| z[0].abs() + z[1])
        .with_subgrad(|z: &[f64]| vec![sign0(z[0]), 1.0])
        .with_prox_exact(|z: &[f64], mu: f64| vec![soft_threshold(z[0], mu), z[1] - mu]);
    let r = ProblemOracle::new(2, 0.0, |_: &[f64]| 0.0)
        .with_subgrad(|_: &[f64]| vec![0.0, 0.0])
        .with_prox_exact(|p: &[f64], _mu: f64| p.to_vec());
    CompositeProblem::new(
        2,
        2,
        h,
        |p: &[f64]| vec![p[0], -p[1] * p[1]],
        |p: &[f64]| Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, -2.0 * p[1]]]),
        r,
        2.0,
    )
    // The linearized subproblem separates: soft-threshold in x, expansion in y.
    .with_prox_linear_exact(|p: &[f64], mu: f64| {
        vec![soft_threshold(p[0], mu), (1.0 + 2.0 * mu) * p[1]]
    })
    .with_kink_distance(|p: &[f64], mu: f64| (p[0].abs() - mu).abs())
}

/// Smooth convex quadratic `½‖x‖²` with prox `x/(1+μ)`.
pub fn quadratic(dim: usize) -> ProblemOracle {
    ProblemOracle::new(dim, 0.0, |p: &[f64]| 0.5 * p.iter().map(|v| v * v).sum::<f64>())
        .with_subgrad(|p: &[f64]| p.to_vec())
        .with_prox_exact(|p: &[f64], mu: f64| p.iter().map(|v| v / (1.0 + mu)).collect())
        .with_kink_distance(|_: &[f64], _: f64| f64::INFINITY)
}

/// Manifold structure of [`absym`] at the origin: tangent basis `{e₂}` along
/// the `y`-axis, reduced quadratic `−2t²`, a strict saddle.
pub fn absym_manifold_spec() -> ManifoldSpec {
    ManifoldSpec::new(
        vec![0.0, 0.0],
        vec![vec![0.0, 1.0]],
        Classification::StrictSaddle,
    )
    .with_reduced_quadratic(|u: &[f64]| -2.0 * u[1] * u[1])
    .with_reduced_hessians(|kind: MapKind, mu: f64| {
        let inv = 1.0 / mu;
        let (h_xy, h_yy) = match kind {
            // Subproblem coupling −μ⁻¹I; objective curvature −2 on the axis.
            MapKind::ProxPoint => (-inv, -2.0 + inv),
            // Coupling picks up the smooth curvature: ∇²g − μ⁻¹I on e₂.
            MapKind::ProxGradient | MapKind::ProxLinear => (-2.0 - inv, inv),
        };
        Some(ReducedHessians {
            h_xy: Mat::from_rows(&[vec![h_xy]]),
            h_yy: Mat::from_rows(&[vec![h_yy]]),
        })
    })
}

/// Manifold record for [`pathological`] at the origin: no active manifold.
pub fn pathological_manifold_spec(_rho: f64) -> ManifoldSpec {
    ManifoldSpec::new(vec![0.0, 0.0], vec![], Classification::NonActive)
}

/// Manifold record for the smooth [`quadratic`]: the whole space is the
/// active manifold and the origin is a local minimizer.
pub fn quadratic_manifold_spec(dim: usize) -> ManifoldSpec {
    let basis = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect();
    ManifoldSpec::new(vec![0.0; dim], basis, Classification::LocalMin)
        .with_reduced_quadratic(|u: &[f64]| u.iter().map(|v| v * v).sum())
        .with_reduced_hessians(move |kind: MapKind, mu: f64| match kind {
            MapKind::ProxPoint => {
                let inv = 1.0 / mu;
                let mut h_xy = Mat::zeros(dim, dim);
                let mut h_yy = Mat::zeros(dim, dim);
                for i in 0..dim {
                    h_xy[(i, i)] = -inv;
                    h_yy[(i, i)] = 1.0 + inv;
                }
                Some(ReducedHessians { h_xy, h_yy })
            }
            _ => None,
        })
}

/// A built-in problem addressable by string id from the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Absym,
    AbsymComposite,
    AbsReg,
    Pathological { rho: f64 },
    Quadratic { dim: usize },
}

impl Builtin {
    /// Parse an id such as `absym`, `absym-composite`, `absreg`,
    /// `pathological:rho=2`, or `quadratic:dim=2`.
    pub fn parse(id: &str) -> Result<Builtin> {
        let (name, args) = match id.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (id, None),
        };
        match (name, args) {
            ("absym", None) => Ok(Builtin::Absym),
            ("absym-composite", None) => Ok(Builtin::AbsymComposite),
            ("absreg", None) => Ok(Builtin::AbsReg),
            ("pathological", Some(a)) => {
                let rho = parse_kv(a, "rho")?;
                if rho <= 0.0 {
                    return Err(Error::Parameter("pathological requires rho > 0".into()));
                }
                Ok(Builtin::Pathological { rho })
            }
            ("pathological", None) => Err(Error::Input(
                "pathological requires a rho argument, e.g. pathological:rho=2".into(),
            )),
            ("quadratic", Some(a)) => {
                let dim = parse_kv(a, "dim")? as usize;
                if dim == 0 {
                    return Err(Error::Parameter("quadratic requires dim >= 1".into()));
                }
                Ok(Builtin::Quadratic { dim })
            }
            ("quadratic", None) => Ok(Builtin::Quadratic { dim: 2 }),
            _ => Err(Error::Input(format!("unknown problem id: {id}"))),
        }
    }

    /// Canonical id string; `parse(id()) == self`.
    pub fn id(&self) -> String {
        match self {
            Builtin::Absym => "absym".into(),
            Builtin::AbsymComposite => "absym-composite".into(),
            Builtin::AbsReg => "absreg".into(),
            Builtin::Pathological { rho } => format!("pathological:rho={rho}"),
            Builtin::Quadratic { dim } => format!("quadratic:dim={dim}"),
        }
    }

    /// The plain oracle view, where one exists.
    pub fn oracle(&self) -> Result<ProblemOracle> {
        match self {
            Builtin::Absym => Ok(absym()),
            Builtin::AbsReg => Ok(abs_regularizer()),
            Builtin::Pathological { rho } => Ok(pathological(*rho)),
            Builtin::Quadratic { dim } => Ok(quadratic(*dim)),
            Builtin::AbsymComposite => Err(Error::Capability(
                "absym-composite is a composite problem; use the prox-linear algorithm".into(),
            )),
        }
    }

    /// Known manifold structure at the catalogued critical point.
    pub fn manifold_spec(&self) -> Option<ManifoldSpec> {
        match self {
            Builtin::Absym => Some(absym_manifold_spec()),
            Builtin::AbsymComposite => Some(absym_manifold_spec()),
            Builtin::Pathological { rho } => Some(pathological_manifold_spec(*rho)),
            Builtin::Quadratic { dim } => Some(quadratic_manifold_spec(*dim)),
            Builtin::AbsReg => None,
        }
    }
}

fn parse_kv(args: &str, key: &str) -> Result<f64> {
    for part in args.split(',') {
        if let Some((k, v)) = part.split_once('=') {
            if k.trim() == key {
                return v
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Input(format!("bad value for {key}: {e}")));
            }
        }
    }
    Err(Error::Input(format!("missing argument {key}")))
}
