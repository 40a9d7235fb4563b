//! Derivative-free reference solver for prox subproblems.
//!
//! Independent of every closed-form prox in the catalog: it sees only the
//! objective value. Grid seeding followed by coordinate descent with a
//! shrinking step; adequate for the 1- and 2-dimensional built-ins.

use crate::error::{Error, Result};

const GRID_PER_DIM: usize = 201;
const REFINE_ROUNDS: usize = 50;

/// Approximately minimize `y ↦ value(y) + ‖y−x‖²/(2μ)` by scanning a
/// 201-per-dimension grid over the box of radius `2‖x‖ + 2` centered at `x`,
/// then refining with 50 rounds of coordinate descent with halving step.
pub fn brute_force_prox(
    value: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    mu: f64,
) -> Result<Vec<f64>> {
    let dim = x.len();
    if dim == 0 || dim > 2 {
        return Err(Error::Capability(format!(
            "brute-force prox supports dimensions 1 and 2, got {dim}"
        )));
    }
    if mu <= 0.0 {
        return Err(Error::Parameter("mu must be positive".into()));
    }
    let inv_2mu = 0.5 / mu;
    let phi = |y: &[f64]| -> f64 {
        let dist2: f64 = y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        value(y) + inv_2mu * dist2
    };

    let radius = 2.0 * x.iter().map(|v| v * v).sum::<f64>().sqrt() + 2.0;
    let spacing = 2.0 * radius / (GRID_PER_DIM - 1) as f64;

    // Grid scan.
    let mut best = x.to_vec();
    let mut best_val = phi(&best);
    let mut probe = vec![0.0; dim];
    if dim == 1 {
        for i in 0..GRID_PER_DIM {
            probe[0] = x[0] - radius + spacing * i as f64;
            let v = phi(&probe);
            if v < best_val {
                best_val = v;
                best.copy_from_slice(&probe);
            }
        }
    } else {
        for i in 0..GRID_PER_DIM {
            probe[0] = x[0] - radius + spacing * i as f64;
            for j in 0..GRID_PER_DIM {
                probe[1] = x[1] - radius + spacing * j as f64;
                let v = phi(&probe);
                if v < best_val {
                    best_val = v;
                    best.copy_from_slice(&probe);
                }
            }
        }
    }

    // Local refinement: per round, walk each coordinate while it improves,
    // then halve the step.
    let mut step = spacing;
    for _ in 0..REFINE_ROUNDS {
        for c in 0..dim {
            loop {
                let mut moved = false;
                for dir in [1.0, -1.0] {
                    let mut cand = best.clone();
                    cand[c] += dir * step;
                    let v = phi(&cand);
                    if v < best_val {
                        best_val = v;
                        best = cand;
                        moved = true;
                        break;
                    }
                }
                if !moved {
                    break;
                }
            }
        }
        step *= 0.5;
    }
    Ok(best)
}
