//! Fixed-endpoint trajectory optimizer.
//!
//! Minimizes `J(xi) = w . phi(xi) + mu * sum_t |xi(t+1) - xi(t)|^2` over the
//! interior waypoints by covariant gradient descent: each step follows the
//! Euclidean gradient preconditioned by the inverse of the smoothness
//! Hessian `2 mu A`, where `A` is the interior finite-differencing matrix.
//! Steps that increase `J` are halved (backtracking); the accepted step
//! carries over to the next iteration and doubles back toward the configured
//! maximum.

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::features::{features, weighted_gradient};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Number of segments `T`; plans have `T + 1` waypoints.
    #[serde(alias = "T")]
    pub horizon: usize,
    pub smooth_mu: f64,
    /// Largest step along the preconditioned gradient.
    pub step: f64,
    pub max_iters: usize,
    /// Stop once the Euclidean gradient norm falls below this.
    pub tol: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 40,
            smooth_mu: 0.5,
            step: 0.5,
            max_iters: 500,
            tol: 1e-6,
        }
    }
}

/// Halvings tried before an iteration is declared stalled.
const MAX_HALVINGS: usize = 20;

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.horizon < 2 {
            return Err(Error::TooShort(self.horizon));
        }
        if !(self.smooth_mu.is_finite() && self.smooth_mu > 0.0) {
            return bad("smooth_mu", "must be positive");
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad("step", "must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters", "must be at least 1");
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad("tol", "must be positive");
        }
        Ok(())
    }
}

pub fn straight_line(env: &Environment, horizon: usize) -> Result<Trajectory> {
    env.straight_line(horizon)
}

fn smoothness(xi: &Trajectory) -> f64 {
    let x = xi.as_flat();
    let d = xi.dim();
    x[d..].iter().zip(x).map(|(b, a)| (b - a) * (b - a)).sum()
}

/// Full planner objective `w . phi(xi) + mu * smoothness(xi)`.
pub fn objective(xi: &Trajectory, env: &Environment, w: &[f64], mu: f64) -> Result<f64> {
    Ok(features(xi, env)?.dot(w) + mu * smoothness(xi))
}

/// Solves `A x = b` in place for the `n x n` tridiagonal `(-1, 2, -1)` matrix,
/// with `b` strided by `stride` starting at `offset`.
fn solve_velocity_metric(b: &mut [f64], n: usize, stride: usize, offset: usize, scratch: &mut [f64]) {
    // Thomas algorithm; `scratch` holds the modified super-diagonal.
    let at = |i: usize| i * stride + offset;
    scratch[0] = -0.5;
    b[at(0)] /= 2.0;
    for i in 1..n {
        let m = 2.0 + scratch[i - 1];
        scratch[i] = -1.0 / m;
        b[at(i)] = (b[at(i)] + b[at(i - 1)]) / m;
    }
    for i in (0..n - 1).rev() {
        b[at(i)] -= scratch[i] * b[at(i + 1)];
    }
}

/// Plans a locally optimal trajectory for weights `w` with the environment's
/// start and goal pinned.
///
/// Starts from `warm_start` (endpoints are reset to the environment's) or
/// the straight line. The result never has a higher objective than the
/// starting trajectory, and identical inputs give bit-identical outputs.
pub fn plan(
    env: &Environment,
    w: &[f64],
    cfg: &PlannerConfig,
    warm_start: Option<&Trajectory>,
) -> Result<Trajectory> {
    cfg.validate()?;
    if w.len() != env.num_types {
        return Err(Error::Mismatch {
            what: "weight vector length",
            expected: env.num_types,
            got: w.len(),
        });
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::PlannerDiverged {
            iteration: 0,
            weights: w.to_vec(),
        });
    }

    let mut xi = match warm_start {
        Some(init) => {
            let mut xi = init.clone();
            let reference = env.straight_line(cfg.horizon)?;
            xi.check_same_shape(&reference)?;
            xi.waypoint_mut(0).copy_from_slice(&env.start);
            let last = xi.horizon();
            xi.waypoint_mut(last).copy_from_slice(&env.goal);
            xi
        }
        None => env.straight_line(cfg.horizon)?,
    };

    let dim = xi.dim();
    let horizon = xi.horizon();
    let n = horizon - 1;
    let mu = cfg.smooth_mu;
    let diverged = |iteration| Error::PlannerDiverged {
        iteration,
        weights: w.to_vec(),
    };

    let mut current = objective(&xi, env, w, mu)?;
    if !current.is_finite() {
        return Err(diverged(0));
    }

    let mut grad = vec![0.0; xi.as_flat().len()];
    let mut scratch = vec![0.0; n];
    let mut trial = xi.clone();
    let mut step = cfg.step;

    for iteration in 1..=cfg.max_iters {
        weighted_gradient(&xi, env, w, &mut grad);
        let x = xi.as_flat();
        let mut norm2 = 0.0;
        for t in 1..horizon {
            for k in 0..dim {
                let i = t * dim + k;
                let g = grad[i] + 2.0 * mu * (2.0 * x[i] - x[i - dim] - x[i + dim]);
                grad[i] = g;
                norm2 += g * g;
            }
        }
        if !norm2.is_finite() {
            return Err(diverged(iteration));
        }
        if norm2.sqrt() < cfg.tol {
            break;
        }

        // Interior rows start at offset `dim`.
        for k in 0..dim {
            solve_velocity_metric(&mut grad, n, dim, dim + k, &mut scratch);
        }
        let precond = 1.0 / (2.0 * mu);

        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            {
                let src = xi.as_flat();
                let dst = trial.as_flat_mut();
                for i in dim..horizon * dim {
                    dst[i] = src[i] - step * precond * grad[i];
                }
            }
            let value = objective(&trial, env, w, mu)?;
            if !value.is_finite() {
                return Err(diverged(iteration));
            }
            if value <= current {
                std::mem::swap(&mut xi, &mut trial);
                current = value;
                accepted = true;
                step = (2.0 * step).min(cfg.step);
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(xi)
}
