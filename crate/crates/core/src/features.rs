//! Trajectory features, linear costs and the normalized ground-truth cost.
//!
//! Each obstacle type contributes one feature: the Gaussian proximity of the
//! trajectory to every instance of that type, averaged over waypoints,
//!
//! ```text
//! phi_k(xi) = 1/(T+1) * sum_t sum_{o in type k} exp(-|xi(t) - p_o|^2 / (2 r_o^2))
//! ```
//!
//! A positive weight on a feature makes the planner avoid that type, a
//! negative weight attracts it.

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::planner::{objective, plan, PlannerConfig};
use crate::trajectory::Trajectory;

/// Feature values `phi(xi)`, one per obstacle type. All entries are finite and non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.0.iter().zip(w).map(|(a, b)| a * b).sum()
    }
}

fn check_dim(xi: &Trajectory, env: &Environment) -> Result<()> {
    if xi.dim() != env.dim() {
        return Err(Error::Mismatch {
            what: "trajectory dimension",
            expected: env.dim(),
            got: xi.dim(),
        });
    }
    Ok(())
}

fn check_weights(w: &[f64], env: &Environment) -> Result<()> {
    if w.len() != env.num_types {
        return Err(Error::Mismatch {
            what: "weight vector length",
            expected: env.num_types,
            got: w.len(),
        });
    }
    Ok(())
}

#[inline]
fn proximity(x: &[f64], center: &[f64], radius: f64) -> f64 {
    let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * radius * radius)).exp()
}

pub fn features(xi: &Trajectory, env: &Environment) -> Result<FeatureVector> {
    check_dim(xi, env)?;
    let mut phi = vec![0.0; env.num_types];
    for x in xi.waypoints() {
        for o in &env.obstacles {
            phi[o.type_id] += proximity(x, &o.position, o.radius);
        }
    }
    let scale = 1.0 / xi.len() as f64;
    phi.iter_mut().for_each(|v| *v *= scale);
    Ok(FeatureVector(phi))
}

/// Linear cost `w . phi(xi)`.
pub fn cost(xi: &Trajectory, env: &Environment, w: &[f64]) -> Result<f64> {
    check_weights(w, env)?;
    Ok(features(xi, env)?.dot(w))
}

/// Partial derivatives of every feature with respect to waypoint `t`,
/// returned as an `F x d` row-major buffer.
pub fn feature_jacobian(xi: &Trajectory, env: &Environment, t: usize) -> Result<Vec<f64>> {
    check_dim(xi, env)?;
    let dim = xi.dim();
    let x = xi.waypoint(t);
    let scale = 1.0 / xi.len() as f64;
    let mut jac = vec![0.0; env.num_types * dim];
    for o in &env.obstacles {
        let g = proximity(x, &o.position, o.radius) * scale / (o.radius * o.radius);
        for k in 0..dim {
            jac[o.type_id * dim + k] -= g * (x[k] - o.position[k]);
        }
    }
    Ok(jac)
}

/// Search direction for the planner: the gradient of `w . phi(xi)` with
/// respect to every waypoint, written into `out` as a `(T+1) x d` row-major
/// buffer. Endpoint rows are included.
///
/// A waypoint exactly on an obstacle centre is a stationary point of that
/// obstacle's proximity. There the displacement is replaced by a small step
/// along the last coordinate axis so the planner can leave the saddle; the
/// true gradient is available from [`feature_jacobian`].
pub(crate) fn weighted_gradient(xi: &Trajectory, env: &Environment, w: &[f64], out: &mut [f64]) {
    let dim = xi.dim();
    let scale = 1.0 / xi.len() as f64;
    out.iter_mut().for_each(|v| *v = 0.0);
    for (t, x) in xi.waypoints().enumerate() {
        let row = &mut out[t * dim..(t + 1) * dim];
        for o in &env.obstacles {
            let wk = w[o.type_id];
            if wk == 0.0 {
                continue;
            }
            let g = wk * proximity(x, &o.position, o.radius) * scale / (o.radius * o.radius);
            if x == o.position.as_slice() {
                row[dim - 1] -= g * SADDLE_ESCAPE * o.radius;
                continue;
            }
            for k in 0..dim {
                row[k] -= g * (x[k] - o.position[k]);
            }
        }
    }
}

const SADDLE_ESCAPE: f64 = 1e-3;

/// Cached reference trajectories for the normalized cost of one environment:
/// the planner's optimum under the ground-truth weights and the straight line.
///
/// Reference costs are values of the planner objective
/// `w^H . phi(xi) + mu * smoothness(xi)`, the quantity the optimum actually
/// minimizes. Scoring with `w^H . phi` alone would let trajectories that
/// trade smoothness for feature cost score below the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub optimal: Trajectory,
    pub straight: Trajectory,
    pub optimal_cost: f64,
    pub straight_cost: f64,
    pub smooth_mu: f64,
}

/// Below this gap between straight-line and optimal cost the normalization is undefined.
pub const MIN_NORMALIZATION_GAP: f64 = 1e-9;

impl GroundTruth {
    /// Plans the optimal trajectory for the environment's ground-truth
    /// weights and records the normalization anchors.
    pub fn compute(env: &Environment, cfg: &PlannerConfig) -> Result<Self> {
        let w = env.ground_truth_w.as_deref().ok_or(Error::NoGroundTruth)?;
        let straight = env.straight_line(cfg.horizon)?;
        let optimal = plan(env, w, cfg, None)?;
        let optimal_cost = objective(&optimal, env, w, cfg.smooth_mu)?;
        let straight_cost = objective(&straight, env, w, cfg.smooth_mu)?;
        let gap = straight_cost - optimal_cost;
        if !(gap >= MIN_NORMALIZATION_GAP) {
            return Err(Error::DegenerateNormalization(gap));
        }
        Ok(Self {
            optimal,
            straight,
            optimal_cost,
            straight_cost,
            smooth_mu: cfg.smooth_mu,
        })
    }

    /// Largest distance between corresponding waypoints of the optimum and the straight line.
    pub fn max_deviation(&self) -> f64 {
        (0..self.optimal.len())
            .map(|t| self.optimal.squared_deviation(&self.straight, t).sqrt())
            .fold(0.0, f64::max)
    }

    /// Ground-truth cost rescaled so the optimum scores 0 and the straight line scores 1.
    pub fn normalize(&self, raw_cost: f64) -> f64 {
        (raw_cost - self.optimal_cost) / (self.straight_cost - self.optimal_cost)
    }
}

/// Ground-truth objective of `xi`, rescaled so the optimum scores 0 and the straight line 1.
pub fn normalized_cost(xi: &Trajectory, env: &Environment, truth: &GroundTruth) -> Result<f64> {
    let w = env.ground_truth_w.as_deref().ok_or(Error::NoGroundTruth)?;
    check_weights(w, env)?;
    Ok(truth.normalize(objective(xi, env, w, truth.smooth_mu)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Obstacle;

    fn env_with(obstacles: Vec<Obstacle>, num_types: usize) -> Environment {
        Environment::new(vec![0.0, 5.0], vec![10.0, 5.0], obstacles, num_types, None, None).unwrap()
    }

    #[test]
    fn far_obstacles_vanish() {
        let env = env_with(vec![Obstacle::new(vec![5.0, 20.0], 0, 1.0)], 1);
        let xi = env.straight_line(10).unwrap();
        assert!(features(&xi, &env).unwrap().0[0] < 1e-20);
    }

    #[test]
    fn waypoint_on_obstacle_contributes_one_share() {
        // Only waypoint 2 (at x = 5) sits on the obstacle; the rest are
        // at least 50 radii away.
        let env = env_with(vec![Obstacle::new(vec![5.0, 5.0], 0, 0.01)], 1);
        let xi = env.straight_line(4).unwrap();
        let phi = features(&xi, &env).unwrap();
        assert!((phi.0[0] - 1.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn cost_basics() {
        let env = env_with(
            vec![Obstacle::new(vec![3.0, 5.5], 0, 1.0), Obstacle::new(vec![7.0, 4.0], 1, 1.5)],
            2,
        );
        let xi = env.straight_line(20).unwrap();
        let phi = features(&xi, &env).unwrap();
        assert_eq!(cost(&xi, &env, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(cost(&xi, &env, &[1.0, 0.0]).unwrap(), phi.0[0]);
        assert_eq!(cost(&xi, &env, &[0.0, 1.0]).unwrap(), phi.0[1]);
        assert!(cost(&xi, &env, &[1.0]).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let env = env_with(vec![], 1);
        let xi = Trajectory::straight_line(&[0.0], &[1.0], 3).unwrap();
        assert!(features(&xi, &env).is_err());
    }

    #[test]
    fn normalization_interpolates() {
        let xi = Trajectory::straight_line(&[0.0], &[1.0], 2).unwrap();
        let truth = GroundTruth {
            optimal: xi.clone(),
            straight: xi,
            optimal_cost: 3.0,
            straight_cost: 5.0,
            smooth_mu: 0.5,
        };
        assert_eq!(truth.normalize(4.0), 0.5);
        assert_eq!(truth.normalize(3.0), 0.0);
        assert_eq!(truth.normalize(5.0), 1.0);
    }
}
