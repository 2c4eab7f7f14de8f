//! Reference implementations used only by tests. None of these call into the
//! library's numerical code; they are direct transcriptions of the defining
//! formulas.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Which inner product an oracle instance uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    Identity,
    Velocity,
    Rbf(f64),
}

/// Solution of the equality-constrained QP for one coordinate.
#[derive(Debug, Clone)]
pub struct QpSolution {
    /// Displacement at all `T + 1` timepoints.
    pub delta: Vec<f64>,
    /// Multipliers on the constraints at `0`, `t`, `T` in the sign convention
    /// `A delta + C^T mu = 0`.
    pub gamma: f64,
    pub lambda: f64,
    pub kappa: f64,
}

/// The full `(T + 1) x (T + 1)` norm matrix: identity, or 2 on the diagonal
/// and -1 beside it over every timepoint.
pub fn full_norm_matrix(norm: Norm, horizon: usize) -> DMatrix<f64> {
    let m = horizon + 1;
    match norm {
        Norm::Identity => DMatrix::identity(m, m),
        Norm::Velocity => {
            let mut a = DMatrix::zeros(m, m);
            for i in 0..m {
                a[(i, i)] = 2.0;
                if i + 1 < m {
                    a[(i, i + 1)] = -1.0;
                    a[(i + 1, i)] = -1.0;
                }
            }
            a
        }
        Norm::Rbf(_) => panic!("the RBF norm is specified through its inverse"),
    }
}

/// `blockdiag(1, K_interior, 1)` for the Gaussian kernel.
pub fn full_rbf_kernel(sigma: f64, horizon: usize) -> DMatrix<f64> {
    let m = horizon + 1;
    let mut k = DMatrix::zeros(m, m);
    k[(0, 0)] = 1.0;
    k[(horizon, horizon)] = 1.0;
    for i in 1..horizon {
        for j in 1..horizon {
            let d = i as f64 - j as f64;
            k[(i, j)] = (-d * d / (2.0 * sigma * sigma)).exp();
        }
    }
    k
}

fn constraint_rows(horizon: usize, t: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(3, horizon + 1);
    c[(0, 0)] = 1.0;
    c[(1, t)] = 1.0;
    c[(2, horizon)] = 1.0;
    c
}

/// Minimizes `1/2 delta^T A delta` subject to `delta(0) = 0`,
/// `delta(t) = magnitude`, `delta(T) = 0` by assembling and solving the dense
/// KKT system.
///
/// Identity and velocity norms use the primal system `[[A, C^T], [C, 0]]`.
/// The Gaussian norm is only available as `A^{-1}`, which is numerically
/// singular for wide kernels, so its stationarity condition is written as
/// `delta + A^{-1} C^T mu = 0` and the system `[[I, K C^T], [C, 0]]` is solved.
pub fn constrained_qp(norm: Norm, horizon: usize, t: usize, magnitude: f64) -> QpSolution {
    let m = horizon + 1;
    let c = constraint_rows(horizon, t);
    let mut kkt = DMatrix::zeros(m + 3, m + 3);
    match norm {
        Norm::Rbf(sigma) => {
            let k = full_rbf_kernel(sigma, horizon);
            kkt.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
            kkt.view_mut((0, m), (m, 3)).copy_from(&(&k * c.transpose()));
        }
        _ => {
            kkt.view_mut((0, 0), (m, m)).copy_from(&full_norm_matrix(norm, horizon));
            kkt.view_mut((0, m), (m, 3)).copy_from(&c.transpose());
        }
    }
    kkt.view_mut((m, 0), (3, m)).copy_from(&c);
    let mut rhs = DVector::zeros(m + 3);
    rhs[m + 1] = magnitude;
    let x = kkt.lu().solve(&rhs).expect("KKT system is nonsingular");
    QpSolution {
        delta: x.rows(0, m).iter().copied().collect(),
        gamma: x[m],
        lambda: x[m + 1],
        kappa: x[m + 2],
    }
}

/// Piecewise-linear interpolant through `(0, 0)`, `(t, magnitude)`, `(T, 0)`.
pub fn tent(horizon: usize, t: usize, magnitude: f64) -> Vec<f64> {
    (0..=horizon)
        .map(|s| {
            if s <= t {
                magnitude * s as f64 / t as f64
            } else {
                magnitude * (horizon - s) as f64 / (horizon - t) as f64
            }
        })
        .collect()
}

/// A point obstacle for the feature oracle: position, type, radius.
pub type PointObstacle = (Vec<f64>, usize, f64);

/// Literal double sum `1/(T+1) sum_t sum_{o in k} exp(-|x_t - p_o|^2 / (2 r_o^2))`.
pub fn naive_features(waypoints: &[Vec<f64>], obstacles: &[PointObstacle], num_types: usize) -> Vec<f64> {
    let mut phi = Vec::with_capacity(num_types);
    for k in 0..num_types {
        let mut total = 0.0;
        for x in waypoints {
            for (p, type_id, r) in obstacles {
                if *type_id != k {
                    continue;
                }
                let mut d2 = 0.0;
                for i in 0..x.len() {
                    d2 += (x[i] - p[i]).powi(2);
                }
                total += f64::exp(-d2 / (2.0 * r * r));
            }
        }
        phi.push(total / waypoints.len() as f64);
    }
    phi
}

/// Central finite-difference derivative of every feature with respect to
/// every coordinate of waypoint `t`, as an `F x d` row-major buffer.
pub fn fd_feature_jacobian<F>(waypoints: &[Vec<f64>], t: usize, step: f64, num_types: usize, phi: F) -> Vec<f64>
where
    F: Fn(&[Vec<f64>]) -> Vec<f64>,
{
    let dim = waypoints[t].len();
    let mut jac = vec![0.0; num_types * dim];
    for k in 0..dim {
        let mut plus = waypoints.to_vec();
        let mut minus = waypoints.to_vec();
        plus[t][k] += step;
        minus[t][k] -= step;
        let (fp, fm) = (phi(&plus), phi(&minus));
        for f in 0..num_types {
            jac[f * dim + k] = (fp[f] - fm[f]) / (2.0 * step);
        }
    }
    jac
}
