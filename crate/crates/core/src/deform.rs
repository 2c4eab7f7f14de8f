//! Minimum-norm trajectory deformation.
//!
//! Given a trajectory `xi` and a correction moving waypoint `t` to `q`, the
//! intended trajectory is `xi + delta` where `delta` minimizes
//! `1/2 delta^T A delta` subject to `delta(0) = 0`, `delta(t) = q - xi(t)`
//! and `delta(T) = 0`. With the kernel `K = A^{-1}` defined on the interior
//! timepoints the endpoint constraints hold by construction and the
//! stationarity condition `A delta + lambda e_t = 0` gives, per coordinate,
//!
//! ```text
//! delta_interior = -lambda K e_t,   lambda = -(q - xi(t)) / K[t, t]
//! ```
//!
//! so the correction is propagated along column `t` of the kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::PropagationKernel;
use crate::trajectory::{Correction, Trajectory};

/// The displacement applied by [`deform`] together with the Lagrange
/// multipliers of the three equality constraints, one per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    /// `(T + 1) x d` displacement; rows `0` and `T` are exactly zero.
    pub delta: Trajectory,
    /// Multiplier on `xi_bar(t) = q`.
    pub lambda: Vec<f64>,
    /// Multiplier on `xi_bar(0) = xi(0)`.
    pub gamma: Vec<f64>,
    /// Multiplier on `xi_bar(T) = xi(T)`.
    pub kappa: Vec<f64>,
}

fn check_kernel(xi: &Trajectory, kernel: &PropagationKernel) -> Result<()> {
    if kernel.size() != xi.interior_len() {
        return Err(Error::Mismatch {
            what: "kernel size (interior timepoints)",
            expected: xi.interior_len(),
            got: kernel.size(),
        });
    }
    Ok(())
}

/// Extrapolates a single-waypoint correction to a full intended trajectory.
///
/// The corrected waypoint of the result equals `c.q` exactly and the
/// endpoints are copied unchanged. A correction equal to the current
/// waypoint returns `xi` unchanged.
pub fn deform(
    xi: &Trajectory,
    c: &Correction,
    kernel: &PropagationKernel,
) -> Result<(Trajectory, Deformation)> {
    c.validate(xi)?;
    check_kernel(xi, kernel)?;

    let dim = xi.dim();
    let n = xi.interior_len();
    let col = c.t - 1;
    let pivot = kernel.get(col, col);
    if !(pivot > 0.0) {
        return Err(Error::Singular(c.t));
    }

    let mut corrected = xi.clone();
    let mut delta = Trajectory::from_flat(dim, vec![0.0; xi.as_flat().len()])?;
    let mut lambda = vec![0.0; dim];

    for k in 0..dim {
        let magnitude = c.q[k] - xi.waypoint(c.t)[k];
        let scale = magnitude / pivot;
        lambda[k] = -scale;
        for i in 0..n {
            let t = i + 1;
            let d = if t == c.t { magnitude } else { kernel.get(i, col) * scale };
            delta.waypoint_mut(t)[k] = d;
            corrected.waypoint_mut(t)[k] = if t == c.t { c.q[k] } else { xi.waypoint(t)[k] + d };
        }
    }

    // Endpoint multipliers from rows 0 and T of the full stationarity condition.
    let mut gamma = vec![0.0; dim];
    let mut kappa = vec![0.0; dim];
    for i in 0..n {
        let (to_start, to_goal) = kernel.endpoint_coupling(i);
        if to_start == 0.0 && to_goal == 0.0 {
            continue;
        }
        for k in 0..dim {
            let d = delta.waypoint(i + 1)[k];
            gamma[k] -= to_start * d;
            kappa[k] -= to_goal * d;
        }
    }

    Ok((
        corrected,
        Deformation {
            delta,
            lambda,
            gamma,
            kappa,
        },
    ))
}

/// Shape of the deformation caused by a unit correction at timepoint `t`
/// (`1 <= t <= n`): column `t` of the kernel scaled so that entry `t` is 1.
/// Index `i` of the result is timepoint `i + 1`.
pub fn deformation_profile(kernel: &PropagationKernel, t: usize) -> Result<Vec<f64>> {
    let n = kernel.size();
    if t == 0 || t > n {
        return Err(Error::OutOfRange { index: t, max: n });
    }
    let col = t - 1;
    let pivot = kernel.get(col, col);
    if !(pivot > 0.0) {
        return Err(Error::Singular(t));
    }
    Ok((0..n)
        .map(|i| if i == col { 1.0 } else { kernel.get(i, col) / pivot })
        .collect())
}
