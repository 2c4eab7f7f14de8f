//! Propagation kernels: the inverse inner-product matrices that decide how a
//! single waypoint change spreads over the rest of a trajectory.
//!
//! Kernels live on the `n = T - 1` interior timepoints only. The endpoints
//! of a trajectory are always held fixed, so restricting the inner product to
//! the interior enforces the endpoint constraints by construction. Row and
//! column `i` of a kernel correspond to timepoint `i + 1`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which inner product is used to interpret a correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpec", into = "KernelSpec")]
pub enum KernelKind {
    /// Euclidean inner product: only the corrected waypoint moves.
    Identity,
    /// Sum of squared velocities: corrections propagate linearly to the endpoints.
    Velocity,
    /// Gaussian kernel over timestep distance with width `sigma` (in timesteps).
    Rbf { sigma: f64 },
}

/// Wire form of [`KernelKind`]: `{"variant": "rbf", "sigma": 3.0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSpec {
    pub variant: KernelVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelVariant {
    Identity,
    Velocity,
    Rbf,
}

impl KernelVariant {
    fn name(self) -> &'static str {
        match self {
            KernelVariant::Identity => "identity",
            KernelVariant::Velocity => "velocity",
            KernelVariant::Rbf => "rbf",
        }
    }
}

impl KernelKind {
    /// Builds a kernel kind from a variant and optional width, enforcing that
    /// `sigma` is given exactly when the variant is RBF.
    pub fn new(variant: KernelVariant, sigma: Option<f64>) -> Result<Self> {
        match (variant, sigma) {
            (KernelVariant::Rbf, None) => Err(Error::MissingSigma("rbf")),
            (KernelVariant::Rbf, Some(s)) => {
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::InvalidSigma(s));
                }
                Ok(KernelKind::Rbf { sigma: s })
            }
            (v, Some(_)) => Err(Error::UnexpectedSigma(v.name())),
            (KernelVariant::Identity, None) => Ok(KernelKind::Identity),
            (KernelVariant::Velocity, None) => Ok(KernelKind::Velocity),
        }
    }

    pub fn variant(&self) -> KernelVariant {
        match self {
            KernelKind::Identity => KernelVariant::Identity,
            KernelKind::Velocity => KernelVariant::Velocity,
            KernelKind::Rbf { .. } => KernelVariant::Rbf,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            KernelKind::Rbf { sigma } => Some(*sigma),
            _ => None,
        }
    }
}

impl TryFrom<KernelSpec> for KernelKind {
    type Error = Error;

    fn try_from(spec: KernelSpec) -> Result<Self> {
        KernelKind::new(spec.variant, spec.sigma)
    }
}

impl From<KernelKind> for KernelSpec {
    fn from(kind: KernelKind) -> Self {
        KernelSpec {
            variant: kind.variant(),
            sigma: kind.sigma(),
        }
    }
}

/// Labels are `identity`, `velocity` and `rbf:<sigma>`.
impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Identity => f.write_str("identity"),
            KernelKind::Velocity => f.write_str("velocity"),
            KernelKind::Rbf { sigma } => write!(f, "rbf:{sigma}"),
        }
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once([':', '=']) {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.as_str(), None),
        };
        let sigma = arg
            .map(|a| {
                a.parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad sigma {a:?}: {e}")))
            })
            .transpose()?;
        let variant = match name {
            "identity" | "euclidean" => KernelVariant::Identity,
            "velocity" | "velocities" => KernelVariant::Velocity,
            "rbf" | "gaussian" => KernelVariant::Rbf,
            other => return Err(Error::Format(format!("unknown kernel {other:?}"))),
        };
        KernelKind::new(variant, sigma)
    }
}

/// A symmetric positive-definite `n x n` matrix acting as `A^{-1}` on the
/// interior timepoints of a trajectory with `T = n + 1`.
#[derive(Debug, Clone)]
pub struct PropagationKernel {
    kind: KernelKind,
    entries: Arc<DMatrix<f64>>,
}

impl PropagationKernel {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Number of interior timepoints.
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Trajectory horizon `T` this kernel was built for.
    pub fn horizon(&self) -> usize {
        self.size() + 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Entry for interior rows/columns `i`, `j` (zero-based, timepoints `i + 1`, `j + 1`).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Coupling of each interior timepoint to the start and goal in the full
    /// inner product `A`, as `(row 0, row T)` restricted to interior columns.
    ///
    /// Only the velocity metric couples interior waypoints to the endpoints
    /// (the `-1` next to each endpoint on the tridiagonal). The identity and
    /// RBF metrics are defined with decoupled endpoints.
    pub(crate) fn endpoint_coupling(&self, interior: usize) -> (f64, f64) {
        match self.kind {
            KernelKind::Velocity => {
                let n = self.size();
                let first = if interior == 0 { -1.0 } else { 0.0 };
                let last = if interior + 1 == n { -1.0 } else { 0.0 };
                (first, last)
            }
            _ => (0.0, 0.0),
        }
    }
}

/// Builds the propagation kernel of the given kind for a trajectory with
/// horizon `T` (`T + 1` waypoints, `T - 1` of them interior).
pub fn make_kernel(kind: KernelKind, horizon: usize) -> Result<PropagationKernel> {
    if horizon < 2 {
        return Err(Error::TooShort(horizon));
    }
    let n = horizon - 1;
    let entries = match kind {
        KernelKind::Identity => Arc::new(DMatrix::identity(n, n)),
        KernelKind::Velocity => velocity_inverse(n),
        KernelKind::Rbf { sigma } => {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::InvalidSigma(sigma));
            }
            let k = rbf_matrix(n, sigma);
            if !numerically_positive_definite(&k) {
                return Err(Error::NotPositiveDefinite { sigma, n });
            }
            Arc::new(k)
        }
    };
    Ok(PropagationKernel { kind, entries })
}

/// The finite-differencing matrix over `n` interior timepoints: 2 on the
/// diagonal, -1 on the first off-diagonals. `x^T A x` is the sum of squared
/// velocities of a trajectory whose endpoints are clamped to zero.
pub fn velocity_metric(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    })
}

/// Unit-diagonal Gaussian Gram matrix over timestep indices.
pub fn rbf_matrix(n: usize, sigma: f64) -> DMatrix<f64> {
    let denom = 2.0 * sigma * sigma;
    DMatrix::from_fn(n, n, |i, j| {
        let d = i as f64 - j as f64;
        (-(d * d) / denom).exp()
    })
}

fn velocity_cache() -> &'static RwLock<HashMap<usize, Arc<DMatrix<f64>>>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<DMatrix<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn velocity_inverse(n: usize) -> Arc<DMatrix<f64>> {
    if let Some(hit) = velocity_cache().read().unwrap().get(&n) {
        return Arc::clone(hit);
    }
    let inv = velocity_metric(n)
        .cholesky()
        .expect("velocity metric is positive definite")
        .inverse();
    // Symmetrize away the last-ulp asymmetry of the triangular solves.
    let inv = (&inv + inv.transpose()) * 0.5;
    let mut cache = velocity_cache().write().unwrap();
    Arc::clone(cache.entry(n).or_insert_with(|| Arc::new(inv)))
}

/// Cholesky test with a roundoff-scale diagonal allowance.
///
/// A Gaussian Gram matrix on distinct points is positive definite in exact
/// arithmetic, but for wide kernels its smallest eigenvalues sit below
/// `f64` roundoff (about `1e-15` for `sigma = 5`, `n = 39`), so a bare
/// factorization fails on matrices that are fine to propagate with. The
/// allowance is `n * eps * max|K_ii|`, the size of the error a dense
/// factorization itself commits.
fn numerically_positive_definite(k: &DMatrix<f64>) -> bool {
    let n = k.nrows();
    if k.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let scale = k.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale <= 0.0 {
        return false;
    }
    let nugget = 4.0 * n as f64 * f64::EPSILON * scale;
    let mut shifted = k.clone();
    for i in 0..n {
        shifted[(i, i)] += nugget;
    }
    shifted.cholesky().is_some()
}
