//! Discretized trajectories and waypoint corrections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sequence of `T + 1` configurations in a `d`-dimensional space,
/// indexed by uniform timesteps `0..=T`.
///
/// Waypoints are stored row-major. The number of waypoints and the
/// dimension never change after construction; operations that modify a
/// trajectory produce a new value of the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Trajectory {
    dim: usize,
    data: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from a flat row-major buffer of `len * dim` values.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be at least 1".into(),
            });
        }
        if data.len() % dim != 0 {
            return Err(Error::Shape {
                rows: data.len() / dim,
                dim,
                expected: (data.len() / dim) * dim,
                got: data.len(),
            });
        }
        let rows = data.len() / dim;
        if rows < 3 {
            return Err(Error::TooShort(rows.saturating_sub(1)));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_waypoints<W: AsRef<[f64]>>(waypoints: &[W]) -> Result<Self> {
        let dim = waypoints.first().map_or(0, |w| w.as_ref().len());
        let mut data = Vec::with_capacity(waypoints.len() * dim);
        for (i, w) in waypoints.iter().enumerate() {
            let w = w.as_ref();
            if w.len() != dim {
                return Err(Error::Shape {
                    rows: i,
                    dim,
                    expected: dim,
                    got: w.len(),
                });
            }
            data.extend_from_slice(w);
        }
        Self::from_flat(dim, data)
    }

    /// Uniform linear interpolation from `start` to `goal` with `horizon + 1` waypoints.
    pub fn straight_line(start: &[f64], goal: &[f64], horizon: usize) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::TooShort(horizon));
        }
        if start.len() != goal.len() {
            return Err(Error::Mismatch {
                what: "goal dimension",
                expected: start.len(),
                got: goal.len(),
            });
        }
        let dim = start.len();
        let mut data = Vec::with_capacity((horizon + 1) * dim);
        for t in 0..=horizon {
            let s = t as f64 / horizon as f64;
            for k in 0..dim {
                // Pin the endpoints exactly rather than trusting the lerp.
                let v = match t {
                    0 => start[k],
                    _ if t == horizon => goal[k],
                    _ => start[k] + s * (goal[k] - start[k]),
                };
                data.push(v);
            }
        }
        Self::from_flat(dim, data)
    }

    /// Number of segments `T`; waypoints are indexed `0..=T`.
    pub fn horizon(&self) -> usize {
        self.len() - 1
    }

    /// Number of waypoints `T + 1`.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of interior waypoints `T - 1`.
    pub fn interior_len(&self) -> usize {
        self.len() - 2
    }

    pub fn waypoint(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub(crate) fn waypoint_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn waypoints(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.waypoints().map(<[f64]>::to_vec).collect()
    }

    /// Checks that `other` has the same waypoint count and dimension.
    pub fn check_same_shape(&self, other: &Trajectory) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Mismatch {
                what: "waypoint count",
                expected: self.len(),
                got: other.len(),
            });
        }
        if self.dim != other.dim {
            return Err(Error::Mismatch {
                what: "trajectory dimension",
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    /// Squared Euclidean distance between waypoint `t` of `self` and `other`.
    pub fn squared_deviation(&self, other: &Trajectory, t: usize) -> f64 {
        self.waypoint(t)
            .iter()
            .zip(other.waypoint(t))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Trajectory {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_waypoints(&rows)
    }
}

impl From<Trajectory> for Vec<Vec<f64>> {
    fn from(xi: Trajectory) -> Self {
        xi.to_rows()
    }
}

/// A single corrected waypoint: the user moved timepoint `t` to configuration `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub t: usize,
    pub q: Vec<f64>,
}

impl Correction {
    pub fn new(t: usize, q: Vec<f64>) -> Self {
        Self { t, q }
    }

    /// Validates the correction against a trajectory: `t` must be interior
    /// and `q` finite with the trajectory's dimension.
    pub fn validate(&self, xi: &Trajectory) -> Result<()> {
        let horizon = xi.horizon();
        if self.t == 0 || self.t >= horizon {
            return Err(Error::EndpointCorrection { t: self.t, horizon });
        }
        if self.q.len() != xi.dim() {
            return Err(Error::Mismatch {
                what: "correction dimension",
                expected: xi.dim(),
                got: self.q.len(),
            });
        }
        if self.q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("correction"));
        }
        Ok(())
    }
}
