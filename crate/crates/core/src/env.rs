//! Environments: start and goal configurations, typed obstacles and the
//! hidden ground-truth weights, plus seeded random generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::GroundTruth;
use crate::planner::PlannerConfig;
use crate::sim_user::DONE_THRESHOLD;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub position: Vec<f64>,
    pub type_id: usize,
    /// Length-scale of the Gaussian proximity feature.
    pub radius: f64,
}

impl Obstacle {
    pub fn new(position: Vec<f64>, type_id: usize, radius: f64) -> Self {
        Self {
            position,
            type_id,
            radius,
        }
    }
}

/// A planning problem. Serialized as a JSON document with the fields in
/// declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnvironment")]
pub struct Environment {
    dim: usize,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    pub obstacles: Vec<Obstacle>,
    pub num_types: usize,
    /// Hidden weights `w^H`; absent for hand-authored scenes without ground truth.
    pub ground_truth_w: Option<Vec<f64>>,
    pub seed: Option<u64>,
}

#[derive(Deserialize)]
struct RawEnvironment {
    dim: usize,
    start: Vec<f64>,
    goal: Vec<f64>,
    obstacles: Vec<Obstacle>,
    num_types: usize,
    #[serde(default)]
    ground_truth_w: Option<Vec<f64>>,
    #[serde(default)]
    seed: Option<u64>,
}

impl TryFrom<RawEnvironment> for Environment {
    type Error = Error;

    fn try_from(raw: RawEnvironment) -> Result<Self> {
        if raw.start.len() != raw.dim {
            return Err(Error::Mismatch {
                what: "start dimension",
                expected: raw.dim,
                got: raw.start.len(),
            });
        }
        Environment::new(raw.start, raw.goal, raw.obstacles, raw.num_types, raw.ground_truth_w, raw.seed)
    }
}

impl Environment {
    pub fn new(
        start: Vec<f64>,
        goal: Vec<f64>,
        obstacles: Vec<Obstacle>,
        num_types: usize,
        ground_truth_w: Option<Vec<f64>>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let dim = start.len();
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "start",
                reason: "empty configuration".into(),
            });
        }
        if goal.len() != dim {
            return Err(Error::Mismatch {
                what: "goal dimension",
                expected: dim,
                got: goal.len(),
            });
        }
        if start == goal {
            return Err(Error::InvalidParameter {
                name: "goal",
                reason: "start and goal coincide".into(),
            });
        }
        if num_types == 0 {
            return Err(Error::InvalidParameter {
                name: "num_types",
                reason: "need at least one feature type".into(),
            });
        }
        if start.iter().chain(&goal).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("start/goal"));
        }
        for o in &obstacles {
            if o.position.len() != dim {
                return Err(Error::Mismatch {
                    what: "obstacle dimension",
                    expected: dim,
                    got: o.position.len(),
                });
            }
            if o.type_id >= num_types {
                return Err(Error::OutOfRange {
                    index: o.type_id,
                    max: num_types - 1,
                });
            }
            if !(o.radius.is_finite() && o.radius > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "radius",
                    reason: format!("must be positive, got {}", o.radius),
                });
            }
            if o.position.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("obstacle position"));
            }
        }
        if let Some(w) = &ground_truth_w {
            if w.len() != num_types {
                return Err(Error::Mismatch {
                    what: "ground_truth_w length",
                    expected: num_types,
                    got: w.len(),
                });
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("ground_truth_w"));
            }
        }
        Ok(Self {
            dim,
            start,
            goal,
            obstacles,
            num_types,
            ground_truth_w,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn instances_of(&self, type_id: usize) -> usize {
        self.obstacles.iter().filter(|o| o.type_id == type_id).count()
    }

    pub fn straight_line(&self, horizon: usize) -> Result<Trajectory> {
        Trajectory::straight_line(&self.start, &self.goal, horizon)
    }

    pub fn to_json(&self) -> String {
        crate::io::to_json_string(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Parameters of random environment generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    /// Obstacles are placed uniformly in `[lo, hi]^2`.
    pub workspace: [f64; 2],
    pub radius: f64,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    pub max_rejections: u32,
    pub planner: PlannerConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            workspace: [0.0, 10.0],
            radius: 1.0,
            start: vec![0.0, 5.0],
            goal: vec![10.0, 5.0],
            max_rejections: 100,
            planner: PlannerConfig::default(),
        }
    }
}

/// An environment together with its normalization anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub env: Environment,
    pub truth: GroundTruth,
}

fn sample_candidate(
    num_types: usize,
    instances: usize,
    seed: u64,
    attempt: u32,
    cfg: &GenConfig,
) -> Result<Environment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    let [lo, hi] = cfg.workspace;
    let dim = cfg.start.len();
    let mut obstacles = Vec::with_capacity(num_types * instances);
    for type_id in 0..num_types {
        for _ in 0..instances {
            let position = (0..dim).map(|_| rng.random_range(lo..hi)).collect();
            obstacles.push(Obstacle::new(position, type_id, cfg.radius));
        }
    }
    let w = (0..num_types).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Environment::new(
        cfg.start.clone(),
        cfg.goal.clone(),
        obstacles,
        num_types,
        Some(w),
        Some(seed),
    )
}

/// Generates a random environment with `num_types` obstacle types and
/// `instances` obstacles of each type, and plans its ground truth.
///
/// Candidates whose straight line is already optimal under the planner are
/// rejected and redrawn from the next RNG stream of the same seed. So are
/// candidates whose optimum stays within the simulated user's stopping
/// distance of the straight line, since no correction would ever be made.
pub fn generate_scenario(
    num_types: usize,
    instances: usize,
    seed: u64,
    cfg: &GenConfig,
) -> Result<Scenario> {
    if num_types == 0 || instances == 0 {
        return Err(Error::InvalidParameter {
            name: "num_types/instances",
            reason: "both must be at least 1".into(),
        });
    }
    let [lo, hi] = cfg.workspace;
    if !(lo < hi) {
        return Err(Error::InvalidParameter {
            name: "workspace",
            reason: format!("empty interval [{lo}, {hi}]"),
        });
    }
    for attempt in 0..cfg.max_rejections {
        let env = sample_candidate(num_types, instances, seed, attempt, cfg)?;
        match GroundTruth::compute(&env, &cfg.planner) {
            Ok(truth) if truth.max_deviation() >= DONE_THRESHOLD => return Ok(Scenario { env, truth }),
            Ok(_) => continue,
            Err(Error::DegenerateNormalization(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationExhausted {
        seed,
        attempts: cfg.max_rejections,
    })
}

pub fn generate_environment(
    num_types: usize,
    instances: usize,
    seed: u64,
    cfg: &GenConfig,
) -> Result<Environment> {
    generate_scenario(num_types, instances, seed, cfg).map(|s| s.env)
}
