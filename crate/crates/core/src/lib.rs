//! Learning linear trajectory cost functions from single-waypoint corrections.
//!
//! A robot plans with its current weight estimate, a user moves one waypoint,
//! and the robot has to guess the whole trajectory the user meant before it
//! can update its weights. The guess is a minimum-norm deformation of the
//! planned trajectory; the norm, given here as a [`PropagationKernel`],
//! decides how far the correction spreads.
//!
//! ```
//! use corrlearn::{deform, make_kernel, Correction, KernelKind, Trajectory};
//!
//! let xi = Trajectory::from_flat(1, vec![0.0; 5])?;
//! let velocity = make_kernel(KernelKind::Velocity, xi.horizon())?;
//! let (intended, _) = deform(&xi, &Correction::new(2, vec![1.0]), &velocity)?;
//! let tent = [0.0, 0.5, 1.0, 0.5, 0.0];
//! assert!(intended.as_flat().iter().zip(tent).all(|(a, b)| (a - b).abs() < 1e-12));
//! # Ok::<(), corrlearn::Error>(())
//! ```

pub mod deform;
pub mod env;
pub mod error;
pub mod features;
pub mod io;
pub mod kernel;
pub mod learner;
pub mod planner;
pub mod sim_user;
pub mod sweep;

pub use deform::{deform, deformation_profile, Deformation};
pub use env::{generate_environment, generate_scenario, Environment, GenConfig, Obstacle, Scenario};
pub use error::{Error, Result};
pub use features::{cost, feature_jacobian, features, normalized_cost, FeatureVector, GroundTruth};
pub use kernel::{make_kernel, KernelKind, KernelVariant, PropagationKernel};
pub use learner::{
    apply_correction, run_iteration, run_loop, update_weights, CorrectionSource, Feedback, LearnerState,
    LearningContext, LearningTrace, Step, TraceRecord,
};
pub use planner::{plan, straight_line, PlannerConfig};
pub use sim_user::{simulate_correction, SimUserConfig, SimulatedUser, Strategy};
pub use trajectory::{Correction, Trajectory};

mod trajectory;
