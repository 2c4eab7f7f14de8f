//! Online weight learning from extrapolated corrections.
//!
//! Each iteration plans with the current weights, asks a
//! [`CorrectionSource`] for a single-waypoint correction, extrapolates it to
//! a full trajectory with [`deform`], and takes the co-active step
//! `w <- w - beta (phi(corrected) - phi(planned))`.

use serde::{Deserialize, Serialize};

use crate::deform::deform;
use crate::env::{Environment, Scenario};
use crate::error::{Error, Result};
use crate::features::{features, normalized_cost, FeatureVector, GroundTruth};
use crate::kernel::PropagationKernel;
use crate::planner::{plan, PlannerConfig};
use crate::trajectory::{Correction, Trajectory};

/// What a user (human or simulated) says about a planned trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum Feedback {
    Correct(Correction),
    /// The user is satisfied and stops teaching.
    Done,
}

pub trait CorrectionSource {
    fn feedback(&mut self, planned: &Trajectory) -> Result<Feedback>;
}

impl<F> CorrectionSource for F
where
    F: FnMut(&Trajectory) -> Result<Feedback>,
{
    fn feedback(&mut self, planned: &Trajectory) -> Result<Feedback> {
        self(planned)
    }
}

/// `w - beta (phi_bar - phi)`, elementwise.
pub fn update_weights(w: &[f64], phi_bar: &FeatureVector, phi: &FeatureVector, beta: f64) -> Result<Vec<f64>> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            reason: format!("learning rate must be positive, got {beta}"),
        });
    }
    for (what, len) in [("corrected feature length", phi_bar.len()), ("planned feature length", phi.len())] {
        if len != w.len() {
            return Err(Error::Mismatch {
                what,
                expected: w.len(),
                got: len,
            });
        }
    }
    Ok(w.iter()
        .zip(phi_bar.as_slice().iter().zip(phi.as_slice()))
        .map(|(wi, (b, p))| wi - beta * (b - p))
        .collect())
}

/// Everything fixed for the duration of one learning run.
#[derive(Debug, Clone)]
pub struct LearningContext {
    pub env: Environment,
    pub planner: PlannerConfig,
    /// Present when the environment has ground-truth weights with a usable normalization.
    pub truth: Option<GroundTruth>,
}

impl LearningContext {
    pub fn new(env: Environment, planner: PlannerConfig, truth: Option<GroundTruth>) -> Self {
        Self { env, planner, truth }
    }

    pub fn from_scenario(scenario: &Scenario, planner: PlannerConfig) -> Self {
        Self::new(scenario.env.clone(), planner, Some(scenario.truth.clone()))
    }

    pub fn normalized(&self, xi: &Trajectory) -> Result<Option<f64>> {
        self.truth
            .as_ref()
            .map(|truth| normalized_cost(xi, &self.env, truth))
            .transpose()
    }
}

#[derive(Debug, Clone)]
pub struct LearnerState {
    pub w: Vec<f64>,
    /// Number of completed iterations.
    pub iteration: usize,
    pub beta: f64,
    pub kernel: PropagationKernel,
}

impl LearnerState {
    /// Fresh learner with zero weights.
    pub fn new(num_types: usize, beta: f64, kernel: PropagationKernel) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("learning rate must be positive, got {beta}"),
            });
        }
        Ok(Self {
            w: vec![0.0; num_types],
            iteration: 0,
            beta,
            kernel,
        })
    }

    /// The trajectory the robot executes under the current weights.
    pub fn plan(&self, ctx: &LearningContext) -> Result<Trajectory> {
        plan(&ctx.env, &self.w, &ctx.planner, None)
    }
}

/// One iteration of learning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub w_before: Vec<f64>,
    pub w_after: Vec<f64>,
    pub planned: Trajectory,
    pub correction: Correction,
    pub corrected: Trajectory,
    pub phi_planned: FeatureVector,
    pub phi_corrected: FeatureVector,
    /// Normalized ground-truth cost of `planned`; absent without ground truth.
    pub normalized_cost: Option<f64>,
}

/// Applies a correction to an already planned trajectory `planned = plan(w_i)`.
pub fn apply_correction(
    state: &LearnerState,
    ctx: &LearningContext,
    planned: &Trajectory,
    correction: &Correction,
) -> Result<(LearnerState, TraceRecord)> {
    let (corrected, _) = deform(planned, correction, &state.kernel)?;
    let phi_planned = features(planned, &ctx.env)?;
    let phi_corrected = features(&corrected, &ctx.env)?;
    let w_after = update_weights(&state.w, &phi_corrected, &phi_planned, state.beta)?;
    let record = TraceRecord {
        iteration: state.iteration + 1,
        w_before: state.w.clone(),
        w_after: w_after.clone(),
        planned: planned.clone(),
        correction: correction.clone(),
        corrected,
        phi_planned,
        phi_corrected,
        normalized_cost: ctx.normalized(planned)?,
    };
    let next = LearnerState {
        w: w_after,
        iteration: state.iteration + 1,
        beta: state.beta,
        kernel: state.kernel.clone(),
    };
    Ok((next, record))
}

#[derive(Debug, Clone)]
pub enum Step {
    Updated(LearnerState, Box<TraceRecord>),
    /// The correction source signalled it is satisfied; nothing was recorded.
    Done,
}

/// Plan, obtain feedback, extrapolate and update.
pub fn run_iteration(
    state: &LearnerState,
    ctx: &LearningContext,
    source: &mut dyn CorrectionSource,
) -> Result<Step> {
    let planned = state.plan(ctx)?;
    match source.feedback(&planned)? {
        Feedback::Done => Ok(Step::Done),
        Feedback::Correct(c) => {
            let (next, record) = apply_correction(state, ctx, &planned, &c)?;
            Ok(Step::Updated(next, Box::new(record)))
        }
    }
}

/// Runs up to `iterations` rounds from zero weights, stopping early if the source is done.
pub fn run_loop(
    ctx: &LearningContext,
    kernel: PropagationKernel,
    beta: f64,
    iterations: usize,
    source: &mut dyn CorrectionSource,
) -> Result<LearningTrace> {
    if iterations == 0 {
        return Err(Error::InvalidParameter {
            name: "iterations",
            reason: "need at least one iteration".into(),
        });
    }
    if kernel.horizon() != ctx.planner.horizon {
        return Err(Error::Mismatch {
            what: "kernel horizon",
            expected: ctx.planner.horizon,
            got: kernel.horizon(),
        });
    }
    let mut state = LearnerState::new(ctx.env.num_types, beta, kernel)?;
    let mut trace = LearningTrace::default();
    for _ in 0..iterations {
        match run_iteration(&state, ctx, source)? {
            Step::Done => break,
            Step::Updated(next, record) => {
                trace.push(*record)?;
                state = next;
            }
        }
    }
    Ok(trace)
}

/// Append-only list of iteration records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LearningTrace {
    records: Vec<TraceRecord>,
}

impl LearningTrace {
    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends a record, enforcing contiguous iteration numbers and weight chaining.
    pub fn push(&mut self, record: TraceRecord) -> Result<()> {
        let expected = self.records.len() + 1;
        if record.iteration != expected {
            return Err(Error::Mismatch {
                what: "trace iteration",
                expected,
                got: record.iteration,
            });
        }
        if let Some(prev) = self.records.last() {
            if prev.w_after != record.w_before {
                return Err(Error::Format(format!(
                    "record {} does not start from the weights record {} ended with",
                    record.iteration, prev.iteration
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn final_weights(&self) -> Option<&[f64]> {
        self.records.last().map(|r| r.w_after.as_slice())
    }

    /// One JSON object per line, floats at 17 significant digits.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&crate::io::to_json_string(r));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut trace = Self::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            trace.push(serde_json::from_str(line)?)?;
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_scenario, GenConfig, Obstacle};
    use crate::kernel::{make_kernel, KernelKind};
    use crate::sim_user::{SimUserConfig, SimulatedUser};

    #[test]
    fn update_rule_arithmetic() {
        let w = update_weights(
            &[0.0, 0.0],
            &FeatureVector(vec![1.0, 2.0]),
            &FeatureVector(vec![2.0, 2.0]),
            0.1,
        )
        .unwrap();
        assert_eq!(w, vec![0.1, 0.0]);
        let same = FeatureVector(vec![0.3, 0.7]);
        assert_eq!(update_weights(&[1.5, -2.0], &same, &same, 0.7).unwrap(), vec![1.5, -2.0]);
        assert!(update_weights(&[0.0], &same, &same, 0.1).is_err());
        assert!(update_weights(&[0.0, 0.0], &same, &same, 0.0).is_err());
    }

    fn one_obstacle_ctx() -> LearningContext {
        let env = Environment::new(
            vec![0.0, 5.0],
            vec![10.0, 5.0],
            vec![Obstacle::new(vec![5.0, 5.4], 0, 1.0)],
            1,
            Some(vec![1.0]),
            None,
        )
        .unwrap();
        let planner = PlannerConfig::default();
        let truth = GroundTruth::compute(&env, &planner).unwrap();
        LearningContext::new(env, planner, Some(truth))
    }

    #[test]
    fn correction_at_planned_waypoint_is_fixed_point() {
        let ctx = one_obstacle_ctx();
        let kernel = make_kernel(KernelKind::Velocity, 40).unwrap();
        let state = LearnerState::new(1, 0.5, kernel).unwrap();
        let planned = state.plan(&ctx).unwrap();
        let c = Correction::new(17, planned.waypoint(17).to_vec());
        let (next, record) = apply_correction(&state, &ctx, &planned, &c).unwrap();
        assert_eq!(record.corrected, planned);
        assert_eq!(next.w, state.w);
        assert_eq!(record.normalized_cost, Some(1.0));
    }

    #[test]
    fn simulated_loop_reduces_cost() {
        let ctx = one_obstacle_ctx();
        let kernel = make_kernel(KernelKind::Velocity, 40).unwrap();
        let truth = ctx.truth.clone().unwrap();
        let mut user = SimulatedUser::new(truth.optimal.clone(), SimUserConfig::default());
        let trace = run_loop(&ctx, kernel, 0.5, 10, &mut user).unwrap();
        let first = trace.records()[0].normalized_cost.unwrap();
        let last_w = trace.final_weights().unwrap().to_vec();
        let final_plan = plan(&ctx.env, &last_w, &ctx.planner, None).unwrap();
        let last = ctx.normalized(&final_plan).unwrap().unwrap();
        assert_eq!(first, 1.0);
        assert!(last < first, "{last}");
    }

    #[test]
    fn single_iteration_starts_from_zero() {
        let scenario = generate_scenario(2, 1, 3, &GenConfig::default()).unwrap();
        let ctx = LearningContext::from_scenario(&scenario, PlannerConfig::default());
        let kernel = make_kernel(KernelKind::Identity, 40).unwrap();
        let mut user = SimulatedUser::new(scenario.truth.optimal.clone(), SimUserConfig::default());
        let trace = run_loop(&ctx, kernel, 0.1, 1, &mut user).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.records()[0].w_before, vec![0.0, 0.0]);
    }

    #[test]
    fn early_stop_has_no_partial_record() {
        let ctx = one_obstacle_ctx();
        let kernel = make_kernel(KernelKind::Identity, 40).unwrap();
        let mut calls = 0;
        let mut source = |planned: &Trajectory| {
            calls += 1;
            if calls > 3 {
                Ok(Feedback::Done)
            } else {
                let mut q = planned.waypoint(20).to_vec();
                q[1] += 1.0;
                Ok(Feedback::Correct(Correction::new(20, q)))
            }
        };
        let trace = run_loop(&ctx, kernel, 0.1, 10, &mut source).unwrap();
        assert_eq!(trace.len(), 3);
    }

    #[test]
    fn jsonl_round_trip() {
        let ctx = one_obstacle_ctx();
        let kernel = make_kernel(KernelKind::Rbf { sigma: 3.0 }, 40).unwrap();
        let truth = ctx.truth.clone().unwrap();
        let mut user = SimulatedUser::new(truth.optimal, SimUserConfig::default());
        let trace = run_loop(&ctx, kernel, 0.2, 3, &mut user).unwrap();
        let text = trace.to_jsonl();
        assert_eq!(text.lines().count(), trace.len());
        let back = LearningTrace::from_jsonl(&text).unwrap();
        assert_eq!(back, trace);
        assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn push_rejects_broken_chain() {
        let ctx = one_obstacle_ctx();
        let kernel = make_kernel(KernelKind::Identity, 40).unwrap();
        let truth = ctx.truth.clone().unwrap();
        let mut user = SimulatedUser::new(truth.optimal, SimUserConfig::default());
        let trace = run_loop(&ctx, kernel, 0.2, 2, &mut user).unwrap();
        let mut broken = LearningTrace::default();
        broken.push(trace.records()[0].clone()).unwrap();
        let mut second = trace.records()[1].clone();
        second.w_before[0] += 1.0;
        assert!(broken.push(second).is_err());
        assert!(LearningTrace::default().push(trace.records()[1].clone()).is_err());
    }
}
