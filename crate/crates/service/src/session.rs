//! One interactive learning run, independent of HTTP.

use corrlearn::kernel::KernelSpec;
use corrlearn::{
    apply_correction, deform, generate_scenario, make_kernel, Correction, Environment, GroundTruth, KernelKind,
    LearnerState, LearningContext, LearningTrace, Trajectory,
};
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;
use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingCorrection,
    /// Held only while a commit is being applied under the session's write lock.
    Replanning,
    Done,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// Generate the environment from this seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Or use this environment document.
    #[serde(default)]
    pub env: Option<Environment>,
    pub kernel: KernelSpec,
    pub beta: f64,
    #[serde(default)]
    pub types: Option<usize>,
    #[serde(default)]
    pub instances: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreviewRequest {
    pub t: usize,
    pub q: Vec<f64>,
    /// Defaults to the session's learning kernel.
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectionRequest {
    pub t: usize,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionView {
    pub id: String,
    pub phase: Phase,
    pub kernel: KernelKind,
    pub beta: f64,
    pub iteration: usize,
    pub w: Vec<f64>,
    pub planned: Trajectory,
    /// Normalized ground-truth cost of `planned`, when the environment has ground truth.
    pub normalized_cost: Option<f64>,
    pub env: Environment,
}

#[derive(Debug, Clone, Serialize)]
pub struct PreviewResponse {
    pub kernel: KernelKind,
    pub t: usize,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommitResponse {
    pub iteration: usize,
    pub phase: Phase,
    pub corrected: Trajectory,
    pub w_before: Vec<f64>,
    pub w: Vec<f64>,
    pub planned: Trajectory,
    /// Cost of the trajectory that was corrected.
    pub normalized_cost_before: Option<f64>,
    /// Cost of the new plan.
    pub normalized_cost: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinishResponse {
    pub id: String,
    pub phase: Phase,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
}

fn kernel_kind(spec: KernelSpec) -> Result<KernelKind, ApiError> {
    KernelKind::try_from(spec).map_err(ApiError::from)
}

#[derive(Debug)]
pub struct Session {
    id: String,
    ctx: LearningContext,
    state: LearnerState,
    planned: Trajectory,
    trace: LearningTrace,
    phase: Phase,
}

impl Session {
    /// Builds the environment, plans with zero weights and waits for the first correction.
    pub fn create(id: String, req: CreateSession, cfg: &ServiceConfig) -> Result<Self, ApiError> {
        let kind = kernel_kind(req.kernel)?;
        let kernel = make_kernel(kind, cfg.planner.horizon)?;
        let (env, truth) = match (req.seed, req.env) {
            (Some(_), Some(_)) => {
                return Err(ApiError::bad_request("invalid_request", "give either seed or env, not both").with_field("env"))
            }
            (None, None) => return Err(ApiError::bad_request("invalid_request", "seed or env is required").with_field("seed")),
            (Some(seed), None) => {
                let s = generate_scenario(req.types.unwrap_or(1), req.instances.unwrap_or(1), seed, &cfg.gen_config())?;
                (s.env, Some(s.truth))
            }
            (None, Some(env)) => {
                if req.types.is_some() || req.instances.is_some() {
                    return Err(ApiError::bad_request("invalid_request", "types and instances apply to seeded sessions only")
                        .with_field("types"));
                }
                let truth = match GroundTruth::compute(&env, &cfg.planner) {
                    Ok(t) => Some(t),
                    Err(corrlearn::Error::NoGroundTruth | corrlearn::Error::DegenerateNormalization(_)) => None,
                    Err(e) => return Err(e.into()),
                };
                (env, truth)
            }
        };
        let ctx = LearningContext::new(env, cfg.planner.clone(), truth);
        let state = LearnerState::new(ctx.env.num_types, req.beta, kernel)?;
        let planned = state.plan(&ctx)?;
        Ok(Self {
            id,
            ctx,
            state,
            planned,
            trace: LearningTrace::default(),
            phase: Phase::AwaitingCorrection,
        })
    }

    pub(crate) fn set_id(&mut self, id: String) {
        self.id = id;
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn trace(&self) -> &LearningTrace {
        &self.trace
    }

    pub fn planned(&self) -> &Trajectory {
        &self.planned
    }

    pub fn view(&self) -> Result<SessionView, ApiError> {
        Ok(SessionView {
            id: self.id.clone(),
            phase: self.phase,
            kernel: self.state.kernel.kind(),
            beta: self.state.beta,
            iteration: self.state.iteration,
            w: self.state.w.clone(),
            planned: self.planned.clone(),
            normalized_cost: self.ctx.normalized(&self.planned)?,
            env: self.ctx.env.clone(),
        })
    }

    fn require_awaiting(&self, action: &str) -> Result<(), ApiError> {
        match self.phase {
            Phase::AwaitingCorrection => Ok(()),
            other => Err(ApiError::phase(format!(
                "cannot {action}: session {} is {}",
                self.id,
                serde_json::to_value(other).unwrap().as_str().unwrap()
            ))),
        }
    }

    /// Deforms the current plan without touching the session.
    pub fn preview(&self, req: PreviewRequest) -> Result<PreviewResponse, ApiError> {
        self.require_awaiting("preview")?;
        let kernel = match req.kernel {
            None => self.state.kernel.clone(),
            Some(spec) => make_kernel(kernel_kind(spec)?, self.planned.horizon())?,
        };
        let (trajectory, _) = deform(&self.planned, &Correction::new(req.t, req.q), &kernel)?;
        Ok(PreviewResponse {
            kernel: kernel.kind(),
            t: req.t,
            trajectory,
        })
    }

    /// Runs one learning iteration with a human correction. Either the whole
    /// iteration is applied or the session is left as it was.
    pub fn commit(&mut self, req: CorrectionRequest) -> Result<CommitResponse, ApiError> {
        self.require_awaiting("commit a correction")?;
        self.phase = Phase::Replanning;
        let result = self.apply(Correction::new(req.t, req.q));
        self.phase = Phase::AwaitingCorrection;
        result
    }

    fn apply(&mut self, correction: Correction) -> Result<CommitResponse, ApiError> {
        let (next, record) = apply_correction(&self.state, &self.ctx, &self.planned, &correction)?;
        let planned = next.plan(&self.ctx)?;
        let normalized_cost = self.ctx.normalized(&planned)?;
        let response = CommitResponse {
            iteration: record.iteration,
            phase: Phase::AwaitingCorrection,
            corrected: record.corrected.clone(),
            w_before: record.w_before.clone(),
            w: next.w.clone(),
            planned: planned.clone(),
            normalized_cost_before: record.normalized_cost,
            normalized_cost,
        };
        self.trace.push(record)?;
        self.state = next;
        self.planned = planned;
        Ok(response)
    }

    /// Marks the session done. Calling it again returns the same result.
    pub fn finish(&mut self) {
        self.phase = Phase::Done;
    }

    pub fn finish_response(&self, trace_file: Option<String>) -> FinishResponse {
        FinishResponse {
            id: self.id.clone(),
            phase: self.phase,
            iterations: self.trace.len(),
            trace_file,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use corrlearn::kernel::KernelVariant;

    fn request(seed: u64, kernel: KernelKind) -> CreateSession {
        CreateSession {
            seed: Some(seed),
            env: None,
            kernel: kernel.into(),
            beta: 5.0,
            types: None,
            instances: None,
        }
    }

    #[test]
    fn starts_awaiting_with_the_straight_line() {
        let s = Session::create("s1".into(), request(3, KernelKind::Velocity), &ServiceConfig::default()).unwrap();
        assert_eq!(s.phase(), Phase::AwaitingCorrection);
        assert!(s.trace().is_empty());
        let view = s.view().unwrap();
        assert_eq!(view.normalized_cost, Some(1.0));
        assert_eq!(view.planned.len(), 41);
    }

    #[test]
    fn failed_commit_leaves_state_alone() {
        let mut s = Session::create("s1".into(), request(3, KernelKind::Identity), &ServiceConfig::default()).unwrap();
        let before = s.view().unwrap().planned;
        let err = s.commit(CorrectionRequest { t: 0, q: vec![0.0, 0.0] }).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("t"));
        assert_eq!(s.phase(), Phase::AwaitingCorrection);
        assert_eq!(s.planned(), &before);
        assert!(s.trace().is_empty());
    }

    #[test]
    fn rbf_needs_sigma() {
        let mut req = request(3, KernelKind::Identity);
        req.kernel = KernelSpec {
            variant: KernelVariant::Rbf,
            sigma: None,
        };
        let err = Session::create("s1".into(), req, &ServiceConfig::default()).unwrap_err();
        assert_eq!((err.status, err.field.as_deref()), (400, Some("kernel")));
    }

    #[test]
    fn done_rejects_previews_and_commits() {
        let mut s = Session::create("s1".into(), request(3, KernelKind::Identity), &ServiceConfig::default()).unwrap();
        s.finish();
        s.finish();
        assert_eq!(s.phase(), Phase::Done);
        let q = s.planned().waypoint(5).to_vec();
        let p = s.preview(PreviewRequest {
            t: 5,
            q: q.clone(),
            kernel: None,
        });
        assert_eq!(p.unwrap_err().status, 409);
        assert_eq!(s.commit(CorrectionRequest { t: 5, q }).unwrap_err().status, 409);
    }
}
