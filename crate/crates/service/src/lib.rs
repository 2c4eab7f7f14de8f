//! HTTP sessions for teaching a trajectory cost function with live corrections.
//!
//! A session owns one environment, one learner and its trace. The client
//! previews how a dragged waypoint would deform the current plan under any
//! kernel, then commits the correction, which runs one learning iteration
//! with the session's own kernel.
//!
//! | Route | |
//! |---|---|
//! | `POST /sessions` | `{seed \| env, kernel, beta, types?, instances?}` |
//! | `GET /sessions/{id}` | current plan, weights and phase |
//! | `POST /sessions/{id}/preview` | `{t, q, kernel?}`, never changes the session |
//! | `POST /sessions/{id}/corrections` | `{t, q}`, one learning iteration |
//! | `GET /sessions/{id}/trace` | trace as JSON lines |
//! | `POST /sessions/{id}/finish` | idempotent; writes the trace when a trace directory is configured |
//! | `GET /sessions/{id}/log`, `GET /log` | state-changing requests, replayable |
//! | `GET /kernels` | variants and sigma presets |
//!
//! Errors are `{"code", "message", "field"?}` with status 400, 404, 409 or 422.
//!
//! Requests to one session are serialized by a read-write lock: previews
//! share it, commits and finish take it exclusively.

pub mod app;
pub mod config;
pub mod error;
pub mod replay;
pub mod session;

pub use app::{router, AppState, SIGMA_PRESETS};
pub use config::{GenerationConfig, ServiceConfig};
pub use error::ApiError;
pub use replay::{replay, send, LoggedRequest};
pub use session::{Phase, Session};
