use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde::Serialize;

/// Error body returned by every endpoint: `{"code", "message", "field"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status: status.as_u16(),
            code,
            message: message.into(),
            field: None,
        }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id:?}")).with_field("id")
    }

    pub fn phase(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "phase_violation", message)
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

impl From<corrlearn::Error> for ApiError {
    fn from(e: corrlearn::Error) -> Self {
        use corrlearn::Error as E;
        let message = e.to_string();
        match e {
            E::EndpointCorrection { .. } => Self::bad_request("endpoint_correction", message).with_field("t"),
            E::Mismatch {
                what: "correction dimension",
                ..
            } => Self::bad_request("dimension_mismatch", message).with_field("q"),
            E::NonFinite("correction") => Self::bad_request("non_finite", message).with_field("q"),
            E::InvalidSigma(_) | E::MissingSigma(_) | E::UnexpectedSigma(_) | E::NotPositiveDefinite { .. } => {
                Self::bad_request("invalid_kernel", message).with_field("kernel")
            }
            E::InvalidParameter { name, .. } => Self::bad_request("invalid_parameter", message).with_field(name),
            E::GenerationExhausted { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "generation_exhausted", message).with_field("seed")
            }
            E::PlannerDiverged { .. } => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "planner_diverged", message),
            _ => Self::bad_request("invalid_request", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        crate::app::json_response(self.status(), &self)
    }
}
