use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
            },
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }
}

impl From<hyperclass::Error> for ApiError {
    fn from(e: hyperclass::Error) -> Self {
        use hyperclass::Error as E;
        let message = e.to_string();
        match e {
            E::UnknownSession(_) => Self::not_found("unknown_session", message),
            E::UnknownItem(_) => Self::not_found("unknown_item", message),
            E::DimensionMismatch { .. } => Self::new(StatusCode::BAD_REQUEST, "dimension_mismatch", message),
            E::InvalidConfig(_) | E::Infeasible(_) | E::Json(_) => {
                Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
            }
            E::Empty(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "no_positives", message),
            E::Numerical(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "numerical_failure", message),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
