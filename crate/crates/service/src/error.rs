use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use scm_core::{ScmError, SnapshotError};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub detail: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, error: &'static str, detail: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { error, detail: detail.into() } }
    }

    pub fn bad_request(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_argument", detail)
    }

    pub fn busy() -> Self {
        Self::new(StatusCode::CONFLICT, "busy", "a sleep cycle is running")
    }

    pub fn internal(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", detail)
    }
}

impl From<ScmError> for ApiError {
    fn from(e: ScmError) -> Self {
        let detail = e.to_string();
        let (status, kind) = match &e {
            ScmError::InvalidArgument(_) => (StatusCode::BAD_REQUEST, "invalid_argument"),
            ScmError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ScmError::PermissionDenied(_) => (StatusCode::FORBIDDEN, "permission_denied"),
            ScmError::Busy(_) => (StatusCode::CONFLICT, "busy"),
            ScmError::Snapshot(SnapshotError::Missing(_)) => (StatusCode::NOT_FOUND, "not_found"),
            ScmError::Snapshot(SnapshotError::UnsupportedVersion { .. }) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "unsupported_snapshot")
            }
            ScmError::Snapshot(SnapshotError::Malformed(_) | SnapshotError::Integrity(_)) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "corrupt_snapshot")
            }
            ScmError::Snapshot(SnapshotError::Io(_)) | ScmError::Io(_) | ScmError::Config(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        ApiError::new(status, kind, detail)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
