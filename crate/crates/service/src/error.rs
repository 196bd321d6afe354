use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde_json::json;
use wxfuse_core::Error;

/// An error in the response envelope, with the HTTP status it maps to.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "E_NOT_FOUND", message)
    }

    pub fn busy(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::CONFLICT, "E_LOCKED", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "E_MALFORMED", message)
    }

    pub fn body(&self) -> serde_json::Value {
        json!({ "code": self.code, "message": self.message })
    }
}

pub fn status_for(code: &str) -> StatusCode {
    match code {
        "E_UNKNOWN_SCOPE" => StatusCode::NOT_FOUND,
        "E_EXISTS" | "E_LOCKED" => StatusCode::CONFLICT,
        "E_NETWORK" => StatusCode::SERVICE_UNAVAILABLE,
        "E_DISK" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = e.code();
        ApiError::new(status_for(code), code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "ok": false, "error": self.body() });
        (self.status, axum::Json(body)).into_response()
    }
}
