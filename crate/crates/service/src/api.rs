use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::header::{CONTENT_DISPOSITION, CONTENT_TYPE};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use ringforge_dataset::sketch_ring;
use ringforge_geometry::{export_mesh, extrude_ring, generate_ring, Image, MeshFormat, RingSpec};
use ringforge_render::TUBE_SAMPLES;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::state::{valid_checkpoint_name, Metrics};
use crate::store::{MESH_FILE, RENDER_FILE, SKETCH_FILE};
use crate::{AppState, RingRecord, ServiceError};

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/metrics", get(metrics))
        .route("/rings", post(create_ring).get(list_rings))
        .route("/rings/{id}", get(show_ring).delete(delete_ring))
        .route("/rings/{id}/sketch.png", get(sketch_png))
        .route("/rings/{id}/render", post(render_ring))
        .route("/rings/{id}/render.png", get(render_png))
        .route("/rings/{id}/mesh.stl", get(mesh_stl))
        .layer(cors(state.config().cors_origin.as_deref()))
        .with_state(state)
}

fn cors(origin: Option<&str>) -> CorsLayer {
    let allow = match origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(o) => AllowOrigin::exact(o),
        None => AllowOrigin::any(),
    };
    CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST, Method::DELETE])
        .allow_headers([CONTENT_TYPE])
}

#[derive(Debug, Serialize)]
struct FieldError {
    field: String,
    message: String,
}

#[derive(Debug)]
enum ApiError {
    NotFound(String),
    BadRequest(String),
    Invalid(Vec<FieldError>),
    Conflict(String),
    Unavailable(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "error": m })),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": m })),
            ApiError::Invalid(errors) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": "invalid ring spec", "errors": errors }),
            ),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, json!({ "error": m })),
            ApiError::Unavailable(m) => (StatusCode::SERVICE_UNAVAILABLE, json!({ "error": m })),
            ApiError::Internal(m) => {
                tracing::error!(error = %m, "request failed");
                (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": m }))
            }
        };
        (status, Json(body)).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::UnknownRing(id) => ApiError::NotFound(format!("no ring with id {id}")),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs CPU or disk bound work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("worker task failed: {e}")))?
}

#[derive(Debug, Serialize)]
struct RingView {
    id: String,
    spec: RingSpec,
    created_at: DateTime<Utc>,
    sketch_url: String,
    mesh_url: String,
    render_url: Option<String>,
    render_checkpoint: Option<String>,
}

impl From<&RingRecord> for RingView {
    fn from(r: &RingRecord) -> Self {
        RingView {
            id: r.id.clone(),
            spec: r.spec.clone(),
            created_at: r.created_at,
            sketch_url: format!("/rings/{}/sketch.png", r.id),
            mesh_url: format!("/rings/{}/mesh.stl", r.id),
            render_url: r.files.render.as_ref().map(|_| format!("/rings/{}/render.png", r.id)),
            render_checkpoint: r.files.render_checkpoint.clone(),
        }
    }
}

async fn health(State(state): State<Shared>) -> Response {
    let loaded = state.default_checkpoint();
    let status = if loaded.is_some() { StatusCode::OK } else { StatusCode::SERVICE_UNAVAILABLE };
    let body = json!({
        "status": if loaded.is_some() { "ok" } else { "no_checkpoint" },
        "checkpoint": loaded,
        "image_size": state.config().image_size,
        "uptime_seconds": state.uptime_seconds(),
    });
    (status, Json(body)).into_response()
}

async fn metrics(State(state): State<Shared>) -> Response {
    Json(state.snapshot()).into_response()
}

async fn list_rings(State(state): State<Shared>) -> Json<Vec<RingView>> {
    Json(state.store().list().iter().map(RingView::from).collect())
}

async fn show_ring(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<RingView>> {
    let record = state.store().get(&id).ok_or_else(|| unknown(&id))?;
    Ok(Json(RingView::from(&record)))
}

async fn delete_ring(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    blocking(move || {
        if !state.store().remove(&id)? {
            return Err(unknown(&id));
        }
        Metrics::bump(&state.metrics.rings_deleted);
        Ok(StatusCode::NO_CONTENT)
    })
    .await
}

async fn create_ring(State(state): State<Shared>, body: Bytes) -> ApiResult<(StatusCode, Json<RingView>)> {
    let (mut spec, seed) = parse_spec(&body)?;
    spec.seed = seed.unwrap_or_else(|| state.draw_seed());
    blocking(move || {
        let ring = generate_ring(&spec).map_err(|e| ApiError::Internal(e.to_string()))?;
        let sketch = sketch_ring(&ring, state.config().image_size, 1.0).map_err(|e| ApiError::Internal(e.to_string()))?;
        let png = sketch.encode_png().map_err(|e| ApiError::Internal(e.to_string()))?;
        let record = RingRecord {
            id: uuid::Uuid::new_v4().simple().to_string(),
            spec,
            created_at: Utc::now(),
            files: Default::default(),
        };
        let record = state.store().insert(record, &png)?;
        Metrics::bump(&state.metrics.rings_created);
        tracing::debug!(id = %record.id, seed = record.spec.seed, "created ring");
        Ok((StatusCode::CREATED, Json(RingView::from(&record))))
    })
    .await
}

async fn sketch_png(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    blob(state, id, SKETCH_FILE).await
}

async fn render_png(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    blob(state, id, RENDER_FILE).await
}

async fn blob(state: Shared, id: String, name: &'static str) -> ApiResult<Response> {
    let bytes = blocking(move || {
        state
            .store()
            .read_blob(&id, name)?
            .ok_or_else(|| ApiError::NotFound(format!("ring {id} has no {name} yet")))
    })
    .await?;
    Ok(([(CONTENT_TYPE, "image/png")], bytes).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RenderRequest {
    checkpoint: Option<String>,
}

#[derive(Debug, Serialize)]
struct RenderResponse {
    render_url: String,
    checkpoint: String,
}

async fn render_ring(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<RenderResponse>> {
    let request: RenderRequest = if body.iter().all(u8::is_ascii_whitespace) {
        RenderRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("malformed render request: {e}")))?
    };
    blocking(move || {
        let record = state.store().get(&id).ok_or_else(|| unknown(&id))?;
        let name = match request.checkpoint {
            Some(name) if !valid_checkpoint_name(&name) => {
                return Err(ApiError::Invalid(vec![FieldError {
                    field: "checkpoint".into(),
                    message: "must be a bare file name of letters, digits, '-', '_' or '.'".into(),
                }]))
            }
            Some(name) => name,
            None => state
                .default_checkpoint()
                .ok_or_else(|| ApiError::Unavailable("no checkpoint loaded and none requested".into()))?
                .to_string(),
        };
        let translator = state
            .translator(&name)
            .map_err(|e| ApiError::Conflict(format!("checkpoint {name} cannot be loaded: {e}")))?
            .ok_or_else(|| ApiError::NotFound(format!("no checkpoint named {name}")))?;
        let size = state.config().image_size;
        if translator.image_size() != size {
            return Err(ApiError::Conflict(format!(
                "checkpoint {name} was trained at {0}x{0} but the service generates {1}x{1} sketches",
                translator.image_size(),
                size
            )));
        }
        let png = state
            .store()
            .read_blob(&id, SKETCH_FILE)?
            .ok_or_else(|| ApiError::Internal(format!("ring {id} has no stored sketch")))?;
        let sketch = Image::decode(&png).map_err(|e| ApiError::Internal(e.to_string()))?;
        let render = translator.to_render(&sketch).map_err(|e| ApiError::Internal(e.to_string()))?;
        let bytes = render.encode_png().map_err(|e| ApiError::Internal(e.to_string()))?;
        state.store().set_render(&record.id, &name, &bytes)?;
        Metrics::bump(&state.metrics.renders);
        Ok(Json(RenderResponse {
            render_url: format!("/rings/{id}/render.png"),
            checkpoint: name,
        }))
    })
    .await
}

/// Serves the stored STL, generating it on first request.
async fn mesh_stl(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let file_name = format!("attachment; filename=\"ring-{id}.stl\"");
    let bytes = blocking(move || {
        if let Some(bytes) = state.store().read_blob(&id, MESH_FILE)? {
            Metrics::bump(&state.metrics.mesh_cache_hits);
            return Ok(bytes);
        }
        // Concurrent first requests wait here rather than all extruding.
        let _guard = state.mesh_lock.lock().unwrap();
        if let Some(bytes) = state.store().read_blob(&id, MESH_FILE)? {
            Metrics::bump(&state.metrics.mesh_cache_hits);
            return Ok(bytes);
        }
        let record = state.store().get(&id).ok_or_else(|| unknown(&id))?;
        let bytes = mesh_bytes(&record.spec).map_err(|e| ApiError::Internal(e.to_string()))?;
        state.store().set_mesh(&id, &bytes)?;
        Metrics::bump(&state.metrics.mesh_generations);
        Ok(bytes)
    })
    .await?;
    let disposition = HeaderValue::from_str(&file_name).unwrap_or(HeaderValue::from_static("attachment"));
    Ok((
        [(CONTENT_TYPE, HeaderValue::from_static("model/stl")), (CONTENT_DISPOSITION, disposition)],
        bytes,
    )
        .into_response())
}

/// Binary STL of the swept tubes of `spec`, at the same tessellation the
/// renderer uses.
pub(crate) fn mesh_bytes(spec: &RingSpec) -> ringforge_geometry::Result<Vec<u8>> {
    let ring = generate_ring(spec)?;
    let mesh = extrude_ring(&ring, TUBE_SAMPLES.0, TUBE_SAMPLES.1)?.mesh;
    export_mesh(&mesh, MeshFormat::StlBinary)
}

fn unknown(id: &str) -> ApiError {
    ApiError::NotFound(format!("no ring with id {id}"))
}

/// Reads a partial spec: absent fields take their defaults and the seed is
/// returned separately, `None` when absent or null. Every type error and
/// bound violation is reported, each against its field.
fn parse_spec(body: &[u8]) -> ApiResult<(RingSpec, Option<u64>)> {
    let value: Value = if body.iter().all(u8::is_ascii_whitespace) {
        Value::Object(Map::new())
    } else {
        serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("malformed JSON: {e}")))?
    };
    let Value::Object(fields) = value else {
        return Err(ApiError::Invalid(vec![FieldError {
            field: "body".into(),
            message: "must be a JSON object".into(),
        }]));
    };
    let mut spec = RingSpec::default();
    let mut seed = None;
    let mut errors = Vec::new();
    for (key, v) in &fields {
        let mut fail = |message: &str| {
            errors.push(FieldError {
                field: key.clone(),
                message: message.to_string(),
            })
        };
        let count = || v.as_u64().and_then(|n| usize::try_from(n).ok());
        match key.as_str() {
            "n_strands" => match count() {
                Some(n) => spec.n_strands = n,
                None => fail("must be a non-negative integer"),
            },
            "n_control_points" => match count() {
                Some(n) => spec.n_control_points = n,
                None => fail("must be a non-negative integer"),
            },
            "ring_radius" | "tube_radius" | "height_amplitude" | "radial_amplitude" => match v.as_f64() {
                Some(x) => {
                    let slot = match key.as_str() {
                        "ring_radius" => &mut spec.ring_radius,
                        "tube_radius" => &mut spec.tube_radius,
                        "height_amplitude" => &mut spec.height_amplitude,
                        _ => &mut spec.radial_amplitude,
                    };
                    *slot = x;
                }
                None => fail("must be a number"),
            },
            "seed" if v.is_null() => {}
            "seed" => match v.as_u64() {
                Some(s) => seed = Some(s),
                None => fail("must be an integer in [0, 2^64)"),
            },
            _ => fail("unknown field"),
        }
    }
    for (field, message) in spec.violations() {
        if !errors.iter().any(|e| e.field == field) {
            errors.push(FieldError {
                field: field.to_string(),
                message,
            });
        }
    }
    if !errors.is_empty() {
        return Err(ApiError::Invalid(errors));
    }
    Ok((spec, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(body: &str) -> Vec<String> {
        match parse_spec(body.as_bytes()) {
            Err(ApiError::Invalid(errs)) => errs.into_iter().map(|e| e.field).collect(),
            other => panic!("expected field errors, got {other:?}"),
        }
    }

    #[test]
    fn partial_spec_fills_defaults() {
        let (spec, seed) = parse_spec(br#"{"n_strands": 2, "seed": 9}"#).unwrap();
        assert_eq!(spec.n_strands, 2);
        assert_eq!(seed, Some(9));
        assert_eq!(parse_spec(br#"{"seed": null}"#).unwrap().1, None);
        assert_eq!(spec.tube_radius, RingSpec::default().tube_radius);
        assert!(parse_spec(b"").is_ok());
    }

    #[test]
    fn reports_every_bad_field() {
        let fields = errors(r#"{"n_strands": 0, "tube_radius": 2.0, "n_control_points": "x", "colour": 1}"#);
        assert_eq!(fields.len(), 4, "{fields:?}");
        for f in ["n_strands", "tube_radius", "n_control_points", "colour"] {
            assert!(fields.iter().any(|g| g == f), "{f} missing from {fields:?}");
        }
        assert_eq!(errors("[1]"), ["body"]);
        assert_eq!(errors(r#"{"seed": -1}"#), ["seed"]);
    }

    #[test]
    fn malformed_json_is_a_bad_request() {
        assert!(matches!(parse_spec(b"{"), Err(ApiError::BadRequest(_))));
    }
}
