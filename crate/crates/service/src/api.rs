//! HTTP routes. Bodies are JSON except training-set uploads and CSV
//! downloads; errors are `{code, message}`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use textscale_core::eval::{discrepancies, pearson, shared_scores, spearman, Discrepancy};
use textscale_core::ScoreTable;

use crate::app::{App, CorpusUpload, Edit, JobRequest};
use crate::error::ApiError;
use crate::store::{CorpusEntry, JobRecord, JobState, TrainingSetEntry};

type ApiResult<T> = Result<T, ApiError>;

pub fn router(app: Arc<App>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/corpora", get(list_corpora).post(create_corpus))
        .route("/corpora/{id}", get(get_corpus))
        .route("/training-sets", get(list_training_sets).post(create_training_set))
        .route("/training-sets/{id}", get(get_training_set))
        .route("/training-sets/{id}/clone", post(clone_training_set))
        .route("/jobs", get(list_jobs).post(submit_job))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/scores", get(job_scores))
        .route("/eval/corr", get(eval_corr))
        .route("/eval/discrepancies", get(eval_discrepancies))
        .with_state(app)
}

/// Runs blocking store and engine work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

fn json_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok"}))
}

// -- corpora ------------------------------------------------------------------

async fn list_corpora(State(app): State<Arc<App>>) -> Json<Vec<CorpusEntry>> {
    Json(app.store().read(|m| m.corpora.values().cloned().collect()))
}

async fn create_corpus(State(app): State<Arc<App>>, body: Bytes) -> ApiResult<(StatusCode, Json<CorpusEntry>)> {
    let upload: CorpusUpload = json_body(&body)?;
    let entry = blocking(move || app.add_corpus(upload)).await?;
    Ok((StatusCode::CREATED, Json(entry)))
}

async fn get_corpus(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult<Json<CorpusEntry>> {
    app.corpus(&id).map(Json)
}

// -- training sets ------------------------------------------------------------

async fn list_training_sets(State(app): State<Arc<App>>) -> Json<Vec<TrainingSetEntry>> {
    Json(app.store().read(|m| m.training_sets.values().cloned().collect()))
}

async fn create_training_set(
    State(app): State<Arc<App>>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<TrainingSetEntry>)> {
    let entry = blocking(move || app.add_training_set(&body, None)).await?;
    Ok((StatusCode::CREATED, Json(entry)))
}

async fn get_training_set(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult<Response> {
    let csv = blocking(move || app.training_set_csv(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "text/csv")], csv).into_response())
}

#[derive(Deserialize)]
struct CloneRequest {
    edits: Vec<Edit>,
}

async fn clone_training_set(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<TrainingSetEntry>)> {
    let req: CloneRequest = json_body(&body)?;
    let entry = blocking(move || app.clone_training_set(&id, &req.edits)).await?;
    Ok((StatusCode::CREATED, Json(entry)))
}

// -- jobs ---------------------------------------------------------------------

#[derive(Serialize)]
struct Submitted {
    id: String,
    state: JobState,
}

async fn submit_job(State(app): State<Arc<App>>, body: Bytes) -> ApiResult<(StatusCode, Json<Submitted>)> {
    let req: JobRequest = json_body(&body)?;
    let job = blocking(move || app.submit_job(req)).await?;
    Ok((
        StatusCode::ACCEPTED,
        Json(Submitted {
            id: job.id,
            state: job.state,
        }),
    ))
}

async fn list_jobs(State(app): State<Arc<App>>) -> Json<Vec<JobRecord>> {
    Json(app.store().read(|m| m.jobs.values().cloned().collect()))
}

async fn get_job(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult<Json<JobRecord>> {
    app.job(&id).map(Json)
}

#[derive(Deserialize)]
struct ScoresQuery {
    format: Option<String>,
}

/// A score row flattened for clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRowView {
    pub entity: String,
    pub year: i32,
    pub score: f64,
    pub std_error: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresView {
    pub job_id: String,
    pub score_table_id: String,
    pub hash: String,
    pub rows: Vec<ScoreRowView>,
}

async fn job_scores(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    Query(q): Query<ScoresQuery>,
) -> ApiResult<Response> {
    let job_id = id.clone();
    let (entry, table) = blocking(move || app.job_scores(&id)).await?;
    match q.format.as_deref() {
        Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv")], table.to_csv_string()).into_response()),
        None | Some("json") => {
            let rows = table
                .rows()
                .iter()
                .map(|r| ScoreRowView {
                    entity: r.key.entity.clone(),
                    year: r.key.year,
                    score: r.score,
                    std_error: r.std_error,
                    ci_low: r.ci.map(|c| c.0),
                    ci_high: r.ci.map(|c| c.1),
                })
                .collect();
            Ok(Json(ScoresView {
                job_id,
                score_table_id: entry.id,
                hash: entry.csv.hash,
                rows,
            })
            .into_response())
        }
        Some(other) => Err(ApiError::bad_request(format!("unknown format {other:?}"))),
    }
}

// -- evaluation ---------------------------------------------------------------

#[derive(Deserialize)]
struct PairQuery {
    job_a: String,
    job_b: String,
    top: Option<usize>,
}

async fn job_pair(app: Arc<App>, q: &PairQuery) -> ApiResult<(ScoreTable, ScoreTable)> {
    let (a, b) = (q.job_a.clone(), q.job_b.clone());
    blocking(move || Ok((app.job_scores(&a)?.1, app.job_scores(&b)?.1))).await
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrView {
    pub job_a: String,
    pub job_b: String,
    pub n_shared: usize,
    pub pearson: f64,
    pub spearman: f64,
}

async fn eval_corr(State(app): State<Arc<App>>, Query(q): Query<PairQuery>) -> ApiResult<Json<CorrView>> {
    let (a, b) = job_pair(app, &q).await?;
    let unprocessable = |e: textscale_core::Error| ApiError::unprocessable(e.to_string());
    Ok(Json(CorrView {
        n_shared: shared_scores(&a, &b).len(),
        pearson: pearson(&a, &b).map_err(unprocessable)?,
        spearman: spearman(&a, &b).map_err(unprocessable)?,
        job_a: q.job_a,
        job_b: q.job_b,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyView {
    pub job_a: String,
    pub job_b: String,
    pub n_shared: usize,
    pub positive: Vec<Discrepancy>,
    pub negative: Vec<Discrepancy>,
}

async fn eval_discrepancies(
    State(app): State<Arc<App>>,
    Query(q): Query<PairQuery>,
) -> ApiResult<Json<DiscrepancyView>> {
    let (a, b) = job_pair(app, &q).await?;
    let d = discrepancies(&a, &b, q.top.unwrap_or(10));
    Ok(Json(DiscrepancyView {
        n_shared: shared_scores(&a, &b).len(),
        positive: d.positive,
        negative: d.negative,
        job_a: q.job_a,
        job_b: q.job_b,
    }))
}
