//! HTTP/JSON service under `/v1`.
//!
//! State lives in memory and is rebuilt on startup from the data directory:
//! `users.jsonl` (one account per line) and `sessions/<id>.jsonl` (one event
//! log per session). Every state change is synced to disk before the
//! response is sent.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use srta_core::emotion::{aggregate_window, EmotionTimeline, TimedSample};
use srta_core::question::session_seed;
use srta_core::scoring::{compute_result, ScoreError};
use srta_core::session::{SessionConfig, SessionError, TransitionReport};
use srta_core::{
    AnswerValue, EmotionSample, LatencyModel, LeadershipInputs, QuestionBank, ResultBundle, Session, SessionState,
    MAX_REVALIDATIONS,
};
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

use crate::event_log::{LogError, SessionLog};
use crate::qr::{self, SigningKey};
use crate::result_json::ResultDocument;

pub const ENV_ADDR: &str = "SRTA_ADDR";
pub const ENV_DATA_DIR: &str = "SRTA_DATA_DIR";
pub const ENV_KEY_FILE: &str = "SRTA_KEY_FILE";
pub const ENV_STATIC_DIR: &str = "SRTA_STATIC_DIR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const MAX_USERNAME_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

/// An error response: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            body: ErrorBody {
                code,
                message: message.into(),
            },
        }
    }

    fn invalid(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message)
    }

    fn not_found(what: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what}"))
    }

    fn storage(e: impl std::fmt::Display) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_error", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Wrapper {
            error: ErrorBody,
        }
        (self.status, Json(Wrapper { error: self.body })).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, code) = match e {
            SessionError::NotActive(_) => (StatusCode::CONFLICT, "session_not_active"),
            SessionError::Clock { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_timestamps"),
            SessionError::EmotionRange(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_emotion"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "engine_error"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<LogError> for ApiError {
    fn from(e: LogError) -> Self {
        ApiError::storage(e)
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid(e.to_string()))
}

/// Like [`parse_body`], but an empty body means `T::default()`.
fn parse_optional_body<T: DeserializeOwned + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        parse_body(body)
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn token_digest(token: &str) -> String {
    Sha256::digest(token.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// One line of `users.jsonl`. Only a digest of the bearer token is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Account {
    pub username: String,
    pub token_sha256: String,
    pub created_at: u64,
    pub education_level: u8,
    pub job_level: u8,
}

impl Account {
    pub fn leadership(&self) -> LeadershipInputs {
        LeadershipInputs {
            education_level: self.education_level,
            job_level: self.job_level,
        }
    }
}

struct LiveSession {
    session: Session,
    log: SessionLog,
}

#[derive(Default)]
struct Accounts {
    by_name: HashMap<String, Account>,
    by_token: HashMap<String, String>,
}

impl Accounts {
    fn insert(&mut self, a: Account) {
        self.by_token.insert(a.token_sha256.clone(), a.username.clone());
        self.by_name.insert(a.username.clone(), a);
    }
}

/// Everything the service needs besides its data directory.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub bank: QuestionBank,
    pub key: SigningKey,
    pub model: LatencyModel,
    pub session_config: SessionConfig,
    pub static_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>, bank: QuestionBank, key: SigningKey) -> ServiceConfig {
        ServiceConfig {
            data_dir: data_dir.into(),
            bank,
            key,
            model: LatencyModel::default(),
            session_config: SessionConfig::default(),
            static_dir: None,
        }
    }
}

struct Inner {
    config: ServiceConfig,
    accounts: RwLock<Accounts>,
    /// Serializes account creation so `users.jsonl` appends never interleave.
    account_writes: Mutex<()>,
    sessions: RwLock<HashMap<String, Arc<Mutex<LiveSession>>>>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn sessions_dir(root: &Path) -> PathBuf {
    root.join("sessions")
}

fn users_path(root: &Path) -> PathBuf {
    root.join("users.jsonl")
}

fn load_accounts(path: &Path) -> anyhow::Result<Accounts> {
    let mut accounts = Accounts::default();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(accounts),
        Err(e) => return Err(e.into()),
    };
    let mut keep = 0;
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        if !raw.ends_with('\n') {
            // Torn final write: the account was never acknowledged.
            break;
        }
        let a: Account =
            serde_json::from_str(raw.trim_end()).map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), i + 1))?;
        accounts.insert(a);
        keep += raw.len();
    }
    if keep < text.len() {
        OpenOptions::new().write(true).open(path)?.set_len(keep as u64)?;
    }
    Ok(accounts)
}

impl AppState {
    /// Opens the data directory, replaying every stored session.
    pub fn open(config: ServiceConfig) -> anyhow::Result<AppState> {
        let root = &config.data_dir;
        std::fs::create_dir_all(sessions_dir(root))?;
        let accounts = load_accounts(&users_path(root))?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(sessions_dir(root))? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            let (log, recovered) = match SessionLog::open(&path) {
                Ok(opened) => opened,
                // Crashed before the start event was committed: never acknowledged.
                Err(LogError::Empty) => {
                    std::fs::remove_file(&path)?;
                    continue;
                }
                Err(e) => anyhow::bail!("{}: {e}", path.display()),
            };
            let session = recovered.session;
            sessions.insert(
                session.session_id.clone(),
                Arc::new(Mutex::new(LiveSession { session, log })),
            );
        }
        Ok(AppState {
            inner: Arc::new(Inner {
                config,
                accounts: RwLock::new(accounts),
                account_writes: Mutex::new(()),
                sessions: RwLock::new(sessions),
            }),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    /// Current engine state of a session.
    pub async fn session_snapshot(&self, id: &str) -> Option<Session> {
        let live = self.live(id).ok()?;
        let guard = live.lock().await;
        Some(guard.session.clone())
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.inner.sessions.read().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }

    fn live(&self, id: &str) -> ApiResult<Arc<Mutex<LiveSession>>> {
        self.inner
            .sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session"))
    }

    fn caller(&self, headers: &HeaderMap) -> ApiResult<Account> {
        let unauthorized = |m: &str| ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", m);
        let value = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(|| unauthorized("missing bearer token"))?;
        let token = value
            .strip_prefix("Bearer ")
            .ok_or_else(|| unauthorized("expected `Authorization: Bearer <token>`"))?;
        let accounts = self.inner.accounts.read().unwrap();
        accounts
            .by_token
            .get(&token_digest(token.trim()))
            .and_then(|name| accounts.by_name.get(name))
            .cloned()
            .ok_or_else(|| unauthorized("unknown token"))
    }

    /// Looks up a session the caller owns and locks it.
    async fn owned(
        &self,
        headers: &HeaderMap,
        id: &str,
    ) -> ApiResult<(Account, tokio::sync::OwnedMutexGuard<LiveSession>)> {
        let caller = self.caller(headers)?;
        let guard = self.live(id)?.lock_owned().await;
        if guard.session.username != caller.username {
            return Err(ApiError::new(
                StatusCode::FORBIDDEN,
                "forbidden",
                "session belongs to another user",
            ));
        }
        Ok((caller, guard))
    }

    fn result_of(&self, account: &Account, session: &Session) -> ApiResult<ResultBundle> {
        if session.state != SessionState::Completed {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "session_not_completed",
                format!("session is {:?}", session.state),
            ));
        }
        compute_result(session, &account.leadership(), &self.inner.config.model).map_err(|e| match e {
            ScoreError::NotCompleted(_) => ApiError::new(StatusCode::CONFLICT, "session_not_completed", e.to_string()),
            other => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "unscorable_session",
                other.to_string(),
            ),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateUser {
    username: String,
    education_level: u8,
    job_level: u8,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UserCreated {
    pub username: String,
    pub token: String,
    pub created_at: u64,
    pub education_level: u8,
    pub job_level: u8,
}

async fn create_user(State(app): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<UserCreated>)> {
    let req: CreateUser = parse_body(&body)?;
    let username = req.username.trim().to_string();
    if username.is_empty() || username.len() > MAX_USERNAME_LEN || username.chars().any(char::is_control) {
        return Err(ApiError::invalid(format!(
            "username must be 1..={MAX_USERNAME_LEN} printable characters"
        )));
    }
    LeadershipInputs::new(req.education_level, req.job_level).map_err(|e| ApiError::invalid(e.to_string()))?;

    let _writer = app.inner.account_writes.lock().await;
    if app.inner.accounts.read().unwrap().by_name.contains_key(&username) {
        return Err(ApiError::new(StatusCode::CONFLICT, "user_exists", "username is taken"));
    }
    let token = uuid::Uuid::new_v4().simple().to_string();
    let account = Account {
        username: username.clone(),
        token_sha256: token_digest(&token),
        created_at: now_ms(),
        education_level: req.education_level,
        job_level: req.job_level,
    };
    let mut line = serde_json::to_string(&account).expect("account serializes");
    line.push('\n');
    let path = users_path(&app.inner.config.data_dir);
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(ApiError::storage)?;
    file.write_all(line.as_bytes()).map_err(ApiError::storage)?;
    file.sync_data().map_err(ApiError::storage)?;
    app.inner.accounts.write().unwrap().insert(account.clone());

    Ok((
        StatusCode::CREATED,
        Json(UserCreated {
            username,
            token,
            created_at: account.created_at,
            education_level: account.education_level,
            job_level: account.job_level,
        }),
    ))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StartSession {
    /// Selection nonce; random when absent.
    nonce: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub username: String,
    pub state: SessionState,
    pub answered: usize,
    pub total_questions: usize,
    pub revalidations: u32,
    pub remaining_revalidations: u32,
}

impl SessionView {
    fn of(s: &Session) -> SessionView {
        SessionView {
            session_id: s.session_id.clone(),
            username: s.username.clone(),
            state: s.state,
            answered: s.records.len(),
            total_questions: s.questionnaire.len(),
            revalidations: s.revalidations,
            remaining_revalidations: MAX_REVALIDATIONS.saturating_sub(s.revalidations),
        }
    }
}

async fn start_session(
    State(app): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let caller = app.caller(&headers)?;
    let req: StartSession = parse_optional_body(&body)?;
    let nonce = req.nonce.unwrap_or_else(rand::random);
    let id = uuid::Uuid::new_v4().simple().to_string();
    let cfg = &app.inner.config;
    let (session, start) = Session::start(
        id.clone(),
        caller.username.clone(),
        &cfg.bank,
        session_seed(&caller.username, nonce),
        cfg.session_config,
    )?;
    let path = sessions_dir(&cfg.data_dir).join(format!("{id}.jsonl"));
    let log = SessionLog::create(&path, &start)?;
    let view = SessionView::of(&session);
    app.inner
        .sessions
        .write()
        .unwrap()
        .insert(id, Arc::new(Mutex::new(LiveSession { session, log })));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(
    State(app): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<SessionView>> {
    let (_, live) = app.owned(&headers, &id).await?;
    Ok(Json(SessionView::of(&live.session)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionBody {
    pub id: String,
    pub text: String,
    #[serde(rename = "type")]
    pub qtype: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionView {
    pub session_id: String,
    pub question: QuestionBody,
    /// 1-based position of this question.
    pub position: usize,
    pub total_questions: usize,
    pub revalidations: u32,
    pub remaining_revalidations: u32,
}

fn question_view(s: &Session) -> ApiResult<QuestionView> {
    let q = s.current_question()?;
    Ok(QuestionView {
        session_id: s.session_id.clone(),
        question: QuestionBody {
            id: q.id.clone(),
            text: q.text.clone(),
            qtype: q.qtype.to_string(),
        },
        position: s.cursor + 1,
        total_questions: s.questionnaire.len(),
        revalidations: s.revalidations,
        remaining_revalidations: MAX_REVALIDATIONS.saturating_sub(s.revalidations),
    })
}

async fn get_question(
    State(app): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<QuestionView>> {
    let (_, live) = app.owned(&headers, &id).await?;
    Ok(Json(question_view(&live.session)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitAnswer {
    /// When present, must name the current question.
    question_id: Option<String>,
    answer: AnswerValue,
    displayed_at: u64,
    answered_at: u64,
    emotion: Option<EmotionSample>,
    timeline: Option<Vec<TimedSample>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkipRequest {
    question_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionView {
    pub report: TransitionReport,
    /// The next question while the session is still active.
    pub next: Option<QuestionView>,
}

fn check_current(s: &Session, expected: Option<&str>) -> ApiResult<()> {
    let Some(expected) = expected else {
        return Ok(());
    };
    let current = s.current_question()?;
    if current.id != expected {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "stale_question",
            format!("current question is `{}`, not `{expected}`", current.id),
        ));
    }
    Ok(())
}

fn emotion_of(req: &SubmitAnswer) -> ApiResult<EmotionSample> {
    let bad = |m: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_emotion", m);
    match (&req.emotion, &req.timeline) {
        (Some(e), None) => {
            e.validate().map_err(|e| bad(e.to_string()))?;
            Ok(*e)
        }
        (None, Some(samples)) => {
            let timeline = EmotionTimeline::new(samples.clone()).map_err(|e| bad(e.to_string()))?;
            aggregate_window(timeline.samples()).map_err(|e| bad(e.to_string()))
        }
        _ => Err(bad("send exactly one of `emotion` or `timeline`".into())),
    }
}

fn transition_view(s: &Session, report: TransitionReport) -> ApiResult<TransitionView> {
    let next = match s.state {
        SessionState::Active => Some(question_view(s)?),
        _ => None,
    };
    Ok(TransitionView { report, next })
}

async fn submit_answer(
    State(app): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<TransitionView>> {
    let req: SubmitAnswer = parse_body(&body)?;
    let (_, mut live) = app.owned(&headers, &id).await?;
    if !live.session.is_active() {
        return Err(SessionError::NotActive(live.session.state).into());
    }
    check_current(&live.session, req.question_id.as_deref())?;
    let emotion = emotion_of(&req)?;
    let mut next = live.session.clone();
    let t = next.submit_answer(
        &app.inner.config.bank,
        req.answer,
        req.displayed_at,
        req.answered_at,
        emotion,
    )?;
    live.log.append(&t.events)?;
    live.session = next;
    Ok(Json(transition_view(&live.session, t.report)?))
}

async fn skip_question(
    State(app): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<TransitionView>> {
    let req: SkipRequest = parse_optional_body(&body)?;
    let (_, mut live) = app.owned(&headers, &id).await?;
    if !live.session.is_active() {
        return Err(SessionError::NotActive(live.session.state).into());
    }
    check_current(&live.session, req.question_id.as_deref())?;
    let mut next = live.session.clone();
    let t = next.skip_question(&app.inner.config.bank)?;
    live.log.append(&t.events)?;
    live.session = next;
    Ok(Json(transition_view(&live.session, t.report)?))
}

async fn get_result(
    State(app): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<ResultDocument>> {
    let (account, live) = app.owned(&headers, &id).await?;
    let result = app.result_of(&account, &live.session)?;
    Ok(Json(ResultDocument::from(&result)))
}

async fn get_qr(State(app): State<AppState>, headers: HeaderMap, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let (account, live) = app.owned(&headers, &id).await?;
    let result = app.result_of(&account, &live.session)?;
    let text = qr::sign(&app.inner.config.key, &result, now_ms());
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifiedPayload {
    pub key_id: String,
    pub issued_at: u64,
    pub result: ResultDocument,
}

async fn verify_qr(State(app): State<AppState>, body: Bytes) -> ApiResult<Json<VerifiedPayload>> {
    let text = std::str::from_utf8(&body).map_err(|_| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_payload",
            "payload is not UTF-8",
        )
    })?;
    let payload = qr::verify(&app.inner.config.key, text.trim())
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_payload", e.to_string()))?;
    Ok(Json(VerifiedPayload {
        key_id: payload.key_id,
        issued_at: payload.issued_at,
        result: ResultDocument::from(&payload.result),
    }))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn unknown_route() -> ApiError {
    ApiError::not_found("route")
}

pub fn router(app: AppState) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/users", post(create_user))
        .route("/sessions", post(start_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/question", get(get_question))
        .route("/sessions/{id}/answer", post(submit_answer))
        .route("/sessions/{id}/skip", post(skip_question))
        .route("/sessions/{id}/result", get(get_result))
        .route("/sessions/{id}/qr", get(get_qr))
        .route("/qr/verify", post(verify_qr))
        .fallback(unknown_route);
    let static_dir = app.inner.config.static_dir.clone();
    let router = Router::new().nest("/v1", api).with_state(app);
    match static_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    }
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, app: AppState) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
