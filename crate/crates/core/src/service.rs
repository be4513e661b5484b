//! HTTP service backing the annotation GUI.
//!
//! Annotators get a seeded, reproducible sample of sentences and submit
//! labels one sentence at a time. Labels must follow word order: a new label
//! may not start before the end of the last label committed for the same
//! sentence. Accepted labels are appended to the ground-truth JSONL file;
//! completed sentences (including "no gesture" submissions) are logged to a
//! sibling `.progress.jsonl` file so a restarted service resumes sessions.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::labeler::baseline::sentence_seed;
use crate::model::{GestureKind, LabelSpan, ReferenceSet, TokenizedSentence};

pub const DEFAULT_SESSION_SIZE: usize = 30;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub refs: ReferenceSet,
    pub corpus: Vec<TokenizedSentence>,
    pub gt_out: PathBuf,
    pub session_size: usize,
    pub seed: u64,
    pub w_max: usize,
    /// Directory holding the built annotation UI, served at `/`.
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
pub struct NewSession {
    pub annotator_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceView {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub annotator_id: String,
    pub w_max: usize,
    pub sentences: Vec<SentenceView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmittedLabel {
    pub gesture_id: String,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Submission {
    pub sentence_id: String,
    pub labels: Vec<SubmittedLabel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextView {
    pub done: bool,
    pub sentence: Option<SentenceView>,
    /// Labels already committed for `sentence`.
    pub committed: Vec<SubmittedLabel>,
    pub completed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Progress {
    pub annotator_id: String,
    pub completed: usize,
    pub total: usize,
}

#[derive(Serialize, Deserialize)]
struct ProgressLine {
    annotator_id: String,
    sentence_id: String,
}

struct Session {
    annotator_id: String,
    sentences: Vec<usize>,
}

struct Store {
    sessions: HashMap<String, Session>,
    committed: HashMap<(String, String), Vec<SubmittedLabel>>,
    completed: HashSet<(String, String)>,
    gt: File,
    progress: File,
}

struct App {
    cfg: ServiceConfig,
    index: HashMap<String, usize>,
    store: Mutex<Store>,
}

pub fn progress_path(gt_out: &Path) -> PathBuf {
    let mut name = gt_out.file_name().unwrap_or_default().to_os_string();
    name.push(".progress.jsonl");
    gt_out.with_file_name(name)
}

fn open_append(path: &Path) -> Result<File> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))
}

impl App {
    fn new(cfg: ServiceConfig) -> Result<Self> {
        if cfg.session_size == 0 {
            return Err(Error::invalid("session size must be at least 1"));
        }
        let index = cfg
            .corpus
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), i))
            .collect();
        let progress_file = progress_path(&cfg.gt_out);

        let mut committed: HashMap<(String, String), Vec<SubmittedLabel>> = HashMap::new();
        let mut completed = HashSet::new();
        if cfg.gt_out.exists() {
            for l in crate::io::load_labels(&cfg.gt_out)? {
                let key = (l.annotator_id.clone().unwrap_or_default(), l.sentence_id.clone());
                committed.entry(key).or_default().push(SubmittedLabel {
                    gesture_id: l.gesture_id,
                    start: l.start,
                    len: l.len,
                });
            }
        }
        if progress_file.exists() {
            let text = std::fs::read_to_string(&progress_file).map_err(|e| Error::io(&progress_file, e))?;
            for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let p: ProgressLine = serde_json::from_str(line).map_err(|e| Error::Schema {
                    path: progress_file.clone(),
                    line: n + 1,
                    message: e.to_string(),
                })?;
                completed.insert((p.annotator_id, p.sentence_id));
            }
        }
        let store = Store {
            sessions: HashMap::new(),
            committed,
            completed,
            gt: open_append(&cfg.gt_out)?,
            progress: open_append(&progress_file)?,
        };
        Ok(Self {
            cfg,
            index,
            store: Mutex::new(store),
        })
    }

    fn view(&self, i: usize) -> SentenceView {
        let s = &self.cfg.corpus[i];
        SentenceView {
            id: s.id.clone(),
            text: s.text.clone(),
            tokens: s.tokens.clone(),
        }
    }

    fn session_for(&self, annotator_id: &str) -> (String, Session) {
        let seed = sentence_seed(self.cfg.seed, annotator_id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.cfg.session_size.min(self.cfg.corpus.len());
        let sentences = rand::seq::index::sample(&mut rng, self.cfg.corpus.len(), k).into_vec();
        (
            format!("{seed:016x}"),
            Session {
                annotator_id: annotator_id.to_owned(),
                sentences,
            },
        )
    }

    fn check(&self, store: &Store, session: &Session, sub: &Submission) -> Result<(), String> {
        let Some(&si) = self.index.get(&sub.sentence_id) else {
            return Err(format!("unknown sentence {:?}", sub.sentence_id));
        };
        if !session.sentences.contains(&si) {
            return Err(format!("sentence {:?} is not part of this session", sub.sentence_id));
        }
        let n = self.cfg.corpus[si].len();
        let mut cursor = store
            .committed
            .get(&(session.annotator_id.clone(), sub.sentence_id.clone()))
            .and_then(|ls| ls.iter().map(|l| l.start + l.len).max())
            .unwrap_or(0);
        for l in &sub.labels {
            if !self.cfg.refs.contains(&l.gesture_id) {
                return Err(format!("unknown gesture {:?}", l.gesture_id));
            }
            if l.len == 0 || l.len > self.cfg.w_max {
                return Err(format!("label length {} outside [1, {}]", l.len, self.cfg.w_max));
            }
            if l.start + l.len > n {
                return Err(format!(
                    "span [{}, {}) exceeds the sentence's {n} tokens",
                    l.start,
                    l.start + l.len
                ));
            }
            if l.start < cursor {
                return Err(format!(
                    "labels must be given sequentially: start {} is before token {cursor}",
                    l.start
                ));
            }
            cursor = l.start + l.len;
        }
        Ok(())
    }
}

type Shared = Arc<App>;

fn reject(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({ "error": msg.into() }))).into_response()
}

async fn gestures(State(app): State<Shared>) -> Json<serde_json::Value> {
    let list: Vec<_> = app
        .cfg
        .refs
        .gestures()
        .iter()
        .map(|g| {
            json!({
                "id": g.id,
                "name": g.name,
                "description": g.description,
                "kind": match g.kind { GestureKind::Symbolic => "symbolic", GestureKind::Deictic => "deictic" },
            })
        })
        .collect();
    Json(json!(list))
}

async fn create_session(State(app): State<Shared>, Json(req): Json<NewSession>) -> Response {
    if req.annotator_id.trim().is_empty() {
        return reject(StatusCode::UNPROCESSABLE_ENTITY, "annotator_id must be non-empty");
    }
    let (id, session) = app.session_for(&req.annotator_id);
    let view = SessionView {
        session_id: id.clone(),
        annotator_id: req.annotator_id.clone(),
        w_max: app.cfg.w_max,
        sentences: session.sentences.iter().map(|&i| app.view(i)).collect(),
    };
    app.store.lock().unwrap().sessions.entry(id).or_insert(session);
    Json(view).into_response()
}

async fn next(State(app): State<Shared>, UrlPath(id): UrlPath<String>) -> Response {
    let store = app.store.lock().unwrap();
    let Some(session) = store.sessions.get(&id) else {
        return reject(StatusCode::NOT_FOUND, format!("no session {id:?}"));
    };
    let key = |i: usize| (session.annotator_id.clone(), app.cfg.corpus[i].id.clone());
    let total = session.sentences.len();
    let completed = session
        .sentences
        .iter()
        .filter(|&&i| store.completed.contains(&key(i)))
        .count();
    let pending = session
        .sentences
        .iter()
        .copied()
        .find(|&i| !store.completed.contains(&key(i)));
    let view = NextView {
        done: pending.is_none(),
        sentence: pending.map(|i| app.view(i)),
        committed: pending
            .and_then(|i| store.committed.get(&key(i)).cloned())
            .unwrap_or_default(),
        completed,
        total,
    };
    Json(view).into_response()
}

async fn submit(
    State(app): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Json(sub): Json<Submission>,
) -> Response {
    let mut store = app.store.lock().unwrap();
    let Some(session) = store.sessions.get(&id) else {
        return reject(StatusCode::NOT_FOUND, format!("no session {id:?}"));
    };
    if let Err(msg) = app.check(&store, session, &sub) {
        return reject(StatusCode::UNPROCESSABLE_ENTITY, msg);
    }
    let annotator = session.annotator_id.clone();
    let total = session.sentences.len();
    let members: Vec<String> = session
        .sentences
        .iter()
        .map(|&i| app.cfg.corpus[i].id.clone())
        .collect();

    let spans: Vec<LabelSpan> = sub
        .labels
        .iter()
        .map(|l| LabelSpan::ground_truth(&sub.sentence_id, &l.gesture_id, l.start, l.len, Some(&annotator)))
        .collect();
    let lines = crate::io::labels_to_jsonl(&spans);
    let mut progress = serde_json::to_string(&ProgressLine {
        annotator_id: annotator.clone(),
        sentence_id: sub.sentence_id.clone(),
    })
    .expect("progress line serializes");
    progress.push('\n');

    let written = (|| -> std::io::Result<()> {
        store.gt.write_all(lines.as_bytes())?;
        store.gt.sync_data()?;
        store.progress.write_all(progress.as_bytes())?;
        store.progress.sync_data()
    })();
    if let Err(e) = written {
        return reject(StatusCode::INTERNAL_SERVER_ERROR, format!("could not persist labels: {e}"));
    }

    let key = (annotator.clone(), sub.sentence_id.clone());
    store.committed.entry(key.clone()).or_default().extend(sub.labels.iter().cloned());
    store.completed.insert(key);
    let completed = members
        .iter()
        .filter(|s| store.completed.contains(&(annotator.clone(), (*s).clone())))
        .count();
    Json(json!({ "accepted": sub.labels.len(), "completed": completed, "total": total })).into_response()
}

async fn progress(State(app): State<Shared>, UrlPath(annotator): UrlPath<String>) -> Json<Progress> {
    let (_, session) = app.session_for(&annotator);
    let store = app.store.lock().unwrap();
    let completed = session
        .sentences
        .iter()
        .filter(|&&i| store.completed.contains(&(annotator.clone(), app.cfg.corpus[i].id.clone())))
        .count();
    Json(Progress {
        annotator_id: annotator,
        completed,
        total: session.sentences.len(),
    })
}

const PLACEHOLDER_PAGE: &str = "<!doctype html><title>Gesture annotation</title>\
<p>No annotation UI bundle is configured. The JSON API is available under \
<code>/gestures</code>, <code>/sessions</code> and <code>/progress</code>.</p>";

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        _ => "application/octet-stream",
    }
}

async fn static_files(State(app): State<Shared>, uri: Uri) -> Response {
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let Some(dir) = &app.cfg.ui_dir else {
        return if rel == "index.html" {
            ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], PLACEHOLDER_PAGE).into_response()
        } else {
            StatusCode::NOT_FOUND.into_response()
        };
    };
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let path = dir.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

pub fn router(cfg: ServiceConfig) -> Result<Router> {
    let app = Arc::new(App::new(cfg)?);
    Ok(Router::new()
        .route("/gestures", get(gestures))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/labels", post(submit))
        .route("/progress/{annotator_id}", get(progress))
        .fallback(get(static_files))
        .with_state(app))
}

/// Binds `addr` and serves until the process is stopped.
pub fn serve_blocking(cfg: ServiceConfig, addr: std::net::SocketAddr) -> Result<()> {
    let app = router(cfg)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Error::Bind {
                addr: addr.to_string(),
                source: e,
            })?;
        log::info!("annotation service listening on http://{addr}");
        axum::serve(listener, app)
            .await
            .map_err(|e| Error::io(format!("serve {addr}"), e))
    })
}
