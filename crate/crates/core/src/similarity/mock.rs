//! An in-process scoring server speaking the remote wire protocol, backed by
//! any local [`SimilarityBackend`]. Used by integration tests and examples.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use super::SimilarityBackend;
use crate::error::{Error, Result};

/// Computes the HTTP reply for a batch of `(reference, candidate)` pairs.
pub type Responder = dyn Fn(&[(String, String)]) -> (StatusCode, Value) + Send + Sync;

struct Shared {
    responder: Box<Responder>,
    model: String,
    requests: AtomicUsize,
}

#[derive(Deserialize)]
struct Body {
    pairs: Vec<(String, String)>,
}

async fn similarity(State(shared): State<Arc<Shared>>, Json(body): Json<Body>) -> (StatusCode, Json<Value>) {
    shared.requests.fetch_add(1, Ordering::SeqCst);
    let (status, value) = (shared.responder)(&body.pairs);
    (status, Json(value))
}

async fn health(State(shared): State<Arc<Shared>>) -> Json<Value> {
    Json(json!({ "model": shared.model }))
}

/// Handle to a running mock server; stops when dropped.
pub struct MockScoringServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockScoringServer {
    /// Serves scores from `backend`.
    pub fn start(backend: Arc<dyn SimilarityBackend>) -> Result<Self> {
        let model = backend.identity();
        Self::start_with(model, move |pairs| {
            let refs: Vec<(&str, &str)> =
                pairs.iter().map(|(r, c)| (r.as_str(), c.as_str())).collect();
            match backend.batch_score(&refs) {
                Ok(scores) => (StatusCode::OK, json!({ "scores": scores })),
                Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": e.to_string() })),
            }
        })
    }

    /// Serves whatever `responder` returns, for fault-injection tests.
    pub fn start_with(
        model: impl Into<String>,
        responder: impl Fn(&[(String, String)]) -> (StatusCode, Value) + Send + Sync + 'static,
    ) -> Result<Self> {
        let shared = Arc::new(Shared {
            responder: Box::new(responder),
            model: model.into(),
            requests: AtomicUsize::new(0),
        });
        let listener = std::net::TcpListener::bind("127.0.0.1:0")
            .map_err(|e| Error::BackendUnavailable(format!("mock bind: {e}")))?;
        listener
            .set_nonblocking(true)
            .map_err(|e| Error::BackendUnavailable(e.to_string()))?;
        let addr = listener
            .local_addr()
            .map_err(|e| Error::BackendUnavailable(e.to_string()))?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let app = Router::new()
            .route("/similarity", post(similarity))
            .route("/health", get(health))
            .with_state(shared.clone());
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
                .expect("tokio runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        Ok(Self {
            addr,
            shared,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Number of `/similarity` requests served so far.
    pub fn requests(&self) -> usize {
        self.shared.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockScoringServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
