//! Annotation service: hands out sessions of sentence pairs, accepts
//! annotation records into an append-only JSONL journal and reports live
//! agreement over pairs that have their full set of annotators.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, RwLock};

use anyhow::{bail, Context, Result};
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semdiv_core::corpus::{SentencePair, Side};
use semdiv_core::labels::SentenceClass;
use semdiv_core::refresd::{
    dataset_agreement, dataset_stats, quality_report, AgreementReport, AnnotatedPair, AnnotationRecord, AnnotatorQuality,
    Dataset, DatasetStats, Vote,
};
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Regular,
    Duplicate,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionItem {
    pub item_id: String,
    pub pair_id: String,
    pub kind: ItemKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub annotator_id: String,
    pub seed: u64,
    pub items: Vec<SessionItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredAnnotation {
    pub seq: u64,
    pub session_id: String,
    pub item_id: String,
    pub kind: ItemKind,
    /// `pair_id` here is the underlying pair, not the served item id.
    pub record: AnnotationRecord,
}

impl StoredAnnotation {
    /// The record as the annotator submitted it.
    pub fn as_submitted(&self) -> AnnotationRecord {
        AnnotationRecord {
            pair_id: self.item_id.clone(),
            ..self.record.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum JournalEntry {
    Session(SessionState),
    Annotation(StoredAnnotation),
}

/// Pairs to annotate and an optional reference dataset with known classes.
pub struct Corpus {
    pub pool: Vec<SentencePair>,
    pub reference: Dataset,
}

#[derive(Default)]
struct Store {
    sessions: BTreeMap<String, SessionState>,
    annotations: Vec<StoredAnnotation>,
    done: HashSet<(String, String)>,
    /// Annotators holding a regular assignment, per pair.
    assigned: BTreeMap<String, BTreeSet<String>>,
    journal: Option<File>,
}

impl Store {
    fn apply(&mut self, entry: JournalEntry) {
        match entry {
            JournalEntry::Session(s) => {
                for it in s.items.iter().filter(|i| i.kind == ItemKind::Regular) {
                    self.assigned
                        .entry(it.pair_id.clone())
                        .or_default()
                        .insert(s.annotator_id.clone());
                }
                self.sessions.insert(s.session_id.clone(), s);
            }
            JournalEntry::Annotation(a) => {
                self.done.insert((a.session_id.clone(), a.item_id.clone()));
                self.annotations.push(a);
            }
        }
    }

    fn append(&mut self, entry: JournalEntry) -> std::io::Result<()> {
        if let Some(f) = self.journal.as_mut() {
            let mut line = serde_json::to_string(&entry).expect("journal entry serializes");
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        self.apply(entry);
        Ok(())
    }
}

#[derive(Clone)]
pub struct AppState {
    corpus: Arc<Corpus>,
    by_id: Arc<BTreeMap<String, SentencePair>>,
    cfg: Arc<ServiceConfig>,
    store: Arc<RwLock<Store>>,
}

impl AppState {
    /// Opens the journal (created if missing) and replays it.
    pub fn open(corpus: Corpus, cfg: ServiceConfig, journal: Option<&Path>) -> Result<Self> {
        cfg.validate().map_err(anyhow::Error::msg)?;
        let mut by_id = BTreeMap::new();
        for p in corpus.pool.iter().chain(corpus.reference.pairs.iter().map(|a| &a.pair)) {
            if let Some(prev) = by_id.insert(p.id.clone(), p.clone()) {
                if prev != *p {
                    bail!("pair id {} names two different pairs", p.id);
                }
            }
        }
        let mut store = Store::default();
        if let Some(path) = journal {
            if path.exists() {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                    let e: JournalEntry = serde_json::from_str(line)
                        .with_context(|| format!("{}: line {}", path.display(), i + 1))?;
                    store.apply(e);
                }
            }
            store.journal = Some(
                OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .with_context(|| format!("opening {}", path.display()))?,
            );
        }
        Ok(AppState {
            corpus: Arc::new(corpus),
            by_id: Arc::new(by_id),
            cfg: Arc::new(cfg),
            store: Arc::new(RwLock::new(store)),
        })
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Store> {
        self.store.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Store> {
        self.store.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Pairs from the pool with one regular annotation from each of their
    /// assigned annotators.
    pub fn completed(&self) -> Dataset {
        let store = self.read();
        let mut by_pair: BTreeMap<&str, Vec<AnnotationRecord>> = BTreeMap::new();
        for a in store.annotations.iter().filter(|a| a.kind == ItemKind::Regular) {
            by_pair.entry(&a.record.pair_id).or_default().push(a.record.clone());
        }
        let n = self.cfg.annotators_per_pair;
        let pairs = self
            .corpus
            .pool
            .iter()
            .filter_map(|p| {
                let recs = by_pair.get(p.id.as_str())?;
                (recs.len() == n).then(|| AnnotatedPair::new(p.clone(), recs.clone()).ok()).flatten()
            })
            .collect();
        Dataset { pairs }
    }

    fn new_session(&self, annotator_id: &str) -> std::io::Result<SessionState> {
        let mut store = self.write();
        let n = store.sessions.len();
        let session_id = format!("s{n:04}");
        let seed = self.cfg.rng_seed.wrapping_add(n as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = &self.cfg;

        let n_regular = cfg.session_size - cfg.duplicates_per_session - cfg.references_per_session;
        let regular: Vec<&SentencePair> = self
            .corpus
            .pool
            .iter()
            .filter(|p| {
                store
                    .assigned
                    .get(&p.id)
                    .is_none_or(|a| a.len() < cfg.annotators_per_pair && !a.contains(annotator_id))
            })
            .take(n_regular)
            .collect();
        let mut items: Vec<(String, ItemKind)> = regular.iter().map(|p| (p.id.clone(), ItemKind::Regular)).collect();
        let dups: Vec<String> = regular
            .choose_multiple(&mut rng, cfg.duplicates_per_session.min(regular.len()))
            .map(|p| p.id.clone())
            .collect();
        items.extend(dups.into_iter().map(|id| (id, ItemKind::Duplicate)));
        if !regular.is_empty() {
            let refs: Vec<String> = self
                .corpus
                .reference
                .usable()
                .map(|(a, _)| a.pair.id.clone())
                .filter(|id| !regular.iter().any(|p| &p.id == id))
                .collect();
            items.extend(
                refs.choose_multiple(&mut rng, cfg.references_per_session.min(refs.len()))
                    .map(|id| (id.clone(), ItemKind::Reference)),
            );
        }
        items.shuffle(&mut rng);
        let state = SessionState {
            items: items
                .into_iter()
                .enumerate()
                .map(|(k, (pair_id, kind))| SessionItem {
                    item_id: format!("{session_id}-{k:03}"),
                    pair_id,
                    kind,
                })
                .collect(),
            session_id,
            annotator_id: annotator_id.to_string(),
            seed,
        };
        store.append(JournalEntry::Session(state.clone()))?;
        Ok(state)
    }
}

#[derive(Debug, Serialize)]
struct ApiError {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<String>,
}

fn error(status: StatusCode, msg: impl Into<String>, field: Option<String>) -> Response {
    (
        status,
        Json(ApiError {
            error: msg.into(),
            field,
        }),
    )
        .into_response()
}

fn bad_field(field: impl Into<String>, msg: impl Into<String>) -> Response {
    error(StatusCode::BAD_REQUEST, msg, Some(field.into()))
}

fn io_error(e: std::io::Error) -> Response {
    log::error!("journal write failed: {e}");
    error(StatusCode::INTERNAL_SERVER_ERROR, format!("journal write failed: {e}"), None)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    annotator_id: String,
}

#[derive(Debug, Serialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub annotator_id: String,
    pub total: usize,
    pub completed: usize,
}

fn summary(s: &SessionState, store: &Store) -> SessionSummary {
    SessionSummary {
        session_id: s.session_id.clone(),
        annotator_id: s.annotator_id.clone(),
        total: s.items.len(),
        completed: s
            .items
            .iter()
            .filter(|i| store.done.contains(&(s.session_id.clone(), i.item_id.clone())))
            .count(),
    }
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> Response {
    let req: NewSession = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    if req.annotator_id.trim().is_empty() {
        return bad_field("annotator_id", "annotator_id must not be empty");
    }
    match app.new_session(&req.annotator_id) {
        Ok(s) => {
            let store = app.read();
            (StatusCode::CREATED, Json(summary(&s, &store))).into_response()
        }
        Err(e) => io_error(e),
    }
}

async fn get_session(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let store = app.read();
    match store.sessions.get(&id) {
        Some(s) => Json(summary(s, &store)).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("no session {id}"), None),
    }
}

#[derive(Debug, Serialize)]
pub struct ServedItem {
    /// Submit annotations with this value as `pair_id`.
    pub item_id: String,
    pub position: usize,
    pub total: usize,
    pub src_tokens: Vec<String>,
    pub tgt_tokens: Vec<String>,
}

async fn next_item(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let store = app.read();
    let Some(s) = store.sessions.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("no session {id}"), None);
    };
    let next = s
        .items
        .iter()
        .enumerate()
        .find(|(_, it)| !store.done.contains(&(id.clone(), it.item_id.clone())));
    match next {
        None => StatusCode::NO_CONTENT.into_response(),
        Some((k, it)) => {
            let pair = &app.by_id[&it.pair_id];
            Json(ServedItem {
                item_id: it.item_id.clone(),
                position: k,
                total: s.items.len(),
                src_tokens: pair.src_tokens.clone(),
                tgt_tokens: pair.tgt_tokens.clone(),
            })
            .into_response()
        }
    }
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, Response> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = (path != ".").then_some(path);
        bad_field(field.unwrap_or_default(), e.into_inner().to_string())
    })
}

fn check_spans(rec: &AnnotationRecord, pair: &SentencePair) -> Result<(), Response> {
    for side in [Side::Src, Side::Tgt] {
        let name = match side {
            Side::Src => "src",
            Side::Tgt => "tgt",
        };
        let len = pair.tokens(side).len();
        let spans = rec.spans.side(side);
        for (i, s) in spans.iter().enumerate() {
            if s.start >= s.end {
                return Err(bad_field(format!("spans.{name}[{i}]"), "span must cover at least one token"));
            }
            if s.end > len {
                return Err(bad_field(
                    format!("spans.{name}[{i}].end"),
                    format!("end {} exceeds token count {len}", s.end),
                ));
            }
        }
    }
    rec.spans
        .validate(pair.src_tokens.len(), pair.tgt_tokens.len())
        .map_err(|e| bad_field("spans", e.to_string()))
}

async fn submit(State(app): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> Response {
    let rec: AnnotationRecord = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let mut store = app.write();
    let Some(session) = store.sessions.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("no session {id}"), None);
    };
    if rec.annotator_id != session.annotator_id {
        return bad_field("annotator_id", format!("session {id} belongs to {}", session.annotator_id));
    }
    let Some(item) = session.items.iter().find(|i| i.item_id == rec.pair_id).cloned() else {
        return bad_field("pair_id", format!("{} is not an item of session {id}", rec.pair_id));
    };
    if let Err(resp) = check_spans(&rec, &app.by_id[&item.pair_id]) {
        return resp;
    }
    if store.done.contains(&(id.clone(), item.item_id.clone())) {
        return error(
            StatusCode::CONFLICT,
            format!("{} already annotated {}", rec.annotator_id, rec.pair_id),
            None,
        );
    }
    let stored = StoredAnnotation {
        seq: store.annotations.len() as u64,
        session_id: id,
        item_id: item.item_id,
        kind: item.kind,
        record: AnnotationRecord {
            pair_id: item.pair_id,
            ..rec
        },
    };
    let out = stored.as_submitted();
    match store.append(JournalEntry::Annotation(stored)) {
        Ok(()) => (StatusCode::CREATED, Json(out)).into_response(),
        Err(e) => io_error(e),
    }
}

async fn session_annotations(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let store = app.read();
    if !store.sessions.contains_key(&id) {
        return error(StatusCode::NOT_FOUND, format!("no session {id}"), None);
    }
    let recs: Vec<AnnotationRecord> = store
        .annotations
        .iter()
        .filter(|a| a.session_id == id)
        .map(StoredAnnotation::as_submitted)
        .collect();
    Json(recs).into_response()
}

#[derive(Debug, Serialize)]
pub struct PairVote {
    pub pair_id: String,
    pub vote: Vote,
}

#[derive(Debug, Serialize)]
pub struct IaaResponse {
    pub completed_pairs: usize,
    pub excluded: usize,
    pub votes: Vec<PairVote>,
    pub agreement: Option<AgreementReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

async fn iaa(State(app): State<AppState>) -> Response {
    let ds = app.completed();
    let votes: Vec<PairVote> = ds
        .pairs
        .iter()
        .filter_map(|p| {
            p.vote().ok().map(|vote| PairVote {
                pair_id: p.pair.id.clone(),
                vote,
            })
        })
        .collect();
    let (agreement, note) = match dataset_agreement(&ds) {
        Ok(a) => (Some(a), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Json(IaaResponse {
        completed_pairs: ds.len(),
        excluded: ds.pairs.iter().filter(|p| p.excluded.is_some()).count(),
        votes,
        agreement,
        note,
    })
    .into_response()
}

#[derive(Debug, Serialize)]
pub struct Progress {
    pub pool_pairs: usize,
    pub completed_pairs: usize,
    pub annotations: usize,
    pub sessions: Vec<SessionSummary>,
}

async fn progress(State(app): State<AppState>) -> Response {
    let completed_pairs = app.completed().len();
    let store = app.read();
    Json(Progress {
        pool_pairs: app.corpus.pool.len(),
        completed_pairs,
        annotations: store.annotations.len(),
        sessions: store.sessions.values().map(|s| summary(s, &store)).collect(),
    })
    .into_response()
}

#[derive(Debug, Serialize)]
pub struct StatsResponse {
    pub nd: usize,
    pub sd: usize,
    pub un: usize,
    #[serde(flatten)]
    pub stats: DatasetStats,
}

/// Statistics over the loaded dataset plus pool pairs completed live.
async fn stats(State(app): State<AppState>) -> Response {
    let mut ds = app.corpus.reference.clone();
    let known: HashSet<String> = ds.pairs.iter().map(|p| p.pair.id.clone()).collect();
    ds.pairs
        .extend(app.completed().pairs.into_iter().filter(|p| !known.contains(&p.pair.id)));
    let s = dataset_stats(&ds);
    Json(StatsResponse {
        nd: s.no_meaning_difference,
        sd: s.some_meaning_difference,
        un: s.unrelated,
        stats: s,
    })
    .into_response()
}

async fn qc(State(app): State<AppState>) -> Response {
    let store = app.read();
    let mut records = Vec::new();
    let mut duplicates = BTreeMap::new();
    let mut references: BTreeMap<String, SentenceClass> = BTreeMap::new();
    let gold: BTreeMap<&str, SentenceClass> = app
        .corpus
        .reference
        .usable()
        .map(|(a, c)| (a.pair.id.as_str(), c))
        .collect();
    for a in &store.annotations {
        match a.kind {
            ItemKind::Regular => records.push(a.record.clone()),
            ItemKind::Duplicate => {
                duplicates.insert(a.item_id.clone(), a.record.pair_id.clone());
                records.push(a.as_submitted());
            }
            ItemKind::Reference => {
                if let Some(c) = gold.get(a.record.pair_id.as_str()) {
                    references.insert(a.item_id.clone(), *c);
                }
                records.push(a.as_submitted());
            }
        }
    }
    let report: Vec<AnnotatorQuality> = quality_report(&records, &duplicates, &references, &app.cfg.qc);
    Json(report).into_response()
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/api/session", post(create_session))
        .route("/api/session/{id}", get(get_session))
        .route("/api/session/{id}/next", get(next_item))
        .route("/api/session/{id}/annotation", post(submit))
        .route("/api/session/{id}/annotations", get(session_annotations))
        .route("/api/iaa", get(iaa))
        .route("/api/progress", get(progress))
        .route("/api/dataset/stats", get(stats))
        .route("/api/qc", get(qc))
        .with_state(app)
}

pub async fn serve(app: AppState, addr: &str) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
