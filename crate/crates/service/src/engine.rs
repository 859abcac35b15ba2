//! Project operations over the event log. Every mutation is written as an
//! event first and then folded into memory by the same code that replays
//! the log at startup, so a reopened store reproduces the live state.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use narrachart::binder::{annotate, bind_variant, BindContext, BindError, LlmProvider, NullProvider, PromptDb};
use narrachart::overlay::Palette;
use narrachart::pipeline::{run_pipeline, PipelineConfig, PipelineError};
use narrachart::render::{export_gif, render_png, sequence_charts, EditError, EditOp, LayeredChartSpec, RenderError};
use narrachart::wire::to_wire;
use narrachart::{validate_binding, validate_table, BindingResult, DataTable, Lexicon};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::curation::{CurationError, CurationLog, CurationRecord};
use crate::model::{
    AnnotatedSpan, Annotations, BindingReply, CreateProject, Display, FeedbackEntry, FeedbackKind, FeedbackReply,
    FeedbackRequest, MarkPayload, NarrativeBinding, Project,
};
use crate::store::{Event, Store, StoreError};

pub const STORE_FILE: &str = "store.jsonl";
pub const CURATION_FILE: &str = "curation.jsonl";

#[derive(Clone)]
pub struct ServiceConfig {
    /// Directory for the event log and curation file; in memory when `None`.
    pub data_dir: Option<PathBuf>,
    pub provider: Arc<dyn LlmProvider>,
    pub db: Arc<PromptDb>,
    pub lexicon: Arc<Lexicon>,
    pub palette: Palette,
    pub pipeline: PipelineConfig,
}

impl Default for ServiceConfig {
    /// In memory, null provider, bundled examples and lexicon.
    fn default() -> Self {
        Self {
            data_dir: None,
            provider: Arc::new(NullProvider),
            db: Arc::new(PromptDb::bundled()),
            lexicon: Arc::new(Lexicon::default()),
            palette: Palette::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("replaying event {index}: {detail}")]
    Replay { index: usize, detail: String },
}

/// A failed request; maps onto an HTTP status.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{message}")]
    Invalid { message: String, details: Vec<String> },
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn invalid(message: impl Into<String>, details: Vec<String>) -> Self {
        ApiError::Invalid {
            message: message.into(),
            details,
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            ApiError::BadRequest(_) => 400,
            ApiError::NotFound(_) => 404,
            ApiError::Conflict(_) => 409,
            ApiError::Invalid { .. } => 422,
            ApiError::Internal(_) => 500,
        }
    }

    pub fn body(&self) -> Value {
        match self {
            ApiError::Invalid { message, details } => json!({"error": message, "details": details}),
            other => json!({"error": other.to_string()}),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl From<CurationError> for ApiError {
    fn from(e: CurationError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl From<EditError> for ApiError {
    fn from(e: EditError) -> Self {
        match e {
            EditError::UnknownTarget(_) => ApiError::NotFound(e.to_string()),
            other => ApiError::invalid(other.to_string(), vec![]),
        }
    }
}

/// A JSON reply.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub status: u16,
    pub body: Value,
}

impl Reply {
    fn new(status: u16, body: &impl Serialize) -> Self {
        Self {
            status,
            body: serde_json::to_value(body).expect("replies serialize"),
        }
    }

    fn from_error(e: &ApiError) -> Self {
        Self {
            status: e.status(),
            body: e.body(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Gif,
    PngArchive,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Result<Self, ApiError> {
        match s {
            "gif" => Ok(ExportFormat::Gif),
            "png" | "png_per_narrative" => Ok(ExportFormat::PngArchive),
            other => Err(ApiError::BadRequest(format!("unknown export format {other:?} (expected gif or png)"))),
        }
    }
}

pub struct Export {
    pub content_type: &'static str,
    pub file_name: String,
    pub bytes: Vec<u8>,
}

struct ProjectState {
    project: Project,
}

struct StoredResponse {
    fingerprint: String,
    reply: Reply,
}

pub struct Engine {
    config: ServiceConfig,
    store: Store,
    curation: CurationLog,
    projects: RwLock<BTreeMap<String, Arc<Mutex<ProjectState>>>>,
    create_lock: Mutex<()>,
    responses: Mutex<HashMap<String, StoredResponse>>,
    feedback_count: AtomicU64,
    clock: Mutex<u64>,
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("malformed request body: {e}")))
}

fn fingerprint(body: &[u8]) -> String {
    hex::encode(Sha256::digest(body))
}

impl Engine {
    /// Opens the store under `config.data_dir` and replays it.
    pub fn open(config: ServiceConfig) -> Result<Self, EngineError> {
        let (store, events, curation) = match &config.data_dir {
            Some(dir) => {
                let (store, events) = Store::open(&dir.join(STORE_FILE))?;
                (store, events, CurationLog::new(Some(dir.join(CURATION_FILE))))
            }
            None => (Store::memory(), Vec::new(), CurationLog::new(None)),
        };
        let engine = Self {
            config,
            store,
            curation,
            projects: RwLock::new(BTreeMap::new()),
            create_lock: Mutex::new(()),
            responses: Mutex::new(HashMap::new()),
            feedback_count: AtomicU64::new(0),
            clock: Mutex::new(0),
        };
        for (index, event) in events.into_iter().enumerate() {
            engine.replay(event).map_err(|detail| EngineError::Replay { index, detail })?;
        }
        Ok(engine)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn replay(&self, event: Event) -> Result<(), String> {
        match &event {
            Event::ProjectCreated { project } => {
                self.observe_time(project.created_at);
                self.insert_project(project.clone());
            }
            Event::Bound { project_id, .. } | Event::Edited { project_id, .. } => {
                let state = self.state(project_id).map_err(|e| e.to_string())?;
                let mut guard = state.lock().expect("project lock");
                self.fold(&mut guard, &event).map_err(|e| e.to_string())?;
            }
            Event::Feedback { entry } => {
                self.observe_time(entry.timestamp);
                self.feedback_count.fetch_add(1, Ordering::SeqCst);
            }
            Event::Response {
                key,
                fingerprint,
                status,
                body,
            } => {
                self.responses.lock().expect("responses lock").insert(
                    key.clone(),
                    StoredResponse {
                        fingerprint: fingerprint.clone(),
                        reply: Reply {
                            status: *status,
                            body: body.clone(),
                        },
                    },
                );
            }
        }
        Ok(())
    }

    /// Applies a project-scoped event to its (locked) project.
    fn fold(&self, state: &mut ProjectState, event: &Event) -> Result<(), ApiError> {
        let project = &mut state.project;
        match event {
            Event::Bound {
                narrative_id,
                binding,
                error,
                spec,
                ..
            } => {
                match binding {
                    Some(b) => project.bindings.insert(narrative_id.clone(), b.clone()),
                    None => project.bindings.remove(narrative_id),
                };
                match error {
                    Some(e) => project.errors.insert(narrative_id.clone(), e.clone()),
                    None => project.errors.remove(narrative_id),
                };
                if let Some(s) = spec {
                    project.chart_specs.insert(narrative_id.clone(), s.clone());
                }
            }
            Event::Edited { narrative_id, op, .. } => {
                let spec = project
                    .chart_specs
                    .get_mut(narrative_id)
                    .ok_or_else(|| ApiError::NotFound(format!("no chart for narrative {narrative_id}")))?;
                spec.apply_logged_edit(op, &project.table, &self.config.palette)?;
            }
            _ => {}
        }
        Ok(())
    }

    fn commit(&self, state: &mut ProjectState, event: Event) -> Result<(), ApiError> {
        self.store.append(&event)?;
        self.fold(state, &event)
    }

    fn insert_project(&self, project: Project) {
        self.projects
            .write()
            .expect("projects lock")
            .insert(project.id.clone(), Arc::new(Mutex::new(ProjectState { project })));
    }

    fn state(&self, id: &str) -> Result<Arc<Mutex<ProjectState>>, ApiError> {
        self.projects
            .read()
            .expect("projects lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("unknown project {id}")))
    }

    fn observe_time(&self, t: u64) {
        let mut c = self.clock.lock().expect("clock lock");
        *c = (*c).max(t);
    }

    /// Wall-clock milliseconds, never earlier than any time already issued.
    fn now(&self) -> u64 {
        let wall = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64);
        let mut c = self.clock.lock().expect("clock lock");
        *c = (*c).max(wall);
        *c
    }

    /// Runs `f` once per idempotency key within `scope`; a retry with the
    /// same key and body gets the stored reply, a different body a conflict.
    /// Callers hold the lock that serializes the scope.
    fn idempotent(
        &self,
        key: Option<&str>,
        scope: &str,
        body: &[u8],
        f: impl FnOnce() -> Result<Reply, ApiError>,
    ) -> Result<Reply, ApiError> {
        let Some(key) = key else { return f() };
        let full = format!("{scope}#{key}");
        let fp = fingerprint(body);
        if let Some(stored) = self.responses.lock().expect("responses lock").get(&full) {
            if stored.fingerprint != fp {
                return Err(ApiError::Conflict(format!("idempotency key {key} was used with a different request")));
            }
            return Ok(stored.reply.clone());
        }
        let reply = f().unwrap_or_else(|e| Reply::from_error(&e));
        self.store.append(&Event::Response {
            key: full.clone(),
            fingerprint: fp.clone(),
            status: reply.status,
            body: reply.body.clone(),
        })?;
        self.responses.lock().expect("responses lock").insert(
            full,
            StoredResponse {
                fingerprint: fp,
                reply: reply.clone(),
            },
        );
        Ok(reply)
    }

    pub fn create_project(&self, key: Option<&str>, body: &[u8]) -> Result<Reply, ApiError> {
        let _serial = self.create_lock.lock().expect("create lock");
        self.idempotent(key, "projects", body, || {
            let project = self.build_project(parse_body(body)?)?;
            self.store.append(&Event::ProjectCreated {
                project: project.clone(),
            })?;
            self.insert_project(project.clone());
            Ok(Reply::new(201, &project))
        })
    }

    fn build_project(&self, req: CreateProject) -> Result<Project, ApiError> {
        let mut table = match (req.table, req.table_csv) {
            (Some(t), _) => t,
            (None, Some(csv)) => DataTable::from_csv_str(req.name.as_deref().unwrap_or("table"), &csv)
                .map_err(|e| ApiError::invalid("table does not parse", vec![e.to_string()]))?,
            (None, None) => return Err(ApiError::invalid("a table is required", vec!["set table or tableCsv".into()])),
        };
        if let Some(name) = req.name {
            table.name = name;
        }
        let violations = validate_table(&table);
        if !violations.is_empty() {
            return Err(ApiError::invalid("invalid table", violations));
        }
        if req.article.trim().is_empty() {
            return Err(ApiError::invalid("article is empty", vec![]));
        }
        let out = run_pipeline(
            &req.article,
            &table,
            self.config.provider.as_ref(),
            &self.config.db,
            &self.config.lexicon,
            &self.config.pipeline,
        )
        .map_err(|e| match e {
            PipelineError::InvalidTable(v) => ApiError::invalid("invalid table", v),
            PipelineError::Bind(e) => ApiError::invalid(e.to_string(), vec![]),
            PipelineError::Render(e @ (RenderError::NoNumericColumn | RenderError::UnknownColumn(_))) => {
                ApiError::invalid("table cannot be charted", vec![e.to_string()])
            }
            other => ApiError::Internal(other.to_string()),
        })?;
        let mut bindings = BTreeMap::new();
        let mut errors = BTreeMap::new();
        let narratives = out.runs.iter().map(|r| r.narrative.clone()).collect();
        for run in out.runs {
            match run.outcome {
                Ok(o) => {
                    bindings.insert(run.narrative.id, NarrativeBinding::from_outcome(o, 0));
                }
                Err(e) => {
                    errors.insert(run.narrative.id, e.to_string());
                }
            }
        }
        let id = format!("p{}", self.projects.read().expect("projects lock").len() + 1);
        Ok(Project {
            id,
            table,
            article: req.article,
            narratives,
            bindings,
            chart_specs: out.charts.into_iter().map(|c| (c.narrative_id.clone(), c)).collect(),
            errors,
            notes: out.notes,
            created_at: self.now(),
        })
    }

    pub fn project(&self, id: &str) -> Result<Project, ApiError> {
        let state = self.state(id)?;
        let guard = state.lock().expect("project lock");
        Ok(guard.project.clone())
    }

    pub fn project_ids(&self) -> Vec<String> {
        self.projects.read().expect("projects lock").keys().cloned().collect()
    }

    pub fn annotations(&self, id: &str, nid: &str) -> Result<Annotations, ApiError> {
        let project = self.project(id)?;
        let narrative = project
            .narrative(nid)
            .ok_or_else(|| ApiError::NotFound(format!("unknown narrative {nid}")))?;
        let binding = project.bindings.get(nid);
        let spans = binding
            .map(|b| annotate(&narrative.text, &b.result, &project.table))
            .unwrap_or_default()
            .into_iter()
            .map(|span| AnnotatedSpan {
                display: Display::of(span.kind),
                span,
            })
            .collect();
        Ok(Annotations {
            narrative_id: nid.to_string(),
            text: narrative.text.clone(),
            reason: binding.map(|b| b.result.reason.clone()),
            spans,
        })
    }

    /// Re-binds with the standard prompt.
    pub fn bind(&self, key: Option<&str>, id: &str, nid: &str) -> Result<Reply, ApiError> {
        self.rebind(key, id, nid, "bind", |_| 0)
    }

    /// Re-binds with one more least-similar example dropped than last time.
    pub fn regenerate(&self, key: Option<&str>, id: &str, nid: &str) -> Result<Reply, ApiError> {
        self.rebind(key, id, nid, "regenerate", |prev| prev.map_or(1, |v| v + 1))
    }

    fn rebind(
        &self,
        key: Option<&str>,
        id: &str,
        nid: &str,
        op: &str,
        variant: impl FnOnce(Option<usize>) -> usize,
    ) -> Result<Reply, ApiError> {
        let state = self.state(id)?;
        let mut guard = state.lock().expect("project lock");
        self.idempotent(key, &format!("{id}/{nid}/{op}"), b"", || {
            let prev = guard.project.bindings.get(nid).map(|b| b.variant);
            let reply = self.bind_locked(&mut guard, nid, variant(prev))?;
            Ok(Reply::new(200, &reply))
        })
    }

    fn bind_locked(&self, state: &mut ProjectState, nid: &str, variant: usize) -> Result<BindingReply, ApiError> {
        let project = &state.project;
        let narrative = project
            .narrative(nid)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("unknown narrative {nid}")))?;
        let ctx = BindContext {
            table: &project.table,
            provider: self.config.provider.as_ref(),
            db: &self.config.db,
            lexicon: &self.config.lexicon,
            config: self.config.pipeline.bind.clone(),
        };
        let outcome = bind_variant(&narrative, &ctx, variant)
            .map_err(|e| ApiError::invalid("binding failed", vec![e.to_string()]))?;
        let binding = NarrativeBinding::from_outcome(outcome, variant);
        let spec = self.spec_for(project, nid, &binding.result)?;
        self.commit(
            state,
            Event::Bound {
                project_id: state.project.id.clone(),
                narrative_id: nid.to_string(),
                binding: Some(binding.clone()),
                error: None,
                spec: Some(spec.clone()),
            },
        )?;
        Ok(BindingReply {
            narrative_id: nid.to_string(),
            binding,
            spec,
        })
    }

    /// The chart of `nid` for `result`, built with the project's other
    /// bindings so the shared base chart stays the same.
    fn spec_for(&self, project: &Project, nid: &str, result: &BindingResult) -> Result<LayeredChartSpec, ApiError> {
        let all: Vec<_> = project
            .narratives
            .iter()
            .map(|n| {
                let r = if n.id == nid {
                    Ok(result.clone())
                } else {
                    project
                        .bindings
                        .get(&n.id)
                        .map(|b| b.result.clone())
                        .ok_or_else(|| BindError::BindingFailed(project.errors.get(&n.id).cloned().unwrap_or_default()))
                };
                (n.clone(), r)
            })
            .collect();
        sequence_charts(&all, &project.table, &self.config.pipeline.chart, &self.config.lexicon)
            .map_err(|e| ApiError::Internal(e.to_string()))?
            .into_iter()
            .find(|s| s.narrative_id == nid)
            .ok_or_else(|| ApiError::Internal(format!("no chart produced for {nid}")))
    }

    pub fn edit(&self, key: Option<&str>, id: &str, nid: &str, body: &[u8]) -> Result<Reply, ApiError> {
        let state = self.state(id)?;
        let mut guard = state.lock().expect("project lock");
        self.idempotent(key, &format!("{id}/{nid}/edits"), body, || {
            let op: EditOp = parse_body(body)?;
            let project = &guard.project;
            let mut probe = project
                .chart_specs
                .get(nid)
                .cloned()
                .ok_or_else(|| ApiError::NotFound(format!("no chart for narrative {nid}")))?;
            probe.apply_logged_edit(&op, &project.table, &self.config.palette)?;
            let event = Event::Edited {
                project_id: id.to_string(),
                narrative_id: nid.to_string(),
                op,
            };
            self.commit(&mut guard, event)?;
            Ok(Reply::new(200, &guard.project.chart_specs[nid]))
        })
    }

    pub fn feedback(&self, key: Option<&str>, id: &str, nid: &str, body: &[u8]) -> Result<Reply, ApiError> {
        let state = self.state(id)?;
        let mut guard = state.lock().expect("project lock");
        self.idempotent(key, &format!("{id}/{nid}/feedback"), body, || {
            let req: FeedbackRequest = parse_body(body)?;
            let project = &guard.project;
            let narrative = project
                .narrative(nid)
                .cloned()
                .ok_or_else(|| ApiError::NotFound(format!("unknown narrative {nid}")))?;
            let entry = FeedbackEntry {
                id: format!("f{}", self.feedback_count.load(Ordering::SeqCst) + 1),
                kind: req.kind,
                project_id: id.to_string(),
                narrative_id: nid.to_string(),
                payload: req.payload,
                timestamp: self.now(),
            };
            let curated = match req.kind {
                FeedbackKind::Mark => Some(self.curation_record(project, &narrative.text, &entry)?),
                _ => None,
            };
            self.store.append(&Event::Feedback { entry: entry.clone() })?;
            self.feedback_count.fetch_add(1, Ordering::SeqCst);
            if let Some(record) = curated {
                self.curation.append(&record)?;
            }
            let regenerated = match req.kind {
                FeedbackKind::ThumbsDown => {
                    let prev = guard.project.bindings.get(nid).map_or(0, |b| b.variant);
                    Some(self.bind_locked(&mut guard, nid, prev + 1)?)
                }
                _ => None,
            };
            Ok(Reply::new(201, &FeedbackReply { entry, regenerated }))
        })
    }

    fn curation_record(&self, project: &Project, text: &str, entry: &FeedbackEntry) -> Result<CurationRecord, ApiError> {
        let mark: MarkPayload = serde_json::from_value(entry.payload.clone())
            .map_err(|e| ApiError::invalid("mark payload is malformed", vec![e.to_string()]))?;
        if mark.span.text.trim().is_empty() || !mark.span.is_consistent(text) {
            return Err(ApiError::invalid(
                "marked region must be a non-empty span of the narrative",
                vec![format!("{}..{} {:?}", mark.span.char_start, mark.span.char_end, mark.span.text)],
            ));
        }
        let mut result = project
            .bindings
            .get(&entry.narrative_id)
            .map(|b| b.result.clone())
            .unwrap_or_default();
        if let Some(c) = mark.correction {
            result.records.push(c);
        }
        if result.reason.trim().is_empty() {
            result.reason = "Marked for review.".into();
        }
        let violations = validate_binding(&result, &project.table);
        if !violations.is_empty() {
            return Err(ApiError::invalid("corrected binding is invalid", violations));
        }
        Ok(CurationRecord {
            id: entry.id.clone(),
            timestamp: entry.timestamp,
            project_id: project.id.clone(),
            narrative_id: entry.narrative_id.clone(),
            text: text.to_string(),
            table_digest: project.table.digest(),
            marked: mark.span,
            expected_output: to_wire(&result),
        })
    }

    /// Charts of the project in narrative order.
    fn ordered_specs(project: &Project) -> Vec<&LayeredChartSpec> {
        let mut specs: Vec<&LayeredChartSpec> = project.chart_specs.values().collect();
        specs.sort_by_key(|s| s.order);
        specs
    }

    pub fn export(&self, id: &str, format: ExportFormat) -> Result<Export, ApiError> {
        let project = self.project(id)?;
        let specs = Self::ordered_specs(&project);
        if specs.is_empty() {
            return Err(ApiError::Conflict(format!("project {id} has no charts to export")));
        }
        let scale = self.config.pipeline.png_scale;
        let internal = |e: String| ApiError::Internal(e);
        let mut pngs = Vec::with_capacity(specs.len());
        for s in &specs {
            let svg = s.render_svg(&project.table, &self.config.palette).map_err(|e| internal(e.to_string()))?;
            pngs.push(render_png(&svg, scale).map_err(|e| internal(e.to_string()))?);
        }
        match format {
            ExportFormat::Gif => Ok(Export {
                content_type: "image/gif",
                file_name: format!("{id}.gif"),
                bytes: export_gif(&pngs, self.config.pipeline.chart.frame_duration_ms).map_err(|e| internal(e.to_string()))?,
            }),
            ExportFormat::PngArchive => {
                let mut zip = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
                let options =
                    zip::write::SimpleFileOptions::default().compression_method(zip::CompressionMethod::Stored);
                for (s, png) in specs.iter().zip(&pngs) {
                    zip.start_file(format!("{:02}-{}.png", s.order + 1, s.narrative_id), options)
                        .map_err(|e| internal(e.to_string()))?;
                    zip.write_all(png).map_err(|e| internal(e.to_string()))?;
                }
                let bytes = zip.finish().map_err(|e| internal(e.to_string()))?.into_inner();
                Ok(Export {
                    content_type: "application/zip",
                    file_name: format!("{id}.zip"),
                    bytes,
                })
            }
        }
    }

    /// SVG of chart `{project}-{narrative}`.
    pub fn chart_svg(&self, chart_id: &str) -> Result<String, ApiError> {
        let (pid, nid) = chart_id
            .split_once('-')
            .ok_or_else(|| ApiError::NotFound(format!("unknown chart {chart_id}")))?;
        let project = self.project(pid)?;
        let spec = project
            .chart_specs
            .get(nid)
            .ok_or_else(|| ApiError::NotFound(format!("unknown chart {chart_id}")))?;
        spec.render_svg(&project.table, &self.config.palette)
            .map_err(|e| ApiError::Internal(e.to_string()))
    }

    /// Appended curation records (in-memory mode keeps them here only).
    pub fn curation_records(&self) -> Vec<CurationRecord> {
        self.curation.appended()
    }
}

/// Chart id used by `/v1/charts/{id}.svg`.
pub fn chart_id(project_id: &str, narrative_id: &str) -> String {
    format!("{project_id}-{narrative_id}")
}
