//! Resource documents served under `/v1`.

use std::collections::BTreeMap;

use narrachart::binder::{BindOutcome, BindSource, Narrative};
use narrachart::render::LayeredChartSpec;
use narrachart::wire::to_wire;
use narrachart::{BindingRecord, BindingResult, DataTable, VocabKind, VocabSpan};
use serde::{Deserialize, Serialize};

/// Binding of one narrative as served: structured records plus the same
/// document in wire form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NarrativeBinding {
    pub result: BindingResult,
    pub wire: String,
    pub source: BindSource,
    pub degraded: bool,
    #[serde(default)]
    pub notes: Vec<String>,
    /// Number of least-similar examples dropped from the prompt.
    #[serde(default)]
    pub variant: usize,
}

impl NarrativeBinding {
    pub fn from_outcome(outcome: BindOutcome, variant: usize) -> Self {
        Self {
            wire: to_wire(&outcome.result),
            result: outcome.result,
            source: outcome.source,
            degraded: outcome.degraded,
            notes: outcome.notes,
            variant,
        }
    }
}

/// Keys of `bindings`, `chart_specs` and `errors` are narrative ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Project {
    pub id: String,
    pub table: DataTable,
    pub article: String,
    pub narratives: Vec<Narrative>,
    pub bindings: BTreeMap<String, NarrativeBinding>,
    pub chart_specs: BTreeMap<String, LayeredChartSpec>,
    #[serde(default)]
    pub errors: BTreeMap<String, String>,
    #[serde(default)]
    pub notes: Vec<String>,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
}

impl Project {
    pub fn narrative(&self, id: &str) -> Option<&Narrative> {
        self.narratives.iter().find(|n| n.id == id)
    }

    /// Violations of the key invariant; empty when it holds.
    pub fn violations(&self) -> Vec<String> {
        let known = |k: &String| self.narrative(k).is_some();
        let mut out = Vec::new();
        for (what, keys) in [
            ("binding", self.bindings.keys().collect::<Vec<_>>()),
            ("chart spec", self.chart_specs.keys().collect()),
            ("error", self.errors.keys().collect()),
        ] {
            out.extend(keys.into_iter().filter(|k| !known(k)).map(|k| format!("{what} for unknown narrative {k}")));
        }
        out
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateProject {
    #[serde(default)]
    pub name: Option<String>,
    /// Structured table document.
    #[serde(default)]
    pub table: Option<DataTable>,
    /// CSV text; used when `table` is absent.
    #[serde(default)]
    pub table_csv: Option<String>,
    pub article: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Mark,
    ThumbsUp,
    ThumbsDown,
}

/// A marked region of the narrative, optionally with the record the user
/// says it should bind to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarkPayload {
    pub span: VocabSpan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<BindingRecord>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeedbackRequest {
    pub kind: FeedbackKind,
    #[serde(default)]
    pub payload: serde_json::Value,
}

/// Mark entries carry a [`MarkPayload`] with a non-empty region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeedbackEntry {
    pub id: String,
    pub kind: FeedbackKind,
    pub project_id: String,
    pub narrative_id: String,
    pub payload: serde_json::Value,
    pub timestamp: u64,
}

/// How the authoring UI draws a span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Display {
    Background,
    Underline,
    Box,
}

impl Display {
    pub fn of(kind: VocabKind) -> Self {
        match kind {
            VocabKind::Subject => Display::Background,
            VocabKind::Numerical => Display::Underline,
            VocabKind::Trend => Display::Box,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnotatedSpan {
    #[serde(flatten)]
    pub span: VocabSpan,
    pub display: Display,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Annotations {
    pub narrative_id: String,
    pub text: String,
    pub reason: Option<String>,
    pub spans: Vec<AnnotatedSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BindingReply {
    pub narrative_id: String,
    pub binding: NarrativeBinding,
    pub spec: LayeredChartSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeedbackReply {
    pub entry: FeedbackEntry,
    /// Set when thumbs-down triggered a regeneration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regenerated: Option<BindingReply>,
}
