//! End-to-end run over one article: segment, bind every narrative, sequence
//! the charts, and render them.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::binder::{
    annotate, bind, segment_narratives, segment_with_provider, BindConfig, BindContext, BindError, BindOutcome,
    LlmProvider, Narrative, PromptDb,
};
use crate::binding::{BindingResult, VocabSpan};
use crate::overlay::Palette;
use crate::render::{
    export_gif, render_png, sequence_charts, ChartConfig, GifError, LayeredChartSpec, RasterError, RenderError,
};
use crate::table::{validate_table, DataTable};
use crate::trend::Lexicon;
use crate::wire::to_wire;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid table: {}", .0.join("; "))]
    InvalidTable(Vec<String>),
    #[error(transparent)]
    Bind(#[from] BindError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Gif(#[from] GifError),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub bind: BindConfig,
    pub chart: ChartConfig,
    /// Ask the provider to segment the article; the heuristic segmentation
    /// is used when off or when the answer does not reconstruct the article.
    pub llm_segmentation: bool,
    /// Worker threads for binding; 0 uses rayon's default.
    pub jobs: usize,
    pub png_scale: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            bind: BindConfig::default(),
            chart: ChartConfig::default(),
            llm_segmentation: false,
            jobs: 0,
            png_scale: 1.0,
        }
    }
}

/// Binding outcome of one narrative.
#[derive(Debug, Clone)]
pub struct NarrativeRun {
    pub narrative: Narrative,
    pub outcome: Result<BindOutcome, BindError>,
    pub spans: Vec<VocabSpan>,
}

impl NarrativeRun {
    pub fn result(&self) -> Option<&BindingResult> {
        self.outcome.as_ref().ok().map(|o| &o.result)
    }

    /// A configured provider did not produce this narrative's binding.
    pub fn degraded(&self) -> bool {
        self.outcome.as_ref().map_or(true, |o| o.degraded)
    }

    /// The binding document in wire format, if binding succeeded.
    pub fn wire(&self) -> Option<String> {
        self.result().map(to_wire)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub table: DataTable,
    pub runs: Vec<NarrativeRun>,
    /// One chart per narrative, in narrative order.
    pub charts: Vec<LayeredChartSpec>,
    pub notes: Vec<String>,
}

/// Segmentation result plus the reason provider segmentation was not used.
pub fn segment(
    article: &str,
    table: &DataTable,
    provider: &dyn LlmProvider,
    config: &PipelineConfig,
) -> Result<(Vec<Narrative>, Option<String>), BindError> {
    if config.llm_segmentation && !provider.is_null() {
        segment_with_provider(article, table, provider, config.bind.timeout)
    } else {
        Ok((segment_narratives(article, table)?, None))
    }
}

/// Binds each narrative, in parallel on up to `jobs` threads. Output order
/// follows input order.
pub fn bind_all(narratives: &[Narrative], ctx: &BindContext<'_>, jobs: usize) -> Vec<NarrativeRun> {
    let work = || {
        narratives
            .par_iter()
            .map(|n| {
                let outcome = bind(n, ctx);
                let spans = outcome
                    .as_ref()
                    .map(|o| annotate(&n.text, &o.result, ctx.table))
                    .unwrap_or_default();
                NarrativeRun {
                    narrative: n.clone(),
                    outcome,
                    spans,
                }
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) if jobs > 0 => pool.install(work),
        _ => work(),
    }
}

pub fn run_pipeline(
    article: &str,
    table: &DataTable,
    provider: &dyn LlmProvider,
    db: &PromptDb,
    lexicon: &Lexicon,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let violations = validate_table(table);
    if !violations.is_empty() {
        return Err(PipelineError::InvalidTable(violations));
    }
    let (narratives, seg_note) = segment(article, table, provider, config)?;
    let ctx = BindContext {
        table,
        provider,
        db,
        lexicon,
        config: config.bind.clone(),
    };
    let runs = bind_all(&narratives, &ctx, config.jobs);
    let bindings: Vec<(Narrative, Result<BindingResult, BindError>)> = runs
        .iter()
        .map(|r| (r.narrative.clone(), r.outcome.clone().map(|o| o.result)))
        .collect();
    let charts = sequence_charts(&bindings, table, &config.chart, lexicon)?;
    let mut notes: Vec<String> = seg_note.into_iter().map(|n| format!("segmentation: {n}")).collect();
    for r in &runs {
        match &r.outcome {
            Ok(o) => notes.extend(o.notes.iter().map(|n| format!("{}: {n}", r.narrative.id))),
            Err(e) => notes.push(format!("{}: {e}", r.narrative.id)),
        }
    }
    Ok(PipelineOutput {
        table: table.clone(),
        runs,
        charts,
        notes,
    })
}

impl PipelineOutput {
    /// True when any narrative fell back or failed while a provider was configured,
    /// or failed to bind at all.
    pub fn degraded(&self) -> bool {
        self.runs.iter().any(NarrativeRun::degraded)
    }

    pub fn svgs(&self, palette: &Palette) -> Result<Vec<String>, RenderError> {
        self.charts.par_iter().map(|c| c.render_svg(&self.table, palette)).collect()
    }

    pub fn pngs(&self, palette: &Palette, scale: f64) -> Result<Vec<Vec<u8>>, PipelineError> {
        self.svgs(palette)?
            .par_iter()
            .map(|svg| render_png(svg, scale).map_err(PipelineError::from))
            .collect()
    }

    pub fn gif(&self, palette: &Palette, scale: f64, frame_ms: u32) -> Result<Vec<u8>, PipelineError> {
        Ok(export_gif(&self.pngs(palette, scale)?, frame_ms)?)
    }

    /// Per-narrative summary for reports.
    pub fn summary(&self) -> Vec<RunSummary> {
        self.runs
            .iter()
            .map(|r| RunSummary {
                id: r.narrative.id.clone(),
                order: r.narrative.order,
                text: r.narrative.text.clone(),
                source: r.outcome.as_ref().ok().map(|o| format!("{:?}", o.source).to_lowercase()),
                degraded: r.degraded(),
                records: r.result().map_or(0, |b| b.records.len()),
                error: r.outcome.as_ref().err().map(ToString::to_string),
                spans: r.spans.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub id: String,
    pub order: usize,
    pub text: String,
    pub source: Option<String>,
    pub degraded: bool,
    pub records: usize,
    pub error: Option<String>,
    pub spans: Vec<VocabSpan>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binder::NullProvider;
    use crate::corpus::{power_table, POWER_ARTICLE};
    use crate::render::{gif_frame_count, png_dimensions, Size};

    fn run() -> PipelineOutput {
        run_pipeline(
            POWER_ARTICLE,
            &power_table(),
            &NullProvider,
            &PromptDb::bundled(),
            &Lexicon::default(),
            &PipelineConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn power_article_gives_five_ordered_charts() {
        let out = run();
        assert_eq!(out.runs.len(), 5);
        assert_eq!(out.charts.iter().map(|c| c.order).collect::<Vec<_>>(), [0, 1, 2, 3, 4]);
        assert!(out.runs.iter().all(|r| r.result().is_some()));
        assert!(!out.degraded());
        let hints: Vec<_> = out.runs.iter().map(|r| r.narrative.subject_hint.clone().unwrap()).collect();
        assert_eq!(hints.len(), 5);
        assert!(hints[0].starts_with("Renewables"));
    }

    #[test]
    fn gif_has_one_frame_per_narrative() {
        let out = run();
        let pngs = out.pngs(&Palette::default(), 0.5).unwrap();
        assert_eq!(png_dimensions(&pngs[0]).unwrap(), (400, 225));
        let gif = out.gif(&Palette::default(), 0.5, 2000).unwrap();
        assert_eq!(gif_frame_count(&gif).unwrap(), 5);
        assert_eq!(Size::default(), out.charts[0].canvas);
    }

    #[test]
    fn jobs_do_not_change_results() {
        let cfg = PipelineConfig {
            jobs: 3,
            ..PipelineConfig::default()
        };
        let a = run();
        let b = run_pipeline(POWER_ARTICLE, &power_table(), &NullProvider, &PromptDb::bundled(), &Lexicon::default(), &cfg)
            .unwrap();
        assert_eq!(a.charts, b.charts);
    }

    #[test]
    fn invalid_table_is_rejected() {
        let t = DataTable::new("t", vec![], vec![]);
        let e = run_pipeline("Sales rose.", &t, &NullProvider, &PromptDb::bundled(), &Lexicon::default(), &PipelineConfig::default());
        assert!(matches!(e, Err(PipelineError::InvalidTable(_))));
    }
}
