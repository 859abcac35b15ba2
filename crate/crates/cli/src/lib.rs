//! Batch front door over the engine. `run` parses arguments and returns the
//! process exit code; nothing here calls `std::process::exit`.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use narrachart::binder::{
    annotate, bind, output_template, provider_from_name, request_key_parts, BindConfig, BindContext, LimitedProvider,
    LlmProvider, Narrative, PromptDb,
};
use narrachart::corpus::{Corpus, EXPECTED_REPORT};
use narrachart::overlay::Palette;
use narrachart::pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
use narrachart::render::{ChartConfig, ChartType, Size};
use narrachart::scaling::{grid_csv, run_scaling, ScalingConfig, ScalingContext};
use narrachart::trend::{detect_pattern, DetectorParams, PatternId};
use narrachart::wire::to_wire;
use narrachart::{DataTable, EvalReport, LabelSet, Lexicon};
use narrachart_service::{promote, serve_blocking, Approval, Engine, ServiceConfig};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DEGRADED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "narrachart", version, about = "Turn financial narratives and their data table into layered charts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment an article, bind every narrative and write charts, bindings and a GIF.
    Pipeline(PipelineArgs),
    /// Bind one narrative and print its binding document.
    Bind(BindArgs),
    /// Per-kind precision, recall and F1 of predicted spans against gold spans.
    Eval(EvalArgs),
    /// Binding accuracy over a grid of table sizes.
    Scaling(ScalingArgs),
    /// Promote reviewed mark feedback into the prompt example database.
    Curate(CurateArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Print the fixture file stem a recorded response for this request must use.
    FixtureKey(FixtureKeyArgs),
    /// Locate a trend pattern in one table column.
    Detect(DetectArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BindOpts {
    /// null, fixture or http (http reads its endpoint from the environment).
    #[arg(long, default_value = "null")]
    pub provider: String,
    /// Recorded responses for the fixture provider.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Trend lexicon (JSON); the bundled one otherwise.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Prompt example database (JSONL); the bundled one otherwise.
    #[arg(long)]
    pub prompt_db: Option<PathBuf>,
    /// Examples retrieved per prompt.
    #[arg(long)]
    pub k: Option<usize>,
    /// Worker threads, and the cap on concurrent provider calls; 0 picks a default.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ChartOpts {
    /// Palette file (JSON).
    #[arg(long)]
    pub palette: Option<PathBuf>,
    /// single_line, multi_line, single_bar or multi_bar; chosen from the data otherwise.
    #[arg(long)]
    pub chart_type: Option<String>,
    /// Canvas size as WIDTHxHEIGHT.
    #[arg(long)]
    pub canvas: Option<String>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Article text file.
    #[arg(long)]
    pub text: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub bind: BindOpts,
    #[command(flatten)]
    pub chart: ChartOpts,
    /// Ask the provider to segment the article.
    #[arg(long)]
    pub llm_segmentation: bool,
    #[arg(long, default_value_t = 1.0)]
    pub png_scale: f64,
}

#[derive(Debug, Args)]
pub struct BindArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// The narrative itself.
    #[arg(long)]
    pub text: String,
    #[command(flatten)]
    pub bind: BindOpts,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted labels (JSON); with --bundled, the fallback binder predicts.
    #[arg(long, required_unless_present = "bundled")]
    pub pred: Option<PathBuf>,
    /// Gold labels (JSON).
    #[arg(long, required_unless_present = "bundled")]
    pub gold: Option<PathBuf>,
    /// Evaluate the fallback binder on the bundled corpus.
    #[arg(long, conflicts_with_all = ["pred", "gold"])]
    pub bundled: bool,
    /// With --bundled, fail unless the report equals the checked-in one.
    #[arg(long, requires = "bundled")]
    pub check: bool,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    /// Table the grid grows from.
    #[arg(long)]
    pub table: PathBuf,
    /// Grid file to write; stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Row counts as START..END (inclusive).
    #[arg(long, default_value = "20..200")]
    pub rows: String,
    #[arg(long, default_value_t = 20)]
    pub row_step: usize,
    /// Column counts as START..END (inclusive).
    #[arg(long, default_value = "2..10")]
    pub cols: String,
    #[arg(long, default_value_t = 1)]
    pub col_step: usize,
    #[arg(long, default_value_t = 10)]
    pub probes: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[command(flatten)]
    pub bind: BindOpts,
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    /// Curation log written by the service.
    #[arg(long)]
    pub store: PathBuf,
    /// Prompt database to append to; created when missing.
    #[arg(long)]
    pub db: PathBuf,
    /// Entry ids a reviewer accepted.
    #[arg(long, num_args = 1.., required_unless_present = "approve_all")]
    pub approve: Vec<String>,
    #[arg(long, conflicts_with = "approve")]
    pub approve_all: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Event log and curation directory; in memory otherwise.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub bind: BindOpts,
    #[command(flatten)]
    pub chart: ChartOpts,
}

#[derive(Debug, Args)]
pub struct FixtureKeyArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub text: String,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub column: String,
    /// Pattern id such as sharp_rise or peak.
    #[arg(long)]
    pub pattern: String,
}

/// A failed command and its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn input(e: impl Display) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: e.to_string(),
    }
}

fn context<E: Display>(what: impl Display) -> impl FnOnce(E) -> Failure {
    move |e| input(format!("{what}: {e}"))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Pipeline(a) => cmd_pipeline(&a, out, err),
        Command::Bind(a) => cmd_bind(&a, out, err),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Scaling(a) => cmd_scaling(&a, out),
        Command::Curate(a) => cmd_curate(&a, out, err),
        Command::Serve(a) => cmd_serve(&a, err),
        Command::FixtureKey(a) => {
            let table = load_table(&a.table)?;
            writeln!(out, "{}", request_key_parts(&output_template(), &table.digest(), &a.text)).map_err(input)?;
            Ok(EXIT_OK)
        }
        Command::Detect(a) => cmd_detect(&a, out),
    }
}

fn load_table(path: &Path) -> Result<DataTable, Failure> {
    DataTable::load_valid(path).map_err(context(path.display()))
}

pub fn parse_canvas(s: &str) -> Result<Size, String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("canvas {s:?} is not WIDTHxHEIGHT"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|n| n.is_finite() && *n > 0.0)
            .ok_or_else(|| format!("canvas {s:?} has a bad dimension {v:?}"))
    };
    Ok(Size {
        width: parse(w)?,
        height: parse(h)?,
    })
}

/// `A..B` or a single number, both inclusive.
pub fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<usize>, String> {
    let num = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("range {s:?} is not START..END"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => {
            let n = num(s)?;
            (n, n)
        }
    };
    if a > b {
        return Err(format!("range {s:?} is empty"));
    }
    Ok(a..=b)
}

/// Engine inputs shared by the binding commands.
pub struct Setup {
    pub provider: Box<dyn LlmProvider>,
    pub db: PromptDb,
    pub lexicon: Lexicon,
    pub bind: BindConfig,
}

impl BindOpts {
    pub fn setup(&self) -> Result<Setup, Failure> {
        let mut provider = provider_from_name(&self.provider, self.fixtures.as_deref()).map_err(input)?;
        if self.jobs > 0 {
            provider = Box::new(LimitedProvider::new(provider, self.jobs));
        }
        let db = match &self.prompt_db {
            Some(p) => PromptDb::load(p).map_err(context(p.display()))?,
            None => PromptDb::bundled(),
        };
        let lexicon = load_lexicon(self.lexicon.as_deref())?;
        let mut bind = BindConfig::default();
        if let Some(k) = self.k {
            bind.retrieval.k = k;
        }
        Ok(Setup {
            provider,
            db,
            lexicon,
            bind,
        })
    }
}

fn load_lexicon(path: Option<&Path>) -> Result<Lexicon, Failure> {
    match path {
        Some(p) => Lexicon::load(p).map_err(context(p.display())),
        None => Ok(Lexicon::default()),
    }
}

impl ChartOpts {
    pub fn chart_config(&self) -> Result<ChartConfig, Failure> {
        let mut config = ChartConfig::default();
        if let Some(t) = &self.chart_type {
            config.chart_type = Some(t.parse::<ChartType>().map_err(input)?);
        }
        if let Some(c) = &self.canvas {
            config.canvas = parse_canvas(c).map_err(input)?;
        }
        Ok(config)
    }

    pub fn palette(&self) -> Result<Palette, Failure> {
        match &self.palette {
            Some(p) => Palette::load(p).map_err(context(p.display())),
            None => Ok(Palette::default()),
        }
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(context(path.display()))
}

fn cmd_pipeline(a: &PipelineArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let table = load_table(&a.table)?;
    let article = std::fs::read_to_string(&a.text).map_err(context(a.text.display()))?;
    let setup = a.bind.setup()?;
    let palette = a.chart.palette()?;
    let config = PipelineConfig {
        bind: setup.bind.clone(),
        chart: a.chart.chart_config()?,
        llm_segmentation: a.llm_segmentation,
        jobs: a.bind.jobs,
        png_scale: a.png_scale,
    };
    let output = run_pipeline(&article, &table, setup.provider.as_ref(), &setup.db, &setup.lexicon, &config).map_err(input)?;
    write_outputs(&output, &palette, &config, &a.out)?;
    for note in &output.notes {
        let _ = writeln!(err, "note: {note}");
    }
    let _ = writeln!(
        out,
        "{} narratives, {} charts written to {}",
        output.runs.len(),
        output.charts.len(),
        a.out.display()
    );
    Ok(if output.degraded() { EXIT_DEGRADED } else { EXIT_OK })
}

/// Writes the run's artifacts; file names sort in narrative order.
pub fn write_outputs(output: &PipelineOutput, palette: &Palette, config: &PipelineConfig, dir: &Path) -> Result<(), Failure> {
    let bindings = dir.join("bindings");
    std::fs::create_dir_all(&bindings).map_err(context(bindings.display()))?;
    let svgs = output.svgs(palette).map_err(input)?;
    let pngs = output.pngs(palette, config.png_scale).map_err(input)?;
    for ((run, svg), png) in output.runs.iter().zip(&svgs).zip(&pngs) {
        let n = &run.narrative;
        let stem = format!("{:02}-{}", n.order + 1, n.id);
        write_file(&dir.join(format!("{stem}.svg")), svg)?;
        write_file(&dir.join(format!("{stem}.png")), png)?;
        if let Some(wire) = run.wire() {
            write_file(&bindings.join(format!("{}.txt", n.id)), wire)?;
        }
    }
    let gif = narrachart::render::export_gif(&pngs, config.chart.frame_duration_ms).map_err(input)?;
    write_file(&dir.join("sequence.gif"), gif)?;
    write_file(&dir.join("annotations.json"), pretty(&output.summary()))?;
    write_file(&dir.join("charts.json"), pretty(&output.charts))?;
    write_file(&dir.join("notes.txt"), output.notes.iter().map(|n| format!("{n}\n")).collect::<String>())?;
    Ok(())
}

fn pretty(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("outputs serialize") + "\n"
}

fn cmd_bind(a: &BindArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let table = load_table(&a.table)?;
    let setup = a.bind.setup()?;
    let ctx = BindContext {
        table: &table,
        provider: setup.provider.as_ref(),
        db: &setup.db,
        lexicon: &setup.lexicon,
        config: setup.bind.clone(),
    };
    let narrative = Narrative {
        id: "n0".into(),
        order: 0,
        text: a.text.clone(),
        subject_hint: None,
    };
    let outcome = bind(&narrative, &ctx).map_err(input)?;
    for note in &outcome.notes {
        let _ = writeln!(err, "note: {note}");
    }
    writeln!(out, "{}", to_wire(&outcome.result)).map_err(input)?;
    for span in annotate(&a.text, &outcome.result, &table) {
        let _ = writeln!(err, "span: {} {:?} [{}, {})", span.kind.as_str(), span.text, span.char_start, span.char_end);
    }
    Ok(if outcome.degraded { EXIT_DEGRADED } else { EXIT_OK })
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (pred, gold) = if a.bundled {
        let corpus = Corpus::bundled();
        (corpus.predict_fallback(&load_lexicon(a.lexicon.as_deref())?), corpus.gold())
    } else {
        let load = |p: &Option<PathBuf>| {
            let p = p.as_ref().expect("clap requires the path");
            LabelSet::load(p).map_err(context(p.display()))
        };
        (load(&a.pred)?, load(&a.gold)?)
    };
    let report = EvalReport::compute(&pred, &gold);
    let text = if a.json {
        pretty(&report)
    } else {
        report.to_table()
    };
    out.write_all(text.as_bytes()).map_err(input)?;
    if a.check && report.to_table() != EXPECTED_REPORT {
        return Err(Failure {
            code: EXIT_DEGRADED,
            message: "report differs from the checked-in expected report".into(),
        });
    }
    Ok(EXIT_OK)
}

fn cmd_scaling(a: &ScalingArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let table = load_table(&a.table)?;
    let setup = a.bind.setup()?;
    let config = ScalingConfig {
        cols: parse_range(&a.cols).map_err(input)?,
        col_step: a.col_step,
        rows: parse_range(&a.rows).map_err(input)?,
        row_step: a.row_step,
        probes_per_cell: a.probes,
        seed: a.seed,
    };
    let ctx = ScalingContext {
        provider: setup.provider.as_ref(),
        db: &setup.db,
        lexicon: &setup.lexicon,
        bind: setup.bind,
    };
    let cells = run_scaling(&table, &config, &ctx).map_err(input)?;
    let csv = grid_csv(&cells);
    match &a.out {
        Some(p) => write_file(p, csv)?,
        None => out.write_all(csv.as_bytes()).map_err(input)?,
    }
    Ok(EXIT_OK)
}

fn cmd_curate(a: &CurateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let approval = if a.approve_all {
        Approval::All
    } else {
        Approval::Ids(a.approve.iter().cloned().collect::<BTreeSet<_>>())
    };
    let report = promote(&a.store, &a.db, &approval).map_err(input)?;
    for (id, reason) in &report.skipped {
        let _ = writeln!(err, "warning: skipped {id}: {reason}");
    }
    writeln!(out, "{}", report.promoted.len()).map_err(input)?;
    Ok(EXIT_OK)
}

fn cmd_serve(a: &ServeArgs, err: &mut dyn Write) -> Result<i32, Failure> {
    let setup = a.bind.setup()?;
    let config = ServiceConfig {
        data_dir: a.data.clone(),
        provider: Arc::from(setup.provider),
        db: Arc::new(setup.db),
        lexicon: Arc::new(setup.lexicon),
        palette: a.chart.palette()?,
        pipeline: PipelineConfig {
            bind: setup.bind,
            chart: a.chart.chart_config()?,
            jobs: a.bind.jobs,
            ..PipelineConfig::default()
        },
    };
    let engine = Engine::open(config).map_err(input)?;
    let _ = writeln!(err, "listening on http://{}", a.addr);
    serve_blocking(a.addr, Arc::new(engine)).map_err(context(a.addr))?;
    Ok(EXIT_OK)
}

fn cmd_detect(a: &DetectArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let table = load_table(&a.table)?;
    let pattern: PatternId = a.pattern.parse().map_err(input)?;
    let series = table
        .numeric_series(&a.column)
        .ok_or_else(|| input(format!("{:?} is not a numeric column", a.column)))?;
    let spans = detect_pattern(&series, pattern, &DetectorParams::default()).map_err(input)?;
    let rows: Vec<_> = spans
        .iter()
        .map(|s| {
            serde_json::json!({
                "startRow": s.start_row,
                "endRow": s.end_row,
                "from": table.x_label(s.start_row),
                "to": table.x_label(s.end_row),
                "score": s.score,
            })
        })
        .collect();
    writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("json")).map_err(input)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canvas_parses_width_by_height() {
        let s = parse_canvas("640x360").unwrap();
        assert_eq!((s.width, s.height), (640.0, 360.0));
        for bad in ["640", "0x5", "ax5", "5x-1"] {
            assert!(parse_canvas(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn ranges_are_inclusive() {
        assert_eq!(parse_range("2..10").unwrap(), 2..=10);
        assert_eq!(parse_range("2..=4").unwrap(), 2..=4);
        assert_eq!(parse_range("7").unwrap(), 7..=7);
        assert!(parse_range("9..3").is_err());
        assert!(parse_range("a..3").is_err());
    }

    #[test]
    fn usage_errors_exit_two_and_help_exits_zero() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["narrachart", "pipeline"], &mut out, &mut err), EXIT_INPUT);
        assert_eq!(run(["narrachart", "--help"], &mut out, &mut err), EXIT_OK);
        assert_eq!(run(["narrachart", "curate", "--store", "a", "--db", "b"], &mut out, &mut err), EXIT_INPUT);
    }
}
