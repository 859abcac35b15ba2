//! Binds financial narrative vocabulary to table cells and compiles the
//! bindings into layered charts: base charts with graphical overlays.

pub mod binder;
pub mod binding;
pub mod color;
pub mod corpus;
pub mod metrics;
pub mod overlay;
pub mod pipeline;
pub mod render;
pub mod scaling;
pub mod table;
pub mod trend;
pub mod wire;

pub use binding::{validate_binding, BindingRecord, BindingResult, CellRef, VocabKind, VocabSpan};
pub use table::{validate_table, Cell, ColumnKind, ColumnMeta, DataTable};
pub use metrics::{evaluate, f1_score, EvalReport, Label, LabelSet, Metrics};
pub use trend::{Lexicon, PatternId, TrendKind};
