//! Inputs shared by the benchmarks.

use narrachart::binder::{NullProvider, PromptDb};
use narrachart::corpus::{power_table, POWER_ARTICLE};
use narrachart::pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
use narrachart::scaling::grow_table;
use narrachart::{DataTable, Lexicon};

pub const HEDGE_TEXT: &str = "The number of active China-focused hedge funds has first reached 669, while only five new \
funds launched this year as of June and another 18 funds were liquidated.";

pub fn hedge_table() -> DataTable {
    DataTable::from_csv_str(
        "hedge",
        "Period,Active,Launches,Liquidations\nH1 2021,610,5,20\nH1 2022,640,9,18\nH1 2023,669,12,25\n",
    )
    .expect("hedge table parses")
}

/// The power table grown to `rows` x `cols` for size sweeps.
pub fn grown_table(rows: usize, cols: usize) -> DataTable {
    grow_table(&power_table(), rows, cols, 7).expect("power table grows")
}

/// Offline run over the sample article.
pub fn power_run() -> PipelineOutput {
    run_pipeline(
        POWER_ARTICLE,
        &power_table(),
        &NullProvider,
        &PromptDb::bundled(),
        &Lexicon::default(),
        &PipelineConfig::default(),
    )
    .expect("sample article runs")
}
