use std::time::Duration;

use narrachart::binder::{
    bind, segment_narratives, select_examples, BindConfig, BindContext, LlmProvider, Narrative, PromptDb, PromptSequence,
    ProviderError, RetrievalConfig,
};
use narrachart::corpus::power_table;
use narrachart::metrics::{f1_score, Metrics};
use narrachart::wire::{parse_wire, to_wire};
use narrachart::{validate_binding, BindingRecord, BindingResult, CellRef, DataTable, Lexicon};
use proptest::prelude::*;

fn columns(table: &DataTable) -> Vec<String> {
    table.numeric_columns().map(|c| c.name.clone()).collect()
}

// No ':' so the text can never fake a `Reason:` key.
const TEXT: &str = "[A-Za-z0-9 ,.%$'\"-]{1,30}";

fn record_strategy() -> impl Strategy<Value = BindingRecord> {
    (
        TEXT,
        TEXT,
        1usize..40,
        0usize..5,
        // Blank and null-like trends read back as absent by design.
        prop::option::of("[a-z]{5,9}( [a-z]{2,9})?"),
        prop::collection::vec(-99999i64..99999, 1..4),
        TEXT,
    )
        .prop_map(|(object, column, start, len, trend, nums, text)| {
            let (trend, num) = match trend {
                Some(t) => (Some(t), None),
                None => (None, Some(nums.into_iter().map(|v| v as f64 / 10.0).collect())),
            };
            BindingRecord {
                object_name: object,
                data_name: column.clone(),
                position: [CellRef::new(column.clone(), start), CellRef::new(column, start + len)],
                trend,
                num,
                text,
            }
        })
}

fn result_strategy() -> impl Strategy<Value = BindingResult> {
    (prop::collection::vec(record_strategy(), 0..5), TEXT).prop_map(|(records, reason)| BindingResult { records, reason })
}

/// Records aimed at the power table, valid or not.
fn power_record_strategy() -> impl Strategy<Value = BindingRecord> {
    let cols = columns(&power_table());
    (
        prop::sample::select(cols),
        prop::sample::select(vec!["Coal", "Gas", ""]),
        0usize..12,
        0usize..12,
        prop::option::of(prop::sample::select(vec!["steady rise", "decline", "peak", ""])),
        prop::option::of(prop::collection::vec(prop_oneof![Just(f64::NAN), -500.0..500.0f64], 0..3)),
        any::<bool>(),
    )
        .prop_map(|(column, other, a, b, trend, num, cross)| BindingRecord {
            object_name: other.to_string(),
            data_name: if cross && !other.is_empty() { other.to_string() } else { column.clone() },
            position: [CellRef::new(column.clone(), a), CellRef::new(column, b)],
            trend: trend.map(str::to_string),
            num,
            text: "x".into(),
        })
}

/// A provider that answers with whatever it was built with.
struct Scripted(String);

impl LlmProvider for Scripted {
    fn name(&self) -> &str {
        "scripted"
    }

    fn send(&self, _: &PromptSequence, _: Duration) -> Result<String, ProviderError> {
        Ok(self.0.clone())
    }
}

fn answer_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        ".{0,200}",
        prop::collection::vec(power_record_strategy(), 0..4).prop_map(|records| to_wire(&BindingResult {
            records,
            reason: "because".into()
        })),
        prop::collection::vec(power_record_strategy(), 1..4).prop_map(|records| to_wire(&BindingResult {
            records,
            reason: String::new()
        })),
    ]
}

const SUBJECT_SENTENCES: [&str; 8] = [
    "Renewables generation rises to 170 billion kWh by 2030.",
    "Coal output falls steadily.",
    "LNG climbs to 176 in 2035.",
    "Nuclear stays near 100.",
    "Oil declines sharply.",
    "Analysts expect more of the same.",
    "The outlook is mixed.",
    "Coal reaches its lowest level.",
];

const SUBJECTLESS: [usize; 2] = [5, 6];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn wire_round_trips(result in result_strategy()) {
        let back = parse_wire(&to_wire(&result)).expect("written documents parse");
        prop_assert_eq!(back, result);
    }

    #[test]
    fn count_f1_equals_harmonic_mean(tp in 0u64..10_000, fp in 0u64..10_000, fn_ in 0u64..10_000) {
        let m = Metrics::from_counts(tp, fp, fn_);
        prop_assert!((m.f1 - f1_score(m.precision, m.recall)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&m.f1));
    }

    #[test]
    fn validation_is_total_and_accepts_only_resolvable_records(
        records in prop::collection::vec(power_record_strategy(), 0..6)
    ) {
        let table = power_table();
        let result = BindingResult { records: records.clone(), reason: "r".into() };
        let violations = validate_binding(&result, &table);
        let rows = table.row_count();
        let ok = |r: &BindingRecord| {
            r.trend.is_some() != r.num.is_some()
                && r.num.as_ref().is_none_or(|n| !n.is_empty() && n.iter().all(|v| v.is_finite()))
                && !r.object_name.trim().is_empty()
                && table.resolves_column(&r.data_name)
                && r.position.iter().all(|c| c.column == r.data_name && (1..=rows).contains(&c.row))
                && r.start_row() <= r.end_row()
        };
        if violations.is_empty() {
            prop_assert!(records.iter().all(ok));
        } else {
            prop_assert!(!records.iter().all(ok));
        }
    }

    #[test]
    fn binding_always_yields_a_valid_result(answer in answer_strategy(), which in 0usize..8) {
        let table = power_table();
        let provider = Scripted(answer);
        let db = PromptDb::bundled();
        let lexicon = Lexicon::default();
        let ctx = BindContext { table: &table, provider: &provider, db: &db, lexicon: &lexicon, config: BindConfig::default() };
        let narrative = Narrative { id: "n0".into(), order: 0, text: SUBJECT_SENTENCES[which].into(), subject_hint: None };
        match bind(&narrative, &ctx) {
            Ok(outcome) => prop_assert!(validate_binding(&outcome.result, &table).is_empty()),
            // Only a narrative naming no column may fail.
            Err(e) => prop_assert!(SUBJECTLESS.contains(&which), "{}", e),
        }
    }

    #[test]
    fn selection_returns_min_k_most_similar_in_ascending_order(text in "[a-z ]{0,60}", k in 0usize..30) {
        let db = PromptDb::bundled();
        let picked = select_examples(&text, &db, &RetrievalConfig { k, ..Default::default() });
        prop_assert_eq!(picked.len(), k.min(db.len()));
        let sims = db.similarities(&text);
        let sim_of = |id: &str| sims[db.examples().iter().position(|e| e.id == id).unwrap()];
        let got: Vec<f64> = picked.iter().map(|e| sim_of(&e.id)).collect();
        prop_assert!(got.windows(2).all(|w| w[0] <= w[1]));
        if let Some(&lowest) = got.first() {
            let better_left_out = db
                .examples()
                .iter()
                .filter(|e| !picked.iter().any(|p| p.id == e.id))
                .any(|e| sim_of(&e.id) > lowest);
            prop_assert!(!better_left_out);
        }
    }

    #[test]
    fn segmentation_partitions_the_article(picks in prop::collection::vec(0usize..8, 1..10)) {
        let article = picks.iter().map(|&i| SUBJECT_SENTENCES[i]).collect::<Vec<_>>().join(" ");
        let parts = segment_narratives(&article, &power_table()).unwrap();
        let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        let joined: String = parts.iter().map(|n| n.text.as_str()).collect();
        prop_assert_eq!(strip(&joined), strip(&article));
        prop_assert!(parts.iter().enumerate().all(|(i, n)| n.order == i && !n.text.trim().is_empty()));
    }
}
