mod common;

use common::oracle_detect;
use narrachart::trend::{detect_pattern, verify_span, window_score, DetectorParams};
use narrachart::PatternId;
use proptest::prelude::*;

fn series_strategy() -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(
        prop_oneof![9 => (0u8..=4).prop_map(|v| Some(v as f64)), 1 => Just(None)],
        1..=12,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1500))]

    #[test]
    fn detector_matches_window_scan(series in series_strategy()) {
        let params = DetectorParams::default();
        for p in PatternId::ALL {
            let got = detect_pattern(&series, p, &params).ok();
            let want = oracle_detect(&series, p, &params);
            prop_assert_eq!(got, want, "pattern {}", p);
        }
    }

    #[test]
    fn shape_detection_ignores_positive_affine_maps(
        series in series_strategy(),
        scale_exp in -2i32..=3,
        shift in -50i32..=50,
    ) {
        let params = DetectorParams::default();
        let a = 2f64.powi(scale_exp);
        let mapped: Vec<Option<f64>> = series.iter().map(|v| v.map(|x| a * x + shift as f64)).collect();
        for p in PatternId::ALL.into_iter().filter(|p| p.is_shape()) {
            let rows = |s: &[Option<f64>]| detect_pattern(s, p, &params)
                .map(|v| v.iter().map(|s| (s.start_row, s.end_row)).collect::<Vec<_>>())
                .ok();
            prop_assert_eq!(rows(&series), rows(&mapped), "pattern {}", p);
        }
    }

    #[test]
    fn detected_spans_verify_and_rejected_maximal_windows_overlap_a_better_one(series in series_strategy()) {
        let params = DetectorParams::default();
        for p in PatternId::ALL {
            let Ok(spans) = detect_pattern(&series, p, &params) else { continue };
            for s in &spans {
                prop_assert!(verify_span(&series, p, s, &params));
            }
            let n = series.len();
            for a in 1..=n {
                for b in a..=n {
                    let Some(score) = window_score(&series, p, a, b, &params) else { continue };
                    let in_output = spans.iter().any(|s| (s.start_row, s.end_row) == (a, b));
                    let blocked = spans.iter().any(|s| {
                        (s.start_row <= a && b <= s.end_row)
                            || (a < s.end_row && s.start_row < b && s.score >= score)
                    });
                    prop_assert!(in_output || blocked, "{} window {}..{} neither detected nor dominated", p, a, b);
                }
            }
        }
    }

    #[test]
    fn detection_is_deterministic(series in series_strategy()) {
        let params = DetectorParams::default();
        for p in PatternId::ALL {
            prop_assert_eq!(detect_pattern(&series, p, &params), detect_pattern(&series, p, &params));
        }
    }
}
