use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use narrachart::binder::{output_template, request_key_parts, FixtureProvider};
use narrachart::corpus::{power_table, POWER_ARTICLE};
use narrachart::overlay::{OverlayKind, Palette};
use narrachart::render::{gif_frame_count, png_dimensions, EditAction, EditOp, EditTarget, LayeredChartSpec, MoveParams};
use narrachart::DataTable;
use narrachart_service::{router, Engine, Project, ServiceConfig, CURATION_FILE, IDEMPOTENCY_HEADER};
use serde_json::{json, Value};
use tower::ServiceExt;

const HEDGE_CSV: &str = "Period,Active,Launches,Liquidations\nH1 2021,610,5,20\nH1 2022,640,9,18\nH1 2023,669,12,25\n";
const HEDGE_TEXT: &str = "The number of active China-focused hedge funds has first reached 669, while only five new \
funds launched this year as of June and another 18 funds were liquidated.";
const HEDGE_RESPONSE: &str = include_str!("../../core/data/appendix/hedge_fund_response.txt");
const HEDGE_SECOND: &str = r#"Result: {
    "ObjectName": "active China-focused hedge funds",
    "DataName": "Active",
    "Position": [["Active", 3], ["Active", 3]],
    "Trend": "None",
    "Num": [669],
    "Text": "active China-focused hedge funds has first reached 669"}
Reason: "Only the Active column is referenced with a value.""#;

struct Api {
    app: Router,
    engine: Arc<Engine>,
}

impl Api {
    fn new(config: ServiceConfig) -> Self {
        let engine = Arc::new(Engine::open(config).unwrap());
        Self {
            app: router(engine.clone()),
            engine,
        }
    }

    fn offline() -> Self {
        Self::new(ServiceConfig::default())
    }

    async fn raw(&self, method: &str, uri: &str, body: Option<Value>, key: Option<&str>) -> (StatusCode, String, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(k) = key {
            req = req.header(IDEMPOTENCY_HEADER, k);
        }
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(serde_json::to_vec(&v).unwrap())
            }
            None => Body::empty(),
        };
        let resp = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let ctype = resp
            .headers()
            .get("content-type")
            .map(|v| v.to_str().unwrap().to_string())
            .unwrap_or_default();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, ctype, bytes)
    }

    async fn json(&self, method: &str, uri: &str, body: Option<Value>, key: Option<&str>) -> (StatusCode, Value) {
        let (status, _, bytes) = self.raw(method, uri, body, key).await;
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    async fn create_power(&self) -> Project {
        let (status, body) = self
            .json("POST", "/v1/projects", Some(json!({"tableCsv": POWER_TABLE, "name": "power", "article": POWER_ARTICLE})), None)
            .await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        serde_json::from_value(body).unwrap()
    }
}

const POWER_TABLE: &str = include_str!("../../core/data/fixtures/power/table.csv");

fn text_overlay(spec: &LayeredChartSpec) -> String {
    spec.overlays
        .iter()
        .find(|o| o.kind.is_text())
        .map(|o| o.id.clone())
        .expect("chart has a text overlay")
}

fn hedge_fixtures(dir: &Path) {
    let table = DataTable::from_csv_str("hedge", HEDGE_CSV).unwrap();
    let key = request_key_parts(&output_template(), &table.digest(), HEDGE_TEXT);
    std::fs::write(dir.join(format!("{key}.1.txt")), HEDGE_RESPONSE).unwrap();
    std::fs::write(dir.join(format!("{key}.2.txt")), HEDGE_SECOND).unwrap();
}

fn hedge_api(fixtures: &Path, data: Option<&Path>) -> Api {
    hedge_fixtures(fixtures);
    Api::new(ServiceConfig {
        provider: Arc::new(FixtureProvider::new(fixtures)),
        data_dir: data.map(Path::to_path_buf),
        ..ServiceConfig::default()
    })
}

async fn create_hedge(api: &Api) -> Project {
    let (status, body) = api
        .json("POST", "/v1/projects", Some(json!({"tableCsv": HEDGE_CSV, "name": "hedge", "article": HEDGE_TEXT})), None)
        .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    serde_json::from_value(body).unwrap()
}

#[tokio::test]
async fn power_article_becomes_five_bound_narratives() {
    let api = Api::offline();
    let p = api.create_power().await;
    assert_eq!(p.narratives.len(), 5);
    assert_eq!(p.bindings.len(), 5);
    assert_eq!(p.chart_specs.len(), 5);
    assert!(p.violations().is_empty());
    let (status, body) = api.json("GET", &format!("/v1/projects/{}", p.id), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_value::<Project>(body).unwrap(), p);
}

#[tokio::test]
async fn invalid_uploads_are_rejected_with_details() {
    let api = Api::offline();
    let (status, body) = api
        .json("POST", "/v1/projects", Some(json!({"tableCsv": POWER_TABLE, "article": "  "})), None)
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "article is empty");
    let (status, body) = api
        .json("POST", "/v1/projects", Some(json!({"tableCsv": "Name,Kind\na,b\n", "article": "x"})), None)
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert!(!body["details"].as_array().unwrap().is_empty(), "{body}");
    let (status, _) = api.json("POST", "/v1/projects", Some(json!({"article": "x"})), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _, _) = api.raw("POST", "/v1/projects", None, None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(api.engine.project_ids().is_empty());
    let (status, _) = api.json("GET", "/v1/projects/p9", None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn annotations_carry_display_classes() {
    let fixtures = tempfile::tempdir().unwrap();
    let api = hedge_api(fixtures.path(), None);
    let p = create_hedge(&api).await;
    assert_eq!(p.narratives.len(), 1);
    let nid = &p.narratives[0].id;
    assert_eq!(format!("{:?}", p.bindings[nid].source), "Provider");
    let (status, body) = api
        .json("GET", &format!("/v1/projects/{}/narratives/{nid}/annotations", p.id), None, None)
        .await;
    assert_eq!(status, StatusCode::OK);
    let spans = body["spans"].as_array().unwrap();
    let num = spans.iter().find(|s| s["text"] == "669").expect("669 is annotated");
    assert_eq!(num["kind"], "numerical");
    assert_eq!(num["display"], "underline");
    let chars: Vec<char> = HEDGE_TEXT.chars().collect();
    let (a, b) = (num["charStart"].as_u64().unwrap() as usize, num["charEnd"].as_u64().unwrap() as usize);
    assert_eq!(chars[a..b].iter().collect::<String>(), "669");
    assert!(spans.iter().any(|s| s["kind"] == "subject" && s["display"] == "background"));
    let (status, _) = api
        .json("GET", &format!("/v1/projects/{}/narratives/n9/annotations", p.id), None, None)
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn regenerate_returns_the_next_recorded_response() {
    let fixtures = tempfile::tempdir().unwrap();
    let api = hedge_api(fixtures.path(), None);
    let p = create_hedge(&api).await;
    let nid = &p.narratives[0].id;
    assert_eq!(p.bindings[nid].result.records.len(), 3);
    let (status, body) = api
        .json("POST", &format!("/v1/projects/{}/narratives/{nid}/regenerate", p.id), None, None)
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["binding"]["result"]["records"].as_array().unwrap().len(), 1);
    assert_eq!(body["binding"]["variant"], 1);
    assert!(body["binding"]["wire"].as_str().unwrap().starts_with("Result:"));
    let (status, _) = api.json("POST", &format!("/v1/projects/{}/narratives/n7/regenerate", p.id), None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn null_provider_regeneration_is_stable() {
    let api = Api::offline();
    let p = api.create_power().await;
    let (status, body) = api.json("POST", &format!("/v1/projects/{}/narratives/n1/regenerate", p.id), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::to_value(&p.bindings["n1"].result).unwrap(), body["binding"]["result"]);
    let (_, body) = api.json("POST", &format!("/v1/projects/{}/narratives/n1/bind", p.id), None, None).await;
    assert_eq!(body["binding"]["variant"], 0);
}

#[tokio::test]
async fn edits_update_the_spec_and_unknown_targets_are_not_found() {
    let api = Api::offline();
    let p = api.create_power().await;
    let spec = &p.chart_specs["n1"];
    let id = text_overlay(spec);
    let uri = format!("/v1/projects/{}/narratives/n1/edits", p.id);
    let op = EditOp::new(EditTarget::Overlay { id: id.clone() }, EditAction::Move(MoveParams { x: Some(120.0), y: Some(60.0), ..Default::default() }));
    let (status, body) = api.json("POST", &uri, Some(serde_json::to_value(&op).unwrap()), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let edited: LayeredChartSpec = serde_json::from_value(body).unwrap();
    let moved = edited.overlays.iter().find(|o| o.id == id).unwrap();
    assert_eq!(moved.manual.position.map(|p| (p.x, p.y)), Some((120.0, 60.0)));
    assert_eq!(edited.user_edits, [op]);

    let bg = json!({"target": {"kind": "canvas"}, "action": "add_overlay", "params": {"spec": {
        "id": "", "kind": "background", "target": {"columns": ["Coal"], "startRow": 1, "endRow": 3}}}});
    let (status, body) = api.json("POST", &uri, Some(bg), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let edited: LayeredChartSpec = serde_json::from_value(body).unwrap();
    assert!(edited.overlays.iter().any(|o| o.kind == OverlayKind::Background));

    let missing = json!({"target": {"kind": "overlay", "id": "nope"}, "action": "remove_overlay"});
    let (status, _) = api.json("POST", &uri, Some(missing), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let bad = json!({"target": {"kind": "title"}, "action": "move", "params": {}});
    let (status, _) = api.json("POST", &uri, Some(bad), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(api.engine.project(&p.id).unwrap().chart_specs["n1"].user_edits.len(), 2);
}

#[tokio::test]
async fn op_log_replays_to_the_current_spec() {
    let api = Api::offline();
    let p = api.create_power().await;
    let uri = format!("/v1/projects/{}/narratives/n2/edits", p.id);
    let ops = [
        json!({"target": {"kind": "title"}, "action": "set_text", "params": {"text": "LNG outlook"}}),
        json!({"target": {"kind": "series", "column": "LNG"}, "action": "resize", "params": {}}),
        json!({"target": {"kind": "series", "column": "LNG"}, "action": "recolor", "params": {"color": "#112233"}}),
        json!({"target": {"kind": "canvas"}, "action": "resize", "params": {"width": 640, "height": 400}}),
        json!({"target": {"kind": "legend"}, "action": "move", "params": {"dx": 10, "dy": 5}}),
    ];
    for op in ops {
        api.json("POST", &uri, Some(op), None).await;
    }
    let now = api.engine.project(&p.id).unwrap().chart_specs["n2"].clone();
    let mut replay = p.chart_specs["n2"].clone();
    for op in &now.user_edits {
        replay.apply_logged_edit(op, &p.table, &Palette::default()).unwrap();
    }
    assert_eq!(replay, now);
    assert!(now.user_edits.len() >= 4);
}

#[tokio::test]
async fn feedback_kinds_have_their_effects() {
    let fixtures = tempfile::tempdir().unwrap();
    let data = tempfile::tempdir().unwrap();
    let api = hedge_api(fixtures.path(), Some(data.path()));
    let p = create_hedge(&api).await;
    let nid = p.narratives[0].id.clone();
    let uri = format!("/v1/projects/{}/narratives/{nid}/feedback", p.id);
    let curation = data.path().join(CURATION_FILE);
    let lines = || std::fs::read_to_string(&curation).map_or(0, |s| s.lines().count());

    let (status, body) = api.json("POST", &uri, Some(json!({"kind": "thumbs_up"})), None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["entry"]["id"], "f1");
    assert!(body.get("regenerated").is_none());
    assert_eq!(api.engine.project(&p.id).unwrap().bindings, p.bindings);
    assert_eq!(lines(), 0);

    let start = HEDGE_TEXT.find("five").unwrap();
    let mark = json!({"kind": "mark", "payload": {"span": {"kind": "numerical", "text": "five", "charStart": start, "charEnd": start + 4}}});
    let (status, body) = api.json("POST", &uri, Some(mark), None).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(lines(), 1);

    let empty = json!({"kind": "mark", "payload": {"span": {"kind": "numerical", "text": "", "charStart": 3, "charEnd": 3}}});
    let (status, _) = api.json("POST", &uri, Some(empty), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(lines(), 1);

    let (status, body) = api.json("POST", &uri, Some(json!({"kind": "thumbs_down"})), None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["regenerated"]["binding"]["result"]["records"].as_array().unwrap().len(), 1);
    let records = narrachart_service::read_curation(&curation).unwrap();
    assert!(records.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
}

#[tokio::test]
async fn retries_with_the_same_key_do_not_repeat_mutations() {
    let api = Api::offline();
    let body = json!({"tableCsv": POWER_TABLE, "article": POWER_ARTICLE});
    let (s1, b1) = api.json("POST", "/v1/projects", Some(body.clone()), Some("req-1")).await;
    let (s2, b2) = api.json("POST", "/v1/projects", Some(body.clone()), Some("req-1")).await;
    assert_eq!((s1, s2), (StatusCode::CREATED, StatusCode::CREATED));
    assert_eq!(b1, b2);
    assert_eq!(api.engine.project_ids().len(), 1);
    let other = json!({"tableCsv": POWER_TABLE, "article": "Coal falls."});
    let (s3, _) = api.json("POST", "/v1/projects", Some(other), Some("req-1")).await;
    assert_eq!(s3, StatusCode::CONFLICT);

    let id = b1["id"].as_str().unwrap();
    let uri = format!("/v1/projects/{id}/narratives/n0/edits");
    let op = json!({"target": {"kind": "title"}, "action": "set_text", "params": {"text": "Mix"}});
    for _ in 0..3 {
        let (s, _) = api.json("POST", &uri, Some(op.clone()), Some("edit-1")).await;
        assert_eq!(s, StatusCode::OK);
    }
    assert_eq!(api.engine.project(id).unwrap().chart_specs["n0"].user_edits.len(), 1);
    let fb = format!("/v1/projects/{id}/narratives/n0/feedback");
    for _ in 0..2 {
        api.json("POST", &fb, Some(json!({"kind": "thumbs_up"})), Some("fb-1")).await;
    }
    let (_, b) = api.json("POST", &fb, Some(json!({"kind": "thumbs_up"})), None).await;
    assert_eq!(b["entry"]["id"], "f2");
}

#[tokio::test]
async fn state_and_stored_replies_survive_a_restart() {
    let data = tempfile::tempdir().unwrap();
    let config = ServiceConfig {
        data_dir: Some(data.path().to_path_buf()),
        ..ServiceConfig::default()
    };
    let api = Api::new(config.clone());
    let p = api.create_power().await;
    let uri = format!("/v1/projects/{}/narratives/n3/edits", p.id);
    let op = json!({"target": {"kind": "canvas"}, "action": "recolor", "params": {"color": "#fafafa"}});
    let (_, first) = api.json("POST", &uri, Some(op.clone()), Some("k")).await;
    api.json("POST", &format!("/v1/projects/{}/narratives/n3/regenerate", p.id), None, None).await;
    api.json("POST", &format!("/v1/projects/{}/narratives/n3/feedback", p.id), Some(json!({"kind": "thumbs_up"})), None)
        .await;
    let before = api.engine.project(&p.id).unwrap();
    drop(api);

    let api = Api::new(config);
    assert_eq!(api.engine.project(&p.id).unwrap(), before);
    let (status, again) = api.json("POST", &uri, Some(op), Some("k")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again, first);
    let (_, b) = api
        .json("POST", &format!("/v1/projects/{}/narratives/n3/feedback", p.id), Some(json!({"kind": "thumbs_up"})), None)
        .await;
    assert_eq!(b["entry"]["id"], "f2");
    let q = api.create_power().await;
    assert_eq!(q.id, "p2");
}

#[tokio::test]
async fn exports_have_one_image_per_narrative() {
    let api = Api::offline();
    let p = api.create_power().await;
    let (status, ctype, gif) = api.raw("GET", &format!("/v1/projects/{}/export?format=gif", p.id), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype, "image/gif");
    assert_eq!(gif_frame_count(&gif).unwrap(), 5);

    let (status, ctype, zip) = api.raw("GET", &format!("/v1/projects/{}/export?format=png", p.id), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype, "application/zip");
    let mut archive = zip::ZipArchive::new(std::io::Cursor::new(zip)).unwrap();
    assert_eq!(archive.len(), 5);
    let mut names = Vec::new();
    for i in 0..archive.len() {
        let mut f = archive.by_index(i).unwrap();
        names.push(f.name().to_string());
        let mut png = Vec::new();
        std::io::Read::read_to_end(&mut f, &mut png).unwrap();
        assert_eq!(png_dimensions(&png).unwrap(), (800, 450));
    }
    assert_eq!(names, ["01-n0.png", "02-n1.png", "03-n2.png", "04-n3.png", "05-n4.png"]);

    let (status, _, _) = api.raw("GET", &format!("/v1/projects/{}/export?format=bmp", p.id), None, None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = api.raw("GET", "/v1/projects/p42/export?format=gif", None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn charts_are_served_as_svg() {
    let api = Api::offline();
    let p = api.create_power().await;
    let (status, ctype, body) = api.raw("GET", &format!("/v1/charts/{}-n0.svg", p.id), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype, "image/svg+xml");
    assert!(String::from_utf8(body).unwrap().contains("<svg xmlns"));
    for bad in ["/v1/charts/p1-n9.svg", "/v1/charts/p1-n0.png", "/v1/charts/zz.svg"] {
        let (status, _, _) = api.raw("GET", bad, None, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{bad}");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_edits_to_one_project_are_serialized() {
    let api = Arc::new(Api::offline());
    let p = api.create_power().await;
    let uri = format!("/v1/projects/{}/narratives/n0/edits", p.id);
    let tasks: Vec<_> = (0..16)
        .map(|i| {
            let (api, uri) = (api.clone(), uri.clone());
            tokio::spawn(async move {
                let op = json!({"target": {"kind": "legend"}, "action": "move", "params": {"dx": 1, "dy": (i % 2)}});
                api.json("POST", &uri, Some(op), None).await.0
            })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let spec = &api.engine.project(&p.id).unwrap().chart_specs["n0"];
    assert_eq!(spec.user_edits.len(), 16);
    let mut replay = p.chart_specs["n0"].clone();
    for op in &spec.user_edits {
        replay.apply_logged_edit(op, &power_table(), &Palette::default()).unwrap();
    }
    assert_eq!(&replay, spec);
}
