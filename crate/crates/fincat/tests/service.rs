mod common;

use common::{agent, fixture, fixture_service, run, stdout, SAMPLE};
use fincat::server::AnalyzeResponse;
use fincat_core::classifier::load_model;
use serde_json::{json, Value};

fn post(base: &str, body: &str) -> (u16, Value) {
    let mut resp = agent()
        .post(format!("{base}/analyze"))
        .content_type("application/json")
        .send(body)
        .unwrap();
    let status = resp.status().as_u16();
    (status, resp.body_mut().read_json().unwrap())
}

#[test]
fn health_reports_fingerprint() {
    let srv = fixture_service();
    let mut resp = agent().get(srv.url("/health")).call().unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    let body: Value = resp.body_mut().read_json().unwrap();
    let fp = load_model(&fixture("model.json")).unwrap().fingerprint();
    assert_eq!(body, json!({"status": "ok", "model": fp}));
}

#[test]
fn golden_analyze_response() {
    let srv = fixture_service();
    let (status, mut body) = post(&srv.base, &json!({ "text": SAMPLE }).to_string());
    assert_eq!(status, 200);
    assert!(body["elapsed_ms"].is_u64(), "{body}");
    body.as_object_mut().unwrap().remove("elapsed_ms");
    let golden: Value = serde_json::from_str(include_str!("fixtures/analyze_golden.json")).unwrap();
    assert_eq!(body, golden);
}

#[test]
fn spec_examples() {
    let srv = fixture_service();
    let (status, body) = post(&srv.base, r#"{"text":"grew 12%"}"#);
    assert_eq!(status, 200);
    let rows = body["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["numeral"], "12%");
    assert_eq!((rows[0]["start"].as_u64(), rows[0]["end"].as_u64()), (Some(5), Some(8)));
    let label = rows[0]["label"].as_str().unwrap();
    assert!(label == "in_claim" || label == "out_of_claim");

    let (status, body) = post(&srv.base, r#"{"text":"No numbers at all."}"#);
    assert_eq!(status, 200);
    assert_eq!(body["rows"], json!([]));
}

#[test]
fn offsets_count_characters() {
    let srv = fixture_service();
    let (_, body) = post(&srv.base, &json!({ "text": "收入 增长 １２％ 了" }).to_string());
    let row = &body["rows"][0];
    assert_eq!(row["numeral"], "１２％");
    assert_eq!((row["start"].as_u64(), row["end"].as_u64()), (Some(6), Some(9)));
}

#[test]
fn bad_requests_get_json_errors() {
    let srv = fixture_service();
    let mut resp = agent().post(srv.url("/analyze")).send_empty().unwrap();
    assert_eq!(resp.status().as_u16(), 400);
    let body: Value = resp.body_mut().read_json().unwrap();
    assert!(body["error"].as_str().unwrap().contains("empty"));

    for bad in [
        "  \n",
        "{not json",
        r#"{"txt":"a 1"}"#,
        r#"{"text":12}"#,
        "[]",
        "\"grew 12%\"",
    ] {
        let (status, body) = post(&srv.base, bad);
        assert_eq!(status, 400, "{bad}");
        assert!(body["error"].is_string(), "{bad}: {body}");
    }
}

#[test]
fn reserved_target_span() {
    let srv = fixture_service();
    let (status, body) = post(&srv.base, r#"{"text":"up 5%","target_span":[3,5]}"#);
    assert_eq!(status, 501);
    assert!(body["error"].as_str().unwrap().contains("target_span"));
    let (status, _) = post(&srv.base, r#"{"text":"up 5%","target_span":null}"#);
    assert_eq!(status, 200);
}

#[test]
fn unknown_routes_and_methods() {
    let srv = fixture_service();
    let mut resp = agent().get(srv.url("/analyze")).call().unwrap();
    assert_eq!(resp.status().as_u16(), 405);
    assert!(resp.body_mut().read_json::<Value>().unwrap()["error"].is_string());
    let mut resp = agent().get(srv.url("/nope")).call().unwrap();
    assert_eq!(resp.status().as_u16(), 404);
    assert!(resp.body_mut().read_json::<Value>().unwrap()["error"].is_string());
}

#[test]
fn concurrent_requests_agree() {
    let srv = fixture_service();
    let body = json!({ "text": SAMPLE }).to_string();
    let (_, first) = post(&srv.base, &body);
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let base = srv.base.clone();
            let body = body.clone();
            std::thread::spawn(move || {
                (0..10)
                    .map(|_| post(&base, &body).1["rows"].clone())
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    for h in handles {
        for rows in h.join().unwrap() {
            assert_eq!(rows, first["rows"]);
        }
    }
}

#[test]
fn cli_json_matches_service() {
    let srv = fixture_service();
    let (_, http) = post(&srv.base, &json!({ "text": SAMPLE }).to_string());
    let http: AnalyzeResponse = serde_json::from_value(http).unwrap();
    let model = fixture("model.json");
    let out = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--text",
        SAMPLE,
        "--json",
    ]);
    assert!(out.status.success());
    let cli: AnalyzeResponse = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(cli.rows, http.rows);
    assert_eq!(cli.model, http.model);
    for (a, b) in cli.rows.iter().zip(&http.rows) {
        assert_eq!(a.probability.to_bits(), b.probability.to_bits());
    }
}
