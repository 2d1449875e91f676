mod common;

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use harmonist::condition::{Algorithm, Modality};
use harmonist::simulate::synthetic_study_config;
use harmonist::study::{
    create_session, decide_inclusion, router, AppState, ExclusionReason, FinalizeRequest,
    Inclusion, ManualClock, StudyEngine, StudyError, ADMIN_HEADER,
};
use http_body_util::BodyExt;
use proptest::prelude::*;
use serde_json::{json, Value};
use tower::ServiceExt;

fn engine(clock: Arc<ManualClock>) -> StudyEngine {
    StudyEngine::in_memory(synthetic_study_config(), 3, clock).unwrap()
}

fn request(answer: &str, expertise: u8) -> FinalizeRequest {
    FinalizeRequest {
        age: None,
        gender: None,
        expertise,
        attention_answer: answer.into(),
    }
}

proptest! {
    #[test]
    fn every_session_is_a_balanced_partition(seed in any::<u64>()) {
        let config = synthetic_study_config();
        let s = create_session(&config, seed).unwrap();
        let mut ids: Vec<&String> = s.pages.iter().flatten().collect();
        ids.sort();
        ids.dedup();
        prop_assert_eq!(ids.len(), 8);
        for page in &s.pages {
            prop_assert_eq!(page.len(), 4);
            let a = page.iter().filter(|id| config.stimulus(id).unwrap().algorithm == Algorithm::A).count();
            prop_assert_eq!(a, 2);
        }
        prop_assert_ne!(s.modality_order[0], s.modality_order[1]);
    }

    #[test]
    fn inclusion_depends_only_on_answer_duration_and_completeness(
        answer in prop::sample::select(vec!["Agree", "Disagree", " Agree "]),
        duration in 0.0f64..1000.0,
        complete in any::<bool>(),
    ) {
        let d = decide_inclusion(answer, "Agree", duration, 210, complete);
        let want = if !complete {
            Inclusion::Excluded(ExclusionReason::Incomplete)
        } else if answer.trim() != "Agree" {
            Inclusion::Excluded(ExclusionReason::AttentionFailed)
        } else if duration < 210.0 {
            Inclusion::Excluded(ExclusionReason::TooFast)
        } else {
            Inclusion::Included
        };
        prop_assert_eq!(d, want);
        prop_assert_eq!(d, decide_inclusion(answer, "Agree", duration, 210, complete));
    }
}

#[test]
fn included_participants_fill_every_cell_twice() {
    let clock = Arc::new(ManualClock::new(0));
    let e = engine(clock.clone());
    for i in 0..61u8 {
        let s = e.create_session(true).unwrap();
        for page in 1..=2u8 {
            let mut order = s.pages[page as usize - 1].clone();
            order.rotate_left(usize::from(i % 4));
            e.submit_ranking(&s.id, page, order).unwrap();
        }
        clock.advance_secs(300);
        assert_eq!(
            e.finalize(&s.id, request("Agree", i % 6 + 1)).unwrap(),
            Inclusion::Included
        );
    }
    let export = e.export();
    assert_eq!(export.rows.len(), 488);
    let mut cells: HashMap<(&str, Algorithm, Modality), usize> = HashMap::new();
    for r in &export.rows {
        *cells
            .entry((r.participant_id.as_str(), r.algorithm, r.modality))
            .or_default() += 1;
    }
    assert_eq!(cells.len(), 61 * 4);
    assert!(cells.values().all(|&n| n == 2));
}

#[test]
fn excluded_participant_only_reaches_the_report() {
    let clock = Arc::new(ManualClock::new(0));
    let e = engine(clock.clone());
    let s = e.create_session(true).unwrap();
    e.submit_ranking(&s.id, 1, s.pages[0].clone()).unwrap();
    e.submit_ranking(&s.id, 2, s.pages[1].clone()).unwrap();
    clock.advance_secs(600);
    assert_eq!(
        e.finalize(&s.id, request("Disagree", 4)).unwrap(),
        Inclusion::Excluded(ExclusionReason::AttentionFailed)
    );
    let export = e.export();
    assert!(export.rows.is_empty());
    assert_eq!(export.exclusions.len(), 1);
    assert_eq!(export.exclusions_csv().lines().count(), 2);
}

#[test]
fn rankings_cannot_be_rewritten() {
    let clock = Arc::new(ManualClock::new(0));
    let e = engine(clock);
    let s = e.create_session(true).unwrap();
    let first = s.pages[0].clone();
    e.submit_ranking(&s.id, 1, first.clone()).unwrap();
    let mut other = first.clone();
    other.reverse();
    assert!(matches!(
        e.submit_ranking(&s.id, 1, other),
        Err(StudyError::AlreadySubmitted(1))
    ));
    assert_eq!(e.ranking(&s.id, 1).unwrap(), Some(first));
    assert!(matches!(e.page(&s.id, 3), Err(StudyError::InvalidPage(3))));
}

#[test]
fn log_only_grows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.ndjson");
    let clock = Arc::new(ManualClock::new(0));
    let e = StudyEngine::open(synthetic_study_config(), &path, 1, clock.clone()).unwrap();
    let mut snapshots = vec![std::fs::read_to_string(&path).unwrap()];
    let s = e.create_session(true).unwrap();
    snapshots.push(std::fs::read_to_string(&path).unwrap());
    for page in 1..=2u8 {
        e.submit_ranking(&s.id, page, s.pages[page as usize - 1].clone())
            .unwrap();
        snapshots.push(std::fs::read_to_string(&path).unwrap());
    }
    let _ = e.submit_ranking(&s.id, 1, s.pages[0].clone());
    clock.advance_secs(250);
    e.finalize(&s.id, request("Agree", 2)).unwrap();
    snapshots.push(std::fs::read_to_string(&path).unwrap());
    for pair in snapshots.windows(2) {
        assert!(pair[1].starts_with(&pair[0]));
        assert_eq!(pair[1].lines().count(), pair[0].lines().count() + 1);
    }
}

#[test]
fn concurrent_sessions_are_all_recorded() {
    let clock = Arc::new(ManualClock::new(0));
    let e = Arc::new(engine(clock));
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let e = e.clone();
            std::thread::spawn(move || {
                for _ in 0..25 {
                    let s = e.create_session(true).unwrap();
                    for page in 1..=2u8 {
                        e.submit_ranking(&s.id, page, s.pages[page as usize - 1].clone())
                            .unwrap();
                    }
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(e.session_count(), 200);
    assert_eq!(e.export().exclusions.len(), 200);
}

struct Api {
    app: axum::Router,
    clock: Arc<ManualClock>,
    _audio: tempfile::TempDir,
}

impl Api {
    fn new() -> Self {
        let clock = Arc::new(ManualClock::new(5_000));
        let audio = tempfile::tempdir().unwrap();
        std::fs::write(audio.path().join("a1_piano.mp3"), b"ID3fake").unwrap();
        let state = AppState {
            engine: Arc::new(engine(clock.clone())),
            admin_token: "secret".into(),
            audio_dir: audio.path().to_path_buf(),
            ui_dir: None,
        };
        Api {
            app: router(state),
            clock,
            _audio: audio,
        }
    }

    async fn call(
        &self,
        method: &str,
        uri: &str,
        body: Option<Value>,
        token: Option<&str>,
    ) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header(ADMIN_HEADER, t);
        }
        let req = match body {
            Some(v) => req
                .header("content-type", "application/json")
                .body(Body::from(v.to_string()))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        (status, bytes)
    }

    async fn json(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (s, b) = self.call(method, uri, body, None).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }
}

#[tokio::test]
async fn http_study_flow() {
    let api = Api::new();
    let (status, _) = api
        .json("POST", "/api/sessions", Some(json!({"consent": false})))
        .await;
    assert_eq!(status, StatusCode::FORBIDDEN);

    let (status, created) = api
        .json("POST", "/api/sessions", Some(json!({"consent": true})))
        .await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["session_id"].as_str().unwrap().to_string();
    let order = created["modality_order"].as_array().unwrap();
    assert_eq!(order.len(), 2);
    assert_ne!(order[0], order[1]);

    let mut pages = Vec::new();
    for n in 1..=2 {
        let (status, page) = api
            .json("GET", &format!("/api/sessions/{id}/pages/{n}"), None)
            .await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(page["modality"], order[n - 1]);
        let items = page["items"].as_array().unwrap();
        assert_eq!(items.len(), 4);
        let suffix = format!("_{}.mp3", page["modality"].as_str().unwrap());
        let ids: Vec<String> = items
            .iter()
            .map(|it| {
                let url = it["audio_url"].as_str().unwrap();
                assert!(
                    url.starts_with("/audio/") && url.ends_with(&suffix),
                    "{url}"
                );
                it["stimulus_id"].as_str().unwrap().to_string()
            })
            .collect();
        pages.push(ids);
    }
    let (status, _) = api
        .json("GET", &format!("/api/sessions/{id}/pages/3"), None)
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = api.json("GET", "/api/sessions/nope/pages/1", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let rankings = format!("/api/sessions/{id}/rankings");
    let (status, _) = api
        .json(
            "POST",
            &rankings,
            Some(json!({"page": 1, "ordered_ids": pages[0][..3]})),
        )
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = api
        .json(
            "POST",
            &format!("/api/sessions/{id}/finalize"),
            Some(json!({"expertise": 3, "attention_answer": "Agree"})),
        )
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    for (n, ids) in pages.iter().enumerate() {
        let (status, body) = api
            .call(
                "POST",
                &rankings,
                Some(json!({"page": n + 1, "ordered_ids": ids})),
                None,
            )
            .await;
        assert_eq!(status, StatusCode::NO_CONTENT);
        assert!(body.is_empty());
    }
    let (status, _) = api
        .json(
            "POST",
            &rankings,
            Some(json!({"page": 1, "ordered_ids": pages[0]})),
        )
        .await;
    assert_eq!(status, StatusCode::CONFLICT);

    api.clock.advance_secs(209);
    let (status, decision) = api
        .json(
            "POST",
            &format!("/api/sessions/{id}/finalize"),
            Some(json!({"age": 30, "expertise": 5, "attention_answer": "Agree"})),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(decision, json!({"included": false, "reason": "too_fast"}));

    let (status, _) = api.call("GET", "/api/export", None, None).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let (status, _) = api.call("GET", "/api/export", None, Some("wrong")).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let (status, csv) = api.call("GET", "/api/export", None, Some("secret")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        String::from_utf8(csv).unwrap().trim(),
        "participant_id,stimulus_id,algorithm,modality,ranking,expertise,age,gender"
    );
    let (_, report) = api
        .call("GET", "/api/export/exclusions", None, Some("secret"))
        .await;
    assert!(String::from_utf8(report)
        .unwrap()
        .contains(&format!("{id},too_fast")));
}

#[tokio::test]
async fn http_included_export_and_audio() {
    let api = Api::new();
    let (_, created) = api
        .json("POST", "/api/sessions", Some(json!({"consent": true})))
        .await;
    let id = created["session_id"].as_str().unwrap().to_string();
    let mut shown = Vec::new();
    for n in 1..=2 {
        let (_, page) = api
            .json("GET", &format!("/api/sessions/{id}/pages/{n}"), None)
            .await;
        let mut ids: Vec<String> = page["items"]
            .as_array()
            .unwrap()
            .iter()
            .map(|it| it["stimulus_id"].as_str().unwrap().to_string())
            .collect();
        ids.reverse();
        api.call(
            "POST",
            &format!("/api/sessions/{id}/rankings"),
            Some(json!({"page": n, "ordered_ids": ids})),
            None,
        )
        .await;
        shown.push((page["modality"].as_str().unwrap().to_string(), ids));
    }
    api.clock.advance_secs(210);
    let (_, decision) = api
        .json(
            "POST",
            &format!("/api/sessions/{id}/finalize"),
            Some(json!({"gender": "f", "expertise": 2, "attention_answer": "Agree"})),
        )
        .await;
    assert_eq!(decision, json!({"included": true}));
    let (_, csv) = api.call("GET", "/api/export", None, Some("secret")).await;
    let text = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    for (k, (modality, ids)) in shown.iter().enumerate() {
        for (pos, sid) in ids.iter().enumerate() {
            let alg = if sid.starts_with('a') { "A" } else { "B" };
            let want = format!("{id},{sid},{alg},{modality},{},2,,f", pos + 1);
            assert_eq!(lines[1 + k * 4 + pos], want);
        }
    }

    let (status, bytes) = api.call("GET", "/audio/a1_piano.mp3", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bytes, b"ID3fake");
    for bad in [
        "/audio/../Cargo.toml",
        "/audio/%2e%2e/secret",
        "/audio/missing.mp3",
    ] {
        let (status, _) = api.call("GET", bad, None, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{bad}");
    }
    let (status, info) = api.json("GET", "/api/study", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(info["attention_check"]["expected"].is_null());
    assert_eq!(
        info["attention_check"]["options"].as_array().unwrap().len(),
        4
    );
}
