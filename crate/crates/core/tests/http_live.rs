//! The real HTTP clients against a throwaway local server.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use linkstudy::harvest::{self, audit_liveness, AuditPolicy, HarvestPolicy, LinkStatus, RecordState};
use linkstudy::responses::{Denylist, SurveyId, SurveyResponse};
use linkstudy::robustness::{EmbedError, Embedder, OllamaEmbedder};
use linkstudy::topics::mock::KeywordLlm;
use linkstudy::topics::{run_pipeline, EngineConfig, LlmClient, LlmError, LlmRequest, OllamaClient, QuestionSpec};
use linkstudy::transport::{HttpTransport, RecordingTransport, ReplayTransport, RetryPolicy};
use serde_json::{json, Value};

struct Reply {
    status: u16,
    location: Option<String>,
    body: String,
}

fn reply(status: u16, body: impl Into<String>) -> Reply {
    Reply { status, location: None, body: body.into() }
}

type Log = Arc<Mutex<Vec<(String, String)>>>;

/// Serves `route(path, body)` on an ephemeral port. Returns the base URL and
/// a log of `(path, request body)` pairs.
fn serve<F>(route: F) -> (String, Log)
where
    F: Fn(&str, &str, &str) -> Reply + Send + 'static,
{
    let server = tiny_http::Server::http("127.0.0.1:0").expect("bind");
    let base = format!("http://{}", server.server_addr().to_ip().expect("ip socket"));
    let log: Log = Arc::default();
    let seen = log.clone();
    let me = base.clone();
    thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let mut body = String::new();
            req.as_reader().read_to_string(&mut body).ok();
            let path = req.url().to_owned();
            seen.lock().unwrap().push((path.clone(), body.clone()));
            let r = route(&me, &path, &body);
            let mut resp = tiny_http::Response::from_string(r.body).with_status_code(r.status);
            if let Some(loc) = r.location {
                resp.add_header(tiny_http::Header::from_bytes("Location", loc).unwrap());
            }
            req.respond(resp).ok();
        }
    });
    (base, log)
}

fn registry(base: &str, path: &str, _body: &str) -> Reply {
    match path {
        "/simple/" => reply(
            200,
            "<html><body><a href=\"/simple/pkg-one/\">Pkg_One</a>\n<a href=\"/simple/pkg-two/\">pkg-two</a></body></html>",
        ),
        "/pypi/pkg-one/json" => reply(
            200,
            json!({"info": {
                "name": "pkg-one",
                "author_email": "One Dev <one@example.org>",
                "home_page": format!("{base}/ok"),
                "project_urls": {"Source": format!("{base}/moved"), "Docs": format!("{base}/flaky")},
                "requires_dist": ["pkg-two>=1"]
            }})
            .to_string(),
        ),
        "/moved" => Reply { status: 301, location: Some("/missing".into()), body: String::new() },
        "/ok" => reply(200, "fine"),
        "/flaky" => reply(503, "busy"),
        _ => reply(404, "not found"),
    }
}

fn quick_policy() -> (HarvestPolicy, AuditPolicy) {
    let retry = RetryPolicy { attempts: 3, base_delay: Duration::from_millis(1) };
    (
        HarvestPolicy { concurrency: 2, retry, fetch_funding: false, ..HarvestPolicy::default() },
        AuditPolicy { concurrency: 2, retry, ..AuditPolicy::default() },
    )
}

fn http() -> HttpTransport {
    HttpTransport::new(Duration::from_secs(5), Duration::ZERO).unwrap()
}

#[test]
fn harvest_and_audit_over_http() {
    let (base, log) = serve(registry);
    let (hp, ap) = quick_policy();
    let snapshot = harvest::harvest(&http(), &base, &hp).unwrap();

    let names: Vec<_> = snapshot.packages.iter().map(|p| (p.name.as_str(), p.state)).collect();
    assert_eq!(names, [("pkg-one", RecordState::Ok), ("pkg-two", RecordState::Absent)]);
    assert_eq!(snapshot.packages[0].emails, ["one@example.org"]);
    assert_eq!(snapshot.links.len(), 3);

    let (audited, stats) = audit_liveness(&http(), &snapshot.links, &ap);
    let by_url: BTreeMap<String, (LinkStatus, Option<u16>)> = audited
        .iter()
        .map(|l| (l.url.trim_start_matches(&base).to_owned(), (l.status, l.http_status)))
        .collect();
    assert_eq!(by_url["/moved"], (LinkStatus::NotFound, Some(404)), "redirect followed before judging");
    assert_eq!(by_url["/ok"], (LinkStatus::Reachable, Some(200)));
    assert_eq!(by_url["/flaky"], (LinkStatus::Unreachable, Some(503)));
    assert_eq!((stats.reachable, stats.not_found, stats.unreachable), (1, 1, 1));

    let flaky_hits = log.lock().unwrap().iter().filter(|(p, _)| p == "/flaky").count();
    assert_eq!(flaky_hits, 3, "5xx is retried up to the attempt limit");
}

#[test]
fn recorded_session_replays_identically() {
    let (base, _) = serve(registry);
    let (hp, ap) = quick_policy();
    let dir = tempfile::tempdir().unwrap();

    let recorder = RecordingTransport::new(http(), dir.path()).unwrap();
    let live = harvest::harvest(&recorder, &base, &hp).unwrap();
    let (live_links, _) = audit_liveness(&recorder, &live.links, &ap);

    let replay = ReplayTransport::from_dir(dir.path()).unwrap();
    let again = harvest::harvest(&replay, &base, &hp).unwrap();
    let (again_links, _) = audit_liveness(&replay, &again.links, &ap);

    let strip = |links: &[harvest::LinkAudit]| -> Vec<_> {
        links.iter().map(|l| (l.url.clone(), l.status, l.http_status)).collect()
    };
    assert_eq!(strip(&live_links), strip(&again_links));
    assert_eq!(live.packages.len(), again.packages.len());
    for (a, b) in live.packages.iter().zip(&again.packages) {
        assert_eq!((&a.name, a.state, &a.declared_urls), (&b.name, b.state, &b.declared_urls));
    }
}

fn request() -> LlmRequest {
    LlmRequest {
        model: "llama3.3:70b".into(),
        system: "sys".into(),
        user: "usr".into(),
        seed: 7,
        temperature: 0.0,
        json_output: true,
    }
}

#[test]
fn chat_client_speaks_ollama_protocol() {
    let (base, log) = serve(|_, path, _| match path {
        "/api/chat" => reply(200, json!({"message": {"role": "assistant", "content": "{\"t\": [\"k\"]}"}}).to_string()),
        _ => reply(404, ""),
    });
    let client = OllamaClient::new(&format!("{base}/"), Duration::from_secs(5)).unwrap();
    assert_eq!(client.complete(&request()).unwrap(), "{\"t\": [\"k\"]}");

    let sent: Value = serde_json::from_str(&log.lock().unwrap()[0].1).unwrap();
    assert_eq!(sent["model"], "llama3.3:70b");
    assert_eq!(sent["stream"], false);
    assert_eq!(sent["format"], "json");
    assert_eq!(sent["options"], json!({"seed": 7, "temperature": 0.0}));
    assert_eq!(sent["messages"][0], json!({"role": "system", "content": "sys"}));
    assert_eq!(sent["messages"][1], json!({"role": "user", "content": "usr"}));
}

#[test]
fn chat_client_reports_server_errors() {
    let (base, _) = serve(|_, _, _| reply(500, "model not loaded"));
    let client = OllamaClient::new(&base, Duration::from_secs(5)).unwrap();
    match client.complete(&request()) {
        Err(LlmError::Status { status: 500, body }) => assert_eq!(body, "model not loaded"),
        other => panic!("{other:?}"),
    }
}

/// Puts the offline keyword model behind the chat endpoint.
fn keyword_server(_: &str, path: &str, body: &str) -> Reply {
    if path != "/api/chat" {
        return reply(404, "");
    }
    let v: Value = serde_json::from_str(body).unwrap();
    let req = LlmRequest {
        model: v["model"].as_str().unwrap().into(),
        system: v["messages"][0]["content"].as_str().unwrap().into(),
        user: v["messages"][1]["content"].as_str().unwrap().into(),
        seed: v["options"]["seed"].as_u64().unwrap(),
        temperature: v["options"]["temperature"].as_f64().unwrap(),
        json_output: true,
    };
    let content = KeywordLlm::default().complete(&req).unwrap();
    reply(200, json!({"message": {"content": content}}).to_string())
}

#[test]
fn pipeline_over_http_matches_in_process_model() {
    let (base, log) = serve(keyword_server);
    let denylist = Denylist::default();
    let docs = [
        "The repository is private so linking makes no sense",
        "Forgot to add the repository link to the metadata",
        "Our company policy forbids public repository links",
        "n/a",
        "I forgot about project urls entirely",
    ];
    let responses: Vec<_> = docs
        .iter()
        .map(|d| SurveyResponse::new(SurveyId::RepositoryUrl, "q", d, &denylist))
        .collect();
    let q = [QuestionSpec { question_id: "q".into(), text: "Why no link?".into() }];
    let cfg = EngineConfig { batch_size: 2, ..EngineConfig::default() };

    let remote = OllamaClient::new(&base, Duration::from_secs(5)).unwrap();
    let over_http = run_pipeline(&remote, SurveyId::RepositoryUrl, &responses, &q, &cfg);
    let local = run_pipeline(&KeywordLlm::default(), SurveyId::RepositoryUrl, &responses, &q, &cfg);

    assert!(over_http.complete);
    assert_eq!(over_http.questions[0].merged, local.questions[0].merged);
    // two extraction batches plus one merge
    assert_eq!(log.lock().unwrap().len(), 3);
}

#[test]
fn embed_client_speaks_ollama_protocol() {
    let (base, log) = serve(|_, path, body| {
        if path != "/api/embed" {
            return reply(404, "");
        }
        let v: Value = serde_json::from_str(body).unwrap();
        let n = v["input"].as_array().unwrap().len();
        let vectors: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, 1.0]).collect();
        reply(200, json!({"model": v["model"], "embeddings": vectors}).to_string())
    });
    let embedder = OllamaEmbedder::new(&base, "all-minilm", Duration::from_secs(5)).unwrap();
    assert_eq!(embedder.model_id(), "all-minilm");
    let out = embedder.embed(&["a b".into(), "c".into()]).unwrap();
    assert_eq!(out, [vec![0.0, 1.0], vec![1.0, 1.0]]);
    assert!(embedder.embed(&[]).unwrap().is_empty());

    let sent: Value = serde_json::from_str(&log.lock().unwrap()[0].1).unwrap();
    assert_eq!(sent, json!({"model": "all-minilm", "input": ["a b", "c"]}));
}

#[test]
fn embed_client_rejects_count_mismatch() {
    let (base, _) = serve(|_, _, _| reply(200, json!({"embeddings": [[1.0]]}).to_string()));
    let embedder = OllamaEmbedder::new(&base, "m", Duration::from_secs(5)).unwrap();
    assert!(matches!(embedder.embed(&["a".into(), "b".into()]), Err(EmbedError::Protocol(_))));
}
