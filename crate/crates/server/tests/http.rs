mod common;

use serde_json::{json, Value};

use common::{restaurant, start};
use storygraph_core::story::{export_stories, Project, Stakeholder, StoryFormat, StoryStore, UserStory};

#[tokio::test]
async fn story_lifecycle_and_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path()).await;
    s.project("p", &["ann", "bob"]).await;

    let (status, _) = s
        .post("/projects", json!({"id": "p", "name": "again", "members": [{"id": "x", "displayName": "X"}]}))
        .await;
    assert_eq!(status, 409);
    let (status, _) = s.post("/projects", json!({"id": "q", "name": "empty", "members": []})).await;
    assert_eq!(status, 400);

    let created = s.story("p", "ann", "As a guest, I want to view the menu so that I can choose.").await;
    assert_eq!(created["role"], "guest");
    let id = created["id"].as_str().unwrap().to_owned();

    // the rejected text comes back so the editor can refill it
    let bad = "I want the menu";
    let (status, body) = s.post("/projects/p/stories", json!({"user": "ann", "text": bad})).await;
    assert_eq!(status, 400);
    assert_eq!(body["error"], "format_error");
    assert_eq!(body["text"], bad);

    let (status, _) = s
        .post("/projects/p/stories", json!({"user": "eve", "text": "As a spy, I want to read the menu so that I know"}))
        .await;
    assert_eq!(status, 409);
    let (status, _) = s
        .post("/projects/nope/stories", json!({"user": "ann", "text": "As a spy, I want to read the menu so that I know"}))
        .await;
    assert_eq!(status, 404);

    let (status, edited) = s
        .put(&format!("/stories/{id}"), json!({"user": "bob", "text": "As a guest, I want to browse the menu so that I can choose"}))
        .await;
    assert_eq!(status, 200);
    assert_eq!(edited["goal"], "browse the menu");
    assert_eq!(edited["benefit"], "I can choose");
    assert_eq!(edited["id"], id.as_str());
    let (status, _) = s.put("/stories/st-999", json!({"user": "bob", "text": "As a guest, I want to eat so that I am fed"})).await;
    assert_eq!(status, 404);
    let (status, body) = s.put(&format!("/stories/{id}"), json!({"user": "bob", "text": "garbage"})).await;
    assert_eq!((status, body["text"].clone()), (400, json!("garbage")));

    let (status, _) = s.delete(&format!("/stories/{id}?user=eve")).await;
    assert_eq!(status, 409);
    let (status, deleted) = s.delete(&format!("/stories/{id}?user=ann")).await;
    assert_eq!((status, deleted["deleted"].clone()), (200, json!(true)));
    let (status, _) = s.delete(&format!("/stories/{id}?user=ann")).await;
    assert_eq!(status, 404);

    let (_, listed) = s.get("/projects/p/stories").await;
    assert_eq!(listed, json!([]));
    let (_, listed) = s.get("/projects/p/stories?includeDeleted=true").await;
    assert_eq!(listed.as_array().unwrap().len(), 1);

    let (status, joined) = s.post("/projects/p/members", json!({"id": "cy", "displayName": "CY"})).await;
    assert_eq!(status, 200);
    assert_eq!(joined["members"].as_array().unwrap().len(), 3);
    let (status, _) = s.post("/projects/p/members", json!({"id": "dee", "displayName": "ANN"})).await;
    assert_eq!(status, 409);
    let (status, _) = s.get("/projects/zzz").await;
    assert_eq!(status, 404);
}

#[tokio::test]
async fn import_and_byte_exact_export() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path()).await;
    s.project("p", &["ann"]).await;
    let csv = "text\n\"As a cook, I want to see orders so that I can plan\"\nnot a story\n\"As a cook, I want to print tickets so that the line moves\"\n";
    let r = s
        .client
        .post(s.url("/projects/p/import?user=ann&format=csv"))
        .body(csv)
        .send()
        .await
        .unwrap();
    assert_eq!(r.status().as_u16(), 200);
    let report: Value = r.json().await.unwrap();
    assert_eq!(report["stories"].as_array().unwrap().len(), 2);
    assert_eq!(report["errors"][0]["row"], 2);
    assert_eq!(report["errors"][0]["error"]["text"], "not a story");

    let r = s.client.post(s.url("/projects/p/import?user=ann&format=csv")).body("").send().await.unwrap();
    assert_eq!(r.status().as_u16(), 400);
    let r = s.client.post(s.url("/projects/p/import?user=zed&format=json")).body("[]").send().await.unwrap();
    assert_eq!(r.status().as_u16(), 409);

    // rebuild the project outside the service and export it with the library
    let (_, listed) = s.get("/projects/p/stories").await;
    let stories: Vec<UserStory> = serde_json::from_value(listed).unwrap();
    let mut store = StoryStore::new();
    store
        .create_project(
            Project {
                id: "p".into(),
                name: "Bistro".into(),
                scenario_text: String::new(),
                member_ids: Default::default(),
            },
            vec![Stakeholder {
                id: "ann".into(),
                display_name: "ANN".into(),
            }],
        )
        .unwrap();
    for story in stories {
        store.insert_story(story).unwrap();
    }
    for format in [StoryFormat::Csv, StoryFormat::Json] {
        let name = serde_json::to_value(format).unwrap();
        let (status, bytes) = s.get_bytes(&format!("/projects/p/export?format={}", name.as_str().unwrap())).await;
        assert_eq!(status, 200);
        assert_eq!(bytes, export_stories(&store, &"p".into(), None, format, false).unwrap());
    }
    let (status, _) = s.get_bytes("/projects/p/export?format=xml").await;
    assert_eq!(status, 400);
}

#[tokio::test]
async fn suggestions_feedback_graph_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path()).await;
    restaurant(&s).await;

    let (status, set) = s.post("/projects/p/suggestions?user=ann", json!(null)).await;
    assert_eq!(status, 200, "{set}");
    let quality = set["quality"].as_array().unwrap();
    let completeness = set["completeness"].as_array().unwrap();
    assert!(!quality.is_empty() && !completeness.is_empty());
    let kinds: Vec<&str> = quality.iter().map(|q| q["kind"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"NON_ATOMIC"), "{kinds:?}");
    let (_, again) = s.get("/projects/p/suggestions?user=ann").await;
    assert_eq!(again, set);
    let (status, _) = s.post("/projects/p/suggestions?user=eve", json!(null)).await;
    assert_eq!(status, 409);

    let first = quality[0]["id"].as_str().unwrap().to_owned();
    let (status, fb) = s.post(&format!("/suggestions/{first}/feedback"), json!({"user": "ann"})).await;
    assert_eq!((status, fb["disliked"].clone()), (200, json!(true)));
    let (status, _) = s.post("/suggestions/nope/feedback", json!({"user": "ann"})).await;
    assert_eq!(status, 404);
    let (_, visible) = s.get("/projects/p/suggestions?user=ann").await;
    assert!(visible["quality"].as_array().unwrap().iter().all(|q| q["id"] != first.as_str()));
    let (_, all) = s.get("/projects/p/suggestions?user=ann&includeHidden=true").await;
    let hidden: Vec<&Value> = all["quality"].as_array().unwrap().iter().filter(|q| q["hidden"] == true).collect();
    assert_eq!(hidden.len(), 1);
    assert_eq!(hidden[0]["id"], first.as_str());

    let (status, graph) = s.get("/projects/p/graph?scope=user&user=ann").await;
    assert_eq!(status, 200);
    assert!(graph["nodes"].as_array().unwrap().iter().all(|n| n["user"] == "ann"));
    let (_, project) = s.get("/projects/p/graph").await;
    assert!(project["nodes"].as_array().unwrap().len() > graph["nodes"].as_array().unwrap().len());
    let (status, _) = s.get("/projects/p/graph?scope=user&user=eve").await;
    assert_eq!(status, 409);
    let (status, _) = s.get("/projects/p/graph?scope=user").await;
    assert_eq!(status, 400);
    let r = s.client.get(s.url("/projects/p/graph?format=dot")).send().await.unwrap();
    assert!(r.text().await.unwrap().starts_with("graph"));

    let (status, metrics) = s.get("/projects/p/metrics").await;
    assert_eq!(status, 200);
    assert_eq!(metrics["story_count"], 12);
    assert_eq!(metrics["node_count"], project["nodes"].as_array().unwrap().len());
}

#[tokio::test]
async fn empty_project_gets_notice() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path()).await;
    s.project("p", &["ann"]).await;
    let (status, set) = s.post("/projects/p/suggestions?user=ann", json!(null)).await;
    assert_eq!(status, 200);
    assert_eq!(set["quality"], json!([]));
    assert_eq!(set["completeness"], json!([]));
    assert!(set["notice"].is_string());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_serialize_project_commits() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path()).await;
    restaurant(&s).await;
    let (a, b) = tokio::join!(
        s.post("/projects/p/suggestions?user=ann", json!(null)),
        s.post("/projects/p/suggestions?user=bob", json!(null)),
    );
    assert_eq!((a.0, b.0), (200, 200));

    // same stories, so a serial rerun must give the same payloads
    let (_, a2) = s.post("/projects/p/suggestions?user=ann", json!(null)).await;
    let (_, b2) = s.post("/projects/p/suggestions?user=bob", json!(null)).await;
    assert_eq!(a.1, a2);
    assert_eq!(b.1, b2);

    // every project concept has exactly one active version and the earlier
    // versions are closed
    let state: Value = serde_json::from_slice(&s.service.state_json()).unwrap();
    let graph = &state["graphs"]["graphs"]["project:p"];
    let mut active = std::collections::BTreeMap::<String, usize>::new();
    for node in graph["nodes"].as_array().unwrap() {
        *active.entry(node["key"].as_str().unwrap().to_owned()).or_default() += usize::from(node["is_active"] == true);
    }
    assert!(active.values().all(|&n| n == 1), "{active:?}");
    assert_eq!(graph["nodes"].as_array().unwrap().len(), active.len() * 4);
}
