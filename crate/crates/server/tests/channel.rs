mod common;

use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

use common::{start, TestServer};

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn connect(s: &TestServer, user: &str, since: u64) -> Socket {
    let (ws, _) = connect_async(s.ws_url(&format!("/projects/p/channel?user={user}&since={since}")))
        .await
        .unwrap();
    ws
}

async fn next_frame(ws: &mut Socket) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("frame within timeout")
            .expect("open socket")
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

async fn quiet(ws: &mut Socket) -> bool {
    tokio::time::timeout(Duration::from_millis(200), ws.next()).await.is_err()
}

#[tokio::test]
async fn chat_reaches_every_member_once() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path()).await;
    s.project("p", &["ann", "bob", "cy"]).await;
    s.project("q", &["ann", "dee"]).await;
    let mut sockets = Vec::new();
    for u in ["ann", "bob", "cy"] {
        sockets.push(connect(&s, u, 0).await);
    }
    let (mut other, _) = connect_async(s.ws_url("/projects/q/channel?user=dee")).await.unwrap();

    sockets[0]
        .send(Message::Text(json!({"type": "chat", "body": "table 4 is free"}).to_string().into()))
        .await
        .unwrap();
    for ws in &mut sockets {
        let frame = next_frame(ws).await;
        assert_eq!(frame["type"], "chat");
        assert_eq!(frame["message"]["body"], "table 4 is free");
        assert_eq!(frame["message"]["senderId"], "ann");
        assert!(quiet(ws).await);
    }
    assert!(quiet(&mut other).await);

    let (status, receipt) = s.post("/projects/p/chat", json!({"user": "bob", "body": "thanks"})).await;
    assert_eq!(status, 201);
    assert_eq!(receipt["delivered"], 3);
    for ws in &mut sockets {
        assert_eq!(next_frame(ws).await["message"]["body"], "thanks");
    }
}

#[tokio::test]
async fn sender_order_is_preserved() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path()).await;
    s.project("p", &["ann", "bob"]).await;
    let mut ann = connect(&s, "ann", 0).await;
    let mut bob = connect(&s, "bob", 0).await;
    for i in 0..20 {
        ann.send(Message::Text(json!({"type": "chat", "body": format!("m{i}")}).to_string().into()))
            .await
            .unwrap();
    }
    for i in 0..20 {
        assert_eq!(next_frame(&mut bob).await["message"]["body"], format!("m{i}"));
    }
}

#[tokio::test]
async fn missed_messages_replay_on_reconnect() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path()).await;
    s.project("p", &["ann", "bob"]).await;
    let mut bob = connect(&s, "bob", 0).await;
    s.post("/projects/p/chat", json!({"user": "ann", "body": "one"})).await;
    let seen = next_frame(&mut bob).await["message"]["seq"].as_u64().unwrap();
    bob.close(None).await.unwrap();
    drop(bob);

    let (_, receipt) = s.post("/projects/p/chat", json!({"user": "ann", "body": "two"})).await;
    assert_eq!(receipt["delivered"], 0);
    s.post("/projects/p/chat", json!({"user": "ann", "body": "three"})).await;

    let mut bob = connect(&s, "bob", seen).await;
    assert_eq!(next_frame(&mut bob).await["message"]["body"], "two");
    assert_eq!(next_frame(&mut bob).await["message"]["body"], "three");
    assert!(quiet(&mut bob).await);

    let (_, history) = s.get("/projects/p/chat?user=bob").await;
    assert_eq!(history.as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn reconnect_replaces_old_channel() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path()).await;
    s.project("p", &["ann", "bob"]).await;
    let mut first = connect(&s, "ann", 0).await;
    let mut second = connect(&s, "ann", 0).await;
    // the first connection is closed by the server
    let end = tokio::time::timeout(Duration::from_secs(5), first.next()).await.unwrap();
    assert!(matches!(end, None | Some(Ok(Message::Close(_))) | Some(Err(_))));
    let (_, receipt) = s.post("/projects/p/chat", json!({"user": "bob", "body": "hi"})).await;
    assert_eq!(receipt["delivered"], 1);
    assert_eq!(next_frame(&mut second).await["message"]["body"], "hi");
}

#[tokio::test]
async fn outsiders_and_empty_bodies_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path()).await;
    s.project("p", &["ann"]).await;
    let err = connect_async(s.ws_url("/projects/p/channel?user=eve")).await.unwrap_err();
    match err {
        tokio_tungstenite::tungstenite::Error::Http(r) => assert_eq!(r.status().as_u16(), 409),
        other => panic!("unexpected {other:?}"),
    }
    let (status, _) = s.post("/projects/p/chat", json!({"user": "eve", "body": "hi"})).await;
    assert_eq!(status, 409);
    let (status, _) = s.post("/projects/p/chat", json!({"user": "ann", "body": "  "})).await;
    assert_eq!(status, 400);

    let mut ann = connect(&s, "ann", 0).await;
    ann.send(Message::Text(json!({"type": "chat", "body": ""}).to_string().into())).await.unwrap();
    assert_eq!(next_frame(&mut ann).await["type"], "error");
    ann.send(Message::Text("not json".into())).await.unwrap();
    assert_eq!(next_frame(&mut ann).await["type"], "error");
    let (_, history) = s.get("/projects/p/chat?user=ann").await;
    assert_eq!(history, json!([]));
}

#[tokio::test]
async fn story_and_suggestion_frames() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path()).await;
    s.project("p", &["ann", "bob"]).await;
    let mut ann = connect(&s, "ann", 0).await;
    let mut bob = connect(&s, "bob", 0).await;

    let story = s.story("p", "ann", "As a guest, I want to view the menu so that I can choose a dish.").await;
    let frame = next_frame(&mut bob).await;
    assert_eq!(frame["type"], "story_changed");
    assert_eq!(frame["change"], "created");
    assert_eq!(frame["story"], story);
    assert_eq!(next_frame(&mut ann).await["type"], "story_changed");

    let (status, set) = s.post("/projects/p/suggestions?user=ann", json!(null)).await;
    assert_eq!(status, 200);
    let frame = next_frame(&mut ann).await;
    assert_eq!(frame["type"], "suggestion_ready");
    assert_eq!(frame["userId"], "ann");
    assert_eq!(frame["quality"], set["quality"].as_array().unwrap().len());
    // suggestions are private to the requester
    assert!(quiet(&mut bob).await);
}
