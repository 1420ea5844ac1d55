#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};
use tokio::task::JoinHandle;

use storygraph_core::embedding::EmbeddingProvider;
use storygraph_server::{router, Config, Service};

pub struct TestServer {
    pub base: String,
    pub service: Arc<Service>,
    pub client: reqwest::Client,
    task: JoinHandle<()>,
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.task.abort();
    }
}

pub fn config(dir: &Path) -> Config {
    Config {
        data_dir: dir.to_owned(),
        snapshot_every: 5,
        ..Config::default()
    }
}

pub async fn serve(service: Arc<Service>) -> TestServer {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let app = router(service.clone());
    let task = tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    TestServer {
        base,
        service,
        client: reqwest::Client::new(),
        task,
    }
}

pub async fn start(dir: &Path) -> TestServer {
    serve(Service::open(config(dir)).unwrap()).await
}

pub async fn start_with(dir: &Path, provider: Arc<dyn EmbeddingProvider>) -> TestServer {
    serve(Service::with_provider(config(dir), provider).unwrap()).await
}

impl TestServer {
    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub fn ws_url(&self, path: &str) -> String {
        format!("ws{}{}", self.base.trim_start_matches("http"), path)
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self.client.post(self.url(path)).json(&body).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn put(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self.client.put(self.url(path)).json(&body).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn delete(&self, path: &str) -> (u16, Value) {
        let r = self.client.delete(self.url(path)).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.client.get(self.url(path)).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn get_bytes(&self, path: &str) -> (u16, Vec<u8>) {
        let r = self.client.get(self.url(path)).send().await.unwrap();
        (r.status().as_u16(), r.bytes().await.unwrap().to_vec())
    }

    pub async fn project(&self, id: &str, members: &[&str]) {
        let members: Vec<Value> = members.iter().map(|m| json!({"id": m, "displayName": m.to_uppercase()})).collect();
        let (status, body) = self
            .post("/projects", json!({"id": id, "name": "Bistro", "scenarioText": "a small restaurant", "members": members}))
            .await;
        assert_eq!(status, 201, "{body}");
    }

    pub async fn story(&self, project: &str, user: &str, text: &str) -> Value {
        let (status, body) = self
            .post(&format!("/projects/{project}/stories"), json!({"user": user, "text": text}))
            .await;
        assert_eq!(status, 201, "{body}");
        body
    }
}

pub const ANN: [&str; 5] = [
    "As a guest, I want to view the menu so that I can choose a dish.",
    "As a diner, I want to compare menu prices so that I can pick a dish.",
    "As a visitor, I want to view my profile so that I can check my bookings.",
    "As a patron, I want to order drinks and desserts so that I can enjoy the evening.",
    "As a customer, I want to rate the waiter so that the service improves.",
];

pub const BOB: [&str; 7] = [
    "As an owner, I want to update the menu so that guests see new dishes.",
    "As an owner, I want to add menu items so that the menu stays fresh.",
    "As an owner, I want to manage table reservations so that tables are never overbooked.",
    "As an owner, I want to cancel a table reservation so that other guests can book.",
    "As an owner, I want to track the inventory so that the kitchen never runs out.",
    "As an owner, I want to publish the menu online so that guests can order ahead.",
    "As an owner, I want to list the staff schedule so that shifts are covered.",
];

/// Project `p` with members ann and bob and the restaurant stories.
pub async fn restaurant(server: &TestServer) {
    server.project("p", &["ann", "bob"]).await;
    for text in ANN {
        server.story("p", "ann", text).await;
    }
    for text in BOB {
        server.story("p", "bob", text).await;
    }
}
