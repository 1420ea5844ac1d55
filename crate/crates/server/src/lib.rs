//! HTTP and realtime service around the storygraph engine.

pub mod api;
pub mod config;
pub mod hub;
pub mod journal;
pub mod remote;
pub mod service;
pub mod state;

pub use api::router;
pub use config::Config;
pub use service::{Service, ServiceError};
