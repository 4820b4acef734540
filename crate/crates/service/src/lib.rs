//! Event-sourced service around the WinoFusion collaboration engine: API,
//! persistence, configuration, scheduling and a scripted-crowd harness.

pub mod app;
pub mod config;
pub mod server;
pub mod sim;
pub mod store;
