//! Core library for collaborative Winograd schema development.

pub mod adaptivity;
pub mod collab;
pub mod pipeline;
pub mod quality;
pub mod schema;
pub mod text;
