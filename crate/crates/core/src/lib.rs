//! Core library for forgebox, a declarative, state-driven environment build
//! orchestrator.
//!
//! The pipeline: [`speclang`] parses playbook and role documents into typed
//! specs, [`planner`] linearizes the selected roles into a deterministic
//! [`planner::Plan`], [`engine`] converges a [`drivers::Target`] to the
//! declared state with fail-fast semantics, [`gates`] decides whether the
//! build may be packaged, and [`imagestore`] turns the converged target into
//! a deterministic, provenance-carrying image that can be published, fetched,
//! and instantiated.

pub mod archive;
pub mod digest;
pub mod drivers;
pub mod engine;
pub mod gates;
pub mod imagestore;
pub mod planner;
pub mod speclang;
