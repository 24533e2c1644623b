//! Workspace side of conflict-radar: configuration, SCM revisions, the
//! file-watching agent and the scripted demo runner.

pub mod agent;
pub mod config;
pub mod demo;
pub mod report;
pub mod revision;
pub mod scan;
