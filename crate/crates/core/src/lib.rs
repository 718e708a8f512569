pub mod geometry;
pub mod agents;
pub mod cli;
pub mod executor;
pub mod gps;
pub mod llm;
pub mod metrics;
pub mod program;
pub mod render;
