//! One live call through the OpenAI-compatible backend. Needs
//! SHAPECRAFT_API_KEY; the endpoint and model can be overridden.
//!
//!     SHAPECRAFT_API_KEY=... cargo run --example http_chat -- [endpoint] [model]

use std::collections::BTreeMap;

use shapecraft::cli::config::{DEFAULT_ENDPOINT, DEFAULT_MODEL};
use shapecraft::llm::{AgentRole, BackendConfig, ChatBackend, ChatMessage, ChatRequest, HttpBackend, API_KEY_ENV};
use shapecraft::render::{encode_png, preset_cameras, render};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if std::env::var_os(API_KEY_ENV).is_none() {
        println!("{API_KEY_ENV} is not set; nothing to do");
        return Ok(());
    }
    let mut args = std::env::args().skip(1);
    let endpoint = args.next().unwrap_or_else(|| DEFAULT_ENDPOINT.into());
    let model = args.next().unwrap_or_else(|| DEFAULT_MODEL.into());
    let cfg = BackendConfig::new(&endpoint, &model);
    let configs: BTreeMap<_, _> = AgentRole::ALL.into_iter().map(|r| (r, cfg.clone())).collect();
    let backend = HttpBackend::from_env(configs, false)?;

    let sphere = shapecraft::geometry::primitives::uv_sphere(32, 16);
    let png = encode_png(&render(&[sphere], &preset_cameras()[0], 256)?);
    let req = ChatRequest::new(
        AgentRole::Evaluator,
        vec![ChatMessage::user("What solid is shown? Answer in one word.").with_images(vec![png])],
    );
    println!("{}", backend.complete(&req)?);
    Ok(())
}
