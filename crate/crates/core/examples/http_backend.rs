//! Send one prompt to an OpenAI-compatible chat endpoint.
//!
//! ```text
//! SPVR_ENDPOINT=http://localhost:8000/v1/chat/completions SPVR_MODEL=codellama \
//!     cargo run --example http_backend
//! ```
//!
//! The bearer token, if any, is read from `SPVR_API_KEY`. Without
//! `SPVR_ENDPOINT` the example only prints the configuration it would use.

use spvr::llm::{Gateway, HttpBackend, ModelConfig, ResponseCache};

fn main() {
    let mut cfg = ModelConfig { k: 1, ..ModelConfig::default() };
    if let Ok(model) = std::env::var("SPVR_MODEL") {
        cfg.model_name = model;
    }
    let Ok(endpoint) = std::env::var("SPVR_ENDPOINT") else {
        println!("SPVR_ENDPOINT is not set; configuration:\n{}", toml::to_string(&cfg).unwrap());
        return;
    };
    cfg.endpoint_url = endpoint;
    let cache = ResponseCache::open(std::env::temp_dir().join("spvr-example-cache")).unwrap();
    let gateway = Gateway::new(HttpBackend::new(&cfg).unwrap(), cfg, Some(cache)).unwrap();
    let prompt = "This if_statement has a problem of Out-of-bounds Read.\n```c\nif (i > n) return -1;\n```\nReturn only the fixed if_statement.";
    match gateway.complete("example", 1, prompt) {
        Ok(records) => {
            for r in records {
                println!("attempt {} ({} ms, cached: {}):\n{}", r.attempt, r.latency_ms, r.cached, r.raw_text);
            }
        }
        Err(e) => eprintln!("request failed: {e}"),
    }
}
