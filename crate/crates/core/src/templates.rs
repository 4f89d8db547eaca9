//! Fixed English text used in findings and prompts, loaded from
//! `data/templates.json` so prompts are reproducible byte for byte.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::rules::CheckId;

#[derive(Debug, Deserialize)]
pub struct Templates {
    pub version: u32,
    pub cwe_info: String,
    pub checks: BTreeMap<CheckId, String>,
    pub with_symbols: String,
    pub fallback: String,
    pub output_directive: String,
}

const TEMPLATES_JSON: &str = include_str!("../data/templates.json");

pub fn templates() -> &'static Templates {
    static CELL: OnceLock<Templates> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(TEMPLATES_JSON).expect("bundled templates.json is valid"))
}

/// Substitute `{name}` placeholders.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (name, value) in vars {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}
