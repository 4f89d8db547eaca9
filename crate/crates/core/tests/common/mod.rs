//! Synthetic vulnerable/fixed pairs shared by the integration tests.
#![allow(dead_code)]

pub mod cgen;

use spvr::corpus::SampleRecord;
use spvr::syntax::Language;

/// Which line of the template a pair edits, and so which MET it should get.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    If,
    Assignment,
    Call,
    Declaration,
    For,
    Definition,
    /// Return-statement edit: a MET outside the six modeled kinds.
    Other,
    /// Assignment replaced by a call.
    Different,
}

impl Shape {
    pub const MODELED: [Shape; 6] =
        [Shape::If, Shape::Assignment, Shape::Call, Shape::Declaration, Shape::For, Shape::Definition];

    pub fn kind(self) -> Option<&'static str> {
        Some(match self {
            Shape::If => "if_statement",
            Shape::Assignment => "assignment_expression",
            Shape::Call => "call_expression",
            Shape::Declaration => "declaration",
            Shape::For => "for_statement",
            Shape::Definition => "function_definition",
            Shape::Other | Shape::Different => return None,
        })
    }
}

const CWES: [&str; 6] = ["CWE-119", "CWE-787", "CWE-125", "CWE-20", "CWE-476", "CWE-190"];

/// Template lines; `{i}` is replaced by the sample index.
fn template() -> Vec<&'static str> {
    vec![
        "int handle_{i}(char *buf_{i}, int len_{i})",
        "{",
        "    int n_{i} = 0;",
        "    char tmp_{i}[64];",
        "    if (len_{i} > 64) {",
        "        log_error(\"too long\", len_{i});",
        "        return -1;",
        "    }",
        "    n_{i} = len_{i};",
        "    memcpy(tmp_{i}, buf_{i}, n_{i});",
        "    for (int j = 0; j < n_{i}; j++) {",
        "        tmp_{i}[j] = buf_{i}[j];",
        "    }",
        "    return n_{i};",
        "}",
    ]
}

/// Index of the edited template line and its fixed replacement.
fn edit(shape: Shape) -> (usize, &'static str) {
    match shape {
        Shape::If => (4, "    if (len_{i} >= 64 || buf_{i} == NULL) {"),
        Shape::Assignment => (8, "    n_{i} = len_{i} - 1;"),
        Shape::Call => (9, "    memcpy(tmp_{i}, buf_{i}, sizeof(tmp_{i}));"),
        Shape::Declaration => (2, "    unsigned int n_{i} = 0;"),
        Shape::For => (10, "    for (int j = 0; j < n_{i} && j < 64; j++) {"),
        Shape::Definition => (0, "int handle_{i}(const char *buf_{i}, int len_{i})"),
        Shape::Other => (13, "    return n_{i} > 0 ? n_{i} : 0;"),
        Shape::Different => (8, "    clamp_len(&n_{i}, len_{i});"),
    }
}

fn fill(line: &str, i: usize) -> String {
    line.replace("{i}", &i.to_string())
}

pub fn vulnerable(i: usize) -> String {
    template().iter().map(|l| fill(l, i) + "\n").collect()
}

pub fn fixed(shape: Shape, i: usize) -> String {
    let (at, line) = edit(shape);
    let mut lines = template();
    lines[at] = line;
    lines.iter().map(|l| fill(l, i) + "\n").collect()
}

/// Fixed-side MET text expected for a modeled shape.
pub fn fixed_met_text(shape: Shape, i: usize) -> String {
    let (_, line) = edit(shape);
    let line = fill(line, i);
    match shape {
        Shape::Assignment | Shape::Call => line.trim().trim_end_matches(';').to_string(),
        Shape::Declaration => line.trim().to_string(),
        _ => unreachable!("only used for single-line METs"),
    }
}

pub fn record(shape: Shape, i: usize) -> SampleRecord {
    SampleRecord {
        id: format!("syn-{i:04}"),
        cwe_id: CWES[i % CWES.len()].to_string(),
        vuln_code: vulnerable(i),
        fixed_code: Some(fixed(shape, i)),
        language: Language::C,
        vuln_lines: None,
    }
}

/// `n` samples cycling through the six modeled shapes.
pub fn modeled_corpus(n: usize) -> Vec<(Shape, SampleRecord)> {
    (0..n).map(|i| (Shape::MODELED[i % 6], record(Shape::MODELED[i % 6], i))).collect()
}

pub fn to_jsonl(records: impl IntoIterator<Item = SampleRecord>) -> String {
    records.into_iter().map(|r| serde_json::to_string(&r).unwrap() + "\n").collect()
}
