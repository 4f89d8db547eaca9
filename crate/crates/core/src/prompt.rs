//! Prompt assembly: CWE sentence, one MET-related instruction per finding, and
//! the regenerated vulnerable code.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::met::MinimumEditTree;
use crate::rules::{is_variable_identifier, member_parent, scope_of, symbol_key, CheckId, MetType, MetView, RuleError, RuleFinding};
use crate::syntax::{Node, SyntaxTree};
use crate::taxonomy::{is_subtype_of, Supertype};
use crate::templates::{render, templates};

/// Prompts per sample.
pub const MAX_PROMPTS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("`{0}` is not in the top-25 CWE table")]
    UnknownCwe(String),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CweEntry {
    pub cwe_id: String,
    pub name: String,
}

impl CweEntry {
    /// One-line description used in prompts: the official weakness name.
    pub fn description(&self) -> &str {
        &self.name
    }
}

#[derive(Debug, Deserialize)]
struct CweFile {
    version: u32,
    entries: Vec<CweEntry>,
}

#[derive(Debug)]
pub struct CweTable {
    pub version: u32,
    entries: Vec<CweEntry>,
    by_id: BTreeMap<String, usize>,
}

impl CweTable {
    pub fn get(&self, cwe_id: &str) -> Option<&CweEntry> {
        self.by_id.get(cwe_id.trim()).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, cwe_id: &str) -> bool {
        self.get(cwe_id).is_some()
    }

    pub fn entries(&self) -> &[CweEntry] {
        &self.entries
    }
}

/// The bundled 2023 top-25 table.
pub fn cwe_table() -> &'static CweTable {
    static CELL: OnceLock<CweTable> = OnceLock::new();
    CELL.get_or_init(|| {
        let file: CweFile =
            serde_json::from_str(include_str!("../data/cwe_top25_2023.json")).expect("bundled CWE table is valid");
        let by_id = file.entries.iter().enumerate().map(|(i, e)| (e.cwe_id.clone(), i)).collect();
        CweTable { version: file.version, entries: file.entries, by_id }
    })
}

pub fn cwe_info(cwe_id: &str, met_type: &str) -> Result<String, PromptError> {
    let entry = cwe_table().get(cwe_id).ok_or_else(|| PromptError::UnknownCwe(cwe_id.to_string()))?;
    Ok(render(&templates().cwe_info, &[("met_type", met_type), ("description", entry.description())]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    /// Character budget for the regenerated code.
    pub code_budget: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig { code_budget: 3000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub sample_id: String,
    pub ordinal: usize,
    pub cwe_part: String,
    pub met_part: String,
    pub regen_code: String,
    pub assembled: String,
}

/// Header variables of the MET plus symbols predicted by PossibleVariableUse.
pub fn keep_vars(view: MetView<'_>, findings: &[RuleFinding]) -> HashSet<String> {
    let mut vars: HashSet<String> = view
        .nodes()
        .filter(|n| is_variable_identifier(*n) || member_parent(*n).is_some())
        .map(|n| symbol_key(n.text()))
        .collect();
    for f in findings.iter().filter(|f| f.check_id == CheckId::PossibleVariableUse) {
        vars.extend(f.referenced_symbols.iter().map(|s| symbol_key(s)));
    }
    vars
}

fn references_any(stmt: Node<'_>, keep: &HashSet<String>) -> bool {
    stmt.descendants().any(|n| {
        (is_variable_identifier(n) || member_parent(n).is_some()) && keep.contains(&symbol_key(n.text()))
    })
}

fn retained(stmt: Node<'_>, keep: &HashSet<String>) -> bool {
    stmt.kind() == "return_statement"
        || stmt.descendants().any(|n| n.kind() == "string_literal")
        || references_any(stmt, keep)
}

/// Statements directly inside the MET's block bodies (if branches, loop body).
fn body_statements<'t>(met: Node<'t>) -> Vec<Node<'t>> {
    let mut bodies = Vec::new();
    let mut cur = Some(met);
    while let Some(n) = cur {
        cur = None;
        for field in ["consequence", "body"] {
            bodies.extend(n.child_by_field(field));
        }
        if let Some(alt) = n.child_by_field("alternative") {
            // else_clause wraps its statement; an `else if` chain continues
            let inner = if alt.kind() == "else_clause" { alt.named_children().next() } else { Some(alt) };
            match inner {
                Some(s) if s.kind() == "if_statement" => cur = Some(s),
                Some(s) => bodies.push(s),
                None => {}
            }
        }
    }
    bodies
        .into_iter()
        .filter(|b| b.kind() == "compound_statement")
        .flat_map(|b| b.named_children().filter(|c| c.kind() != "comment").collect::<Vec<_>>())
        .collect()
}

/// Text of `range` split into lines, dropping lines whose non-blank bytes are
/// all covered by `dropped`.
fn kept_lines(src: &str, range: std::ops::Range<usize>, dropped: &[std::ops::Range<usize>]) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = range.start;
    for line in src[range.clone()].split_inclusive('\n') {
        let end = start + line.len();
        let covered = line
            .char_indices()
            .filter(|(_, c)| !c.is_whitespace())
            .all(|(i, _)| dropped.iter().any(|d| d.contains(&(start + i))));
        if !covered {
            out.push(line.trim_end_matches(['\n', '\r']).to_string());
        }
        start = end;
    }
    out
}

fn within_budget(lines: Vec<String>, budget: usize) -> String {
    let mut out = String::new();
    for (i, line) in lines.into_iter().enumerate() {
        let extra = line.len() + usize::from(i > 0);
        if i > 0 && out.len() + extra > budget {
            break;
        }
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&line);
    }
    out
}

/// Vulnerable code shown to the model, trimmed by MET type.
pub fn regenerate_code(
    tree: &SyntaxTree,
    met: &MinimumEditTree,
    keep_vars: &HashSet<String>,
    cfg: &PromptConfig,
) -> Result<String, PromptError> {
    let root = met.v_node(tree);
    let met_type = MetType::from_kind(met.met_type())?;
    let src = tree.source();
    let lines = match met_type {
        MetType::If | MetType::For => {
            let dropped: Vec<_> = body_statements(root)
                .into_iter()
                .filter(|s| !retained(*s, keep_vars))
                .map(|s| s.span())
                .collect();
            kept_lines(src, root.span(), &dropped)
        }
        MetType::Definition => kept_lines(src, root.span(), &[]),
        MetType::Assignment | MetType::Call | MetType::Declaration => {
            let met_end = root.span().end;
            let end = scope_of(root)
                .descendants()
                .filter(|n| n.span().start >= met_end && is_statement(*n))
                .map(|n| n.span().end)
                .max()
                .unwrap_or(met_end)
                .max(met_end);
            kept_lines(src, root.span().start..end, &[])
        }
    };
    Ok(within_budget(lines, cfg.code_budget))
}

fn is_statement(n: Node<'_>) -> bool {
    n.is_named()
        && (n.kind() == "declaration"
            || (n.kind() != "compound_statement" && is_subtype_of(n.kind(), Supertype::Statement).unwrap_or(false)))
}

fn assemble(cwe_part: &str, met_part: &str, regen: &str, met_type: &str) -> String {
    let directive = render(&templates().output_directive, &[("met_type", met_type)]);
    format!("{cwe_part}\n{met_part}\n```c\n{regen}\n```\n{directive}\n")
}

/// One bundle per finding, or a single fallback bundle when there are none.
pub fn assemble_prompts(
    sample_id: &str,
    cwe_id: &str,
    tree: &SyntaxTree,
    met: &MinimumEditTree,
    findings: &[RuleFinding],
    cfg: &PromptConfig,
) -> Result<Vec<PromptBundle>, PromptError> {
    let met_type = MetType::from_kind(met.met_type())?;
    let cwe_part = cwe_info(cwe_id, met_type.kind())?;
    let view = MetView::new(met, tree)?;
    let regen_code = regenerate_code(tree, met, &keep_vars(view, findings), cfg)?;
    let fallback = [render(&templates().fallback, &[("met_type", met_type.kind())])];
    let parts: Vec<&str> = if findings.is_empty() {
        fallback.iter().map(String::as_str).collect()
    } else {
        findings.iter().take(MAX_PROMPTS).map(|f| f.instruction.as_str()).collect()
    };
    Ok(parts
        .into_iter()
        .enumerate()
        .map(|(i, met_part)| PromptBundle {
            sample_id: sample_id.to_string(),
            ordinal: i + 1,
            cwe_part: cwe_part.clone(),
            met_part: met_part.to_string(),
            regen_code: regen_code.clone(),
            assembled: assemble(&cwe_part, met_part, &regen_code, met_type.kind()),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::met::{locate_met_online, EditSpan, Side};
    use crate::rules::{run_rules, RuleConfig};
    use crate::syntax::{parse, SourceUnit};

    fn met_at(src: &str, line: usize) -> (SyntaxTree, MinimumEditTree) {
        let unit = SourceUnit::c(src);
        let tree = parse(&unit).unwrap();
        let span = EditSpan::from_lines(&unit, Side::Vulnerable, line, line).unwrap().unwrap();
        let met = MinimumEditTree::online(locate_met_online(&tree, &span).unwrap().unwrap());
        (tree, met)
    }

    #[test]
    fn cwe_sentences() {
        assert_eq!(
            cwe_info("CWE-125", "if_statement").unwrap(),
            "This if_statement has a problem of Out-of-bounds Read."
        );
        assert!(cwe_info("CWE-119", "if_statement")
            .unwrap()
            .contains("Improper Restriction of Operations within the Bounds of a Memory Buffer"));
        assert_eq!(cwe_info("CWE-9999", "if_statement"), Err(PromptError::UnknownCwe("CWE-9999".into())));
        assert_eq!(cwe_table().entries().len(), 25);
    }

    #[test]
    fn if_body_is_filtered() {
        let src = "int f(int n, char *buf) {\n  int tmp;\n  if (n > 8) {\n    log_msg(\"bad n\");\n    tmp = 3;\n    return -1;\n  }\n  return 0;\n}\n";
        let (tree, met) = met_at(src, 3);
        assert_eq!(met.met_type(), "if_statement");
        let view = MetView::new(&met, &tree).unwrap();
        let code = regenerate_code(&tree, &met, &keep_vars(view, &[]), &PromptConfig::default()).unwrap();
        assert_eq!(code, "if (n > 8) {\n    log_msg(\"bad n\");\n    return -1;\n  }");
    }

    #[test]
    fn if_body_keeps_referencing_statements() {
        let src = "int f(int n) {\n  int tmp;\n  if (n > 8) {\n    tmp = n;\n    g(tmp);\n  }\n  return 0;\n}\n";
        let (tree, met) = met_at(src, 3);
        let view = MetView::new(&met, &tree).unwrap();
        let code = regenerate_code(&tree, &met, &keep_vars(view, &[]), &PromptConfig::default()).unwrap();
        assert_eq!(code, "if (n > 8) {\n    tmp = n;\n  }");
    }

    #[test]
    fn definition_is_prefix() {
        let src = "int f(int n) {\n  n = n + 1;\n  return n;\n}\n";
        let tree = parse(&SourceUnit::c(src)).unwrap();
        let def = tree.nodes().find(|n| n.kind() == "function_definition").unwrap();
        let met = MinimumEditTree::online(def);
        let full = regenerate_code(&tree, &met, &HashSet::new(), &PromptConfig::default()).unwrap();
        assert_eq!(full, src.trim_end());
        let short = regenerate_code(&tree, &met, &HashSet::new(), &PromptConfig { code_budget: 30 }).unwrap();
        assert_eq!(short, "int f(int n) {\n  n = n + 1;");
    }

    #[test]
    fn assignment_takes_following_code() {
        let src = "int f(int n) {\n  n = n + 1;\n  g(n);\n  return n;\n}\n";
        let (tree, met) = met_at(src, 2);
        assert_eq!(met.met_type(), "assignment_expression");
        let code = regenerate_code(&tree, &met, &HashSet::new(), &PromptConfig::default()).unwrap();
        assert_eq!(code, "n = n + 1;\n  g(n);\n  return n;");
    }

    #[test]
    fn last_statement_is_met_text() {
        let src = "void f(char *d, char *s, int n) {\n  memcpy(d, s, n);\n}\n";
        let (tree, met) = met_at(src, 2);
        let code = regenerate_code(&tree, &met, &HashSet::new(), &PromptConfig::default()).unwrap();
        assert_eq!(code, "memcpy(d, s, n)");
    }

    #[test]
    fn bundles_share_everything_but_met_part() {
        let src = "void f(int n, int total) {\n  total = 0;\n  n = (long)g(n * 7);\n  h(total, total);\n}\n";
        let (tree, met) = met_at(src, 3);
        let findings = run_rules(&met, &tree, &RuleConfig::default()).unwrap();
        let bundles = assemble_prompts("s1", "CWE-190", &tree, &met, &findings, &PromptConfig::default()).unwrap();
        assert_eq!(bundles.len(), 3);
        for (i, b) in bundles.iter().enumerate() {
            assert_eq!(b.ordinal, i + 1);
            assert_eq!(b.cwe_part, bundles[0].cwe_part);
            assert_eq!(b.regen_code, bundles[0].regen_code);
            let c = b.assembled.find(&b.cwe_part).unwrap();
            let m = b.assembled.find(&b.met_part).unwrap();
            let r = b.assembled.find(&b.regen_code).unwrap();
            assert!(c < m && m < r);
            assert!(b.assembled.contains("Return only the fixed assignment_expression"));
        }
    }

    #[test]
    fn fallback_bundle() {
        let src = "void f(char *d, char *s) {\n  ::g(d, s);\n}\n";
        let unit = SourceUnit::cpp(src);
        let tree = parse(&unit).unwrap();
        let call = tree.nodes().find(|n| n.kind() == "call_expression").unwrap();
        let met = MinimumEditTree::online(call);
        let bundles = assemble_prompts("s2", "CWE-787", &tree, &met, &[], &PromptConfig::default()).unwrap();
        assert_eq!(bundles.len(), 1);
        assert_eq!(bundles[0].met_part, "Re-examine this call_expression and fix the vulnerability in it.");
    }

    #[test]
    fn unsupported_met_type() {
        let (tree, met) = met_at("int f(void) {\n  return 0;\n}\n", 2);
        assert!(matches!(
            assemble_prompts("s", "CWE-787", &tree, &met, &[], &PromptConfig::default()),
            Err(PromptError::Rule(RuleError::UnsupportedMetType(_)))
        ));
    }
}
