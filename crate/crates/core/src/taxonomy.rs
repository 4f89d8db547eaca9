//! Expression/statement supertype membership for grammar kinds.
//!
//! Membership comes from the grammar's node-type metadata (the `expression` and
//! `statement` supertypes). `declaration` and `function_definition` are added
//! as statement kinds and literal kinds are removed from the expression set;
//! both adjustments, and a fallback member list used when the metadata lacks
//! the supertypes, ship in `data/taxonomy.json`.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::syntax::{Language, SyntaxError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Supertype {
    Expression,
    Statement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KindTaxonomy {
    pub expression_kinds: BTreeSet<String>,
    pub statement_kinds: BTreeSet<String>,
    known_kinds: BTreeSet<String>,
}

#[derive(Deserialize)]
struct TaxonomyFile {
    expression_kinds: Vec<String>,
    statement_kinds: Vec<String>,
    extra_statement_kinds: Vec<String>,
    excluded_kinds: Vec<String>,
}

#[derive(Deserialize)]
struct NodeTypeEntry {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    subtypes: Vec<NodeTypeRef>,
    #[serde(default)]
    fields: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    children: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct NodeTypeRef {
    #[serde(rename = "type")]
    kind: String,
}

const TAXONOMY_JSON: &str = include_str!("../data/taxonomy.json");

fn fallback_file() -> TaxonomyFile {
    serde_json::from_str(TAXONOMY_JSON).expect("bundled taxonomy.json is valid")
}

impl KindTaxonomy {
    /// Build from tree-sitter `node-types.json` content, falling back to the
    /// bundled member lists for any supertype the metadata does not define.
    pub fn from_node_types(node_types: &str) -> Self {
        let file = fallback_file();
        let entries: Vec<NodeTypeEntry> = serde_json::from_str(node_types).unwrap_or_default();
        let members = |names: &[&str]| -> Option<BTreeSet<String>> {
            entries
                .iter()
                .find(|e| names.contains(&e.kind.as_str()))
                .map(|e| e.subtypes.iter().map(|s| s.kind.clone()).collect())
        };
        let mut expression_kinds = members(&["expression", "_expression"])
            .unwrap_or_else(|| file.expression_kinds.iter().cloned().collect());
        let mut statement_kinds = members(&["statement", "_statement"])
            .unwrap_or_else(|| file.statement_kinds.iter().cloned().collect());
        statement_kinds.extend(file.extra_statement_kinds.iter().cloned());
        for k in &file.excluded_kinds {
            expression_kinds.remove(k);
            statement_kinds.remove(k);
        }

        let mut known_kinds = BTreeSet::new();
        for e in &entries {
            collect_kinds(e, &mut known_kinds);
        }
        known_kinds.extend(expression_kinds.iter().cloned());
        known_kinds.extend(statement_kinds.iter().cloned());
        known_kinds.extend(file.excluded_kinds.iter().cloned());
        known_kinds.extend(["translation_unit", "ERROR", "comment"].map(String::from));

        KindTaxonomy { expression_kinds, statement_kinds, known_kinds }
    }

    /// The bundled member lists alone.
    pub fn fallback() -> Self {
        Self::from_node_types("[]")
    }

    /// Shared taxonomy for a language, built once.
    pub fn for_language(language: Language) -> &'static KindTaxonomy {
        static C: OnceLock<KindTaxonomy> = OnceLock::new();
        static CPP: OnceLock<KindTaxonomy> = OnceLock::new();
        let cell = match language {
            Language::C => &C,
            Language::Cpp => &CPP,
        };
        cell.get_or_init(|| Self::from_node_types(language.node_types()))
    }

    pub fn is_known(&self, kind: &str) -> bool {
        self.known_kinds.contains(kind)
    }

    pub fn is_subtype_of(&self, kind: &str, supertype: Supertype) -> Result<bool, SyntaxError> {
        if !self.is_known(kind) {
            return Err(SyntaxError::UnknownKind(kind.to_string()));
        }
        Ok(self.contains(kind, supertype))
    }

    /// Membership without the known-kind check; unknown kinds are members of
    /// neither set.
    pub fn contains(&self, kind: &str, supertype: Supertype) -> bool {
        match supertype {
            Supertype::Expression => self.expression_kinds.contains(kind),
            Supertype::Statement => self.statement_kinds.contains(kind),
        }
    }

    /// Expression or statement kind: the node kinds a minimum edit tree may be rooted at.
    pub fn qualifies(&self, kind: &str) -> bool {
        self.contains(kind, Supertype::Expression) || self.contains(kind, Supertype::Statement)
    }
}

fn collect_kinds(entry: &NodeTypeEntry, out: &mut BTreeSet<String>) {
    out.insert(entry.kind.clone());
    for s in &entry.subtypes {
        out.insert(s.kind.clone());
    }
    let mut stack: Vec<&serde_json::Value> = entry.fields.values().collect();
    if let Some(c) = &entry.children {
        stack.push(c);
    }
    while let Some(v) = stack.pop() {
        match v {
            serde_json::Value::Object(map) => {
                if let Some(serde_json::Value::String(t)) = map.get("type") {
                    out.insert(t.clone());
                }
                stack.extend(map.values());
            }
            serde_json::Value::Array(items) => stack.extend(items.iter()),
            _ => {}
        }
    }
}

/// Supertype membership for `kind` under the C taxonomy merged with C++.
pub fn is_subtype_of(kind: &str, supertype: Supertype) -> Result<bool, SyntaxError> {
    let c = KindTaxonomy::for_language(Language::C);
    if c.is_known(kind) {
        return c.is_subtype_of(kind, supertype);
    }
    KindTaxonomy::for_language(Language::Cpp).is_subtype_of(kind, supertype)
}
