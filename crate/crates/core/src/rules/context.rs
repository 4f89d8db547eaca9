//! Variable occurrences inside a MET (inner context) and in the rest of the
//! enclosing function (outer context).

use std::collections::HashMap;

use crate::syntax::Node;

/// Whitespace-free key used to compare spellings such as `e -> next`.
pub fn symbol_key(text: &str) -> String {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// An identifier read or written as a variable (not a callee or function name).
pub fn is_variable_identifier(n: Node<'_>) -> bool {
    if n.kind() != "identifier" {
        return false;
    }
    match n.parent() {
        Some(p) if p.kind() == "call_expression" && n.field() == Some("function") => false,
        Some(p) if p.kind() == "function_declarator" && n.field() == Some("declarator") => false,
        Some(p) if matches!(p.kind(), "labeled_statement" | "goto_statement") => false,
        _ => true,
    }
}

/// A member access `p->m` / `p.m` whose object is a plain name or another member access.
pub fn member_parent(n: Node<'_>) -> Option<Node<'_>> {
    if n.kind() != "field_expression" {
        return None;
    }
    if n.parent().is_some_and(|p| p.kind() == "call_expression") && n.field() == Some("function") {
        return None;
    }
    let arg = n.child_by_field("argument")?;
    matches!(arg.kind(), "identifier" | "field_expression").then_some(arg)
}

#[derive(Debug, Clone)]
pub struct Occurrence {
    /// Verbatim spelling of the first occurrence.
    pub spelling: String,
    pub count: usize,
    pub first: usize,
    /// Key of the object for member accesses.
    pub parent: Option<String>,
}

/// Counts of variable identifiers and member paths over a set of nodes.
#[derive(Debug, Default, Clone)]
pub struct SymbolCounts {
    pub identifiers: HashMap<String, Occurrence>,
    pub members: HashMap<String, Occurrence>,
}

impl SymbolCounts {
    fn add(map: &mut HashMap<String, Occurrence>, n: Node<'_>, parent: Option<String>) {
        let key = symbol_key(n.text());
        map.entry(key)
            .and_modify(|o| o.count += 1)
            .or_insert_with(|| Occurrence {
                spelling: n.text().to_string(),
                count: 1,
                first: n.span().start,
                parent,
            });
    }

    pub fn collect<'t>(nodes: impl IntoIterator<Item = Node<'t>>) -> SymbolCounts {
        let mut counts = SymbolCounts::default();
        for n in nodes {
            if is_variable_identifier(n) {
                Self::add(&mut counts.identifiers, n, None);
            } else if let Some(p) = member_parent(n) {
                Self::add(&mut counts.members, n, Some(symbol_key(p.text())));
            }
        }
        counts
    }

    /// Occurrences of `key` as a plain name or a member path.
    pub fn count_of(&self, key: &str) -> usize {
        self.identifiers.get(key).map_or(0, |o| o.count) + self.members.get(key).map_or(0, |o| o.count)
    }

    pub fn has(&self, key: &str) -> bool {
        self.identifiers.contains_key(key) || self.members.contains_key(key)
    }
}

/// The enclosing function of the MET, or the tree root for bare fragments.
pub fn scope_of(met: Node<'_>) -> Node<'_> {
    met.ancestor_or_self("function_definition")
        .unwrap_or_else(|| met.tree().root())
}

/// Nodes of the enclosing function outside every subtree in `region`.
pub fn outer_context<'t>(region: Vec<Node<'t>>) -> impl Iterator<Item = Node<'t>> + 't {
    let scope = region.first().map(|r| scope_of(*r));
    scope
        .into_iter()
        .flat_map(|s| s.descendants())
        .filter(move |n| !region.iter().any(|r| r.contains_node(*n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, SourceUnit};

    #[test]
    fn counts_members_and_parents() {
        let src = "void f(struct s *e) { g(e->a, e -> a, e->b->c); x = e; }";
        let tree = parse(&SourceUnit::c(src)).unwrap();
        let counts = SymbolCounts::collect(tree.nodes());
        assert_eq!(counts.members["e->a"].count, 2);
        assert_eq!(counts.members["e->a"].spelling, "e->a");
        assert_eq!(counts.members["e->b->c"].parent.as_deref(), Some("e->b"));
        assert_eq!(counts.members["e->b"].count, 1);
        // e: three objects plus the assignment read; g is a callee
        assert_eq!(counts.identifiers["e"].count, 5);
        assert!(!counts.identifiers.contains_key("g"));
        assert!(!counts.identifiers.contains_key("f"));
    }
}
