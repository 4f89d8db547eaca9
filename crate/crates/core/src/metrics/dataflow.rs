use std::collections::HashMap;

use crate::rules::is_variable_identifier;
use crate::syntax::{Node, SyntaxTree};

/// A def-use pair. The variable is renamed by order of first appearance and
/// both ends are identified by their ordinal among that variable's
/// definitions and uses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DataflowEdge {
    pub var: String,
    pub def: usize,
    pub use_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Role {
    Use,
    Def,
}

/// Is `n` the name bound by a declarator (possibly below pointer/array wrappers)?
fn declared_name(n: Node<'_>) -> bool {
    let mut cur = n;
    while let Some(p) = cur.parent() {
        if cur.field() != Some("declarator") {
            return false;
        }
        match p.kind() {
            "init_declarator" | "pointer_declarator" | "array_declarator" | "reference_declarator"
            | "parenthesized_declarator" => cur = p,
            "declaration" | "parameter_declaration" | "field_declaration" => return true,
            _ => return false,
        }
    }
    false
}

/// Events for one identifier occurrence: (effective position, role).
fn events(n: Node<'_>) -> Vec<(usize, Role)> {
    let start = n.span().start;
    if declared_name(n) {
        // the binding takes effect after its initializer
        let end = n.ancestor_or_self("init_declarator").map_or(n.span().end, |d| d.span().end);
        return vec![(end, Role::Def)];
    }
    let parent = n.parent();
    match parent {
        Some(p) if p.kind() == "assignment_expression" && n.field() == Some("left") => {
            let op = p.child_by_field("operator").map(|o| o.kind()).unwrap_or("=");
            let mut out = Vec::new();
            if op != "=" {
                out.push((start, Role::Use));
            }
            out.push((p.span().end, Role::Def));
            out
        }
        Some(p) if p.kind() == "update_expression" => vec![(start, Role::Use), (p.span().end, Role::Def)],
        _ => vec![(start, Role::Use)],
    }
}

fn edges_in(scope: Node<'_>, names: &mut HashMap<String, usize>, out: &mut Vec<DataflowEdge>) {
    let mut evs: Vec<(usize, Role, usize, &str)> = Vec::new();
    for (i, n) in scope.descendants().filter(|n| is_variable_identifier(*n)).enumerate() {
        for (pos, role) in events(n) {
            evs.push((pos, role, i, n.text()));
        }
    }
    // uses at a position see definitions that end there only afterwards
    evs.sort_by_key(|&(pos, role, i, _)| (pos, role, i));
    let mut def_count: HashMap<&str, usize> = HashMap::new();
    let mut use_count: HashMap<&str, usize> = HashMap::new();
    for (_, role, _, name) in evs {
        let next = names.len();
        let id = *names.entry(name.to_string()).or_insert(next);
        match role {
            Role::Def => *def_count.entry(name).or_insert(0) += 1,
            Role::Use => {
                let u = use_count.entry(name).or_insert(0);
                if let Some(&d) = def_count.get(name) {
                    out.push(DataflowEdge { var: format!("var_{id}"), def: d - 1, use_: *u });
                }
                *u += 1;
            }
        }
    }
}

/// Nearest-definition def-use edges, per function (or for the whole tree
/// when it has no function).
pub fn dataflow_edges(tree: &SyntaxTree) -> Vec<DataflowEdge> {
    let mut names = HashMap::new();
    let mut out = Vec::new();
    let functions: Vec<_> = tree.nodes().filter(|n| n.kind() == "function_definition").collect();
    if functions.is_empty() {
        edges_in(tree.root(), &mut names, &mut out);
    } else {
        for f in functions {
            if f.parent().and_then(|p| p.ancestor_or_self("function_definition")).is_none() {
                edges_in(f, &mut names, &mut out);
            }
        }
    }
    out
}

/// Fraction of reference edges matched by the candidate (multiset).
pub fn dataflow_match(candidate: &[DataflowEdge], reference: &[DataflowEdge]) -> f64 {
    if reference.is_empty() {
        return if candidate.is_empty() { 1.0 } else { 0.0 };
    }
    let mut pool: HashMap<&DataflowEdge, usize> = HashMap::new();
    for e in candidate {
        *pool.entry(e).or_insert(0) += 1;
    }
    let matched = reference
        .iter()
        .filter(|e| match pool.get_mut(e) {
            Some(c) if *c > 0 => {
                *c -= 1;
                true
            }
            _ => false,
        })
        .count();
    matched as f64 / reference.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, SourceUnit};

    fn edges(src: &str) -> Vec<DataflowEdge> {
        dataflow_edges(&parse(&SourceUnit::c(src)).unwrap())
    }

    fn e(var: usize, def: usize, use_: usize) -> DataflowEdge {
        DataflowEdge { var: format!("var_{var}"), def, use_ }
    }

    #[test]
    fn single_chain() {
        assert_eq!(edges("void f(void) { int a = 1; b = a; }"), [e(0, 0, 0)]);
    }

    #[test]
    fn no_variables() {
        assert!(edges("void f(void) { g(1); }").is_empty());
    }

    #[test]
    fn nearest_definition_wins() {
        // a=1; a=2; x=a;  -> the read of a binds to the second definition
        assert_eq!(edges("void f(void) { a = 1; a = 2; x = a; }"), [e(0, 1, 0)]);
    }

    #[test]
    fn self_update_reads_previous() {
        // n is a parameter (def 0); n = n + 1 reads def 0 then defines def 1
        assert_eq!(edges("int f(int n) { n = n + 1; return n; }"), [e(0, 0, 0), e(0, 1, 1)]);
    }

    #[test]
    fn compound_and_increment() {
        let got = edges("void f(int i) { i += 2; i++; }");
        assert_eq!(got, [e(0, 0, 0), e(0, 1, 1)]);
    }

    #[test]
    fn matching() {
        let r = [e(0, 0, 0), e(1, 0, 0)];
        assert_eq!(dataflow_match(&r, &r), 1.0);
        assert_eq!(dataflow_match(&r[..1], &r), 0.5);
        assert_eq!(dataflow_match(&[], &[]), 1.0);
        assert_eq!(dataflow_match(&r, &[]), 0.0);
    }
}
