//! Inspection rules gated by MET type.
//!
//! Each MET type has a fixed list of common checks followed by its own extra
//! checks. Checks run in that order and the first `max_findings` that trigger
//! become the MET-related part of the prompts.

mod context;
pub mod literal;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::met::MinimumEditTree;
use crate::syntax::{Node, SyntaxTree};
use crate::templates::{render, templates};

pub use context::{is_variable_identifier, member_parent, outer_context, scope_of, symbol_key, SymbolCounts};
pub use literal::literal_value;

/// Upper bound on symbols named in a single finding.
pub const MAX_SYMBOLS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("unsupported MET type `{0}`")]
    UnsupportedMetType(String),
}

/// The six MET types with inspection rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetType {
    If,
    Assignment,
    Call,
    Declaration,
    For,
    Definition,
}

impl MetType {
    pub const ALL: [MetType; 6] = [
        MetType::If,
        MetType::Assignment,
        MetType::Call,
        MetType::Declaration,
        MetType::For,
        MetType::Definition,
    ];

    pub fn from_kind(kind: &str) -> Result<MetType, RuleError> {
        Ok(match kind {
            "if_statement" => MetType::If,
            "assignment_expression" => MetType::Assignment,
            "call_expression" => MetType::Call,
            "declaration" => MetType::Declaration,
            "for_statement" => MetType::For,
            "function_definition" => MetType::Definition,
            other => return Err(RuleError::UnsupportedMetType(other.to_string())),
        })
    }

    pub fn kind(self) -> &'static str {
        match self {
            MetType::If => "if_statement",
            MetType::Assignment => "assignment_expression",
            MetType::Call => "call_expression",
            MetType::Declaration => "declaration",
            MetType::For => "for_statement",
            MetType::Definition => "function_definition",
        }
    }

    /// Expression kinds need an enclosing statement to parse on their own.
    pub fn is_expression(self) -> bool {
        matches!(self, MetType::Assignment | MetType::Call)
    }
}

impl fmt::Display for MetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckId {
    PossibleVariableUse,
    NumberLiteral,
    FunctionCall,
    TypeCast,
    TypeCheck,
    Condition,
    MinMax,
    Ternary,
    BufferWords,
    ScopeResolution,
    Initialization,
    Pointer,
    StaticMethod,
}

impl CheckId {
    pub const ALL: [CheckId; 13] = [
        CheckId::PossibleVariableUse,
        CheckId::NumberLiteral,
        CheckId::FunctionCall,
        CheckId::TypeCast,
        CheckId::TypeCheck,
        CheckId::Condition,
        CheckId::MinMax,
        CheckId::Ternary,
        CheckId::BufferWords,
        CheckId::ScopeResolution,
        CheckId::Initialization,
        CheckId::Pointer,
        CheckId::StaticMethod,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFinding {
    pub check_id: CheckId,
    pub instruction: String,
    #[serde(rename = "symbols")]
    pub referenced_symbols: Vec<String>,
    pub priority: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub similarity_threshold: f64,
    pub min_context_occurrences: usize,
    pub max_findings: usize,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig { similarity_threshold: 0.5, min_context_occurrences: 2, max_findings: 3 }
    }
}

/// Common checks per MET type, in priority order.
fn common_checks(met_type: MetType) -> &'static [CheckId] {
    use CheckId::*;
    match met_type {
        MetType::If => &[PossibleVariableUse, NumberLiteral, FunctionCall, Condition],
        MetType::Assignment => &[PossibleVariableUse, NumberLiteral, FunctionCall, TypeCast],
        MetType::Call => &[],
        MetType::Declaration => &[NumberLiteral, FunctionCall, TypeCast, TypeCheck],
        MetType::For => &[PossibleVariableUse, NumberLiteral, Condition],
        MetType::Definition => &[TypeCheck],
    }
}

fn extra_checks(met_type: MetType) -> &'static [CheckId] {
    use CheckId::*;
    match met_type {
        MetType::Assignment => &[MinMax, Ternary],
        MetType::Call => &[BufferWords, ScopeResolution],
        MetType::Declaration => &[Initialization, Pointer],
        MetType::Definition => &[StaticMethod],
        MetType::If | MetType::For => &[],
    }
}

pub fn applicable_checks(met_type: &str) -> Result<Vec<CheckId>, RuleError> {
    let t = MetType::from_kind(met_type)?;
    Ok(common_checks(t).iter().chain(extra_checks(t)).copied().collect())
}

/// The MET root as seen by the checks.
///
/// For `if` and `for` METs the checks inspect the statement header only; the
/// body belongs to the surrounding context.
#[derive(Clone, Copy)]
pub struct MetView<'t> {
    pub root: Node<'t>,
    pub met_type: MetType,
}

impl<'t> MetView<'t> {
    pub fn new(met: &MinimumEditTree, tree: &'t SyntaxTree) -> Result<MetView<'t>, RuleError> {
        Ok(MetView { root: met.v_node(tree), met_type: MetType::from_kind(met.met_type())? })
    }

    pub fn from_node(root: Node<'t>) -> Result<MetView<'t>, RuleError> {
        Ok(MetView { root, met_type: MetType::from_kind(root.kind())? })
    }

    /// Roots of the inspected region.
    pub fn region(self) -> Vec<Node<'t>> {
        match self.met_type {
            MetType::If => self.root.child_by_field("condition").into_iter().collect(),
            MetType::For => self
                .root
                .children()
                .filter(|c| c.is_named() && c.field() != Some("body"))
                .collect(),
            _ => vec![self.root],
        }
    }

    pub fn in_region(self, n: Node<'_>) -> bool {
        self.region().iter().any(|r| r.contains_node(n))
    }

    /// All nodes of the inspected region in pre-order.
    pub fn nodes(self) -> impl Iterator<Item = Node<'t>> {
        self.region().into_iter().flat_map(|r| r.descendants())
    }

    fn of_kind(self, kind: &'static str) -> impl Iterator<Item = Node<'t>> {
        self.nodes().filter(move |n| n.kind() == kind)
    }
}

fn unique_first<I: IntoIterator<Item = String>>(items: I) -> Vec<String> {
    let mut seen = HashSet::new();
    items.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

fn finding(check_id: CheckId, met_type: MetType, symbols: Vec<String>) -> RuleFinding {
    let t = templates();
    let joined = symbols.join(", ");
    let with_symbols = if symbols.is_empty() {
        String::new()
    } else {
        render(&t.with_symbols, &[("symbols", &joined)])
    };
    let instruction = render(
        &t.checks[&check_id],
        &[("met_type", met_type.kind()), ("symbols", &joined), ("with_symbols", &with_symbols)],
    );
    RuleFinding { check_id, instruction, referenced_symbols: symbols, priority: 0 }
}

/// Normalized Levenshtein similarity: `1 - distance / max(len)`.
pub fn similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(a, b)
}

/// Context symbols that may belong in the MET, best candidates first.
pub fn possible_variable_symbols(view: MetView<'_>, cfg: &RuleConfig) -> Vec<String> {
    let inner = SymbolCounts::collect(view.nodes());
    let outer = SymbolCounts::collect(outer_context(view.region()));

    // member accesses missing from the MET whose object is used repeatedly
    let mut members: Vec<_> = outer
        .members
        .iter()
        .filter(|(key, _)| !inner.members.contains_key(*key))
        .filter_map(|(_, occ)| {
            let parent = occ.parent.as_deref()?;
            (outer.count_of(parent) >= cfg.min_context_occurrences).then_some((inner.has(parent), occ))
        })
        .collect();
    members.sort_by(|(a_in, a), (b_in, b)| {
        b_in.cmp(a_in).then(b.count.cmp(&a.count)).then(a.first.cmp(&b.first))
    });

    // plain names missing from the MET but similar to one inside it
    let mut similar: Vec<_> = outer
        .identifiers
        .iter()
        .filter(|(key, occ)| !inner.identifiers.contains_key(*key) && occ.count >= cfg.min_context_occurrences)
        .filter_map(|(key, occ)| {
            let best = inner
                .identifiers
                .keys()
                .map(|k| similarity(k, key))
                .fold(0.0f64, f64::max);
            (best > cfg.similarity_threshold).then_some((best, occ))
        })
        .collect();
    similar.sort_by(|(a_sim, a), (b_sim, b)| {
        b_sim
            .total_cmp(a_sim)
            .then(b.count.cmp(&a.count))
            .then(a.first.cmp(&b.first))
    });

    let symbols = members
        .into_iter()
        .map(|(_, o)| o.spelling.clone())
        .chain(similar.into_iter().map(|(_, o)| o.spelling.clone()));
    unique_first(symbols).into_iter().take(MAX_SYMBOLS).collect()
}

fn check_possible_variable_use(view: MetView<'_>, cfg: &RuleConfig) -> Option<RuleFinding> {
    let symbols = possible_variable_symbols(view, cfg);
    (!symbols.is_empty()).then(|| finding(CheckId::PossibleVariableUse, view.met_type, symbols))
}

fn check_number_literal_view(view: MetView<'_>) -> Option<RuleFinding> {
    let literals: Vec<String> = view
        .of_kind("number_literal")
        .filter(|n| !matches!(literal_value(n.text()), Some(v) if v == 0.0 || v == 1.0))
        .map(|n| n.text().to_string())
        .collect();
    let literals = unique_first(literals);
    (!literals.is_empty()).then(|| finding(CheckId::NumberLiteral, view.met_type, cap(literals)))
}

fn callee_names(view: MetView<'_>) -> Vec<String> {
    unique_first(
        view.of_kind("call_expression")
            .filter_map(|c| c.child_by_field("function"))
            .map(|f| f.text().to_string()),
    )
}

fn check_function_call_view(view: MetView<'_>) -> Option<RuleFinding> {
    let callees = callee_names(view);
    (!callees.is_empty()).then(|| finding(CheckId::FunctionCall, view.met_type, callees))
}

fn check_type_cast_view(view: MetView<'_>) -> Option<RuleFinding> {
    let casts = unique_first(
        view.of_kind("cast_expression")
            .filter_map(|c| c.child_by_field("type"))
            .map(|t| t.text().to_string()),
    );
    (!casts.is_empty()).then(|| finding(CheckId::TypeCast, view.met_type, cap(casts)))
}

fn is_numeric_type(text: &str) -> bool {
    let words: Vec<&str> = text.split(|c: char| !(c.is_alphanumeric() || c == '_')).collect();
    words.iter().any(|w| matches!(*w, "int" | "long" | "double")) && !words.contains(&"unsigned")
}

/// Name declared by a declarator, descending through init/array declarators.
/// Pointer declarators yield `None`: the variable is a pointer, not a number.
fn declared_name<'t>(decl: Node<'t>, allow_pointer: bool) -> Option<Node<'t>> {
    let mut cur = decl;
    loop {
        match cur.kind() {
            "identifier" => return Some(cur),
            "pointer_declarator" | "reference_declarator" if !allow_pointer => return None,
            "init_declarator" | "array_declarator" | "parenthesized_declarator" | "attributed_declarator"
            | "pointer_declarator" | "reference_declarator" => {
                cur = cur.child_by_field("declarator").or_else(|| cur.named_children().next())?;
            }
            _ => return None,
        }
    }
}

/// Names declared with a numeric type under `scope`.
fn numeric_declarations(scope: Node<'_>) -> HashSet<String> {
    let mut names = HashSet::new();
    for n in scope.descendants() {
        if !matches!(n.kind(), "declaration" | "parameter_declaration") {
            continue;
        }
        let Some(ty) = n.child_by_field("type") else { continue };
        if !is_numeric_type(ty.text()) {
            continue;
        }
        for d in n.children_by_field("declarator") {
            if let Some(name) = declared_name(d, false) {
                names.insert(name.text().to_string());
            }
        }
    }
    names
}

fn check_type_view(view: MetView<'_>) -> Option<RuleFinding> {
    let numeric = numeric_declarations(scope_of(view.root));
    let numeric_here: HashSet<String> = view.region().into_iter().flat_map(numeric_declarations).collect();
    let names = unique_first(
        view.nodes()
            .filter(|n| is_variable_identifier(*n))
            .map(|n| n.text().to_string())
            .filter(|name| numeric.contains(name) || numeric_here.contains(name)),
    );
    (!names.is_empty()).then(|| finding(CheckId::TypeCheck, view.met_type, cap(names)))
}

fn check_condition_view(view: MetView<'_>) -> Result<Option<RuleFinding>, RuleError> {
    if !matches!(view.met_type, MetType::If | MetType::For) {
        return Err(RuleError::UnsupportedMetType(view.met_type.kind().to_string()));
    }
    let Some(cond) = view.root.child_by_field("condition") else { return Ok(None) };
    let ops = unique_first(
        cond.descendants()
            .filter(|n| !n.is_named() && matches!(n.kind(), "<" | "<=" | ">" | ">="))
            .filter(|n| n.parent().is_some_and(|p| p.kind() == "binary_expression"))
            .map(|n| n.text().to_string()),
    );
    Ok((!ops.is_empty()).then(|| finding(CheckId::Condition, view.met_type, ops)))
}

fn last_segment(callee: &str) -> &str {
    let cut = callee.rfind([':', '.', '>']).map_or(0, |i| i + 1);
    callee[cut..].trim()
}

fn check_min_max(view: MetView<'_>, cfg: &RuleConfig) -> Option<RuleFinding> {
    let has = callee_names(view)
        .iter()
        .any(|c| matches!(last_segment(c), "min" | "max" | "MIN" | "MAX"));
    (!has).then(|| finding(CheckId::MinMax, view.met_type, possible_variable_symbols(view, cfg)))
}

fn check_ternary(view: MetView<'_>, cfg: &RuleConfig) -> Option<RuleFinding> {
    let has = view.of_kind("conditional_expression").next().is_some();
    (!has).then(|| finding(CheckId::Ternary, view.met_type, possible_variable_symbols(view, cfg)))
}

fn check_buffer_words(view: MetView<'_>) -> Option<RuleFinding> {
    let hits: Vec<String> = callee_names(view)
        .into_iter()
        .filter(|c| {
            let name = last_segment(c).to_ascii_lowercase();
            ["mem", "str", "cpy"].iter().any(|w| name.contains(w))
        })
        .collect();
    (!hits.is_empty()).then(|| finding(CheckId::BufferWords, view.met_type, cap(hits)))
}

fn check_scope_resolution(view: MetView<'_>, cfg: &RuleConfig) -> Option<RuleFinding> {
    let has = view.nodes().any(|n| n.kind() == "qualified_identifier" || n.kind() == "::");
    (!has).then(|| finding(CheckId::ScopeResolution, view.met_type, possible_variable_symbols(view, cfg)))
}

fn declarators(view: MetView<'_>) -> impl Iterator<Item = Node<'_>> {
    view.root.children_by_field("declarator")
}

fn check_initialization(view: MetView<'_>) -> Option<RuleFinding> {
    let names = unique_first(
        declarators(view)
            .filter(|d| d.kind() != "init_declarator")
            .filter_map(|d| declared_name(d, true))
            .map(|n| n.text().to_string()),
    );
    (!names.is_empty()).then(|| finding(CheckId::Initialization, view.met_type, cap(names)))
}

fn check_pointer(view: MetView<'_>) -> Option<RuleFinding> {
    let has = declarators(view).any(|d| d.descendants().any(|n| n.kind() == "pointer_declarator"));
    if has {
        return None;
    }
    let names = unique_first(
        declarators(view)
            .filter_map(|d| declared_name(d, true))
            .map(|n| n.text().to_string()),
    );
    Some(finding(CheckId::Pointer, view.met_type, cap(names)))
}

fn function_name(def: Node<'_>) -> Option<Node<'_>> {
    let mut cur = def.child_by_field("declarator")?;
    loop {
        match cur.kind() {
            "function_declarator" => {
                let d = cur.child_by_field("declarator")?;
                return matches!(d.kind(), "identifier" | "field_identifier" | "qualified_identifier" | "destructor_name" | "operator_name")
                    .then_some(d);
            }
            "pointer_declarator" | "reference_declarator" | "parenthesized_declarator" | "attributed_declarator" => {
                cur = cur.child_by_field("declarator").or_else(|| cur.named_children().next())?;
            }
            _ => return None,
        }
    }
}

fn check_static_method(view: MetView<'_>) -> Option<RuleFinding> {
    let is_static = view
        .root
        .children()
        .any(|c| c.kind() == "storage_class_specifier" && c.text() == "static");
    if is_static {
        return None;
    }
    let names: Vec<String> = function_name(view.root).map(|n| n.text().to_string()).into_iter().collect();
    Some(finding(CheckId::StaticMethod, view.met_type, names))
}

fn cap(mut symbols: Vec<String>) -> Vec<String> {
    symbols.truncate(MAX_SYMBOLS);
    symbols
}

fn run_check(id: CheckId, view: MetView<'_>, cfg: &RuleConfig) -> Result<Option<RuleFinding>, RuleError> {
    Ok(match id {
        CheckId::PossibleVariableUse => check_possible_variable_use(view, cfg),
        CheckId::NumberLiteral => check_number_literal_view(view),
        CheckId::FunctionCall => check_function_call_view(view),
        CheckId::TypeCast => check_type_cast_view(view),
        CheckId::TypeCheck => check_type_view(view),
        CheckId::Condition => check_condition_view(view)?,
        CheckId::MinMax => check_min_max(view, cfg),
        CheckId::Ternary => check_ternary(view, cfg),
        CheckId::BufferWords => check_buffer_words(view),
        CheckId::ScopeResolution => check_scope_resolution(view, cfg),
        CheckId::Initialization => check_initialization(view),
        CheckId::Pointer => check_pointer(view),
        CheckId::StaticMethod => check_static_method(view),
    })
}

pub fn possible_variable_use(met: &MinimumEditTree, tree: &SyntaxTree, cfg: &RuleConfig) -> Option<RuleFinding> {
    MetView::new(met, tree).ok().and_then(|v| check_possible_variable_use(v, cfg))
}

pub fn check_number_literal(met: &MinimumEditTree, tree: &SyntaxTree) -> Option<RuleFinding> {
    MetView::new(met, tree).ok().and_then(check_number_literal_view)
}

pub fn check_function_call(met: &MinimumEditTree, tree: &SyntaxTree) -> Option<RuleFinding> {
    MetView::new(met, tree).ok().and_then(check_function_call_view)
}

pub fn check_type_cast(met: &MinimumEditTree, tree: &SyntaxTree) -> Option<RuleFinding> {
    MetView::new(met, tree).ok().and_then(check_type_cast_view)
}

pub fn check_type(met: &MinimumEditTree, tree: &SyntaxTree) -> Option<RuleFinding> {
    MetView::new(met, tree).ok().and_then(check_type_view)
}

pub fn check_condition(met: &MinimumEditTree, tree: &SyntaxTree) -> Result<Option<RuleFinding>, RuleError> {
    check_condition_view(MetView::new(met, tree)?)
}

/// The type-specific extra checks only.
pub fn run_extra_checks(met: &MinimumEditTree, tree: &SyntaxTree, cfg: &RuleConfig) -> Result<Vec<RuleFinding>, RuleError> {
    let view = MetView::new(met, tree)?;
    let mut out = Vec::new();
    for (i, &id) in extra_checks(view.met_type).iter().enumerate() {
        if let Some(mut f) = run_check(id, view, cfg)? {
            f.priority = (common_checks(view.met_type).len() + i) as u8;
            out.push(f);
        }
    }
    Ok(out)
}

/// All applicable checks in priority order, truncated to `cfg.max_findings`.
pub fn run_rules(met: &MinimumEditTree, tree: &SyntaxTree, cfg: &RuleConfig) -> Result<Vec<RuleFinding>, RuleError> {
    run_rules_at(met.v_node(tree), cfg)
}

/// [`run_rules`] for a MET root node.
pub fn run_rules_at(root: Node<'_>, cfg: &RuleConfig) -> Result<Vec<RuleFinding>, RuleError> {
    let view = MetView::from_node(root)?;
    let mut out = Vec::new();
    for (i, id) in applicable_checks(view.met_type.kind())?.into_iter().enumerate() {
        if out.len() >= cfg.max_findings {
            break;
        }
        if let Some(mut f) = run_check(id, view, cfg)? {
            f.priority = i as u8;
            out.push(f);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::met::{locate_met_online, EditSpan, Side};
    use crate::syntax::{parse, SourceUnit};

    /// MET located from a 1-based line of `src`.
    fn met_at(src: &str, line: usize) -> (SyntaxTree, MinimumEditTree) {
        let unit = SourceUnit::c(src);
        let tree = parse(&unit).unwrap();
        let span = EditSpan::from_lines(&unit, Side::Vulnerable, line, line).unwrap().unwrap();
        let node = locate_met_online(&tree, &span).unwrap().unwrap();
        let met = MinimumEditTree::online(node);
        (tree, met)
    }

    #[test]
    fn applicable_checks_per_column() {
        use CheckId::*;
        assert_eq!(applicable_checks("if_statement").unwrap(), [PossibleVariableUse, NumberLiteral, FunctionCall, Condition]);
        assert_eq!(applicable_checks("function_definition").unwrap(), [TypeCheck, StaticMethod]);
        assert_eq!(applicable_checks("call_expression").unwrap(), [BufferWords, ScopeResolution]);
        assert_eq!(
            applicable_checks("declaration").unwrap(),
            [NumberLiteral, FunctionCall, TypeCast, TypeCheck, Initialization, Pointer]
        );
        assert_eq!(applicable_checks("for_statement").unwrap(), [PossibleVariableUse, NumberLiteral, Condition]);
        assert_eq!(
            applicable_checks("assignment_expression").unwrap(),
            [PossibleVariableUse, NumberLiteral, FunctionCall, TypeCast, MinMax, Ternary]
        );
        assert_eq!(
            applicable_checks("while_statement"),
            Err(RuleError::UnsupportedMetType("while_statement".into()))
        );
    }

    #[test]
    fn similarity_of_near_names() {
        assert!((similarity("buff_len", "bufflen") - 0.875).abs() < 1e-12);
        assert_eq!(similarity("abc", "abc"), 1.0);
    }

    #[test]
    fn variable_use_by_similarity() {
        let src = "int f(char *p, int buff_len) {\n  int bufflen = 0;\n  if (bufflen > 4) return 1;\n  g(p, buff_len);\n  return 0;\n}\n";
        let (tree, met) = met_at(src, 3);
        assert_eq!(met.met_type(), "if_statement");
        let f = possible_variable_use(&met, &tree, &RuleConfig::default()).unwrap();
        assert_eq!(f.referenced_symbols, ["buff_len"]);
        assert!(f.instruction.contains("buff_len"));
    }

    #[test]
    fn variable_use_absent_when_nothing_missing() {
        let src = "int f(int a) {\n  if (a > 4) return a;\n  return 0;\n}\n";
        let (tree, met) = met_at(src, 2);
        assert_eq!(possible_variable_use(&met, &tree, &RuleConfig::default()), None);
    }

    #[test]
    fn number_literals() {
        let (tree, met) = met_at("void f(int *a) {\n  for(int i = 0; i < 18; i++) a[i] = 1;\n}\n", 2);
        assert_eq!(met.met_type(), "for_statement");
        assert_eq!(check_number_literal(&met, &tree).unwrap().referenced_symbols, ["18"]);
        let (tree, met) = met_at("void f(int x) {\n  if (x > 0x0 && x != 1) g(0);\n}\n", 2);
        assert_eq!(check_number_literal(&met, &tree), None);
    }

    #[test]
    fn function_calls() {
        let (tree, met) = met_at("void f(char *dst, char *src, int n) {\n  memcpy(dst, src, n);\n}\n", 2);
        assert_eq!(met.met_type(), "call_expression");
        assert_eq!(check_function_call(&met, &tree).unwrap().referenced_symbols, ["memcpy"]);
        let (tree, met) = met_at("int f(int x) {\n  x = f(g(x));\n  return x;\n}\n", 2);
        assert_eq!(check_function_call(&met, &tree).unwrap().referenced_symbols, ["f", "g"]);
        let (tree, met) = met_at("int f(int x) {\n  x = x + 1;\n  return x;\n}\n", 2);
        assert_eq!(check_function_call(&met, &tree), None);
    }

    #[test]
    fn type_casts() {
        let (tree, met) = met_at("void f(int n) {\n  m = (size_t)n;\n}\n", 2);
        let found = check_type_cast(&met, &tree).unwrap();
        assert_eq!(found.referenced_symbols, ["size_t"]);
        assert!(found.instruction.contains("a=(int)b"));
        let (tree, met) = met_at("void f(int n) {\n  m = n;\n}\n", 2);
        assert_eq!(check_type_cast(&met, &tree), None);
    }

    #[test]
    fn numeric_types() {
        let (tree, met) = met_at("void f(int len) {\n  int n = len * 4;\n}\n", 2);
        assert_eq!(met.met_type(), "declaration");
        assert_eq!(check_type(&met, &tree).unwrap().referenced_symbols, ["n", "len"]);
        let (tree, met) = met_at("void f(struct s *a) {\n  struct s *b = a;\n}\n", 2);
        assert_eq!(check_type(&met, &tree), None);
        let (tree, met) = met_at("void f(void) {\n  long long total = 0;\n}\n", 2);
        assert_eq!(check_type(&met, &tree).unwrap().referenced_symbols, ["total"]);
        let (tree, met) = met_at("void f(void) {\n  unsigned int total = 0;\n}\n", 2);
        assert_eq!(check_type(&met, &tree), None);
    }

    #[test]
    fn conditions() {
        let (tree, met) = met_at("void f(int a, int limit) {\n  if (a > limit) g();\n}\n", 2);
        assert_eq!(check_condition(&met, &tree).unwrap().unwrap().referenced_symbols, [">"]);
        let (tree, met) = met_at("void f(int *ptr) {\n  if (ptr) g();\n}\n", 2);
        assert_eq!(check_condition(&met, &tree).unwrap(), None);
        let (tree, met) = met_at("void f(int i, int n) {\n  for (; i != n; ) i++;\n}\n", 2);
        assert_eq!(check_condition(&met, &tree).unwrap(), None);
        let (tree, met) = met_at("void f(int i, int n) {\n  g(i < n);\n}\n", 2);
        assert!(matches!(check_condition(&met, &tree), Err(RuleError::UnsupportedMetType(_))));
    }

    #[test]
    fn extras_for_call() {
        let (tree, met) = met_at("void f(char *dst, char *src) {\n  strcpy(dst, src);\n}\n", 2);
        let found = run_extra_checks(&met, &tree, &RuleConfig::default()).unwrap();
        assert_eq!(found[0].check_id, CheckId::BufferWords);
        assert_eq!(found[0].referenced_symbols, ["strcpy"]);
        assert_eq!(found[1].check_id, CheckId::ScopeResolution);
    }

    #[test]
    fn extras_for_declaration() {
        let (tree, met) = met_at("void f(void) {\n  int *p;\n}\n", 2);
        let found = run_extra_checks(&met, &tree, &RuleConfig::default()).unwrap();
        let ids: Vec<_> = found.iter().map(|f| f.check_id).collect();
        assert_eq!(ids, [CheckId::Initialization]);
        assert_eq!(found[0].referenced_symbols, ["p"]);
        let (tree, met) = met_at("void f(void) {\n  int q = 3;\n}\n", 2);
        let ids: Vec<_> = run_extra_checks(&met, &tree, &RuleConfig::default())
            .unwrap()
            .iter()
            .map(|f| f.check_id)
            .collect();
        assert_eq!(ids, [CheckId::Pointer]);
    }

    #[test]
    fn extras_for_definition() {
        let src = "static int helper(int a) {\n  return a;\n}\n";
        let tree = parse(&SourceUnit::c(src)).unwrap();
        let def = tree.nodes().find(|n| n.kind() == "function_definition").unwrap();
        let met = MinimumEditTree::online(def);
        assert!(run_extra_checks(&met, &tree, &RuleConfig::default()).unwrap().is_empty());
        let tree = parse(&SourceUnit::c("int helper(int a) {\n  return a;\n}\n")).unwrap();
        let def = tree.nodes().find(|n| n.kind() == "function_definition").unwrap();
        let met = MinimumEditTree::online(def);
        let found = run_extra_checks(&met, &tree, &RuleConfig::default()).unwrap();
        assert_eq!(found[0].check_id, CheckId::StaticMethod);
        assert_eq!(found[0].referenced_symbols, ["helper"]);
    }

    #[test]
    fn extras_for_assignment() {
        let (tree, met) = met_at("void f(int a, int b) {\n  a = b > 3 ? 3 : b;\n}\n", 2);
        let ids: Vec<_> = run_extra_checks(&met, &tree, &RuleConfig::default())
            .unwrap()
            .iter()
            .map(|f| f.check_id)
            .collect();
        assert_eq!(ids, [CheckId::MinMax]);
        let (tree, met) = met_at("void f(int a, int b) {\n  a = min(a, b);\n}\n", 2);
        let ids: Vec<_> = run_extra_checks(&met, &tree, &RuleConfig::default())
            .unwrap()
            .iter()
            .map(|f| f.check_id)
            .collect();
        assert_eq!(ids, [CheckId::Ternary]);
    }

    #[test]
    fn findings_are_capped() {
        // ASS MET triggering all six checks
        let src = "void f(int n, int total) {\n  total = 0;\n  n = (long)g(n * 7);\n  h(total, total);\n}\n";
        let (tree, met) = met_at(src, 3);
        assert_eq!(met.met_type(), "assignment_expression");
        let uncapped = RuleConfig { max_findings: 10, ..RuleConfig::default() };
        assert!(run_rules(&met, &tree, &uncapped).unwrap().len() >= 5);
        let found = run_rules(&met, &tree, &RuleConfig::default()).unwrap();
        assert_eq!(found.len(), 3);
        let prios: Vec<_> = found.iter().map(|f| f.priority).collect();
        assert!(prios.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn unsupported_type() {
        let (tree, met) = met_at("int f(void) {\n  return 0;\n}\n", 2);
        assert_eq!(met.met_type(), "return_statement");
        assert!(matches!(run_rules(&met, &tree, &RuleConfig::default()), Err(RuleError::UnsupportedMetType(_))));
    }
}
