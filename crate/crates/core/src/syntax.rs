//! Concrete syntax trees for C/C++ source.
//!
//! Source is parsed with tree-sitter and copied into an immutable arena
//! ([`SyntaxTree`]) whose nodes are stored in pre-order, so the subtree of a
//! node is always the contiguous id range `id..subtree_end`. Node kinds are the
//! grammar kind strings (`"if_statement"`, `"call_expression"`, ...).
//!
//! Fragments that do not parse as a translation unit (bare statements or
//! expressions, as produced by language models) are wrapped in a synthetic
//! function before parsing. The wrapper nodes are dropped again and every span
//! is reported relative to the original text.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tree_sitter::{Parser, TreeCursor};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("parse failure: {0}")]
    ParseFailure(String),
    #[error("unknown node kind `{0}`")]
    UnknownKind(String),
    #[error("span {start}..{end} out of range for source of {len} bytes")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[default]
    C,
    #[serde(alias = "c++")]
    Cpp,
}

impl Language {
    fn grammar(self) -> tree_sitter::Language {
        match self {
            Language::C => tree_sitter_c::LANGUAGE.into(),
            Language::Cpp => tree_sitter_cpp::LANGUAGE.into(),
        }
    }

    pub(crate) fn node_types(self) -> &'static str {
        match self {
            Language::C => tree_sitter_c::NODE_TYPES,
            Language::Cpp => tree_sitter_cpp::NODE_TYPES,
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Language::C => f.write_str("c"),
            Language::Cpp => f.write_str("cpp"),
        }
    }
}

/// The source text of one function (or fragment) together with its language.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceUnit {
    pub text: String,
    #[serde(default)]
    pub language: Language,
}

impl SourceUnit {
    pub fn new(text: impl Into<String>, language: Language) -> Self {
        SourceUnit { text: text.into(), language }
    }

    pub fn c(text: impl Into<String>) -> Self {
        Self::new(text, Language::C)
    }

    pub fn cpp(text: impl Into<String>) -> Self {
        Self::new(text, Language::Cpp)
    }

    pub fn is_blank(&self) -> bool {
        self.text.trim().is_empty()
    }
}

/// Index of a node inside its [`SyntaxTree`]. Ids follow pre-order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
struct NodeData {
    kind: &'static str,
    field: Option<&'static str>,
    span: Range<usize>,
    is_named: bool,
    is_error: bool,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    subtree_end: usize,
}

/// How the text was fed to the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrapping {
    /// Parsed as a translation unit.
    None,
    /// Parsed as the body of a synthetic function.
    Statements,
    /// Parsed as an expression statement inside a synthetic function.
    Expression,
}

#[derive(Debug, Clone)]
pub struct SyntaxTree {
    unit: SourceUnit,
    nodes: Vec<NodeData>,
    line_starts: Vec<usize>,
    degraded: bool,
    wrapping: Wrapping,
}

/// Borrowed handle to one node of a [`SyntaxTree`].
#[derive(Clone, Copy)]
pub struct Node<'t> {
    tree: &'t SyntaxTree,
    id: NodeId,
}

impl fmt::Debug for Node<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{:?}", self.kind(), self.span())
    }
}

impl PartialEq for Node<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.tree, other.tree) && self.id == other.id
    }
}

impl Eq for Node<'_> {}

impl<'t> Node<'t> {
    pub fn id(self) -> NodeId {
        self.id
    }

    pub fn tree(self) -> &'t SyntaxTree {
        self.tree
    }

    fn data(self) -> &'t NodeData {
        &self.tree.nodes[self.id.0]
    }

    pub fn kind(self) -> &'t str {
        self.data().kind
    }

    /// Grammar field under which this node hangs off its parent.
    pub fn field(self) -> Option<&'t str> {
        self.data().field
    }

    pub fn span(self) -> Range<usize> {
        self.data().span.clone()
    }

    /// 1-based inclusive line range.
    pub fn line_span(self) -> (usize, usize) {
        let span = self.span();
        let start = self.tree.line_of(span.start);
        let end = self.tree.line_of(span.end.saturating_sub(1).max(span.start));
        (start, end)
    }

    pub fn is_named(self) -> bool {
        self.data().is_named
    }

    pub fn is_error(self) -> bool {
        self.data().is_error
    }

    pub fn parent(self) -> Option<Node<'t>> {
        self.data().parent.map(|id| self.tree.node(id))
    }

    pub fn children(self) -> impl DoubleEndedIterator<Item = Node<'t>> + ExactSizeIterator + 't {
        let tree = self.tree;
        self.data().children.iter().map(move |&id| tree.node(id))
    }

    pub fn named_children(self) -> impl DoubleEndedIterator<Item = Node<'t>> + 't {
        self.children().filter(|c| c.is_named())
    }

    pub fn child_count(self) -> usize {
        self.data().children.len()
    }

    pub fn child_by_field(self, field: &str) -> Option<Node<'t>> {
        self.children().find(|c| c.field() == Some(field))
    }

    pub fn children_by_field(self, field: &'t str) -> impl Iterator<Item = Node<'t>> + 't {
        self.children().filter(move |c| c.field() == Some(field))
    }

    /// This node followed by all of its descendants, in pre-order.
    pub fn descendants(self) -> impl DoubleEndedIterator<Item = Node<'t>> + 't {
        let tree = self.tree;
        (self.id.0..self.data().subtree_end).map(move |i| tree.node(NodeId(i)))
    }

    pub fn contains_node(self, other: Node<'_>) -> bool {
        self.id.0 <= other.id.0 && other.id.0 < self.data().subtree_end
    }

    pub fn contains_span(self, span: &Range<usize>) -> bool {
        let own = self.span();
        own.start <= span.start && span.end <= own.end
    }

    pub fn text(self) -> &'t str {
        &self.tree.unit.text[self.span()]
    }

    /// Nearest ancestor (or self) whose kind is `kind`.
    pub fn ancestor_or_self(self, kind: &str) -> Option<Node<'t>> {
        let mut cur = Some(self);
        while let Some(n) = cur {
            if n.kind() == kind {
                return Some(n);
            }
            cur = n.parent();
        }
        None
    }

    pub fn subtree_size(self) -> usize {
        self.data().subtree_end - self.id.0
    }
}

impl SyntaxTree {
    pub fn root(&self) -> Node<'_> {
        self.node(NodeId(0))
    }

    pub fn node(&self, id: NodeId) -> Node<'_> {
        assert!(id.0 < self.nodes.len(), "node id out of range");
        Node { tree: self, id }
    }

    pub fn unit(&self) -> &SourceUnit {
        &self.unit
    }

    pub fn source(&self) -> &str {
        &self.unit.text
    }

    pub fn language(&self) -> Language {
        self.unit.language
    }

    /// True when error-recovery nodes are present.
    pub fn is_degraded(&self) -> bool {
        self.degraded
    }

    pub fn wrapping(&self) -> Wrapping {
        self.wrapping
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl DoubleEndedIterator<Item = Node<'_>> {
        (0..self.nodes.len()).map(move |i| self.node(NodeId(i)))
    }

    /// 1-based line containing byte `offset`.
    pub fn line_of(&self, offset: usize) -> usize {
        line_of(&self.line_starts, offset)
    }

    /// Kind-labelled shape of the tree, one `kind` per node with nesting.
    pub fn shape(&self) -> String {
        fn walk(n: Node<'_>, out: &mut String) {
            out.push('(');
            out.push_str(n.kind());
            for c in n.children() {
                out.push(' ');
                walk(c, out);
            }
            out.push(')');
        }
        let mut out = String::new();
        walk(self.root(), &mut out);
        out
    }
}

pub(crate) fn line_starts(text: &str) -> Vec<usize> {
    std::iter::once(0)
        .chain(text.match_indices('\n').map(|(i, _)| i + 1))
        .collect()
}

pub(crate) fn line_of(starts: &[usize], offset: usize) -> usize {
    match starts.binary_search(&offset) {
        Ok(i) => i + 1,
        Err(i) => i,
    }
}

const WRAP_PREFIX: &str = "void __spvr_fragment__(void) {\n";
const WRAP_SUFFIX: &str = "\n}\n";
const WRAP_EXPR_SUFFIX: &str = ";\n}\n";

struct RawParse {
    tree: tree_sitter::Tree,
    errors: usize,
}

fn raw_parse(text: &str, language: Language) -> Result<RawParse, SyntaxError> {
    let mut parser = Parser::new();
    parser
        .set_language(&language.grammar())
        .map_err(|e| SyntaxError::ParseFailure(e.to_string()))?;
    let tree = parser
        .parse(text, None)
        .ok_or_else(|| SyntaxError::ParseFailure("parser returned no tree".into()))?;
    let errors = count_errors(tree.root_node());
    Ok(RawParse { tree, errors })
}

fn count_errors(node: tree_sitter::Node<'_>) -> usize {
    if !node.has_error() {
        return 0;
    }
    let mut cursor = node.walk();
    let mut total = usize::from(node.is_error() || node.is_missing());
    for child in node.children(&mut cursor) {
        total += count_errors(child);
    }
    total
}

/// Parse a source unit, wrapping bare fragments in a synthetic function when
/// that yields a cleaner tree.
pub fn parse(unit: &SourceUnit) -> Result<SyntaxTree, SyntaxError> {
    parse_with(unit, None)
}

/// Parse with an explicit wrapping mode; `None` picks the cleanest parse.
pub fn parse_with(unit: &SourceUnit, mode: Option<Wrapping>) -> Result<SyntaxTree, SyntaxError> {
    if unit.is_blank() {
        return Err(SyntaxError::ParseFailure("empty source".into()));
    }
    let modes: &[Wrapping] = match mode {
        Some(Wrapping::None) => &[Wrapping::None],
        Some(Wrapping::Statements) => &[Wrapping::Statements],
        Some(Wrapping::Expression) => &[Wrapping::Expression],
        None => &[Wrapping::None, Wrapping::Statements, Wrapping::Expression],
    };
    let mut best: Option<(Wrapping, RawParse)> = None;
    for &m in modes {
        let raw = match m {
            Wrapping::None => raw_parse(&unit.text, unit.language)?,
            Wrapping::Statements => {
                raw_parse(&format!("{WRAP_PREFIX}{}{WRAP_SUFFIX}", unit.text), unit.language)?
            }
            Wrapping::Expression => raw_parse(
                &format!("{WRAP_PREFIX}{}{WRAP_EXPR_SUFFIX}", unit.text),
                unit.language,
            )?,
        };
        let clean = raw.errors == 0;
        let better = match &best {
            None => true,
            Some((_, b)) => raw.errors < b.errors,
        };
        if better {
            best = Some((m, raw));
        }
        if clean {
            break;
        }
    }
    let (wrapping, raw) = best.expect("at least one parse mode");
    build_tree(unit, wrapping, raw)
}

fn build_tree(unit: &SourceUnit, wrapping: Wrapping, raw: RawParse) -> Result<SyntaxTree, SyntaxError> {
    let text_len = unit.text.len();
    let mut builder = Builder {
        nodes: Vec::new(),
        offset: 0,
        limit: text_len,
    };
    let root = raw.tree.root_node();
    match wrapping {
        Wrapping::None => {
            let mut cursor = root.walk();
            builder.convert(&mut cursor, None);
            builder.nodes[0].span = 0..text_len;
        }
        Wrapping::Statements | Wrapping::Expression => {
            let body = wrapper_body(root).ok_or_else(|| {
                SyntaxError::ParseFailure("synthetic wrapper did not produce a function body".into())
            })?;
            builder.offset = WRAP_PREFIX.len();
            builder.nodes.push(NodeData {
                kind: "translation_unit",
                field: None,
                span: 0..text_len,
                is_named: true,
                is_error: false,
                parent: None,
                children: Vec::new(),
                subtree_end: 0,
            });
            let mut cursor = body.walk();
            let kids: Vec<_> = body.children(&mut cursor).collect();
            for child in kids {
                if !child.is_named() && matches!(child.kind(), "{" | "}") {
                    continue;
                }
                if child.start_byte() >= WRAP_PREFIX.len() + text_len {
                    continue;
                }
                let mut c = child.walk();
                builder.convert(&mut c, Some(NodeId(0)));
            }
            builder.nodes[0].subtree_end = builder.nodes.len();
        }
    }
    let degraded = raw.errors > 0;
    let tree = SyntaxTree {
        unit: unit.clone(),
        nodes: builder.nodes,
        line_starts: line_starts(&unit.text),
        degraded,
        wrapping,
    };
    let root = tree.root();
    let meaningful = root
        .named_children()
        .any(|c| !c.is_error() && c.kind() != "comment");
    if !meaningful {
        return Err(SyntaxError::ParseFailure(
            "grammar produced only error nodes at the root".into(),
        ));
    }
    Ok(tree)
}

fn wrapper_body(root: tree_sitter::Node<'_>) -> Option<tree_sitter::Node<'_>> {
    let func = root.named_child(0)?;
    if func.kind() != "function_definition" {
        return None;
    }
    func.child_by_field_name("body")
}

struct Builder {
    nodes: Vec<NodeData>,
    offset: usize,
    limit: usize,
}

impl Builder {
    fn convert(&mut self, cursor: &mut TreeCursor<'_>, parent: Option<NodeId>) {
        let node = cursor.node();
        let id = NodeId(self.nodes.len());
        let start = node.start_byte().saturating_sub(self.offset).min(self.limit);
        let end = node.end_byte().saturating_sub(self.offset).min(self.limit).max(start);
        self.nodes.push(NodeData {
            kind: node.kind(),
            field: cursor.field_name(),
            span: start..end,
            is_named: node.is_named(),
            is_error: node.is_error() || node.is_missing(),
            parent,
            children: Vec::new(),
            subtree_end: 0,
        });
        if let Some(p) = parent {
            self.nodes[p.0].children.push(id);
        }
        if cursor.goto_first_child() {
            loop {
                let child = cursor.node();
                let outside = self.offset > 0 && child.start_byte() >= self.offset + self.limit;
                if !outside {
                    self.convert(cursor, Some(id));
                }
                if !cursor.goto_next_sibling() {
                    break;
                }
            }
            cursor.goto_parent();
        }
        self.nodes[id.0].subtree_end = self.nodes.len();
    }
}

/// Replace every block comment with a single space and delete every line
/// comment (its terminating newline stays). All other bytes are unchanged.
pub fn strip_comments(unit: &SourceUnit) -> Result<SourceUnit, SyntaxError> {
    let tree = parse(unit)?;
    let mut spans: Vec<Range<usize>> = tree
        .nodes()
        .filter(|n| n.kind() == "comment")
        .map(|n| n.span())
        .collect();
    if spans.is_empty() {
        return Ok(unit.clone());
    }
    spans.sort_by_key(|s| s.start);
    let mut out = String::with_capacity(unit.text.len());
    let mut pos = 0;
    for span in spans {
        if span.start < pos {
            continue;
        }
        out.push_str(&unit.text[pos..span.start]);
        if !unit.text[span.clone()].starts_with("//") {
            out.push(' ');
        }
        pos = span.end;
    }
    out.push_str(&unit.text[pos..]);
    Ok(SourceUnit::new(out, unit.language))
}

/// The exact source text covered by `node`.
pub fn to_plain_code(node: Node<'_>, unit: &SourceUnit) -> Result<String, SyntaxError> {
    let span = node.span();
    let len = unit.text.len();
    if span.end > len || !unit.text.is_char_boundary(span.start) || !unit.text.is_char_boundary(span.end) {
        return Err(SyntaxError::SpanOutOfRange { start: span.start, end: span.end, len });
    }
    Ok(unit.text[span].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_function() {
        let tree = parse(&SourceUnit::c("int f(){return 0;}")).unwrap();
        let root = tree.root();
        assert_eq!(root.kind(), "translation_unit");
        let kids: Vec<_> = root.named_children().collect();
        assert_eq!(kids.len(), 1);
        assert_eq!(kids[0].kind(), "function_definition");
        assert!(!tree.is_degraded());
    }

    #[test]
    fn empty_input_fails() {
        assert!(matches!(parse(&SourceUnit::c("")), Err(SyntaxError::ParseFailure(_))));
        assert!(matches!(parse(&SourceUnit::c("  \n\t")), Err(SyntaxError::ParseFailure(_))));
    }

    #[test]
    fn root_spans_whole_text() {
        let src = "\n\n  int f(){return 0;}\n\n";
        let tree = parse(&SourceUnit::c(src)).unwrap();
        assert_eq!(tree.root().span(), 0..src.len());
        assert_eq!(to_plain_code(tree.root(), tree.unit()).unwrap(), src);
    }

    #[test]
    fn statement_fragment_parses() {
        let src = "if (x > 0) y = 1;";
        let tree = parse(&SourceUnit::c(src)).unwrap();
        assert!(!tree.is_degraded());
        let first = tree.root().named_children().next().unwrap();
        assert_eq!(first.kind(), "if_statement");
        assert_eq!(first.text(), src);
    }

    #[test]
    fn statement_wrapping_drops_wrapper_nodes() {
        let src = "return x;";
        let tree = parse_with(&SourceUnit::c(src), Some(Wrapping::Statements)).unwrap();
        let kinds: Vec<_> = tree.root().children().map(|c| c.kind()).collect();
        assert_eq!(kinds, ["return_statement"]);
        assert_eq!(tree.root().children().next().unwrap().text(), src);
    }

    #[test]
    fn line_comment_keeps_newline() {
        let out = strip_comments(&SourceUnit::c("int a; // x
int b;")).unwrap();
        assert_eq!(out.text, "int a; \nint b;");
    }

    #[test]
    fn expression_fragment_is_wrapped() {
        let src = "a = b + 1";
        let tree = parse(&SourceUnit::c(src)).unwrap();
        assert_eq!(tree.wrapping(), Wrapping::Expression);
        let assign = tree.nodes().find(|n| n.kind() == "assignment_expression").unwrap();
        assert_eq!(assign.text(), src);
        for n in tree.nodes() {
            assert!(n.span().end <= src.len());
        }
    }

    #[test]
    fn leaf_slice() {
        let unit = SourceUnit::c("int x = 42;");
        let tree = parse(&unit).unwrap();
        let lit = tree.nodes().find(|n| n.kind() == "number_literal").unwrap();
        assert_eq!(to_plain_code(lit, &unit).unwrap(), "42");
    }

    #[test]
    fn span_out_of_range() {
        let tree = parse(&SourceUnit::c("int x = 42;")).unwrap();
        let short = SourceUnit::c("int");
        assert!(matches!(
            to_plain_code(tree.root(), &short),
            Err(SyntaxError::SpanOutOfRange { .. })
        ));
    }

    #[test]
    fn strip_line_comment() {
        let out = strip_comments(&SourceUnit::c("int a; // x")).unwrap();
        assert_eq!(out.text, "int a; ");
    }

    #[test]
    fn strip_block_comment() {
        let out = strip_comments(&SourceUnit::c("int /*k*/ a;")).unwrap();
        assert_eq!(out.text, "int   a;");
        let again = parse(&out).unwrap();
        assert!(again.nodes().all(|n| n.kind() != "comment"));
    }

    #[test]
    fn strip_without_comments_is_identity() {
        let src = "int f(int a) { return a + 1; }";
        assert_eq!(strip_comments(&SourceUnit::c(src)).unwrap().text, src);
    }

    #[test]
    fn children_are_ordered_and_nested() {
        let src = "int f(int a) {\n  if (a > 2) { a = a * 3; }\n  return a;\n}\n";
        let tree = parse(&SourceUnit::c(src)).unwrap();
        for n in tree.nodes() {
            let mut prev_end = n.span().start;
            for c in n.children() {
                assert!(n.contains_span(&c.span()));
                assert!(c.span().start >= prev_end);
                prev_end = c.span().end;
            }
        }
        let ifs = tree.nodes().find(|n| n.kind() == "if_statement").unwrap();
        assert_eq!(ifs.line_span(), (2, 2));
        assert_eq!(ifs.child_by_field("condition").unwrap().text(), "(a > 2)");
    }

    #[test]
    fn cpp_parses() {
        let tree = parse(&SourceUnit::cpp("int f() { return std::max(1, 2); }")).unwrap();
        assert!(tree.nodes().any(|n| n.kind() == "qualified_identifier"));
    }
}
