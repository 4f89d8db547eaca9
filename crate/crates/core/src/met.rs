//! Minimum edit trees.
//!
//! Edited regions come from a line-level LCS diff of the comment-stripped
//! vulnerable and fixed functions. Each contiguous hunk becomes one
//! [`EditSpan`] per side, trimmed to its non-blank content with trailing
//! statement terminators removed, so that a changed `x = f(y);` line is
//! contained by its assignment rather than only by the expression statement.
//!
//! The minimum tree is the first node, in pre-order, that is an expression or
//! statement kind, contains every edit span, and has no child containing all
//! of them.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{line_starts, Node, NodeId, SourceUnit, SyntaxTree};
use crate::taxonomy::KindTaxonomy;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetError {
    #[error("no edit spans given")]
    EmptyEdits,
    #[error("line range {start}..={end} outside a source of {lines} lines")]
    LinesOutOfRange { start: usize, end: usize, lines: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Vulnerable,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditSpan {
    pub side: Side,
    /// 1-based inclusive.
    pub line_range: (usize, usize),
    pub byte_range: Range<usize>,
    /// Set when this side had no changed lines and the span is the line at the
    /// position where the other side inserted code.
    #[serde(default)]
    pub insertion_anchor: bool,
}

impl EditSpan {
    /// Span over whole lines `start..=end` (1-based) of `unit`, trimmed the same
    /// way as diff hunks. `None` when the lines are blank.
    pub fn from_lines(unit: &SourceUnit, side: Side, start: usize, end: usize) -> Result<Option<EditSpan>, MetError> {
        let lines = split_lines(&unit.text);
        if start == 0 || end < start || end > lines.len() {
            return Err(MetError::LinesOutOfRange { start, end, lines: lines.len() });
        }
        Ok(span_over(&unit.text, &lines, side, start - 1, end - 1, false))
    }
}

/// One line of text: byte range without the line terminator.
#[derive(Debug, Clone)]
struct Line {
    range: Range<usize>,
}

fn split_lines(text: &str) -> Vec<Line> {
    let starts = line_starts(text);
    let mut lines = Vec::with_capacity(starts.len());
    for (i, &s) in starts.iter().enumerate() {
        let mut e = starts.get(i + 1).map(|n| n - 1).unwrap_or(text.len());
        if e > s && text.as_bytes()[e - 1] == b'\r' {
            e -= 1;
        }
        lines.push(Line { range: s..e });
    }
    if text.ends_with('\n') {
        lines.pop();
    }
    lines
}

fn is_blank(text: &str, line: &Line) -> bool {
    text[line.range.clone()].trim().is_empty()
}

/// Trimmed span over lines `first..=last` (0-based), or `None` if all blank.
fn span_over(text: &str, lines: &[Line], side: Side, first: usize, last: usize, anchor: bool) -> Option<EditSpan> {
    let first_nb = (first..=last).find(|&i| !is_blank(text, &lines[i]))?;
    let last_nb = (first..=last).rev().find(|&i| !is_blank(text, &lines[i]))?;
    let start_line = &text[lines[first_nb].range.clone()];
    let start = lines[first_nb].range.start + (start_line.len() - start_line.trim_start().len());
    let end_line = &text[lines[last_nb].range.clone()];
    let mut end = lines[last_nb].range.start + end_line.trim_end().len();
    let stripped = text[start..end].trim_end_matches(';').trim_end();
    if !stripped.is_empty() {
        end = start + stripped.len();
    }
    Some(EditSpan {
        side,
        line_range: (first_nb + 1, last_nb + 1),
        byte_range: start..end,
        insertion_anchor: anchor,
    })
}

/// Line at insertion position `pos` (0-based line index), or the nearest
/// non-blank line after it, else before it.
fn anchor_span(text: &str, lines: &[Line], side: Side, pos: usize) -> Option<EditSpan> {
    let after = (pos..lines.len()).find(|&i| !is_blank(text, &lines[i]));
    let idx = after.or_else(|| (0..pos.min(lines.len())).rev().find(|&i| !is_blank(text, &lines[i])))?;
    span_over(text, lines, side, idx, idx, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DiffOp {
    Equal,
    Delete,
    Insert,
}

/// LCS line diff; lines compare equal ignoring trailing whitespace.
fn line_diff(a: &[&str], b: &[&str]) -> Vec<DiffOp> {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..]
        .iter()
        .rev()
        .zip(b[prefix..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let a_mid = &a[prefix..a.len() - suffix];
    let b_mid = &b[prefix..b.len() - suffix];
    let (n, m) = (a_mid.len(), b_mid.len());
    // lcs[i][j] = LCS length of a_mid[i..] and b_mid[j..]
    let width = m + 1;
    let mut lcs = vec![0u32; (n + 1) * (m + 1)];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i * width + j] = if a_mid[i] == b_mid[j] {
                lcs[(i + 1) * width + j + 1] + 1
            } else {
                lcs[(i + 1) * width + j].max(lcs[i * width + j + 1])
            };
        }
    }
    let mut ops = vec![DiffOp::Equal; prefix];
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        if i < n && j < m && a_mid[i] == b_mid[j] {
            ops.push(DiffOp::Equal);
            i += 1;
            j += 1;
        } else if j == m || (i < n && lcs[(i + 1) * width + j] >= lcs[i * width + j + 1]) {
            ops.push(DiffOp::Delete);
            i += 1;
        } else {
            ops.push(DiffOp::Insert);
            j += 1;
        }
    }
    ops.extend(std::iter::repeat_n(DiffOp::Equal, suffix));
    ops
}

/// Edited regions on each side, one span per diff hunk.
pub fn compute_edit_spans(vuln: &SourceUnit, fixed: &SourceUnit) -> (Vec<EditSpan>, Vec<EditSpan>) {
    let v_lines = split_lines(&vuln.text);
    let f_lines = split_lines(&fixed.text);
    let v_keys: Vec<&str> = v_lines.iter().map(|l| vuln.text[l.range.clone()].trim_end()).collect();
    let f_keys: Vec<&str> = f_lines.iter().map(|l| fixed.text[l.range.clone()].trim_end()).collect();
    let ops = line_diff(&v_keys, &f_keys);

    let mut v_spans = Vec::new();
    let mut f_spans = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    let mut k = 0;
    while k < ops.len() {
        if ops[k] == DiffOp::Equal {
            i += 1;
            j += 1;
            k += 1;
            continue;
        }
        let (hunk_i, hunk_j) = (i, j);
        while k < ops.len() && ops[k] != DiffOp::Equal {
            match ops[k] {
                DiffOp::Delete => i += 1,
                DiffOp::Insert => j += 1,
                DiffOp::Equal => unreachable!(),
            }
            k += 1;
        }
        let v_span = (i > hunk_i)
            .then(|| span_over(&vuln.text, &v_lines, Side::Vulnerable, hunk_i, i - 1, false))
            .flatten();
        let f_span = (j > hunk_j)
            .then(|| span_over(&fixed.text, &f_lines, Side::Fixed, hunk_j, j - 1, false))
            .flatten();
        match (v_span, f_span) {
            (None, None) => {}
            (Some(v), Some(f)) => {
                v_spans.push(v);
                f_spans.push(f);
            }
            (Some(v), None) => {
                v_spans.push(v);
                f_spans.extend(anchor_span(&fixed.text, &f_lines, Side::Fixed, hunk_j));
            }
            (None, Some(f)) => {
                v_spans.extend(anchor_span(&vuln.text, &v_lines, Side::Vulnerable, hunk_i));
                f_spans.push(f);
            }
        }
    }
    (v_spans, f_spans)
}

fn contains_all(node: Node<'_>, edits: &[EditSpan]) -> bool {
    edits.iter().all(|e| node.contains_span(&e.byte_range))
}

/// Pre-order search for the minimum edit tree root below `root`.
pub fn get_minimum_tree<'t>(root: Node<'t>, edits: &[EditSpan]) -> Result<Option<Node<'t>>, MetError> {
    if edits.is_empty() {
        return Err(MetError::EmptyEdits);
    }
    let taxonomy = KindTaxonomy::for_language(root.tree().language());
    Ok(minimum_tree(root, edits, taxonomy))
}

fn minimum_tree<'t>(node: Node<'t>, edits: &[EditSpan], taxonomy: &KindTaxonomy) -> Option<Node<'t>> {
    let any_child_contain = node.children().any(|c| contains_all(c, edits));
    if taxonomy.qualifies(node.kind()) && contains_all(node, edits) && !any_child_contain {
        return Some(node);
    }
    node.children().find_map(|c| minimum_tree(c, edits, taxonomy))
}

/// The online variant: only the vulnerable tree and the reported location.
pub fn locate_met_online<'t>(v_tree: &'t SyntaxTree, vuln_span: &EditSpan) -> Result<Option<Node<'t>>, MetError> {
    get_minimum_tree(v_tree.root(), std::slice::from_ref(vuln_span))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    VulnerableOnly,
    FixedOnly,
    Shared,
}

/// Node of the merged vulnerable/fixed view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedNode {
    pub kind: String,
    pub origin: Origin,
    pub vulnerable: Option<NodeId>,
    pub fixed: Option<NodeId>,
    pub children: Vec<MergedNode>,
}

impl MergedNode {
    fn single(node: Node<'_>, origin: Origin) -> MergedNode {
        let id = Some(node.id());
        let (vulnerable, fixed) = match origin {
            Origin::FixedOnly => (None, id),
            _ => (id, None),
        };
        MergedNode {
            kind: node.kind().to_string(),
            origin,
            vulnerable,
            fixed,
            children: node.named_children().map(|c| MergedNode::single(c, origin)).collect(),
        }
    }

    /// Indented outline, one node per line, prefixed `-` (vulnerable only),
    /// `+` (fixed only) or a space (shared).
    pub fn outline(&self) -> String {
        let mut out = String::new();
        self.write_outline(0, &mut out);
        out
    }

    fn write_outline(&self, depth: usize, out: &mut String) {
        let mark = match self.origin {
            Origin::Shared => ' ',
            Origin::VulnerableOnly => '-',
            Origin::FixedOnly => '+',
        };
        out.push(mark);
        out.push_str(&"  ".repeat(depth));
        out.push_str(&self.kind);
        out.push('\n');
        for c in &self.children {
            c.write_outline(depth + 1, out);
        }
    }

    pub fn count(&self, origin: Origin) -> usize {
        usize::from(self.origin == origin) + self.children.iter().map(|c| c.count(origin)).sum::<usize>()
    }
}

fn merge_label(n: Node<'_>) -> (String, Option<String>) {
    let leaf = n.named_children().next().is_none();
    (n.kind().to_string(), leaf.then(|| n.text().to_string()))
}

/// Merge two same-kind subtrees, aligning named children by label and order.
pub fn merge_trees(v: Node<'_>, f: Node<'_>) -> MergedNode {
    let vk: Vec<Node<'_>> = v.named_children().collect();
    let fk: Vec<Node<'_>> = f.named_children().collect();
    let vl: Vec<_> = vk.iter().map(|&n| merge_label(n)).collect();
    let fl: Vec<_> = fk.iter().map(|&n| merge_label(n)).collect();
    // align on kind; leaves additionally need equal text
    let same = |a: &(String, Option<String>), b: &(String, Option<String>)| {
        a.0 == b.0 && (a.1.is_none() || b.1.is_none() || a.1 == b.1)
    };
    let (n, m) = (vk.len(), fk.len());
    let width = m + 1;
    let mut lcs = vec![0u32; (n + 1) * (m + 1)];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i * width + j] = if same(&vl[i], &fl[j]) {
                lcs[(i + 1) * width + j + 1] + 1
            } else {
                lcs[(i + 1) * width + j].max(lcs[i * width + j + 1])
            };
        }
    }
    let mut children = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        if i < n && j < m && same(&vl[i], &fl[j]) && lcs[i * width + j] == lcs[(i + 1) * width + j + 1] + 1 {
            children.push(merge_trees(vk[i], fk[j]));
            i += 1;
            j += 1;
        } else if j == m || (i < n && lcs[(i + 1) * width + j] >= lcs[i * width + j + 1]) {
            children.push(MergedNode::single(vk[i], Origin::VulnerableOnly));
            i += 1;
        } else {
            children.push(MergedNode::single(fk[j], Origin::FixedOnly));
            j += 1;
        }
    }
    let leaves_differ = vk.is_empty() && fk.is_empty() && v.text() != f.text();
    if leaves_differ {
        return MergedNode {
            kind: v.kind().to_string(),
            origin: Origin::Shared,
            vulnerable: Some(v.id()),
            fixed: Some(f.id()),
            children: vec![
                MergedNode::single(v, Origin::VulnerableOnly),
                MergedNode::single(f, Origin::FixedOnly),
            ],
        };
    }
    MergedNode {
        kind: v.kind().to_string(),
        origin: Origin::Shared,
        vulnerable: Some(v.id()),
        fixed: Some(f.id()),
        children,
    }
}

/// Location summary of a MET root, for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpan {
    pub lines: (usize, usize),
    pub bytes: Range<usize>,
}

impl NodeSpan {
    pub fn of(node: Node<'_>) -> NodeSpan {
        NodeSpan { lines: node.line_span(), bytes: node.span() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimumEditTree {
    pub v_root: NodeId,
    pub f_root: Option<NodeId>,
    pub met_type: String,
    pub merged: Option<MergedNode>,
}

impl MinimumEditTree {
    /// MET from the vulnerable side alone.
    pub fn online(v_root: Node<'_>) -> MinimumEditTree {
        MinimumEditTree {
            v_root: v_root.id(),
            f_root: None,
            met_type: v_root.kind().to_string(),
            merged: None,
        }
    }

    pub fn met_type(&self) -> &str {
        &self.met_type
    }

    pub fn v_node<'t>(&self, v_tree: &'t SyntaxTree) -> Node<'t> {
        v_tree.node(self.v_root)
    }

    pub fn f_node<'t>(&self, f_tree: &'t SyntaxTree) -> Option<Node<'t>> {
        self.f_root.map(|id| f_tree.node(id))
    }
}

pub fn met_type(met: &MinimumEditTree) -> &str {
    met.met_type()
}

/// Result of pairing the two minimum trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetOutcome {
    Found(MinimumEditTree),
    DifferentTypes { vulnerable: String, fixed: String },
    NoQualifyingNode { side: Side },
    NoEdits,
}

impl MetOutcome {
    pub fn met(&self) -> Option<&MinimumEditTree> {
        match self {
            MetOutcome::Found(m) => Some(m),
            _ => None,
        }
    }

    pub fn into_met(self) -> Option<MinimumEditTree> {
        match self {
            MetOutcome::Found(m) => Some(m),
            _ => None,
        }
    }
}

pub fn build_met(v_tree: &SyntaxTree, f_tree: &SyntaxTree, v_edits: &[EditSpan], f_edits: &[EditSpan]) -> MetOutcome {
    if v_edits.is_empty() && f_edits.is_empty() {
        return MetOutcome::NoEdits;
    }
    let v_min = get_minimum_tree(v_tree.root(), v_edits).ok().flatten();
    let Some(v_min) = v_min else {
        return MetOutcome::NoQualifyingNode { side: Side::Vulnerable };
    };
    let f_min = get_minimum_tree(f_tree.root(), f_edits).ok().flatten();
    let Some(f_min) = f_min else {
        return MetOutcome::NoQualifyingNode { side: Side::Fixed };
    };
    if v_min.kind() != f_min.kind() {
        return MetOutcome::DifferentTypes {
            vulnerable: v_min.kind().to_string(),
            fixed: f_min.kind().to_string(),
        };
    }
    MetOutcome::Found(MinimumEditTree {
        v_root: v_min.id(),
        f_root: Some(f_min.id()),
        met_type: v_min.kind().to_string(),
        merged: Some(merge_trees(v_min, f_min)),
    })
}

/// Diff, parse and pair in one step. Both units should be comment-stripped.
pub fn met_for_pair(v_tree: &SyntaxTree, f_tree: &SyntaxTree) -> MetOutcome {
    let (v_edits, f_edits) = compute_edit_spans(v_tree.unit(), f_tree.unit());
    build_met(v_tree, f_tree, &v_edits, &f_edits)
}
