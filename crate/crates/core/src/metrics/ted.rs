use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::syntax::{parse, Language, Node, SourceUnit};

/// Ordered labeled tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledTree {
    pub label: String,
    pub children: Vec<LabeledTree>,
}

impl LabeledTree {
    pub fn leaf(label: impl Into<String>) -> Self {
        LabeledTree { label: label.into(), children: Vec::new() }
    }

    pub fn node(label: impl Into<String>, children: Vec<LabeledTree>) -> Self {
        LabeledTree { label: label.into(), children }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(LabeledTree::size).sum::<usize>()
    }
}

fn collapse_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Internal nodes are labeled by kind, leaves by kind and token text.
pub fn label_tree(node: Node<'_>) -> LabeledTree {
    if node.child_count() == 0 {
        return LabeledTree::leaf(format!("{}:{}", node.kind(), collapse_ws(node.text())));
    }
    LabeledTree::node(node.kind(), node.children().map(label_tree).collect())
}

/// Post-order labels and leftmost-leaf indices.
struct Flat<'a> {
    labels: Vec<&'a str>,
    lml: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> Flat<'a> {
    fn new(t: &'a LabeledTree) -> Self {
        fn walk<'a>(t: &'a LabeledTree, labels: &mut Vec<&'a str>, lml: &mut Vec<usize>) -> usize {
            let mut first = None;
            for c in &t.children {
                let leftmost = walk(c, labels, lml);
                first.get_or_insert(leftmost);
            }
            let me = labels.len();
            labels.push(&t.label);
            let leftmost = first.unwrap_or(me);
            lml.push(leftmost);
            leftmost
        }
        let mut labels = Vec::new();
        let mut lml = Vec::new();
        walk(t, &mut labels, &mut lml);
        // keyroots: the highest node for each distinct leftmost leaf
        let n = labels.len();
        let mut seen = vec![false; n];
        let mut keyroots = Vec::new();
        for i in (0..n).rev() {
            if !seen[lml[i]] {
                seen[lml[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        Flat { labels, lml, keyroots }
    }
}

/// Zhang-Shasha ordered tree edit distance with unit costs.
pub fn tree_edit_distance(a: &LabeledTree, b: &LabeledTree) -> usize {
    let fa = Flat::new(a);
    let fb = Flat::new(b);
    let (n, m) = (fa.labels.len(), fb.labels.len());
    let mut td = vec![vec![0usize; m]; n];
    let mut fd = vec![vec![0usize; m + 1]; n + 1];
    for &i in &fa.keyroots {
        for &j in &fb.keyroots {
            let (li, lj) = (fa.lml[i], fb.lml[j]);
            // fd is indexed from the leftmost leaves; row/col 0 is the empty forest
            fd[0][0] = 0;
            for x in li..=i {
                fd[x - li + 1][0] = fd[x - li][0] + 1;
            }
            for y in lj..=j {
                fd[0][y - lj + 1] = fd[0][y - lj] + 1;
            }
            for x in li..=i {
                for y in lj..=j {
                    let (dx, dy) = (x - li + 1, y - lj + 1);
                    let del = fd[dx - 1][dy] + 1;
                    let ins = fd[dx][dy - 1] + 1;
                    if fa.lml[x] == li && fb.lml[y] == lj {
                        let relabel = usize::from(fa.labels[x] != fb.labels[y]);
                        fd[dx][dy] = del.min(ins).min(fd[dx - 1][dy - 1] + relabel);
                        td[x][y] = fd[dx][dy];
                    } else {
                        let (px, py) = (fa.lml[x] - li, fb.lml[y] - lj);
                        fd[dx][dy] = del.min(ins).min(fd[px][py] + td[x][y]);
                    }
                }
            }
        }
    }
    td[n - 1][m - 1]
}

fn tree_of(code: &str, language: Language) -> Option<LabeledTree> {
    let tree = parse(&SourceUnit::new(code.trim(), language)).ok()?;
    Some(label_tree(tree.root()))
}

/// Distance between two code fragments. An unparseable candidate costs the
/// size of the reference tree.
pub fn tree_edit_distance_code(candidate: &str, reference: &str, language: Language) -> Result<usize, MetricsError> {
    let r = tree_of(reference, language).ok_or(MetricsError::EmptyTree)?;
    Ok(match tree_of(candidate, language) {
        Some(c) => tree_edit_distance(&c, &r),
        None => r.size(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(label: &str, children: Vec<LabeledTree>) -> LabeledTree {
        LabeledTree::node(label, children)
    }

    fn l(label: &str) -> LabeledTree {
        LabeledTree::leaf(label)
    }

    #[test]
    fn identical_is_zero() {
        let a = t("f", vec![t("d", vec![l("a"), t("c", vec![l("b")])]), l("e")]);
        assert_eq!(tree_edit_distance(&a, &a), 0);
    }

    #[test]
    fn relabel_leaf() {
        let a = t("r", vec![l("a"), l("b")]);
        let b = t("r", vec![l("a"), l("x")]);
        assert_eq!(tree_edit_distance(&a, &b), 1);
    }

    #[test]
    fn classic_example() {
        // the two trees from Zhang and Shasha's paper, distance 2
        let a = t("f", vec![t("d", vec![l("a"), t("c", vec![l("b")])]), l("e")]);
        let b = t("f", vec![t("c", vec![t("d", vec![l("a"), l("b")])]), l("e")]);
        assert_eq!(tree_edit_distance(&a, &b), 2);
    }

    #[test]
    fn against_single_node() {
        let a = t("r", vec![l("a"), l("b"), t("c", vec![l("d")])]);
        assert_eq!(tree_edit_distance(&a, &l("r")), 4);
        assert_eq!(tree_edit_distance(&l("q"), &a), 5);
    }

    #[test]
    fn code_distance() {
        assert_eq!(tree_edit_distance_code("x = a + 1;", "x = a + 1;", Language::C).unwrap(), 0);
        assert_eq!(tree_edit_distance_code("x = a + 2;", "x = a + 1;", Language::C).unwrap(), 1);
        let size = tree_of("x = a + 1;", Language::C).unwrap().size();
        assert_eq!(tree_edit_distance_code("", "x = a + 1;", Language::C).unwrap(), size);
        assert!(tree_edit_distance_code("x", "", Language::C).is_err());
    }
}
