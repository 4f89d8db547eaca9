//! Compare candidate patches against a reference with CodeBLEU, tree edit
//! distance and exact matching, then aggregate pass@k.

use spvr::metrics::{codebleu, pass_at_k, perfect_patch, tree_edit_distance_code, CodeBleuWeights};
use spvr::syntax::Language;

fn main() {
    let reference = "if (len >= cap || buf == NULL) {\n    return -1;\n}";
    let candidates = [
        "if (len >= cap || buf == NULL) { return -1; }",
        "if (len >= cap) {\n    return -1;\n}",
        "if (len > cap) return 0;",
    ];
    println!("{:<48} {:>8} {:>4} {:>7}", "candidate", "codebleu", "ted", "perfect");
    let mut row = Vec::new();
    for c in candidates {
        let s = codebleu(c, reference, Language::C, CodeBleuWeights::default()).unwrap();
        let ted = tree_edit_distance_code(c, reference, Language::C).unwrap();
        let perfect = perfect_patch(c, reference);
        row.push(perfect);
        println!("{:<48} {:>8.4} {:>4} {:>7}", c.replace('\n', " "), s.total, ted, perfect);
    }
    let matrix = vec![row, vec![false, false, false], vec![false, true, false]];
    for k in 1..=3 {
        let (n, rate) = pass_at_k(&matrix, k).unwrap();
        println!("pass@{k}: {n}/{} = {:.2}%", matrix.len(), rate * 100.0);
    }
}
