//! MET-type distribution of a small corpus given as JSONL.

use spvr::corpus::{compute_mets, ingest, met_type_stats};

const CORPUS: &str = r#"{"id":"a","cwe_id":"CWE-476","vuln_code":"int f(int *p)\n{\n    if (p) {\n        return *p;\n    }\n    return 0;\n}\n","fixed_code":"int f(int *p)\n{\n    if (p != NULL) {\n        return *p;\n    }\n    return 0;\n}\n"}
{"id":"b","cwe_id":"CWE-190","vuln_code":"int g(int a, int b)\n{\n    int n = a * b;\n    return n;\n}\n","fixed_code":"int g(int a, int b)\n{\n    long n = (long)a * b;\n    return n;\n}\n"}
{"id":"c","cwe_id":"CWE-20","vuln_code":"int h(int x)\n{\n    return x;\n}\n","fixed_code":"int h(int x)\n{\n    return x < 0 ? 0 : x;\n}\n"}
{"id":"d","cwe_id":"CWE-20","vuln_code":"int k(int x)\n{\n    x = x + 1; // bump\n    return x;\n}\n","fixed_code":"int k(int x)\n{\n    x = x + 1; /* bump */\n    return x;\n}\n"}
"#;

fn main() {
    let mut corpus = ingest(CORPUS.as_bytes()).unwrap();
    println!("{} samples kept, {} dropped as comment-only edits", corpus.len(), corpus.dropped_identical());
    compute_mets(&mut corpus);
    print!("{}", met_type_stats(&corpus).to_text());
}
