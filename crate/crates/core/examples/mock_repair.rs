//! Full repair and evaluation run against a scripted mock model, writing
//! every artifact to a temporary directory.

use std::fs;

use spvr::corpus::SampleRecord;
use spvr::llm::{Gateway, MockAdapter, MockRule};
use spvr::pipeline::{files, run_eval, run_repair, BackendKind, RunConfig};
use spvr::syntax::Language;

fn sample(id: &str, cwe: &str, vuln: &str, fixed: &str) -> SampleRecord {
    SampleRecord {
        id: id.into(),
        cwe_id: cwe.into(),
        vuln_code: vuln.into(),
        fixed_code: Some(fixed.into()),
        language: Language::C,
        vuln_lines: None,
    }
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let records = [
        sample(
            "s1",
            "CWE-125",
            "int at(int *a, int n, int i)\n{\n    if (i > n) {\n        return -1;\n    }\n    return a[i];\n}\n",
            "int at(int *a, int n, int i)\n{\n    if (i >= n || i < 0) {\n        return -1;\n    }\n    return a[i];\n}\n",
        ),
        sample(
            "s2",
            "CWE-787",
            "void put(char *d, const char *s, size_t cap)\n{\n    size_t n = strlen(s);\n    memcpy(d, s, n);\n}\n",
            "void put(char *d, const char *s, size_t cap)\n{\n    size_t n = strlen(s);\n    memcpy(d, s, n < cap ? n : cap);\n}\n",
        ),
    ];
    let corpus: String = records.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    fs::write(dir.path().join("corpus.jsonl"), corpus).unwrap();

    // the model fixes s1 on its second attempt and never fixes s2
    let script = vec![
        MockRule::new(
            r"if \(i > n\)",
            ["```c\nif (i > n) {\n    return -1;\n}\n```", "```c\nif (i >= n || i < 0) {\n    return -1;\n}\n```"],
        ),
        MockRule::new("memcpy", ["memcpy(d, s, n - 1);"]),
    ];
    let cfg = RunConfig {
        corpus: dir.path().join("corpus.jsonl"),
        output_dir: dir.path().join("out"),
        cache_dir: Some(dir.path().join("cache")),
        backend: BackendKind::Mock,
        mock_script: Some(dir.path().join("script.json")),
        ..RunConfig::default()
    };
    fs::write(cfg.mock_script.as_ref().unwrap(), serde_json::to_string_pretty(&script).unwrap()).unwrap();

    let gateway = Gateway::new(MockAdapter::new(script).unwrap(), cfg.model.clone(), None).unwrap();
    let summary = run_repair(&cfg, &gateway).unwrap();
    println!("{summary:#?}");

    let out = &cfg.output_dir;
    let report = run_eval(&out.join(files::CANDIDATES), &out.join(files::TRUTH), &cfg.eval, out).unwrap();
    println!("pass@{} = {:.2}%", report.aggregates.k, report.aggregates.pass_rate * 100.0);
    print!("{}", fs::read_to_string(out.join(files::REPORT_CSV)).unwrap());
}
