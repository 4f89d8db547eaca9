//! Turn one vulnerable/fixed pair into the prompts sent to a model.

use spvr::corpus::{RepairSample, SampleRecord};
use spvr::pipeline::prepare_sample;
use spvr::prompt::PromptConfig;
use spvr::rules::RuleConfig;
use spvr::syntax::Language;

fn main() {
    let record = SampleRecord {
        id: "demo-1".into(),
        cwe_id: "CWE-787".into(),
        vuln_code: "void fill(char *dst, const char *src, int n)\n{\n    int i;\n    for (i = 0; i <= n; i++) {\n        dst[i] = src[i];\n    }\n    dst[n] = 0;\n}\n".into(),
        fixed_code: Some("void fill(char *dst, const char *src, int n)\n{\n    int i;\n    for (i = 0; i < n; i++) {\n        dst[i] = src[i];\n    }\n    dst[n] = 0;\n}\n".into()),
        language: Language::C,
        vuln_lines: None,
    };
    let sample = RepairSample::from_record(record);
    let prepared = prepare_sample(&sample, &RuleConfig::default(), &PromptConfig::default()).expect("supported sample");
    println!("MET type {}, expected fix:\n{}\n", prepared.met_type, prepared.truth.as_deref().unwrap_or("-"));
    for b in &prepared.bundles {
        println!("===== prompt {} =====\n{}", b.ordinal, b.assembled);
    }
}
