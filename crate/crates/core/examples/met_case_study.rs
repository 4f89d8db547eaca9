//! Locate the minimum edit tree of a netfilter bounds-check fix and print
//! where it sits on both sides.
//!
//! ```text
//! cargo run --example met_case_study
//! ```

use spvr::met::{met_for_pair, MetOutcome};
use spvr::syntax::{parse, SourceUnit};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let vuln = SourceUnit::c(std::fs::read_to_string(format!("{dir}/case_study_vuln.c")).unwrap());
    let fixed = SourceUnit::c(std::fs::read_to_string(format!("{dir}/case_study_fixed.c")).unwrap());
    let v_tree = parse(&vuln).unwrap();
    let f_tree = parse(&fixed).unwrap();

    match met_for_pair(&v_tree, &f_tree) {
        MetOutcome::Found(met) => {
            let v = met.v_node(&v_tree);
            println!("MET type: {}", met.met_type());
            println!("vulnerable lines {:?}:\n{}\n", v.line_span(), v.text());
            if let Some(f) = met.f_node(&f_tree) {
                println!("fixed lines {:?}:\n{}\n", f.line_span(), f.text());
            }
            if let Some(merged) = &met.merged {
                println!("merged tree (- vulnerable only, + fixed only):\n{}", merged.outline());
            }
        }
        other => println!("no MET: {other:?}"),
    }
}
