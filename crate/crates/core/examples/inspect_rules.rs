//! Run the inspection rules on a MET located from a reported line range,
//! the way a deployment without a fixed version would.

use spvr::met::{locate_met_online, EditSpan, MinimumEditTree, Side};
use spvr::rules::{run_rules, RuleConfig};
use spvr::syntax::{parse, SourceUnit};

const CODE: &str = r#"int copy_header(struct pkt *p, char *out, size_t cap)
{
    size_t len = p->hdr_len;
    if (len > cap) {
        return -1;
    }
    memcpy(out, p->data, p->hdr_len + p->opt_len);
    out[p->hdr_len] = 0;
    return (int)p->opt_len;
}
"#;

fn main() {
    let unit = SourceUnit::c(CODE);
    let tree = parse(&unit).unwrap();
    // line 7 is the memcpy call reported as faulty
    let span = EditSpan::from_lines(&unit, Side::Vulnerable, 7, 7).unwrap().unwrap();
    let node = locate_met_online(&tree, &span).unwrap().expect("a MET for line 7");
    let met = MinimumEditTree::online(node);
    println!("MET: {} `{}`", met.met_type(), node.text());

    let cfg = RuleConfig { max_findings: 5, ..RuleConfig::default() };
    for f in run_rules(&met, &tree, &cfg).unwrap() {
        println!("[{:?}] {}", f.check_id, f.instruction);
    }
}
