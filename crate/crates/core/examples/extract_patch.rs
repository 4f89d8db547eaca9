//! Pull candidate patches out of typical model replies.

use spvr::patch::extract_patch;
use spvr::syntax::Language;

fn main() {
    let replies = [
        "if (len >= cap) return -1;",
        "Sure! The bound must be inclusive:\n```c\nif (len >= cap) {\n    return -1;\n}\n```\nThis rejects len == cap.",
        "```c\nif (len >= cap)\n    return -1;\n",
        "The condition looks fine to me.",
    ];
    for raw in replies {
        let e = extract_patch(raw, "if_statement", Language::C).unwrap();
        println!("{:?}: {:?}", e.status, e.code);
    }
}
