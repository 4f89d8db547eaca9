//! Random C functions, one statement or block header per line.

use rand::seq::SliceRandom;
use rand::Rng;

/// A generated function and the lines that may be mutated.
pub struct GenFunction {
    pub lines: Vec<String>,
    /// Indices of statement lines and block headers.
    pub mutable: Vec<usize>,
}

impl GenFunction {
    pub fn text(&self) -> String {
        self.lines.iter().map(|l| format!("{l}\n")).collect()
    }
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    lines: Vec<String>,
    mutable: Vec<usize>,
    counter: usize,
}

const VARS: [&str; 5] = ["a", "b", "len", "count", "idx"];
const OPS: [&str; 6] = ["+", "-", "*", "<", ">=", "=="];

impl<R: Rng> Gen<'_, R> {
    fn fresh(&mut self) -> usize {
        self.counter += 1;
        self.counter
    }

    fn var(&mut self) -> &'static str {
        VARS.choose(self.rng).unwrap()
    }

    fn expr(&mut self, depth: usize) -> String {
        let n = self.fresh();
        match self.rng.gen_range(0..if depth == 0 { 2 } else { 5 }) {
            0 => format!("{} + {n}", self.var()),
            1 => self.var().to_string(),
            2 => format!("({} {} {})", self.expr(depth - 1), OPS.choose(self.rng).unwrap(), self.expr(depth - 1)),
            3 => format!("helper_{n}({}, {})", self.var(), self.expr(depth - 1)),
            _ => format!("buf[{}]", self.expr(depth - 1)),
        }
    }

    fn push(&mut self, indent: usize, line: String, mutable: bool) {
        if mutable {
            self.mutable.push(self.lines.len());
        }
        self.lines.push(format!("{}{line}", "    ".repeat(indent)));
    }

    fn block(&mut self, indent: usize, depth: usize) {
        let count = self.rng.gen_range(1..=3);
        for _ in 0..count {
            self.statement(indent, depth);
        }
    }

    fn statement(&mut self, indent: usize, depth: usize) {
        let choice = self.rng.gen_range(0..if depth == 0 { 5 } else { 8 });
        match choice {
            0 => {
                let (v, n, e) = (self.var(), self.fresh(), self.expr(2));
                self.push(indent, format!("int t{n}_{v} = {e};"), true)
            }
            1 => {
                let (v, e) = (self.var(), self.expr(2));
                self.push(indent, format!("{v} = {e};"), true)
            }
            2 => {
                let (v, e) = (self.var(), self.expr(2));
                self.push(indent, format!("{v} += {e};"), true)
            }
            3 => {
                let (n, v, e) = (self.fresh(), self.var(), self.expr(2));
                self.push(indent, format!("sink_{n}({v}, {e});"), true)
            }
            4 => {
                let e = self.expr(1);
                self.push(indent, format!("return {e};"), true)
            }
            5 => {
                let c = self.expr(2);
                self.push(indent, format!("if ({c}) {{"), true);
                self.block(indent + 1, depth - 1);
                if self.rng.gen_bool(0.3) {
                    self.push(indent, "} else {".into(), false);
                    self.block(indent + 1, depth - 1);
                }
                self.push(indent, "}".into(), false);
            }
            6 => {
                let (v, e) = (self.var(), self.expr(1));
                self.push(indent, format!("for ({v} = 0; {v} < {e}; {v}++) {{"), true);
                self.block(indent + 1, depth - 1);
                self.push(indent, "}".into(), false);
            }
            _ => {
                let c = self.expr(1);
                self.push(indent, format!("while ({c}) {{"), true);
                self.block(indent + 1, depth - 1);
                self.push(indent, "}".into(), false);
            }
        }
    }
}

/// A function of a few statements with nesting up to depth 2.
pub fn function<R: Rng>(rng: &mut R) -> GenFunction {
    let mut g = Gen { rng, lines: Vec::new(), mutable: Vec::new(), counter: 0 };
    let n = g.fresh();
    g.push(0, format!("int func_{n}(int a, int b, int len, int count, int idx, int *buf)"), true);
    g.push(0, "{".into(), false);
    let count = g.rng.gen_range(3..=7);
    for _ in 0..count {
        g.statement(1, 2);
    }
    g.push(1, "return 0;".into(), false);
    g.push(0, "}".into(), false);
    GenFunction { lines: g.lines, mutable: g.mutable }
}

/// Replace the line at `at` with a variant that introduces a fresh token,
/// keeping the line's shape (header stays a header).
pub fn mutate_line(line: &str, tag: usize) -> String {
    let token = format!("mut_{tag}");
    if let Some(pos) = line.rfind(") {") {
        // header of if/for/while
        return format!("{} && {token}{}", &line[..pos], &line[pos..]);
    }
    if line.trim_start().starts_with("int func_") {
        return line.replacen("int *buf", &format!("int *buf, int {token}"), 1);
    }
    let body = line.trim_end().strip_suffix(';').unwrap_or(line);
    if let Some(eq) = body.find(" = ").or_else(|| body.find(" += ")) {
        let op_len = if body[eq..].starts_with(" += ") { 4 } else { 3 };
        return format!("{} {token} + {};", &body[..eq + op_len - 1], &body[eq + op_len..]);
    }
    if let Some(rest) = body.trim_start().strip_prefix("return ") {
        let indent = &body[..body.len() - body.trim_start().len()];
        return format!("{indent}return {token} - ({rest});");
    }
    // call statement: add an argument
    format!("{}, {token});", body.strip_suffix(')').unwrap_or(body))
}
