use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;

/// Highest n-gram order.
pub const MAX_ORDER: usize = 4;

const KEYWORD_WEIGHT: f64 = 1.0;
const OTHER_WEIGHT: f64 = 0.2;

fn token_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"(?x)
            "(?:[^"\\\n]|\\.)*"
          | '(?:[^'\\\n]|\\.)*'
          | [A-Za-z_][A-Za-z0-9_]*
          | \.?[0-9](?:[eEpP][+-]|[0-9A-Za-z_.'])*
          | ->\*? | \.\.\. | <<=? | >>=? | ::
          | [-+*/%&|^!=<>]= | && | \|\| | \+\+ | -- | ->
          | \S
        "#,
        )
        .expect("static regex")
    })
}

/// C/C++ tokens; whitespace and layout are ignored.
pub fn tokenize(code: &str) -> Vec<&str> {
    token_re().find_iter(code).map(|m| m.as_str()).collect()
}

fn keywords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        include_str!("../../data/c_keywords.txt")
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_keyword(token: &str) -> bool {
    keywords().contains(token)
}

fn ngrams<'t, 'a>(tokens: &'t [&'a str], n: usize) -> HashMap<&'t [&'a str], usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Clipped match count and candidate total for order `n`, each n-gram
/// weighted by `weight`.
fn clipped(cand: &[&str], reference: &[&str], n: usize, weight: impl Fn(&[&str]) -> f64) -> (f64, f64) {
    let c = ngrams(cand, n);
    let r = ngrams(reference, n);
    let mut matched = 0.0;
    let mut total = 0.0;
    for (gram, &count) in &c {
        let w = weight(gram);
        matched += w * count.min(r.get(gram).copied().unwrap_or(0)) as f64;
        total += w * count as f64;
    }
    (matched, total)
}

fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

fn smoothed_bleu(cand: &[&str], reference: &[&str], weight: impl Fn(&[&str]) -> f64) -> f64 {
    let bp = brevity_penalty(cand.len(), reference.len());
    if bp == 0.0 {
        return 0.0;
    }
    let log_sum: f64 = (1..=MAX_ORDER)
        .map(|n| {
            let (m, t) = clipped(cand, reference, n, &weight);
            ((m + 1.0) / (t + 1.0)).ln()
        })
        .sum();
    bp * (log_sum / MAX_ORDER as f64).exp()
}

/// Sentence BLEU with add-one smoothing on every n-gram precision.
pub fn bleu(cand: &[&str], reference: &[&str]) -> f64 {
    smoothed_bleu(cand, reference, |_| 1.0)
}

/// BLEU where unigram keywords count five times as much as other unigrams.
pub fn weighted_bleu(cand: &[&str], reference: &[&str]) -> f64 {
    smoothed_bleu(cand, reference, |g| match g {
        [t] if is_keyword(t) => KEYWORD_WEIGHT,
        [_] => OTHER_WEIGHT,
        _ => 1.0,
    })
}
