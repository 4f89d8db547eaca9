//! Numeric value of C/C++ number literals.

/// Value of a number literal, or `None` when the spelling is not understood.
pub fn literal_value(text: &str) -> Option<f64> {
    let t: String = text.trim().chars().filter(|&c| c != '\'').collect();
    let lower = t.to_ascii_lowercase();
    if let Some(hex) = lower.strip_prefix("0x") {
        if hex.contains('.') || hex.contains('p') {
            return hex_float(hex);
        }
        let digits = hex.trim_end_matches(['u', 'l', 'z']);
        return u128::from_str_radix(digits, 16).ok().map(|v| v as f64);
    }
    if let Some(bin) = lower.strip_prefix("0b") {
        let digits = bin.trim_end_matches(['u', 'l', 'z']);
        return u128::from_str_radix(digits, 2).ok().map(|v| v as f64);
    }
    let is_float = lower.contains('.') || lower.contains('e');
    if is_float {
        let digits = lower.trim_end_matches(['f', 'l']);
        return digits.parse::<f64>().ok();
    }
    let digits = lower.trim_end_matches(['u', 'l', 'z']);
    if digits.len() > 1 && digits.starts_with('0') {
        return u128::from_str_radix(&digits[1..], 8).ok().map(|v| v as f64);
    }
    digits.parse::<u128>().ok().map(|v| v as f64)
}

fn hex_float(body: &str) -> Option<f64> {
    let body = body.trim_end_matches(['f', 'l']);
    let (mantissa, exp) = match body.split_once('p') {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let mut value = if int_part.is_empty() { 0.0 } else { u128::from_str_radix(int_part, 16).ok()? as f64 };
    let mut scale = 1.0 / 16.0;
    for c in frac_part.chars() {
        value += c.to_digit(16)? as f64 * scale;
        scale /= 16.0;
    }
    Some(value * 2f64.powi(exp))
}
