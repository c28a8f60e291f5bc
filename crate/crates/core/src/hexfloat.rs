//! Exact hexadecimal floating-point text, e.g. `0x1.8000000000000p+1` for 3.
//!
//! Only the canonical form written by [`format`] is accepted by [`parse`]:
//! normal numbers as `±0x1.<13 hex>p±e`, subnormals as `±0x0.<13 hex>p-1022`
//! and zeros as `±0x0p+0`.

pub fn format(v: f64) -> String {
    assert!(v.is_finite(), "hex float of non-finite value");
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    match (exp, frac) {
        (0, 0) => format!("{sign}0x0p+0"),
        (0, _) => format!("{sign}0x0.{frac:013x}p-1022"),
        _ => {
            let e = exp - 1023;
            let es = if e >= 0 { "+" } else { "-" };
            format!("{sign}0x1.{frac:013x}p{es}{}", e.abs())
        }
    }
}

pub fn parse(text: &str) -> Option<f64> {
    let text = text.trim();
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let body = body.strip_prefix("0x")?;
    let sign_bit = if negative { 1u64 << 63 } else { 0 };
    if body == "0p+0" {
        return Some(f64::from_bits(sign_bit));
    }
    let (mantissa, exp) = body.split_once('p')?;
    let (lead, frac) = mantissa.split_once('.')?;
    if frac.len() != 13 || !frac.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    let frac = u64::from_str_radix(frac, 16).ok()?;
    if !exp.starts_with(['+', '-']) {
        return None;
    }
    let e: i64 = exp.parse().ok()?;
    let bits = match lead {
        "1" => {
            if !(-1022..=1023).contains(&e) {
                return None;
            }
            ((e + 1023) as u64) << 52 | frac
        }
        "0" if e == -1022 && frac != 0 => frac,
        _ => return None,
    };
    Some(f64::from_bits(sign_bit | bits))
}
