//! Fixed-precision number formatting for text outputs.

/// Nine significant digits, shortest form (`2.5`, `1.23456789e-5`, `0`).
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_string() } else { format!("{x}") };
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    let exp = rounded.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{rounded:.decimals$}");
        trim_zeros(&s)
    } else {
        let s = format!("{rounded:.8e}");
        let (mant, e) = s.split_once('e').expect("exponent form");
        format!("{}e{e}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Rounds to nine significant digits (for JSON reports).
pub fn round9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Pretty JSON with every float rounded to nine significant digits.
pub fn to_json<T: serde::Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    serde_json::to_string_pretty(&v)
}

fn round_value(v: &mut serde_json::Value) {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round9(x))) {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_floats_are_rounded() {
        let s = to_json(&serde_json::json!({"a": [1.0 / 3.0, 2], "b": {"c": 71.712345678912}})).unwrap();
        assert!(s.contains("0.333333333") && !s.contains("0.3333333333"));
        assert!(s.contains("71.7123457"));
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(2.5), "2.5");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(71.712345678912), "71.7123457");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(-1234.0), "-1234");
        assert_eq!(sig9(1.23456789123e-7), "1.23456789e-7");
        assert_eq!(sig9(9.999999999), "10");
        assert_eq!(round9(1.0 / 3.0), 0.333333333);
    }
}
