//! Engineering-notation numbers: `1k`, `840u`, `2meg`, `18um`, `1e-3`.

use alloc::format;
use alloc::string::String;

/// Scale suffixes as powers of ten, longest first so `MEG` wins over `M`.
const SUFFIXES: &[(&str, i32)] = &[
    ("MEG", 6),
    ("T", 12),
    ("G", 9),
    ("K", 3),
    ("M", -3),
    ("U", -6),
    ("N", -9),
    ("P", -12),
    ("F", -15),
];

/// Why a token is not a number. `offset` is the byte offset of the fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueError {
    pub offset: usize,
    pub message: String,
}

/// Length of the longest prefix of `s` that is a decimal mantissa with an
/// optional exponent.
fn mantissa_len(s: &[u8]) -> usize {
    let mut i = 0;
    if matches!(s.first(), Some(b'+' | b'-')) {
        i += 1;
    }
    let int_start = i;
    while i < s.len() && s[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < s.len() && s[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return 0;
    }
    // An exponent only counts when digits follow; otherwise the letter is a
    // suffix candidate.
    if i < s.len() && matches!(s[i], b'e' | b'E') {
        let mut j = i + 1;
        if j < s.len() && matches!(s[j], b'+' | b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < s.len() && s[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            i = j;
        }
    }
    i
}

/// Parse a number with an optional scale suffix (case-insensitive).
///
/// Letters after a recognised suffix are unit decoration and ignored, so
/// `18um` is `18e-6` and `1kohm` is `1000`.
pub fn parse_value(text: &str) -> Result<f64, ValueError> {
    let bytes = text.as_bytes();
    if bytes.is_empty() {
        return Err(ValueError {
            offset: 0,
            message: "empty value".into(),
        });
    }
    let n = mantissa_len(bytes);
    if n == 0 {
        return Err(ValueError {
            offset: 0,
            message: format!("malformed number '{text}'"),
        });
    }
    let malformed = || ValueError {
        offset: 0,
        message: format!("malformed number '{text}'"),
    };
    let rest = &text[n..];
    if rest.is_empty() {
        return text.parse().map_err(|_| malformed());
    }
    let upper = rest.to_ascii_uppercase();
    let Some(&(sfx, scale)) = SUFFIXES.iter().find(|(s, _)| upper.starts_with(s)) else {
        return Err(ValueError {
            offset: n,
            message: format!("unknown suffix '{rest}' in '{text}'"),
        });
    };
    let tail = &rest[sfx.len()..];
    if let Some(pos) = tail.find(|c: char| !c.is_ascii_alphabetic()) {
        return Err(ValueError {
            offset: n + sfx.len() + pos,
            message: format!("unexpected '{}' in '{text}'", &tail[pos..]),
        });
    }
    // Fold the suffix into the exponent so the result is correctly rounded.
    let mantissa = &text[..n];
    let (base, exp) = match mantissa.find(['e', 'E']) {
        Some(i) => (
            &mantissa[..i],
            mantissa[i + 1..].parse::<i32>().map_err(|_| malformed())?,
        ),
        None => (mantissa, 0),
    };
    format!("{base}e{}", exp + scale)
        .parse()
        .map_err(|_| malformed())
}

/// Format `value` for a netlist. Magnitudes in `[0.01, 1000)` print as
/// plain decimals, everything else with an engineering suffix. The digits
/// are the shortest ones that round-trip, shifted rather than rescaled, so
/// [`parse_value`] recovers the identical `f64`.
pub fn format_value(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let mag = value.abs();
    if (1e-2..1e3).contains(&mag) {
        return format!("{value}");
    }
    // `{:e}` gives the shortest round-trip digits: "-8.4e-4".
    let sci = format!("{mag:e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-15..15).contains(&exp) {
        // beyond the suffix table: plain exponent form
        return format!("{value:e}");
    }
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let eng = (exp.div_euclid(3) * 3).clamp(-15, 12);
    let sfx = match eng {
        12 => "t",
        9 => "g",
        6 => "meg",
        3 => "k",
        0 => "",
        -3 => "m",
        -6 => "u",
        -9 => "n",
        -12 => "p",
        _ => "f",
    };
    // decimal point sits after `point` digits
    let point = 1 + exp - eng;
    let mut out = String::new();
    if value < 0.0 {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..-point {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let point = point as usize;
        if digits.len() <= point {
            out.push_str(&digits);
            for _ in digits.len()..point {
                out.push('0');
            }
        } else {
            out.push_str(&digits[..point]);
            out.push('.');
            out.push_str(&digits[point..]);
        }
    }
    out.push_str(sfx);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn suffix_table() {
        assert_eq!(parse_value("1k"), Ok(1000.0));
        assert_eq!(parse_value("840u"), Ok(8.4e-4));
        assert_eq!(parse_value("2meg"), Ok(2e6));
        assert_eq!(parse_value("2MEG"), Ok(2e6));
        assert_eq!(parse_value("3m"), Ok(3e-3));
        assert_eq!(parse_value("18um"), Ok(18e-6));
        assert_eq!(parse_value("1.5T"), Ok(1.5e12));
        assert_eq!(parse_value("4g"), Ok(4e9));
        assert_eq!(parse_value("7n"), Ok(7e-9));
        assert_eq!(parse_value("7p"), Ok(7e-12));
        assert_eq!(parse_value("7f"), Ok(7e-15));
        assert_eq!(parse_value("-3.3"), Ok(-3.3));
        assert_eq!(parse_value("1e-3"), Ok(1e-3));
        assert_eq!(parse_value("1e7"), Ok(1e7));
        assert_eq!(parse_value(".5"), Ok(0.5));
        assert_eq!(parse_value("5."), Ok(5.0));
        assert_eq!(parse_value("1kohm"), Ok(1000.0));
    }

    #[test]
    fn rejects_garbage() {
        for bad in [
            "", "k", "abc", "1x", "1v", "--1", "1k5", "+", ".", "1e", "1.2.3",
        ] {
            assert!(parse_value(bad).is_err(), "{bad} should fail");
        }
        let e = parse_value("12q").unwrap_err();
        assert_eq!(e.offset, 2);
    }

    #[test]
    fn formatting_uses_suffixes() {
        assert_eq!(format_value(840e-6), "840u");
        assert_eq!(format_value(18e-6), "18u");
        assert_eq!(format_value(100e-6), "100u");
        assert_eq!(format_value(1e7), "10meg");
        assert_eq!(format_value(3.3), "3.3");
        assert_eq!(format_value(0.7), "0.7");
        assert_eq!(format_value(-1.4e-3), "-1.4m");
        assert_eq!(format_value(-1.4e-4), "-140u");
        assert_eq!(format_value(1.5e16), "1.5e16");
        assert_eq!(format_value(2e-18), "2e-18");
        assert_eq!(format_value(-3.3), "-3.3");
        assert_eq!(format_value(1000.0), "1k");
        assert_eq!(format_value(0.0), "0");
    }

    proptest! {
        #[test]
        fn composed_values_parse(
            int in 0u32..100_000, frac in proptest::option::of(0u32..1000),
            exp in proptest::option::of(-20i32..20),
            sfx in prop::sample::select(alloc::vec![
                ("", 1.0), ("t", 1e12), ("G", 1e9), ("Meg", 1e6), ("k", 1e3),
                ("m", 1e-3), ("u", 1e-6), ("N", 1e-9), ("p", 1e-12), ("f", 1e-15),
            ]),
            unit in prop::sample::select(alloc::vec!["", "V", "ohm", "A"]),
            neg in any::<bool>(),
        ) {
            let mut mant = format!("{}{int}", if neg { "-" } else { "" });
            if let Some(f) = frac { mant.push_str(&format!(".{f}")); }
            if let Some(e) = exp { mant.push_str(&format!("e{e}")); }
            let unit = if sfx.0.is_empty() { "" } else { unit };
            let text = format!("{mant}{}{unit}", sfx.0);
            let expected: f64 = mant.parse::<f64>().unwrap() * sfx.1;
            let got = parse_value(&text).unwrap();
            prop_assert!((got - expected).abs() <= 4.0 * f64::EPSILON * expected.abs());
        }

        #[test]
        fn format_round_trips(v in prop::num::f64::NORMAL) {
            prop_assert_eq!(parse_value(&format_value(v)), Ok(v));
        }
    }
}
