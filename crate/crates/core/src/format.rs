//! Deterministic decimal formatting.

/// `%.{digits}g`-style formatting: `digits` significant digits, trailing
/// zeros trimmed, exponent notation outside `[1e-5, 10^digits)`.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Shortest-unambiguous 17-significant-digit rendering used in checkpoints.
pub fn fmt_f64_17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serde helpers writing float arrays with [`fmt_f64_17`].
pub mod f64_17 {
    use serde::ser::{Error, SerializeSeq};
    use serde::Serializer;
    use serde_json::value::RawValue;

    struct Row<'a>(&'a [f64]);

    impl serde::Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            vec(self.0, s)
        }
    }

    pub fn vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for &x in v {
            if !x.is_finite() {
                return Err(S::Error::custom(format!("non-finite value {x}")));
            }
            let raw = RawValue::from_string(super::fmt_f64_17(x)).map_err(S::Error::custom)?;
            seq.serialize_element(&raw)?;
        }
        seq.end()
    }

    pub fn nested<S: Serializer>(v: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for row in v {
            seq.serialize_element(&Row(row))?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(fmt_sig(std::f64::consts::FRAC_PI_2, 12), "1.57079632679");
        assert_eq!(fmt_sig(-std::f64::consts::PI, 12), "-3.14159265359");
        assert_eq!(fmt_sig(0.5, 12), "0.5");
        assert_eq!(fmt_sig(2.0, 12), "2");
        assert_eq!(fmt_sig(1.0e-7, 12), "1e-07");
        assert_eq!(fmt_sig(123456.0, 12), "123456");
        assert_eq!(fmt_sig(0.000123, 12), "0.000123");
        assert_eq!(fmt_sig(1.0 / 3.0, 12), "0.333333333333");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567] {
            let s = fmt_f64_17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
