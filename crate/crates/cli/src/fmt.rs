//! Deterministic CSV number formatting: 10 significant digits, '.' decimal
//! separator, trailing zeros trimmed, LF line endings everywhere.

/// Format with 10 significant digits, printf-%g style.
pub fn g10(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.9e}", x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent parses");
    if (-4..10).contains(&exp) {
        let prec = (9 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", prec, x))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// A CSV row from already formatted cells.
pub fn row(cells: &[String]) -> String {
    let mut line = cells.join(",");
    line.push('\n');
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_common_values() {
        assert_eq!(g10(0.05), "0.05");
        assert_eq!(g10(0.9914), "0.9914");
        assert_eq!(g10(0.0), "0");
        assert_eq!(g10(-0.0), "0");
        assert_eq!(g10(1.0), "1");
        assert_eq!(g10(50.0), "50");
        assert_eq!(g10(5.830951894845301), "5.830951895");
        assert_eq!(g10(1e-100), "1e-100");
        assert_eq!(g10(1e100), "1e100");
        assert_eq!(g10(-0.015625), "-0.015625");
        assert_eq!(g10(123456789012.3), "1.23456789e11");
    }

    #[test]
    fn ten_significant_digits_survive() {
        assert_eq!(g10(0.123456789012), "0.123456789");
        assert_eq!(g10(9.999999999e9), "9999999999");
        assert_eq!(g10(1.000000000049), "1");
    }

    #[test]
    fn row_is_lf_terminated() {
        let r = row(&["a".into(), "b".into()]);
        assert_eq!(r, "a,b\n");
    }
}
