//! Number formatting and CSV emission shared by the library and the CLI.

use std::io::{self, Write};

/// Significant digits used for every floating-point value we print.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Plain decimal rendering of `x` with [`SIGNIFICANT_DIGITS`] significant digits.
///
/// ```
/// use oneshot::format::sig;
/// assert_eq!(sig(1.6f64.log2()), "0.678071905113");
/// assert_eq!(sig(-1.0), "-1.00000000000");
/// ```
pub fn sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific notation");
    let exponent: i64 = exponent.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();

    let mut out = String::with_capacity(digits.len() + 8);
    if negative {
        out.push('-');
    }
    if exponent < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exponent - 1) as usize));
        out.push_str(&digits);
    } else {
        let point = exponent as usize + 1;
        if point >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', point - digits.len()));
        } else {
            out.push_str(&digits[..point]);
            out.push('.');
            out.push_str(&digits[point..]);
        }
    }
    out
}

/// Writes a CSV table with a mandatory header row. Cells must not contain commas.
pub fn write_csv<W: Write>(mut out: W, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_twelve_significant_digits() {
        assert_eq!(sig(4.0), "4.00000000000");
        assert_eq!(sig(0.8113), "0.811300000000");
        assert_eq!(sig(1.25e-5), "0.0000125000000000");
        assert_eq!(sig(123456789012345.0), "123456789012000");
        assert_eq!(sig(9.9999999999999), "10.0000000000");
        assert_eq!(sig(0.0), "0");
        assert_eq!(sig(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_has_header() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["a".into(), "b".into()], &[vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,2\n");
    }
}
