//! Shortest fixed-width-free float formatting with a fixed number of
//! significant digits, in the style of C's `%.Ng`.

use crate::Real;

/// Significant digits used for CSV output.
pub const CSV_DIGITS: usize = 12;

/// Formats `x` with `digits` significant digits, trailing zeros removed;
/// scientific notation below `1e-5` or at or above `10^digits`.
pub fn format_sig(x: Real, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    // Round first so that the exponent reflects the rounded value.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// [`format_sig`] with [`CSV_DIGITS`].
pub fn csv(x: Real) -> String {
    format_sig(x, CSV_DIGITS)
}
