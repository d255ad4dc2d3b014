/// Significant digits in every fixed-precision figure the engine reports.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Fixed-point rendering with 12 significant digits, e.g. `0.400000000000`
/// or `1.60000000000`. Shared by the CLI and the service so both surfaces
/// print identical strings for the same value.
pub fn fixed12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return format!("{:.*}", SIGNIFICANT_DIGITS - 1, 0.0);
    }
    // Round in scientific form first so that the exponent reflects carries
    // such as 9.9999999999995 -> 1.00000000000e1.
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}
