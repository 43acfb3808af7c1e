//! Text formats shared by the library and the command line.

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn fmt17(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    format!("{v:.16e}")
}
