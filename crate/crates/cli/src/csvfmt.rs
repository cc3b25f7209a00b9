//! CSV cell formatting: '.' decimal, comma separator, LF line endings,
//! probabilities and energies at 9 significant digits. The formats are fixed
//! so emitted files are bit-stable across runs.

fn normalize(x: f64) -> f64 {
    // Avoid "-0" cells.
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// Scientific notation with 9 significant digits, e.g. `1.31178292e-2`.
pub fn sig9(x: f64) -> String {
    format!("{:.8e}", normalize(x))
}

/// Fixed-point with two decimals, used for coordinates and distance fractions.
pub fn fixed2(x: f64) -> String {
    format!("{:.2}", normalize(x))
}

/// Fixed-point with one decimal, used for dBm values.
pub fn fixed1(x: f64) -> String {
    format!("{:.1}", normalize(x))
}
