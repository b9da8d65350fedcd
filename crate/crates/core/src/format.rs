//! Number formatting for emitted files.

/// `x` rounded to 9 significant digits, printed in the shortest form that
/// reads back to the rounded value. Magnitudes outside `[1e-4, 1e15)` use
/// exponent notation.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if (1e-4..1e15).contains(&rounded.abs()) {
        rounded.to_string()
    } else {
        format!("{rounded:e}")
    }
}
