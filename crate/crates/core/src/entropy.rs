//! Shannon-type entropy helpers, all in nats with `0 ln 0 = 0`.

/// `-x ln x`, zero for `x <= 0`.
#[inline]
pub fn neg_x_ln_x(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.ln()
    } else {
        0.0
    }
}

/// Entropy of a probability vector.
pub fn shannon<const N: usize>(p: &[f64; N]) -> f64 {
    p.iter().copied().map(neg_x_ln_x).sum()
}

/// Binary entropy `h(x) = -x ln x - (1-x) ln(1-x)`.
pub fn binary_entropy(x: f64) -> f64 {
    neg_x_ln_x(x) + neg_x_ln_x(1.0 - x)
}

/// `ln(p/q) / (p - q)`, continuous through `p = q` where it equals `1/q`.
///
/// Switches to the series `(1 - x/2 + x^2/3) / q`, `x = (p-q)/q`, once
/// `|p - q|` drops below `1e-9` relative to `q`. `ln_1p(x)` covers ratios
/// near one; far from one it would lose the digits of a tiny `p/q`, so the
/// logarithms are taken separately there.
pub fn log_ratio_over_difference(p: f64, q: f64) -> f64 {
    let x = (p - q) / q;
    if x.abs() < 1e-9 {
        (1.0 - x / 2.0 + x * x / 3.0) / q
    } else if x.abs() < 0.5 {
        x.ln_1p() / (p - q)
    } else {
        (p.ln() - q.ln()) / (p - q)
    }
}

pub const NATS_PER_BIT: f64 = std::f64::consts::LN_2;

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / NATS_PER_BIT
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_probability_contributes_nothing() {
        assert_eq!(neg_x_ln_x(0.0), 0.0);
        assert_abs_diff_eq!(shannon(&[0.5, 0.5, 0.0, 0.0]), std::f64::consts::LN_2);
    }

    #[test]
    fn binary_entropy_endpoints() {
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.5), std::f64::consts::LN_2);
    }

    #[test]
    fn log_ratio_keeps_tiny_ratios() {
        let (p, q): (f64, f64) = (3.5e-11, 0.5);
        let exact = (p.ln() - q.ln()) / (p - q);
        assert!((log_ratio_over_difference(p, q) / exact - 1.0).abs() < 1e-14);
    }

    #[test]
    fn log_ratio_is_continuous_at_equal_arguments() {
        let q = 0.37;
        let exact = log_ratio_over_difference(q * (1.0 + 2e-9), q);
        let series = log_ratio_over_difference(q * (1.0 + 5e-10), q);
        assert_abs_diff_eq!(exact, 1.0 / q, epsilon = 1e-8);
        assert_abs_diff_eq!(series, 1.0 / q, epsilon = 1e-8);
        assert_eq!(log_ratio_over_difference(q, q), 1.0 / q);
        let far = log_ratio_over_difference(0.6, 0.2);
        assert_abs_diff_eq!(far, 3f64.ln() / 0.4, epsilon = 1e-15);
    }
}
