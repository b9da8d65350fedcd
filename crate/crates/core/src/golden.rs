//! Golden-section search on a bracket.
//!
//! Only ever called on an interval already known to contain a single
//! extremum; it does not look for brackets itself.

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt 5 - 1) / 2

/// Minimizes `f` on `[lo, hi]` until the bracket is narrower than `tol`.
/// Returns the best abscissa seen and its value.
pub fn minimize<F>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // 200 iterations shrink any double-precision interval below one ulp
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Mirror of [`minimize`] for maxima.
pub fn maximize<F>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (x, neg) = minimize(|x| -f(x), lo, hi, tol);
    (x, -neg)
}
