//! Scalar root finding and extremum refinement shared by the modules.

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite sign.
/// Runs until the bracket collapses to adjacent floats or `max_iter` halvings.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, max_iter: usize) -> f64 {
    let mut flo = f(lo);
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection in log space on a positive bracket.
pub fn bisect_log<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, max_iter: usize) -> f64 {
    let x = bisect(|l| f(l.exp()), lo.ln(), hi.ln(), max_iter);
    x.exp()
}

/// Golden-section search for the extremum of a unimodal function on [a, b].
/// `maximize` selects the direction.
pub fn golden_extremum<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    maximize: bool,
    iters: usize,
) -> (f64, f64) {
    let s = if maximize { -1.0 } else { 1.0 };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = s * f(c);
    let mut fd = s * f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = s * f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = s * f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let x = bisect(|x| x * x - 2.0, 0.0, 2.0, 200);
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_extremum(|x| -(x - 0.3) * (x - 0.3) + 1.0, 0.0, 1.0, true, 100);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
    }
}
