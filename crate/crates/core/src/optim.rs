//! Bracketed one-dimensional searches.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizer of a unimodal `f` on `[a, b]` to an interval width of `tol`.
/// Ties move the bracket toward `a`.
pub(crate) fn golden_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Minimize `f` on `[lo, hi]` by scanning `n_grid` points and refining the
/// best cell with a golden-section search. Returns `(x, f(x))`.
pub(crate) fn scan_then_golden(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    n_grid: usize,
    tol: f64,
) -> (f64, f64) {
    let n_grid = n_grid.max(2);
    let step = (hi - lo) / (n_grid - 1) as f64;
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for k in 0..n_grid {
        let v = f(lo + k as f64 * step);
        if v < best_val {
            best_val = v;
            best = k;
        }
    }
    let a = lo + best.saturating_sub(1) as f64 * step;
    let b = (lo + (best + 1) as f64 * step).min(hi);
    let x = golden_min(&mut f, a, b, tol);
    let fx = f(x);
    // keep an endpoint when the scan found it strictly better
    let x_best = lo + best as f64 * step;
    if best_val < fx {
        (x_best, best_val)
    } else {
        (x, fx)
    }
}

/// Root of `f` on `[a, b]` by bisection, assuming a sign change.
pub(crate) fn bisect(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let x = golden_min(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn scan_prefers_boundary() {
        let (x, _) = scan_then_golden(|x| x, 0.0, 5.0, 11, 1e-10);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }
}
