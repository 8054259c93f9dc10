//! One-dimensional minimisation by golden-section search.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Golden-section search on `[lo, hi]` until the bracket is narrower than `tol`.
///
/// `f` must be unimodal on the interval.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Minimum {
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (hi - lo) > tol && iterations < 500 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
        iterations += 1;
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    Minimum { x, fx, iterations }
}

/// Evaluate `f` on `points` evenly spaced nodes of `[lo, hi]` and return the
/// index and abscissa of the smallest value.
pub fn grid_argmin<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> (usize, f64) {
    assert!(points >= 2);
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = (0, lo, f(lo));
    for i in 1..points {
        let x = lo + step * i as f64;
        let fx = f(x);
        if fx < best.2 {
            best = (i, x, fx);
        }
    }
    (best.0, best.1)
}
