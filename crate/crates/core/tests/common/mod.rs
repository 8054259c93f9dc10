#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2};

/// Φ(z) from the all-positive series
/// `erf(x) = 2/√π e^{-x²} Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))`.
pub fn phi_series(z: f64) -> f64 {
    let x = z.abs() / SQRT_2;
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    while term > sum * 1e-18 {
        n += 1;
        term *= 2.0 * x2 / f64::from(2 * n + 1);
        sum += term;
    }
    let erf = 2.0 / PI.sqrt() * (-x2).exp() * sum;
    if z >= 0.0 {
        0.5 + 0.5 * erf
    } else {
        0.5 - 0.5 * erf
    }
}

/// Lower tail Φ(z), z < 0, from the Laplace continued fraction
/// `Φ(-x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + …))))`, evaluated bottom-up.
pub fn phi_tail_cf(z: f64) -> f64 {
    assert!(z < 0.0);
    let x = -z;
    let mut f = x;
    for k in (1..=400).rev() {
        f = x + f64::from(k) / f;
    }
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt() / f
}
