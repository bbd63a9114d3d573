//! Special functions: Euler Gamma and unit-ball volumes.

use std::f64::consts::PI;

use crate::error::{Error, Result};

// Lanczos approximation with g = 7, n = 9 (the coefficient set published with
// the GNU Scientific Library and reproduced in most numerical references).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Euler Gamma function for positive real arguments.
///
/// Arguments below 1/2 are shifted up with `Γ(x) = Γ(x+1)/x`; no reflection
/// formula is used, so the negative axis is rejected.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("gamma_fn requires x > 0, got {x}")));
    }
    Ok(gamma_positive(x))
}

fn gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        return gamma_positive(x + 1.0) / x;
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    // t^(x+1/2) e^(-t) split in two halves to stay finite up to x ~ 170
    let half = t.powf(0.5 * (x + 0.5));
    (2.0 * PI).sqrt() * half * (-t).exp() * half * acc
}

/// Volume ω_d of the unit ball in ℝ^d.
pub fn ball_volume(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::input("ball_volume requires d >= 1"));
    }
    let half_d = d as f64 / 2.0;
    Ok(PI.powf(half_d) / gamma_positive(half_d + 1.0))
}

/// Surface measure dω_d of the unit sphere in ℝ^d.
pub fn sphere_measure(d: usize) -> Result<f64> {
    Ok(d as f64 * ball_volume(d)?)
}
