//! Log-gamma, digamma and the Stirling ratio.
//!
//! All three share one Stirling-series tail so that large arguments never
//! pay for a cancellation between `ln Γ` and its leading asymptotic terms.
//! Small arguments are shifted upward with the recurrences before the series
//! is applied.

use crate::error::{domain, Result};

/// `ln √(2π)`
pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Below this the series is not used directly; arguments are shifted up.
const SERIES_MIN: f64 = 10.0;

/// `B_2k / (2k (2k-1))` for k = 1..8.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `B_2k / (2k)` for k = 1..7.
const DIGAMMA_COEFFS: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
];

/// Stirling correction `ln Γ(z) - [(z - ½) ln z - z + ln √(2π)]`, valid for `z ≥ SERIES_MIN`.
fn stirling_tail(z: f64) -> f64 {
    let r = 1.0 / z;
    let r2 = r * r;
    let mut acc = 0.0;
    for c in STIRLING_COEFFS.iter().rev() {
        acc = acc * r2 + c;
    }
    acc * r
}

/// Natural logarithm of the gamma function for `z > 0`.
pub fn log_gamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || z.is_infinite() {
        return Err(domain("log_gamma", z, "z > 0 and finite"));
    }
    if z == 1.0 || z == 2.0 {
        return Ok(0.0);
    }
    if z >= SERIES_MIN {
        return Ok((z - 0.5) * libm::log(z) - z + LN_SQRT_2PI + stirling_tail(z));
    }
    // ln Γ(z) = ln Γ(z + k) - ln[z (z+1) ... (z+k-1)]
    let mut shifted = z;
    let mut product = 1.0;
    while shifted < SERIES_MIN {
        product *= shifted;
        shifted += 1.0;
    }
    let upper =
        (shifted - 0.5) * libm::log(shifted) - shifted + LN_SQRT_2PI + stirling_tail(shifted);
    Ok(upper - libm::log(product))
}

/// Digamma function `Ψ(z) = d/dz ln Γ(z)` for `z > 0`.
pub fn digamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || z.is_infinite() {
        return Err(domain("digamma", z, "z > 0 and finite"));
    }
    let mut shifted = z;
    let mut reciprocal_sum = 0.0;
    while shifted < SERIES_MIN {
        reciprocal_sum += 1.0 / shifted;
        shifted += 1.0;
    }
    let r2 = 1.0 / (shifted * shifted);
    let mut tail = 0.0;
    for c in DIGAMMA_COEFFS.iter().rev() {
        tail = tail * r2 + c;
    }
    tail *= r2;
    Ok(libm::log(shifted) - 0.5 / shifted - tail - reciprocal_sum)
}

/// `ln S(z)` where `S(z) = √(2π) e^{-z} z^{z+½} / Γ(z+1)`.
///
/// Returns `-∞` at `z = 0`.
pub fn ln_stirling_ratio(z: f64) -> Result<f64> {
    if !(z >= 0.0) || z.is_infinite() {
        return Err(domain("stirling_ratio", z, "z >= 0 and finite"));
    }
    if z == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if z >= SERIES_MIN {
        // ln Γ(z+1) = (z+½) ln z - z + ln √(2π) + tail(z), so everything but the tail cancels.
        return Ok(-stirling_tail(z));
    }
    Ok(LN_SQRT_2PI - z + (z + 0.5) * libm::log(z) - log_gamma(z + 1.0)?)
}

/// Stirling ratio `S(z)`; `S(0) = 0`, `S(z) → 1` from below as `z → ∞`.
pub fn stirling_ratio(z: f64) -> Result<f64> {
    Ok(libm::exp(ln_stirling_ratio(z)?))
}
