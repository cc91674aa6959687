//! Log-domain helpers shared by the bound evaluators.
//!
//! Every factor of the form `1 - exp(a)` with `a <= 0` goes through
//! [`ln_one_minus_exp`], which keeps full relative accuracy both when
//! `exp(a)` is tiny and when it is close to one.

use std::f64::consts::LN_2;

/// `ln(1 - exp(a))` for `a <= 0`.
///
/// Returns `-inf` at `a == 0` and NaN for `a > 0` (the factor would be
/// negative). Uses the `expm1`/`ln_1p` switch at `-ln 2`.
pub fn ln_one_minus_exp(a: f64) -> f64 {
    if a > 0.0 {
        f64::NAN
    } else if a == 0.0 {
        f64::NEG_INFINITY
    } else if a > -LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

/// `ln(1 - t)` for `t` in `[0, 1]`, accurate near `t = 0`.
#[inline]
pub fn ln_one_minus(t: f64) -> f64 {
    (-t).ln_1p()
}

/// `count * ln_factor` with the convention `0 * (-inf) = 0` (an empty
/// product is one regardless of its factor).
#[inline]
pub fn scaled_log(count: f64, ln_factor: f64) -> f64 {
    if count == 0.0 {
        0.0
    } else {
        count * ln_factor
    }
}

/// Formats a real with 17 significant digits, the precision used for every
/// real written to CSV or JSON. Non-finite values are spelled `inf`, `-inf`,
/// `nan`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}
