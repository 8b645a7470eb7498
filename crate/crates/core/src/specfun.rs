//! Gamma and the modified Bessel function of the second kind.
//!
//! `K_ν(z)` is evaluated from
//!
//! ```text
//! K_ν(z) = ∫_0^∞ exp(-z cosh t) cosh(ν t) dt,
//! ```
//!
//! which holds for every real order and `z > 0`. The integrand is carried in
//! log form and scaled by `e^{z}` so that neither `cosh(νt)` overflows nor
//! `e^{-z}` underflows inside the quadrature.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::quad::{integrate_with, QuadConfig, Upper};
use crate::{Error, Result};

const GAMMA_R: f64 = 10.900511;
const TWO_SQRT_E_OVER_PI: f64 = 1.860_382_734_205_265_7;
static GAMMA_DK: [f64; 11] = [
    2.485_740_891_387_535_5e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_5,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];

/// Largest supported `|ν|`.
pub const MAX_ORDER: f64 = 5.0;

/// Γ(x) from a Lanczos-type rational approximation, with the reflection
/// formula for `x < 0.5`.
pub fn gamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("gamma of NaN"));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Pole { x });
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, (k, d)| s + d / (k as f64 - x));
        PI / ((PI * x).sin() * s * TWO_SQRT_E_OVER_PI * ((0.5 - x + GAMMA_R) / E).powf(0.5 - x))
    } else {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, (k, d)| s + d / (x + k as f64 - 1.0));
        s * TWO_SQRT_E_OVER_PI * ((x - 0.5 + GAMMA_R) / E).powf(x - 0.5)
    }
}

/// Both sides of `Γ(ν)Γ(1-ν) = π / sin(πν)` for `ν ∈ (0, 1)`.
pub fn gamma_reflection(nu: f64) -> Result<(f64, f64)> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::domain(format!("reflection check needs 0 < ν < 1, got {nu}")));
    }
    let lhs = gamma(nu)? * gamma(1.0 - nu)?;
    let rhs = PI / (PI * nu).sin();
    Ok((lhs, rhs))
}

/// `πν / sin(πν)`, continuous through `ν = 0` where it equals 1.
pub fn pi_nu_over_sin(nu: f64) -> f64 {
    let x = PI * nu;
    if x.abs() < 1e-4 {
        // x/sin x = 1 + x²/6 + 7x⁴/360
        let x2 = x * x;
        1.0 + x2 / 6.0 + 7.0 * x2 * x2 / 360.0
    } else {
        x / x.sin()
    }
}

/// Order of a Bessel function. Stored as `|ν|` so that `K_{-ν} = K_ν` holds
/// bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Order(f64);

impl Order {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::domain(format!("order must be finite, got {nu}")));
        }
        if nu.abs() > MAX_ORDER {
            return Err(Error::domain(format!(
                "|ν| = {} exceeds the supported maximum {MAX_ORDER}",
                nu.abs()
            )));
        }
        Ok(Self(nu.abs()))
    }

    pub fn nu(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Extra relative safety factor applied when choosing the truncation point.
    pub truncation_margin: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_panels: 512,
            truncation_margin: 1e-3,
        }
    }
}

impl EvalConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::domain("rel_tol must be positive"));
        }
        if self.max_panels < 8 {
            return Err(Error::domain("max_panels must be at least 8"));
        }
        if !(self.truncation_margin > 0.0 && self.truncation_margin <= 1.0) {
            return Err(Error::domain("truncation_margin must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselK {
    pub value: f64,
    /// `e^{z} K_ν(z)`, always representable.
    pub scaled: f64,
    /// Set when `value` underflowed to zero (or to a subnormal).
    pub underflow: bool,
    /// Relative error estimate of the quadrature.
    pub rel_error: f64,
}

/// `K_ν(z)` for real order `|ν| ≤ 5` and `z > 0`.
pub fn bessel_k(order: Order, z: f64, cfg: &EvalConfig) -> Result<BesselK> {
    cfg.validate()?;
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain(format!("K_ν(z) needs finite z > 0, got {z}")));
    }
    let nu = order.nu();
    let log_integrand = |t: f64| {
        let s = (0.5 * t).sinh();
        -2.0 * z * s * s + ln_cosh(nu * t)
    };
    let cut = truncation_point(z, nu, cfg.rel_tol * cfg.truncation_margin, &log_integrand);
    let qcfg = QuadConfig {
        tol: cfg.rel_tol,
        max_panels: cfg.max_panels,
        ..QuadConfig::default()
    };
    let r = integrate_with(|t| log_integrand(t).exp(), 0.0, Upper::Finite(cut), &qcfg)?;
    let scaled = r.value;
    let value = scaled * (-z).exp();
    Ok(BesselK {
        value,
        scaled,
        underflow: value < f64::MIN_POSITIVE,
        rel_error: r.error_estimate / scaled.abs().max(f64::MIN_POSITIVE),
    })
}

/// `K_ν(z)` with the default configuration.
pub fn kv(nu: f64, z: f64) -> Result<f64> {
    Ok(bessel_k(Order::new(nu)?, z, &EvalConfig::default())?.value)
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Smallest grid point `T` past the peak of the integrand at which both the
/// integrand has fallen below `rel` times its maximum and its log-slope is
/// below -1, so the tail `∫_T^∞` is bounded by `rel · max`.
fn truncation_point(z: f64, nu: f64, rel: f64, g: &impl Fn(f64) -> f64) -> f64 {
    let slope = |t: f64| -z * t.sinh() + nu * (nu * t).tanh();
    let drop = rel.ln();
    let step = 0.25;
    let mut gmax = g(0.0);
    let mut t = 0.0;
    loop {
        t += step;
        let gt = g(t);
        gmax = gmax.max(gt);
        if gt < gmax + drop && slope(t) < -1.0 {
            return t;
        }
        if t > 2000.0 {
            return t;
        }
    }
}

/// `|(1/r)(r u')' - (ν²/r²) u - u|` for `u = K_ν` by central differences.
pub fn bessel_k_ode_residual(order: Order, r: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || !(r - 2.0 * h > 0.0) {
        return Err(Error::domain(format!(
            "finite-difference step h = {h} too large for r = {r}"
        )));
    }
    let cfg = EvalConfig {
        rel_tol: 1e-14,
        ..EvalConfig::default()
    };
    let k = |x: f64| bessel_k(order, x, &cfg).map(|b| b.value);
    let (um, u0, up) = (k(r - h)?, k(r)?, k(r + h)?);
    let nu = order.nu();
    let second = (up - 2.0 * u0 + um) / (h * h);
    let first = (up - um) / (2.0 * h);
    Ok((second + first / r - nu * nu / (r * r) * u0 - u0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gamma_trivial_values() {
        assert!(rel(gamma(1.0).unwrap(), 1.0) < 1e-15);
        assert!(rel(gamma(5.0).unwrap(), 24.0) < 1e-14);
        assert!(rel(gamma(0.5).unwrap(), 1.772_453_850_905_516) < 1e-14);
    }

    #[test]
    fn gamma_poles() {
        for x in [0.0, -1.0, -2.0, -7.0] {
            assert_eq!(gamma(x), Err(Error::Pole { x }));
        }
        assert!(gamma(f64::NAN).is_err());
    }

    #[test]
    fn gamma_negative_arguments_use_reflection() {
        // Γ(-1/2) = -2√π
        let g = gamma(-0.5).unwrap();
        assert!(rel(g, -2.0 * PI.sqrt()) < 1e-14);
    }

    #[test]
    fn reflection_sides() {
        let (l, r) = gamma_reflection(0.5).unwrap();
        assert!(rel(l, PI) < 1e-13 && rel(r, PI) < 1e-15);
        let (l, r) = gamma_reflection(0.25).unwrap();
        let oracle = PI * 2f64.sqrt();
        assert!(rel(r, oracle) < 1e-15);
        assert!(rel(l, r) < 1e-12);
        let (l, r) = gamma_reflection(0.9).unwrap();
        assert!(rel(r, PI / (0.9 * PI).sin()) < 1e-15);
        assert!(rel(l, r) < 1e-12);
        assert!(gamma_reflection(0.0).is_err());
        assert!(gamma_reflection(1.0).is_err());
    }

    #[test]
    fn pi_nu_over_sin_is_continuous_at_zero() {
        assert_eq!(pi_nu_over_sin(0.0), 1.0);
        for x in [0.999e-4, 1.001e-4, 3e-5] {
            let direct = x / f64::sin(x);
            assert!((pi_nu_over_sin(x / PI) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn order_bounds() {
        assert!(Order::new(5.0).is_ok());
        assert!(Order::new(-5.1).is_err());
        assert!(Order::new(f64::INFINITY).is_err());
        assert_eq!(Order::new(-0.3).unwrap(), Order::new(0.3).unwrap());
    }

    #[test]
    fn k_half_closed_form() {
        let v = kv(0.5, 1.0).unwrap();
        let closed = (PI / 2.0).sqrt() * (-1.0f64).exp();
        assert!(rel(v, closed) < 1e-12, "{v} vs {closed}");
        assert!((v - 0.461_068_504_4).abs() < 1e-10);
    }

    #[test]
    fn k_negative_order_is_bitwise_equal() {
        let cfg = EvalConfig::default();
        let a = bessel_k(Order::new(-0.3).unwrap(), 2.0, &cfg).unwrap();
        let b = bessel_k(Order::new(0.3).unwrap(), 2.0, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn k_domain_and_underflow() {
        assert!(kv(0.0, 0.0).is_err());
        assert!(kv(0.0, -1.0).is_err());
        let big = bessel_k(Order::new(0.0).unwrap(), 800.0, &EvalConfig::default()).unwrap();
        assert!(big.underflow);
        assert_eq!(big.value, 0.0);
        assert!(big.scaled > 0.0);
        // e^z K_0(z) ~ sqrt(π/2z)
        assert!(rel(big.scaled, (PI / 1600.0).sqrt()) < 1e-3);
    }

    #[test]
    fn eval_config_validation() {
        let cfg = EvalConfig {
            max_panels: 4,
            ..EvalConfig::default()
        };
        assert!(bessel_k(Order::new(0.0).unwrap(), 1.0, &cfg).is_err());
        let cfg = EvalConfig {
            rel_tol: 0.0,
            ..EvalConfig::default()
        };
        assert!(bessel_k(Order::new(0.0).unwrap(), 1.0, &cfg).is_err());
    }

    #[test]
    fn ode_residual_is_small_and_second_order() {
        let o = Order::new(0.3).unwrap();
        assert!(bessel_k_ode_residual(o, 2.0, 1e-3).unwrap() <= 1e-6);
        let r1 = bessel_k_ode_residual(o, 2.0, 0.04).unwrap();
        let r2 = bessel_k_ode_residual(o, 2.0, 0.02).unwrap();
        let ratio = r1 / r2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        let half = Order::new(0.5).unwrap();
        let a = bessel_k_ode_residual(half, 1.0, 0.02).unwrap();
        let b = bessel_k_ode_residual(half, 1.0, 0.005).unwrap();
        assert!(b < a / 10.0);
        assert!(bessel_k_ode_residual(o, 1.0, 0.5).is_err());
    }
}
