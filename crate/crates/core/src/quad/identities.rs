//! Bessel-K integral identities as checkable reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{integrate_with, QuadConfig, Upper};
use crate::specfun::{bessel_k, gamma, pi_nu_over_sin, EvalConfig, Order};
use crate::{Error, Result};

/// Both sides of an identity, with `rel_err = |lhs - rhs| / max(|rhs|, tiny)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    pub params: BTreeMap<String, f64>,
}

impl IdentityReport {
    pub fn new(name: &str, lhs: f64, rhs: f64, params: &[(&str, f64)]) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            rel_err: relative_error(lhs, rhs),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.rel_err <= tol
    }
}

pub(crate) fn relative_error(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE)
}

/// Which way to compute `∫_0^∞ K_ν(z)² z dz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KvRoute {
    /// Integrate `K_ν(z)² z` directly.
    #[default]
    Direct,
    /// Square via Nicholson's formula, integrate over `z` first and then `t`.
    Fubini,
}

fn kcfg(tol: f64) -> EvalConfig {
    EvalConfig {
        rel_tol: (tol * 1e-3).clamp(1e-14, 1e-12),
        ..EvalConfig::default()
    }
}

fn k_value(order: Order, z: f64, cfg: &EvalConfig) -> f64 {
    // Domain is guaranteed by the callers (z > 0, order validated).
    bessel_k(order, z, cfg).map(|b| b.value).unwrap_or(f64::NAN)
}

fn nan_guard(r: &super::QuadResult) -> Result<()> {
    if r.value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("integrand produced a non-finite value"))
    }
}

/// `∫_0^∞ |K_ν(z)|² z dz = ½ πν / sin(πν)` for `0 < |ν| < 1`.
pub fn verify_kv_identity(nu: f64, tol: f64) -> Result<IdentityReport> {
    verify_kv_identity_with(nu, tol, KvRoute::Direct)
}

pub fn verify_kv_identity_with(nu: f64, tol: f64, route: KvRoute) -> Result<IdentityReport> {
    if !(nu.abs() > 0.0 && nu.abs() < 1.0) {
        return Err(Error::domain(format!("K_ν norm identity needs 0 < |ν| < 1, got {nu}")));
    }
    let rhs = 0.5 * pi_nu_over_sin(nu.abs());
    let lhs = kv_norm_integral_with(nu, tol, route)?;
    Ok(IdentityReport::new(
        "kv_norm_identity",
        lhs,
        rhs,
        &[("nu", nu), ("tol", tol)],
    ))
}

/// `∫_0^∞ K_ν(z)² z dz` by quadrature, for `|ν| < 1`.
pub fn kv_norm_integral(nu: f64, tol: f64) -> Result<f64> {
    kv_norm_integral_with(nu, tol, KvRoute::Direct)
}

pub fn kv_norm_integral_with(nu: f64, tol: f64, route: KvRoute) -> Result<f64> {
    if !(nu.abs() < 1.0) {
        return Err(Error::domain(format!("∫K_ν² z dz diverges unless |ν| < 1, got {nu}")));
    }
    let a = nu.abs();
    let kc = kcfg(tol);
    match route {
        KvRoute::Direct => {
            let order = Order::new(nu)?;
            let cfg = QuadConfig::with_tol(tol * 0.1).singular_at_lower(1.0 - 2.0 * a);
            let r = integrate_with(
                |z| {
                    let k = k_value(order, z, &kc);
                    k * k * z
                },
                0.0,
                Upper::Infinite { decay_rate: 2.0 },
                &cfg,
            )?;
            nan_guard(&r)?;
            Ok(r.value)
        }
        KvRoute::Fubini => {
            let order = Order::new(2.0 * nu)?;
            let inner_cfg = QuadConfig::with_tol(tol * 0.01).singular_at_lower(1.0 - 2.0 * a);
            let inner = |t: f64| {
                let c = t.cosh();
                integrate_with(
                    |z| k_value(order, 2.0 * z * c, &kc) * z,
                    0.0,
                    Upper::Infinite { decay_rate: 2.0 * c },
                    &inner_cfg,
                )
                .map(|r| r.value)
                .unwrap_or(f64::NAN)
            };
            let outer_cfg = QuadConfig::with_tol(tol * 0.1);
            let r = integrate_with(inner, 0.0, Upper::Infinite { decay_rate: 2.0 }, &outer_cfg)?;
            nan_guard(&r)?;
            Ok(2.0 * r.value)
        }
    }
}

/// `K_ν(z)² = 2 ∫_0^∞ K_{2ν}(2z cosh t) dt`.
pub fn verify_nicholson(nu: f64, z: f64, tol: f64) -> Result<IdentityReport> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::domain(format!("Nicholson check needs z > 0, got {z}")));
    }
    let order = Order::new(nu)?;
    let double = Order::new(2.0 * nu)?;
    let kc = kcfg(tol);
    let k = bessel_k(order, z, &kc)?.value;
    let lhs = k * k;
    let r = integrate_with(
        |t| k_value(double, 2.0 * z * t.cosh(), &kc),
        0.0,
        Upper::Infinite { decay_rate: 1.0 },
        &QuadConfig::with_tol(tol * 0.1),
    )?;
    nan_guard(&r)?;
    Ok(IdentityReport::new(
        "nicholson",
        lhs,
        2.0 * r.value,
        &[("nu", nu), ("z", z), ("tol", tol)],
    ))
}

/// `∫_0^∞ K_ν(z) z^{β-1} dz = 2^{β-2} Γ((β+ν)/2) Γ((β-ν)/2)` for `β > |ν|`.
pub fn verify_mellin(nu: f64, beta: f64, tol: f64) -> Result<IdentityReport> {
    if !(beta > nu.abs()) || !beta.is_finite() {
        return Err(Error::domain(format!(
            "Mellin identity needs β > |ν|, got β = {beta}, ν = {nu}"
        )));
    }
    let order = Order::new(nu)?;
    let a = order.nu();
    let kc = kcfg(tol);
    let cfg = QuadConfig::with_tol(tol * 0.1).singular_at_lower(beta - 1.0 - a);
    let r = integrate_with(
        |z| k_value(order, z, &kc) * z.powf(beta - 1.0),
        0.0,
        Upper::Infinite { decay_rate: 1.0 },
        &cfg,
    )?;
    nan_guard(&r)?;
    let rhs = 2f64.powf(beta - 2.0) * gamma(0.5 * (beta + nu))? * gamma(0.5 * (beta - nu))?;
    Ok(IdentityReport::new(
        "mellin",
        r.value,
        rhs,
        &[("nu", nu), ("beta", beta), ("tol", tol)],
    ))
}

/// The Mellin identity at `β = 2` with order `2ν₀` and argument `2z cosh t`:
/// `∫_0^∞ K_{2ν₀}(2z cosh t) z dz = (πν₀ / sin πν₀) / (2 cosh t)²`.
pub fn verify_scaled_mellin(nu0: f64, t: f64, tol: f64) -> Result<IdentityReport> {
    if !(nu0.abs() < 1.0) {
        return Err(Error::domain(format!("scaled Mellin step needs |ν₀| < 1, got {nu0}")));
    }
    let order = Order::new(2.0 * nu0)?;
    let c = t.cosh();
    let kc = kcfg(tol);
    let cfg = QuadConfig::with_tol(tol * 0.1).singular_at_lower(1.0 - 2.0 * nu0.abs());
    let r = integrate_with(
        |z| k_value(order, 2.0 * z * c, &kc) * z,
        0.0,
        Upper::Infinite { decay_rate: 2.0 * c },
        &cfg,
    )?;
    nan_guard(&r)?;
    let rhs = pi_nu_over_sin(nu0) / (2.0 * c).powi(2);
    Ok(IdentityReport::new(
        "scaled_mellin",
        r.value,
        rhs,
        &[("nu0", nu0), ("t", t), ("tol", tol)],
    ))
}
