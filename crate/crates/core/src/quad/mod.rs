//! Adaptive quadrature on finite and half-infinite intervals.
//!
//! The engine is a global adaptive 7/15 Gauss–Kronrod scheme. Half-infinite
//! ranges are split at a cut point `T` found by scanning outward with the
//! caller-declared decay rate `c`; the remainder `[T, ∞)` is mapped onto
//! `(0, 1]` by `x = T - ln(u) / c`, which turns an `e^{-c x}` tail into a
//! bounded integrand. An integrable power singularity at the lower endpoint
//! is handled by geometric grading toward the endpoint plus a closed-form
//! power-law estimate of the innermost sliver `[a, a + δ]`.

mod identities;
pub mod rules;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

pub use identities::{
    kv_norm_integral, kv_norm_integral_with, verify_kv_identity, verify_kv_identity_with,
    verify_mellin, verify_nicholson, verify_scaled_mellin, IdentityReport, KvRoute,
};
pub use rules::{gauss_legendre, gauss_legendre_on};

/// Upper limit of integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    Finite(f64),
    /// `+∞`; the integrand must eventually decay at least like `e^{-decay_rate x}`.
    Infinite { decay_rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadConfig {
    /// Relative tolerance on the total.
    pub tol: f64,
    /// Absolute tolerance floor, for integrals that are (close to) zero.
    pub abs_floor: f64,
    pub max_panels: usize,
    /// Exponent `α > -1` when `f(x) ~ C (x - a)^α` near the lower endpoint.
    pub lower_singularity: Option<f64>,
    /// Width of the innermost sliver treated by the power-law estimate,
    /// relative to the integrand's length scale (the interval length, or
    /// `1 / decay_rate` on half-infinite ranges).
    pub singular_cutoff: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            abs_floor: 1e-300,
            max_panels: 4000,
            lower_singularity: None,
            singular_cutoff: 1e-10,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn singular_at_lower(mut self, exponent: f64) -> Self {
        self.lower_singularity = Some(exponent);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels_used: usize,
}

/// `∫_a^b f` to relative tolerance `tol` with default settings.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: Upper, tol: f64) -> Result<QuadResult> {
    integrate_with(f, a, b, &QuadConfig::with_tol(tol))
}

pub fn integrate_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: Upper,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if !(cfg.tol > 0.0) {
        return Err(Error::domain("quadrature tolerance must be positive"));
    }
    if cfg.max_panels < 2 {
        return Err(Error::domain("max_panels must be at least 2"));
    }
    if let Some(alpha) = cfg.lower_singularity {
        if !(alpha > -1.0) {
            return Err(Error::domain(format!(
                "endpoint exponent {alpha} is not integrable"
            )));
        }
    }
    match b {
        Upper::Finite(b) => {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::domain("finite limits must be finite numbers"));
            }
            if a == b {
                return Ok(QuadResult {
                    value: 0.0,
                    error_estimate: 0.0,
                    panels_used: 0,
                });
            }
            if b < a {
                if cfg.lower_singularity.is_some() {
                    return Err(Error::domain(
                        "endpoint singularity requires a < b",
                    ));
                }
                let r = integrate_with(f, b, Upper::Finite(a), cfg)?;
                return Ok(QuadResult {
                    value: -r.value,
                    ..r
                });
            }
            Engine::new(&f, cfg).run(a, b, None, b - a)
        }
        Upper::Infinite { decay_rate } => {
            if !(decay_rate > 0.0 && decay_rate.is_finite()) {
                return Err(Error::domain("decay rate must be positive and finite"));
            }
            if !a.is_finite() {
                return Err(Error::domain("lower limit must be finite"));
            }
            let cut = find_cut(&f, a, decay_rate, cfg);
            Engine::new(&f, cfg).run(a, cut, Some(decay_rate), 1.0 / decay_rate)
        }
    }
}

/// Scan outward until the integrand is negligible against the running mass.
fn find_cut<F: Fn(f64) -> f64>(f: &F, a: f64, rate: f64, cfg: &QuadConfig) -> f64 {
    let h = 0.5 / rate;
    let mut mass = 0.0;
    let mut prev = f64::INFINITY;
    for k in 1..=4000 {
        let x = a + k as f64 * h;
        let fx = f(x).abs();
        mass += h * fx;
        if k >= 4 && fx <= prev && fx / rate <= 1e-3 * cfg.tol * mass {
            return x;
        }
        if k >= 64 && mass == 0.0 {
            return x;
        }
        prev = fx;
    }
    a + 4000.0 * h
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Map {
    Linear,
    /// `x = start - ln(u) / rate`, `u ∈ (0, 1]`.
    Tail { start: f64, rate: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    map: Map,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct Engine<'a, F> {
    f: &'a F,
    cfg: &'a QuadConfig,
}

impl<'a, F: Fn(f64) -> f64> Engine<'a, F> {
    fn new(f: &'a F, cfg: &'a QuadConfig) -> Self {
        Self { f, cfg }
    }

    fn panel(&self, lo: f64, hi: f64, map: Map) -> Panel {
        let (value, error) = match map {
            Map::Linear => rules::gauss_kronrod_15(self.f, lo, hi),
            Map::Tail { start, rate } => {
                let g = |u: f64| {
                    let fx = (self.f)(start - u.ln() / rate);
                    if fx == 0.0 {
                        0.0
                    } else {
                        fx / (rate * u)
                    }
                };
                rules::gauss_kronrod_15(&g, lo, hi)
            }
        };
        Panel {
            lo,
            hi,
            map,
            value,
            error,
        }
    }

    /// Integrate over `[a, b]`, plus the mapped tail `[b, ∞)` when `tail_rate` is set.
    /// `scale` is the natural length of the integrand near `a`.
    fn run(&self, a: f64, b: f64, tail_rate: Option<f64>, scale: f64) -> Result<QuadResult> {
        let mut heap = BinaryHeap::new();
        let mut fixed_value = 0.0;
        let mut fixed_error = 0.0;
        let mut fixed_panels = 0usize;

        let mut start = a;
        if let Some(alpha) = self.cfg.lower_singularity {
            let scale = scale.min(b - a);
            let delta = self.cfg.singular_cutoff * scale;
            let (v, e) = self.power_law_sliver(a, delta, alpha);
            fixed_value += v;
            fixed_error += e;
            fixed_panels += 1;
            start = a + delta;
            // geometric grading toward the singular endpoint
            let stop = a + scale.min(0.5 * (b - a));
            let mut lo = start;
            while lo < stop {
                let hi = (a + 2.0 * (lo - a)).min(stop);
                heap.push(self.panel(lo, hi, Map::Linear));
                lo = hi;
            }
            start = lo;
        }
        if start < b {
            heap.push(self.panel(start, b, Map::Linear));
        }
        if let Some(rate) = tail_rate {
            heap.push(self.panel(0.0, 1.0, Map::Tail { start: b, rate }));
        }

        let mut frozen: Vec<Panel> = Vec::new();
        loop {
            let (value, error) = totals(heap.iter().chain(frozen.iter()));
            let value = value + fixed_value;
            let error = error + fixed_error;
            let target = (self.cfg.tol * value.abs()).max(self.cfg.abs_floor);
            let used = heap.len() + frozen.len() + fixed_panels;
            if error <= target {
                return Ok(QuadResult {
                    value,
                    error_estimate: error,
                    panels_used: used,
                });
            }
            if used + 1 > self.cfg.max_panels {
                return Err(Error::NonConvergence {
                    panels: used,
                    error_estimate: error,
                    tol: target,
                });
            }
            let Some(worst) = heap.pop() else {
                return Err(Error::NonConvergence {
                    panels: used,
                    error_estimate: error,
                    tol: target,
                });
            };
            let mid = 0.5 * (worst.lo + worst.hi);
            let scale = worst.lo.abs().max(worst.hi.abs()).max(f64::MIN_POSITIVE);
            if worst.hi - worst.lo <= 64.0 * f64::EPSILON * scale {
                frozen.push(worst);
                continue;
            }
            heap.push(self.panel(worst.lo, mid, worst.map));
            heap.push(self.panel(mid, worst.hi, worst.map));
        }
    }

    /// `∫_a^{a+δ} f` assuming `f ≈ C (x-a)^α`, with an error estimate from
    /// the locally observed exponent.
    fn power_law_sliver(&self, a: f64, delta: f64, alpha: f64) -> (f64, f64) {
        let f1 = (self.f)(a + delta);
        let f2 = (self.f)(a + 2.0 * delta);
        let value = f1 * delta / (1.0 + alpha);
        let observed = if f1 != 0.0 && f2 != 0.0 && f1.signum() == f2.signum() {
            (f2 / f1).log2()
        } else {
            alpha
        };
        let error = if observed > -1.0 {
            (f1 * delta).abs() * (1.0 / (1.0 + alpha) - 1.0 / (1.0 + observed)).abs()
        } else {
            value.abs()
        };
        (value, error + 4.0 * f64::EPSILON * value.abs())
    }
}

fn totals<'p>(panels: impl Iterator<Item = &'p Panel>) -> (f64, f64) {
    // Kahan summation; thousands of panels of mixed magnitude.
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut err = 0.0;
    for p in panels {
        let y = p.value - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        err += p.error;
    }
    (sum, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inf(rate: f64) -> Upper {
        Upper::Infinite { decay_rate: rate }
    }

    #[test]
    fn exponential_tails() {
        let r = integrate(|z: f64| (-z).exp(), 0.0, inf(1.0), 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-13, "{r:?}");
        let r = integrate(|z: f64| (-2.0 * z).exp(), 0.0, inf(2.0), 1e-12).unwrap();
        assert!((r.value - 0.5).abs() < 1e-13, "{r:?}");
    }

    #[test]
    fn sech_squared_integrates_to_one() {
        let r = integrate(|t: f64| 1.0 / t.cosh().powi(2), 0.0, inf(2.0), 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn finite_interval_and_reversed_limits() {
        let r = integrate(f64::sin, 0.0, Upper::Finite(std::f64::consts::PI), 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        let r = integrate(f64::sin, std::f64::consts::PI, Upper::Finite(0.0), 1e-12).unwrap();
        assert!((r.value + 2.0).abs() < 1e-13);
        let r = integrate(f64::sin, 1.0, Upper::Finite(1.0), 1e-12).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn endpoint_power_singularity() {
        // ∫_0^1 x^{-0.8} dx = 5
        let cfg = QuadConfig::with_tol(1e-11).singular_at_lower(-0.8);
        let r = integrate_with(|x: f64| x.powf(-0.8), 0.0, Upper::Finite(1.0), &cfg).unwrap();
        assert!((r.value - 5.0).abs() < 1e-10, "{r:?}");
        // ∫_0^∞ x^{-0.5} e^{-x} dx = √π
        let cfg = QuadConfig::with_tol(1e-11).singular_at_lower(-0.5);
        let r = integrate_with(|x: f64| (-x).exp() / x.sqrt(), 0.0, inf(1.0), &cfg).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn non_convergence_is_reported() {
        let cfg = QuadConfig {
            max_panels: 4,
            tol: 1e-14,
            ..QuadConfig::default()
        };
        let err = integrate_with(|x: f64| (50.0 * x).sin().abs(), 0.0, Upper::Finite(10.0), &cfg)
            .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn bad_arguments() {
        assert!(integrate(|x: f64| x, 0.0, inf(0.0), 1e-8).is_err());
        assert!(integrate(|x: f64| x, 0.0, Upper::Finite(1.0), 0.0).is_err());
        let cfg = QuadConfig::default().singular_at_lower(-1.0);
        assert!(integrate_with(|x: f64| 1.0 / x, 0.0, Upper::Finite(1.0), &cfg).is_err());
    }
}
