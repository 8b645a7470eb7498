//! Angular separation of the Laplacian on the covers, the resulting defect
//! spaces, endpoint classification of the radial operators and the Parseval
//! form of the defect norm on the infinite cover.
//!
//! On the N-fold cover the angular modes are `e^{ikθ/N}` and the radial
//! equation for the defect space is
//!
//! ```text
//! (1/r)(r ψ')' - (ν²/r²) ψ = ψ,   ν = |k| / N,
//! ```
//!
//! solved in L² near infinity by `K_ν`. On the infinite cover `k/N` becomes a
//! continuous `ξ ∈ (-1, 1)`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quad::{gauss_legendre_on, kv_norm_integral};
use crate::specfun::{bessel_k, pi_nu_over_sin, EvalConfig, Order};
use crate::{Error, Result};

/// Smallest `r_min` accepted by the residual checks.
pub const RESIDUAL_R_MIN: f64 = 0.05;

/// Gap kept between the ξ-grid and the endpoints `±1`.
pub const XI_MARGIN: f64 = 1e-3;

fn residual_cfg() -> EvalConfig {
    EvalConfig {
        rel_tol: 1e-14,
        ..EvalConfig::default()
    }
}

/// Order of an angular mode, normalized to `ν ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeOrder(f64);

impl ModeOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::domain(format!("mode order must be finite, got {nu}")));
        }
        Ok(Self(nu.abs()))
    }

    pub fn nu(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngularSign {
    Zero,
    Plus,
    Minus,
}

/// `K_ν(r) e^{±iνθ}` on the N-fold cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectBasisElement {
    pub n: u32,
    /// Signed angular index; the angular factor is `e^{ikθ/N}`.
    pub k: i64,
    pub nu: ModeOrder,
    pub angular_sign: AngularSign,
}

impl DefectBasisElement {
    pub fn radial(&self, r: f64) -> Result<f64> {
        Ok(bessel_k(Order::new(self.nu.nu())?, r, &EvalConfig::default())?.value)
    }

    pub fn value(&self, r: f64, theta: f64) -> Result<Complex64> {
        let phase = self.k as f64 * theta / self.n as f64;
        Ok(Complex64::from_polar(self.radial(r)?, phase))
    }
}

/// Basis of the L² solutions of `Δψ = ψ` on the N-fold cover: one radial mode
/// for `k = 0` and a `±` pair for each `k = 1, …, N-1`.
pub fn defect_basis_finite(n: u32) -> Result<Vec<DefectBasisElement>> {
    if n == 0 {
        return Err(Error::domain("a finite cover needs N ≥ 1"));
    }
    let mut out = Vec::with_capacity(2 * n as usize - 1);
    for k in 0..n as i64 {
        let nu = ModeOrder::new(k as f64 / n as f64)?;
        if lp_lc_classify(nu.nu())? != Endpoint::LimitCircle {
            continue;
        }
        if k == 0 {
            out.push(DefectBasisElement { n, k, nu, angular_sign: AngularSign::Zero });
        } else {
            out.push(DefectBasisElement { n, k, nu, angular_sign: AngularSign::Plus });
            out.push(DefectBasisElement { n, k: -k, nu, angular_sign: AngularSign::Minus });
        }
    }
    Ok(out)
}

/// Behavior of the radial operator at `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    LimitCircle,
    LimitPoint,
}

/// Nodes per unit interval when integrating the second solution.
const LPLC_NODES: usize = 16;
/// Unit intervals in `s = -ln r` skipped before the ratio is read off.
const LPLC_DEPTH: f64 = 64.0;

/// Classify `r = 0` for the order-ν radial operator by whether the second
/// Frobenius solution `r^{-ν}` (`ln r` when `ν = 0`) is square integrable
/// against `r dr` near 0.
///
/// In `s = -ln r` the mass of the second solution on `[s, s+1]` is
/// `I(s) = ∫_s^{s+1} e^{φ(σ)} dσ`. The classification is read from the
/// ratio `I(S+1)/I(S)` deep in the tail: below one means the masses sum.
pub fn lp_lc_classify(nu: f64) -> Result<Endpoint> {
    let log_ratio = lplc_log_ratio(nu)?;
    Ok(if log_ratio < 0.0 {
        Endpoint::LimitCircle
    } else {
        Endpoint::LimitPoint
    })
}

/// `ln(I(S+1) / I(S))` for the second solution, see [`lp_lc_classify`].
pub fn lplc_log_ratio(nu: f64) -> Result<f64> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::domain(format!("classification needs finite ν ≥ 0, got {nu}")));
    }
    // φ(σ) = ln(r² |y₂|²) with r = e^{-σ}: -2σ + 2νσ, plus 2 ln σ at ν = 0.
    // Written relative to φ(S) so the exponential stays near one.
    let rel = |sigma: f64, base: f64| {
        let mut v = 2.0 * (nu - 1.0) * (sigma - base);
        if nu == 0.0 {
            v += 2.0 * (sigma / base).ln();
        }
        v
    };
    let mass = |base: f64| {
        let (x, w) = gauss_legendre_on(LPLC_NODES, base, base + 1.0);
        x.iter().zip(&w).map(|(s, w)| w * rel(*s, base).exp()).sum::<f64>()
    };
    let s0 = LPLC_DEPTH;
    let s1 = s0 + 1.0;
    // φ(s1) - φ(s0), exactly as the difference of the closed forms
    let mut shift = 2.0 * (nu - 1.0);
    if nu == 0.0 {
        shift += 2.0 * (s1 / s0).ln();
    }
    Ok(shift + mass(s1).ln() - mass(s0).ln())
}

/// Number of independent L² solutions of `Δψ = ψ` on the N-fold cover,
/// counted mode by mode with angular multiplicity.
pub fn defect_dimension(n: u32) -> Result<usize> {
    if n == 0 {
        return Err(Error::domain("a finite cover needs N ≥ 1"));
    }
    let mut count = 0;
    // every order from |k| = 2N on is far inside the limit-point range
    for k in 0..=(2 * n as i64) {
        if lp_lc_classify(k as f64 / n as f64)? == Endpoint::LimitCircle {
            count += if k == 0 { 1 } else { 2 };
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Uniform,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, n: usize, spacing: Spacing) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::domain(format!("radial grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if n < 16 {
            return Err(Error::domain(format!("radial grid needs at least 16 points, got {n}")));
        }
        Ok(Self { r_min, r_max, n, spacing })
    }

    /// Uniform grid with step as close to `h` as the interval allows.
    pub fn uniform_step(r_min: f64, r_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::domain("grid step must be positive"));
        }
        let n = ((r_max - r_min) / h).round() as usize + 1;
        Self::new(r_min, r_max, n, Spacing::Uniform)
    }

    /// Step in `r` (uniform) or in `ln r` (logarithmic).
    pub fn step(&self) -> f64 {
        match self.spacing {
            Spacing::Uniform => (self.r_max - self.r_min) / (self.n - 1) as f64,
            Spacing::Logarithmic => (self.r_max / self.r_min).ln() / (self.n - 1) as f64,
        }
    }

    /// Grid point `i`; indices `-1` and `n` are the ghost points just outside.
    pub fn point(&self, i: isize) -> f64 {
        let h = self.step();
        match self.spacing {
            Spacing::Uniform => self.r_min + h * i as f64,
            Spacing::Logarithmic => self.r_min * (h * i as f64).exp(),
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n as isize).map(|i| self.point(i)).collect()
    }

    /// The same interval with the step halved.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n - 1,
            ..*self
        }
    }
}

/// Which form of the radial equation a residual is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    /// `(1/r)(r ψ')' - (ν²/r²) ψ = ψ` for `ψ = K_ν`.
    Radial,
    /// `u'' - ((ν² - 1/4)/r²) u = u` for `u = r^{1/2} K_ν`.
    Weighted,
}

/// Largest relative residual of the discretized mode equation at the grid
/// points, each normalized by `|u|(1 + 1/r²)`. The stencil reaches one ghost
/// point beyond each end.
pub fn mode_residual(nu: f64, grid: &RadialGrid, gauge: Gauge) -> Result<f64> {
    Ok(mode_residual_profile(nu, grid, gauge)?
        .into_iter()
        .map(|(_, e)| e)
        .fold(0.0, f64::max))
}

/// Per-point relative residuals `(r, e(r))`.
pub fn mode_residual_profile(nu: f64, grid: &RadialGrid, gauge: Gauge) -> Result<Vec<(f64, f64)>> {
    if !(0.0..1.0).contains(&nu) {
        return Err(Error::domain(format!("defect modes have 0 ≤ ν < 1, got {nu}")));
    }
    if grid.r_min < RESIDUAL_R_MIN {
        return Err(Error::domain(format!(
            "residual grids start at r ≥ {RESIDUAL_R_MIN}, got {}",
            grid.r_min
        )));
    }
    let order = Order::new(nu)?;
    let cfg = residual_cfg();
    let h = grid.step();
    let n = grid.n as isize;
    let rs: Vec<f64> = (-1..=n).map(|i| grid.point(i)).collect();
    let u: Vec<f64> = rs
        .iter()
        .map(|&r| {
            let k = bessel_k(order, r, &cfg)?.value;
            Ok(match gauge {
                Gauge::Radial => k,
                Gauge::Weighted => r.sqrt() * k,
            })
        })
        .collect::<Result<_>>()?;
    let nu2 = nu * nu;
    let mut out = Vec::with_capacity(grid.n);
    for i in 1..rs.len() - 1 {
        let (r, um, u0, up) = (rs[i], u[i - 1], u[i], u[i + 1]);
        let operator = match (gauge, grid.spacing) {
            (Gauge::Radial, Spacing::Uniform) => {
                let flux_up = (r + 0.5 * h) * (up - u0);
                let flux_dn = (r - 0.5 * h) * (u0 - um);
                (flux_up - flux_dn) / (r * h * h) - nu2 / (r * r) * u0
            }
            (Gauge::Radial, Spacing::Logarithmic) => {
                // (1/r)(r ψ')' = ψ_ss / r² in s = ln r
                ((up - 2.0 * u0 + um) / (h * h) - nu2 * u0) / (r * r)
            }
            (Gauge::Weighted, Spacing::Uniform) => {
                (up - 2.0 * u0 + um) / (h * h) - (nu2 - 0.25) / (r * r) * u0
            }
            (Gauge::Weighted, Spacing::Logarithmic) => {
                let uss = (up - 2.0 * u0 + um) / (h * h);
                let us = (up - um) / (2.0 * h);
                ((uss - us) - (nu2 - 0.25) * u0) / (r * r)
            }
        };
        let scale = u0.abs() * (1.0 + 1.0 / (r * r));
        out.push((r, (operator - u0).abs() / scale));
    }
    Ok(out)
}

/// Residual of `K_ν` in the radial equation.
pub fn radial_defect_residual(nu: f64, grid: &RadialGrid) -> Result<f64> {
    mode_residual(nu, grid, Gauge::Radial)
}

/// Residual of `r^{1/2} K_ν` in the weighted equation.
pub fn weight_transform_residual(nu: f64, grid: &RadialGrid) -> Result<f64> {
    mode_residual(nu, grid, Gauge::Weighted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub coarse: f64,
    pub fine: f64,
    pub ratio: f64,
}

/// Residuals on `grid` and on the grid with half the step.
pub fn residual_convergence(nu: f64, grid: &RadialGrid, gauge: Gauge) -> Result<Convergence> {
    let coarse = mode_residual(nu, grid, gauge)?;
    let fine = mode_residual(nu, &grid.refined(), gauge)?;
    Ok(Convergence {
        coarse,
        fine,
        ratio: coarse / fine,
    })
}

/// `r,K_nu` rows for plotting a radial profile.
pub fn radial_profile_csv(nu: f64, grid: &RadialGrid) -> Result<String> {
    let order = Order::new(nu)?;
    let cfg = EvalConfig::default();
    let mut s = String::from("r,K_nu\n");
    for r in grid.points() {
        let k = bessel_k(order, r, &cfg)?.value;
        let _ = writeln!(s, "{r:.17e},{k:.17e}");
    }
    Ok(s)
}

/// A profile `g(ξ)` on `(-1, 1)` sampled at Gauss–Legendre nodes covering its
/// support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GFunction {
    pub support: (f64, f64),
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl GFunction {
    /// Sample `g` on `n` nodes over `support`, which is clipped to
    /// `(-1 + δ, 1 - δ)`. `g` must vanish outside `support`.
    pub fn from_fn(g: impl Fn(f64) -> Complex64, support: (f64, f64), n: usize) -> Result<Self> {
        let (a, b) = support;
        if !(a < b) || !(a > -1.0 && b < 1.0) {
            return Err(Error::domain(format!(
                "profile support must be an interval inside (-1, 1), got ({a}, {b})"
            )));
        }
        if n == 0 {
            return Err(Error::domain("profile needs at least one node"));
        }
        let a = a.max(-1.0 + XI_MARGIN);
        let b = b.min(1.0 - XI_MARGIN);
        let (nodes, weights) = gauss_legendre_on(n, a, b);
        let values = nodes.iter().map(|&x| g(x)).collect::<Vec<_>>();
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::domain("profile takes a non-finite value"));
        }
        Ok(Self {
            support: (a, b),
            nodes,
            weights,
            values,
        })
    }

    /// The smooth bump `exp(-1 / (1 - ((ξ - c)/w)²))` on `(c - w, c + w)`.
    pub fn bump(center: f64, half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::domain("bump half-width must be positive"));
        }
        Self::from_fn(
            |x| {
                let s = (x - center) / half_width;
                let v = if s.abs() < 1.0 { (-1.0 / (1.0 - s * s)).exp() } else { 0.0 };
                Complex64::new(v, 0.0)
            },
            (center - half_width, center + half_width),
            n,
        )
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::from_fn(|_| Complex64::new(0.0, 0.0), (-0.5, 0.5), n)
    }

    fn samples(&self) -> impl Iterator<Item = (f64, f64, Complex64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.values)
            .map(|((x, w), v)| (*x, *w, *v))
    }

    /// `∫ |g|² dξ`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.samples().map(|(_, w, v)| w * v.norm_sqr()).sum()
    }
}

/// `ψ(r, θ) = (1/2π) ∫ g(ξ) K_ξ(r) e^{iξθ} dξ` at each `(r, θ)`.
pub fn synthesize_defect(g: &GFunction, eval_points: &[(f64, f64)]) -> Result<Vec<Complex64>> {
    let cfg = EvalConfig::default();
    eval_points
        .iter()
        .map(|&(r, theta)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (xi, w, v) in g.samples() {
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let k = bessel_k(Order::new(xi)?, r, &cfg)?.value;
                acc += v * Complex64::from_polar(w * k, xi * theta);
            }
            Ok(acc / TAU)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParsevalReport {
    /// `∫ |g(ξ)|² (∫_0^∞ K_ξ(r)² r dr) dξ` with the inner integral by quadrature.
    pub direct: f64,
    /// `∫ ½ (πξ / sin πξ) |g(ξ)|² dξ`.
    pub weighted: f64,
    pub rel_err: f64,
}

/// Tolerance for the inner radial integrals of the direct route.
const PARSEVAL_INNER_TOL: f64 = 1e-10;

/// The defect norm of the profile `g` by both routes.
pub fn defect_norm_parseval(g: &GFunction) -> Result<ParsevalReport> {
    let mut direct = 0.0;
    let mut weighted = 0.0;
    // K depends on |ξ| only; symmetric node sets reuse each radial integral
    let mut cache: Vec<(f64, f64)> = Vec::new();
    for (xi, w, v) in g.samples() {
        let m = w * v.norm_sqr();
        if m == 0.0 {
            continue;
        }
        let a = xi.abs();
        let inner = match cache.iter().find(|(x, _)| *x == a) {
            Some((_, q)) => *q,
            None => {
                let q = kv_norm_integral(a, PARSEVAL_INNER_TOL)?;
                cache.push((a, q));
                q
            }
        };
        direct += m * inner;
        weighted += m * 0.5 * pi_nu_over_sin(xi);
    }
    let rel_err = if weighted == 0.0 && direct == 0.0 {
        0.0
    } else {
        (direct - weighted).abs() / weighted.abs()
    };
    Ok(ParsevalReport {
        direct,
        weighted,
        rel_err,
    })
}

/// The admissibility weight `½ πξ / sin πξ`.
pub fn admissibility_weight(xi: f64) -> f64 {
    0.5 * pi_nu_over_sin(xi)
}
