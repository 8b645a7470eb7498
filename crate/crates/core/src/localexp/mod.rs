//! Local flows of skew-symmetric generators and their extension to
//! one-parameter groups, with the finite-dimensional commuting criteria and
//! defect-index probes for discretized `d/dx`.
//!
//! A local flow `φ(τ)` is defined only for `|τ| < ε`. The group is recovered as
//! `U_t = φ(t/n)ⁿ` with `n` the least integer such that `|t/n| < ε'`.

mod indices;
pub mod linalg;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use indices::{cosine_similarity, defect_indices_1d, witness_csv, DefectIndices};
use linalg::{expm, isometry_residual, matrix_power, norm_1, op_norm};

use crate::{Error, Result};

/// Boundary treatment of a discretized `d/dx` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Nodes `x_i = i/(n-1)`, zero values assumed past both ends.
    Interval,
    /// `n` nodes on the circle of length one.
    Periodic,
    /// `½(W D + D W)` with `W = diag(4x(1-x))`: the coefficient vanishes at
    /// both ends, so the continuum flow never reaches them.
    DecayWindow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Dense(DMatrix<f64>),
    Tridiagonal1D { n: usize, boundary: Boundary },
}

impl Generator {
    pub fn dense(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let scale = m.abs().max().max(1.0);
        let skew = (&m + m.transpose()).abs().max();
        if !(skew <= 1e-14 * scale) {
            return Err(Error::domain(format!("generator is not skew-symmetric: ‖A + Aᵀ‖_max = {skew:e}")));
        }
        Ok(Generator::Dense(m))
    }

    pub fn tridiagonal(n: usize, boundary: Boundary) -> Result<Self> {
        if n < 3 {
            return Err(Error::domain(format!("difference generator needs n ≥ 3, got {n}")));
        }
        Ok(Generator::Tridiagonal1D { n, boundary })
    }

    /// `[[0, 1], [-1, 0]]`.
    pub fn rotation_2d() -> Self {
        Generator::Dense(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]))
    }

    /// Two independent planar rotations with rates `a` and `b` on `R⁴`.
    /// Any two of these commute.
    pub fn block_rotations(a: f64, b: f64) -> Self {
        let mut m = DMatrix::<f64>::zeros(4, 4);
        m[(0, 1)] = a;
        m[(1, 0)] = -a;
        m[(2, 3)] = b;
        m[(3, 2)] = -b;
        Generator::Dense(m)
    }

    /// Infinitesimal rotation about coordinate axis `axis ∈ {0, 1, 2}` of `R³`.
    pub fn axis_rotation(axis: usize) -> Result<Self> {
        let (i, j) = match axis {
            0 => (1, 2),
            1 => (2, 0),
            2 => (0, 1),
            _ => return Err(Error::domain(format!("axis must be 0, 1 or 2, got {axis}"))),
        };
        let mut m = DMatrix::<f64>::zeros(3, 3);
        m[(i, j)] = -1.0;
        m[(j, i)] = 1.0;
        Ok(Generator::Dense(m))
    }

    pub fn dim(&self) -> usize {
        match self {
            Generator::Dense(m) => m.nrows(),
            Generator::Tridiagonal1D { n, .. } => *n,
        }
    }

    /// Grid nodes of a difference generator.
    pub fn nodes(&self) -> Option<Vec<f64>> {
        match *self {
            Generator::Dense(_) => None,
            Generator::Tridiagonal1D { n, boundary } => Some(grid_nodes(n, boundary)),
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        match *self {
            Generator::Dense(ref m) => m.clone(),
            Generator::Tridiagonal1D { n, boundary } => difference_matrix(n, boundary),
        }
    }
}

fn grid_nodes(n: usize, boundary: Boundary) -> Vec<f64> {
    match boundary {
        Boundary::Periodic => (0..n).map(|i| i as f64 / n as f64).collect(),
        Boundary::Interval | Boundary::DecayWindow => {
            (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
        }
    }
}

fn difference_matrix(n: usize, boundary: Boundary) -> DMatrix<f64> {
    let mut d = DMatrix::<f64>::zeros(n, n);
    let h = match boundary {
        Boundary::Periodic => 1.0 / n as f64,
        _ => 1.0 / (n - 1) as f64,
    };
    let c = 0.5 / h;
    for i in 0..n - 1 {
        d[(i, i + 1)] = c;
        d[(i + 1, i)] = -c;
    }
    match boundary {
        Boundary::Interval => d,
        Boundary::Periodic => {
            d[(n - 1, 0)] += c;
            d[(0, n - 1)] -= c;
            d
        }
        Boundary::DecayWindow => {
            let w = DMatrix::from_diagonal(&DVector::from_iterator(
                n,
                grid_nodes(n, boundary).into_iter().map(|x| 4.0 * x * (1.0 - x)),
            ));
            (&w * &d + &d * &w) * 0.5
        }
    }
}

/// `count` random skew-symmetric generators of dimensions cycling through
/// `2..=10`, all drawn from one generator seeded with `seed`.
pub fn random_suite(seed: u64, count: usize) -> Vec<Generator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| Generator::Dense(linalg::random_skew(2 + i % 9, &mut rng)))
        .collect()
}

/// Truncated Taylor series of `exp(τH)`, valid for `|τ| < ε`.
#[derive(Debug, Clone)]
pub struct LocalFlow {
    generator: Generator,
    h: DMatrix<f64>,
    epsilon: f64,
    epsilon_prime: f64,
}

impl LocalFlow {
    /// `ε = 1/‖H‖₁` and `ε' = ε/2`.
    pub fn new(generator: Generator) -> Result<Self> {
        let h = generator.matrix();
        let norm = norm_1(&h);
        let epsilon = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        Self::with_epsilon(generator, epsilon, 0.5 * epsilon)
    }

    pub fn with_epsilon(generator: Generator, epsilon: f64, epsilon_prime: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) || !(epsilon_prime > 0.0 && epsilon_prime < epsilon) {
            return Err(Error::domain(format!(
                "local flow needs 0 < ε' < ε, got ε = {epsilon}, ε' = {epsilon_prime}"
            )));
        }
        let h = generator.matrix();
        Ok(Self {
            generator,
            h,
            epsilon,
            epsilon_prime,
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn epsilon_prime(&self) -> f64 {
        self.epsilon_prime
    }

    /// `φ(τ)` as a matrix.
    pub fn step_matrix(&self, tau: f64) -> Result<DMatrix<f64>> {
        if !(tau.abs() < self.epsilon) {
            return Err(Error::domain(format!(
                "local flow is defined for |τ| < {}, got {tau}",
                self.epsilon
            )));
        }
        let n = self.h.nrows();
        let mut sum = DMatrix::<f64>::identity(n, n);
        if tau == 0.0 {
            return Ok(sum);
        }
        let a = &self.h * tau;
        let mut term = sum.clone();
        for k in 1..200 {
            term = &term * &a / k as f64;
            sum += &term;
            if norm_1(&term) <= 1e-18 * norm_1(&sum) {
                break;
            }
        }
        Ok(sum)
    }

    pub fn apply(&self, tau: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.h.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.h.nrows(),
                found: v.len(),
            });
        }
        Ok(self.step_matrix(tau)? * v)
    }

    /// `‖(φ(δ)v - φ(-δ)v)/(2δ) - Hv‖`.
    pub fn derivative_residual(&self, v: &DVector<f64>, delta: f64) -> Result<f64> {
        let fwd = self.apply(delta, v)?;
        let bwd = self.apply(-delta, v)?;
        Ok(((fwd - bwd) / (2.0 * delta) - &self.h * v).norm())
    }

    /// Least `n` with `|t|/n < ε'`.
    pub fn minimal_steps(&self, t: f64) -> u64 {
        if t == 0.0 {
            return 1;
        }
        (t.abs() / self.epsilon_prime).floor() as u64 + 1
    }
}

/// `φ(t/n)ⁿ` for a given subdivision.
pub fn exponentiate_with_steps(flow: &LocalFlow, t: f64, n: u64) -> Result<DMatrix<f64>> {
    if n == 0 || !t.is_finite() {
        return Err(Error::domain("subdivision needs n ≥ 1 and finite t"));
    }
    let tau = t / n as f64;
    if !(tau.abs() < flow.epsilon_prime) {
        return Err(Error::domain(format!(
            "step |t/n| = {} is not below ε' = {}",
            tau.abs(),
            flow.epsilon_prime
        )));
    }
    if t == 0.0 {
        let d = flow.h.nrows();
        return Ok(DMatrix::identity(d, d));
    }
    Ok(matrix_power(&flow.step_matrix(tau)?, n))
}

#[derive(Debug, Clone)]
pub struct Exponentiated {
    pub u: DMatrix<f64>,
    pub steps: u64,
    /// `‖UᵀU - I‖₂`.
    pub isometry: f64,
    /// `‖U - expm(tH)‖₂` against the Padé oracle.
    pub oracle: f64,
}

/// `U_t = φ(t/n)ⁿ` with the least legal `n`, checked against isometry and
/// the independent matrix exponential.
pub fn exponentiate_local(flow: &LocalFlow, t: f64, tol: f64) -> Result<Exponentiated> {
    let steps = flow.minimal_steps(t);
    let u = exponentiate_with_steps(flow, t, steps)?;
    let isometry = isometry_residual(&u);
    let oracle = op_norm(&(&u - expm(&(flow.h() * t))));
    if !(isometry <= tol && oracle <= tol) {
        return Err(Error::Tolerance { isometry, oracle, tol });
    }
    Ok(Exponentiated {
        u,
        steps,
        isometry,
        oracle,
    })
}

fn group_element(flow: &LocalFlow, t: f64) -> Result<DMatrix<f64>> {
    exponentiate_with_steps(flow, t, flow.minimal_steps(t))
}

/// `‖U_{s+t} - U_s U_t‖₂`.
pub fn verify_group_law(flow: &LocalFlow, s: f64, t: f64) -> Result<f64> {
    let lhs = group_element(flow, s + t)?;
    let rhs = group_element(flow, s)? * group_element(flow, t)?;
    Ok(op_norm(&(lhs - rhs)))
}

/// `‖U_t(n) - U_t(2n)‖₂` for the least legal `n`.
pub fn subdivision_residual(flow: &LocalFlow, t: f64) -> Result<f64> {
    let n = flow.minimal_steps(t);
    let a = exponentiate_with_steps(flow, t, n)?;
    let b = exponentiate_with_steps(flow, t, 2 * n)?;
    Ok(op_norm(&(a - b)))
}

/// Spectral subspaces `𝒟_ε = span{v : Hv = iμv, |μ| < 1/ε}`, built from the
/// eigenvectors of the symmetric matrix `-H²`.
#[derive(Debug, Clone)]
pub struct NestedDomains {
    frequencies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl NestedDomains {
    pub fn new(generator: &Generator) -> Self {
        let h = generator.matrix();
        let mut l = -(&h * &h);
        l = (&l + l.transpose()) * 0.5;
        let eig = SymmetricEigen::new(l);
        Self {
            frequencies: eig.eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// Orthonormal basis of `𝒟_ε` as columns.
    pub fn basis(&self, epsilon: f64) -> DMatrix<f64> {
        let cols: Vec<_> = self
            .frequencies
            .iter()
            .enumerate()
            .filter(|(_, f)| **f * epsilon < 1.0)
            .map(|(i, _)| self.vectors.column(i).into_owned())
            .collect();
        if cols.is_empty() {
            DMatrix::zeros(self.vectors.nrows(), 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }

    pub fn dim(&self, epsilon: f64) -> usize {
        self.frequencies.iter().filter(|f| **f * epsilon < 1.0).count()
    }
}

/// Largest `|‖φ(t)v‖ - ‖v‖|` over random `v ∈ 𝒟_ε` and `|t| < ε`, for the
/// flow's ε and three larger cutoffs.
pub fn verify_isometry(flow: &LocalFlow, domains: &NestedDomains, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for level in 0..4 {
        let eps = flow.epsilon * f64::powi(2.0, level);
        let basis = domains.basis(eps);
        if basis.ncols() == 0 {
            continue;
        }
        for _ in 0..samples {
            let coeffs = DVector::from_fn(basis.ncols(), |_, _| rng.gen_range(-1.0..1.0));
            let v = &basis * coeffs;
            let t = rng.gen_range(-1.0..1.0) * flow.epsilon * 0.999;
            let w = flow.apply(t, &v)?;
            worst = worst.max((w.norm() - v.norm()).abs());
        }
    }
    Ok(worst)
}

/// `‖[A, B]‖₂`.
pub fn commutator_norm(a: &Generator, b: &Generator) -> Result<f64> {
    let (x, y) = same_dim(a, b)?;
    Ok(op_norm(&(&x * &y - &y * &x)))
}

/// `‖e^{sA} e^{tB} - e^{tB} e^{sA}‖₂` with the Padé exponential.
pub fn group_commutator_norm(a: &Generator, b: &Generator, s: f64, t: f64) -> Result<f64> {
    let (x, y) = same_dim(a, b)?;
    let ea = expm(&(x * s));
    let eb = expm(&(y * t));
    Ok(op_norm(&(&ea * &eb - &eb * &ea)))
}

fn same_dim(a: &Generator, b: &Generator) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok((a.matrix(), b.matrix()))
}

/// `‖[(λ₁ - H₁)⁻¹, (λ₂ - H₂)⁻¹]‖₂` for `λ_j` off the imaginary axis.
pub fn resolvent_commutation(h1: &Generator, h2: &Generator, lambda1: Complex64, lambda2: Complex64) -> Result<f64> {
    for l in [lambda1, lambda2] {
        if !(l.re != 0.0 && l.re.is_finite() && l.im.is_finite()) {
            return Err(Error::domain(format!("resolvent parameter must lie off the imaginary axis, got {l}")));
        }
    }
    let (a, b) = same_dim(h1, h2)?;
    let r1 = resolvent(&a, lambda1)?;
    let r2 = resolvent(&b, lambda2)?;
    Ok(op_norm(&(&r1 * &r2 - &r2 * &r1)))
}

fn resolvent(h: &DMatrix<f64>, lambda: Complex64) -> Result<DMatrix<Complex64>> {
    let n = h.nrows();
    let m = DMatrix::<Complex64>::identity(n, n) * lambda - h.map(|x| Complex64::new(x, 0.0));
    m.lu()
        .try_inverse()
        .ok_or_else(|| Error::domain(format!("λ = {lambda} lies in the spectrum")))
}

/// `L = Σ H_j²` on a space of dimension `dim`.
pub fn nelson_sum_of_squares(generators: &[Generator], dim: usize) -> Result<DMatrix<f64>> {
    let mut l = DMatrix::<f64>::zeros(dim, dim);
    for g in generators {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g.dim(),
            });
        }
        let m = g.matrix();
        l += &m * &m;
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::linalg::random_skew;
    use super::*;
    use std::f64::consts::PI;

    fn rot_flow() -> LocalFlow {
        LocalFlow::new(Generator::rotation_2d()).unwrap()
    }

    fn random_flow(dim: usize, seed: u64) -> LocalFlow {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LocalFlow::new(Generator::dense(random_skew(dim, &mut rng)).unwrap()).unwrap()
    }

    #[test]
    fn rotation_by_pi_is_minus_identity() {
        let e = exponentiate_local(&rot_flow(), PI, 1e-12).unwrap();
        assert!((e.u + DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-13);
        assert!(e.steps >= 7);
    }

    #[test]
    fn random_suite_is_seeded() {
        let a = random_suite(42, 20);
        let dims: Vec<usize> = a.iter().map(Generator::dim).collect();
        assert_eq!(dims[..10], [2, 3, 4, 5, 6, 7, 8, 9, 10, 2]);
        assert_eq!(a, random_suite(42, 20));
        assert_ne!(a, random_suite(43, 20));
        assert!(Generator::axis_rotation(3).is_err());
    }

    #[test]
    fn zero_time_is_identity() {
        let e = exponentiate_local(&random_flow(5, 3), 0.0, 1e-12).unwrap();
        assert_eq!(e.u, DMatrix::<f64>::identity(5, 5));
    }

    #[test]
    fn random_matrix_matches_oracle() {
        let f = random_flow(6, 11);
        let e = exponentiate_local(&f, 2.7, 1e-10).unwrap();
        assert!(e.oracle <= 1e-10 && e.isometry <= 1e-10);
        assert!(f.minimal_steps(2.7) as f64 * f.epsilon_prime() > 2.7);
    }

    #[test]
    fn tolerance_failure_reports_residuals() {
        match exponentiate_local(&random_flow(4, 2), 1.0, 1e-30) {
            Err(Error::Tolerance { isometry, oracle, tol }) => {
                assert_eq!(tol, 1e-30);
                assert!(isometry < 1e-12 && oracle < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn group_law_cases() {
        assert!(verify_group_law(&rot_flow(), 0.3, 0.4).unwrap() <= 1e-12);
        assert!(verify_group_law(&rot_flow(), 1.7, -1.7).unwrap() <= 1e-10);
        assert!(verify_group_law(&random_flow(8, 5), 1.1, -2.3).unwrap() <= 1e-10);
    }

    #[test]
    fn local_flow_properties() {
        let f = random_flow(5, 9);
        let v = DVector::from_fn(5, |i, _| i as f64 - 2.0);
        assert_eq!(f.apply(0.0, &v).unwrap(), v);
        assert!(f.derivative_residual(&v, 1e-4).unwrap() < 1e-6 * (f.h() * &v).norm());
        assert!(f.step_matrix(f.epsilon()).is_err());
        assert!(exponentiate_with_steps(&f, 1.0, 1).is_err());
        assert!(LocalFlow::with_epsilon(Generator::rotation_2d(), 0.5, 0.5).is_err());
    }

    #[test]
    fn nested_domains_shrink() {
        let g = Generator::dense(random_skew(7, &mut ChaCha8Rng::seed_from_u64(4))).unwrap();
        let d = NestedDomains::new(&g);
        let dims: Vec<usize> = [1e-3, 0.1, 0.3, 1.0, 10.0].iter().map(|&e| d.dim(e)).collect();
        assert_eq!(dims[0], 7);
        assert!(dims.windows(2).all(|w| w[0] >= w[1]), "{dims:?}");
        let b = d.basis(0.3);
        assert!((b.transpose() * &b - DMatrix::<f64>::identity(b.ncols(), b.ncols())).abs().max() < 1e-12);
    }

    #[test]
    fn isometry_on_domains() {
        let f = random_flow(6, 21);
        let d = NestedDomains::new(f.generator());
        assert!(verify_isometry(&f, &d, 100, 1).unwrap() <= 1e-12);
        let r = rot_flow();
        assert!(verify_isometry(&r, &NestedDomains::new(r.generator()), 100, 2).unwrap() <= 1e-12);
        // an eigenvector of the cutoff subspace
        let v = d.basis(f.epsilon()).column(0).into_owned();
        let w = f.apply(0.5 * f.epsilon(), &v).unwrap();
        assert!((w.norm() - v.norm()).abs() <= 1e-12);
        let zero = DVector::<f64>::zeros(6);
        assert_eq!(f.apply(0.1 * f.epsilon(), &zero).unwrap().norm(), 0.0);
    }

    #[test]
    fn difference_generators_are_skew() {
        for b in [Boundary::Interval, Boundary::Periodic, Boundary::DecayWindow] {
            let g = Generator::tridiagonal(20, b).unwrap();
            let m = g.matrix();
            assert_eq!((&m + m.transpose()).abs().max(), 0.0, "{b:?}");
            let f = LocalFlow::new(g).unwrap();
            assert!(exponentiate_local(&f, 0.05, 1e-10).is_ok());
        }
    }

    fn block_rotations(a: f64, b: f64) -> Generator {
        Generator::block_rotations(a, b)
    }

    fn axis_generator(axis: usize) -> Generator {
        Generator::axis_rotation(axis).unwrap()
    }

    #[test]
    fn resolvent_cases() {
        let l = Complex64::new(1.0, 0.5);
        let (a, b) = (block_rotations(1.0, 2.0), block_rotations(3.0, -1.0));
        assert!(resolvent_commutation(&a, &b, l, Complex64::new(-0.7, 2.0)).unwrap() <= 1e-12);
        let (x, y) = (axis_generator(0), axis_generator(1));
        assert!(resolvent_commutation(&x, &y, l, l).unwrap() > 1e-3);
        assert!(resolvent_commutation(&x, &y, Complex64::new(0.0, 1.0), l).is_err());
        assert!(resolvent_commutation(&x, &a, l, l).is_err());
    }

    #[test]
    fn commuting_criteria_agree() {
        let pairs = [
            (block_rotations(1.0, 2.0), block_rotations(3.0, -1.0)),
            (axis_generator(0), axis_generator(1)),
            (axis_generator(2), axis_generator(2)),
        ];
        for (a, b) in &pairs {
            let c = commutator_norm(a, b).unwrap();
            let g = group_commutator_norm(a, b, 0.7, 1.3).unwrap();
            let r = resolvent_commutation(a, b, Complex64::new(1.0, 0.0), Complex64::new(2.0, 1.0)).unwrap();
            let commuting = c <= 1e-12;
            assert_eq!(g <= 1e-12, commuting);
            assert_eq!(r <= 1e-12, commuting);
        }
    }

    #[test]
    fn nelson_cases() {
        let l = nelson_sum_of_squares(&[Generator::rotation_2d()], 2).unwrap();
        assert_eq!(l, -DMatrix::<f64>::identity(2, 2));
        assert_eq!(nelson_sum_of_squares(&[], 3).unwrap(), DMatrix::<f64>::zeros(3, 3));
        assert!(nelson_sum_of_squares(&[Generator::rotation_2d()], 3).is_err());
        // commuting pair: L's eigenvectors diagonalize both generators' squares
        let (a, b) = (block_rotations(1.0, 2.0), block_rotations(3.0, -1.0));
        let l = nelson_sum_of_squares(&[a.clone(), b.clone()], 4).unwrap();
        assert!((&l - l.transpose()).abs().max() <= 1e-12);
        let eig = SymmetricEigen::new(l.clone());
        assert!(eig.eigenvalues.max() <= 1e-12);
        let v = &eig.eigenvectors;
        for g in [a, b] {
            let m = g.matrix();
            let d = v.transpose() * (&m * &m) * v;
            let off = d.clone() - DMatrix::from_diagonal(&d.diagonal());
            assert!(off.abs().max() < 1e-12);
        }
    }
}
