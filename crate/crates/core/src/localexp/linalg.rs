//! Dense helpers: the matrix exponential oracle, operator norms and random
//! skew-symmetric test matrices.

use nalgebra::{ComplexField, DMatrix};
use rand::Rng;

/// Padé(13) numerator coefficients.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which Padé(13) is accurate to double precision.
const THETA13: f64 = 5.371_920_351_148_152;

/// `exp(A)` by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = norm_1(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Maximum absolute column sum.
pub fn norm_1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Spectral norm (largest singular value).
pub fn op_norm<T: ComplexField>(a: &DMatrix<T>) -> T::RealField {
    let sv = a.clone().svd(false, false).singular_values;
    sv.iter()
        .cloned()
        .fold(nalgebra::zero::<T::RealField>(), |m, x| if x > m { x } else { m })
}

/// `‖AᵀA - I‖₂`.
pub fn isometry_residual(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    op_norm(&(a.transpose() * a - DMatrix::<f64>::identity(n, n)))
}

/// Random skew-symmetric matrix with entries above the diagonal uniform in
/// `[-1, 1]`.
pub fn random_skew<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in i + 1..dim {
            let v = rng.gen_range(-1.0..=1.0);
            m[(i, j)] = v;
            m[(j, i)] = -v;
        }
    }
    m
}

/// `Aⁿ` by repeated squaring.
pub fn matrix_power(a: &DMatrix<f64>, mut n: u64) -> DMatrix<f64> {
    let mut result = DMatrix::<f64>::identity(a.nrows(), a.ncols());
    let mut base = a.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}
