//! Defect indices of discretized `d/dx` on a compact-support domain.
//!
//! The index `n_±` is the codimension of the range of `(H ± I)` restricted to
//! grid functions that vanish on the outer `m` nodes of each end. On the grid
//! that complement also holds unit vectors at nodes no domain function
//! reaches, and the odd-even mode of the central stencil. Neither survives
//! refinement, so the first are split off and of the rest only directions
//! resolved by the grid are counted: those whose unscaled forward
//! differences are small.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use super::{grid_nodes, Boundary, Generator};
use crate::{Error, Result};

/// Relative singular value below which a direction counts as in the kernel.
const ZERO_SV: f64 = 1e-8;
/// Relative singular values inside this band are reported as ambiguous.
const AMBIGUOUS_SV: (f64, f64) = (1e-10, 1e-6);
/// Largest `‖∇⁺w‖` (unit `w`) for a resolved witness.
const RESOLVED: f64 = 0.1;
/// Between `RESOLVED` and this value the filter refuses to decide.
const UNRESOLVED: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectIndices {
    /// Codimension of `range(H + I)`.
    pub n_plus: usize,
    /// Codimension of `range(H - I)`.
    pub n_minus: usize,
    /// Unit witnesses orthogonal to `range(H + I)`.
    pub witnesses_plus: Vec<Vec<f64>>,
    pub witnesses_minus: Vec<Vec<f64>>,
    pub nodes: Vec<f64>,
    /// Size of the raw range complement before the resolution filter.
    pub raw_codim_plus: usize,
    pub raw_codim_minus: usize,
}

/// Indices of the central-difference `d/dx` with `n` nodes and `m_margin`
/// clamped nodes per end. The periodic grid has no ends, so its domain is
/// the whole space.
pub fn defect_indices_1d(boundary: Boundary, n: usize, m_margin: usize) -> Result<DefectIndices> {
    if n < 50 {
        return Err(Error::domain(format!("index probe needs n ≥ 50, got {n}")));
    }
    if m_margin < 2 || 2 * m_margin >= n {
        return Err(Error::domain(format!("margin must satisfy 2 ≤ m < n/2, got {m_margin}")));
    }
    if boundary == Boundary::DecayWindow {
        return Err(Error::domain("index probe supports interval and periodic grids"));
    }
    let h = Generator::tridiagonal(n, boundary)?.matrix();
    let margin = match boundary {
        Boundary::Periodic => 0,
        _ => m_margin,
    };
    let (raw_plus, plus) = one_sign(&h, 1.0, margin)?;
    let (raw_minus, minus) = one_sign(&h, -1.0, margin)?;
    Ok(DefectIndices {
        n_plus: plus.len(),
        n_minus: minus.len(),
        witnesses_plus: plus,
        witnesses_minus: minus,
        nodes: grid_nodes(n, boundary),
        raw_codim_plus: raw_plus,
        raw_codim_minus: raw_minus,
    })
}

fn one_sign(h: &DMatrix<f64>, sign: f64, margin: usize) -> Result<(usize, Vec<Vec<f64>>)> {
    let n = h.nrows();
    let mut a = h + DMatrix::<f64>::identity(n, n) * sign;
    // columns of nodes outside the domain are zeroed, keeping the matrix square
    for j in (0..margin).chain(n - margin..n) {
        a.column_mut(j).fill(0.0);
    }
    let svd = SVD::new(a, true, false);
    let u = svd.u.expect("left singular vectors were requested");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let mut complement = Vec::new();
    for (i, &s) in sv.iter().enumerate() {
        let ratio = s / smax;
        if ratio > AMBIGUOUS_SV.0 && ratio < AMBIGUOUS_SV.1 {
            return Err(Error::RankAmbiguity { ratio });
        }
        if ratio < ZERO_SV {
            complement.push(u.column(i).into_owned());
        }
    }
    let raw = complement.len();
    if raw == 0 {
        return Ok((0, Vec::new()));
    }
    // Nodes that no domain function reaches give unit vectors that are in
    // the complement for free; keep only the part of the complement that
    // vanishes on them.
    let unreached: Vec<usize> = (0..n).filter(|&i| a_rows_zero(h, sign, margin, i)).collect();
    let mut q = DMatrix::from_columns(&complement);
    for &i in &unreached {
        q.row_mut(i).fill(0.0);
    }
    let svd = SVD::new(q, true, false);
    let uq = svd.u.expect("left singular vectors were requested");
    let kept: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.5)
        .map(|(i, _)| uq.column(i).into_owned())
        .collect();
    if kept.is_empty() {
        return Ok((raw, Vec::new()));
    }
    let q = DMatrix::from_columns(&kept);
    // unscaled forward differences: ‖∇⁺w‖ ~ h‖w'‖ for resolved w, about 2
    // for the odd-even mode, taken over edges between reached nodes only
    let edges: Vec<usize> = (0..n - 1)
        .filter(|i| !unreached.contains(i) && !unreached.contains(&(i + 1)))
        .collect();
    let mut grad = DMatrix::<f64>::zeros(edges.len(), n);
    for (row, &i) in edges.iter().enumerate() {
        grad[(row, i)] = -1.0;
        grad[(row, i + 1)] = 1.0;
    }
    let gq = &grad * &q;
    let mut m = gq.transpose() * &gq;
    m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut witnesses = Vec::new();
    for (k, &e) in eig.eigenvalues.iter().enumerate() {
        let roughness = e.max(0.0).sqrt();
        if (RESOLVED..UNRESOLVED).contains(&roughness) {
            return Err(Error::RankAmbiguity { ratio: roughness });
        }
        if roughness < RESOLVED {
            let mut w: DVector<f64> = &q * eig.eigenvectors.column(k);
            fill_unreached(&mut w, &unreached);
            w /= w.norm();
            if w.sum() < 0.0 {
                w = -w;
            }
            witnesses.push(w.iter().copied().collect());
        }
    }
    Ok((raw, witnesses))
}

/// Sets the values at unreached nodes to minimize `‖∇⁺w‖` over all edges.
/// They lie in the complement anyway, so this only smooths the witness.
fn fill_unreached(w: &mut DVector<f64>, unreached: &[usize]) {
    if unreached.is_empty() {
        return;
    }
    let n = w.len();
    let mut g = DMatrix::<f64>::zeros(n - 1, n);
    for i in 0..n - 1 {
        g[(i, i)] = -1.0;
        g[(i, i + 1)] = 1.0;
    }
    let e = g.select_columns(unreached);
    let rhs = -(&g * &*w);
    let c = (e.transpose() * &e)
        .lu()
        .solve(&(e.transpose() * rhs))
        .expect("difference columns are independent");
    for (k, &i) in unreached.iter().enumerate() {
        w[i] = c[k];
    }
}

/// Whether row `i` of the domain-restricted `H + sign·I` is identically zero.
fn a_rows_zero(h: &DMatrix<f64>, sign: f64, margin: usize, i: usize) -> bool {
    let n = h.nrows();
    (margin..n - margin).all(|j| {
        let v = h[(i, j)] + if i == j { sign } else { 0.0 };
        v == 0.0
    })
}

/// `|⟨a, b⟩| / (‖a‖ ‖b‖)`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot.abs() / (na * nb)
}

/// `index,value` rows.
pub fn witness_csv(values: &[f64]) -> String {
    let mut s = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{i},{v:.17e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_samples(nodes: &[f64], sign: f64) -> Vec<f64> {
        nodes.iter().map(|x| (sign * x).exp()).collect()
    }

    #[test]
    fn interval_has_indices_one_one() {
        for n in [100, 200, 400] {
            let d = defect_indices_1d(Boundary::Interval, n, 2).unwrap();
            assert_eq!((d.n_plus, d.n_minus), (1, 1), "n={n}");
            assert_eq!((d.raw_codim_plus, d.raw_codim_minus), (4, 4));
            let up = exp_samples(&d.nodes, 1.0);
            let down = exp_samples(&d.nodes, -1.0);
            assert!(cosine_similarity(&d.witnesses_plus[0], &up) >= 0.999);
            assert!(cosine_similarity(&d.witnesses_minus[0], &down) >= 0.999);
        }
    }

    #[test]
    fn periodic_has_no_defect() {
        let d = defect_indices_1d(Boundary::Periodic, 100, 2).unwrap();
        assert_eq!((d.n_plus, d.n_minus), (0, 0));
        assert_eq!((d.raw_codim_plus, d.raw_codim_minus), (0, 0));
    }

    #[test]
    fn wider_margin_keeps_indices() {
        let d = defect_indices_1d(Boundary::Interval, 120, 5).unwrap();
        assert_eq!((d.n_plus, d.n_minus), (1, 1));
        assert_eq!(d.raw_codim_plus, 10);
        let up = exp_samples(&d.nodes, 1.0);
        assert!(cosine_similarity(&d.witnesses_plus[0], &up) >= 0.999);
    }

    #[test]
    fn preconditions() {
        assert!(defect_indices_1d(Boundary::Interval, 40, 2).is_err());
        assert!(defect_indices_1d(Boundary::Interval, 100, 1).is_err());
        assert!(defect_indices_1d(Boundary::DecayWindow, 100, 2).is_err());
    }

    #[test]
    fn csv_and_cosine() {
        assert_eq!(witness_csv(&[1.0, -0.5]).lines().count(), 3);
        assert!((cosine_similarity(&[1.0, 2.0], &[-2.0, -4.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[0.0], &[1.0]), 0.0);
    }
}
