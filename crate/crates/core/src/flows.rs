//! Lifted translation groups acting on states built from smooth bumps on a
//! covering surface of the punctured plane.
//!
//! Convention: `(U_j(t) f)(x) = f(x - t e_j)`, so supports move by `+t e_j`.

pub mod scenario;

use std::f64::consts::TAU;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cover::{angle_sweep, lift_translation, segment_clearance, Axis, CoverSpec, SurfacePoint};
use crate::quad::gauss_legendre_on;
use crate::{Error, Result};

/// `∫_0^1 exp(-2 / (1 - s²)) s ds`, the radial mass of the squared profile.
const PROFILE_MASS: f64 = 0.018_767_130_910_245_226;

/// Nodes per tensor factor in the overlap quadrature.
const OVERLAP_NODES: usize = 64;

/// Unnormalized profile `exp(-1 / (1 - s²))` on `|s| < 1`.
fn profile_shape(s2: f64) -> f64 {
    if s2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s2)).exp()
    }
}

/// A smooth compactly supported bump of unit L² norm at weight 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: SurfacePoint,
    pub radius: f64,
    pub weight: Complex64,
}

impl Bump {
    pub fn new(center: SurfacePoint, radius: f64, weight: Complex64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain(format!("bump radius must be positive, got {radius}")));
        }
        if !(center.r() > radius) {
            return Err(Error::domain(format!(
                "bump support reaches the puncture: center r = {}, radius = {radius}",
                center.r()
            )));
        }
        if !(weight.re.is_finite() && weight.im.is_finite()) {
            return Err(Error::domain("bump weight must be finite"));
        }
        Ok(Self { center, radius, weight })
    }

    pub fn sheet(&self) -> i64 {
        self.center.sheet()
    }

    /// Value of the bump at planar `(x, y)` on the bump's own sheet.
    pub fn value_at(&self, x: f64, y: f64) -> Complex64 {
        let (cx, cy) = self.center.planar();
        let s2 = ((x - cx).powi(2) + (y - cy).powi(2)) / (self.radius * self.radius);
        self.weight * (normalization(self.radius) * profile_shape(s2))
    }
}

fn normalization(radius: f64) -> f64 {
    1.0 / (radius * (TAU * PROFILE_MASS).sqrt())
}

/// `∫ p_a p_b` for unit profiles of radii `ra`, `rb` whose planar centers are
/// `d` apart.
pub fn profile_overlap(ra: f64, rb: f64, d: f64) -> f64 {
    if d >= ra + rb {
        return 0.0;
    }
    if d == 0.0 && ra == rb {
        return 1.0;
    }
    // a at the origin, b at (d, 0); the lens spans x in [lo, hi]
    let lo = (-ra).max(d - rb);
    let hi = ra.min(d + rb);
    if !(hi > lo) {
        return 0.0;
    }
    let mut cuts = vec![lo];
    if d > 0.0 {
        // the two circles cross here; the y-extent has a kink
        let xs = (d * d + ra * ra - rb * rb) / (2.0 * d);
        if xs > lo && xs < hi {
            cuts.push(xs);
        }
    }
    cuts.push(hi);
    let (gx, gw) = unit_rule();
    let na = normalization(ra);
    let nb = normalization(rb);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        // two equal halves per piece keep the rule well inside its accuracy
        let mid = 0.5 * (w[0] + w[1]);
        for (a, b) in [(w[0], mid), (mid, w[1])] {
            let (cx, hx) = (0.5 * (a + b), 0.5 * (b - a));
            for (tx, wx) in gx.iter().zip(gw) {
                let x = cx + hx * tx;
                let h = (ra * ra - x * x).max(0.0).sqrt().min((rb * rb - (x - d) * (x - d)).max(0.0).sqrt());
                if h == 0.0 {
                    continue;
                }
                let mut line = 0.0;
                for (ty, wy) in gx.iter().zip(gw) {
                    let y = h * ty;
                    let sa = (x * x + y * y) / (ra * ra);
                    let sb = ((x - d) * (x - d) + y * y) / (rb * rb);
                    line += wy * profile_shape(sa) * profile_shape(sb);
                }
                total += wx * hx * h * line;
            }
        }
    }
    total * na * nb
}

fn unit_rule() -> (&'static [f64], &'static [f64]) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (x, w) = RULE.get_or_init(|| gauss_legendre_on(OVERLAP_NODES, -1.0, 1.0));
    (x, w)
}

/// Overlap `∫ conj(a) b` of two bumps on the surface. Zero unless the
/// supports meet on the same sheet.
pub fn bump_overlap(a: &Bump, b: &Bump) -> Complex64 {
    if a == b {
        return a.weight.conj() * b.weight;
    }
    let pa = a.center.planar();
    let pb = b.center.planar();
    let d = (pb.0 - pa.0).hypot(pb.1 - pa.1);
    if d >= a.radius + b.radius || a.center.cover() != b.center.cover() {
        return Complex64::new(0.0, 0.0);
    }
    // The union of the two disks is simply connected and avoids the
    // puncture, so the segment between the centers fixes the relative lift.
    let turns = (b.center.theta_lift() - a.center.theta_lift() - angle_sweep(pa, pb)) / TAU;
    let m = a.center.cover().reduce_sheet(turns.round() as i64);
    if m != 0 {
        return Complex64::new(0.0, 0.0);
    }
    let base = if a.center.planar() == b.center.planar() && a.radius == b.radius {
        1.0
    } else {
        profile_overlap(a.radius, b.radius, d)
    };
    a.weight.conj() * b.weight * base
}

/// A finite superposition of bumps on one cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFn {
    cover: CoverSpec,
    bumps: Vec<Bump>,
}

impl StateFn {
    pub fn new(cover: CoverSpec, bumps: Vec<Bump>) -> Result<Self> {
        for (i, b) in bumps.iter().enumerate() {
            if b.center.cover() != cover {
                return Err(Error::Scenario(format!("bump {i} lives on a different cover")));
            }
        }
        Ok(Self { cover, bumps })
    }

    pub fn single(bump: Bump) -> Self {
        Self {
            cover: bump.center.cover(),
            bumps: vec![bump],
        }
    }

    pub fn cover(&self) -> CoverSpec {
        self.cover
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn norm(&self) -> f64 {
        inner_product(self, self).re.max(0.0).sqrt()
    }

    pub fn sheets(&self) -> Vec<i64> {
        self.bumps.iter().map(Bump::sheet).collect()
    }
}

/// `⟨f, g⟩`, conjugate-linear in `f`.
pub fn inner_product(f: &StateFn, g: &StateFn) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in &f.bumps {
        for b in &g.bumps {
            acc += bump_overlap(a, b);
        }
    }
    acc
}

/// Distance between the puncture and the region swept by a disk of `radius`
/// moving from `from` to `to`.
pub fn swept_clearance(from: (f64, f64), to: (f64, f64), radius: f64) -> f64 {
    segment_clearance(from, to) - radius
}

/// Net lifted angle change of each bump under `U_axis(t)`.
fn translate_deltas(f: &StateFn, axis: Axis, t: f64) -> Result<Vec<(SurfacePoint, f64)>> {
    f.bumps
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if t == 0.0 {
                return Ok((b.center, 0.0));
            }
            let (x, y) = b.center.planar();
            let (ux, uy) = axis.unit();
            let to = (x + t * ux, y + t * uy);
            let gap = swept_clearance((x, y), to, b.radius);
            if !(gap > 0.0) {
                return Err(Error::Puncture {
                    min_clearance: gap + b.radius,
                    clearance: b.radius,
                    context: format!(" while moving bump {i} along axis {}", u8::from(axis)),
                });
            }
            let l = lift_translation(&b.center, axis, t, b.radius)?;
            Ok((l.endpoint, l.delta_theta))
        })
        .collect()
}

/// `U_axis(t) f`.
pub fn translate_state(f: &StateFn, axis: Axis, t: f64) -> Result<StateFn> {
    let moved = translate_deltas(f, axis, t)?;
    Ok(StateFn {
        cover: f.cover,
        bumps: f
            .bumps
            .iter()
            .zip(moved)
            .map(|(b, (c, _))| Bump { center: c, ..*b })
            .collect(),
    })
}

/// The loop traced by the pulled-back point under `C(s, t)`, starting and
/// ending at `c`.
pub fn traced_loop(c: (f64, f64), s: f64, t: f64) -> [(f64, f64); 5] {
    [
        c,
        (c.0 - s, c.1),
        (c.0 - s, c.1 - t),
        (c.0, c.1 - t),
        c,
    ]
}

/// Each bump's lifted angle change along a sequence of translations, which
/// are applied in order.
fn path_turns(f: &StateFn, legs: &[(Axis, f64)]) -> Result<Vec<f64>> {
    let mut cur = f.clone();
    let mut totals = vec![0.0; f.bumps.len()];
    for &(axis, t) in legs {
        let moved = translate_deltas(&cur, axis, t)?;
        for (tot, (_, d)) in totals.iter_mut().zip(&moved) {
            *tot += d;
        }
        cur.bumps
            .iter_mut()
            .zip(moved)
            .for_each(|(b, (c, _))| b.center = c);
    }
    Ok(totals)
}

fn whole_turns(delta: f64) -> Result<i64> {
    let turns = delta / TAU;
    let w = turns.round();
    if (turns - w).abs() >= 1e-9 {
        return Err(Error::NonIntegerWinding { turns });
    }
    Ok(w as i64)
}

/// `C(s, t) f = U₁(s) U₂(t) U₁(-s) U₂(-t) f`.
///
/// Planar centers are returned untouched; each lifted angle moves by a whole
/// number of turns, minus the winding of the bump's traced loop.
pub fn commutator_apply(f: &StateFn, s: f64, t: f64) -> Result<StateFn> {
    let totals = path_turns(f, &[(Axis::X2, -t), (Axis::X1, -s), (Axis::X2, t), (Axis::X1, s)])?;
    let mut out = f.clone();
    for (b, d) in out.bumps.iter_mut().zip(totals) {
        let k = whole_turns(d)?;
        if k != 0 {
            b.center = b.center.shifted(k);
        }
    }
    Ok(out)
}

/// Sheet shift of each bump under `C(s, t)`.
pub fn commutator_shifts(f: &StateFn, s: f64, t: f64) -> Result<Vec<i64>> {
    path_turns(f, &[(Axis::X2, -t), (Axis::X1, -s), (Axis::X2, t), (Axis::X1, s)])?
        .into_iter()
        .map(whole_turns)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BumpShift {
    pub shift_ab: i64,
    pub shift_ba: i64,
    /// Winding of the loop that runs the `A` path out and the `B` path back.
    pub winding: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetSeparation {
    /// Shifts of the first bump.
    pub shift_ab: i64,
    pub shift_ba: i64,
    pub orthogonal: bool,
    pub overlap: Complex64,
    pub per_bump: Vec<BumpShift>,
}

/// Compare `A = U₁(s) U₂(t) f` with `B = U₂(t) U₁(s) f`.
pub fn sheet_separation(f: &StateFn, s: f64, t: f64) -> Result<SheetSeparation> {
    if f.bumps.is_empty() {
        return Err(Error::domain("sheet separation needs at least one bump"));
    }
    let a = translate_state(&translate_state(f, Axis::X2, t)?, Axis::X1, s)?;
    let b = translate_state(&translate_state(f, Axis::X1, s)?, Axis::X2, t)?;
    let da = path_turns(f, &[(Axis::X2, t), (Axis::X1, s)])?;
    let db = path_turns(f, &[(Axis::X1, s), (Axis::X2, t)])?;
    let mut per_bump = Vec::with_capacity(f.bumps.len());
    for (i, bump) in f.bumps.iter().enumerate() {
        let th = bump.center.theta_lift();
        let base = (th / TAU).floor() as i64;
        let shift_ab = ((th + da[i]) / TAU).floor() as i64 - base;
        let shift_ba = ((th + db[i]) / TAU).floor() as i64 - base;
        let winding = whole_turns(da[i] - db[i])?;
        per_bump.push(BumpShift {
            shift_ab,
            shift_ba,
            winding,
        });
    }
    let overlap = inner_product(&a, &b);
    Ok(SheetSeparation {
        shift_ab: per_bump[0].shift_ab,
        shift_ba: per_bump[0].shift_ba,
        orthogonal: overlap == Complex64::new(0.0, 0.0),
        overlap,
        per_bump,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::winding_of_loop;
    use crate::quad::{integrate, integrate_with, QuadConfig, Upper};
    use proptest::prelude::*;

    fn bump(x: f64, y: f64, sheet: i64, radius: f64, cover: CoverSpec) -> Bump {
        let c = SurfacePoint::from_planar(x, y, sheet, cover).unwrap();
        Bump::new(c, radius, Complex64::new(1.0, 0.0)).unwrap()
    }

    fn inf() -> CoverSpec {
        CoverSpec::Infinite
    }

    #[test]
    fn profile_mass_constant() {
        let r = integrate(|s| profile_shape(s * s).powi(2) * s, 0.0, Upper::Finite(1.0), 1e-15).unwrap();
        assert!((r.value - PROFILE_MASS).abs() < 1e-16, "{}", r.value);
    }

    #[test]
    fn overlap_matches_refined_reference() {
        // reference: the same lens integral by adaptive Gauss–Kronrod in both variables
        let reference = |ra: f64, rb: f64, d: f64| {
            let lo = (-ra).max(d - rb);
            let hi = ra.min(d + rb);
            let na = normalization(ra);
            let nb = normalization(rb);
            let line = |x: f64| {
                let h = (ra * ra - x * x).max(0.0).sqrt().min((rb * rb - (x - d).powi(2)).max(0.0).sqrt());
                if h == 0.0 {
                    return 0.0;
                }
                let cfg = QuadConfig {
                    abs_floor: 1e-22,
                    ..QuadConfig::with_tol(1e-14)
                };
                integrate_with(
                    |y| profile_shape((x * x + y * y) / (ra * ra)) * profile_shape(((x - d).powi(2) + y * y) / (rb * rb)),
                    -h,
                    Upper::Finite(h),
                    &cfg,
                )
                .unwrap()
                .value
            };
            integrate(line, lo, Upper::Finite(hi), 1e-13).unwrap().value * na * nb
        };
        for (ra, rb, d) in [(0.5, 0.5, 0.3), (0.5, 0.3, 0.4), (1.0, 0.4, 0.2), (0.5, 0.5, 0.0), (0.7, 0.6, 1.1)] {
            let got = profile_overlap(ra, rb, d);
            let want = reference(ra, rb, d);
            assert!(((got - want) / want).abs() < 1e-10, "{ra} {rb} {d}: {got} vs {want}");
        }
        assert_eq!(profile_overlap(0.5, 0.5, 1.0), 0.0);
    }

    #[test]
    fn unit_bump_has_unit_norm() {
        let f = StateFn::single(bump(3.0, 0.0, 0, 0.5, inf()));
        assert_eq!(inner_product(&f, &f), Complex64::new(1.0, 0.0));
        // the self-overlap by quadrature agrees with the exact shortcut
        assert!((profile_overlap(0.5, 0.5, 1e-300) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_and_cross_sheet_pairs_vanish() {
        let f = StateFn::single(bump(3.0, 0.0, 0, 0.5, inf()));
        let g = StateFn::single(bump(0.0, 3.0, 0, 0.5, inf()));
        assert_eq!(inner_product(&f, &g), Complex64::new(0.0, 0.0));
        let h = StateFn::single(bump(3.0, 0.0, 1, 0.5, inf()));
        assert_eq!(inner_product(&f, &h), Complex64::new(0.0, 0.0));
        // on a one-sheeted cover the same planar data do meet
        let c1 = CoverSpec::finite(1).unwrap();
        let a = StateFn::single(bump(3.0, 0.0, 0, 0.5, c1));
        let b = StateFn::single(bump(3.0, 0.0, 1, 0.5, c1));
        assert_eq!(inner_product(&a, &b), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn overlap_across_the_cut_uses_the_local_lift() {
        // centers just above and below the positive axis, on the same local sheet
        let a = bump(3.0, 0.1, 0, 0.5, inf());
        let b0 = bump(3.0, -0.1, 0, 0.5, inf());
        let b1 = bump(3.0, -0.1, -1, 0.5, inf());
        let v = profile_overlap(0.5, 0.5, 0.2);
        assert_eq!(bump_overlap(&a, &b0), Complex64::new(0.0, 0.0));
        assert!((bump_overlap(&a, &b1).re - v).abs() < 1e-15);
    }

    #[test]
    fn weights_are_sesquilinear() {
        let c = SurfacePoint::from_planar(3.0, 0.0, 0, inf()).unwrap();
        let a = Bump::new(c, 0.5, Complex64::new(0.0, 2.0)).unwrap();
        let b = Bump::new(c, 0.5, Complex64::new(1.0, 1.0)).unwrap();
        let z = bump_overlap(&a, &b);
        assert!((z - Complex64::new(2.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn translation_examples() {
        let f = StateFn::single(bump(3.0, 0.0, 0, 0.5, inf()));
        let g = translate_state(&f, Axis::X1, 1.0).unwrap();
        let c = g.bumps()[0].center;
        assert!((c.r() - 4.0).abs() < 1e-15 && c.theta_lift() == 0.0);
        assert_eq!(g.sheets(), vec![0]);
        assert_eq!(translate_state(&f, Axis::X2, 0.0).unwrap(), f);
        assert_eq!(g.norm(), f.norm());
        let err = translate_state(&f, Axis::X1, -3.0).unwrap_err();
        assert!(matches!(err, Error::Puncture { ref context, .. } if context.contains("bump 0")));
        // the center path clears the origin, the support does not
        let err = translate_state(&f, Axis::X2, 0.0).and_then(|_| {
            translate_state(&StateFn::single(bump(0.4, 1.0, 0, 0.5, inf())), Axis::X2, -2.0)
        });
        assert!(matches!(err, Err(Error::Puncture { .. })));
    }

    #[test]
    fn commutator_identity_when_loop_misses_origin() {
        let f = StateFn::single(bump(3.0, 0.2, 0, 0.5, inf()));
        let g = commutator_apply(&f, 1.0, 1.3).unwrap();
        assert_eq!(g, f);
        assert_eq!(commutator_apply(&f, 0.0, 2.0).unwrap(), f);
        assert_eq!(commutator_apply(&f, 2.0, 0.0).unwrap(), f);
    }

    #[test]
    fn commutator_shifts_by_minus_winding() {
        let c = (1.0, 1.0);
        let f = StateFn::single(bump(c.0, c.1, 0, 0.3, inf()));
        for (s, t) in [(2.5, 2.5), (-2.5, -2.5), (2.5, -0.5)] {
            let w = winding_of_loop(&traced_loop(c, s, t), 1e-9).unwrap();
            let g = commutator_apply(&f, s, t).unwrap();
            assert_eq!(g.bumps()[0].center.planar(), f.bumps()[0].center.planar());
            assert_eq!(g.sheets()[0] - f.sheets()[0], -w, "s={s} t={t}");
            assert_eq!(commutator_shifts(&f, s, t).unwrap(), vec![-w]);
        }
        assert_eq!(winding_of_loop(&traced_loop(c, 2.5, 2.5), 1e-9).unwrap(), 1);
    }

    #[test]
    fn finite_cover_commutator_has_order_n() {
        for n in 1..=4u32 {
            let cover = CoverSpec::finite(n).unwrap();
            let f = StateFn::single(bump(1.0, 1.0, 0, 0.3, cover));
            let mut g = f.clone();
            for k in 1..=n {
                g = commutator_apply(&g, 2.5, 2.5).unwrap();
                assert_eq!(g.bumps()[0].center.approx_eq(&f.bumps()[0].center, 1e-12), k == n);
            }
        }
    }

    #[test]
    fn sheet_separation_cases() {
        // winding 0
        let f = StateFn::single(bump(3.0, 0.5, 0, 0.3, inf()));
        let r = sheet_separation(&f, 1.0, 1.0).unwrap();
        assert_eq!(r.shift_ab, r.shift_ba);
        assert!(!r.orthogonal);
        assert!((r.overlap.re - 1.0).abs() < 1e-12);
        // the two orders go round opposite sides of the origin
        let f = StateFn::single(bump(-1.0, -1.0, 0, 0.3, inf()));
        let r = sheet_separation(&f, 2.0, 2.0).unwrap();
        assert_eq!(r.shift_ab - r.shift_ba, r.per_bump[0].winding);
        assert_eq!(r.per_bump[0].winding.abs(), 1);
        assert!(r.orthogonal);
        assert_eq!(r.overlap, Complex64::new(0.0, 0.0));
        // a second bump far away does not see the origin
        let two = StateFn::new(inf(), vec![bump(-1.0, -1.0, 0, 0.3, inf()), bump(5.0, 5.0, 0, 0.3, inf())]).unwrap();
        let r = sheet_separation(&two, 2.0, 2.0).unwrap();
        assert_eq!(r.per_bump[0].winding.abs(), 1);
        assert_eq!(r.per_bump[1].winding, 0);
        assert!(!r.orthogonal);
    }

    #[test]
    fn bump_invariants() {
        let c = SurfacePoint::from_planar(1.0, 0.0, 0, inf()).unwrap();
        assert!(Bump::new(c, 1.0, Complex64::new(1.0, 0.0)).is_err());
        assert!(Bump::new(c, 0.0, Complex64::new(1.0, 0.0)).is_err());
        let other = bump(3.0, 0.0, 0, 0.5, CoverSpec::finite(2).unwrap());
        assert!(StateFn::new(inf(), vec![other]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn group_law_per_axis(x in 2.0f64..4.0, y in -1.0f64..1.0, s in -1.5f64..1.5, t in -1.5f64..1.5,
                              ax in 1u8..=2) {
            let axis = Axis::try_from(ax).unwrap();
            let f = StateFn::new(inf(), vec![bump(x, y, 0, 0.4, inf()), bump(x + 0.3, y, 0, 0.3, inf())]).unwrap();
            let two = translate_state(&f, axis, s).and_then(|g| translate_state(&g, axis, t));
            let one = translate_state(&f, axis, s + t);
            let (Ok(two), Ok(one)) = (two, one) else { return Ok(()) };
            for (a, b) in two.bumps().iter().zip(one.bumps()) {
                prop_assert!(a.center.approx_eq(&b.center, 1e-12));
            }
            prop_assert!((two.norm() - f.norm()).abs() < 1e-13);
        }

        #[test]
        fn commutator_matches_winding_oracle(x in -3.0f64..3.0, y in -3.0f64..3.0,
                                             s in -4.0f64..4.0, t in -4.0f64..4.0) {
            prop_assume!(x.hypot(y) > 0.6);
            let f = StateFn::single(bump(x, y, 0, 0.2, inf()));
            if let Ok(g) = commutator_apply(&f, s, t) {
                let w = winding_of_loop(&traced_loop((x, y), s, t), 1e-9).unwrap();
                prop_assert_eq!(g.sheets()[0] - f.sheets()[0], -w);
                if w == 0 {
                    prop_assert_eq!(g, f);
                }
            }
        }
    }
}
