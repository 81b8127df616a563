//! Closed-form total-DoF calculators, ratio-region classification, minimum
//! relay search and curve emission.
//!
//! All expressions are continuous in the antenna ratio `M/N`, so `M` is a
//! real here even though transceiver construction needs integers. Region
//! boundaries are quadratic surds; membership tests compare squared forms so
//! a ratio sitting exactly on a rational boundary cannot be misclassified by
//! the square root rounding.

use nalgebra::{convert, RealField};
use serde::Serialize;

use crate::{Error, Result};

fn c<R: RealField>(x: f64) -> R {
    convert(x)
}

fn kf<R: RealField>(k: u32) -> R {
    convert(k as f64)
}

/// Full relay-cooperation upper bound `min{3M/2, KN}`.
pub fn upper_bound_dof<R: RealField + Copy>(m: R, n: R, k: u32) -> R {
    (c::<R>(1.5) * m).min(kf::<R>(k) * n)
}

/// Achievable total DoF
/// `min{3M/2, max{M + 5MN/(9M+N), sqrt(3K)N/2}, M + KN^2/(3M), KN}`.
pub fn theorem1_dof<R: RealField + Copy>(m: R, n: R, k: u32) -> R {
    if m <= R::zero() {
        return R::zero();
    }
    let kr = kf::<R>(k);
    let t1 = c::<R>(1.5) * m;
    let t2a = m + c::<R>(5.0) * m * n / (c::<R>(9.0) * m + n);
    let t2b = (c::<R>(3.0) * kr).sqrt() * n / c::<R>(2.0);
    let t3 = m + kr * n * n / (c::<R>(3.0) * m);
    let t4 = kr * n;
    t1.min(t2a.max(t2b)).min(t3).min(t4)
}

/// `r >= max{sqrt(3K)/3, 1}` via the squared form.
fn at_or_above_b1<R: RealField + Copy>(r: R, k: u32) -> bool {
    if k <= 3 {
        r >= R::one()
    } else {
        r >= R::zero() && c::<R>(9.0) * r * r >= c::<R>(3.0) * kf::<R>(k)
    }
}

/// `r >= (9K + sqrt(81K^2 + 60K))/30` via the squared form.
fn at_or_above_b2<R: RealField + Copy>(r: R, k: u32) -> bool {
    let kr = kf::<R>(k);
    let t = c::<R>(30.0) * r - c::<R>(9.0) * kr;
    t >= R::zero() && t * t >= c::<R>(81.0) * kr * kr + c::<R>(60.0) * kr
}

/// `r >= (3K + sqrt(9K^2 - 12K))/6` via the squared form.
fn at_or_above_b3<R: RealField + Copy>(r: R, k: u32) -> bool {
    let kr = kf::<R>(k);
    let t = c::<R>(6.0) * r - c::<R>(3.0) * kr;
    t >= R::zero() && t * t >= c::<R>(9.0) * kr * kr - c::<R>(12.0) * kr
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// `d*_sum = 3M/2`: all user antennas carry streams.
    R1FullUser,
    /// `d*_sum = max{M + 5MN/(9M+N), sqrt(3K)N/2}`.
    R2MaxBranch,
    /// `d*_sum = M + KN^2/(3M)`.
    R3AlignmentI,
    /// `d*_sum = KN`: all relay antennas are used.
    R4FullRelay,
}

/// A region tag together with its ratio interval `[lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionLabel<R> {
    pub region: Region,
    pub lower: R,
    /// `None` for the unbounded last interval.
    pub upper: Option<R>,
}

/// Classify `M/N` into the four piecewise intervals (requires `K >= 2`).
pub fn corollary2_region<R: RealField + Copy>(m: R, n: R, k: u32) -> Result<RegionLabel<R>> {
    if k < 2 {
        return Err(Error::UnsupportedRegion(k));
    }
    let r = m / n;
    let kr = kf::<R>(k);
    let b1 = ((c::<R>(3.0) * kr).sqrt() / c::<R>(3.0)).max(R::one());
    let b2 = (c::<R>(9.0) * kr + (c::<R>(81.0) * kr * kr + c::<R>(60.0) * kr).sqrt()) / c::<R>(30.0);
    let b3 = (c::<R>(3.0) * kr + (c::<R>(9.0) * kr * kr - c::<R>(12.0) * kr).sqrt()) / c::<R>(6.0);
    let label = if !at_or_above_b1(r, k) {
        RegionLabel {
            region: Region::R1FullUser,
            lower: R::zero(),
            upper: Some(b1),
        }
    } else if !at_or_above_b2(r, k) {
        RegionLabel {
            region: Region::R2MaxBranch,
            lower: b1,
            upper: Some(b2),
        }
    } else if !at_or_above_b3(r, k) {
        RegionLabel {
            region: Region::R3AlignmentI,
            lower: b2,
            upper: Some(b3),
        }
    } else {
        RegionLabel {
            region: Region::R4FullRelay,
            lower: b3,
            upper: None,
        }
    };
    Ok(label)
}

/// Uplink-downlink-symmetric baseline `N * max_{(a,b) in S_K} g_{(a,b)}(M/N)`
/// with `S_K = {(2/3, 1)} u {((6k + sqrt(6k))/12, sqrt(6k)/2) : k = 2..K}`.
pub fn symmetric_design_bound<R: RealField + Copy>(m: R, n: R, k: u32) -> R {
    let x = m / n;
    let g = |a: R, b: R| if x < a { b * x / a } else { b };
    let mut best = g(c::<R>(2.0 / 3.0), R::one());
    for kk in 2..=k {
        let s = (c::<R>(6.0) * kf::<R>(kk)).sqrt();
        let a = (c::<R>(6.0) * kf::<R>(kk) + s) / c::<R>(12.0);
        let b = s / c::<R>(2.0);
        best = best.max(g(a, b));
    }
    n * best
}

/// Achievable total DoF normalized by the total relay antenna count `KN`.
pub fn normalized_asymptotic_dof<R: RealField + Copy>(m: R, n: R, k: u32) -> R {
    theorem1_dof(m, n, k) / (kf::<R>(k) * n)
}

const MIN_RELAYS_CAP: u32 = 1_000_000;

/// Smallest `K >= 1` achieving `target_d_sum`; the achievable DoF is
/// nondecreasing in `K`, so a linear scan with early exit is exact.
pub fn min_relays<R>(m: R, n: R, target_d_sum: R) -> Result<u32>
where
    R: RealField + Copy,
    f64: From<R>,
{
    let limit = c::<R>(1.5) * m;
    let slack = c::<R>(1e-9) * R::one().max(target_d_sum);
    if target_d_sum > limit + slack {
        return Err(Error::UnreachableTarget {
            target: f64::from(target_d_sum),
            limit: f64::from(limit),
        });
    }
    for k in 1..=MIN_RELAYS_CAP {
        if theorem1_dof(m, n, k) + slack >= target_d_sum {
            return Ok(k);
        }
    }
    Err(Error::UnreachableTarget {
        target: f64::from(target_d_sum),
        limit: f64::from(limit),
    })
}

/// One row of a DoF curve sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint<R> {
    pub ratio: R,
    pub achievable: R,
    pub symmetric: R,
    pub upper: R,
}

/// Evaluate the three curves over a ratio grid, holding `N` fixed and letting
/// `M = ratio * N` vary continuously.
pub fn sweep_curves<R: RealField + Copy>(k: u32, n: R, ratio_grid: &[R]) -> Vec<SweepPoint<R>> {
    ratio_grid
        .iter()
        .map(|&ratio| {
            let m = ratio * n;
            SweepPoint {
                ratio,
                achievable: theorem1_dof(m, n, k),
                symmetric: symmetric_design_bound(m, n, k),
                upper: upper_bound_dof(m, n, k),
            }
        })
        .collect()
}

/// CSV emission for sweep data: `ratio,achievable,symmetric,upper`,
/// 12 significant digits per value.
pub fn write_sweep_csv<W: std::io::Write>(
    points: &[SweepPoint<f64>],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "ratio,achievable,symmetric,upper")?;
    for p in points {
        writeln!(
            w,
            "{:.11e},{:.11e},{:.11e},{:.11e}",
            p.ratio, p.achievable, p.symmetric, p.upper
        )?;
    }
    Ok(())
}

/// Evenly spaced grid of `points >= 2` values over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 0 {
        return Vec::new();
    }
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_bound_examples() {
        assert_eq!(upper_bound_dof(2.0, 3.0, 1), 3.0);
        assert_eq!(upper_bound_dof(10.0, 1.0, 2), 2.0);
        assert_eq!(upper_bound_dof(0.0, 4.0, 3), 0.0);
    }

    #[test]
    fn theorem1_single_relay_reduces_to_corollary1() {
        assert_eq!(theorem1_dof(2.0, 3.0, 1), 3.0);
        for m in 1..=30 {
            for n in 1..=30 {
                let got = theorem1_dof(m as f64, n as f64, 1);
                let expect = (1.5 * m as f64).min(n as f64);
                assert!(
                    (got - expect).abs() <= 1e-12,
                    "M={m}, N={n}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn theorem1_reference_values() {
        let v: f64 = theorem1_dof(14.0, 10.0, 2);
        assert!((v - (14.0 + 200.0 / 42.0)).abs() < 1e-12);
        assert!((theorem1_dof(3.0f64, 1.0, 27) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn region_classification_k2() {
        let r = corollary2_region(0.5, 1.0, 2).unwrap();
        assert_eq!(r.region, Region::R1FullUser);
        assert_eq!(r.upper, Some(1.0));
        let r = corollary2_region(1.4, 1.0, 2).unwrap();
        assert_eq!(r.region, Region::R3AlignmentI);
        let r = corollary2_region(2.0, 1.0, 2).unwrap();
        assert_eq!(r.region, Region::R4FullRelay);
        assert!(corollary2_region(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn region_boundaries_are_half_open() {
        // Exactly at the lower edge of R2 for K=2 (boundary is 1).
        let r = corollary2_region(1.0, 1.0, 2).unwrap();
        assert_eq!(r.region, Region::R2MaxBranch);
        // K = 3 has b1 = sqrt(9)/3 = 1 as well.
        let r = corollary2_region(1.0, 1.0, 3).unwrap();
        assert_eq!(r.region, Region::R2MaxBranch);
    }

    #[test]
    fn symmetric_bound_examples() {
        // (M/N, d_sum) = (2/3, N) is attained.
        assert!((symmetric_design_bound(2.0f64, 3.0, 2) - 3.0).abs() < 1e-12);
        // Large ratio saturates at sqrt(6K) N / 2.
        let v = symmetric_design_bound(10.0, 1.0, 2);
        assert!((v - 3.0f64.sqrt()).abs() < 1e-12);
        // Small ratio rides the first slope branch 3M/2.
        let v: f64 = symmetric_design_bound(0.01, 1.0, 5);
        assert!((v - 0.015).abs() < 1e-12);
    }

    #[test]
    fn normalized_dof_examples() {
        let k = 10_000u32;
        let n = 3.0;
        let m = (k as f64) * n / 2.0;
        let v = normalized_asymptotic_dof(m, n, k);
        assert!((v - 0.5).abs() < 0.01 * 0.5);
        // Safely above the last boundary: exactly 1.
        let kr = 5.0f64;
        let b3 = (3.0 * kr + (9.0 * kr * kr - 12.0 * kr).sqrt()) / 6.0;
        let m = (b3 * 4.0).ceil() + 1.0;
        assert_eq!(normalized_asymptotic_dof(m, 4.0, 5), 1.0);
        assert_eq!(normalized_asymptotic_dof(0.0, 4.0, 5), 0.0);
    }

    #[test]
    fn min_relays_reference_counts() {
        assert_eq!(min_relays(1.0, 1.0, 1.5).unwrap(), 2);
        assert_eq!(min_relays(2.0, 1.0, 3.0).unwrap(), 12);
        assert_eq!(min_relays(5.0, 2.0, 7.5).unwrap(), 19);
        assert_eq!(min_relays(3.0, 1.0, 4.5).unwrap(), 27);
        assert_eq!(min_relays(3.0, 1.0, 3.5).unwrap(), 5);
        assert_eq!(min_relays(4.0, 7.0, 0.0).unwrap(), 1);
        assert!(matches!(
            min_relays(1.0, 1.0, 2.0),
            Err(Error::UnreachableTarget { .. })
        ));
    }

    #[test]
    fn sweep_matches_pointwise_formulas() {
        let grid = linspace(0.0, 3.0, 301);
        let pts = sweep_curves(2, 6.0, &grid);
        assert_eq!(pts.len(), 301);
        for p in &pts {
            assert!(p.achievable <= p.upper + 1e-12);
            assert!(p.symmetric <= p.achievable + 1e-12);
            if p.ratio < 1.0 {
                assert!((p.achievable - p.upper).abs() < 1e-12);
            }
        }
        // Achievable is nondecreasing in the ratio.
        for w in pts.windows(2) {
            assert!(w[1].achievable >= w[0].achievable - 1e-12);
        }
        assert!(sweep_curves(2, 6.0, &[]).is_empty());
    }

    #[test]
    fn theorem1_below_upper_bound_on_integer_triples() {
        for m in 1..=50 {
            for n in 1..=50 {
                for k in (1..=50).step_by(7) {
                    let a = theorem1_dof(m as f64, n as f64, k);
                    let u = upper_bound_dof(m as f64, n as f64, k);
                    assert!(a <= u + 1e-9, "({m},{n},{k})");
                }
            }
        }
    }

    #[test]
    fn theorem1_nondecreasing_in_k() {
        for m in [1.0, 2.0, 5.0, 14.0, 30.0] {
            for n in [1.0, 3.0, 10.0] {
                let mut prev = 0.0;
                for k in 1..=40 {
                    let v = theorem1_dof(m, n, k);
                    assert!(v >= prev - 1e-12);
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn csv_format() {
        let pts = sweep_curves(2, 1.0, &[0.0, 1.0]);
        let mut out = Vec::new();
        write_sweep_csv(&pts, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "ratio,achievable,symmetric,upper");
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn formulas_work_in_single_precision() {
        let v = theorem1_dof(2.0f32, 3.0f32, 1);
        assert!((v - 3.0).abs() < 1e-6);
    }
}
