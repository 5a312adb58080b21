//! Double-well potentials, the surface tension `σ(α, β) = ∫_α^β √(2W)`,
//! and the quadratic truncation used to drop the growth condition.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// A C² scalar potential `W` with its first two derivatives.
pub trait Potential: Send + Sync {
    fn value(&self, s: f64) -> f64;
    fn d1(&self, s: f64) -> f64;
    fn d2(&self, s: f64) -> f64;
}

impl<P: Potential + ?Sized> Potential for &P {
    fn value(&self, s: f64) -> f64 {
        (**self).value(s)
    }
    fn d1(&self, s: f64) -> f64 {
        (**self).d1(s)
    }
    fn d2(&self, s: f64) -> f64 {
        (**self).d2(s)
    }
}

/// Constants of the growth bound `|W'(s)| ≤ A + B|s|^{p-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub a: f64,
    pub b: f64,
    pub p: f64,
}

/// Constants of the two-sided bound `c₁|t|^{p₁} < W(t) < c₂|t|^{p₂}` for `|t| ≥ t₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedGrowth {
    pub c1: f64,
    pub c2: f64,
    pub p1: f64,
    pub p2: f64,
    pub t0: f64,
}

/// A polynomial double well with the constants that certify the standing
/// assumptions on `W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleWell {
    /// Coefficients in increasing degree.
    coeffs: Vec<f64>,
    /// Coefficients of `h ↦ W(1 + h)`, used for `s > 1/2` so values near the
    /// upper well do not cancel.
    #[serde(skip)]
    shifted: OnceLock<Vec<f64>>,
    pub growth: GrowthConstants,
    pub two_sided: TwoSidedGrowth,
    /// `W' > 0` on `(1, 1 + barrier_delta]`.
    pub barrier_delta: f64,
}

impl DoubleWell {
    /// `W(s) = s²(1−s)²`.
    pub fn quartic_standard() -> Self {
        Self {
            coeffs: vec![0.0, 0.0, 1.0, -2.0, 1.0],
            shifted: OnceLock::new(),
            growth: GrowthConstants { a: 12.0, b: 12.0, p: 4.0 },
            two_sided: TwoSidedGrowth { c1: 1.0, c2: 2.0, p1: 3.5, p2: 4.0, t0: 4.0 },
            barrier_delta: 0.5,
        }
    }

    /// Custom polynomial; the certifying constants are supplied by the caller
    /// and checked by [`check_assumptions`].
    pub fn polynomial(coeffs: Vec<f64>, growth: GrowthConstants, two_sided: TwoSidedGrowth, barrier_delta: f64) -> Self {
        Self { coeffs, shifted: OnceLock::new(), growth, two_sided, barrier_delta }
    }

    /// `W ≡ 0`. Violates the well assumptions; used only as a degenerate
    /// profile (affine transition).
    pub fn flat() -> Self {
        Self {
            coeffs: vec![],
            shifted: OnceLock::new(),
            growth: GrowthConstants { a: 1.0, b: 1.0, p: 2.0 },
            two_sided: TwoSidedGrowth { c1: 0.0, c2: 0.0, p1: 2.0, p2: 2.0, t0: 1.0 },
            barrier_delta: 0.0,
        }
    }

    /// `factor · W`.
    pub fn scaled(&self, factor: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * factor).collect();
        Self::polynomial(coeffs, self.growth, self.two_sided, self.barrier_delta)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }
}

impl DoubleWell {
    /// Coefficients and local variable for the expansion centred at the
    /// nearer of 0 and 1.
    fn local(&self, s: f64) -> (&[f64], f64) {
        if s > 0.5 {
            (self.shifted.get_or_init(|| taylor_shift(&self.coeffs)), s - 1.0)
        } else {
            (&self.coeffs, s)
        }
    }
}

/// Coefficients of `p(1 + h)` by repeated synthetic division.
fn taylor_shift(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    let n = c.len();
    for i in 0..n {
        for k in (i..n.saturating_sub(1)).rev() {
            c[k] += c[k + 1];
        }
    }
    c
}

impl Potential for DoubleWell {
    fn value(&self, s: f64) -> f64 {
        let (c, x) = self.local(s);
        c.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    fn d1(&self, s: f64) -> f64 {
        let (c, x) = self.local(s);
        c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
    }

    fn d2(&self, s: f64) -> f64 {
        let (c, x) = self.local(s);
        c.iter().enumerate().skip(2).rev().fold(0.0, |acc, (k, c)| acc * x + (k * (k - 1)) as f64 * c)
    }
}

/// Grid on which the assumptions are verified numerically.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionGrid {
    pub range: f64,
    pub points: usize,
}

impl Default for AssumptionGrid {
    fn default() -> Self {
        Self { range: 100.0, points: 200_001 }
    }
}

/// Outcome of the grid check of the standing assumptions on `W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub wells: bool,
    pub derivative_growth: bool,
    pub barrier: bool,
    pub two_sided_growth: bool,
    /// `2 < p₁ ≤ p₂ ≤ 2(p₁ − 1)`. The upper bound on `p₁` is vacuous for surfaces.
    pub exponents: bool,
}

impl AssumptionReport {
    pub fn all(&self) -> bool {
        self.wells && self.derivative_growth && self.barrier && self.two_sided_growth && self.exponents
    }
}

pub fn check_assumptions(w: &DoubleWell, grid: AssumptionGrid) -> AssumptionReport {
    let tol = 1e-12;
    let wells = w.value(0.0).abs() <= tol
        && w.value(1.0).abs() <= tol
        && w.d1(0.0).abs() <= tol
        && w.d1(1.0).abs() <= tol
        && w.d2(0.0) > 0.0
        && w.d2(1.0) > 0.0;

    let samples = || {
        let n = grid.points.max(2);
        (0..n).map(move |k| -grid.range + 2.0 * grid.range * k as f64 / (n - 1) as f64)
    };
    let g = w.growth;
    let derivative_growth = samples().all(|s| w.d1(s).abs() <= g.a + g.b * s.abs().powf(g.p - 1.0));

    let barrier = w.barrier_delta > 0.0
        && (1..=1000).all(|k| w.d1(1.0 + w.barrier_delta * k as f64 / 1000.0) > 0.0);

    let t = w.two_sided;
    let two_sided_growth = samples().filter(|s| s.abs() >= t.t0).all(|s| {
        let v = w.value(s);
        t.c1 * s.abs().powf(t.p1) < v && v < t.c2 * s.abs().powf(t.p2)
    });
    let exponents = t.p1 > 2.0 && t.p1 <= t.p2 && t.p2 <= 2.0 * (t.p1 - 1.0);

    AssumptionReport { wells, derivative_growth, barrier, two_sided_growth, exponents }
}

/// Surface tension `σ(α, β) = ∫_α^β √(2W(s)) ds`.
pub fn sigma<P: Potential>(w: &P, alpha: f64, beta: f64) -> Result<f64> {
    if alpha > beta {
        return Err(Error::InvalidParameter(format!("sigma needs alpha <= beta, got ({alpha}, {beta})")));
    }
    // √(2W) has kinks at the wells; integrate each smooth piece separately
    let mut cuts = vec![alpha];
    cuts.extend([0.0, 1.0].into_iter().filter(|&x| x > alpha && x < beta));
    cuts.push(beta);
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        total += quad::integrate(|s| (2.0 * w.value(s).max(0.0)).sqrt(), pair[0], pair[1], 1e-12, 1e-15)?.0;
    }
    Ok(total)
}

/// `W` on `[ŝ⁻, ŝ⁺]`, continued by its second-order Taylor polynomial at
/// each junction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedPotential {
    pub base: DoubleWell,
    pub s_minus: f64,
    pub s_plus: f64,
    lower: [f64; 3],
    upper: [f64; 3],
}

impl TruncatedPotential {
    pub fn from_junctions(base: DoubleWell, s_minus: f64, s_plus: f64) -> Self {
        let lower = [base.value(s_minus), base.d1(s_minus), base.d2(s_minus)];
        let upper = [base.value(s_plus), base.d1(s_plus), base.d2(s_plus)];
        Self { base, s_minus, s_plus, lower, upper }
    }

    fn branch(&self, s: f64) -> Option<(f64, [f64; 3])> {
        if s > self.s_plus {
            Some((s - self.s_plus, self.upper))
        } else if s < self.s_minus {
            Some((s - self.s_minus, self.lower))
        } else {
            None
        }
    }
}

impl Potential for TruncatedPotential {
    fn value(&self, s: f64) -> f64 {
        match self.branch(s) {
            Some((h, [v, d, dd])) => v + d * h + 0.5 * dd * h * h,
            None => self.base.value(s),
        }
    }

    fn d1(&self, s: f64) -> f64 {
        match self.branch(s) {
            Some((h, [_, d, dd])) => d + dd * h,
            None => self.base.d1(s),
        }
    }

    fn d2(&self, s: f64) -> f64 {
        match self.branch(s) {
            Some((_, [_, _, dd])) => dd,
            None => self.base.d2(s),
        }
    }
}

/// Worst margins of the two barrier inequalities on the verification grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    /// `min(−Ŵ'(s)/ε − λ*)` over `s ∈ [ŝ⁻ − span, ŝ⁻]`.
    pub lower_margin: f64,
    /// `min(Ŵ'(s)/ε − λ*)` over `s ∈ [ŝ⁺, ŝ⁺ + span]`.
    pub upper_margin: f64,
    pub samples: usize,
}

impl BarrierReport {
    pub fn holds(&self) -> bool {
        self.lower_margin > 0.0 && self.upper_margin > 0.0
    }
}

impl TruncatedPotential {
    /// Samples both barrier inequalities on `samples` points over a window of
    /// width `span` beyond each junction.
    pub fn verify_barrier(&self, epsilon: f64, lambda_star: f64, samples: usize, span: f64) -> BarrierReport {
        let n = samples.max(2);
        let at = |k: usize| span * k as f64 / (n - 1) as f64;
        let lower_margin = (0..n)
            .map(|k| -self.d1(self.s_minus - at(k)) / epsilon - lambda_star)
            .fold(f64::INFINITY, f64::min);
        let upper_margin = (0..n)
            .map(|k| self.d1(self.s_plus + at(k)) / epsilon - lambda_star)
            .fold(f64::INFINITY, f64::min);
        BarrierReport { lower_margin, upper_margin, samples: n }
    }
}

/// Truncation search settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationGrid {
    pub step: f64,
    pub bound: f64,
}

impl Default for TruncationGrid {
    fn default() -> Self {
        Self { step: 1e-3, bound: 1e6 }
    }
}

/// Quadratic truncation of `w` with barrier level `λ*`.
///
/// `ŝ⁺` is the first grid point `≥ t₁` with `W'(ŝ⁺)/ε > λ*`, `ŝ⁻` the first
/// grid point `≤ −t₁` with `−W'(ŝ⁻)/ε > λ*`.
pub fn truncate(w: &DoubleWell, epsilon: f64, lambda_star: f64, t1: f64) -> Result<TruncatedPotential> {
    truncate_with(w, epsilon, lambda_star, t1, TruncationGrid::default())
}

pub fn truncate_with(
    w: &DoubleWell,
    epsilon: f64,
    lambda_star: f64,
    t1: f64,
    grid: TruncationGrid,
) -> Result<TruncatedPotential> {
    if !(epsilon > 0.0 && lambda_star > 0.0 && t1 > 1.0 && grid.step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "truncate needs epsilon > 0, lambda* > 0, t1 > 1 (got {epsilon}, {lambda_star}, {t1})"
        )));
    }
    // W'' must be bounded below by a positive constant outside [-t1, t1]
    let convex_outside = (0..=1000).all(|k| {
        let s = t1 + 10.0 * t1 * k as f64 / 1000.0;
        w.d2(s) > 0.0 && w.d2(-s) > 0.0
    });
    if !convex_outside {
        return Err(Error::InvalidParameter(format!("W'' is not positive outside [-{t1}, {t1}]")));
    }
    let level = epsilon * lambda_star;
    let s_plus = first_grid_point(t1, grid, |s| w.d1(s) > level)?;
    let s_minus = -first_grid_point(t1, grid, |s| -w.d1(-s) > level)?;
    let t = TruncatedPotential::from_junctions(w.clone(), s_minus, s_plus);
    let report = t.verify_barrier(epsilon, lambda_star, 200, 10.0);
    if !report.holds() {
        return Err(Error::InvalidParameter(format!("barrier inequalities fail after truncation: {report:?}")));
    }
    Ok(t)
}

/// Smallest `t1 + k·step` satisfying `accept`, searched up to `grid.bound`.
fn first_grid_point(t1: f64, grid: TruncationGrid, accept: impl Fn(f64) -> bool) -> Result<f64> {
    let at = |k: u64| t1 + grid.step * k as f64;
    // exponential bracket over lattice points, then a linear scan below it
    let mut hit = None;
    let mut k = 0u64;
    loop {
        let s = at(k);
        if s > grid.bound {
            break;
        }
        if accept(s) {
            hit = Some(k);
            break;
        }
        k = if k == 0 { 1 } else { k * 2 };
    }
    let hi = hit.ok_or(Error::TruncationSearch { bound: grid.bound })?;
    Ok((0..=hi).map(at).find(|&s| accept(s)).unwrap_or(at(hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_values_and_curvatures() {
        let w = DoubleWell::quartic_standard();
        assert_eq!(w.value(0.0), 0.0);
        assert_eq!(w.value(1.0), 0.0);
        assert!((w.value(0.5) - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(w.d2(0.0), 2.0);
        assert_eq!(w.d2(1.0), 2.0);
        assert!((w.d2(0.5) + 1.0).abs() < 1e-15);
        assert_eq!(w.d1(2.0), 12.0);
    }

    #[test]
    fn upper_well_is_evaluated_without_cancellation() {
        let w = DoubleWell::quartic_standard();
        for h in [1e-3, 1e-5, -1e-4] {
            let s = 1.0 + h;
            let x = s - 1.0;
            let exact = s * s * x * x;
            assert!((w.value(s) - exact).abs() <= 1e-14 * exact);
        }
        let cubic = DoubleWell::polynomial(vec![1.0, -3.0, 0.5, 2.0], GrowthConstants { a: 1.0, b: 1.0, p: 3.0 }, TwoSidedGrowth { c1: 0.0, c2: 1.0, p1: 2.5, p2: 3.0, t0: 1.0 }, 0.1);
        for s in [0.7, 1.3, 2.5] {
            let direct = 1.0 - 3.0 * s + 0.5 * s * s + 2.0 * s * s * s;
            assert!((cubic.value(s) - direct).abs() < 1e-13);
            assert!((cubic.d1(s) - (-3.0 + s + 6.0 * s * s)).abs() < 1e-13);
        }
    }

    #[test]
    fn derivatives_match_closed_forms() {
        let w = DoubleWell::quartic_standard();
        for k in 0..=100 {
            let s = -3.0 + 0.07 * k as f64;
            assert!((w.d1(s) - 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s)).abs() < 1e-10);
            assert!((w.d2(s) - (2.0 - 12.0 * s + 12.0 * s * s)).abs() < 1e-10);
        }
    }

    #[test]
    fn quartic_satisfies_assumptions() {
        let report = check_assumptions(&DoubleWell::quartic_standard(), AssumptionGrid::default());
        assert!(report.all(), "{report:?}");
    }

    #[test]
    fn flat_potential_fails_wells() {
        let report = check_assumptions(&DoubleWell::flat(), AssumptionGrid { range: 10.0, points: 101 });
        assert!(!report.wells);
        assert!(!report.all());
    }

    #[test]
    fn sigma_closed_form_and_degenerate_cases() {
        let w = DoubleWell::quartic_standard();
        assert!((sigma(&w, 0.0, 1.0).unwrap() - 2f64.sqrt() / 6.0).abs() < 1e-10);
        assert_eq!(sigma(&w, 0.3, 0.3).unwrap(), 0.0);
        assert_eq!(sigma(&DoubleWell::flat(), 0.0, 1.0).unwrap(), 0.0);
        assert!(sigma(&w, 1.0, 0.0).is_err());
    }

    #[test]
    fn truncation_of_quartic() {
        let w = DoubleWell::quartic_standard();
        let t = truncate(&w, 0.1, 10.0, 1.5).unwrap();
        // W'(1.5) = 3 > ελ* = 1, and W'(-1.5) = -30 < -1
        assert_eq!(t.s_plus, 1.5);
        assert_eq!(t.s_minus, -1.5);
        assert!(t.s_plus <= 2.0);
        for k in 0..=300 {
            let s = t.s_minus + (t.s_plus - t.s_minus) * k as f64 / 300.0;
            assert_eq!(t.value(s), w.value(s));
        }
        for k in 1..50 {
            let h = k as f64 * 0.3;
            assert_eq!(t.d2(t.s_plus + h), w.d2(t.s_plus));
            assert_eq!(t.d2(t.s_minus - h), w.d2(t.s_minus));
        }
    }

    #[test]
    fn barrier_holds_on_verification_grid() {
        let w = DoubleWell::quartic_standard();
        for (eps, lam) in [(0.1, 10.0), (0.05, 3.0), (1.0, 400.0)] {
            let t = truncate(&w, eps, lam, 1.5).unwrap();
            let r = t.verify_barrier(eps, lam, 200, 10.0);
            assert!(r.holds(), "{r:?}");
            assert_eq!(r.samples, 200);
        }
        // junctions placed inside the wells break the barrier
        let t = TruncatedPotential::from_junctions(w, -0.2, 1.2);
        assert!(!t.verify_barrier(0.1, 10.0, 200, 10.0).holds());
    }

    #[test]
    fn truncation_search_respects_lambda() {
        let w = DoubleWell::quartic_standard();
        // W'(s) > 400 first happens near s ≈ 5.06
        let t = truncate(&w, 1.0, 400.0, 1.5).unwrap();
        assert!(w.d1(t.s_plus) > 400.0);
        assert!(w.d1(t.s_plus - 1e-3) <= 400.0);
        assert!(-w.d1(t.s_minus) > 400.0);
        assert!(-w.d1(t.s_minus + 1e-3) <= 400.0);
    }

    #[test]
    fn truncation_search_bound_is_enforced() {
        // purely convex quadratic: W' grows linearly, never exceeding the level within the bound
        let w = DoubleWell::polynomial(
            vec![0.0, 0.0, 1e-9],
            GrowthConstants { a: 1.0, b: 1.0, p: 2.0 },
            TwoSidedGrowth { c1: 0.0, c2: 1.0, p1: 2.5, p2: 3.0, t0: 1.0 },
            0.1,
        );
        let err = truncate_with(&w, 1.0, 1e6, 2.0, TruncationGrid { step: 1e-2, bound: 1e6 }).unwrap_err();
        assert!(matches!(err, Error::TruncationSearch { .. }));
        assert!(truncate(&DoubleWell::quartic_standard(), 0.1, -1.0, 2.0).is_err());
    }
}
