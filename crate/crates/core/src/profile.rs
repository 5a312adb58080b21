//! One-dimensional transition profile.
//!
//! For a gap constant `c = ε^κ` (κ = 3/2 by default) the profile is the
//! inverse of
//!
//! ```text
//! ψ(s) = ∫_α^s ε / √(c + 2W(r)) dr,      α ≤ s ≤ β,
//! ```
//!
//! which solves `ε q' = √(c + 2W(q))` and climbs from `α` to `β` over the
//! finite length `η = ψ(β)`. Outside `[0, η]` the profile is clamped.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quad;

pub const DEFAULT_GAP_EXPONENT: f64 = 1.5;

/// Sampled profile `t ↦ q̃(t)` on `[0, η]`, with monotone cubic evaluation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileTable {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub gap_exponent: f64,
    t: Vec<f64>,
    q: Vec<f64>,
    slope: Vec<f64>,
}

/// `ε^κ`, the constant that keeps the profile slope bounded below.
pub fn gap_constant(epsilon: f64, gap_exponent: f64) -> f64 {
    epsilon.powf(gap_exponent)
}

pub fn build_profile<P: Potential>(w: &P, epsilon: f64, alpha: f64, beta: f64, n_samples: usize) -> Result<ProfileTable> {
    build_profile_with(w, epsilon, alpha, beta, n_samples, DEFAULT_GAP_EXPONENT)
}

pub fn build_profile_with<P: Potential>(
    w: &P,
    epsilon: f64,
    alpha: f64,
    beta: f64,
    n_samples: usize,
    gap_exponent: f64,
) -> Result<ProfileTable> {
    if !(epsilon > 0.0) || !(alpha < beta) || n_samples < 64 || !(gap_exponent > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "profile needs epsilon > 0, alpha < beta, n_samples >= 64 (got {epsilon}, [{alpha}, {beta}], {n_samples})"
        )));
    }
    let gap = gap_constant(epsilon, gap_exponent);
    let integrand = |s: f64| epsilon / (gap + 2.0 * w.value(s).max(0.0)).sqrt();

    // Chebyshev-type grading concentrates nodes at both wells
    let n = n_samples;
    let q: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                alpha
            } else if k == n - 1 {
                beta
            } else {
                alpha + (beta - alpha) * 0.5 * (1.0 - (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
            }
        })
        .collect();
    let mut t = Vec::with_capacity(n);
    t.push(0.0);
    for k in 1..n {
        // absolute floor at rounding level of the integrand's peak
        let floor = 1e-15 * epsilon / gap.sqrt() * (q[k] - q[k - 1]);
        let (piece, _) = quad::integrate(integrand, q[k - 1], q[k], 1e-12, floor)?;
        t.push(t[k - 1] + piece);
    }
    let eta = t[n - 1];
    let exact: Vec<f64> = q.iter().map(|&s| (gap + 2.0 * w.value(s).max(0.0)).sqrt() / epsilon).collect();
    let slope = limit_slopes(&t, &q, exact);
    Ok(ProfileTable { epsilon, alpha, beta, eta, gap_exponent, t, q, slope })
}

/// Fritsch–Carlson limiter applied to the exact nodal slopes.
fn limit_slopes(t: &[f64], q: &[f64], mut m: Vec<f64>) -> Vec<f64> {
    for k in 0..t.len() - 1 {
        let delta = (q[k + 1] - q[k]) / (t[k + 1] - t[k]);
        if delta == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / delta;
        let b = m[k + 1] / delta;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[k] = tau * a * delta;
            m[k + 1] = tau * b * delta;
        }
    }
    m
}

impl ProfileTable {
    /// Node abscissae `t_k = ψ(s_k)`.
    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    /// Node values `s_k`.
    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest node spacing in `t`.
    pub fn max_spacing(&self) -> f64 {
        self.t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    fn locate(&self, t: f64) -> usize {
        match self.t.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(k) => k.min(self.t.len() - 2),
            Err(k) => k.saturating_sub(1).min(self.t.len() - 2),
        }
    }

    /// `q̃(t)`, clamped to `α` for `t < 0` and to `β` for `t > η`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.alpha;
        }
        if t >= self.eta {
            return self.beta;
        }
        let k = self.locate(t);
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let h = t1 - t0;
        let x = (t - t0) / h;
        let x2 = x * x;
        let x3 = x2 * x;
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        let v = h00 * self.q[k] + h10 * h * self.slope[k] + h01 * self.q[k + 1] + h11 * h * self.slope[k + 1];
        v.clamp(self.q[k], self.q[k + 1])
    }

    /// `ψ(s)` by inverse lookup (monotone bisection on the interpolant).
    pub fn inverse(&self, s: f64) -> f64 {
        if s <= self.alpha {
            return 0.0;
        }
        if s >= self.beta {
            return self.eta;
        }
        let k = match self.q.binary_search_by(|x| x.total_cmp(&s)) {
            Ok(k) => return self.t[k],
            Err(k) => k - 1,
        };
        let (mut lo, mut hi) = (self.t[k], self.t[k + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Writes `t,q` rows covering `[-pad, η + pad]`.
    pub fn write_csv<W: Write>(&self, mut out: W, pad: f64, rows: usize) -> std::io::Result<()> {
        writeln!(out, "t,q")?;
        let rows = rows.max(2);
        for k in 0..rows {
            let t = -pad + (self.eta + 2.0 * pad) * k as f64 / (rows - 1) as f64;
            writeln!(out, "{:.17e},{:.17e}", t, self.eval(t))?;
        }
        Ok(())
    }
}

/// Residual of `ε q' = √(c + 2W(q))` at interval midpoints, with `q'` from
/// centered differences of the samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileResidual {
    pub max_residual: f64,
    pub max_spacing: f64,
}

pub fn profile_residual<P: Potential>(table: &ProfileTable, w: &P) -> ProfileResidual {
    let gap = gap_constant(table.epsilon, table.gap_exponent);
    let mut worst = 0.0f64;
    for k in 0..table.t.len() - 1 {
        let h = table.t[k + 1] - table.t[k];
        let mid = table.t[k] + 0.5 * h;
        let dq = (table.q[k + 1] - table.q[k]) / h;
        let q = table.eval(mid);
        let r = (table.epsilon * dq - (gap + 2.0 * w.value(q).max(0.0)).sqrt()).abs();
        worst = worst.max(r);
    }
    ProfileResidual { max_residual: worst, max_spacing: table.max_spacing() }
}

/// `∫_ℝ [(ε/2) q̃'² + W(q̃)/ε] dt`, evaluated in the `s` variable.
pub fn profile_energy<P: Potential>(table: &ProfileTable, w: &P) -> Result<f64> {
    let gap = gap_constant(table.epsilon, table.gap_exponent);
    // dt = ε/√(c+2W) ds and q' = √(c+2W)/ε
    let f = |s: f64| {
        let ww = w.value(s).max(0.0);
        (0.5 * gap + 2.0 * ww) / (gap + 2.0 * ww).sqrt()
    };
    Ok(quad::integrate(f, table.alpha, table.beta, 1e-12, 0.0)?.0)
}

/// `∫_α^β √(2W + c) ds`, the bound on [`profile_energy`].
pub fn profile_energy_bound<P: Potential>(table: &ProfileTable, w: &P) -> Result<f64> {
    let gap = gap_constant(table.epsilon, table.gap_exponent);
    Ok(quad::integrate(|s| (gap + 2.0 * w.value(s).max(0.0)).sqrt(), table.alpha, table.beta, 1e-12, 0.0)?.0)
}
