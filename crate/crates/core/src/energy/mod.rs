//! The constrained variational core: `E_ε`, its gradient on the volume
//! constraint, a volume-exact gradient flow to critical points, discrete
//! Palais–Smale residuals, Morse indices, and the multiplier audit.

mod morse;

pub use morse::{dense_constrained_spectrum, hessian_symmetry_defect, morse_index, EigenConfig, MorseIndex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{integrate, l2_norm, mass_dot, ScalarField};
use crate::geom::SurfaceMesh;
use crate::potential::Potential;
use crate::sparse::{conjugate_gradient, ShiftedOperator};

/// `E_ε(u) = (ε/2) uᵀSu + (1/ε) Σ mᵢ W(uᵢ)`.
pub fn energy<P: Potential>(mesh: &SurfaceMesh, w: &P, epsilon: f64, u: &[f64]) -> f64 {
    let dirichlet = mesh.stiffness().quadratic_form(u);
    let bulk: f64 = mesh.lumped_mass().iter().zip(u).map(|(m, &x)| m * w.value(x)).sum();
    0.5 * epsilon * dirichlet + bulk / epsilon
}

/// L²(M)-gradient of `E_ε` and its projection onto `{∫v = 0}`.
#[derive(Clone, Debug)]
pub struct Gradient {
    /// `ε M⁻¹Su + W'(u)/ε`.
    pub raw: ScalarField,
    /// `raw − λ`.
    pub projected: ScalarField,
    /// Mass-weighted mean of `raw`; the Lagrange multiplier at a critical point.
    pub lambda: f64,
}

pub fn gradient<P: Potential>(mesh: &SurfaceMesh, w: &P, epsilon: f64, u: &[f64]) -> Gradient {
    let mass = mesh.lumped_mass();
    let su = mesh.stiffness().mul_vec(u);
    let raw: Vec<f64> = su
        .iter()
        .zip(mass)
        .zip(u)
        .map(|((s, m), &x)| epsilon * s / m + w.d1(x) / epsilon)
        .collect();
    let lambda = integrate(mass, &raw) / mesh.total_area();
    let projected = raw.iter().map(|r| r - lambda).collect();
    Gradient { raw: raw.into(), projected: ScalarField::new(projected), lambda }
}

/// Mass-weighted mean of `W'(u)/ε`, the multiplier used during the flow.
fn flow_multiplier<P: Potential>(mass: &[f64], total: f64, w: &P, epsilon: f64, u: &[f64]) -> f64 {
    mass.iter().zip(u).map(|(m, &x)| m * w.d1(x)).sum::<f64>() / (epsilon * total)
}

/// Step control for [`solve_constrained`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub tau0: f64,
    pub max_steps: usize,
    /// L² norm of the projected gradient at which the run stops; `None` means
    /// `1e-8·√|M|`.
    pub tol_grad: Option<f64>,
    pub backtrack: f64,
    pub growth: f64,
    pub growth_after: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub min_tau: f64,
    pub record_trajectory: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tau0: 1e-2,
            max_steps: 20_000,
            tol_grad: None,
            backtrack: 0.5,
            growth: 1.2,
            growth_after: 5,
            cg_tol: 1e-10,
            cg_max_iter: 10_000,
            min_tau: 1e-14,
            record_trajectory: false,
        }
    }
}

impl FlowConfig {
    pub fn tol_grad_for(&self, mesh: &SurfaceMesh) -> f64 {
        self.tol_grad.unwrap_or(1e-8 * mesh.total_area().sqrt())
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0 && self.backtrack > 0.0 && self.backtrack < 1.0 && self.growth >= 1.0 && self.cg_tol > 0.0)
            || self.tol_grad.is_some_and(|t| !(t > 0.0))
        {
            return Err(Error::InvalidParameter(format!("invalid flow configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub lambda: f64,
    pub volume: f64,
}

/// A (possibly unconverged) solution `(u, λ)` of the constrained problem.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub u: ScalarField,
    pub lambda: f64,
    pub energy: f64,
    pub grad_norm: f64,
    pub ps_norm: f64,
    pub steps: usize,
    pub converged: bool,
    pub morse_index: Option<usize>,
    pub nondegenerate: Option<bool>,
    pub epsilon: f64,
    pub volume: f64,
    /// Largest `|∫u − V|` seen over the run.
    pub volume_drift: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Semi-implicit gradient flow on `{∫u = V}`:
///
/// ```text
/// (M/τ + εS) u⁺ = M (u/τ − W'(u)/ε + λ(u))
/// ```
///
/// Stiffness rows sum to zero, so each step preserves `∫u`. Steps that raise
/// the energy are retried with `τ` halved; `τ` grows again after a streak of
/// accepted steps.
pub fn solve_constrained<P: Potential>(
    mesh: &SurfaceMesh,
    w: &P,
    epsilon: f64,
    volume: f64,
    u0: &[f64],
    cfg: &FlowConfig,
) -> Result<CriticalPoint> {
    cfg.validate()?;
    let n = mesh.vertex_count();
    if u0.len() != n || !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("initial field length or epsilon invalid".into()));
    }
    let mass = mesh.lumped_mass();
    let total = mesh.total_area();
    let start_volume = integrate(mass, u0);
    if (start_volume - volume).abs() > 1e-8 * volume.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter(format!(
            "initial volume {start_volume} differs from target {volume} by more than 1e-8 relative"
        )));
    }
    let tol_grad = cfg.tol_grad_for(mesh);

    let mut u: Vec<f64> = u0.to_vec();
    let shift = (volume - start_volume) / total;
    u.iter_mut().for_each(|x| *x += shift);

    let mut e = energy(mesh, w, epsilon, &u);
    let mut tau = cfg.tau0;
    let mut streak = 0usize;
    let mut drift = (integrate(mass, &u) - volume).abs();
    let mut trajectory = Vec::new();
    let mut rhs = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut next = vec![0.0; n];

    for step in 1..=cfg.max_steps {
        let g = gradient(mesh, w, epsilon, &u);
        let grad_norm = l2_norm(mass, &g.projected);
        if cfg.record_trajectory {
            trajectory.push(TrajectoryPoint { step, energy: e, grad_norm, lambda: g.lambda, volume: integrate(mass, &u) });
        }
        if grad_norm <= tol_grad {
            return finish(mesh, w, epsilon, volume, u, g.lambda, e, grad_norm, step, true, drift, trajectory);
        }
        let lambda = flow_multiplier(mass, total, w, epsilon, &u);
        loop {
            for i in 0..n {
                rhs[i] = mass[i] * (u[i] / tau - w.d1(u[i]) / epsilon + lambda);
                diag[i] = mass[i] / tau;
            }
            next.copy_from_slice(&u);
            let op = ShiftedOperator { scale: epsilon, matrix: mesh.stiffness(), diag: &diag };
            conjugate_gradient(op, &rhs, &mut next, cfg.cg_tol, cfg.cg_max_iter)?;
            // CG stops at a residual, not at the exact solution; put back the
            // conserved volume, which the exact step preserves identically
            let fix = (volume - integrate(mass, &next)) / total;
            next.iter_mut().for_each(|x| *x += fix);
            let e_next = energy(mesh, w, epsilon, &next);
            if e_next <= e + 1e-12 * e.abs() {
                std::mem::swap(&mut u, &mut next);
                e = e_next;
                drift = drift.max((integrate(mass, &u) - volume).abs());
                streak += 1;
                if streak >= cfg.growth_after {
                    tau *= cfg.growth;
                    streak = 0;
                }
                break;
            }
            tau *= cfg.backtrack;
            streak = 0;
            if tau < cfg.min_tau {
                let g = gradient(mesh, w, epsilon, &u);
                let gn = l2_norm(mass, &g.projected);
                return finish(mesh, w, epsilon, volume, u, g.lambda, e, gn, step, false, drift, trajectory);
            }
        }
    }
    let g = gradient(mesh, w, epsilon, &u);
    let gn = l2_norm(mass, &g.projected);
    let converged = gn <= tol_grad;
    finish(mesh, w, epsilon, volume, u, g.lambda, e, gn, cfg.max_steps, converged, drift, trajectory)
}

#[allow(clippy::too_many_arguments)]
fn finish<P: Potential>(
    mesh: &SurfaceMesh,
    w: &P,
    epsilon: f64,
    volume: f64,
    u: Vec<f64>,
    lambda: f64,
    energy: f64,
    grad_norm: f64,
    steps: usize,
    converged: bool,
    volume_drift: f64,
    trajectory: Vec<TrajectoryPoint>,
) -> Result<CriticalPoint> {
    let ps_norm = ps_residual(mesh, w, epsilon, &u)?;
    Ok(CriticalPoint {
        u: ScalarField::new(u),
        lambda,
        energy,
        grad_norm,
        ps_norm,
        steps,
        converged,
        morse_index: None,
        nondegenerate: None,
        epsilon,
        volume,
        volume_drift,
        trajectory,
    })
}

/// Discrete `H⁻¹` norm of the projected gradient: solve `(εS + M) w = M g`
/// and return `√(gᵀ M w)`.
pub fn ps_residual<P: Potential>(mesh: &SurfaceMesh, w: &P, epsilon: f64, u: &[f64]) -> Result<f64> {
    let g = gradient(mesh, w, epsilon, u);
    h_minus_one_norm(mesh, epsilon, &g.projected)
}

pub fn h_minus_one_norm(mesh: &SurfaceMesh, epsilon: f64, g: &[f64]) -> Result<f64> {
    let mass = mesh.lumped_mass();
    let rhs: Vec<f64> = g.iter().zip(mass).map(|(x, m)| x * m).collect();
    let mut sol = vec![0.0; g.len()];
    let op = ShiftedOperator { scale: epsilon, matrix: mesh.stiffness(), diag: mass };
    conjugate_gradient(op, &rhs, &mut sol, 1e-12, 10_000)?;
    Ok(mass_dot(mass, g, &sol).max(0.0).sqrt())
}

/// Per-run entry of the multiplier audit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierEntry {
    pub epsilon: f64,
    pub lambda: f64,
    pub energy: f64,
    pub ratio: f64,
}

/// Empirical boundedness of `|λ| / E_ε` across a family of runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub entries: Vec<MultiplierEntry>,
    pub max_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    /// `max_ratio / min_ratio`.
    pub variation: Option<f64>,
    /// Set when the variation exceeds ×10.
    pub unbounded_flag: bool,
}

pub fn multiplier_audit(runs: &[CriticalPoint]) -> MultiplierReport {
    if runs.is_empty() {
        return MultiplierReport::default();
    }
    let mut entries: Vec<MultiplierEntry> = runs
        .iter()
        .map(|r| MultiplierEntry { epsilon: r.epsilon, lambda: r.lambda, energy: r.energy, ratio: r.lambda.abs() / r.energy })
        .collect();
    entries.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let max = entries.iter().map(|e| e.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min = entries.iter().map(|e| e.ratio).fold(f64::INFINITY, f64::min);
    let variation = max / min;
    MultiplierReport {
        entries,
        max_ratio: Some(max),
        min_ratio: Some(min),
        variation: Some(variation),
        unbounded_flag: !(variation <= 10.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{generate_mesh, MeshSpec};
    use crate::potential::DoubleWell;

    fn sphere(k: u32) -> SurfaceMesh {
        generate_mesh(&MeshSpec::Icosphere { subdivisions: k }).unwrap()
    }

    #[test]
    fn energy_of_constants() {
        let m = sphere(3);
        let w = DoubleWell::quartic_standard();
        let n = m.vertex_count();
        assert_eq!(energy(&m, &w, 0.1, &vec![0.0; n]), 0.0);
        let half = energy(&m, &w, 0.1, &vec![0.5; n]);
        let expected = 10.0 / 16.0 * m.total_area();
        assert!((half - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn constants_are_constrained_critical() {
        let m = sphere(3);
        let w = DoubleWell::quartic_standard();
        let c = 0.3;
        let g = gradient(&m, &w, 0.05, &vec![c; m.vertex_count()]);
        assert!(g.projected.iter().all(|x| x.abs() < 1e-10));
        assert!((g.lambda - w.d1(c) / 0.05).abs() < 1e-10);
    }

    #[test]
    fn gradient_is_linear_in_the_potential() {
        let m = sphere(2);
        let w = DoubleWell::quartic_standard();
        let w2 = w.scaled(2.0);
        let u: Vec<f64> = m.positions().iter().map(|p| 0.5 + 0.4 * p[0] * p[2]).collect();
        let eps = 0.2;
        let g1 = gradient(&m, &w, eps, &u);
        let g2 = gradient(&m, &w2, eps, &u);
        let su = m.stiffness().mul_vec(&u);
        for (i, (&s, &mi)) in su.iter().zip(m.lumped_mass()).enumerate() {
            let bulk1 = g1.raw[i] - eps * s / mi;
            let bulk2 = g2.raw[i] - eps * s / mi;
            assert!((bulk2 - 2.0 * bulk1).abs() < 1e-12);
        }
    }

    #[test]
    fn ps_residual_vanishes_on_constants() {
        let m = sphere(2);
        let w = DoubleWell::quartic_standard();
        assert!(ps_residual(&m, &w, 0.1, &vec![0.2; m.vertex_count()]).unwrap() < 1e-10);
        assert_eq!(h_minus_one_norm(&m, 0.1, &vec![0.0; m.vertex_count()]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_off_volume_start() {
        let m = sphere(2);
        let w = DoubleWell::quartic_standard();
        let u = vec![0.1; m.vertex_count()];
        let err = solve_constrained(&m, &w, 0.1, 1.0, &u, &FlowConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn multiplier_audit_of_constant_family() {
        let m = sphere(2);
        let w = DoubleWell::quartic_standard();
        let c = 0.1;
        let runs: Vec<CriticalPoint> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&eps| {
                let u = vec![c; m.vertex_count()];
                let v = c * m.total_area();
                solve_constrained(&m, &w, eps, v, &u, &FlowConfig::default()).unwrap()
            })
            .collect();
        let report = multiplier_audit(&runs);
        let expected = w.d1(c).abs() / (w.value(c) * m.total_area());
        for e in &report.entries {
            assert!((e.ratio - expected).abs() <= 1e-12 * expected);
        }
        assert!(!report.unbounded_flag);
        assert_eq!(multiplier_audit(&[]), MultiplierReport::default());
    }
}
