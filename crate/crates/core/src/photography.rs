//! Photographs: smoothed indicators of small geodesic balls.
//!
//! The photograph at `x₀` is `q̃(r_V − d(x₀, ·) + δ)` where `q̃` is the
//! transition profile on the phases `0, 1`, `r_V` is the radius of the ball
//! with area `V`, and the shift `δ ∈ [0, η]` restores `∫u = V` exactly.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::energy;
use crate::error::{Error, Result};
use crate::field::{integrate, ScalarField};
use crate::geom::{ball_radius_for_volume, SurfaceMesh, Vec3};
use crate::par::Execution;
use crate::potential::{sigma, Potential};
use crate::profile::{build_profile, ProfileTable};

/// Isoperimetric constant of the plane, `2√π`.
pub const ISOPERIMETRIC_C2: f64 = 3.544_907_701_811_032;

/// Samples used for the photography profile table.
pub const PROFILE_SAMPLES: usize = 2048;

const DELTA_TOL: f64 = 1e-12;
const VOLUME_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModicaField {
    pub field: ScalarField,
    pub base_point: usize,
    pub r_v: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub volume: f64,
    pub energy: f64,
    /// Constant added after a marginal bracket failure; zero otherwise.
    pub volume_shift: f64,
    #[serde(skip)]
    pub profile: Option<Arc<ProfileTable>>,
    #[serde(skip)]
    pub distance: ScalarField,
}

/// Shared state for photographs at one `(ε, V)`.
pub struct Photographer<'a, P: Potential> {
    mesh: &'a SurfaceMesh,
    w: &'a P,
    epsilon: f64,
    volume: f64,
    profile: Arc<ProfileTable>,
}

impl<'a, P: Potential> Photographer<'a, P> {
    pub fn new(mesh: &'a SurfaceMesh, w: &'a P, epsilon: f64, volume: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(volume > 0.0 && volume < mesh.total_area()) {
            return Err(Error::OutOfRange { value: volume, lo: 0.0, hi: mesh.total_area() });
        }
        let profile = Arc::new(build_profile(w, epsilon, 0.0, 1.0, PROFILE_SAMPLES)?);
        Ok(Self { mesh, w, epsilon, volume, profile })
    }

    pub fn profile(&self) -> &Arc<ProfileTable> {
        &self.profile
    }

    pub fn shoot(&self, base_point: usize) -> Result<ModicaField> {
        if base_point >= self.mesh.vertex_count() {
            return Err(Error::InvalidParameter(format!("base point {base_point} is not a vertex")));
        }
        let (r_v, distance) = ball_radius_for_volume(self.mesh, base_point, self.volume)?;
        let mass = self.mesh.lumped_mass();
        let q = &self.profile;
        let g = |delta: f64| -> f64 {
            distance.iter().zip(mass).map(|(d, m)| m * q.eval(r_v - d + delta)).sum::<f64>() - self.volume
        };
        let tol = VOLUME_TOL * self.volume;
        let (g_lo, g_hi) = (g(0.0), g(q.eta));
        let delta = if g_lo > 0.0 {
            if g_lo > 10.0 * tol {
                return Err(Error::VolumeBracket { g_lo, g_hi });
            }
            0.0
        } else if g_hi < 0.0 {
            if -g_hi > 10.0 * tol {
                return Err(Error::VolumeBracket { g_lo, g_hi });
            }
            q.eta
        } else {
            let (mut lo, mut hi) = (0.0, q.eta);
            let mut mid = 0.5 * (lo + hi);
            while hi - lo > DELTA_TOL {
                mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm.abs() <= 1e-10 * self.volume {
                    break;
                }
                if gm < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            mid
        };
        let mut field: Vec<f64> = distance.iter().map(|d| q.eval(r_v - d + delta)).collect();
        let mut volume_shift = 0.0;
        let err = self.volume - integrate(mass, &field);
        if err.abs() > tol {
            volume_shift = err / self.mesh.total_area();
            field.iter_mut().for_each(|x| *x += volume_shift);
        }
        let e = energy(self.mesh, self.w, self.epsilon, &field);
        Ok(ModicaField {
            field: ScalarField::new(field),
            base_point,
            r_v,
            delta,
            epsilon: self.epsilon,
            volume: self.volume,
            energy: e,
            volume_shift,
            profile: Some(self.profile.clone()),
            distance,
        })
    }

    /// Photographs at every base point, in input order.
    pub fn shoot_all(&self, base_points: &[usize], execution: Execution) -> Vec<Result<ModicaField>> {
        execution.map(base_points, |&x| self.shoot(x))
    }
}

pub fn photograph<P: Potential>(mesh: &SurfaceMesh, w: &P, epsilon: f64, volume: f64, base_point: usize) -> Result<ModicaField> {
    Photographer::new(mesh, w, epsilon, volume)?.shoot(base_point)
}

/// `r_V − d(x₀, ·)`: positive inside the ball, negative outside.
pub fn signed_distance(mesh: &SurfaceMesh, base_point: usize, r_v: f64) -> ScalarField {
    let d = crate::geom::geodesic_distance(mesh, base_point);
    ScalarField::new(d.iter().map(|x| r_v - x).collect())
}

/// `σ c₂ √V + margin`, the energy level photographs are expected to stay under.
pub fn sublevel_threshold<P: Potential>(w: &P, volume: f64, margin: f64) -> Result<f64> {
    Ok(sigma(w, 0.0, 1.0)? * ISOPERIMETRIC_C2 * volume.sqrt() + margin)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelEntry {
    pub base_point: usize,
    pub energy: f64,
    pub below: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelReport {
    pub threshold: f64,
    pub entries: Vec<SublevelEntry>,
    pub max_energy: f64,
    pub all_below: bool,
}

pub fn sublevel_check<P: Potential>(w: &P, volume: f64, fields: &[ModicaField], margin: f64) -> Result<SublevelReport> {
    let threshold = sublevel_threshold(w, volume, margin)?;
    let entries: Vec<SublevelEntry> = fields
        .iter()
        .map(|f| SublevelEntry { base_point: f.base_point, energy: f.energy, below: f.energy <= threshold })
        .collect();
    let max_energy = entries.iter().map(|e| e.energy).fold(f64::NEG_INFINITY, f64::max);
    let all_below = entries.iter().all(|e| e.below);
    Ok(SublevelReport { threshold, entries, max_energy, all_below })
}

/// `√(Δuᵀ(εS + M)Δu)` between two fields on the same mesh.
pub fn h1_distance(mesh: &SurfaceMesh, epsilon: f64, a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let stiff = mesh.stiffness().quadratic_form(&diff);
    let mass: f64 = diff.iter().zip(mesh.lumped_mass()).map(|(d, m)| m * d * d).sum();
    (epsilon * stiff + mass).max(0.0).sqrt()
}

pub fn photography_modulus<P: Potential>(
    mesh: &SurfaceMesh,
    w: &P,
    epsilon: f64,
    volume: f64,
    x0: usize,
    x1: usize,
) -> Result<f64> {
    let cam = Photographer::new(mesh, w, epsilon, volume)?;
    let a = cam.shoot(x0)?;
    let b = cam.shoot(x1)?;
    Ok(h1_distance(mesh, epsilon, &a.field, &b.field))
}

/// `‖u − χ_{d < r}‖_{L¹}` with both `u` and `d` piecewise linear; exact for
/// fields with values in `[0, 1]`.
pub fn l1_to_ball(mesh: &SurfaceMesh, u: &[f64], distance: &[f64], r: f64) -> f64 {
    let pos = mesh.positions();
    mesh.triangles()
        .iter()
        .map(|t| {
            let poly: Vec<Node> = t.iter().map(|&i| Node { p: pos[i], u: u[i], d: distance[i] - r }).collect();
            let (inside, outside) = split(&poly);
            (polygon_area(&inside) - polygon_integral(&inside)) + polygon_integral(&outside)
        })
        .sum()
}

#[derive(Clone, Copy)]
struct Node {
    p: Vec3,
    u: f64,
    d: f64,
}

fn split(poly: &[Node]) -> (Vec<Node>, Vec<Node>) {
    let mut inside = Vec::with_capacity(4);
    let mut outside = Vec::with_capacity(4);
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        if a.d < 0.0 {
            inside.push(a);
        } else {
            outside.push(a);
        }
        if (a.d < 0.0) != (b.d < 0.0) {
            let s = a.d / (a.d - b.d);
            let c = Node { p: crate::geom::lerp(a.p, b.p, s), u: a.u + s * (b.u - a.u), d: 0.0 };
            inside.push(c);
            outside.push(c);
        }
    }
    (inside, outside)
}

fn fan<F: Fn(&Node, &Node, &Node, f64) -> f64>(poly: &[Node], f: F) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    (1..poly.len() - 1)
        .map(|k| {
            let area = crate::geom::triangle_area(poly[0].p, poly[k].p, poly[k + 1].p);
            f(&poly[0], &poly[k], &poly[k + 1], area)
        })
        .sum()
}

fn polygon_area(poly: &[Node]) -> f64 {
    fan(poly, |_, _, _, a| a)
}

fn polygon_integral(poly: &[Node]) -> f64 {
    fan(poly, |a, b, c, area| area * (a.u + b.u + c.u) / 3.0)
}

/// Per-vertex `x,y,z,u` rows.
pub fn write_field_csv<W: Write>(mesh: &SurfaceMesh, u: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "vertex,x,y,z,u")?;
    for (i, (p, v)) in mesh.positions().iter().zip(u).enumerate() {
        writeln!(out, "{i},{:.17e},{:.17e},{:.17e},{:.17e}", p[0], p[1], p[2], v)?;
    }
    Ok(())
}
