//! Barycenters, nearest-point projection, and concentration diagnostics.

mod bvh;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geom::{dist3, geodesic_distance, geodesic_distance_bounded, level_length, superlevel_area, SurfaceMesh, Vec3};
use crate::par::Execution;
use crate::photography::Photographer;
use crate::potential::Potential;

use bvh::TriangleTree;

/// Distance window inside which two triangles count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// `(Σ mᵢuᵢxᵢ) / (Σ mᵢuᵢ)`.
pub fn barycenter(mesh: &SurfaceMesh, u: &[f64]) -> Result<Vec3> {
    let mass = mesh.lumped_mass();
    let mut moment = [0.0; 3];
    let mut total = 0.0;
    for ((p, m), v) in mesh.positions().iter().zip(mass).zip(u) {
        let w = m * v;
        total += w;
        for k in 0..3 {
            moment[k] += w * p[k];
        }
    }
    if !(total.abs() > 1e-14 * mesh.total_area()) {
        return Err(Error::ZeroMass);
    }
    Ok([moment[0] / total, moment[1] / total, moment[2] / total])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    /// The query point.
    pub euclidean_point: Vec3,
    pub triangle: usize,
    pub barycentric: [f64; 3],
    /// The nearest point on the mesh.
    pub mesh_point: Vec3,
    pub distance_to_mesh: f64,
    pub nearest_vertex: usize,
    /// Another triangle ties within [`TIE_TOLERANCE`] at a different point.
    pub ambiguous: bool,
}

/// Nearest-point projection onto a fixed mesh.
pub struct Projector<'a> {
    mesh: &'a SurfaceMesh,
    tree: TriangleTree,
}

impl<'a> Projector<'a> {
    pub fn new(mesh: &'a SurfaceMesh) -> Self {
        Self { mesh, tree: TriangleTree::new(mesh.positions(), mesh.triangles()) }
    }

    pub fn project(&self, point: Vec3) -> ProjectionResult {
        let hits = self.tree.nearest(point, TIE_TOLERANCE);
        // hits are sorted by triangle index, so the first is the tie-break winner
        let best = hits[0];
        let spread = 1e-9 * (1.0 + best.distance);
        let ambiguous = hits.iter().any(|h| dist3(h.point, best.point) > spread.max(1e-6 * self.mesh.max_radius()));
        let tri = self.mesh.triangles()[best.triangle];
        let pos = self.mesh.positions();
        let nearest_vertex = *tri
            .iter()
            .min_by(|&&a, &&b| dist3(pos[a], best.point).total_cmp(&dist3(pos[b], best.point)).then(a.cmp(&b)))
            .unwrap();
        ProjectionResult {
            euclidean_point: point,
            triangle: best.triangle,
            barycentric: best.barycentric,
            mesh_point: best.point,
            distance_to_mesh: best.distance,
            nearest_vertex,
            ambiguous,
        }
    }
}

pub fn project_to_mesh(mesh: &SurfaceMesh, point: Vec3) -> ProjectionResult {
    Projector::new(mesh).project(point)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyEntry {
    pub base_point: usize,
    /// Geodesic distance from the base point to the projected barycenter.
    pub distance: f64,
    pub distance_to_mesh: f64,
    pub projected_vertex: usize,
    pub ambiguous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyReport {
    pub entries: Vec<HomotopyEntry>,
    pub max_distance: f64,
    pub mean_distance: f64,
    pub inj_estimate: Option<f64>,
    /// `None` when the mesh carries no injectivity estimate.
    pub pass: Option<bool>,
}

/// How far `π(β₁(Φ(x₀)))` lands from `x₀`, for each base point.
pub fn homotopy_audit<P: Potential>(
    mesh: &SurfaceMesh,
    w: &P,
    epsilon: f64,
    volume: f64,
    base_points: &[usize],
    execution: Execution,
) -> Result<HomotopyReport> {
    let camera = Photographer::new(mesh, w, epsilon, volume)?;
    let projector = Projector::new(mesh);
    let tris = mesh.triangles();
    let entries = execution
        .map(base_points, |&x0| -> Result<HomotopyEntry> {
            let photo = camera.shoot(x0)?;
            let proj = projector.project(barycenter(mesh, &photo.field)?);
            let t = tris[proj.triangle];
            let d = &photo.distance;
            let distance = (0..3).map(|k| proj.barycentric[k] * d[t[k]]).sum();
            Ok(HomotopyEntry {
                base_point: x0,
                distance,
                distance_to_mesh: proj.distance_to_mesh,
                projected_vertex: proj.nearest_vertex,
                ambiguous: proj.ambiguous,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let max_distance = entries.iter().map(|e| e.distance).fold(0.0, f64::max);
    let mean_distance = if entries.is_empty() {
        0.0
    } else {
        entries.iter().map(|e| e.distance).sum::<f64>() / entries.len() as f64
    };
    let inj_estimate = mesh.inj_estimate();
    if inj_estimate.is_none() {
        log::warn!("mesh has no injectivity estimate; homotopy check disabled");
    }
    let pass = inj_estimate.map(|inj| max_distance < inj);
    Ok(HomotopyReport { entries, max_distance, mean_distance, inj_estimate, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    /// 1 where `u > level`, 0 elsewhere.
    pub indicator: ScalarField,
    pub volume: f64,
    pub perimeter: f64,
}

pub fn threshold_set(mesh: &SurfaceMesh, u: &[f64], level: f64) -> Result<ThresholdSet> {
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(level > lo && level < hi) {
        return Err(Error::OutOfRange { value: level, lo, hi });
    }
    let indicator = ScalarField::new(u.iter().map(|&x| if x > level { 1.0 } else { 0.0 }).collect());
    Ok(ThresholdSet {
        indicator,
        volume: superlevel_area(mesh, u, level),
        perimeter: level_length(mesh, u, level),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub vertex: usize,
    pub fraction: f64,
}

/// The vertex `p` maximizing `∫_{B(p, r/2)} |u|`, and that integral as a
/// fraction of `∫|u|`.
pub fn concentration(mesh: &SurfaceMesh, u: &[f64], r: f64, execution: Execution) -> Result<Concentration> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("concentration radius must be positive, got {r}")));
    }
    let mass = mesh.lumped_mass();
    let weights: Vec<f64> = u.iter().zip(mass).map(|(v, m)| v.abs() * m).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 1e-14 * mesh.total_area()) {
        return Err(Error::ZeroMass);
    }
    let half = 0.5 * r;
    let sums = execution.map_range(mesh.vertex_count(), |p| {
        let d = geodesic_distance_bounded(mesh, p, half);
        d.iter().zip(&weights).filter(|(x, _)| **x <= half).map(|(_, w)| w).sum::<f64>()
    });
    let (vertex, best) = sums
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    Ok(Concentration { vertex, fraction: (best / total).min(1.0) })
}

/// Largest geodesic distance between two vertices where `indicator > 1/2`.
pub fn region_diameter(mesh: &SurfaceMesh, indicator: &[f64], execution: Execution) -> Result<f64> {
    let support: Vec<usize> = (0..indicator.len()).filter(|&i| indicator[i] > 0.5).collect();
    if support.is_empty() {
        return Err(Error::InvalidParameter("region is empty".into()));
    }
    let far = execution.map(&support, |&s| {
        let d = geodesic_distance(mesh, s);
        support.iter().map(|&t| d[t]).fold(0.0, f64::max)
    });
    Ok(far.into_iter().fold(0.0, f64::max))
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
    fn unit_vector_picks_vertex() {
        let m = sphere(2);
        let mut u = vec![0.0; m.vertex_count()];
        u[17] = 1.0;
        let b = barycenter(&m, &u).unwrap();
        assert!(dist3(b, m.positions()[17]) <= 1e-15);
    }

    #[test]
    fn constant_field_centers() {
        let m = sphere(3);
        let b = barycenter(&m, &vec![0.3; m.vertex_count()]).unwrap();
        assert!(b.iter().all(|x| x.abs() < 1e-3));
    }

    #[test]
    fn zero_field_is_rejected() {
        let m = sphere(1);
        assert!(matches!(barycenter(&m, &vec![0.0; m.vertex_count()]), Err(Error::ZeroMass)));
    }

    #[test]
    fn projection_of_mesh_vertex_is_itself() {
        let m = sphere(2);
        let p = m.positions()[5];
        let r = project_to_mesh(&m, p);
        assert_eq!(r.distance_to_mesh, 0.0);
        assert_eq!(r.mesh_point, p);
        assert_eq!(r.nearest_vertex, 5);
        assert!(!r.ambiguous);
    }

    #[test]
    fn interior_point_projects_radially() {
        let m = sphere(4);
        let r = project_to_mesh(&m, [0.0, 0.0, 0.5]);
        // faces around the pole sit slightly inside the sphere
        let h = m.mean_edge_length();
        assert!(dist3(r.mesh_point, [0.0, 0.0, 1.0]) < h);
        assert_eq!(r.nearest_vertex, 0);
        assert!((r.distance_to_mesh - 0.5).abs() < h * h);
    }

    #[test]
    fn center_is_ambiguous() {
        let m = sphere(2);
        let r = project_to_mesh(&m, [0.0, 0.0, 0.0]);
        assert!(r.ambiguous);
        assert!((r.distance_to_mesh - 1.0).abs() < 0.05);
    }

    #[test]
    fn threshold_rejects_constant() {
        let m = sphere(1);
        assert!(threshold_set(&m, &vec![0.5; m.vertex_count()], 0.5).is_err());
    }

    #[test]
    fn threshold_volume_and_complement_fill_mesh() {
        let m = sphere(3);
        let u: Vec<f64> = m.positions().iter().map(|p| p[2]).collect();
        let t = threshold_set(&m, &u, 0.3).unwrap();
        let below = crate::geom::sublevel_area(&m, &u, 0.3);
        assert!((t.volume + below - m.total_area()).abs() < 1e-12);
    }

    #[test]
    fn concentrated_indicator_is_fully_captured() {
        let m = sphere(3);
        let d = geodesic_distance(&m, 7);
        let u: Vec<f64> = d.iter().map(|&x| if x < 0.2 { 1.0 } else { 0.0 }).collect();
        let r = 1.0;
        let c = concentration(&m, &u, r, Execution::Sequential).unwrap();
        assert_eq!(c.fraction, 1.0);
        assert!(d[c.vertex] <= r / 4.0);
    }

    #[test]
    fn uniform_field_is_not_concentrated() {
        let m = sphere(3);
        let c = concentration(&m, &vec![1.0; m.vertex_count()], 1.0, Execution::Sequential).unwrap();
        // cap of geodesic radius 1/2 on the unit sphere
        let cap = 2.0 * std::f64::consts::PI * (1.0 - 0.5f64.cos()) / m.total_area();
        assert!((c.fraction - cap).abs() < 0.25 * cap, "{} vs {cap}", c.fraction);
    }

    #[test]
    fn single_vertex_region_has_zero_diameter() {
        let m = sphere(2);
        let mut ind = vec![0.0; m.vertex_count()];
        ind[3] = 1.0;
        assert_eq!(region_diameter(&m, &ind, Execution::Sequential).unwrap(), 0.0);
        assert!(region_diameter(&m, &vec![0.0; m.vertex_count()], Execution::Sequential).is_err());
    }

    #[test]
    fn homotopy_on_small_sphere() {
        let m = sphere(3);
        let w = DoubleWell::quartic_standard();
        let rep = homotopy_audit(&m, &w, 0.1, 1.0, &[0, 10, 50], Execution::Sequential).unwrap();
        assert_eq!(rep.pass, Some(true));
        assert!(rep.max_distance < 0.1);
        let bare = m.clone().with_inj_estimate(None);
        assert_eq!(homotopy_audit(&bare, &w, 0.1, 1.0, &[0], Execution::Sequential).unwrap().pass, None);
    }
}
