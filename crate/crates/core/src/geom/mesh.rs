use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::geodesic::{GeodesicGraph, STEINER_PER_EDGE};
use super::{cross, dist3, norm3, sub, Vec3};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Where a mesh came from. Drives the injectivity-radius estimate and the
/// topology card used by the multiplicity layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshFamily {
    Sphere,
    Ellipsoid,
    Torus,
    /// Loaded from a file; the genus has to be declared by the caller.
    External { genus: Option<u32> },
}

/// A closed, consistently oriented triangulated surface in 3-space with its
/// lumped mass and cotangent stiffness. Immutable once built.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    positions: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    lumped_mass: Vec<f64>,
    stiffness: CsrMatrix,
    neighbors: Vec<Vec<(usize, f64)>>,
    triangle_areas: Vec<f64>,
    total_area: f64,
    family: MeshFamily,
    inj_estimate: Option<f64>,
    geodesic_graph: OnceLock<GeodesicGraph>,
}

impl SurfaceMesh {
    /// Validates the topology and assembles the discrete operators.
    pub fn new(
        positions: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        family: MeshFamily,
        inj_estimate: Option<f64>,
    ) -> Result<Self> {
        if positions.is_empty() || triangles.is_empty() {
            return Err(Error::NotClosedManifold("empty mesh".into()));
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite vertex coordinate".into()));
        }
        let n = positions.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::NotClosedManifold(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::NotClosedManifold(format!("triangle {t} repeats a vertex")));
            }
        }
        check_closed_oriented(&triangles)?;
        let neighbors = edge_graph(&positions, &triangles);
        check_connected(&neighbors)?;
        if let Some(inj) = inj_estimate {
            if !(inj > 0.0) {
                return Err(Error::InvalidParameter(format!("injectivity radius must be positive, got {inj}")));
            }
        }

        let (lumped_mass, stiffness) = super::operators::assemble(&positions, &triangles)?;
        let triangle_areas: Vec<f64> = triangles
            .iter()
            .map(|t| triangle_area(positions[t[0]], positions[t[1]], positions[t[2]]))
            .collect();
        let total_area = triangle_areas.iter().sum();
        Ok(Self {
            positions,
            triangles,
            lumped_mass,
            stiffness,
            neighbors,
            triangle_areas,
            total_area,
            family,
            inj_estimate,
            geodesic_graph: OnceLock::new(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped_mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Edge-graph adjacency with edge lengths.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.neighbors[v]
    }

    pub fn triangle_areas(&self) -> &[f64] {
        &self.triangle_areas
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn family(&self) -> MeshFamily {
        self.family
    }

    pub fn inj_estimate(&self) -> Option<f64> {
        self.inj_estimate
    }

    /// Same geometry, different injectivity-radius estimate.
    pub fn with_inj_estimate(mut self, inj: Option<f64>) -> Self {
        self.inj_estimate = inj;
        self
    }

    pub fn with_family(mut self, family: MeshFamily) -> Self {
        self.family = family;
        self
    }

    pub fn edge_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |(j, _)| *j > i).map(|(_, l)| *l))
    }

    pub fn mean_edge_length(&self) -> f64 {
        let (s, c) = self.edge_lengths().fold((0.0, 0usize), |(s, c), l| (s + l, c + 1));
        s / c as f64
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edge_lengths().fold(0.0, f64::max)
    }

    /// Steiner graph for geodesic distances, built on first use.
    pub(crate) fn geodesic_graph(&self) -> &GeodesicGraph {
        self.geodesic_graph
            .get_or_init(|| GeodesicGraph::build(&self.positions, &self.triangles, STEINER_PER_EDGE))
    }

    /// Largest Euclidean norm of a vertex position.
    pub fn max_radius(&self) -> f64 {
        self.positions.iter().map(|p| norm3(*p)).fold(0.0, f64::max)
    }
}

pub(crate) fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * norm3(cross(sub(b, a), sub(c, a)))
}

fn check_closed_oriented(triangles: &[[usize; 3]]) -> Result<()> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 3);
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let e = (tri[k], tri[(k + 1) % 3]);
            if let Some(prev) = directed.insert(e, t) {
                return Err(Error::NotClosedManifold(format!(
                    "directed edge {:?} used by triangles {prev} and {t} (inconsistent orientation or non-manifold edge)",
                    e
                )));
            }
        }
    }
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) {
            return Err(Error::NotClosedManifold(format!("edge ({a}, {b}) lies on a boundary")));
        }
    }
    Ok(())
}

fn edge_graph(positions: &[Vec3], triangles: &[[usize; 3]]) -> Vec<Vec<(usize, f64)>> {
    let mut nb: Vec<Vec<(usize, f64)>> = vec![Vec::new(); positions.len()];
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            // each undirected edge shows up once per orientation; keep a < b's copy
            if a < b {
                let l = dist3(positions[a], positions[b]);
                nb[a].push((b, l));
                nb[b].push((a, l));
            }
        }
    }
    for list in &mut nb {
        list.sort_unstable_by_key(|&(j, _)| j);
    }
    nb
}

fn check_connected(neighbors: &[Vec<(usize, f64)>]) -> Result<()> {
    let n = neighbors.len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &(w, _) in &neighbors[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    if count != n {
        return Err(Error::NotClosedManifold(format!(
            "mesh has {} unreachable vertices (disconnected or unreferenced)",
            n - count
        )));
    }
    Ok(())
}
