use super::mesh::triangle_area;
use super::{cross, dot3, norm3, sub, SurfaceMesh, Vec3};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Barycentric lumped mass and cotangent stiffness of `mesh`.
///
/// `uᵀ S u` is the P1 Dirichlet energy `∫|∇u|²`; `Σ mᵢ` is the surface area.
pub fn assemble_operators(mesh: &SurfaceMesh) -> Result<(Vec<f64>, CsrMatrix)> {
    assemble(mesh.positions(), mesh.triangles())
}

pub(crate) fn assemble(positions: &[Vec3], triangles: &[[usize; 3]]) -> Result<(Vec<f64>, CsrMatrix)> {
    let areas: Vec<f64> =
        triangles.iter().map(|t| triangle_area(positions[t[0]], positions[t[1]], positions[t[2]])).collect();
    let mean = areas.iter().sum::<f64>() / areas.len() as f64;
    if let Some((index, &area)) = areas.iter().enumerate().find(|(_, &a)| !(a > 1e-14 * mean)) {
        return Err(Error::DegenerateTriangle { index, area, mean });
    }

    let n = positions.len();
    let mut mass = vec![0.0; n];
    let mut triplets = Vec::with_capacity(triangles.len() * 9);
    for (tri, &area) in triangles.iter().zip(&areas) {
        for &v in tri {
            mass[v] += area / 3.0;
        }
        for k in 0..3 {
            // the angle at `o` is opposite the edge (i, j)
            let (i, j, o) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let e1 = sub(positions[i], positions[o]);
            let e2 = sub(positions[j], positions[o]);
            let cot = dot3(e1, e2) / norm3(cross(e1, e2));
            let w = 0.5 * cot;
            triplets.push((i, j, -w));
            triplets.push((j, i, -w));
            triplets.push((i, i, w));
            triplets.push((j, j, w));
        }
    }
    Ok((mass, CsrMatrix::from_triplets(n, triplets)))
}
