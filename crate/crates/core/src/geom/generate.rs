use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{dot3, norm3, scale, sub, cross, MeshFamily, SurfaceMesh, Vec3};
use crate::error::{Error, Result};

/// Built-in surface families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MeshSpec {
    /// Unit sphere by recursive midpoint subdivision of an icosahedron.
    Icosphere { subdivisions: u32 },
    /// Icosphere scaled by the semi-axes.
    Ellipsoid { a: f64, b: f64, c: f64, subdivisions: u32 },
    /// Torus of revolution about z, `nu` samples around the core circle and `nv` around the tube.
    Torus { major: f64, minor: f64, nu: usize, nv: usize },
}

pub fn generate_mesh(spec: &MeshSpec) -> Result<SurfaceMesh> {
    match *spec {
        MeshSpec::Icosphere { subdivisions } => {
            let (p, t) = icosphere(subdivisions)?;
            SurfaceMesh::new(p, t, MeshFamily::Sphere, Some(PI))
        }
        MeshSpec::Ellipsoid { a, b, c, subdivisions } => {
            if !(a > 0.0 && b > 0.0 && c > 0.0) || ![a, b, c].iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidParameter(format!("ellipsoid axes must be positive, got ({a}, {b}, {c})")));
            }
            let (p, t) = icosphere(subdivisions)?;
            let p = p.into_iter().map(|v| [a * v[0], b * v[1], c * v[2]]).collect();
            let mut axes = [a, b, c];
            axes.sort_by(f64::total_cmp);
            // Klingenberg: inj ≥ π/√K_max, and K_max = (largest axis)²/(product of the other two)²
            let inj = PI * axes[0] * axes[1] / axes[2];
            SurfaceMesh::new(p, t, MeshFamily::Ellipsoid, Some(inj))
        }
        MeshSpec::Torus { major, minor, nu, nv } => {
            if !(minor > 0.0 && major > minor) || !major.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "torus needs 0 < r < R, got R = {major}, r = {minor}"
                )));
            }
            if nu < 8 || nv < 8 {
                return Err(Error::InvalidParameter(format!("torus resolution must be at least 8x8, got {nu}x{nv}")));
            }
            let (p, t) = torus(major, minor, nu, nv);
            SurfaceMesh::new(p, t, MeshFamily::Torus, Some(PI * minor))
        }
    }
}

/// Icosahedron with vertices at the poles: vertex 0 is (0,0,1), vertex 1 is (0,0,-1).
fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let z = 1.0 / 5f64.sqrt();
    let rho = 2.0 / 5f64.sqrt();
    let mut p = vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    for k in 0..5 {
        let a = 2.0 * PI * k as f64 / 5.0;
        p.push([rho * a.cos(), rho * a.sin(), z]);
    }
    for k in 0..5 {
        let a = 2.0 * PI * k as f64 / 5.0 + PI / 5.0;
        p.push([rho * a.cos(), rho * a.sin(), -z]);
    }
    let up = |k: usize| 2 + k % 5;
    let lo = |k: usize| 7 + k % 5;
    let mut t = Vec::with_capacity(20);
    for k in 0..5 {
        t.push([0, up(k), up(k + 1)]);
        t.push([up(k), lo(k), up(k + 1)]);
        t.push([up(k + 1), lo(k), lo(k + 1)]);
        t.push([1, lo(k + 1), lo(k)]);
    }
    (p, t)
}

fn icosphere(subdivisions: u32) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    if !(1..=8).contains(&subdivisions) {
        return Err(Error::InvalidParameter(format!("icosphere subdivisions must be in 1..=8, got {subdivisions}")));
    }
    let (mut p, mut t) = icosahedron();
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(t.len() * 4);
        let mut mid = |a: usize, b: usize, p: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let m = scale(super::add(p[a], p[b]), 0.5);
                p.push(scale(m, 1.0 / norm3(m)));
                p.len() - 1
            })
        };
        for &[a, b, c] in &t {
            let ab = mid(a, b, &mut p);
            let bc = mid(b, c, &mut p);
            let ca = mid(c, a, &mut p);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        t = next;
    }
    orient_outward(&p, &mut t, [0.0; 3]);
    Ok((p, t))
}

fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut p = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let th = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let ph = 2.0 * PI * j as f64 / nv as f64;
            let rr = major + minor * ph.cos();
            p.push([rr * th.cos(), rr * th.sin(), minor * ph.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut t = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    // outward = away from the core circle
    let first = t[0];
    let n = cross(sub(p[first[1]], p[first[0]]), sub(p[first[2]], p[first[0]]));
    let v = p[first[0]];
    let rho = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let core = [major * v[0] / rho, major * v[1] / rho, 0.0];
    if dot3(n, sub(v, core)) < 0.0 {
        t.iter_mut().for_each(|tri| tri.swap(1, 2));
    }
    (p, t)
}

/// Flips triangles whose normal points toward `center` (star-shaped surfaces only).
fn orient_outward(p: &[Vec3], t: &mut [[usize; 3]], center: Vec3) {
    for tri in t.iter_mut() {
        let n = cross(sub(p[tri[1]], p[tri[0]]), sub(p[tri[2]], p[tri[0]]));
        if dot3(n, sub(p[tri[0]], center)) < 0.0 {
            tri.swap(1, 2);
        }
    }
}
