//! Mesh kernel: closed triangulated surfaces, their discrete operators,
//! graph geodesics, and interpolated level-set measures (geodesic balls,
//! thresholded regions, the empirical isoperimetric profile).

mod generate;
mod geodesic;
mod io;
mod level;
mod mesh;
mod operators;

pub use generate::{generate_mesh, MeshSpec};
pub use geodesic::{edge_path_distance, geodesic_distance, geodesic_distance_bounded, multi_source_distance};
pub use io::{read_mesh_file, read_obj, read_off};
pub use level::{
    ball_perimeter, ball_radius_for_volume, ball_volume, level_length, sublevel_area,
    superlevel_area, triangle_sublevel_area,
};
pub use mesh::{MeshFamily, SurfaceMesh};
pub(crate) use mesh::triangle_area;
pub use operators::assemble_operators;

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub(crate) fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

#[inline]
pub(crate) fn dist3(a: Vec3, b: Vec3) -> f64 {
    norm3(sub(a, b))
}

#[inline]
pub(crate) fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    add(a, scale(sub(b, a), t))
}
