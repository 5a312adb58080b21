//! Measures of sub- and level sets of piecewise-linear vertex fields.
//!
//! Each triangle carries the linear interpolant of its three vertex values,
//! so `ℓ ↦ area{f < ℓ}` is continuous and nondecreasing, which keeps the
//! bisections built on top of it well posed.

use super::{dist3, lerp, SurfaceMesh, Vec3};
use crate::error::{Error, Result};
use crate::field::ScalarField;

fn sorted(values: [f64; 3]) -> [usize; 3] {
    let mut idx = [0, 1, 2];
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

/// Area of `{f < level}` inside one triangle of area `area`.
pub fn triangle_sublevel_area(area: f64, values: [f64; 3], level: f64) -> f64 {
    let [a, b, c] = sorted(values);
    let (fa, fb, fc) = (values[a], values[b], values[c]);
    if level <= fa {
        0.0
    } else if level >= fc {
        area
    } else if level <= fb {
        area * (level - fa) / (fb - fa) * (level - fa) / (fc - fa)
    } else {
        area - area * (fc - level) / (fc - fb) * (fc - level) / (fc - fa)
    }
}

fn triangle_level_segment(p: [Vec3; 3], values: [f64; 3], level: f64) -> f64 {
    let [a, b, c] = sorted(values);
    let (fa, fb, fc) = (values[a], values[b], values[c]);
    if !(level > fa && level < fc) {
        return 0.0;
    }
    let on_ac = lerp(p[a], p[c], (level - fa) / (fc - fa));
    let other = if level <= fb {
        lerp(p[a], p[b], (level - fa) / (fb - fa))
    } else {
        lerp(p[b], p[c], (level - fb) / (fc - fb))
    };
    dist3(on_ac, other)
}

fn tri_values(f: &[f64], t: &[usize; 3]) -> [f64; 3] {
    [f[t[0]], f[t[1]], f[t[2]]]
}

/// Area of `{f < level}` for the piecewise-linear interpolant of `f`.
pub fn sublevel_area(mesh: &SurfaceMesh, f: &[f64], level: f64) -> f64 {
    mesh.triangles()
        .iter()
        .zip(mesh.triangle_areas())
        .map(|(t, &a)| triangle_sublevel_area(a, tri_values(f, t), level))
        .sum()
}

/// Area of `{f > level}`; adds to [`sublevel_area`] to give the total area per triangle.
pub fn superlevel_area(mesh: &SurfaceMesh, f: &[f64], level: f64) -> f64 {
    mesh.triangles()
        .iter()
        .zip(mesh.triangle_areas())
        .map(|(t, &a)| a - triangle_sublevel_area(a, tri_values(f, t), level))
        .sum()
}

/// Length of the level curve `{f = level}`.
pub fn level_length(mesh: &SurfaceMesh, f: &[f64], level: f64) -> f64 {
    let p = mesh.positions();
    mesh.triangles()
        .iter()
        .map(|t| triangle_level_segment([p[t[0]], p[t[1]], p[t[2]]], tri_values(f, t), level))
        .sum()
}

/// Interpolated area of the geodesic ball `{d < r}` for a distance field `d`.
pub fn ball_volume(mesh: &SurfaceMesh, distance: &[f64], r: f64) -> f64 {
    sublevel_area(mesh, distance, r)
}

/// Radius of the ball about `center` enclosing area `volume`, by bisection on
/// the interpolated ball volume. Returns the radius and the distance field used.
pub fn ball_radius_for_volume(mesh: &SurfaceMesh, center: usize, volume: f64) -> Result<(f64, ScalarField)> {
    let total = mesh.total_area();
    if !(volume > 0.0 && volume < total) {
        return Err(Error::OutOfRange { value: volume, lo: 0.0, hi: total });
    }
    let d = super::geodesic_distance(mesh, center);
    let r = radius_for_volume(mesh, &d, volume);
    Ok((r, d))
}

pub(crate) fn radius_for_volume(mesh: &SurfaceMesh, d: &[f64], volume: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = d.iter().copied().fold(0.0, f64::max);
    let tol = 1e-10 * volume;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = ball_volume(mesh, d, mid);
        if (v - volume).abs() <= tol {
            return mid;
        }
        if v < volume {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Length of the geodesic circle `{d = r}` about `center`.
pub fn ball_perimeter(mesh: &SurfaceMesh, center: usize, r: f64) -> f64 {
    let d = super::geodesic_distance(mesh, center);
    level_length(mesh, &d, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_area_fraction_is_continuous_and_monotone() {
        let vals = [0.2, -0.5, 1.3];
        let mut prev = 0.0;
        for k in 0..=2000 {
            let l = -1.0 + 3.0 * k as f64 / 2000.0;
            let a = triangle_sublevel_area(2.0, vals, l);
            assert!(a >= prev - 1e-15);
            assert!((a - prev).abs() < 0.02);
            prev = a;
        }
        assert_eq!(prev, 2.0);
    }

    #[test]
    fn level_segment_of_right_triangle() {
        let p = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        // f = x + y; level 0.5 cuts from (0.5,0) to (0,0.5)
        let len = triangle_level_segment(p, [0.0, 1.0, 1.0], 0.5);
        assert!((len - 0.5f64.hypot(0.5)).abs() < 1e-15);
        assert!((triangle_sublevel_area(0.5, [0.0, 1.0, 1.0], 0.5) - 0.125).abs() < 1e-15);
    }
}
