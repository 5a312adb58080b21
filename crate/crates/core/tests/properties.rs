use std::sync::OnceLock;

use photolab_core::barycenter::{barycenter, project_to_mesh};
use photolab_core::energy::{energy, gradient, hessian_symmetry_defect, solve_constrained, FlowConfig};
use photolab_core::geom::{
    ball_volume, generate_mesh, geodesic_distance, sublevel_area, superlevel_area, MeshFamily, MeshSpec, SurfaceMesh,
};
use photolab_core::photography::photograph;
use photolab_core::potential::{sigma, truncate, DoubleWell, Potential};
use photolab_core::profile::build_profile;
use photolab_core::integrate;
use proptest::prelude::*;

fn sphere3() -> &'static SurfaceMesh {
    static M: OnceLock<SurfaceMesh> = OnceLock::new();
    M.get_or_init(|| generate_mesh(&MeshSpec::Icosphere { subdivisions: 3 }).unwrap())
}

fn torus() -> &'static SurfaceMesh {
    static M: OnceLock<SurfaceMesh> = OnceLock::new();
    M.get_or_init(|| generate_mesh(&MeshSpec::Torus { major: 2.0, minor: 0.7, nu: 20, nv: 10 }).unwrap())
}

fn ellipsoid() -> &'static SurfaceMesh {
    static M: OnceLock<SurfaceMesh> = OnceLock::new();
    M.get_or_init(|| generate_mesh(&MeshSpec::Ellipsoid { a: 1.0, b: 0.8, c: 1.3, subdivisions: 2 }).unwrap())
}

fn meshes() -> [&'static SurfaceMesh; 3] {
    [sphere3(), torus(), ellipsoid()]
}

fn field(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn euclid(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stiffness_annihilates_constants(seed in any::<u64>(), which in 0usize..3) {
        let m = meshes()[which];
        let u = field(seed, m.vertex_count(), -1.0, 1.0);
        let s = m.stiffness();
        let su = s.mul_vec(&u);
        let norm_u = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(su.iter().sum::<f64>().abs() <= 1e-10 * s.norm() * norm_u);
        prop_assert!(s.max_asymmetry() <= 1e-14 * s.norm());
    }

    #[test]
    fn ball_volume_is_monotone(center in 0usize..642) {
        let m = sphere3();
        let d = geodesic_distance(m, center);
        let rmax = d.max() * 1.01;
        let mut prev = 0.0;
        for k in 0..1000 {
            let v = ball_volume(m, &d, rmax * k as f64 / 999.0);
            prop_assert!(v >= prev);
            prev = v;
        }
        prop_assert!((prev - m.total_area()).abs() <= 1e-12 * m.total_area());
    }

    #[test]
    fn distance_is_symmetric(a in 0usize..200, b in 0usize..200) {
        let m = torus();
        let da = geodesic_distance(m, a);
        let db = geodesic_distance(m, b);
        prop_assert!((da[b] - db[a]).abs() <= 1e-12);
        prop_assert_eq!(da[a], 0.0);
    }

    #[test]
    fn sigma_is_additive(a in -1.5f64..0.5, gap1 in 0.01f64..1.0, gap2 in 0.01f64..1.0) {
        let w = DoubleWell::quartic_standard();
        let (b, c) = (a + gap1, a + gap1 + gap2);
        let whole = sigma(&w, a, c).unwrap();
        let parts = sigma(&w, a, b).unwrap() + sigma(&w, b, c).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-9);
    }

    #[test]
    fn truncation_junction_is_third_order(eps in 0.02f64..1.0, lambda in 1.0f64..50.0) {
        let w = DoubleWell::quartic_standard();
        let t = truncate(&w, eps, lambda, 1.5).unwrap();
        // quartic W''' = 24s − 12, so the one-sided Taylor remainder is W'''(ŝ)h³/6
        for (s, dir) in [(t.s_plus, 1.0), (t.s_minus, -1.0)] {
            let bound = (24.0 * s - 12.0).abs() / 6.0 + 4.0 * 1e-2 + 1e-6;
            for h in [1e-2, 1e-3, 1e-4] {
                let x = s + dir * h;
                let ratio = (t.value(x) - w.value(x)).abs() / h.powi(3);
                prop_assert!(ratio <= bound * 1.05, "s {s} h {h} ratio {ratio} bound {bound}");
            }
            prop_assert_eq!(t.d1(s), w.d1(s));
        }
        prop_assert!(t.verify_barrier(eps, lambda, 200, 10.0).holds());
    }

    #[test]
    fn profile_respects_width_bound(eps in 1e-4f64..1.0) {
        let w = DoubleWell::quartic_standard();
        let p = build_profile(&w, eps, 0.0, 1.0, 256).unwrap();
        prop_assert!(p.eta > 0.0 && p.eta <= eps.powf(0.25));
        prop_assert!(p.values().windows(2).all(|x| x[1] > x[0]));
        prop_assert_eq!(p.eval(-1.0), 0.0);
        prop_assert_eq!(p.eval(p.eta + 1.0), 1.0);
    }

    #[test]
    fn barycenter_is_affine_equivariant(
        seed in any::<u64>(),
        angle in 0.0f64..std::f64::consts::TAU,
        scale in 0.5f64..2.0,
        shift in prop::array::uniform3(-2.0f64..2.0),
    ) {
        let m = ellipsoid();
        let u = field(seed, m.vertex_count(), 0.1, 1.0);
        let (c, s) = (angle.cos(), angle.sin());
        let map = |p: [f64; 3]| [
            scale * (c * p[0] - s * p[1]) + shift[0],
            scale * (s * p[0] + c * p[1]) + shift[1],
            scale * p[2] + shift[2],
        ];
        let moved = SurfaceMesh::new(
            m.positions().iter().map(|&p| map(p)).collect(),
            m.triangles().to_vec(),
            MeshFamily::Ellipsoid,
            None,
        ).unwrap();
        let b0 = barycenter(m, &u).unwrap();
        let b1 = barycenter(&moved, &u).unwrap();
        prop_assert!(euclid(map(b0), b1) <= 1e-10 * (1.0 + scale));
    }

    #[test]
    fn barycenter_is_continuous(seed in any::<u64>(), size in 1e-8f64..1e-3) {
        let m = sphere3();
        let u = field(seed, m.vertex_count(), 0.2, 1.0);
        let du = field(seed ^ 0xabc, m.vertex_count(), -size, size);
        let v: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
        let shift = euclid(barycenter(m, &u).unwrap(), barycenter(m, &v).unwrap());
        // |Δβ| ≤ max|x|·(‖Δu‖₁ + |Δ∫u|)/∫u ≤ 2‖Δu‖_∞|M|/∫u
        let bound = 2.0 * size * m.total_area() / integrate(m.lumped_mass(), &u);
        prop_assert!(shift <= bound);
    }

    #[test]
    fn projection_is_idempotent(p in prop::array::uniform3(-3.0f64..3.0), which in 0usize..3) {
        let m = meshes()[which];
        let first = project_to_mesh(m, p);
        let second = project_to_mesh(m, first.mesh_point);
        prop_assert!(euclid(first.mesh_point, second.mesh_point) <= 1e-9);
        prop_assert!(second.distance_to_mesh <= 1e-9);
    }

    #[test]
    fn level_sets_partition_the_surface(seed in any::<u64>(), level in -0.9f64..0.9, which in 0usize..3) {
        let m = meshes()[which];
        let u = field(seed, m.vertex_count(), -1.0, 1.0);
        let total = sublevel_area(m, &u, level) + superlevel_area(m, &u, level);
        prop_assert!((total - m.total_area()).abs() <= 1e-12 * m.total_area());
    }

    #[test]
    fn hessian_is_symmetric(seed in any::<u64>(), eps in 0.02f64..1.0) {
        let m = torus();
        let w = DoubleWell::quartic_standard();
        let n = m.vertex_count();
        let u = field(seed, n, -0.2, 1.2);
        let v = field(seed.wrapping_add(1), n, -1.0, 1.0);
        let z = field(seed.wrapping_add(2), n, -1.0, 1.0);
        let defect = hessian_symmetry_defect(m, &w, eps, &u, &v, &z);
        prop_assert!(defect.abs() <= 1e-10 * (1.0 + 1.0 / eps) * n as f64);
    }
}

/// Directional derivative of `E_ε` against the mass-weighted gradient, on a
/// 200-vertex torus with three seeds.
#[test]
fn gradient_matches_finite_differences() {
    let m = torus();
    assert_eq!(m.vertex_count(), 200);
    let w = DoubleWell::quartic_standard();
    let mass = m.lumped_mass();
    let eps = 0.1;
    for seed in [1u64, 2, 3] {
        let u = field(seed, 200, -0.1, 1.1);
        let dir = field(seed + 100, 200, -1.0, 1.0);
        let g = gradient(m, &w, eps, &u);
        let analytic: f64 = (0..200).map(|i| mass[i] * g.raw[i] * dir[i]).sum();
        let h = 1e-5;
        let at = |t: f64| {
            let x: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            energy(m, &w, eps, &x)
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let rel = (fd - analytic).abs() / analytic.abs();
        assert!(rel <= 1e-5, "seed {seed}: fd {fd} analytic {analytic} rel {rel}");
    }
}

#[test]
fn flow_conserves_volume_at_every_step() {
    let w = DoubleWell::quartic_standard();
    for m in [sphere3(), torus()] {
        let v = 0.3 * m.total_area();
        let u = photograph(m, &w, 0.15, v, 0).unwrap().field.into_vec();
        let cfg = FlowConfig { record_trajectory: true, max_steps: 400, ..FlowConfig::default() };
        let cp = solve_constrained(m, &w, 0.15, v, &u, &cfg).unwrap();
        assert!(!cp.trajectory.is_empty());
        for p in &cp.trajectory {
            assert!((p.volume - v).abs() <= 1e-8 * v, "step {} volume {}", p.step, p.volume);
        }
        assert!(cp.volume_drift <= 1e-8 * v);
        let energies: Vec<f64> = cp.trajectory.iter().map(|p| p.energy).collect();
        assert!(energies.windows(2).all(|e| e[1] <= e[0] + 1e-12 * e[0].abs()));
    }
}
