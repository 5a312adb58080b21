//! Numerical Morse index of a constrained critical point.
//!
//! The second variation on `{∫v = 0}` is `H = εM⁻¹S + diag(W''(u))/ε`. In the
//! coordinates `y = M^{1/2} v` it becomes the symmetric
//! `Ĥ = εM^{-1/2}SM^{-1/2} + diag(W''(u))/ε`, and the constraint becomes
//! `y ⊥ M^{1/2}𝟙`. The lowest part of the spectrum is found by block Krylov
//! iteration on the shift-inverted operator `(PĤP + σ)⁻¹`, where `P`
//! deflates the constant direction and `σ` makes the shifted operator
//! positive definite, followed by Rayleigh–Ritz and a residual check against
//! `Ĥ` itself.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::dot;
use crate::geom::SurfaceMesh;
use crate::par::Execution;
use crate::potential::Potential;
use crate::sparse::pcg;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenConfig {
    pub block: usize,
    pub max_basis: usize,
    /// Ritz residual `‖Ĥx − θx‖` accepted, relative to `max(1, |θ|)`.
    pub residual_tol: f64,
    /// Eigenvalues inside `±tol_eig` count as zero; `None` means `1e-8/ε`.
    pub tol_eig: Option<f64>,
    pub seed: u64,
    /// Fan-out for the independent solves of one Krylov block.
    pub execution: Execution,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { block: 8, max_basis: 1200, residual_tol: 1e-7, tol_eig: None, seed: 0x5eed, execution: Execution::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseIndex {
    /// Number of eigenvalues below `−tol_eig` among those computed.
    pub index: usize,
    /// `true` when every computed eigenvalue is negative, so the true index may be larger.
    pub saturated: bool,
    /// No computed eigenvalue within `±tol_eig` of zero.
    pub nondegenerate: bool,
    pub tol_eig: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub max_residual: f64,
    pub basis_size: usize,
}

struct Hessian<'a> {
    mesh: &'a SurfaceMesh,
    inv_sqrt_mass: Vec<f64>,
    potential_diag: Vec<f64>,
    constant: Vec<f64>,
    epsilon: f64,
}

impl<'a> Hessian<'a> {
    fn new<P: Potential>(mesh: &'a SurfaceMesh, w: &P, epsilon: f64, u: &[f64]) -> Self {
        let mass = mesh.lumped_mass();
        let inv_sqrt_mass = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let potential_diag = u.iter().map(|&x| w.d2(x) / epsilon).collect();
        let norm = mesh.total_area().sqrt();
        let constant = mass.iter().map(|m| m.sqrt() / norm).collect();
        Self { mesh, inv_sqrt_mass, potential_diag, constant, epsilon }
    }

    fn project(&self, y: &mut [f64]) {
        let c = dot(&self.constant, y);
        y.iter_mut().zip(&self.constant).for_each(|(yi, qi)| *yi -= c * qi);
    }

    /// `Ĥ y` (no projection).
    fn apply(&self, y: &[f64], out: &mut [f64]) {
        let x: Vec<f64> = y.iter().zip(&self.inv_sqrt_mass).map(|(a, b)| a * b).collect();
        self.mesh.stiffness().mul_vec_into(&x, out);
        for i in 0..y.len() {
            out[i] = self.epsilon * out[i] * self.inv_sqrt_mass[i] + self.potential_diag[i] * y[i];
        }
    }

    /// `PĤP y + σ y` for `y ⊥ constant`.
    fn apply_shifted(&self, y: &[f64], out: &mut [f64], sigma: f64) {
        let mut yp = y.to_vec();
        self.project(&mut yp);
        self.apply(&yp, out);
        self.project(out);
        out.iter_mut().zip(&yp).for_each(|(o, v)| *o += sigma * v);
    }

    /// Diagonal of `Ĥ`.
    fn diagonal(&self) -> Vec<f64> {
        let s = self.mesh.stiffness().diagonal();
        (0..s.len())
            .map(|i| self.epsilon * s[i] * self.inv_sqrt_mass[i] * self.inv_sqrt_mass[i] + self.potential_diag[i])
            .collect()
    }
}

struct SplitMix(u64);

impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }
}

/// Orthonormalizes `v` against `basis` (two Gram–Schmidt passes); returns
/// `false` when nothing independent is left.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let before = dot(v, v).sqrt();
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
    }
    let after = dot(v, v).sqrt();
    if !(after > 1e-8 * before.max(f64::MIN_POSITIVE)) {
        return false;
    }
    v.iter_mut().for_each(|a| *a /= after);
    true
}

/// The `k_max` smallest eigenvalues of the constrained Hessian at `u` and the
/// count of negative ones.
pub fn morse_index<P: Potential>(
    mesh: &SurfaceMesh,
    w: &P,
    epsilon: f64,
    u: &[f64],
    k_max: usize,
    cfg: &EigenConfig,
) -> Result<MorseIndex> {
    let n = mesh.vertex_count();
    if k_max == 0 || k_max >= n || u.len() != n || !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("morse_index needs 0 < k_max < {n}, got {k_max}")));
    }
    let tol_eig = cfg.tol_eig.unwrap_or(1e-8 / epsilon);
    let h = Hessian::new(mesh, w, epsilon, u);

    // Gershgorin-free lower bound: λ_min(PĤP) ≥ min W''/ε since the stiffness part is PSD.
    let min_pot = h.potential_diag.iter().copied().fold(f64::INFINITY, f64::min);
    let sigma = (-min_pot).max(0.0) + 1.0 / epsilon.clamp(1e-300, 1.0) + 1.0;
    let precond: Vec<f64> = h.diagonal().iter().map(|d| 1.0 / (d + sigma).max(1e-300)).collect();

    let solve = |v: &[f64]| -> Result<Vec<f64>> {
        let mut rhs = v.to_vec();
        h.project(&mut rhs);
        let mut x = vec![0.0; n];
        pcg(
            |v, out| h.apply_shifted(v, out, sigma),
            |r, z| {
                z.iter_mut().zip(r).zip(&precond).for_each(|((zi, ri), pi)| *zi = ri * pi);
                h.project(z);
            },
            &rhs,
            &mut x,
            1e-11,
            20_000,
        )?;
        h.project(&mut x);
        Ok(x)
    };

    let mut rng = SplitMix(cfg.seed);
    let block = cfg.block.max(1);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut projected: Vec<Vec<f64>> = Vec::new();
    let mut next_check = k_max + block;
    let deflate = vec![h.constant.clone()];
    let mut frontier: Vec<Vec<f64>> = Vec::new();
    while frontier.len() < block {
        let mut v: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        if orthonormalize(&mut v, &deflate) && orthonormalize(&mut v, &frontier) {
            frontier.push(v);
        }
    }
    let want = k_max;
    let mut last_err = f64::INFINITY;
    loop {
        let solved = cfg.execution.map(&frontier, |v| solve(v));
        for (v, img) in frontier.drain(..).zip(solved) {
            images.push(img?);
            basis.push(v);
        }
        let k = basis.len();
        let rows = cfg.execution.map_range(k - projected.len(), |r| {
            let i = projected.len() + r;
            (0..=i).map(|j| 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]))).collect::<Vec<f64>>()
        });
        projected.extend(rows);
        let ready = k >= next_check;
        if ready {
            next_check = k + 4 * block;
        }
        if ready || k >= n - 1 || k >= cfg.max_basis {
            let t = DMatrix::from_fn(k, k, |i, j| if j <= i { projected[i][j] } else { projected[j][i] });
            let eig = SymmetricEigen::new(t);
            // largest μ of the inverse ↔ smallest λ = 1/μ − σ
            let mut order: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            if order.len() >= want {
                let mut values = Vec::with_capacity(want);
                let mut worst = 0.0f64;
                for &i in order.iter().take(want) {
                    let y = eig.eigenvectors.column(i);
                    let mut x = vec![0.0; n];
                    for (c, q) in y.iter().zip(&basis) {
                        x.iter_mut().zip(q).for_each(|(a, b)| *a += c * b);
                    }
                    let theta = 1.0 / eig.eigenvalues[i] - sigma;
                    let mut hx = vec![0.0; n];
                    h.apply_shifted(&x, &mut hx, 0.0);
                    let r = hx.iter().zip(&x).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
                    worst = worst.max(r / theta.abs().max(1.0));
                    values.push(theta);
                }
                last_err = worst;
                if worst <= cfg.residual_tol {
                    values.sort_by(f64::total_cmp);
                    let index = values.iter().filter(|&&l| l < -tol_eig).count();
                    let nondegenerate = values.iter().all(|l| l.abs() > tol_eig);
                    return Ok(MorseIndex {
                        index,
                        saturated: index == values.len(),
                        nondegenerate,
                        tol_eig,
                        eigenvalues: values,
                        max_residual: worst,
                        basis_size: k,
                    });
                }
            }
            if k >= cfg.max_basis || k >= n - 1 {
                return Err(Error::Eigensolver { residual: last_err, basis: k });
            }
        }
        // next block: images of the newest block, orthogonalized against everything
        let start = basis.len() - block.min(basis.len());
        let mut next = Vec::with_capacity(block);
        for img in &images[start..] {
            let mut v = img.clone();
            if orthonormalize(&mut v, &deflate) && orthonormalize(&mut v, &basis) && orthonormalize(&mut v, &next) {
                next.push(v);
            }
        }
        while next.len() < block {
            let mut v: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            if orthonormalize(&mut v, &deflate) && orthonormalize(&mut v, &basis) && orthonormalize(&mut v, &next) {
                next.push(v);
            }
        }
        frontier = next;
    }
}

/// Full spectrum of the constrained Hessian by dense diagonalization (the
/// constant direction removed). Reference for small meshes.
pub fn dense_constrained_spectrum<P: Potential>(mesh: &SurfaceMesh, w: &P, epsilon: f64, u: &[f64]) -> Vec<f64> {
    let n = mesh.vertex_count();
    let h = Hessian::new(mesh, w, epsilon, u);
    let mut dense = DMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[j] = 1.0;
        h.project(&mut e);
        h.apply(&e, &mut col);
        h.project(&mut col);
        for i in 0..n {
            dense[(i, j)] = col[i];
        }
    }
    let sym = 0.5 * (&dense + dense.transpose());
    let eig = SymmetricEigen::new(sym);
    // the deflated direction shows up as an exact zero; drop the eigenvalue
    // whose eigenvector is closest to the constant
    let drop = (0..n)
        .max_by(|&a, &b| {
            let ca = dot(eig.eigenvectors.column(a).as_slice(), &h.constant).abs();
            let cb = dot(eig.eigenvectors.column(b).as_slice(), &h.constant).abs();
            ca.total_cmp(&cb)
        })
        .unwrap();
    let mut values: Vec<f64> = (0..n).filter(|&i| i != drop).map(|i| eig.eigenvalues[i]).collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `⟨Ĥv, w⟩ − ⟨v, Ĥw⟩` for vectors given in vertex coordinates, in the mass
/// inner product of the unsymmetrized `H`.
pub fn hessian_symmetry_defect<P: Potential>(mesh: &SurfaceMesh, w: &P, epsilon: f64, u: &[f64], v: &[f64], z: &[f64]) -> f64 {
    let mass = mesh.lumped_mass();
    let apply = |x: &[f64]| -> Vec<f64> {
        let sx = mesh.stiffness().mul_vec(x);
        (0..x.len()).map(|i| epsilon * sx[i] / mass[i] + w.d2(u[i]) / epsilon * x[i]).collect()
    };
    let hv = apply(v);
    let hz = apply(z);
    crate::field::mass_dot(mass, &hv, z) - crate::field::mass_dot(mass, v, &hz)
}
