//! Seed sweeps, deduplication of critical points, and comparison of the
//! counts with the topology of the surface.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::barycenter::{barycenter, concentration, Projector};
use crate::energy::{morse_index, solve_constrained, CriticalPoint, EigenConfig, FlowConfig, MorseIndex};
use crate::error::{Error, Result};
use crate::field::l2_norm;
use crate::geom::{MeshFamily, SurfaceMesh, Vec3};
use crate::par::Execution;
use crate::photography::{sublevel_threshold, Photographer};
use crate::potential::Potential;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyCard {
    pub family_tag: String,
    pub cat: u32,
    pub betti: [u32; 3],
    pub p1: u32,
}

/// Tabulated topology for the supported families.
pub fn topology_card(family: MeshFamily) -> Result<TopologyCard> {
    let genus = match family {
        MeshFamily::Sphere | MeshFamily::Ellipsoid => 0,
        MeshFamily::Torus => 1,
        MeshFamily::External { genus: Some(g) } => g,
        MeshFamily::External { genus: None } => return Err(Error::UndeclaredTopology),
    };
    let (tag, cat) = match genus {
        0 => ("sphere".to_string(), 2),
        1 => ("torus".to_string(), 3),
        g => (format!("genus_{g}"), 3),
    };
    let betti = [1, 2 * genus, 1];
    Ok(TopologyCard { family_tag: tag, cat, betti, p1: betti.iter().sum() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedSpec {
    /// Greedy farthest-point sampling by geodesic distance, starting at vertex 0.
    FarthestPoint { count: usize },
    /// Evenly strided vertex indices.
    AllVerticesSubsample { count: usize },
    Explicit { vertices: Vec<usize> },
}

pub fn seed_points(mesh: &SurfaceMesh, spec: &SeedSpec) -> Result<Vec<usize>> {
    let n = mesh.vertex_count();
    match spec {
        SeedSpec::FarthestPoint { count } => {
            let count = (*count).min(n);
            if count == 0 {
                return Ok(Vec::new());
            }
            let mut picked = vec![0usize];
            let mut nearest: Vec<f64> = crate::geom::geodesic_distance(mesh, 0).into_vec();
            while picked.len() < count {
                let next = (0..n).fold(0, |best, i| if nearest[i] > nearest[best] { i } else { best });
                picked.push(next);
                let d = crate::geom::geodesic_distance(mesh, next);
                nearest.iter_mut().zip(d.iter()).for_each(|(a, b)| *a = a.min(*b));
            }
            Ok(picked)
        }
        SeedSpec::AllVerticesSubsample { count } => {
            let count = (*count).min(n);
            Ok((0..count).map(|k| k * n / count.max(1)).collect())
        }
        SeedSpec::Explicit { vertices } => {
            if let Some(&bad) = vertices.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidParameter(format!("seed vertex {bad} is not on the mesh ({n} vertices)")));
            }
            Ok(vertices.clone())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DedupeConfig {
    pub l2_relative: f64,
    pub energy_relative: f64,
}

impl Default for DedupeConfig {
    fn default() -> Self {
        Self { l2_relative: 0.05, energy_relative: 0.02 }
    }
}

/// Single-linkage classes of `points` (indices into the input). Each class
/// is sorted by energy, so its first entry is the representative.
pub fn dedupe(points: &[CriticalPoint], mesh: &SurfaceMesh, cfg: &DedupeConfig) -> Vec<Vec<usize>> {
    let n = points.len();
    let mass = mesh.lumped_mass();
    let norms: Vec<f64> = points.iter().map(|p| l2_norm(mass, &p.u)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&points[i], &points[j]);
            let e_scale = a.energy.max(b.energy);
            let e_close = (a.energy - b.energy).abs() <= cfg.energy_relative * e_scale;
            if !e_close {
                continue;
            }
            let diff: Vec<f64> = a.u.iter().zip(b.u.iter()).map(|(x, y)| x - y).collect();
            let scale = norms[i].max(norms[j]);
            if l2_norm(mass, &diff) <= cfg.l2_relative * scale {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut classes: Vec<Vec<usize>> = groups.into_values().collect();
    for c in &mut classes {
        c.sort_by(|&a, &b| points[a].energy.total_cmp(&points[b].energy).then(a.cmp(&b)));
    }
    classes.sort_by(|a, b| points[a[0]].energy.total_cmp(&points[b[0]].energy).then(a[0].cmp(&b[0])));
    classes
}

/// Where a run started.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seed {
    Vertex(usize),
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub flow: FlowConfig,
    pub dedupe: DedupeConfig,
    /// Added to `σc₂√V` for the below-`c` tally; `None` means `0.1·σc₂√V`.
    pub delta_margin: Option<f64>,
    /// Eigenvalues computed per class representative.
    pub morse_k: usize,
    pub eigen: EigenConfig,
    /// Below this fraction of converged seeds the sweep is flagged unreliable.
    pub min_convergence: f64,
    /// Concentration ball radius as a fraction of the injectivity estimate.
    pub concentration_radius: f64,
    pub mesh_id: String,
    pub potential_id: String,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            flow: FlowConfig::default(),
            dedupe: DedupeConfig::default(),
            delta_margin: None,
            morse_k: 12,
            eigen: EigenConfig::default(),
            min_convergence: 0.5,
            concentration_radius: 0.25,
            mesh_id: "mesh".into(),
            potential_id: "potential".into(),
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: Seed,
    pub converged: bool,
    pub energy: Option<f64>,
    pub steps: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalClass {
    pub id: usize,
    pub representative: CriticalPoint,
    pub representative_seed: Seed,
    pub members: Vec<Seed>,
    pub size: usize,
    /// The representative is spatially constant.
    pub constant: bool,
    pub below_c: bool,
    pub barycenter: Option<Vec3>,
    pub projected_point: Option<Vec3>,
    pub projected_vertex: Option<usize>,
    pub morse: Option<MorseIndex>,
    /// Mass fraction in the best ball of the configured radius; `None` for
    /// meshes without an injectivity estimate.
    pub concentration: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepCounts {
    pub distinct_total: usize,
    /// Non-constant classes with energy at most `c`.
    pub distinct_below_c: usize,
    pub constant_classes: usize,
    pub constant_below_c: bool,
    pub predicted_cat: u32,
    pub predicted_cat_plus_1: u32,
    pub predicted_p1: u32,
    pub predicted_2p1_minus_1: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub epsilon: f64,
    pub volume: f64,
    pub mesh_id: String,
    pub potential_id: String,
    pub threshold_c: f64,
    pub card: TopologyCard,
    pub runs: Vec<RunSummary>,
    pub classes: Vec<CriticalClass>,
    pub counts: SweepCounts,
    /// Morse index → number of classes.
    pub morse_tally: BTreeMap<usize, usize>,
    pub convergence_rate: f64,
    pub unreliable: bool,
}

/// Flows from the photograph at each seed, plus the constant field, and
/// groups the converged endpoints into classes.
pub fn sweep<P: Potential>(
    mesh: &SurfaceMesh,
    w: &P,
    epsilon: f64,
    volume: f64,
    seeds: &SeedSpec,
    cfg: &SweepConfig,
) -> Result<SweepResult> {
    let card = topology_card(mesh.family())?;
    let vertices = seed_points(mesh, seeds)?;
    let bare = sublevel_threshold(w, volume, 0.0)?;
    let threshold_c = bare + cfg.delta_margin.unwrap_or(0.1 * bare);
    let camera = Photographer::new(mesh, w, epsilon, volume)?;

    let mut all_seeds: Vec<Seed> = vertices.iter().map(|&v| Seed::Vertex(v)).collect();
    all_seeds.push(Seed::Constant);
    let outcomes = cfg.execution.map(&all_seeds, |seed| -> Result<CriticalPoint> {
        let u0 = match *seed {
            Seed::Vertex(v) => camera.shoot(v)?.field.into_vec(),
            Seed::Constant => vec![volume / mesh.total_area(); mesh.vertex_count()],
        };
        solve_constrained(mesh, w, epsilon, volume, &u0, &cfg.flow)
    });

    let mut runs = Vec::with_capacity(outcomes.len());
    let mut converged: Vec<(Seed, CriticalPoint)> = Vec::new();
    for (seed, out) in all_seeds.iter().zip(outcomes) {
        match out {
            Ok(cp) => {
                runs.push(RunSummary { seed: *seed, converged: cp.converged, energy: Some(cp.energy), steps: cp.steps, error: None });
                if cp.converged {
                    converged.push((*seed, cp));
                }
            }
            Err(e) => runs.push(RunSummary { seed: *seed, converged: false, energy: None, steps: 0, error: Some(e.to_string()) }),
        }
    }
    let convergence_rate = converged.len() as f64 / runs.len() as f64;
    let unreliable = convergence_rate < cfg.min_convergence;
    if unreliable {
        log::warn!("only {:.0}% of sweep runs converged", 100.0 * convergence_rate);
    }

    let points: Vec<CriticalPoint> = converged.iter().map(|(_, p)| p.clone()).collect();
    let groups = dedupe(&points, mesh, &cfg.dedupe);
    let projector = Projector::new(mesh);
    let conc_radius = mesh.inj_estimate().map(|inj| 2.0 * cfg.concentration_radius * inj);

    let classes: Vec<CriticalClass> = cfg
        .execution
        .map(&groups, |members| -> Result<CriticalClass> {
            let rep_idx = members[0];
            let mut representative = points[rep_idx].clone();
            let u = &representative.u;
            let constant = u.max() - u.min() <= 1e-9 * u.max().abs().max(1.0);
            let morse = if cfg.morse_k > 0 {
                let k = cfg.morse_k.min(mesh.vertex_count() - 2);
                let eig = EigenConfig { execution: Execution::Sequential, ..cfg.eigen };
                Some(morse_index(mesh, w, epsilon, u, k, &eig)?)
            } else {
                None
            };
            representative.morse_index = morse.as_ref().map(|m| m.index);
            representative.nondegenerate = morse.as_ref().map(|m| m.nondegenerate);
            let bary = barycenter(mesh, u).ok();
            let proj = bary.map(|b| projector.project(b));
            let conc = match conc_radius {
                Some(r) => Some(concentration(mesh, u, r, Execution::Sequential)?.fraction),
                None => None,
            };
            let below_c = representative.energy <= threshold_c;
            let mut member_seeds: Vec<Seed> = members.iter().map(|&i| converged[i].0).collect();
            member_seeds.sort();
            Ok(CriticalClass {
                id: 0,
                representative,
                representative_seed: converged[rep_idx].0,
                size: members.len(),
                members: member_seeds,
                constant,
                below_c,
                barycenter: bary,
                projected_point: proj.as_ref().map(|p| p.mesh_point),
                projected_vertex: proj.as_ref().map(|p| p.nearest_vertex),
                morse,
                concentration: conc,
            })
        })
        .into_iter()
        .enumerate()
        .map(|(id, c)| c.map(|mut c| {
            c.id = id;
            c
        }))
        .collect::<Result<_>>()?;

    let mut morse_tally = BTreeMap::new();
    for c in &classes {
        if let Some(m) = &c.morse {
            *morse_tally.entry(m.index).or_insert(0) += 1;
        }
    }
    let counts = SweepCounts {
        distinct_total: classes.len(),
        distinct_below_c: classes.iter().filter(|c| !c.constant && c.below_c).count(),
        constant_classes: classes.iter().filter(|c| c.constant).count(),
        constant_below_c: classes.iter().any(|c| c.constant && c.below_c),
        predicted_cat: card.cat,
        predicted_cat_plus_1: card.cat + 1,
        predicted_p1: card.p1,
        predicted_2p1_minus_1: 2 * card.p1 - 1,
    };
    Ok(SweepResult {
        epsilon,
        volume,
        mesh_id: cfg.mesh_id.clone(),
        potential_id: cfg.potential_id.clone(),
        threshold_c,
        card,
        runs,
        classes,
        counts,
        morse_tally,
        convergence_rate,
        unreliable,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorseReading {
    /// Every representative is nondegenerate; the count is checked.
    Nondegenerate,
    /// Some representative is degenerate or lacks an index; no pass/fail.
    Multiplicity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    pub count: usize,
    pub p1: u32,
    pub required: u32,
    /// `(count − (2P₁ − 1)) / 2`.
    pub q1: f64,
    pub q1_nonnegative: bool,
    pub reading: MorseReading,
    pub pass: Option<bool>,
    pub deficit: usize,
}

/// Compares the number of classes with `2P₁ − 1`.
pub fn morse_report(result: &SweepResult) -> MorseReport {
    morse_report_for(&result.card, result.classes.iter().map(|c| c.morse.as_ref().map(|m| m.nondegenerate)))
}

/// [`morse_report`] from a card and the per-class nondegeneracy flags.
pub fn morse_report_for<I: IntoIterator<Item = Option<bool>>>(card: &TopologyCard, flags: I) -> MorseReport {
    let flags: Vec<Option<bool>> = flags.into_iter().collect();
    let count = flags.len();
    let required = 2 * card.p1 - 1;
    let q1 = (count as f64 - required as f64) / 2.0;
    let all_nondegenerate = flags.iter().all(|f| *f == Some(true));
    let reading = if all_nondegenerate { MorseReading::Nondegenerate } else { MorseReading::Multiplicity };
    MorseReport {
        count,
        p1: card.p1,
        required,
        q1,
        q1_nonnegative: q1 >= 0.0,
        reading,
        pass: all_nondegenerate.then_some(count >= required as usize),
        deficit: (required as usize).saturating_sub(count),
    }
}

/// One row per class: id, energy, λ, Morse index, projected barycenter, size.
pub fn write_summary_csv<W: Write>(result: &SweepResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "class_id,energy,lambda,morse_index,nondegenerate,proj_x,proj_y,proj_z,proj_vertex,size,constant,below_c")?;
    for c in &result.classes {
        let p = c.projected_point.unwrap_or([f64::NAN; 3]);
        writeln!(
            out,
            "{},{:.12e},{:.12e},{},{},{:.9},{:.9},{:.9},{},{},{},{}",
            c.id,
            c.representative.energy,
            c.representative.lambda,
            c.morse.as_ref().map_or(String::new(), |m| m.index.to_string()),
            c.morse.as_ref().map_or(String::new(), |m| m.nondegenerate.to_string()),
            p[0],
            p[1],
            p[2],
            c.projected_vertex.map_or(String::new(), |v| v.to_string()),
            c.size,
            c.constant,
            c.below_c
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{generate_mesh, MeshSpec};
    use crate::field::ScalarField;
    use crate::potential::DoubleWell;

    fn point(u: Vec<f64>, energy: f64) -> CriticalPoint {
        CriticalPoint {
            u: ScalarField::new(u),
            lambda: 0.0,
            energy,
            grad_norm: 0.0,
            ps_norm: 0.0,
            steps: 1,
            converged: true,
            morse_index: None,
            nondegenerate: None,
            epsilon: 0.1,
            volume: 1.0,
            volume_drift: 0.0,
            trajectory: Vec::new(),
        }
    }

    #[test]
    fn cards() {
        let s = topology_card(MeshFamily::Sphere).unwrap();
        assert_eq!((s.cat, s.betti, s.p1), (2, [1, 0, 1], 2));
        assert_eq!(topology_card(MeshFamily::Ellipsoid).unwrap(), s);
        let t = topology_card(MeshFamily::Torus).unwrap();
        assert_eq!((t.cat, t.betti, t.p1), (3, [1, 2, 1], 4));
        let g = topology_card(MeshFamily::External { genus: Some(2) }).unwrap();
        assert_eq!((g.family_tag.as_str(), g.cat, g.betti, g.p1), ("genus_2", 3, [1, 4, 1], 6));
        assert!(matches!(topology_card(MeshFamily::External { genus: None }), Err(Error::UndeclaredTopology)));
    }

    #[test]
    fn dedupe_merges_duplicates_and_keeps_distinct() {
        let m = generate_mesh(&MeshSpec::Icosphere { subdivisions: 1 }).unwrap();
        let n = m.vertex_count();
        let a: Vec<f64> = (0..n).map(|i| if i < 5 { 1.0 } else { 0.0 }).collect();
        let c = vec![0.1; n];
        let pts = vec![point(a.clone(), 1.0), point(c.clone(), 2.0), point(a, 1.0)];
        let classes = dedupe(&pts, &m, &DedupeConfig::default());
        assert_eq!(classes, vec![vec![0, 2], vec![1]]);
        assert!(dedupe(&[], &m, &DedupeConfig::default()).is_empty());
    }

    #[test]
    fn dedupe_needs_both_criteria() {
        let m = generate_mesh(&MeshSpec::Icosphere { subdivisions: 1 }).unwrap();
        let n = m.vertex_count();
        let a = vec![0.3; n];
        // same field, energies 5% apart
        let classes = dedupe(&[point(a.clone(), 1.0), point(a, 1.05)], &m, &DedupeConfig::default());
        assert_eq!(classes.len(), 2);
    }

    #[test]
    fn morse_report_arithmetic() {
        let sphere = topology_card(MeshFamily::Sphere).unwrap();
        let r = morse_report_for(&sphere, vec![Some(true); 3]);
        assert_eq!((r.count, r.required, r.q1, r.pass, r.deficit), (3, 3, 0.0, Some(true), 0));
        let torus = topology_card(MeshFamily::Torus).unwrap();
        let r = morse_report_for(&torus, vec![Some(true); 5]);
        assert_eq!((r.pass, r.deficit, r.q1_nonnegative), (Some(false), 2, false));
        let r = morse_report_for(&sphere, vec![Some(true), Some(false), Some(true)]);
        assert_eq!((r.reading, r.pass), (MorseReading::Multiplicity, None));
    }

    #[test]
    fn seeds() {
        let m = generate_mesh(&MeshSpec::Icosphere { subdivisions: 2 }).unwrap();
        let fp = seed_points(&m, &SeedSpec::FarthestPoint { count: 2 }).unwrap();
        // the antipode of vertex 0 is vertex 1
        assert_eq!(fp, vec![0, 1]);
        let sub = seed_points(&m, &SeedSpec::AllVerticesSubsample { count: 4 }).unwrap();
        assert_eq!(sub.len(), 4);
        assert!(seed_points(&m, &SeedSpec::Explicit { vertices: vec![m.vertex_count()] }).is_err());
    }

    #[test]
    fn small_sphere_sweep_is_deterministic() {
        let m = generate_mesh(&MeshSpec::Icosphere { subdivisions: 3 }).unwrap();
        let w = DoubleWell::quartic_standard();
        let cfg = SweepConfig { morse_k: 4, ..SweepConfig::default() };
        let spec = SeedSpec::FarthestPoint { count: 3 };
        let a = sweep(&m, &w, 0.15, 1.0, &spec, &cfg).unwrap();
        let b = sweep(&m, &w, 0.15, 1.0, &spec, &SweepConfig { execution: Execution::Sequential, ..cfg.clone() }).unwrap();
        assert_eq!(a.counts, b.counts);
        let ea: Vec<u64> = a.classes.iter().map(|c| c.representative.energy.to_bits()).collect();
        let eb: Vec<u64> = b.classes.iter().map(|c| c.representative.energy.to_bits()).collect();
        assert_eq!(ea, eb);
        assert_eq!(a.runs.len(), 4);
        assert_eq!(a.counts.predicted_cat_plus_1, a.counts.predicted_cat + 1);
        assert_eq!(a.counts.predicted_2p1_minus_1, 2 * a.counts.predicted_p1 - 1);
        assert_eq!(a.classes.iter().map(|c| c.size).sum::<usize>(), a.runs.iter().filter(|r| r.converged).count());
    }
}
