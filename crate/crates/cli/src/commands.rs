//! One function per subcommand. Each writes its artifacts and returns an
//! audit verdict: `Ok(None)` on success, `Ok(Some(reason))` when a check
//! fails, `Err` when a module rejects its input.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context as _, Result};
use photolab_core::barycenter::homotopy_audit;
use photolab_core::energy::{multiplier_audit, solve_constrained, CriticalPoint, EigenConfig, FlowConfig};
use photolab_core::geom::{generate_mesh, read_mesh_file, MeshSpec, SurfaceMesh};
use photolab_core::multiplicity::{
    morse_report, seed_points, sweep, write_summary_csv, DedupeConfig, SeedSpec, SweepConfig,
};
use photolab_core::photography::{l1_to_ball, sublevel_check, write_field_csv, Photographer};
use photolab_core::potential::{
    check_assumptions, sigma, truncate, AssumptionGrid, DoubleWell, GrowthConstants, Potential, TruncatedPotential,
    TwoSidedGrowth,
};
use photolab_core::profile::{build_profile, profile_energy, profile_residual};
use photolab_core::Execution;
use serde_json::json;

use crate::config::Config;
use crate::output::{summary, Artifacts};

pub type Verdict = Option<String>;

/// The configured potential, optionally truncated.
pub enum AnyPotential {
    Plain(DoubleWell),
    Truncated(TruncatedPotential),
}

impl AnyPotential {
    fn base(&self) -> &DoubleWell {
        match self {
            AnyPotential::Plain(w) => w,
            AnyPotential::Truncated(t) => &t.base,
        }
    }
}

impl Potential for AnyPotential {
    fn value(&self, s: f64) -> f64 {
        match self {
            AnyPotential::Plain(w) => w.value(s),
            AnyPotential::Truncated(t) => t.value(s),
        }
    }

    fn d1(&self, s: f64) -> f64 {
        match self {
            AnyPotential::Plain(w) => w.d1(s),
            AnyPotential::Truncated(t) => t.d1(s),
        }
    }

    fn d2(&self, s: f64) -> f64 {
        match self {
            AnyPotential::Plain(w) => w.d2(s),
            AnyPotential::Truncated(t) => t.d2(s),
        }
    }
}

/// Everything a subcommand needs, resolved from the configuration.
pub struct Context {
    pub cfg: Config,
    pub art: Artifacts,
    pub execution: Execution,
    pub seed_list: Option<Vec<usize>>,
}

impl Context {
    fn epsilons(&self) -> Result<Vec<f64>> {
        Ok(self.cfg.positive_list("run.epsilon")?)
    }

    fn volumes(&self) -> Result<Vec<f64>> {
        Ok(self.cfg.positive_list("run.volume")?)
    }

    fn potential(&self, epsilon: f64) -> Result<AnyPotential> {
        let c = &self.cfg;
        let base = match c.raw("potential.kind") {
            "quartic" => DoubleWell::quartic_standard(),
            "polynomial" => {
                let coeffs = c.f64_list("potential.coeffs")?;
                if coeffs.is_empty() {
                    return Err(c.invalid("potential.coeffs", "required for kind = polynomial").into());
                }
                let g = c.f64_list("potential.growth")?;
                let t = c.f64_list("potential.two_sided")?;
                if g.len() != 3 {
                    return Err(c.invalid("potential.growth", "expected A, B, p").into());
                }
                if t.len() != 5 {
                    return Err(c.invalid("potential.two_sided", "expected c1, c2, p1, p2, t0").into());
                }
                DoubleWell::polynomial(
                    coeffs,
                    GrowthConstants { a: g[0], b: g[1], p: g[2] },
                    TwoSidedGrowth { c1: t[0], c2: t[1], p1: t[2], p2: t[3], t0: t[4] },
                    c.f64("potential.barrier_delta")?,
                )
            }
            other => return Err(c.invalid("potential.kind", format!("unknown potential {other:?}")).into()),
        };
        let scale = c.f64("potential.scale")?;
        let base = if scale == 1.0 { base } else { base.scaled(scale) };
        match c.opt_f64("potential.lambda_star")? {
            None => Ok(AnyPotential::Plain(base)),
            Some(lambda_star) => Ok(AnyPotential::Truncated(truncate(&base, epsilon, lambda_star, c.f64("potential.t1")?)?)),
        }
    }

    fn potential_id(&self) -> String {
        let mut id = self.cfg.raw("potential.kind").to_string();
        if !self.cfg.raw("potential.lambda_star").is_empty() {
            id.push_str("+truncated");
        }
        id
    }

    pub fn mesh(&self) -> Result<(SurfaceMesh, String)> {
        let c = &self.cfg;
        let spec = match c.raw("mesh.family") {
            "icosphere" => MeshSpec::Icosphere { subdivisions: c.u64("mesh.subdivisions")? as u32 },
            "ellipsoid" => MeshSpec::Ellipsoid {
                a: c.f64("mesh.a")?,
                b: c.f64("mesh.b")?,
                c: c.f64("mesh.c")?,
                subdivisions: c.u64("mesh.subdivisions")? as u32,
            },
            "torus" => MeshSpec::Torus {
                major: c.f64("mesh.major")?,
                minor: c.f64("mesh.minor")?,
                nu: c.usize("mesh.nu")?,
                nv: c.usize("mesh.nv")?,
            },
            "file" => {
                if c.raw("mesh.path").is_empty() {
                    return Err(c.invalid("mesh.path", "required for family = file").into());
                }
                let path = Path::new(c.raw("mesh.path"));
                if !path.exists() {
                    bail!("mesh file {} does not exist", path.display());
                }
                let genus = if c.raw("mesh.genus").is_empty() { None } else { Some(c.u64("mesh.genus")? as u32) };
                let inj = c.opt_f64("mesh.inj_estimate")?;
                if inj.is_none() {
                    log::warn!("no mesh.inj_estimate for an external mesh; homotopy and concentration checks are disabled");
                }
                let mesh = read_mesh_file(path, genus, inj).with_context(|| format!("loading {}", path.display()))?;
                return Ok((mesh, format!("file:{}", path.display())));
            }
            other => return Err(c.invalid("mesh.family", format!("unknown family {other:?}")).into()),
        };
        let id = match &spec {
            MeshSpec::Icosphere { subdivisions } => format!("icosphere({subdivisions})"),
            MeshSpec::Ellipsoid { a, b, c, subdivisions } => format!("ellipsoid({a},{b},{c};{subdivisions})"),
            MeshSpec::Torus { major, minor, nu, nv } => format!("torus({major},{minor};{nu}x{nv})"),
        };
        Ok((generate_mesh(&spec)?, id))
    }

    fn flow_config(&self) -> Result<FlowConfig> {
        let c = &self.cfg;
        Ok(FlowConfig {
            tau0: c.f64("flow.tau0")?,
            max_steps: c.usize("flow.max_steps")?,
            tol_grad: c.opt_f64("flow.tol_grad")?,
            backtrack: c.f64("flow.backtrack")?,
            growth: c.f64("flow.growth")?,
            growth_after: c.usize("flow.growth_after")?,
            cg_tol: c.f64("flow.cg_tol")?,
            cg_max_iter: c.usize("flow.cg_max_iter")?,
            min_tau: c.f64("flow.min_tau")?,
            record_trajectory: c.bool("flow.record_trajectory")?,
        })
    }

    fn seed_spec(&self) -> Result<SeedSpec> {
        if let Some(list) = &self.seed_list {
            return Ok(SeedSpec::Explicit { vertices: list.clone() });
        }
        let c = &self.cfg;
        Ok(match c.raw("seeds.kind") {
            "farthest_point" => SeedSpec::FarthestPoint { count: c.usize("seeds.count")? },
            "all_vertices_subsample" => SeedSpec::AllVerticesSubsample { count: c.usize("seeds.count")? },
            "explicit" => SeedSpec::Explicit { vertices: c.usize_list("seeds.vertices")? },
            other => return Err(c.invalid("seeds.kind", format!("unknown seed kind {other:?}")).into()),
        })
    }

    fn base_points(&self) -> Result<Vec<usize>> {
        match &self.seed_list {
            Some(list) => Ok(list.clone()),
            None => Ok(self.cfg.usize_list("photograph.base_points")?),
        }
    }

    fn sweep_config(&self, mesh_id: &str) -> Result<SweepConfig> {
        let c = &self.cfg;
        Ok(SweepConfig {
            flow: self.flow_config()?,
            dedupe: DedupeConfig { l2_relative: c.f64("sweep.l2_relative")?, energy_relative: c.f64("sweep.energy_relative")? },
            delta_margin: c.opt_f64("sweep.delta_margin")?,
            morse_k: c.usize("sweep.morse_k")?,
            eigen: EigenConfig {
                block: c.usize("eigen.block")?,
                max_basis: c.usize("eigen.max_basis")?,
                residual_tol: c.f64("eigen.residual_tol")?,
                tol_eig: c.opt_f64("eigen.tol_eig")?,
                seed: c.u64("eigen.seed")?,
                execution: Execution::Sequential,
            },
            min_convergence: c.f64("sweep.min_convergence")?,
            concentration_radius: c.f64("sweep.concentration_radius")?,
            mesh_id: mesh_id.to_string(),
            potential_id: self.potential_id(),
            execution: self.execution,
        })
    }
}

fn tag(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

pub fn profile(ctx: &Context) -> Result<Verdict> {
    let samples = ctx.cfg.usize("profile.samples")?;
    let tol = ctx.cfg.f64("profile.residual_tol")?;
    let rows = ctx.cfg.usize("profile.csv_rows")?;
    ctx.art.reset("profile")?;
    let mut failures = Vec::new();
    for eps in ctx.epsilons()? {
        let w = ctx.potential(eps)?;
        let table = build_profile(&w, eps, 0.0, 1.0, samples)?;
        let res = profile_residual(&table, &w);
        let energy = profile_energy(&table, &w)?;
        let name = format!("profile_eps{}.csv", tag(eps));
        let mut f = ctx.art.csv(&name)?;
        table.write_csv(&mut f, 0.1 * table.eta, rows)?;
        f.flush()?;
        let assumptions = check_assumptions(w.base(), AssumptionGrid::default());
        let ok = res.max_residual <= tol;
        println!(
            "profile eps={eps}: eta={:.6e} residual={:.3e} (tol {tol:e}) {}",
            table.eta,
            res.max_residual,
            if ok { "ok" } else { "EXCEEDED" }
        );
        if !ok {
            failures.push(format!("profile residual {:.3e} > {tol:e} at eps={eps}", res.max_residual));
        }
        ctx.art.record(
            "profile",
            summary([
                ("epsilon", json!(eps)),
                ("eta", json!(table.eta)),
                ("eta_bound", json!(eps.powf(0.25))),
                ("residual", json!(res.max_residual)),
                ("residual_tol", json!(tol)),
                ("max_spacing", json!(res.max_spacing)),
                ("energy", json!(energy)),
                ("assumptions_hold", json!(assumptions.all())),
            ]),
            json!({ "csv": name, "assumptions": assumptions }),
        )?;
    }
    Ok((!failures.is_empty()).then(|| failures.join("; ")))
}

pub fn photograph(ctx: &Context, mesh: &SurfaceMesh, mesh_id: &str) -> Result<Verdict> {
    let margin = ctx.cfg.f64("photograph.margin")?;
    let points = ctx.base_points()?;
    ctx.art.reset("photograph")?;
    let mut failures = Vec::new();
    for eps in ctx.epsilons()? {
        let w = ctx.potential(eps)?;
        for v in ctx.volumes()? {
            let camera = Photographer::new(mesh, &w, eps, v)?;
            let shots = camera.shoot_all(&points, ctx.execution).into_iter().collect::<photolab_core::Result<Vec<_>>>()?;
            for s in &shots {
                let name = format!("photo_eps{}_v{}_x{}.csv", tag(eps), tag(v), s.base_point);
                let mut f = ctx.art.csv(&name)?;
                write_field_csv(mesh, &s.field, &mut f)?;
                f.flush()?;
            }
            let report = sublevel_check(&w, v, &shots, margin)?;
            println!(
                "photograph eps={eps} V={v}: {} shots, max energy {:.6} vs threshold {:.6}",
                shots.len(),
                report.max_energy,
                report.threshold
            );
            if !report.all_below {
                failures.push(format!("photographs above the sublevel threshold at eps={eps}, V={v}"));
            }
            let shots_detail: Vec<_> = shots
                .iter()
                .map(|s| json!({ "base_point": s.base_point, "r_v": s.r_v, "delta": s.delta, "energy": s.energy, "volume_shift": s.volume_shift }))
                .collect();
            ctx.art.record(
                "photograph",
                summary([
                    ("mesh", json!(mesh_id)),
                    ("epsilon", json!(eps)),
                    ("volume", json!(v)),
                    ("shots", json!(shots.len())),
                    ("max_energy", json!(report.max_energy)),
                    ("threshold", json!(report.threshold)),
                    ("all_below", json!(report.all_below)),
                ]),
                json!({ "shots": shots_detail, "sublevel": report }),
            )?;
        }
    }
    Ok((!failures.is_empty()).then(|| failures.join("; ")))
}

fn start_field<P: Potential>(ctx: &Context, mesh: &SurfaceMesh, w: &P, eps: f64, v: f64, x0: usize) -> Result<Vec<f64>> {
    Ok(match ctx.cfg.raw("flow.start") {
        "photograph" => Photographer::new(mesh, w, eps, v)?.shoot(x0)?.field.into_vec(),
        "constant" => vec![v / mesh.total_area(); mesh.vertex_count()],
        other => return Err(ctx.cfg.invalid("flow.start", format!("unknown start {other:?}")).into()),
    })
}

fn run_summary(cp: &CriticalPoint) -> serde_json::Value {
    json!({
        "epsilon": cp.epsilon,
        "volume": cp.volume,
        "energy": cp.energy,
        "lambda": cp.lambda,
        "grad_norm": cp.grad_norm,
        "ps_norm": cp.ps_norm,
        "steps": cp.steps,
        "converged": cp.converged,
        "volume_drift": cp.volume_drift,
        "min": cp.u.min(),
        "max": cp.u.max(),
    })
}

pub fn flow(ctx: &Context, mesh: &SurfaceMesh, mesh_id: &str) -> Result<Verdict> {
    let eps = ctx.epsilons()?[0];
    let v = ctx.volumes()?[0];
    let x0 = ctx.base_points()?.first().copied().unwrap_or(0);
    let w = ctx.potential(eps)?;
    let cfg = ctx.flow_config()?;
    ctx.art.reset("flow")?;
    let u0 = start_field(ctx, mesh, &w, eps, v, x0)?;
    let cp = solve_constrained(mesh, &w, eps, v, &u0, &cfg)?;
    let mut f = ctx.art.csv("flow_field.csv")?;
    write_field_csv(mesh, &cp.u, &mut f)?;
    f.flush()?;
    if !cp.trajectory.is_empty() {
        let mut f = ctx.art.csv("flow_trajectory.csv")?;
        writeln!(f, "step,energy,grad_norm,lambda,volume")?;
        for p in &cp.trajectory {
            writeln!(f, "{},{:.12e},{:.6e},{:.12e},{:.15e}", p.step, p.energy, p.grad_norm, p.lambda, p.volume)?;
        }
        f.flush()?;
    }
    println!(
        "flow eps={eps} V={v}: energy {:.8} lambda {:.8} after {} steps, converged {}",
        cp.energy, cp.lambda, cp.steps, cp.converged
    );
    let mut s = summary([("mesh", json!(mesh_id)), ("tol_grad", json!(cfg.tol_grad_for(mesh)))]);
    if let serde_json::Value::Object(o) = run_summary(&cp) {
        s.extend(o);
    }
    ctx.art.record("flow", s, json!({ "field_csv": "flow_field.csv", "start": ctx.cfg.raw("flow.start"), "base_point": x0 }))?;
    Ok((!cp.converged).then(|| format!("flow did not converge in {} steps", cp.steps)))
}

pub fn sweep_cmd(ctx: &Context, mesh: &SurfaceMesh, mesh_id: &str) -> Result<Verdict> {
    let seeds = ctx.seed_spec()?;
    let cfg = ctx.sweep_config(mesh_id)?;
    ctx.art.reset("sweep")?;
    let mut failures = Vec::new();
    for eps in ctx.epsilons()? {
        let w = ctx.potential(eps)?;
        for v in ctx.volumes()? {
            let result = sweep(mesh, &w, eps, v, &seeds, &cfg)?;
            let report = morse_report(&result);
            let name = format!("sweep_eps{}_v{}.csv", tag(eps), tag(v));
            let mut f = ctx.art.csv(&name)?;
            write_summary_csv(&result, &mut f)?;
            f.flush()?;
            let k = &result.counts;
            println!(
                "sweep eps={eps} V={v}: {} classes ({} below c, constant below c {}), morse count {} vs {} ({:?}), convergence {:.2}",
                k.distinct_total,
                k.distinct_below_c,
                k.constant_below_c,
                report.count,
                report.required,
                report.pass,
                result.convergence_rate
            );
            if report.pass == Some(false) {
                failures.push(format!("morse count {} < {} at eps={eps}, V={v}", report.count, report.required));
            }
            if result.unreliable {
                failures.push(format!("sweep unreliable at eps={eps}, V={v}"));
            }
            let classes: Vec<_> = result
                .classes
                .iter()
                .map(|c| {
                    json!({
                        "id": c.id,
                        "energy": c.representative.energy,
                        "lambda": c.representative.lambda,
                        "size": c.size,
                        "constant": c.constant,
                        "below_c": c.below_c,
                        "morse_index": c.morse.as_ref().map(|m| m.index),
                        "nondegenerate": c.morse.as_ref().map(|m| m.nondegenerate),
                        "projected_vertex": c.projected_vertex,
                        "concentration": c.concentration,
                    })
                })
                .collect();
            ctx.art.record(
                "sweep",
                summary([
                    ("mesh", json!(mesh_id)),
                    ("epsilon", json!(eps)),
                    ("volume", json!(v)),
                    ("threshold_c", json!(result.threshold_c)),
                    ("distinct_total", json!(k.distinct_total)),
                    ("distinct_below_c", json!(k.distinct_below_c)),
                    ("constant_below_c", json!(k.constant_below_c)),
                    ("predicted_cat", json!(k.predicted_cat)),
                    ("predicted_2p1_minus_1", json!(k.predicted_2p1_minus_1)),
                    ("morse_pass", json!(report.pass)),
                    ("convergence_rate", json!(result.convergence_rate)),
                    ("unreliable", json!(result.unreliable)),
                ]),
                json!({ "card": result.card, "counts": result.counts, "morse_report": report, "morse_tally": result.morse_tally, "classes": classes, "runs": result.runs }),
            )?;
        }
    }
    Ok((!failures.is_empty()).then(|| failures.join("; ")))
}

pub fn gamma(ctx: &Context, mesh: &SurfaceMesh, mesh_id: &str) -> Result<Verdict> {
    let v = ctx.volumes()?[0];
    let x0 = ctx.base_points()?.first().copied().unwrap_or(0);
    ctx.art.reset("gamma")?;
    let mut f = ctx.art.csv("gamma.csv")?;
    writeln!(f, "epsilon,energy,perimeter_energy,overshoot,ratio,l1_to_ball,r_v")?;
    let mut previous: Option<f64> = None;
    let mut monotone = true;
    for eps in ctx.epsilons()? {
        let w = ctx.potential(eps)?;
        let photo = Photographer::new(mesh, &w, eps, v)?.shoot(x0)?;
        // σ times the perimeter of the reference geodesic ball
        let perimeter = photolab_core::geom::level_length(mesh, &photo.distance, photo.r_v);
        let target = sigma(&w, 0.0, 1.0)? * perimeter;
        let overshoot = photo.energy - target;
        let l1 = l1_to_ball(mesh, &photo.field, &photo.distance, photo.r_v);
        if let Some(p) = previous {
            monotone &= overshoot < p;
        }
        previous = Some(overshoot);
        writeln!(f, "{eps},{:.12e},{target:.12e},{overshoot:.6e},{:.8},{l1:.8e},{:.10}", photo.energy, photo.energy / target, photo.r_v)?;
        println!("gamma eps={eps}: energy {:.6} vs sigma*perimeter {target:.6} (ratio {:.4})", photo.energy, photo.energy / target);
        ctx.art.record(
            "gamma",
            summary([
                ("mesh", json!(mesh_id)),
                ("epsilon", json!(eps)),
                ("volume", json!(v)),
                ("energy", json!(photo.energy)),
                ("perimeter_energy", json!(target)),
                ("overshoot", json!(overshoot)),
                ("l1_to_ball", json!(l1)),
            ]),
            json!({ "base_point": x0, "r_v": photo.r_v, "delta": photo.delta }),
        )?;
    }
    f.flush()?;
    Ok((!monotone).then(|| "overshoot over sigma*perimeter is not decreasing along the epsilon list".to_string()))
}

pub fn audit_barycenter(ctx: &Context, mesh: &SurfaceMesh, mesh_id: &str) -> Result<Verdict> {
    let points = seed_points(mesh, &ctx.seed_spec()?)?;
    ctx.art.reset("audit-barycenter")?;
    let mut failures = Vec::new();
    for eps in ctx.epsilons()? {
        let w = ctx.potential(eps)?;
        for v in ctx.volumes()? {
            let r = homotopy_audit(mesh, &w, eps, v, &points, ctx.execution)?;
            let name = format!("barycenter_eps{}_v{}.csv", tag(eps), tag(v));
            let mut f = ctx.art.csv(&name)?;
            writeln!(f, "base_point,distance,distance_to_mesh,projected_vertex,ambiguous")?;
            for e in &r.entries {
                writeln!(f, "{},{:.10e},{:.6e},{},{}", e.base_point, e.distance, e.distance_to_mesh, e.projected_vertex, e.ambiguous)?;
            }
            f.flush()?;
            println!(
                "audit-barycenter eps={eps} V={v}: max distance {:.6} (inj {:?}) pass {:?}",
                r.max_distance, r.inj_estimate, r.pass
            );
            if r.pass == Some(false) {
                failures.push(format!("homotopy distance {:.4} >= inj at eps={eps}, V={v}", r.max_distance));
            }
            ctx.art.record(
                "audit-barycenter",
                summary([
                    ("mesh", json!(mesh_id)),
                    ("epsilon", json!(eps)),
                    ("volume", json!(v)),
                    ("max_distance", json!(r.max_distance)),
                    ("mean_distance", json!(r.mean_distance)),
                    ("inj_estimate", json!(r.inj_estimate)),
                    ("pass", json!(r.pass)),
                ]),
                json!({ "csv": name }),
            )?;
        }
    }
    Ok((!failures.is_empty()).then(|| failures.join("; ")))
}

pub fn audit_multiplier(ctx: &Context, mesh: &SurfaceMesh, mesh_id: &str) -> Result<Verdict> {
    let v = ctx.volumes()?[0];
    let x0 = ctx.base_points()?.first().copied().unwrap_or(0);
    let cfg = ctx.flow_config()?;
    ctx.art.reset("audit-multiplier")?;
    let epsilons = ctx.epsilons()?;
    let runs = ctx.execution.map(&epsilons, |&eps| -> Result<CriticalPoint> {
        let w = ctx.potential(eps)?;
        let u0 = start_field(ctx, mesh, &w, eps, v, x0)?;
        Ok(solve_constrained(mesh, &w, eps, v, &u0, &cfg)?)
    });
    let runs: Vec<CriticalPoint> = runs.into_iter().collect::<Result<_>>()?;
    let report = multiplier_audit(&runs);
    let mut f = ctx.art.csv("multiplier.csv")?;
    writeln!(f, "epsilon,lambda,energy,ratio")?;
    for e in &report.entries {
        writeln!(f, "{},{:.12e},{:.12e},{:.8e}", e.epsilon, e.lambda, e.energy, e.ratio)?;
    }
    f.flush()?;
    let unconverged: Vec<f64> = runs.iter().filter(|r| !r.converged).map(|r| r.epsilon).collect();
    println!("audit-multiplier: variation {:?}, unbounded {}", report.variation, report.unbounded_flag);
    ctx.art.record(
        "audit-multiplier",
        summary([
            ("mesh", json!(mesh_id)),
            ("volume", json!(v)),
            ("runs", json!(runs.len())),
            ("variation", json!(report.variation)),
            ("unbounded", json!(report.unbounded_flag)),
            ("unconverged", json!(unconverged.len())),
        ]),
        json!({ "entries": report.entries, "runs": runs.iter().map(run_summary).collect::<Vec<_>>() }),
    )?;
    let mut failures = Vec::new();
    if report.unbounded_flag {
        failures.push("|lambda|/E varies by more than x10".to_string());
    }
    if !unconverged.is_empty() {
        failures.push(format!("flows did not converge at eps {unconverged:?}"));
    }
    Ok((!failures.is_empty()).then(|| failures.join("; ")))
}
