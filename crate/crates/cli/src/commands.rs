use crate::config::RunConfig;
use crate::Failure;
use curlspec::complex::{build_complex, homology_basis};
use curlspec::hadamard::{fd_check, track_family, FdOptions, TrackOptions};
use curlspec::mesh::{write_tmesh, TetMesh};
use curlspec::shapeopt::optimize as run_optimize;
use curlspec::spectrum::{check_selfadjointness, point_vectors, write_vtk, Discretization};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub parallel: bool,
    pub command: &'static str,
}

type Run = Result<(), Failure>;

impl Context {
    fn write(&self, name: &str, contents: &str) -> Run {
        std::fs::create_dir_all(&self.out)
            .and_then(|_| std::fs::write(self.out.join(name), contents))
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", self.out.join(name).display())))
    }

    /// results.json with the resolved configuration and version embedded.
    fn results(&self, result: impl Serialize) -> Run {
        let doc = json!({
            "version": curlspec::VERSION,
            "command": self.command,
            "config": self.cfg,
            "sequential": !self.parallel,
            "result": result,
        });
        self.write("results.json", &(serde_json::to_string_pretty(&doc).unwrap() + "\n"))
    }

    fn mesh(&self) -> Result<TetMesh, Failure> {
        self.cfg.domain.build().map_err(|e| match e {
            curlspec::Error::Io(_) | curlspec::Error::Parse { .. } | curlspec::Error::InvalidParameter(_) => {
                Failure::Config(format!("domain: {e}"))
            }
            e => e.into(),
        })
    }

    fn solver(&self) -> curlspec::spectrum::SolverOptions {
        self.cfg.solver.options(self.cfg.seed)
    }
}

pub fn solve(ctx: &Context) -> Run {
    let mesh = ctx.mesh()?;
    let disc = Discretization::new(&mesh, &ctx.cfg.lagrangian)?;
    let res = disc.solve(ctx.cfg.solver.k, ctx.cfg.solver.shift, &ctx.solver())?;
    let defect = check_selfadjointness(&disc.handle, &res);
    for (i, l) in res.eigenvalues.iter().enumerate() {
        println!("{i:3}  {l:.12}  residual {:.2e}", res.residual_norms[i]);
    }
    if ctx.cfg.output.vtk {
        let fields: Vec<(String, Vec<[f64; 3]>)> = res
            .eigenvectors
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("v{i}"), point_vectors(&disc.complex, v)))
            .collect();
        ctx.write("fields.vtk", &write_vtk(&mesh, &fields))?;
    }
    ctx.results(json!({
        "eigen": res,
        "selfadjointness_defect": defect,
        "genus": disc.basis.genus,
        "intersection_matrix": disc.basis.intersection_matrix,
        "quality": mesh.quality(),
        "counts": mesh.simplex_counts(),
    }))
}

pub fn hadamard_check(ctx: &Context) -> Run {
    let mesh = ctx.mesh()?;
    let h = &ctx.cfg.hadamard;
    let field = h.field.build(&mesh).map_err(|e| Failure::Config(format!("hadamard.field: {e}")))?;
    let opts = FdOptions {
        shift: h.shift,
        k: h.k,
        deltas: h.deltas.clone(),
        method: h.method,
        parallel: ctx.parallel,
        solver: ctx.solver(),
        ..FdOptions::default()
    };
    let rep = fd_check(&mesh, &field, &ctx.cfg.lagrangian, &opts)?;
    println!("cluster λ = {:.10} (m = {})", rep.lambda, rep.multiplicity);
    println!("formula {:?}", rep.formula);
    println!("{:>12}  {:>40}  {:>12}", "delta", "fd branch derivatives", "max rel err");
    for row in &rep.sweep {
        let err = row.rel_err.iter().fold(0.0f64, |a, b| a.max(*b));
        println!("{:12.4e}  {:>40}  {:12.3e}", row.delta, format!("{:.8?}", row.fd), err);
    }
    ctx.results(json!({ "field": field.description, "report": rep, "quality": mesh.quality() }))
}

pub fn track(ctx: &Context) -> Run {
    let mesh = ctx.mesh()?;
    let t = &ctx.cfg.track;
    let field = t.field.build(&mesh).map_err(|e| Failure::Config(format!("track.field: {e}")))?;
    let grid: Vec<f64> =
        (0..=t.steps).map(|i| t.t_start + (t.t_end - t.t_start) * i as f64 / t.steps as f64).collect();
    let m = if t.multiplicity > 0 {
        t.multiplicity
    } else {
        let disc = Discretization::new(&mesh, &ctx.cfg.lagrangian)?;
        let r = disc.solve(ctx.cfg.solver.k, t.shift, &ctx.solver())?;
        let range = curlspec::hadamard::nearest_cluster(&r, t.shift)?;
        range.len()
    };
    let opts = TrackOptions { extra: t.extra, min_overlap: t.min_overlap, solver: ctx.solver() };
    let fam = track_family(&mesh, &field, &ctx.cfg.lagrangian, t.shift, m, &grid, &opts)?;
    ctx.write("branches.csv", &fam.to_csv())?;
    println!("tracked {} branches over {} samples; crossings: {:?}", m, grid.len(), fam.crossings);
    ctx.results(json!({ "field": field.description, "family": fam }))
}

pub fn split_experiment(ctx: &Context) -> Run {
    let mut opts = ctx.cfg.split.clone();
    opts.seed = ctx.cfg.seed;
    opts.parallel = ctx.parallel;
    opts.solver = ctx.solver();
    let stats = curlspec::hadamard::split_experiment(&opts)?;
    println!(
        "valid {}  split {}  fraction {:.3}  inverted {}",
        stats.valid, stats.split, stats.split_fraction, stats.inverted
    );
    ctx.results(stats)
}

pub fn optimize(ctx: &Context) -> Run {
    let mesh = ctx.mesh()?;
    let o = &ctx.cfg.optimize;
    let family = o.family.build(mesh).map_err(|e| Failure::Config(format!("optimize.family: {e}")))?;
    let c0 = if o.initial_c.is_empty() { vec![0.0; family.dim()] } else { o.initial_c.clone() };
    if c0.len() != family.dim() {
        return Err(Failure::Config(format!(
            "optimize.initial_c has {} entries, the family has {}",
            c0.len(),
            family.dim()
        )));
    }
    let mut opts = o.options.clone();
    opts.parallel = ctx.parallel;
    opts.solver = ctx.solver();
    let res = run_optimize(&family, &c0, &ctx.cfg.lagrangian, &o.target, &opts)?;
    for p in &res.trajectory {
        println!("{:3}  value {:.10}  |grad| {:.3e}  step {:.3e}", p.iter, p.value, p.gradient_norm, p.step);
    }
    if let Some(m) = &res.final_mesh {
        ctx.write("final.tmesh", &write_tmesh(m))?;
        if ctx.cfg.output.vtk {
            let disc = Discretization::new(m, &ctx.cfg.lagrangian)?;
            let shift = res.trajectory.last().map_or(o.target.shift, |p| p.eigenvalues[0]);
            let r = disc.solve(1, shift, &ctx.solver())?;
            let v = point_vectors(&disc.complex, &r.eigenvectors[0]);
            ctx.write("fields.vtk", &write_vtk(m, &[("v0".into(), v)]))?;
        }
    }
    ctx.results(json!({ "names": family.names, "optimization": res }))
}

pub fn mesh_info(ctx: &Context) -> Run {
    let mesh = ctx.mesh()?;
    mesh.validate()?;
    let cc = build_complex(&mesh)?;
    let basis = homology_basis(&cc)?;
    let (v, e, f, t) = mesh.simplex_counts();
    println!("vertices {v} edges {e} faces {f} tets {t}");
    println!("euler characteristic {}  boundary genus {}", mesh.euler_characteristic(), basis.genus);
    let mut info: Value = json!({
        "counts": { "vertices": v, "edges": e, "faces": f, "tets": t },
        "euler_characteristic": mesh.euler_characteristic(),
        "boundary_euler_characteristics": mesh.boundary_euler_characteristics(),
        "boundary_genus": basis.genus,
        "genus_per_component": basis.genus_per_component,
        "intersection_matrix": basis.intersection_matrix,
        "homology_from_tags": basis.from_tags,
        "volume": mesh.volume(),
        "boundary_area": mesh.boundary_area(),
        "diameter": mesh.diameter(),
        "quality": mesh.quality(),
    });
    info["domain_name"] = json!(mesh.domain_name);
    ctx.results(info)
}
