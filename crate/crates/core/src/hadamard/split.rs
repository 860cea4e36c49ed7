use super::track::select_by_projection;
use crate::mesh::harmonics::{harmonic_indices, real_spherical_harmonic};
use crate::mesh::{deform, generate_ball, harmonic_extension, TetMesh, Vec3};
use crate::spectrum::{Discretization, LagrangianSpec, SolverOptions};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitOptions {
    pub radius: f64,
    /// Fine level; the gap error is estimated against level − 1.
    pub refinement: u32,
    /// max |f| on the boundary as a fraction of the radius.
    pub amplitude: f64,
    pub trials: usize,
    pub seed: u64,
    pub l_min: u32,
    pub l_max: u32,
    /// Multiple of the estimated gap error a gap must exceed.
    pub safety: f64,
    /// Convergence order assumed for the gap error estimate.
    pub order: f64,
    pub extra: usize,
    pub parallel: bool,
    pub solver: SolverOptions,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            radius: 1.0,
            refinement: 2,
            amplitude: 0.02,
            trials: 50,
            seed: 1,
            l_min: 2,
            l_max: 4,
            safety: 3.0,
            order: 2.0,
            extra: 2,
            parallel: true,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitTrial {
    pub trial: usize,
    pub coefficients: Vec<f64>,
    /// Sorted triple at the fine level.
    pub eigenvalues: Vec<f64>,
    pub gaps: [f64; 2],
    pub coarse_gaps: [f64; 2],
    pub thresholds: [f64; 2],
    pub resolved: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitStatistics {
    pub options: SplitOptions,
    pub base_cluster: Vec<f64>,
    pub trials: Vec<SplitTrial>,
    /// Trials discarded because the perturbed mesh inverted a tet.
    pub inverted: usize,
    pub valid: usize,
    pub split: usize,
    pub split_fraction: f64,
}

struct Level {
    mesh: TetMesh,
    m2: crate::sparse::Csr,
    fields: Vec<Vec<f64>>,
    values: Vec<f64>,
}

fn base_level(radius: f64, r: u32, opts: &SplitOptions) -> Result<Level> {
    let mesh = generate_ball(radius, r)?;
    let d = Discretization::new(&mesh, &LagrangianSpec::zero_flux())?;
    let res = d.solve(3 + opts.extra, 4.0 / radius, &opts.solver)?;
    let first = res.first_positive().ok_or_else(|| Error::InvalidParameter("no positive eigenvalue".into()))?;
    let c = res.cluster_of(first).unwrap().clone();
    if c.len != 3 {
        return Err(Error::InvalidParameter(format!("base cluster has multiplicity {} at refinement {r}", c.len)));
    }
    let range = c.start..c.start + 3;
    Ok(Level {
        m2: d.complex.m2.clone(),
        fields: res.fields[range.clone()].to_vec(),
        values: res.eigenvalues[range].to_vec(),
        mesh,
    })
}

fn perturbed_triple(level: &Level, speed: &dyn Fn(Vec3) -> f64, opts: &SplitOptions) -> Result<Vec<f64>> {
    let s: Vec<f64> = level.mesh.boundary_vertices().iter().map(|&v| speed(level.mesh.point(v))).collect();
    let field = harmonic_extension(&level.mesh, &s)?;
    let moved = deform(&level.mesh, &field, 1.0)?;
    let d = Discretization::new(&moved, &LagrangianSpec::zero_flux())?;
    let r = d.solve(3 + opts.extra, 4.0 / opts.radius, &opts.solver)?;
    let pick = select_by_projection(&level.m2, &level.fields, &r.fields, 3);
    let mut v: Vec<f64> = pick.iter().map(|&j| r.eigenvalues[j]).collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Random boundary perturbations of the ball along real spherical
/// harmonics l_min..=l_max with standard normal coefficients. A trial
/// splits the triple if both gaps exceed `safety` times their Richardson
/// error estimate from two refinement levels (and a solver floor).
pub fn split_experiment(opts: &SplitOptions) -> Result<SplitStatistics> {
    if opts.refinement == 0 {
        return Err(Error::InvalidParameter("split experiment needs refinement ≥ 1".into()));
    }
    let fine = base_level(opts.radius, opts.refinement, opts)?;
    let coarse = base_level(opts.radius, opts.refinement - 1, opts)?;
    let modes = harmonic_indices(opts.l_min, opts.l_max);
    let factor = 2f64.powf(opts.order) - 1.0;
    let floor = 100.0 * opts.solver.tol * fine.values[2].abs();

    let run = |trial: usize| -> Result<Option<SplitTrial>> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(trial as u64);
        let coefficients: Vec<f64> = modes.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
        let raw = |x: Vec3| -> f64 {
            modes.iter().zip(&coefficients).map(|(&(l, m), c)| c * real_spherical_harmonic(l, m, x)).sum()
        };
        // normalise on the fine boundary so both levels see the same shape
        let peak = fine.mesh.boundary_vertices().iter().map(|&v| raw(fine.mesh.point(v)).abs()).fold(0.0, f64::max);
        let scale = if peak > 0.0 { opts.amplitude * opts.radius / peak } else { 0.0 };
        let speed = move |x: Vec3| scale * raw(x);
        let tf = match perturbed_triple(&fine, &speed, opts) {
            Err(Error::TetInversion { .. }) => return Ok(None),
            r => r?,
        };
        let tc = match perturbed_triple(&coarse, &speed, opts) {
            Err(Error::TetInversion { .. }) => return Ok(None),
            r => r?,
        };
        let gaps = [tf[1] - tf[0], tf[2] - tf[1]];
        let coarse_gaps = [tc[1] - tc[0], tc[2] - tc[1]];
        let thresholds = [0, 1].map(|i| (opts.safety * (gaps[i] - coarse_gaps[i]).abs() / factor).max(floor));
        let resolved = gaps[0] > thresholds[0] && gaps[1] > thresholds[1];
        Ok(Some(SplitTrial { trial, coefficients, eigenvalues: tf, gaps, coarse_gaps, thresholds, resolved }))
    };
    let results: Vec<Result<Option<SplitTrial>>> = if opts.parallel {
        (0..opts.trials).into_par_iter().map(run).collect()
    } else {
        (0..opts.trials).map(run).collect()
    };
    let mut trials = Vec::new();
    let mut inverted = 0;
    for r in results {
        match r? {
            Some(t) => trials.push(t),
            None => inverted += 1,
        }
    }
    let valid = trials.len();
    let split = trials.iter().filter(|t| t.resolved).count();
    Ok(SplitStatistics {
        options: opts.clone(),
        base_cluster: fine.values.clone(),
        trials,
        inverted,
        valid,
        split,
        split_fraction: if valid > 0 { split as f64 / valid as f64 } else { 0.0 },
    })
}
