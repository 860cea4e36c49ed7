use super::{cluster_gradient, evaluate, extremality_certificate, EigenTarget, Evaluated, ExtremalityReport, ShapeFamily};
use nalgebra::DVector;
use crate::hadamard::{cross_density, DensityContext};
use crate::mesh::{DeformationField, TetMesh};
use crate::spectrum::{LagrangianSpec, SolverOptions};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeOptions {
    pub direction: Direction,
    pub max_iters: usize,
    /// Stop when ‖∇‖ ≤ gtol · |value|.
    pub gtol: f64,
    /// Length of the first trial step in parameter space.
    pub initial_step: f64,
    /// Stop when the accepted step would be shorter than this.
    pub min_step: f64,
    pub armijo: f64,
    pub max_halvings: usize,
    pub certificate: bool,
    pub parallel: bool,
    pub solver: SolverOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            direction: Direction::Minimize,
            max_iters: 20,
            gtol: 1e-8,
            initial_step: 0.05,
            min_step: 1e-8,
            armijo: 1e-4,
            max_halvings: 12,
            certificate: true,
            parallel: true,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Gradient,
    StepUnderflow,
    MaxIters,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iter: usize,
    pub c: Vec<f64>,
    /// Target eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub volume: f64,
    /// The optimised quantity: |Ω|^{1/3} times the chosen member of the
    /// target group.
    pub value: f64,
    pub gradient_norm: f64,
    /// Parameter-space length of the step that led here (0 at the start).
    pub step: f64,
    /// Multiplicity of the differentiated eigenvalue.
    pub multiplicity: usize,
    pub halvings: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub trajectory: Vec<TrajectoryPoint>,
    pub stop_reason: StopReason,
    pub final_c: Vec<f64>,
    pub final_gradient: Vec<f64>,
    pub final_gradient_norm: f64,
    pub truncation: String,
    /// Label of the result: stationarity holds only within the family.
    pub status: String,
    pub certificate: Option<ExtremalityReport>,
    #[serde(skip)]
    pub final_mesh: Option<TetMesh>,
}

struct Trial {
    c: Vec<f64>,
    mesh: TetMesh,
    ev: Evaluated,
    /// Target group eigenvalues, ascending.
    eigenvalues: Vec<f64>,
    /// Index into the solver output of the optimised member.
    pick: usize,
    volume: f64,
    value: f64,
}

fn trial_at(family: &ShapeFamily, c: &[f64], lag: &LagrangianSpec, target: &EigenTarget, opts: &OptimizeOptions) -> Result<Trial> {
    let mesh = family.mesh_at(c)?;
    let ev = evaluate(&mesh, lag, target, &opts.solver)?;
    let eigenvalues: Vec<f64> = ev.group.iter().map(|&i| ev.result.eigenvalues[i]).collect();
    let pick = ev.group[target.member.min(ev.group.len() - 1)];
    let volume = mesh.volume();
    let value = volume.cbrt() * ev.result.eigenvalues[pick];
    Ok(Trial { c: c.to_vec(), mesh, ev, eigenvalues, pick, volume, value })
}

/// Gradient used for the step. A simple target uses its derivative. In a
/// degenerate cluster, when the target is the cluster edge that moves in
/// the wanted direction (lowest when minimising, highest when
/// maximising), the gradient of a Rayleigh quotient aᵀN(c)a is used: the
/// edge moves at least as fast as any such quotient, so its negative is a
/// guaranteed descent direction. Otherwise the worst-case branch
/// derivative is taken per component (largest when minimising).
fn descent_gradient(family: &ShapeFamily, t: &Trial, opts: &OptimizeOptions) -> Result<(Vec<f64>, usize)> {
    let r = &t.ev.result;
    let cl = r.cluster_of(t.pick).ok_or_else(|| Error::InvalidParameter("no cluster".into()))?;
    let members: Vec<usize> = (cl.start..cl.start + cl.len).filter(|i| t.ev.group.contains(i)).collect();
    let fields: Vec<Vec<f64>> = members.iter().map(|&i| r.fields[i].clone()).collect();
    let xs: Vec<&DeformationField> = family.fields.iter().collect();
    let lambda = r.eigenvalues[t.pick];
    let g = cluster_gradient(&t.ev.disc, lambda, &fields, &xs, opts.parallel)?;
    let m = members.len();
    if m == 1 {
        return Ok((g.components, 1));
    }
    let pos = members.iter().position(|&i| i == t.pick).unwrap();
    let minimize = opts.direction == Direction::Minimize;
    if (minimize && pos == 0) || (!minimize && pos == m - 1) {
        let mut cands: Vec<DVector<f64>> = (0..m).map(|k| DVector::from_fn(m, |i, _| (i == k) as i32 as f64)).collect();
        for n in &g.matrices {
            let e = n.clone().symmetric_eigen();
            let k = if minimize { e.eigenvalues.imin() } else { e.eigenvalues.imax() };
            cands.push(e.eigenvectors.column(k).into_owned());
        }
        let grad_of = |a: &DVector<f64>| -> Vec<f64> { g.matrices.iter().map(|n| (a.transpose() * n * a)[(0, 0)]).collect() };
        let best = cands
            .iter()
            .map(|a| grad_of(a))
            .max_by(|x, y| norm(x).total_cmp(&norm(y)))
            .unwrap();
        return Ok((best, m));
    }
    let worst = g.intervals.iter().map(|&(lo, hi)| if minimize { hi } else { lo }).collect();
    Ok((worst, m))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Backtracking gradient iteration on |Ω|^{1/3} λ over the family.
/// Gradients are computed only at accepted points.
pub fn optimize(
    family: &ShapeFamily,
    c0: &[f64],
    lag: &LagrangianSpec,
    target: &EigenTarget,
    opts: &OptimizeOptions,
) -> Result<OptimizeResult> {
    let sign = if opts.direction == Direction::Minimize { 1.0 } else { -1.0 };
    let mut tgt = target.clone();
    let mut s = trial_at(family, c0, lag, &tgt, opts)?;
    tgt.multiplicity = s.eigenvalues.len();
    // the shift follows the group at a fixed relative offset, so it never
    // sits exactly on a target eigenvalue
    let mean0 = s.eigenvalues.iter().sum::<f64>() / s.eigenvalues.len() as f64;
    let ratio = if mean0 != 0.0 { target.shift / mean0 } else { 1.0 };
    let (mut grad, mut mult) = descent_gradient(family, &s, opts)?;
    let point = |s: &Trial, grad: &[f64], mult, iter, step, halvings| TrajectoryPoint {
        iter,
        c: s.c.clone(),
        eigenvalues: s.eigenvalues.clone(),
        volume: s.volume,
        value: s.value,
        gradient_norm: norm(grad),
        step,
        multiplicity: mult,
        halvings,
    };
    let mut trajectory = vec![point(&s, &grad, mult, 0, 0.0, 0)];
    let mut stop = StopReason::MaxIters;
    for iter in 1..=opts.max_iters {
        let gn = norm(&grad);
        if gn <= opts.gtol * s.value.abs().max(1e-300) {
            stop = StopReason::Gradient;
            break;
        }
        let dir: Vec<f64> = grad.iter().map(|g| -sign * g / gn).collect();
        tgt.shift = ratio * s.eigenvalues.iter().sum::<f64>() / s.eigenvalues.len() as f64;
        let mut alpha = opts.initial_step;
        let mut halvings = 0;
        let mut accepted = None;
        while alpha >= opts.min_step && halvings <= opts.max_halvings {
            let c: Vec<f64> = s.c.iter().zip(&dir).map(|(x, d)| x + alpha * d).collect();
            match trial_at(family, &c, lag, &tgt, opts) {
                Ok(next) => {
                    // Armijo along the unit direction
                    if sign * next.value <= sign * s.value - opts.armijo * alpha * gn {
                        accepted = Some(next);
                        break;
                    }
                }
                Err(Error::TetInversion { .. }) | Err(Error::DegenerateTet { .. }) => {}
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
            halvings += 1;
        }
        match accepted {
            Some(next) => {
                s = next;
                (grad, mult) = descent_gradient(family, &s, opts)?;
                trajectory.push(point(&s, &grad, mult, iter, alpha, halvings));
            }
            None => {
                stop = StopReason::StepUnderflow;
                break;
            }
        }
    }
    if stop == StopReason::MaxIters && norm(&grad) <= opts.gtol * s.value.abs().max(1e-300) {
        stop = StopReason::Gradient;
    }
    let certificate = if opts.certificate {
        let ctx = DensityContext::new(&s.mesh)?;
        let cc = &s.ev.disc.complex;
        let fields: Vec<&Vec<f64>> = s.ev.group.iter().map(|&i| &s.ev.result.fields[i]).collect();
        let m = fields.len();
        let dens: Vec<Vec<_>> =
            (0..m).map(|i| (0..m).map(|j| cross_density(cc, &ctx, fields[i], fields[j])).collect()).collect();
        Some(extremality_certificate(&dens)?)
    } else {
        None
    };
    Ok(OptimizeResult {
        final_gradient_norm: norm(&grad),
        final_gradient: grad,
        final_c: s.c.clone(),
        trajectory,
        status: match stop {
            StopReason::Gradient => "stationary within family".into(),
            StopReason::StepUnderflow => "step underflow (no Armijo decrease within the family)".into(),
            StopReason::MaxIters => "iteration cap reached".into(),
        },
        stop_reason: stop,
        truncation: family.truncation.clone(),
        certificate,
        final_mesh: Some(s.mesh),
    })
}
