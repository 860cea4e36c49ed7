use curlspec::hadamard::{DensityMethod, SplitOptions, TrackOptions};
use curlspec::mesh::harmonics::{spherical_harmonic_field, torus_mode_field, TorusMode};
use curlspec::mesh::{
    generate_ball, generate_handlebody, generate_solid_torus, read_gmsh, read_tmesh, DeformationField, TetMesh, Vec3,
};
use curlspec::shapeopt::{EigenTarget, OptimizeOptions, ShapeFamily};
use curlspec::spectrum::{LagrangianSpec, SolverOptions};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// One JSON document drives every subcommand; blocks a command does not
/// use are ignored.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Domain,
    pub lagrangian: LagrangianSpec,
    pub solver: SolveBlock,
    pub hadamard: HadamardBlock,
    pub track: TrackBlock,
    pub split: SplitOptions,
    pub optimize: OptimizeBlock,
    pub output: OutputBlock,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Ball {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "two")]
        refinement: u32,
    },
    Torus {
        #[serde(default = "two_f")]
        major: f64,
        #[serde(default = "half")]
        minor: f64,
        #[serde(default = "two")]
        refinement: u32,
    },
    Handlebody {
        #[serde(default = "two")]
        genus: u32,
        #[serde(default = "one_u")]
        refinement: u32,
    },
    /// .tmesh or gmsh .msh file.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}
fn two_f() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn two() -> u32 {
    2
}
fn one_u() -> u32 {
    1
}

impl Default for Domain {
    fn default() -> Self {
        Domain::Ball { radius: 1.0, refinement: 2 }
    }
}

impl Domain {
    pub fn build(&self) -> curlspec::Result<TetMesh> {
        match self {
            Domain::Ball { radius, refinement } => generate_ball(*radius, *refinement),
            Domain::Torus { major, minor, refinement } => generate_solid_torus(*major, *minor, *refinement),
            Domain::Handlebody { genus, refinement } => generate_handlebody(*genus, *refinement),
            Domain::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    curlspec::Error::InvalidParameter(format!("cannot read mesh {}: {e}", path.display()))
                })?;
                if path.extension().is_some_and(|e| e == "msh") {
                    read_gmsh(&text)
                } else {
                    read_tmesh(&text)
                }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveBlock {
    pub k: usize,
    pub shift: f64,
    pub tol: f64,
    pub block_size: usize,
    pub max_basis: usize,
    pub max_applications: usize,
    pub max_shift_retries: usize,
    pub gap_tol: f64,
}

impl Default for SolveBlock {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolveBlock {
            k: 6,
            shift: 4.0,
            tol: d.tol,
            block_size: d.block_size,
            max_basis: d.max_basis,
            max_applications: d.max_applications,
            max_shift_retries: d.max_shift_retries,
            gap_tol: d.gap_tol,
        }
    }
}

impl SolveBlock {
    pub fn options(&self, seed: u64) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            block_size: self.block_size,
            max_basis: self.max_basis,
            max_applications: self.max_applications,
            max_shift_retries: self.max_shift_retries,
            gap_tol: self.gap_tol,
            seed,
        }
    }
}

/// Deformation fields addressable from a config.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Translation { direction: [f64; 3] },
    Dilation {
        #[serde(default)]
        origin: [f64; 3],
    },
    SphericalHarmonic {
        l: u32,
        m: i32,
        #[serde(default)]
        center: [f64; 3],
    },
    TorusMode {
        p: i32,
        q: i32,
        #[serde(default)]
        sine: bool,
        #[serde(default = "two_f")]
        major: f64,
    },
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::SphericalHarmonic { l: 2, m: 0, center: [0.0; 3] }
    }
}

impl FieldSpec {
    pub fn build(&self, mesh: &TetMesh) -> curlspec::Result<DeformationField> {
        match self {
            FieldSpec::Translation { direction } => Ok(DeformationField::translation(mesh, *direction)),
            FieldSpec::Dilation { origin } => Ok(DeformationField::dilation(mesh, *origin)),
            FieldSpec::SphericalHarmonic { l, m, center } => {
                if m.unsigned_abs() > *l {
                    return Err(curlspec::Error::InvalidParameter(format!("spherical harmonic |m| = {} > l = {l}", m.abs())));
                }
                spherical_harmonic_field(mesh, *l, *m, Vec3::from(*center))
            }
            FieldSpec::TorusMode { p, q, sine, major } => {
                torus_mode_field(mesh, TorusMode { p: *p, q: *q, sine: *sine }, *major)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HadamardBlock {
    pub field: FieldSpec,
    pub shift: f64,
    pub k: usize,
    /// Steps relative to the mesh diameter.
    pub deltas: Vec<f64>,
    pub method: DensityMethod,
}

impl Default for HadamardBlock {
    fn default() -> Self {
        HadamardBlock {
            field: FieldSpec::default(),
            shift: 4.5,
            k: 6,
            deltas: vec![1e-3, 5e-4, 2.5e-4, 1.25e-4],
            method: DensityMethod::Recovered,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackBlock {
    pub field: FieldSpec,
    pub shift: f64,
    /// Branches tracked; 0 takes the cluster nearest the shift.
    pub multiplicity: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub extra: usize,
    pub min_overlap: f64,
}

impl Default for TrackBlock {
    fn default() -> Self {
        let d = TrackOptions::default();
        TrackBlock {
            field: FieldSpec::default(),
            shift: 4.5,
            multiplicity: 0,
            t_start: 0.0,
            t_end: 0.1,
            steps: 10,
            extra: d.extra,
            min_overlap: d.min_overlap,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    SphericalHarmonics {
        l_min: u32,
        l_max: u32,
        #[serde(default)]
        center: [f64; 3],
    },
    TorusFourier {
        p_max: i32,
        q_max: i32,
        #[serde(default = "two_f")]
        major: f64,
    },
    Dilation {
        #[serde(default)]
        origin: [f64; 3],
    },
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec::SphericalHarmonics { l_min: 2, l_max: 4, center: [0.0; 3] }
    }
}

impl FamilySpec {
    pub fn build(&self, base: TetMesh) -> curlspec::Result<ShapeFamily> {
        match self {
            FamilySpec::SphericalHarmonics { l_min, l_max, center } => {
                ShapeFamily::spherical_harmonics(base, *l_min, *l_max, Vec3::from(*center))
            }
            FamilySpec::TorusFourier { p_max, q_max, major } => ShapeFamily::torus_fourier(base, *major, *p_max, *q_max),
            FamilySpec::Dilation { origin } => ShapeFamily::dilation_only(base, *origin),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeBlock {
    pub family: FamilySpec,
    pub target: EigenTarget,
    pub options: OptimizeOptions,
    /// Starting parameters (empty = base mesh); resume from a previous
    /// run's `final_c`.
    pub initial_c: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub vtk: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { vtk: true }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.solver.k == 0 {
            return Err("solver.k must be positive".into());
        }
        if !(self.solver.tol > 0.0) {
            return Err("solver.tol must be positive".into());
        }
        if self.hadamard.deltas.is_empty() || self.hadamard.deltas.iter().any(|d| !(*d > 0.0)) {
            return Err("hadamard.deltas must be a non-empty list of positive steps".into());
        }
        if self.track.steps == 0 {
            return Err("track.steps must be positive".into());
        }
        if self.split.trials == 0 {
            return Err("split.trials must be positive".into());
        }
        if !(self.split.amplitude >= 0.0) {
            return Err("split.amplitude must be non-negative".into());
        }
        match &self.domain {
            Domain::Ball { radius, .. } if !(*radius > 0.0) => return Err("domain.radius must be positive".into()),
            Domain::Torus { major, minor, .. } if !(*minor > 0.0 && major > minor) => {
                return Err("domain.major must exceed domain.minor > 0".into())
            }
            _ => {}
        }
        Ok(())
    }
}
