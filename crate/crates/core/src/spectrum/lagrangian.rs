use crate::complex::HomologyBasis;
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Vanishing circulation around the bounding cycles α_j (the Lagrangian
    /// cut out by the cut surfaces), together with zero flux through them.
    ZeroFlux,
    Custom,
}

/// A boundary condition given as ℓ linear functionals on period vectors
/// (α_1..α_ℓ, β_1..β_ℓ): L = ker F.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianSpec {
    pub preset: Preset,
    /// Rows of F; empty for the zero-flux preset, which resolves to [I | 0].
    #[serde(default)]
    pub f: Vec<Vec<f64>>,
}

impl Default for LagrangianSpec {
    fn default() -> Self {
        Self::zero_flux()
    }
}

impl LagrangianSpec {
    pub fn zero_flux() -> Self {
        LagrangianSpec { preset: Preset::ZeroFlux, f: vec![] }
    }

    pub fn custom(f: Vec<Vec<f64>>) -> Self {
        LagrangianSpec { preset: Preset::Custom, f }
    }

    /// Complex constraint matrices are accepted only when they are real.
    pub fn custom_complex(re: Vec<Vec<f64>>, im: Vec<Vec<f64>>) -> Result<Self> {
        if im.iter().flatten().any(|&x| x != 0.0) {
            return Err(Error::Unsupported("non-real Lagrangian subspaces".into()));
        }
        Ok(Self::custom(re))
    }

    pub fn is_real(&self) -> bool {
        true
    }

    /// The constraint matrix for a boundary of total genus ℓ.
    pub fn matrix(&self, genus: usize) -> Result<DMatrix<f64>> {
        match self.preset {
            Preset::ZeroFlux => Ok(DMatrix::from_fn(genus, 2 * genus, |i, j| (i == j) as i32 as f64)),
            Preset::Custom => {
                if self.f.iter().any(|r| r.len() != 2 * genus) {
                    return Err(Error::InconsistentLagrangian(format!("rows of F must have length 2ℓ = {}", 2 * genus)));
                }
                Ok(DMatrix::from_fn(self.f.len(), 2 * genus, |i, j| self.f[i][j]))
            }
        }
    }

    /// |F Ω Fᵀ| relative to |F|², zero exactly when ker F is isotropic.
    pub fn isotropy_defect(&self, basis: &HomologyBasis) -> Result<f64> {
        let f = self.matrix(basis.genus)?;
        let n = 2 * basis.genus;
        if n == 0 || f.nrows() == 0 {
            return Ok(0.0);
        }
        let om = DMatrix::from_fn(n, n, |i, j| basis.intersection_matrix[i][j] as f64);
        let g = &f * om * f.transpose();
        Ok(g.amax() / (f.amax() * f.amax()))
    }

    /// Checks rank F = ℓ and F Ω Fᵀ = 0.
    pub fn validate(&self, basis: &HomologyBasis) -> Result<()> {
        let l = basis.genus;
        let f = self.matrix(l)?;
        if f.nrows() != l {
            return Err(Error::InconsistentLagrangian(format!("F has {} rows, genus is {l}", f.nrows())));
        }
        if l == 0 {
            return Ok(());
        }
        let sv = f.clone().svd(false, false).singular_values;
        if sv.min() <= 1e-10 * sv.max() {
            return Err(Error::InconsistentLagrangian("rows of F are linearly dependent".into()));
        }
        let d = self.isotropy_defect(basis)?;
        if d > 1e-10 {
            return Err(Error::InconsistentLagrangian(format!("ker F is not isotropic (|FΩFᵀ| = {d:e})")));
        }
        Ok(())
    }
}
