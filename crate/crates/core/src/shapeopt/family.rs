use crate::mesh::harmonics::{harmonic_indices, spherical_harmonic_field, torus_mode_field, TorusMode};
use crate::mesh::{deform, DeformationField, TetMesh, Vec3};
use crate::{Error, Result};

/// Affine family of meshes x + Σ c_i X_i(x) over a fixed base mesh.
#[derive(Clone, Debug)]
pub struct ShapeFamily {
    pub base: TetMesh,
    pub fields: Vec<DeformationField>,
    pub names: Vec<String>,
    /// Human-readable description of the truncated basis.
    pub truncation: String,
}

impl ShapeFamily {
    pub fn new(base: TetMesh, fields: Vec<DeformationField>, truncation: &str) -> Result<Self> {
        for f in &fields {
            if f.displacement.len() != base.vertices.len() {
                return Err(Error::DimensionMismatch { expected: base.vertices.len(), found: f.displacement.len() });
            }
        }
        let names = fields.iter().map(|f| f.description.clone()).collect();
        Ok(ShapeFamily { base, fields, names, truncation: truncation.into() })
    }

    /// Harmonic extensions of Y_lm normal speeds, l_min ≤ l ≤ l_max.
    pub fn spherical_harmonics(base: TetMesh, l_min: u32, l_max: u32, center: Vec3) -> Result<Self> {
        let fields = harmonic_indices(l_min, l_max)
            .into_iter()
            .map(|(l, m)| spherical_harmonic_field(&base, l, m, center))
            .collect::<Result<Vec<_>>>()?;
        Self::new(base, fields, &format!("real spherical harmonics {l_min} ≤ l ≤ {l_max}"))
    }

    /// cos and sin modes (p, q) with |p| ≤ p_max, 0 ≤ q ≤ q_max, skipping
    /// duplicates and the vanishing sin(0).
    pub fn torus_fourier(base: TetMesh, major: f64, p_max: i32, q_max: i32) -> Result<Self> {
        let mut fields = Vec::new();
        for q in 0..=q_max {
            for p in -p_max..=p_max {
                if q == 0 && p < 0 {
                    continue;
                }
                for sine in [false, true] {
                    if sine && p == 0 && q == 0 {
                        continue;
                    }
                    fields.push(torus_mode_field(&base, TorusMode { p, q, sine }, major)?);
                }
            }
        }
        Self::new(base, fields, &format!("torus Fourier modes |p| ≤ {p_max}, q ≤ {q_max}"))
    }

    pub fn dilation_only(base: TetMesh, origin: [f64; 3]) -> Result<Self> {
        let f = DeformationField::dilation(&base, origin);
        Self::new(base, vec![f], "dilation only")
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    pub fn displacement(&self, c: &[f64]) -> Result<DeformationField> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: c.len() });
        }
        if self.fields.is_empty() {
            return Ok(DeformationField::zero(&self.base));
        }
        let parts: Vec<(&DeformationField, f64)> = self.fields.iter().zip(c.iter().copied()).collect();
        Ok(DeformationField::combine(&parts, "family displacement"))
    }

    /// The mesh at parameters c; c = 0 is the base mesh.
    pub fn mesh_at(&self, c: &[f64]) -> Result<TetMesh> {
        if c.iter().all(|&x| x == 0.0) {
            if c.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), found: c.len() });
            }
            return Ok(self.base.clone());
        }
        deform(&self.base, &self.displacement(c)?, 1.0)
    }
}
