//! First-order uncertainty propagation.
//!
//! Jacobians are obtained by central differences; covariances are pushed
//! through them as `J·Q·Jᵀ` and fused with inverse-covariance weights.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Finite-difference step for pixel-valued inputs (u, v, f, u0).
pub const PIXEL_STEP: f64 = 1e-3;

/// Condition number above which weights are Tikhonov-regularised.
const MAX_CONDITION: f64 = 1e12;

pub type Jacobian = DMatrix<f64>;

/// Step for metric or angular inputs: `max(1e-6, 1e-6·|x|)`.
pub fn metric_step(x: f64) -> f64 {
    (1e-6 * x.abs()).max(1e-6)
}

pub fn metric_steps(x: &[f64]) -> Vec<f64> {
    x.iter().copied().map(metric_step).collect()
}

/// Symmetric positive semi-definite matrix (within tolerance).
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance(DMatrix<f64>);

impl Covariance {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_covariance(&m)?;
        Ok(Self(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Symmetric within `1e-9` relative, eigenvalues `≥ −1e-9·trace`.
pub fn check_covariance(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!(
            "covariance must be square, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("covariance has non-finite entries".into()));
    }
    let scale = m.amax();
    if scale == 0.0 {
        return Ok(());
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-9 * scale {
        return Err(Error::InvalidArgument(format!("covariance is not symmetric ({asym:e})")));
    }
    let sym = (m + m.transpose()) * 0.5;
    let trace = sym.trace();
    let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
    if min_eig < -1e-9 * trace.abs().max(scale) {
        return Err(Error::InvalidArgument(format!(
            "covariance is not positive semi-definite (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(())
}

/// Central-difference Jacobian, one column per input:
/// `(f(x + hᵢeᵢ) − f(x − hᵢeᵢ)) / 2hᵢ`.
pub fn numerical_jacobian<F>(mut f: F, x: &DVector<f64>, steps: &[f64]) -> Result<Jacobian>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if steps.len() != x.len() {
        return Err(Error::InvalidArgument(format!(
            "{} steps for {} inputs",
            steps.len(),
            x.len()
        )));
    }
    if let Some(h) = steps.iter().find(|h| !(**h > 0.0)) {
        return Err(Error::InvalidArgument(format!("step sizes must be positive, got {h}")));
    }
    let mut jac: Option<DMatrix<f64>> = None;
    let mut probe = x.clone();
    for (i, &h) in steps.iter().enumerate() {
        probe[i] = x[i] + h;
        let plus = f(&probe)?;
        probe[i] = x[i] - h;
        let minus = f(&probe)?;
        probe[i] = x[i];
        let j = jac.get_or_insert_with(|| DMatrix::zeros(plus.len(), x.len()));
        j.set_column(i, &((plus - minus) / (2.0 * h)));
    }
    Ok(jac.unwrap_or_else(|| DMatrix::zeros(0, 0)))
}

/// `Σ = J·Q·Jᵀ`, symmetrised.
pub fn propagate(j: &Jacobian, q: &Covariance) -> Result<Covariance> {
    if j.ncols() != q.dim() {
        return Err(Error::InvalidArgument(format!(
            "Jacobian has {} columns but covariance is {}×{}",
            j.ncols(),
            q.dim(),
            q.dim()
        )));
    }
    let s = j * q.matrix() * j.transpose();
    Ok(Covariance((&s + s.transpose()) * 0.5))
}

/// Block-diagonal matrix with the blocks in the order given.
pub fn assemble_block_diag(blocks: &[&Covariance]) -> Covariance {
    let n = blocks.iter().map(|b| b.dim()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        let k = b.dim();
        out.view_mut((at, at), (k, k)).copy_from(b.matrix());
        at += k;
    }
    Covariance(out)
}

/// Inverse of a symmetric 3×3 covariance, Tikhonov-regularised with
/// `λ = 1e-12·trace/3` when its condition number exceeds `1e12`.
/// `None` when the matrix stays singular.
pub fn regularized_inverse3(m: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let trace = m.trace();
    if !(trace > 0.0) || !trace.is_finite() {
        return None;
    }
    let det = m.determinant();
    // cond ≤ trace³ / det for a positive definite matrix
    let well_conditioned = det > 0.0 && trace * trace * trace / det <= MAX_CONDITION;
    let target = if well_conditioned {
        *m
    } else {
        let eig = SymmetricEigen::new(*m).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        if lo > 0.0 && hi / lo <= MAX_CONDITION {
            *m
        } else {
            m + Matrix3::identity() * (1e-12 * trace / 3.0)
        }
    };
    target.try_inverse().filter(|inv| inv.iter().all(|v| v.is_finite()))
}

/// Running inverse-covariance weighted sum of 3-D points.
#[derive(Debug, Clone)]
pub struct WeightedFusion {
    weight_sum: Matrix3<f64>,
    weighted_points: Vec3,
    used: usize,
}

impl Default for WeightedFusion {
    fn default() -> Self {
        Self { weight_sum: Matrix3::zeros(), weighted_points: Vec3::zeros(), used: 0 }
    }
}

impl WeightedFusion {
    /// Adds one estimate; returns `false` if its covariance is singular.
    pub fn add(&mut self, p: &Vec3, cov: &Matrix3<f64>) -> bool {
        match regularized_inverse3(cov) {
            Some(w) => {
                self.weight_sum += w;
                self.weighted_points += w * p;
                self.used += 1;
                true
            }
            None => false,
        }
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn finish(&self) -> Result<(Vec3, Matrix3<f64>)> {
        if self.used == 0 {
            return Err(Error::DegenerateFusion);
        }
        let w = (self.weight_sum + self.weight_sum.transpose()) * 0.5;
        let sigma = w.try_inverse().ok_or(Error::DegenerateFusion)?;
        let sigma = (sigma + sigma.transpose()) * 0.5;
        Ok((sigma * self.weighted_points, sigma))
    }
}

/// `Σ̂ = (Σ Wᵢ)⁻¹`, `p̂ = Σ̂·Σ Wᵢpᵢ` with `Wᵢ = Σᵢ⁻¹`.
pub fn weighted_mean(points: &[Vec3], covs: &[Matrix3<f64>]) -> Result<(Vec3, Matrix3<f64>)> {
    if points.is_empty() || points.len() != covs.len() {
        return Err(Error::InvalidArgument(format!(
            "weighted mean needs matching non-empty inputs ({} points, {} covariances)",
            points.len(),
            covs.len()
        )));
    }
    if points.len() == 1 {
        return Ok((points[0], covs[0]));
    }
    let mut fusion = WeightedFusion::default();
    for (p, c) in points.iter().zip(covs) {
        fusion.add(p, c);
    }
    fusion.finish()
}
