use nalgebra::DMatrix;

use super::params::BasisLabel;
use crate::{Error, Result, C64};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;
const POSITIVITY_TOL: f64 = 1e-9;

/// Density matrix in [`BasisLabel`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn pure(label: BasisLabel, dim: usize) -> Result<Self> {
        if label.index() >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: label.index() + 1,
            });
        }
        let mut m = DMatrix::zeros(dim, dim);
        m[(label.index(), label.index())] = C64::new(1.0, 0.0);
        Ok(Self { m })
    }

    /// `|ψ⟩⟨ψ|` for the normalized `psi`.
    pub fn from_state_vector(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("state vector", "zero or non-finite norm"));
        }
        let n = psi.len();
        let m = DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Ok(Self { m })
    }

    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(m)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix"));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_row_major(dim: usize, flat: &[C64]) -> Self {
        Self {
            m: DMatrix::from_row_slice(dim, dim, flat),
        }
    }

    pub(crate) fn to_row_major(&self) -> Vec<C64> {
        let n = self.dim();
        let mut v = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                v.push(self.m[(i, j)]);
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_error();
        if h > HERMITIAN_TOL {
            return Err(Error::NotHermitian(h));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::invalid("density matrix", format!("trace {tr}")));
        }
        let ev = self.min_eigenvalue();
        if ev < -POSITIVITY_TOL {
            return Err(Error::invalid(
                "density matrix",
                format!("negative eigenvalue {ev}"),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn population(&self, label: BasisLabel) -> f64 {
        let k = label.index();
        if k >= self.dim() {
            return 0.0;
        }
        self.m[(k, k)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.m[(k, k)].re).collect()
    }

    /// Largest entry of `|ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.m - self.m.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_state_is_valid() {
        let rho = DensityMatrix::pure(BasisLabel::Up0, 5).unwrap();
        rho.validate().unwrap();
        assert_eq!(rho.population(BasisLabel::Up0), 1.0);
        assert!(DensityMatrix::pure(BasisLabel::UpPrime0, 4).is_err());
    }

    #[test]
    fn rejects_bad_trace_and_negative_eigenvalue() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.5, 0.0),
            C64::new(0.4, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]));
        assert!(DensityMatrix::from_matrix(m).is_err());
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.1, 0.0),
            C64::new(-0.1, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]));
        assert!(DensityMatrix::from_matrix(m).is_err());
    }

    #[test]
    fn superposition_from_vector() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::from_state_vector(&[
            C64::new(s, 0.0),
            C64::new(0.0, s),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ])
        .unwrap();
        rho.validate().unwrap();
        assert!(rho.min_eigenvalue().abs() < 1e-12);
    }
}
