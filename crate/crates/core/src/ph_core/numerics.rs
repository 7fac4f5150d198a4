//! Shared numerics: entrywise sup norms, structural tolerances, conditioning
//! estimates and the symmetric definiteness classifier.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{PhError, Result};

/// Relative factor of the structural tolerance `1e-9 * (1 + |M|)`.
pub const SYM_TOL_FACTOR: f64 = 1e-9;

/// Reciprocal condition numbers below this are treated as singular.
pub const COND_TOL: f64 = 1e-12;

/// Default relative tolerance band for definiteness verdicts.
pub const DEFINITENESS_TOL: f64 = 1e-9;

/// Largest absolute entry of a matrix (zero for empty matrices).
pub fn sup_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest absolute entry of a vector.
pub fn sup_norm_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Structural tolerance scaled by the magnitude of `m`.
pub fn sym_tol(m: &DMatrix<f64>) -> f64 {
    SYM_TOL_FACTOR * (1.0 + sup_norm(m))
}

/// `|M - M^T|` in the sup norm.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    sup_norm(&(m - m.transpose()))
}

/// `|M + M^T|` in the sup norm.
pub fn skew_defect(m: &DMatrix<f64>) -> f64 {
    sup_norm(&(m + m.transpose()))
}

pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn skew_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m - m.transpose()) * 0.5
}

/// Ratio of extreme singular values; 0 for singular or empty-but-rankless input,
/// 1 for a 0x0 matrix.
pub fn rcond(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 || !max.is_finite() {
        return 0.0;
    }
    sv.min() / max
}

/// Solves `m * X = rhs` for square, well-conditioned `m`; `None` when the
/// reciprocal condition falls under [`COND_TOL`].
pub fn solve_checked(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, f64> {
    let rc = rcond(m);
    if rc < COND_TOL {
        return Err(rc);
    }
    m.clone().lu().solve(rhs).ok_or(0.0)
}

pub fn solve_checked_vec(m: &DMatrix<f64>, rhs: &DVector<f64>) -> std::result::Result<DVector<f64>, f64> {
    let rc = rcond(m);
    if rc < COND_TOL {
        return Err(rc);
    }
    m.clone().lu().solve(rhs).ok_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
    NegativeSemidefinite,
    NegativeDefinite,
}

impl Definiteness {
    pub fn as_str(self) -> &'static str {
        match self {
            Definiteness::PositiveDefinite => "positive-definite",
            Definiteness::PositiveSemidefinite => "positive-semidefinite",
            Definiteness::Indefinite => "indefinite",
            Definiteness::NegativeSemidefinite => "negative-semidefinite",
            Definiteness::NegativeDefinite => "negative-definite",
        }
    }
}

impl std::fmt::Display for Definiteness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Spectrum-based definiteness classification of a symmetric matrix.
///
/// Eigenvalues inside the band `±tol_used` count as zero. The zero matrix
/// (every eigenvalue in the band) is reported as positive-semidefinite; use
/// [`DefinitenessVerdict::is_nsd`] for the tolerance-aware opposite check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefinitenessVerdict {
    pub classification: Definiteness,
    pub min_eig: f64,
    pub max_eig: f64,
    pub tol_used: f64,
}

impl DefinitenessVerdict {
    pub fn is_pd(&self) -> bool {
        self.classification == Definiteness::PositiveDefinite
    }

    /// `M ⪰ 0` within the band.
    pub fn is_psd(&self) -> bool {
        self.min_eig >= -self.tol_used
    }

    /// `M ⪯ 0` within the band.
    pub fn is_nsd(&self) -> bool {
        self.max_eig <= self.tol_used
    }
}

/// Classifies a symmetric matrix. The tolerance band is `tol * (1 + |M|)`.
pub fn definiteness(m: &DMatrix<f64>, tol: f64) -> Result<DefinitenessVerdict> {
    if !m.is_square() {
        return Err(PhError::DimensionMismatch(format!(
            "definiteness needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let defect = asymmetry(m);
    let stol = sym_tol(m);
    if defect > stol {
        return Err(PhError::NotSymmetric { defect, tol: stol });
    }
    let band = tol * (1.0 + sup_norm(m));
    if m.nrows() == 0 {
        return Ok(DefinitenessVerdict {
            classification: Definiteness::PositiveSemidefinite,
            min_eig: 0.0,
            max_eig: 0.0,
            tol_used: band,
        });
    }
    let eig = SymmetricEigen::new(symmetric_part(m)).eigenvalues;
    let min_eig = eig.min();
    let max_eig = eig.max();
    let classification = if min_eig > band {
        Definiteness::PositiveDefinite
    } else if min_eig >= -band {
        Definiteness::PositiveSemidefinite
    } else if max_eig > band {
        Definiteness::Indefinite
    } else if max_eig < -band {
        Definiteness::NegativeDefinite
    } else {
        Definiteness::NegativeSemidefinite
    };
    Ok(DefinitenessVerdict {
        classification,
        min_eig,
        max_eig,
        tol_used: band,
    })
}

/// Row-major nested vectors, the layout used by every JSON artifact.
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Builds a matrix from row-major nested vectors with an explicit shape, so
/// that `n x 0` and `0 x m` matrices survive the trip.
pub fn from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize, name: &str) -> Result<DMatrix<f64>> {
    if ncols == 0 {
        if !(rows.is_empty() || rows.len() == nrows) || rows.iter().any(|r| !r.is_empty()) {
            return Err(PhError::DimensionMismatch(format!(
                "{name}: expected {nrows}x0"
            )));
        }
        return Ok(DMatrix::zeros(nrows, 0));
    }
    if rows.len() != nrows {
        return Err(PhError::DimensionMismatch(format!(
            "{name}: expected {nrows} rows, got {}",
            rows.len()
        )));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(PhError::DimensionMismatch(format!(
                "{name}: row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(PhError::Model(format!("{name}: non-finite entry in row {i}")));
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}
