//! Linear Casimir synthesis.
//!
//! For an LTI plant and a fixed controller port gain `Gc`, the Casimir
//! `C(x, ξ) = ξ - Kᵀx` requires
//!
//! ```text
//!     Kᵀ(J - R) = Gc Gᵀ                      (first matrix equation)
//!     KᵀG Gcᵀ + (Jc - Rc) = 0                (second matrix equation)
//! ```
//!
//! Transposing the first gives `K = -(J + R)⁻¹ G Gcᵀ`; substituting into the
//! second and splitting symmetric and skew parts yields the controller
//! structure `Rc = -KᵀRK`, `Jc = KᵀJK`. Nothing forces `Rc ⪰ 0`: when the
//! plant dissipates along `K`, the controller must be active.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{PhError, Result};
use crate::ph_core::numerics::{
    rcond, skew_part, sup_norm, symmetric_part, COND_TOL, SYM_TOL_FACTOR,
};
use crate::ph_core::{LtiPhSystem, QuadraticHamiltonian};

#[derive(Debug, Clone, PartialEq)]
pub struct CasimirSolution {
    /// `∂S/∂x`, n x n_c.
    pub k: DMatrix<f64>,
    /// Controller port gain, n_c x m.
    pub gc: DMatrix<f64>,
    /// Casimir level: `ξ = Kᵀx + κ` on the invariant leaf.
    pub kappa: DVector<f64>,
    pub jc: DMatrix<f64>,
    pub rc: DMatrix<f64>,
    pub residual_pde1: f64,
    pub residual_pde2: f64,
    /// `residual_pde1 <= chain_tol`.
    pub exact: bool,
    /// `J + R` was singular and `K` is the minimum-norm least-squares solution.
    pub least_squares: bool,
}

impl CasimirSolution {
    /// Builds the solution record for a given Casimir gradient `K`, deriving
    /// `Jc`, `Rc` and both residuals from the plant.
    pub fn from_gradient(
        plant: &LtiPhSystem,
        k: DMatrix<f64>,
        gc: DMatrix<f64>,
        kappa: DVector<f64>,
    ) -> Result<Self> {
        let nc = k.ncols();
        if gc.shape() != (nc, plant.m()) || kappa.len() != nc {
            return Err(PhError::DimensionMismatch(format!(
                "Gc is {}x{} and kappa has length {}, expected {nc}x{} and {nc}",
                gc.nrows(),
                gc.ncols(),
                kappa.len(),
                plant.m()
            )));
        }
        let (jc, rc) = induced_structure(plant, &k)?;
        let kt = k.transpose();
        let residual_pde1 = sup_norm(&(&kt * plant.j_minus_r() - &gc * plant.g().transpose()));
        let residual_pde2 =
            sup_norm(&(&kt * plant.g() * gc.transpose() + (&jc - &rc)));
        let exact = residual_pde1 <= chain_tol(plant);
        Ok(Self {
            k,
            gc,
            kappa,
            jc,
            rc,
            residual_pde1,
            residual_pde2,
            exact,
            least_squares: false,
        })
    }

    pub fn nc(&self) -> usize {
        self.k.ncols()
    }

    /// `S(x) = Kᵀx`.
    pub fn s(&self, x: &DVector<f64>) -> DVector<f64> {
        self.k.transpose() * x
    }

    /// `C(x, ξ) = ξ - Kᵀx`; equals `κ` on the invariant leaf.
    pub fn casimir_value(&self, x: &DVector<f64>, xi: &DVector<f64>) -> DVector<f64> {
        xi - self.s(x)
    }

    /// Replaces the level with the one passing through `(x0, ξ0)`.
    pub fn with_level_through(mut self, x0: &DVector<f64>, xi0: &DVector<f64>) -> Self {
        self.kappa = self.casimir_value(x0, xi0);
        self
    }
}

/// `1e-9 (1 + |J| + |R|)`: threshold for the classical chain and exactness.
pub fn chain_tol(plant: &LtiPhSystem) -> f64 {
    SYM_TOL_FACTOR * (1.0 + sup_norm(plant.j()) + sup_norm(plant.r()))
}

/// Solves for the Casimir gradient given the controller port gain.
///
/// Falls back to the minimum-norm least-squares solution when `J + R` is
/// singular; the defect then shows up in `residual_pde1` and `exact` is false.
pub fn solve_casimir(
    plant: &LtiPhSystem,
    gc: &DMatrix<f64>,
    kappa: &DVector<f64>,
) -> Result<CasimirSolution> {
    if gc.ncols() != plant.m() {
        return Err(PhError::DimensionMismatch(format!(
            "Gc has {} columns, plant has {} ports",
            gc.ncols(),
            plant.m()
        )));
    }
    let jpr = plant.j_plus_r();
    let rhs = -(plant.g() * gc.transpose());
    let mut least_squares = false;
    let k = if rcond(&jpr) >= COND_TOL {
        jpr.lu().solve(&rhs).ok_or(PhError::SingularDynamics { rcond: 0.0 })?
    } else {
        least_squares = true;
        let svd = jpr.svd(true, true);
        let eps = COND_TOL * svd.singular_values.max().max(f64::MIN_POSITIVE);
        svd.solve(&rhs, eps)
            .map_err(|e| PhError::DimensionMismatch(e.to_string()))?
    };
    let mut sol = CasimirSolution::from_gradient(plant, k, gc.clone(), kappa.clone())?;
    sol.least_squares = least_squares;
    Ok(sol)
}

/// `Rc = -KᵀRK`, `Jc = KᵀJK`, with round-off projected out of each.
pub fn induced_structure(
    plant: &LtiPhSystem,
    k: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if k.nrows() != plant.n() {
        return Err(PhError::DimensionMismatch(format!(
            "K has {} rows, plant state has dimension {}",
            k.nrows(),
            plant.n()
        )));
    }
    let kt = k.transpose();
    let jc = skew_part(&(&kt * plant.j() * k));
    let rc = -symmetric_part(&(&kt * plant.r() * k));
    Ok((jc, rc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObstacleClass {
    /// All four classical conditions hold: `KᵀJK = Jc`, `RK = 0`, `Rc = 0`,
    /// `JK = -G Gcᵀ`.
    Classical,
    BeyondObstacle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstacleReport {
    pub norm_rk: f64,
    pub norm_rc: f64,
    pub norm_jk_plus_ggc: f64,
    pub norm_jc_match: f64,
    pub chain_tol: f64,
    pub classical_chain_holds: bool,
    pub classification: ObstacleClass,
}

/// Evaluates the classical chain of conditions for passive CbI.
pub fn obstacle_check(plant: &LtiPhSystem, sol: &CasimirSolution) -> ObstacleReport {
    let k = &sol.k;
    let norm_rk = sup_norm(&(plant.r() * k));
    let norm_rc = sup_norm(&sol.rc);
    let norm_jk_plus_ggc = sup_norm(&(plant.j() * k + plant.g() * sol.gc.transpose()));
    let norm_jc_match = sup_norm(&(k.transpose() * plant.j() * k - &sol.jc));
    let tol = chain_tol(plant);
    let holds = [norm_rk, norm_rc, norm_jk_plus_ggc, norm_jc_match]
        .iter()
        .all(|v| *v <= tol);
    ObstacleReport {
        norm_rk,
        norm_rc,
        norm_jk_plus_ggc,
        norm_jc_match,
        chain_tol: tol,
        classical_chain_holds: holds,
        classification: if holds {
            ObstacleClass::Classical
        } else {
            ObstacleClass::BeyondObstacle
        },
    }
}

/// The controller `ξ̇ = (Jc - Rc)∇Hc + Gc u_c`, `y_c = Gcᵀ∇Hc`.
pub fn build_controller(sol: &CasimirSolution, hc: &QuadraticHamiltonian) -> Result<LtiPhSystem> {
    if hc.dim() != sol.nc() {
        return Err(PhError::DimensionMismatch(format!(
            "controller Hamiltonian has dimension {}, Casimir has {}",
            hc.dim(),
            sol.nc()
        )));
    }
    LtiPhSystem::new(sol.jc.clone(), sol.rc.clone(), sol.gc.clone(), hc.clone())
}
