//! Verification pipeline: Casimir → obstacle → Poincaré → ES or IDA →
//! Hessian and damping verdicts → stability declaration.

use nalgebra::{DMatrix, DVector};

use crate::casimir::{obstacle_check, CasimirSolution, ObstacleReport};
use crate::error::PhError;
use crate::ph_core::{LtiPhSystem, QuadraticHamiltonian};
use crate::shaping::{
    closed_loop_plant_affine, controller_equilibrium, equilibrium_test, es_shape, ida_decompose,
    poincare_check, PoincareReport, ShapedDynamics, StabilityVerdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapingPath {
    /// `ẋ = (J - R)∇Hd`.
    EnergyShaping,
    /// `ẋ = (Jd - Rd)∇Hd` with a fixed target Hessian.
    DampingAssignment,
}

impl ShapingPath {
    pub fn as_str(self) -> &'static str {
        match self {
            ShapingPath::EnergyShaping => "ES",
            ShapingPath::DampingAssignment => "IDA",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Verification {
    pub obstacle: ObstacleReport,
    pub affine: (DMatrix<f64>, DVector<f64>),
    pub poincare: Option<PoincareReport>,
    pub path: Option<ShapingPath>,
    pub shaped: Option<ShapedDynamics>,
    pub xi_star: Option<DVector<f64>>,
    pub stability: StabilityVerdict,
    pub notes: Vec<String>,
}

/// Runs the full verification for a synthesised Casimir and controller
/// Hamiltonian. `w_override` replaces the default target Hessian (the plant's
/// `Q`) on the IDA path.
pub fn verify(
    plant: &LtiPhSystem,
    sol: &CasimirSolution,
    hc: &QuadraticHamiltonian,
    w_override: Option<&DMatrix<f64>>,
) -> Result<Verification, PhError> {
    let obstacle = obstacle_check(plant, sol);
    let affine = closed_loop_plant_affine(plant, sol, hc)?;
    let mut notes = Vec::new();
    if !sol.exact {
        notes.push(format!(
            "Casimir equations not solved exactly (residual {:.3e}); leaf invariance is not guaranteed",
            sol.residual_pde1
        ));
    }

    let poincare = match poincare_check(plant, sol, hc) {
        Ok(rep) => Some(rep),
        Err(e @ PhError::SingularJR { .. }) => {
            notes.push(format!("ES path skipped: {e}"));
            None
        }
        Err(e) => return Err(e),
    };

    let mut path = None;
    let mut shaped = None;
    if poincare.as_ref().is_some_and(|p| p.integrable) {
        match es_shape(plant, sol, hc) {
            Ok(s) => {
                path = Some(ShapingPath::EnergyShaping);
                shaped = Some(s);
            }
            Err(e) => notes.push(format!("ES path failed: {e}; trying IDA")),
        }
    } else if let Some(p) = &poincare {
        notes.push(format!(
            "candidate shaped gradient is not integrable (asymmetry {:.3e}); using IDA",
            p.asym_defect
        ));
    }
    if shaped.is_none() {
        let w = w_override.unwrap_or(plant.ham().q());
        match ida_decompose(&affine.0, &affine.1, w) {
            Ok(s) => {
                path = Some(ShapingPath::DampingAssignment);
                shaped = Some(s);
            }
            Err(e) => notes.push(format!("IDA path failed: {e}")),
        }
    }

    let (stability, xi_star) = match &shaped {
        Some(s) => (
            equilibrium_test(s),
            Some(controller_equilibrium(sol, &s.x_bar)?),
        ),
        None => (
            StabilityVerdict {
                stable_declared: false,
                reasons: vec!["no shaped closed-loop form available".into()],
            },
            None,
        ),
    };

    Ok(Verification {
        obstacle,
        affine,
        poincare,
        path,
        shaped,
        xi_star,
        stability,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casimir::solve_casimir;
    use crate::rlc::{feedforward_case, output_feedback_case, RlcParams};

    #[test]
    fn feedforward_takes_es_path() {
        let case = feedforward_case(&RlcParams::default(), 0.0).unwrap();
        let v = verify(&case.plant, &case.casimir, &case.hc, None).unwrap();
        assert_eq!(v.path, Some(ShapingPath::EnergyShaping));
        assert!(v.poincare.unwrap().integrable);
        assert!(v.stability.stable_declared);
    }

    #[test]
    fn output_feedback_takes_ida_path() {
        let case = output_feedback_case(&RlcParams::default(), -1.0, -1.0, 1.0, 0.0).unwrap();
        let v = verify(&case.plant, &case.casimir, &case.hc, None).unwrap();
        assert_eq!(v.path, Some(ShapingPath::DampingAssignment));
        assert!(!v.poincare.unwrap().integrable);
        assert!(v.stability.stable_declared);
    }

    #[test]
    fn singular_structure_skips_es_and_reports() {
        let plant = LtiPhSystem::new(
            DMatrix::zeros(2, 2),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            QuadraticHamiltonian::quadratic(DMatrix::identity(2, 2)).unwrap(),
        )
        .unwrap();
        let sol = solve_casimir(&plant, &DMatrix::from_element(1, 1, 1.0), &DVector::zeros(1)).unwrap();
        let hc = QuadraticHamiltonian::quadratic(DMatrix::from_element(1, 1, 1.0)).unwrap();
        let v = verify(&plant, &sol, &hc, None).unwrap();
        assert!(v.poincare.is_none());
        assert!(v.notes.iter().any(|n| n.contains("ES path skipped")));
        assert!(v.notes.iter().any(|n| n.contains("IDA")));
        assert!(!v.stability.stable_declared);
    }
}
