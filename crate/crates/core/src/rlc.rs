//! Series RLC benchmark with pervasive dissipation.
//!
//! State `(φ, q)` (inductor flux, capacitor charge), source voltage `u`:
//!
//! ```text
//!     J = [[0, -1], [1, 0]],  R = diag(0, 1/r),  G = [1, 0]ᵀ,
//!     H = φ²/(2L) + q²/(2C).
//! ```
//!
//! Every derived quantity has a closed form here, which the acceptance suite
//! and the `demo` command diff against the generic pipeline.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::casimir::{build_controller, solve_casimir, CasimirSolution};
use crate::error::{PhError, Result};
use crate::ph_core::{LtiPhSystem, QuadraticHamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RlcParams {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub r: f64,
    pub u_star: f64,
}

impl Default for RlcParams {
    fn default() -> Self {
        Self {
            l: 1.0,
            c: 1.0,
            r: 1.0,
            u_star: 1.0,
        }
    }
}

impl RlcParams {
    pub fn new(l: f64, c: f64, r: f64, u_star: f64) -> Self {
        Self { l, c, r, u_star }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("L", self.l), ("C", self.c), ("r", self.r)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PhError::BadParam(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.u_star.is_finite() {
            return Err(PhError::BadParam(format!("u* must be finite, got {}", self.u_star)));
        }
        Ok(())
    }
}

pub fn make_rlc(p: &RlcParams) -> Result<LtiPhSystem> {
    p.validate()?;
    LtiPhSystem::new(
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0 / p.r]),
        DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        QuadraticHamiltonian::quadratic(DMatrix::from_row_slice(
            2,
            2,
            &[1.0 / p.l, 0.0, 0.0, 1.0 / p.c],
        ))?,
    )
}

/// Closed-form expectations for one benchmark instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RlcOracle {
    /// `∂S/∂(φ, q) = (-Gc/r, Gc)`.
    pub k_expected: [f64; 2],
    pub rc_expected: f64,
    /// Minimiser of the shaped Hamiltonian.
    pub x_star: [f64; 2],
    /// `S(x*) + κ`.
    pub xi_star: f64,
    pub jd_expected: Option<[[f64; 2]; 2]>,
    pub rd_expected: Option<[[f64; 2]; 2]>,
    pub alpha: Option<f64>,
}

impl RlcOracle {
    fn casimir_part(p: &RlcParams, gc: f64, x_star: [f64; 2], kappa: f64) -> Self {
        Self {
            k_expected: [-gc / p.r, gc],
            rc_expected: -gc * gc / p.r,
            x_star,
            xi_star: gc * (x_star[1] - x_star[0] / p.r) + kappa,
            jd_expected: None,
            rd_expected: None,
            alpha: None,
        }
    }

    /// `Gc = -u*`, `Hc(ξ) = ξ`: target `(L u*/r, C u*)`.
    pub fn feedforward(p: &RlcParams, kappa: f64) -> Self {
        let x_star = [p.l * p.u_star / p.r, p.c * p.u_star];
        Self::casimir_part(p, -p.u_star, x_star, kappa)
    }

    /// `Hc(ξ) = ½a1ξ² + a2ξ`.
    ///
    /// The controller curvature reaches the plant as `a1·Gc²` (one `Gc` from
    /// `S`, one from the output map), so the templates use that product.
    pub fn output_feedback(p: &RlcParams, a1: f64, a2: f64, gc: f64, kappa: f64) -> Result<Self> {
        let alpha = alpha(p, a1, a2, gc)?;
        let curv = a1 * gc * gc;
        let x_star = [p.l * alpha / p.r, p.c * alpha];
        let mut o = Self::casimir_part(p, gc, x_star, kappa);
        let cross = curv * p.c / 2.0;
        o.jd_expected = Some([[0.0, -1.0 - cross], [1.0 + cross, 0.0]]);
        o.rd_expected = Some([[-curv * p.l / p.r, cross], [cross, 1.0 / p.r]]);
        o.alpha = Some(alpha);
        Ok(o)
    }
}

/// Equilibrium level `α` of the output-feedback loop; the shaped minimiser
/// is `(Lα/r, Cα)`.
pub fn alpha(p: &RlcParams, a1: f64, a2: f64, gc: f64) -> Result<f64> {
    let curv = a1 * gc * gc;
    let r2 = p.r * p.r;
    let denominator = r2 + curv * p.c * r2 - curv * p.l;
    if denominator.abs() <= 1e-12 * r2 {
        return Err(PhError::DegenerateAlpha { denominator });
    }
    Ok(-r2 * a2 * gc / denominator)
}

/// Plant, Casimir, controller and expectations for one benchmark run.
#[derive(Debug, Clone)]
pub struct RlcCase {
    pub params: RlcParams,
    pub plant: LtiPhSystem,
    pub casimir: CasimirSolution,
    pub hc: QuadraticHamiltonian,
    pub controller: LtiPhSystem,
    pub oracle: RlcOracle,
}

fn assemble(
    params: RlcParams,
    gc: f64,
    hc: QuadraticHamiltonian,
    kappa: f64,
    oracle: RlcOracle,
) -> Result<RlcCase> {
    let plant = make_rlc(&params)?;
    let casimir = solve_casimir(
        &plant,
        &DMatrix::from_element(1, 1, gc),
        &DVector::from_element(1, kappa),
    )?;
    let controller = build_controller(&casimir, &hc)?;
    Ok(RlcCase {
        params,
        plant,
        casimir,
        hc,
        controller,
        oracle,
    })
}

/// Feedforward recovery: `Gc = -u*` with `Hc(ξ) = ξ`, so that
/// `ξ̇ = (u*)²/r - u* u_c` and `y_c = -u*`.
pub fn feedforward_case(p: &RlcParams, kappa: f64) -> Result<RlcCase> {
    p.validate()?;
    let hc = QuadraticHamiltonian::new(DMatrix::zeros(1, 1), DVector::from_element(1, 1.0), 0.0)?;
    assemble(*p, -p.u_star, hc, kappa, RlcOracle::feedforward(p, kappa))
}

/// Output feedback with `Hc(ξ) = ½a1ξ² + a2ξ`.
pub fn output_feedback_case(p: &RlcParams, a1: f64, a2: f64, gc: f64, kappa: f64) -> Result<RlcCase> {
    p.validate()?;
    let oracle = RlcOracle::output_feedback(p, a1, a2, gc, kappa)?;
    let hc = QuadraticHamiltonian::new(
        DMatrix::from_element(1, 1, a1),
        DVector::from_element(1, a2),
        0.0,
    )?;
    assemble(*p, gc, hc, kappa, oracle)
}
