//! Closed-loop plant dynamics on the Casimir leaf and their energy-shaping /
//! damping-assignment interpretations.
//!
//! On `ξ = Kᵀx + κ` the plant evolves as
//!
//! ```text
//!     ẋ = (J - R)∇H(x) + (J + R) K ∇Hc(Kᵀx + κ) = A x + c.
//! ```
//!
//! When `J - R` is invertible and the candidate gradient
//! `∇H + (J - R)⁻¹(J + R) K ∇Hc` is integrable, this is `(J - R)∇Hd`
//! (energy shaping). Otherwise a target Hessian `W` is fixed and the field is
//! matched to `(Jd - Rd)∇Hd` with `Hd = ½(x - x̄)ᵀW(x - x̄)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::casimir::CasimirSolution;
use crate::error::{PhError, Result};
use crate::ph_core::numerics::{
    asymmetry, definiteness, rcond, skew_part, sup_norm, sup_norm_vec, sym_tol, symmetric_part,
    DefinitenessVerdict, COND_TOL, DEFINITENESS_TOL,
};
use crate::ph_core::{LtiPhSystem, QuadraticHamiltonian};

#[derive(Debug, Clone, PartialEq)]
pub struct ShapedDynamics {
    pub jd: DMatrix<f64>,
    pub rd: DMatrix<f64>,
    /// Hessian of `Hd`.
    pub w: DMatrix<f64>,
    /// Minimiser of `Hd`.
    pub x_bar: DVector<f64>,
    pub match_residual: f64,
    pub rd_verdict: DefinitenessVerdict,
    pub hessian_verdict: DefinitenessVerdict,
}

impl ShapedDynamics {
    pub fn hd(&self, x: &DVector<f64>) -> f64 {
        let e = x - &self.x_bar;
        0.5 * e.dot(&(&self.w * &e))
    }

    pub fn hd_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.w * (x - &self.x_bar)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareReport {
    /// Jacobian of the candidate shaped gradient.
    pub m: DMatrix<f64>,
    pub asym_defect: f64,
    pub tol: f64,
    pub integrable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub stable_declared: bool,
    pub reasons: Vec<String>,
}

fn check_controller(plant: &LtiPhSystem, sol: &CasimirSolution, hc: &QuadraticHamiltonian) -> Result<()> {
    if sol.k.nrows() != plant.n() || hc.dim() != sol.nc() {
        return Err(PhError::DimensionMismatch(format!(
            "K is {}x{}, plant has n = {}, Hc has dimension {}",
            sol.k.nrows(),
            sol.k.ncols(),
            plant.n(),
            hc.dim()
        )));
    }
    Ok(())
}

/// `ẋ = A x + c` for the plant restricted to the Casimir leaf.
pub fn closed_loop_plant_affine(
    plant: &LtiPhSystem,
    sol: &CasimirSolution,
    hc: &QuadraticHamiltonian,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_controller(plant, sol, hc)?;
    let jr = plant.j_minus_r();
    let coupling = plant.j_plus_r() * &sol.k;
    let a = &jr * plant.ham().q() + &coupling * hc.q() * sol.k.transpose();
    let c = &jr * plant.ham().b() + &coupling * (hc.q() * &sol.kappa + hc.b());
    Ok((a, c))
}

/// `(J - R)⁻¹(J + R) K`, the map from the controller gradient into the
/// candidate shaped gradient.
fn shaping_gain(plant: &LtiPhSystem, sol: &CasimirSolution) -> Result<DMatrix<f64>> {
    let jr = plant.j_minus_r();
    let rc = rcond(&jr);
    if rc < COND_TOL {
        return Err(PhError::SingularJR { rcond: rc });
    }
    jr.lu()
        .solve(&(plant.j_plus_r() * &sol.k))
        .ok_or(PhError::SingularJR { rcond: 0.0 })
}

/// Candidate `∇Hd(x) = ∇H(x) + (J - R)⁻¹(J + R) K ∇Hc(Kᵀx + κ)`.
pub fn es_gradient(
    plant: &LtiPhSystem,
    sol: &CasimirSolution,
    hc: &QuadraticHamiltonian,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_controller(plant, sol, hc)?;
    if x.len() != plant.n() {
        return Err(PhError::DimensionMismatch(format!(
            "state has length {}, expected {}",
            x.len(),
            plant.n()
        )));
    }
    let gain = shaping_gain(plant, sol)?;
    let xi = sol.s(x) + &sol.kappa;
    Ok(plant.ham().gradient(x) + gain * hc.gradient(&xi))
}

/// Symmetry test on the Jacobian `M = Q + (J - R)⁻¹(J + R) K A1 Kᵀ` of the
/// candidate shaped gradient.
pub fn poincare_check(
    plant: &LtiPhSystem,
    sol: &CasimirSolution,
    hc: &QuadraticHamiltonian,
) -> Result<PoincareReport> {
    check_controller(plant, sol, hc)?;
    let gain = shaping_gain(plant, sol)?;
    let m = plant.ham().q() + gain * hc.q() * sol.k.transpose();
    let asym_defect = asymmetry(&m);
    let tol = sym_tol(&m);
    Ok(PoincareReport {
        integrable: asym_defect <= tol,
        asym_defect,
        tol,
        m,
    })
}

/// Probe points `x̄` and `x̄ ± e_i`.
fn probe_grid(center: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = center.len();
    let mut pts = Vec::with_capacity(2 * n + 1);
    pts.push(center.clone());
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut p = center.clone();
            p[i] += s;
            pts.push(p);
        }
    }
    pts
}

fn match_residual(
    jd: &DMatrix<f64>,
    rd: &DMatrix<f64>,
    w: &DMatrix<f64>,
    x_bar: &DVector<f64>,
    a: &DMatrix<f64>,
    c: &DVector<f64>,
) -> f64 {
    let structure = (jd - rd) * w;
    probe_grid(x_bar)
        .iter()
        .map(|x| sup_norm_vec(&(&structure * (x - x_bar) - (a * x + c))))
        .fold(0.0, f64::max)
}

/// Matches `ẋ = A x + c` to `(Jd - Rd) W (x - x̄)` for a fixed target
/// Hessian `W`: `F = A W⁻¹`, `Jd = skew(F)`, `Rd = -sym(F)`, `x̄ = -A⁻¹c`.
pub fn ida_decompose(a: &DMatrix<f64>, c: &DVector<f64>, w: &DMatrix<f64>) -> Result<ShapedDynamics> {
    let n = a.nrows();
    if !a.is_square() || c.len() != n || w.shape() != (n, n) {
        return Err(PhError::DimensionMismatch(format!(
            "A is {}x{}, c has length {}, W is {}x{}",
            a.nrows(),
            a.ncols(),
            c.len(),
            w.nrows(),
            w.ncols()
        )));
    }
    let defect = asymmetry(w);
    let tol = sym_tol(w);
    if defect > tol {
        return Err(PhError::NotSymmetric { defect, tol });
    }
    let w = symmetric_part(w);
    let rc_w = rcond(&w);
    if rc_w < COND_TOL {
        return Err(PhError::SingularW { rcond: rc_w });
    }
    let rc_a = rcond(a);
    if rc_a < COND_TOL {
        return Err(PhError::SingularA { rcond: rc_a });
    }
    // F W = A  <=>  W F^T = A^T
    let f = w
        .clone()
        .lu()
        .solve(&a.transpose())
        .ok_or(PhError::SingularW { rcond: 0.0 })?
        .transpose();
    let jd = skew_part(&f);
    let rd = -symmetric_part(&f);
    let x_bar = -a
        .clone()
        .lu()
        .solve(c)
        .ok_or(PhError::SingularA { rcond: 0.0 })?;
    let match_residual = match_residual(&jd, &rd, &w, &x_bar, a, c);
    let rd_verdict = definiteness(&rd, DEFINITENESS_TOL)?;
    let hessian_verdict = definiteness(&w, DEFINITENESS_TOL)?;
    Ok(ShapedDynamics {
        jd,
        rd,
        w,
        x_bar,
        match_residual,
        rd_verdict,
        hessian_verdict,
    })
}

/// Energy-shaping form `ẋ = (J - R)∇Hd` with `Hd` built from the integrable
/// candidate gradient; `Jd = J`, `Rd = R`, `W = M`.
pub fn es_shape(
    plant: &LtiPhSystem,
    sol: &CasimirSolution,
    hc: &QuadraticHamiltonian,
) -> Result<ShapedDynamics> {
    let report = poincare_check(plant, sol, hc)?;
    if !report.integrable {
        return Err(PhError::NotSymmetric {
            defect: report.asym_defect,
            tol: report.tol,
        });
    }
    let w = symmetric_part(&report.m);
    let gain = shaping_gain(plant, sol)?;
    // ∇Hd(x) = W x + d
    let d = plant.ham().b() + gain * (hc.q() * &sol.kappa + hc.b());
    let rc_w = rcond(&w);
    if rc_w < COND_TOL {
        return Err(PhError::SingularW { rcond: rc_w });
    }
    let x_bar = -w.clone().lu().solve(&d).ok_or(PhError::SingularW { rcond: 0.0 })?;
    let (a, c) = closed_loop_plant_affine(plant, sol, hc)?;
    let jd = plant.j().clone();
    let rd = plant.r().clone();
    let match_residual = match_residual(&jd, &rd, &w, &x_bar, &a, &c);
    Ok(ShapedDynamics {
        rd_verdict: definiteness(&rd, DEFINITENESS_TOL)?,
        hessian_verdict: definiteness(&w, DEFINITENESS_TOL)?,
        jd,
        rd,
        w,
        x_bar,
        match_residual,
    })
}

/// Stability is declared when `∇²Hd ≻ 0` at the (unique) minimiser and
/// `Rd ⪰ 0`.
pub fn equilibrium_test(shaped: &ShapedDynamics) -> StabilityVerdict {
    let mut reasons = Vec::new();
    let hess_ok = shaped.hessian_verdict.is_pd();
    let rd_ok = shaped.rd_verdict.is_psd();
    if hess_ok {
        reasons.push(format!(
            "Hessian of Hd is positive-definite (min eig {:.6e})",
            shaped.hessian_verdict.min_eig
        ));
    } else {
        reasons.push(format!(
            "Hessian of Hd is {} (min eig {:.6e})",
            shaped.hessian_verdict.classification, shaped.hessian_verdict.min_eig
        ));
    }
    if rd_ok {
        reasons.push(format!(
            "Rd is {} (min eig {:.6e})",
            shaped.rd_verdict.classification, shaped.rd_verdict.min_eig
        ));
    } else {
        reasons.push(format!(
            "Rd is {} (min eig {:.6e}), damping condition fails",
            shaped.rd_verdict.classification, shaped.rd_verdict.min_eig
        ));
    }
    StabilityVerdict {
        stable_declared: hess_ok && rd_ok,
        reasons,
    }
}

/// `ξ* = Kᵀx* + κ`.
pub fn controller_equilibrium(sol: &CasimirSolution, x_star: &DVector<f64>) -> Result<DVector<f64>> {
    if x_star.len() != sol.k.nrows() {
        return Err(PhError::DimensionMismatch(format!(
            "x* has length {}, K has {} rows",
            x_star.len(),
            sol.k.nrows()
        )));
    }
    Ok(sol.s(x_star) + &sol.kappa)
}

/// `|(Jd - Rd)W - A|`: how well the split reassembles the drift matrix.
pub fn reassembly_defect(shaped: &ShapedDynamics, a: &DMatrix<f64>) -> f64 {
    sup_norm(&((&shaped.jd - &shaped.rd) * &shaped.w - a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casimir::solve_casimir;
    use crate::ph_core::numerics::Definiteness;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    fn vec(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn rlc(l: f64, c: f64, r: f64) -> LtiPhSystem {
        LtiPhSystem::new(
            mat(2, 2, &[0.0, -1.0, 1.0, 0.0]),
            mat(2, 2, &[0.0, 0.0, 0.0, 1.0 / r]),
            mat(2, 1, &[1.0, 0.0]),
            QuadraticHamiltonian::quadratic(mat(2, 2, &[1.0 / l, 0.0, 0.0, 1.0 / c])).unwrap(),
        )
        .unwrap()
    }

    fn hc(a1: f64, a2: f64) -> QuadraticHamiltonian {
        QuadraticHamiltonian::new(mat(1, 1, &[a1]), vec(&[a2]), 0.0).unwrap()
    }

    fn setup(l: f64, c: f64, r: f64, gc: f64) -> (LtiPhSystem, CasimirSolution) {
        let plant = rlc(l, c, r);
        let sol = solve_casimir(&plant, &mat(1, 1, &[gc]), &vec(&[0.0])).unwrap();
        (plant, sol)
    }

    #[test]
    fn feedforward_affine_form() {
        let (plant, sol) = setup(1.0, 1.0, 1.0, -1.0);
        let (a, c) = closed_loop_plant_affine(&plant, &sol, &hc(0.0, 1.0)).unwrap();
        assert!(sup_norm(&(a - mat(2, 2, &[0.0, -1.0, 1.0, -1.0]))) < 1e-15);
        assert!(sup_norm_vec(&(c - vec(&[1.0, 0.0]))) < 1e-15);
    }

    #[test]
    fn zero_controller_gives_open_loop() {
        let (plant, sol) = setup(2.0, 0.5, 3.0, 1.7);
        let (a, c) = closed_loop_plant_affine(&plant, &sol, &hc(0.0, 0.0)).unwrap();
        let (a0, c0) = plant.affine_drift();
        assert_eq!(a, a0);
        assert_eq!(c, c0);
    }

    #[test]
    fn output_feedback_matches_displayed_matrix_at_unit_gain() {
        let (l, cap, r, a1, a2, gc) = (0.8, 1.7, 2.5, -0.6, 0.4, 1.0);
        let (plant, sol) = setup(l, cap, r, gc);
        let (a, c) = closed_loop_plant_affine(&plant, &sol, &hc(a1, a2)).unwrap();
        let shown = mat(
            2,
            2,
            &[a1 * gc * l / r, -(1.0 + a1 * gc * cap), 1.0, -1.0 / r],
        ) * mat(2, 2, &[1.0 / l, 0.0, 0.0, 1.0 / cap]);
        assert!(sup_norm(&(a - shown)) < 1e-14);
        assert!(sup_norm_vec(&(c - vec(&[-gc * a2, 0.0]))) < 1e-15);
    }

    #[test]
    fn output_feedback_general_gain_carries_gc_squared() {
        // u = -Gc(a1 Gc (q - φ/r) + a2): the curvature enters as a1 Gc².
        let (l, cap, r, a1, a2, gc) = (0.8, 1.7, 2.5, -0.6, 0.4, 2.0);
        let (plant, sol) = setup(l, cap, r, gc);
        let (a, c) = closed_loop_plant_affine(&plant, &sol, &hc(a1, a2)).unwrap();
        let k2 = a1 * gc * gc;
        let expected = mat(
            2,
            2,
            &[k2 / r, -1.0 / cap - k2, 1.0 / l, -1.0 / (r * cap)],
        );
        assert!(sup_norm(&(a - expected)) < 1e-14);
        assert!(sup_norm_vec(&(c - vec(&[-gc * a2, 0.0]))) < 1e-15);
    }

    #[test]
    fn es_gradient_feedforward_values() {
        let (plant, sol) = setup(1.0, 1.0, 1.0, -1.0);
        let g = es_gradient(&plant, &sol, &hc(0.0, 1.0), &vec(&[1.0, 1.0])).unwrap();
        assert!(sup_norm_vec(&g) < 1e-15);
        let g = es_gradient(&plant, &sol, &hc(0.0, 1.0), &vec(&[0.0, 0.0])).unwrap();
        assert!(sup_norm_vec(&(g - vec(&[-1.0, -1.0]))) < 1e-15);
    }

    #[test]
    fn es_gradient_zero_controller_is_plant_gradient() {
        let (plant, sol) = setup(1.5, 0.5, 2.0, 1.0);
        let x = vec(&[0.3, -1.2]);
        let g = es_gradient(&plant, &sol, &QuadraticHamiltonian::zero(1), &x).unwrap();
        assert_eq!(g, plant.ham().gradient(&x));
    }

    #[test]
    fn singular_j_minus_r_is_reported() {
        let plant = LtiPhSystem::new(
            DMatrix::zeros(2, 2),
            mat(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            mat(2, 1, &[1.0, 0.0]),
            QuadraticHamiltonian::quadratic(DMatrix::identity(2, 2)).unwrap(),
        )
        .unwrap();
        let sol = solve_casimir(&plant, &mat(1, 1, &[1.0]), &vec(&[0.0])).unwrap();
        assert!(matches!(
            es_gradient(&plant, &sol, &hc(1.0, 0.0), &vec(&[0.0, 0.0])),
            Err(PhError::SingularJR { .. })
        ));
        assert!(matches!(
            poincare_check(&plant, &sol, &hc(1.0, 0.0)),
            Err(PhError::SingularJR { .. })
        ));
    }

    #[test]
    fn poincare_feedforward_is_integrable() {
        let (plant, sol) = setup(1.0, 1.0, 1.0, -1.0);
        let rep = poincare_check(&plant, &sol, &hc(0.0, 1.0)).unwrap();
        assert!(rep.integrable);
        assert_eq!(&rep.m, plant.ham().q());
    }

    #[test]
    fn poincare_output_feedback_fails() {
        let (plant, sol) = setup(1.0, 1.0, 1.0, 1.0);
        let rep = poincare_check(&plant, &sol, &hc(-1.0, 0.0)).unwrap();
        // (J-R)^-1 (J+R) = [[1, 2],[0, 1]], K Kᵀ = [[1,-1],[-1,1]]
        let p = mat(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let kkt = mat(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let m_hand = DMatrix::<f64>::identity(2, 2) - p * kkt;
        assert!(sup_norm(&(&rep.m - &m_hand)) < 1e-14);
        assert!((rep.asym_defect - 2.0).abs() < 1e-14);
        assert!(!rep.integrable);
    }

    #[test]
    fn poincare_zero_gradient_is_integrable() {
        let (plant, sol) = setup(1.0, 1.0, 1.0, 0.0);
        assert!(poincare_check(&plant, &sol, &hc(-3.0, 1.0)).unwrap().integrable);
    }

    #[test]
    fn ida_unit_output_feedback() {
        let (plant, sol) = setup(1.0, 1.0, 1.0, 1.0);
        let (a, c) = closed_loop_plant_affine(&plant, &sol, &hc(-1.0, -1.0)).unwrap();
        let shaped = ida_decompose(&a, &c, &DMatrix::identity(2, 2)).unwrap();
        assert!(sup_norm(&(&shaped.jd - mat(2, 2, &[0.0, -0.5, 0.5, 0.0]))) < 1e-14);
        assert!(sup_norm(&(&shaped.rd - mat(2, 2, &[1.0, -0.5, -0.5, 1.0]))) < 1e-14);
        assert!(sup_norm_vec(&(&shaped.x_bar - vec(&[1.0, 1.0]))) < 1e-14);
        assert!(shaped.match_residual < 1e-14);
        assert_eq!(shaped.rd_verdict.classification, Definiteness::PositiveDefinite);
        assert!(reassembly_defect(&shaped, &a) < 1e-14);
        assert!(equilibrium_test(&shaped).stable_declared);
        assert!(shaped.hd_gradient(&shaped.x_bar).amax() == 0.0);
    }

    #[test]
    fn ida_recovers_original_structure() {
        let ham = QuadraticHamiltonian::new(
            mat(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            vec(&[1.0, -2.0]),
            0.0,
        )
        .unwrap();
        let plant = LtiPhSystem::new(
            mat(2, 2, &[0.0, 1.5, -1.5, 0.0]),
            mat(2, 2, &[0.4, 0.1, 0.1, 0.2]),
            mat(2, 1, &[1.0, 0.0]),
            ham,
        )
        .unwrap();
        let (a, _) = plant.affine_drift();
        let shaped = ida_decompose(&a, &DVector::zeros(2), plant.ham().q()).unwrap();
        assert!(sup_norm(&(&shaped.jd - plant.j())) < 1e-14);
        assert!(sup_norm(&(&shaped.rd - plant.r())) < 1e-14);
        assert!(sup_norm_vec(&shaped.x_bar) < 1e-15);

        let (a, c) = plant.affine_drift();
        let shaped = ida_decompose(&a, &c, plant.ham().q()).unwrap();
        assert!(sup_norm_vec(&plant.ham().gradient(&shaped.x_bar)) < 1e-14);
    }

    #[test]
    fn ida_error_paths() {
        let a = mat(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            ida_decompose(&a, &vec(&[0.0, 0.0]), &DMatrix::identity(2, 2)),
            Err(PhError::SingularA { .. })
        ));
        assert!(matches!(
            ida_decompose(&DMatrix::identity(2, 2), &vec(&[0.0, 0.0]), &DMatrix::zeros(2, 2)),
            Err(PhError::SingularW { .. })
        ));
    }

    #[test]
    fn sign_flipped_gain_is_not_declared() {
        let (plant, sol) = setup(1.0, 1.0, 1.0, 1.0);
        let (a, c) = closed_loop_plant_affine(&plant, &sol, &hc(1.0, -1.0)).unwrap();
        let shaped = ida_decompose(&a, &c, &DMatrix::identity(2, 2)).unwrap();
        assert!((shaped.rd[(0, 0)] + 1.0).abs() < 1e-14);
        assert_eq!(shaped.rd_verdict.classification, Definiteness::Indefinite);
        assert!(!equilibrium_test(&shaped).stable_declared);
    }

    #[test]
    fn indefinite_hessian_is_not_declared() {
        let a = mat(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let w = mat(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let shaped = ida_decompose(&a, &vec(&[0.0, 0.0]), &w).unwrap();
        assert_eq!(shaped.hessian_verdict.classification, Definiteness::Indefinite);
        assert!(!equilibrium_test(&shaped).stable_declared);
    }

    #[test]
    fn es_shape_feedforward() {
        let (plant, sol) = setup(1.0, 1.0, 1.0, -1.0);
        let shaped = es_shape(&plant, &sol, &hc(0.0, 1.0)).unwrap();
        assert!(sup_norm_vec(&(&shaped.x_bar - vec(&[1.0, 1.0]))) < 1e-14);
        assert!(shaped.match_residual < 1e-14);
        assert!(equilibrium_test(&shaped).stable_declared);
    }

    #[test]
    fn controller_equilibrium_values() {
        let (_, sol) = setup(1.0, 1.0, 1.0, -1.0);
        let xi = controller_equilibrium(&sol, &vec(&[1.0, 1.0])).unwrap();
        assert!(xi[0].abs() < 1e-15);
        let (_, sol) = setup(1.0, 1.0, 2.0, 2.0);
        let xi = controller_equilibrium(&sol, &vec(&[2.0, 3.0])).unwrap();
        assert!((xi[0] - 4.0).abs() < 1e-14);
        let (_, sol) = setup(1.0, 1.0, 1.0, 0.0);
        let sol = CasimirSolution {
            kappa: vec(&[2.5]),
            ..sol
        };
        assert_eq!(controller_equilibrium(&sol, &vec(&[7.0, -3.0])).unwrap()[0], 2.5);
        assert!(controller_equilibrium(&sol, &vec(&[1.0])).is_err());
    }

    #[test]
    fn lossless_plant_gradient_reduces_to_classical_form() {
        // even dimension: odd-sized skew matrices are singular
        let j = mat(
            4,
            4,
            &[
                0.0, -1.0, 0.5, 0.2, 1.0, 0.0, -2.0, 0.3, -0.5, 2.0, 0.0, -1.1, -0.2, -0.3, 1.1,
                0.0,
            ],
        );
        let plant = LtiPhSystem::new(
            j,
            DMatrix::zeros(4, 4),
            mat(4, 1, &[1.0, 0.0, 1.0, -1.0]),
            QuadraticHamiltonian::quadratic(DMatrix::from_diagonal(&vec(&[1.0, 2.0, 0.5, 3.0])))
                .unwrap(),
        )
        .unwrap();
        let sol = solve_casimir(&plant, &mat(1, 1, &[0.7]), &vec(&[0.2])).unwrap();
        let h = hc(1.3, -0.4);
        for x in [vec(&[0.1, 0.2, -0.3, 1.0]), vec(&[-2.0, 0.0, 1.0, 0.5])] {
            let g = es_gradient(&plant, &sol, &h, &x).unwrap();
            let classical = plant.ham().gradient(&x) + &sol.k * h.gradient(&(sol.s(&x) + &sol.kappa));
            assert!(sup_norm_vec(&(g - classical)) < 1e-12);
        }
    }
}
