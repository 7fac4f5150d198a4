//! Linear port-Hamiltonian systems
//!
//! ```text
//!     ẋ = (J - R) ∇H(x) + G u,      y = Gᵀ ∇H(x),
//!     H(x) = ½ xᵀQx + bᵀx + c0
//! ```
//!
//! with `J = -Jᵀ` and `R = Rᵀ`. Positivity of `R` is recorded, not enforced:
//! controllers synthesised from Casimirs routinely carry `R ⪯ 0`.

pub mod model;
pub mod numerics;

use nalgebra::{DMatrix, DVector};

use crate::error::{PhError, Result};
use numerics::{
    asymmetry, definiteness, skew_defect, solve_checked_vec, sym_tol, DefinitenessVerdict,
    DEFINITENESS_TOL,
};

/// `H(x) = ½ xᵀQx + bᵀx + c0` with symmetric `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    q: DMatrix<f64>,
    b: DVector<f64>,
    c0: f64,
}

impl QuadraticHamiltonian {
    pub fn new(q: DMatrix<f64>, b: DVector<f64>, c0: f64) -> Result<Self> {
        if !q.is_square() || q.nrows() != b.len() {
            return Err(PhError::DimensionMismatch(format!(
                "Hamiltonian: Q is {}x{}, b has length {}",
                q.nrows(),
                q.ncols(),
                b.len()
            )));
        }
        if q.iter().chain(b.iter()).any(|v| !v.is_finite()) || !c0.is_finite() {
            return Err(PhError::Model("Hamiltonian has non-finite coefficients".into()));
        }
        let defect = asymmetry(&q);
        let tol = sym_tol(&q);
        if defect > tol {
            return Err(PhError::NotSymmetric { defect, tol });
        }
        Ok(Self { q, b, c0 })
    }

    /// Purely quadratic energy `½ xᵀQx`.
    pub fn quadratic(q: DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        Self::new(q, DVector::zeros(n), 0.0)
    }

    /// `H ≡ 0` on an `n`-dimensional space.
    pub fn zero(n: usize) -> Self {
        Self {
            q: DMatrix::zeros(n, n),
            b: DVector::zeros(n),
            c0: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.b.dot(x) + self.c0
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x + &self.b
    }

    /// `H ⊕ Hc` on the stacked state `(x, ξ)`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (n, nc) = (self.dim(), other.dim());
        let mut q = DMatrix::zeros(n + nc, n + nc);
        q.view_mut((0, 0), (n, n)).copy_from(&self.q);
        q.view_mut((n, n), (nc, nc)).copy_from(&other.q);
        let mut b = DVector::zeros(n + nc);
        b.rows_mut(0, n).copy_from(&self.b);
        b.rows_mut(n, nc).copy_from(&other.b);
        Self {
            q,
            b,
            c0: self.c0 + other.c0,
        }
    }
}

/// A validated constant-matrix port-Hamiltonian system.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiPhSystem {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    g: DMatrix<f64>,
    ham: QuadraticHamiltonian,
    passive: DefinitenessVerdict,
}

impl LtiPhSystem {
    pub fn new(
        j: DMatrix<f64>,
        r: DMatrix<f64>,
        g: DMatrix<f64>,
        ham: QuadraticHamiltonian,
    ) -> Result<Self> {
        validate_structure(j, r, g, ham)
    }

    pub fn n(&self) -> usize {
        self.j.nrows()
    }

    pub fn m(&self) -> usize {
        self.g.ncols()
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn ham(&self) -> &QuadraticHamiltonian {
        &self.ham
    }

    /// Definiteness verdict of `R`.
    pub fn resistive_verdict(&self) -> &DefinitenessVerdict {
        &self.passive
    }

    /// `R ⪰ 0` within tolerance.
    pub fn is_passive(&self) -> bool {
        self.passive.is_psd()
    }

    pub fn j_minus_r(&self) -> DMatrix<f64> {
        &self.j - &self.r
    }

    pub fn j_plus_r(&self) -> DMatrix<f64> {
        &self.j + &self.r
    }

    /// Affine form of the unforced dynamics: `ẋ = A x + c` with
    /// `A = (J - R)Q`, `c = (J - R)b`.
    pub fn affine_drift(&self) -> (DMatrix<f64>, DVector<f64>) {
        let jr = self.j_minus_r();
        (&jr * &self.ham.q, &jr * &self.ham.b)
    }
}

/// Checks the port-Hamiltonian structure and records the verdict on `R`.
pub fn validate_structure(
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    g: DMatrix<f64>,
    ham: QuadraticHamiltonian,
) -> Result<LtiPhSystem> {
    let n = j.nrows();
    if !j.is_square() || r.shape() != (n, n) || g.nrows() != n || ham.dim() != n {
        return Err(PhError::DimensionMismatch(format!(
            "J {}x{}, R {}x{}, G {}x{}, Q {}x{}",
            j.nrows(),
            j.ncols(),
            r.nrows(),
            r.ncols(),
            g.nrows(),
            g.ncols(),
            ham.dim(),
            ham.dim()
        )));
    }
    if j.iter().chain(r.iter()).chain(g.iter()).any(|v| !v.is_finite()) {
        return Err(PhError::Model("system matrices contain non-finite entries".into()));
    }
    let defect = skew_defect(&j);
    let tol = sym_tol(&j);
    if defect > tol {
        return Err(PhError::SkewViolation { defect, tol });
    }
    let defect = asymmetry(&r);
    let tol = sym_tol(&r);
    if defect > tol {
        return Err(PhError::SymViolation { defect, tol });
    }
    let passive = definiteness(&r, DEFINITENESS_TOL)?;
    Ok(LtiPhSystem {
        j,
        r,
        g,
        ham,
        passive,
    })
}

fn check_len(what: &str, v: &DVector<f64>, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(PhError::DimensionMismatch(format!(
            "{what} has length {}, expected {expected}",
            v.len()
        )));
    }
    Ok(())
}

/// `(J - R)(Qx + b) + G u`.
pub fn vector_field(sys: &LtiPhSystem, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("state", x, sys.n())?;
    check_len("input", u, sys.m())?;
    let grad = sys.ham.gradient(x);
    Ok(sys.j_minus_r() * grad + &sys.g * u)
}

/// `Gᵀ(Qx + b)`.
pub fn output(sys: &LtiPhSystem, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("state", x, sys.n())?;
    Ok(sys.g.transpose() * sys.ham.gradient(x))
}

/// Solves `(J - R)(Qx* + b) + G u* = 0`.
pub fn equilibrium_for_input(sys: &LtiPhSystem, u_star: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("input", u_star, sys.m())?;
    let jr = sys.j_minus_r();
    let a = &jr * &sys.ham.q;
    let rhs = -(&jr * &sys.ham.b) - &sys.g * u_star;
    solve_checked_vec(&a, &rhs).map_err(|rcond| PhError::SingularDynamics { rcond })
}

/// Power-preserving feedback `u = -y_c`, `u_c = y`.
///
/// The result is autonomous (zero input columns) on the stacked state
/// `(x, ξ)` with
///
/// ```text
///     J̃ = [[J, -G Gcᵀ], [Gc Gᵀ, Jc]],  R̃ = diag(R, Rc),  H̃ = H ⊕ Hc.
/// ```
pub fn feedback_interconnect(plant: &LtiPhSystem, ctrl: &LtiPhSystem) -> Result<LtiPhSystem> {
    if plant.m() != ctrl.m() {
        return Err(PhError::PortMismatch {
            plant: plant.m(),
            controller: ctrl.m(),
        });
    }
    let (n, nc) = (plant.n(), ctrl.n());
    let total = n + nc;
    let coupling = &plant.g * ctrl.g.transpose();

    let mut j = DMatrix::zeros(total, total);
    j.view_mut((0, 0), (n, n)).copy_from(&plant.j);
    j.view_mut((0, n), (n, nc)).copy_from(&(-&coupling));
    j.view_mut((n, 0), (nc, n)).copy_from(&coupling.transpose());
    j.view_mut((n, n), (nc, nc)).copy_from(&ctrl.j);

    let mut r = DMatrix::zeros(total, total);
    r.view_mut((0, 0), (n, n)).copy_from(&plant.r);
    r.view_mut((n, n), (nc, nc)).copy_from(&ctrl.r);

    let ham = plant.ham.direct_sum(&ctrl.ham);
    validate_structure(j, r, DMatrix::zeros(total, 0), ham)
}
