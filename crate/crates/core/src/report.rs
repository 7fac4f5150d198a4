//! `report.json` schema. Every command emits the same top-level keys;
//! sections a command does not produce are `null`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::casimir::{CasimirSolution, ObstacleReport};
use crate::ph_core::numerics::{to_rows, DefinitenessVerdict, COND_TOL, DEFINITENESS_TOL, SYM_TOL_FACTOR};
use crate::pipeline::Verification;
use crate::rlc::{RlcOracle, RlcParams};
use crate::shaping::{PoincareReport, ShapedDynamics, StabilityVerdict};
use crate::sim::{casimir_drift, energy_audit, power_channels, Trajectory};

fn v(x: &DVector<f64>) -> Vec<f64> {
    x.iter().copied().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub sym_tol_factor: f64,
    pub cond_tol: f64,
    pub definiteness_tol: f64,
    pub chain_tol: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sym_tol_factor: SYM_TOL_FACTOR,
            cond_tol: COND_TOL,
            definiteness_tol: DEFINITENESS_TOL,
            chain_tol: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CasimirSection {
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    #[serde(rename = "Gc")]
    pub gc: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
    #[serde(rename = "Jc")]
    pub jc: Vec<Vec<f64>>,
    #[serde(rename = "Rc")]
    pub rc: Vec<Vec<f64>>,
    pub residual_pde1: f64,
    pub residual_pde2: f64,
    pub exact: bool,
    pub least_squares: bool,
}

impl From<&CasimirSolution> for CasimirSection {
    fn from(s: &CasimirSolution) -> Self {
        Self {
            k: to_rows(&s.k),
            gc: to_rows(&s.gc),
            kappa: v(&s.kappa),
            jc: to_rows(&s.jc),
            rc: to_rows(&s.rc),
            residual_pde1: s.residual_pde1,
            residual_pde2: s.residual_pde2,
            exact: s.exact,
            least_squares: s.least_squares,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ControllerSection {
    pub resistive_verdict: DefinitenessVerdict,
    pub passive: bool,
    #[serde(rename = "Hc_Q")]
    pub hc_q: Vec<Vec<f64>>,
    #[serde(rename = "Hc_b")]
    pub hc_b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareSection {
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    pub asym_defect: f64,
    pub tol: f64,
    pub integrable: bool,
}

impl From<&PoincareReport> for PoincareSection {
    fn from(p: &PoincareReport) -> Self {
        Self {
            m: to_rows(&p.m),
            asym_defect: p.asym_defect,
            tol: p.tol,
            integrable: p.integrable,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapingSection {
    pub path: Option<&'static str>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    #[serde(rename = "Jd")]
    pub jd: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Rd")]
    pub rd: Option<Vec<Vec<f64>>>,
    #[serde(rename = "W")]
    pub w: Option<Vec<Vec<f64>>>,
    pub x_bar: Option<Vec<f64>>,
    pub xi_star: Option<Vec<f64>>,
    pub match_residual: Option<f64>,
    pub rd_verdict: Option<DefinitenessVerdict>,
    pub hessian_verdict: Option<DefinitenessVerdict>,
}

impl ShapingSection {
    fn new(v: &Verification) -> Self {
        let s: Option<&ShapedDynamics> = v.shaped.as_ref();
        Self {
            path: v.path.map(|p| p.as_str()),
            a: to_rows(&v.affine.0),
            c: self::v(&v.affine.1),
            jd: s.map(|s| to_rows(&s.jd)),
            rd: s.map(|s| to_rows(&s.rd)),
            w: s.map(|s| to_rows(&s.w)),
            x_bar: s.map(|s| self::v(&s.x_bar)),
            xi_star: v.xi_star.as_ref().map(self::v),
            match_residual: s.map(|s| s.match_residual),
            rd_verdict: s.map(|s| s.rd_verdict),
            hessian_verdict: s.map(|s| s.hessian_verdict),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSection {
    pub dt: f64,
    pub t_final: f64,
    pub samples: usize,
    pub final_x: Vec<f64>,
    pub final_xi: Vec<f64>,
    pub casimir_drift: Option<f64>,
    pub energy_audit: f64,
    /// Largest `-∇HcᵀRc∇Hc` along the run; positive means the controller
    /// injected energy.
    pub max_controller_power: f64,
    pub max_power_residual: f64,
}

impl SimulationSection {
    pub fn new(traj: &Trajectory, dt: f64, r_plant: &DMatrix<f64>, rc: &DMatrix<f64>, has_casimir: bool) -> Self {
        let max_controller_power = power_channels(traj, r_plant, rc)
            .iter()
            .map(|p| p.controller)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            dt,
            t_final: *traj.t.last().unwrap_or(&0.0),
            samples: traj.len(),
            final_x: v(traj.final_x()),
            final_xi: v(traj.final_xi()),
            casimir_drift: has_casimir.then(|| casimir_drift(traj)),
            energy_audit: energy_audit(traj, r_plant, rc),
            max_controller_power: if max_controller_power.is_finite() {
                max_controller_power
            } else {
                0.0
            },
            max_power_residual: traj
                .power_residual
                .iter()
                .fold(0.0, |a, p| a.max(p.abs())),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub expected: f64,
    pub actual: f64,
    pub abs_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSection {
    pub demo: String,
    pub params: RlcParams,
    pub expected: RlcOracle,
    pub checks: BTreeMap<String, OracleCheck>,
    pub all_pass: bool,
}

impl OracleSection {
    pub fn new(demo: &str, params: RlcParams, expected: RlcOracle) -> Self {
        Self {
            demo: demo.into(),
            params,
            expected,
            checks: BTreeMap::new(),
            all_pass: true,
        }
    }

    /// Records `|actual - expected| <= tol (1 + |expected|)`.
    pub fn check(&mut self, name: &str, expected: f64, actual: f64, tol: f64) {
        let abs_diff = (actual - expected).abs();
        let tolerance = tol * (1.0 + expected.abs());
        let pass = abs_diff <= tolerance;
        self.all_pass &= pass;
        self.checks.insert(
            name.into(),
            OracleCheck {
                expected,
                actual,
                abs_diff,
                tolerance,
                pass,
            },
        );
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub tolerances: Tolerances,
    pub casimir: Option<CasimirSection>,
    pub controller: Option<ControllerSection>,
    pub obstacle: Option<ObstacleReport>,
    pub poincare: Option<PoincareSection>,
    pub shaping: Option<ShapingSection>,
    pub stability: Option<StabilityVerdict>,
    pub simulation: Option<SimulationSection>,
    pub oracle: Option<OracleSection>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            tolerances: Tolerances::default(),
            casimir: None,
            controller: None,
            obstacle: None,
            poincare: None,
            shaping: None,
            stability: None,
            simulation: None,
            oracle: None,
            notes: Vec::new(),
        }
    }

    pub fn with_casimir(&mut self, sol: &CasimirSolution, obstacle: ObstacleReport) {
        self.tolerances.chain_tol = Some(obstacle.chain_tol);
        self.casimir = Some(sol.into());
        self.obstacle = Some(obstacle);
    }

    pub fn with_controller(&mut self, ctrl: &crate::ph_core::LtiPhSystem) {
        self.controller = Some(ControllerSection {
            resistive_verdict: *ctrl.resistive_verdict(),
            passive: ctrl.is_passive(),
            hc_q: to_rows(ctrl.ham().q()),
            hc_b: v(ctrl.ham().b()),
        });
    }

    pub fn with_verification(&mut self, ver: &Verification) {
        self.tolerances.chain_tol = Some(ver.obstacle.chain_tol);
        self.obstacle = Some(ver.obstacle.clone());
        self.poincare = ver.poincare.as_ref().map(Into::into);
        self.shaping = Some(ShapingSection::new(ver));
        self.stability = Some(ver.stability.clone());
        self.notes.extend(ver.notes.iter().cloned());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}
