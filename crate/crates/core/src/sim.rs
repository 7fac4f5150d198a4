//! Fixed-step RK4 integration with conservation monitors.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::casimir::CasimirSolution;
use crate::error::{PhError, Result};
use crate::ph_core::{feedback_interconnect, vector_field, LtiPhSystem, QuadraticHamiltonian};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_T_FINAL: f64 = 50.0;
pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Constant input for systems with ports; zero when absent.
    pub input: Option<DVector<f64>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            t_final: DEFAULT_T_FINAL,
            input: None,
        }
    }
}

impl SimConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            input: None,
        }
    }

    /// Number of RK4 steps; the grid ends at `steps * dt`, the multiple of
    /// `dt` closest to `t_final`.
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }
}

/// A plant/controller pair closed through `u = -y_c`, `u_c = y`, with the
/// Casimir gradient used for monitoring.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub plant: LtiPhSystem,
    pub controller: LtiPhSystem,
    pub system: LtiPhSystem,
    pub casimir: Option<CasimirSolution>,
}

impl ClosedLoop {
    pub fn new(
        plant: LtiPhSystem,
        controller: LtiPhSystem,
        casimir: Option<CasimirSolution>,
    ) -> Result<Self> {
        let system = feedback_interconnect(&plant, &controller)?;
        if let Some(sol) = &casimir {
            if sol.k.shape() != (plant.n(), controller.n()) {
                return Err(PhError::DimensionMismatch(format!(
                    "Casimir gradient is {}x{}, loop is {}x{}",
                    sol.k.nrows(),
                    sol.k.ncols(),
                    plant.n(),
                    controller.n()
                )));
            }
        }
        Ok(Self {
            plant,
            controller,
            system,
            casimir,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub xi: Vec<DVector<f64>>,
    pub h_vals: Vec<f64>,
    pub hc_vals: Vec<f64>,
    /// `C = ξ - Kᵀx` per sample (empty vectors without a Casimir).
    pub casimir_vals: Vec<DVector<f64>>,
    /// `∇H̃ᵀż - (-∇H̃ᵀR̃∇H̃ + yᵀu)` per sample.
    pub power_residual: Vec<f64>,
    pub plant_ham: QuadraticHamiltonian,
    pub controller_ham: QuadraticHamiltonian,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn n(&self) -> usize {
        self.plant_ham.dim()
    }

    pub fn nc(&self) -> usize {
        self.controller_ham.dim()
    }

    pub fn final_x(&self) -> &DVector<f64> {
        self.x.last().expect("trajectory has at least one sample")
    }

    pub fn final_xi(&self) -> &DVector<f64> {
        self.xi.last().expect("trajectory has at least one sample")
    }

    fn casimir_width(&self) -> usize {
        self.casimir_vals.first().map_or(0, |c| c.len())
    }

    /// CSV with header `t,x1..xn,xi1..xinc,H,Hc,C,power_residual`. A vector
    /// Casimir expands to `C1..Ck`; no Casimir leaves an empty `C` column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n()).map(|i| format!("x{i}")));
        header.extend((1..=self.nc()).map(|i| format!("xi{i}")));
        header.push("H".into());
        header.push("Hc".into());
        let width = self.casimir_width();
        if width <= 1 {
            header.push("C".into());
        } else {
            header.extend((1..=width).map(|i| format!("C{i}")));
        }
        header.push("power_residual".into());
        writeln!(out, "{}", header.join(","))?;

        let fmt = |v: f64| format!("{v:.16e}");
        for k in 0..self.len() {
            let mut row = vec![fmt(self.t[k])];
            row.extend(self.x[k].iter().map(|v| fmt(*v)));
            row.extend(self.xi[k].iter().map(|v| fmt(*v)));
            row.push(fmt(self.h_vals[k]));
            row.push(fmt(self.hc_vals[k]));
            if width == 0 {
                row.push(String::new());
            } else {
                row.extend(self.casimir_vals[k].iter().map(|v| fmt(*v)));
            }
            row.push(fmt(self.power_residual[k]));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

struct Layout<'a> {
    plant_dim: usize,
    plant_ham: &'a QuadraticHamiltonian,
    controller_ham: &'a QuadraticHamiltonian,
    casimir: Option<&'a DMatrix<f64>>,
}

/// Integrates a single system; the whole state is reported as plant state.
pub fn simulate(sys: &LtiPhSystem, z0: &DVector<f64>, cfg: &SimConfig) -> Result<Trajectory> {
    let empty = QuadraticHamiltonian::zero(0);
    let layout = Layout {
        plant_dim: sys.n(),
        plant_ham: sys.ham(),
        controller_ham: &empty,
        casimir: None,
    };
    integrate(sys, z0, cfg, &layout)
}

/// Integrates the interconnected loop from `(x0, ξ0)`.
pub fn simulate_closed_loop(
    cl: &ClosedLoop,
    x0: &DVector<f64>,
    xi0: &DVector<f64>,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    let (n, nc) = (cl.plant.n(), cl.controller.n());
    if x0.len() != n || xi0.len() != nc {
        return Err(PhError::DimensionMismatch(format!(
            "initial state ({}, {}) for a ({n}, {nc}) loop",
            x0.len(),
            xi0.len()
        )));
    }
    let mut z0 = DVector::zeros(n + nc);
    z0.rows_mut(0, n).copy_from(x0);
    z0.rows_mut(n, nc).copy_from(xi0);
    let layout = Layout {
        plant_dim: n,
        plant_ham: cl.plant.ham(),
        controller_ham: cl.controller.ham(),
        casimir: cl.casimir.as_ref().map(|s| &s.k),
    };
    integrate(&cl.system, &z0, &SimConfig { input: None, ..cfg.clone() }, &layout)
}

fn integrate(
    sys: &LtiPhSystem,
    z0: &DVector<f64>,
    cfg: &SimConfig,
    layout: &Layout<'_>,
) -> Result<Trajectory> {
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) || !(cfg.t_final >= cfg.dt) {
        return Err(PhError::BadParam(format!(
            "need dt > 0 and t_final >= dt, got dt = {}, t_final = {}",
            cfg.dt, cfg.t_final
        )));
    }
    if z0.len() != sys.n() {
        return Err(PhError::DimensionMismatch(format!(
            "initial state has length {}, system has {}",
            z0.len(),
            sys.n()
        )));
    }
    let u = match &cfg.input {
        Some(u) if u.len() == sys.m() => u.clone(),
        Some(u) => {
            return Err(PhError::DimensionMismatch(format!(
                "input has length {}, system has {} ports",
                u.len(),
                sys.m()
            )))
        }
        None => DVector::zeros(sys.m()),
    };

    let steps = cfg.steps();
    let dt = cfg.dt;
    let (n, nc) = (layout.plant_dim, sys.n() - layout.plant_dim);
    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        xi: Vec::with_capacity(steps + 1),
        h_vals: Vec::with_capacity(steps + 1),
        hc_vals: Vec::with_capacity(steps + 1),
        casimir_vals: Vec::with_capacity(steps + 1),
        power_residual: Vec::with_capacity(steps + 1),
        plant_ham: layout.plant_ham.clone(),
        controller_ham: layout.controller_ham.clone(),
    };

    let f = |z: &DVector<f64>| -> DVector<f64> {
        vector_field(sys, z, &u).expect("dimensions checked above")
    };
    let record = |traj: &mut Trajectory, t: f64, z: &DVector<f64>| {
        let x = z.rows(0, n).into_owned();
        let xi = z.rows(n, nc).into_owned();
        let grad = sys.ham().gradient(z);
        let zdot = sys.j_minus_r() * &grad + sys.g() * &u;
        let y = sys.g().transpose() * &grad;
        let expected = -grad.dot(&(sys.r() * &grad)) + y.dot(&u);
        traj.power_residual.push(grad.dot(&zdot) - expected);
        traj.h_vals.push(layout.plant_ham.value(&x));
        traj.hc_vals.push(layout.controller_ham.value(&xi));
        traj.casimir_vals.push(match layout.casimir {
            Some(k) => &xi - k.transpose() * &x,
            None => DVector::zeros(0),
        });
        traj.t.push(t);
        traj.x.push(x);
        traj.xi.push(xi);
    };

    let mut z = z0.clone();
    check_finite(&z, 0.0)?;
    record(&mut traj, 0.0, &z);
    for k in 1..=steps {
        let k1 = f(&z);
        let k2 = f(&(&z + &k1 * (0.5 * dt)));
        let k3 = f(&(&z + &k2 * (0.5 * dt)));
        let k4 = f(&(&z + &k3 * dt));
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let t = k as f64 * dt;
        check_finite(&z, t)?;
        record(&mut traj, t, &z);
    }
    Ok(traj)
}

fn check_finite(z: &DVector<f64>, time: f64) -> Result<()> {
    let magnitude = z.iter().fold(0.0_f64, |acc, v| {
        if v.is_finite() {
            acc.max(v.abs())
        } else {
            f64::INFINITY
        }
    });
    if magnitude > OVERFLOW_GUARD {
        return Err(PhError::NonFinite { time, magnitude });
    }
    Ok(())
}

/// `max_t |C(t) - C(0)|` over all Casimir components.
pub fn casimir_drift(traj: &Trajectory) -> f64 {
    let Some(c0) = traj.casimir_vals.first() else {
        return 0.0;
    };
    traj.casimir_vals
        .iter()
        .flat_map(|c| c.iter().zip(c0.iter()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// Largest mismatch, over interior samples, between the central-difference
/// rate of `H + Hc` and the dissipated power `-∇HᵀR∇H - ∇HcᵀRc∇Hc`.
pub fn energy_audit(traj: &Trajectory, r_plant: &DMatrix<f64>, rc: &DMatrix<f64>) -> f64 {
    power_channels(traj, r_plant, rc)
        .into_iter()
        .map(|p| (p.stored_rate - (p.plant + p.controller)).abs())
        .fold(0.0, f64::max)
}

/// Per-sample energy bookkeeping at an interior grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSample {
    pub t: f64,
    /// Central-difference `d(H + Hc)/dt`.
    pub stored_rate: f64,
    /// `-∇HᵀR∇H`.
    pub plant: f64,
    /// `-∇HcᵀRc∇Hc`; positive when the controller injects energy.
    pub controller: f64,
}

pub fn power_channels(traj: &Trajectory, r_plant: &DMatrix<f64>, rc: &DMatrix<f64>) -> Vec<PowerSample> {
    let len = traj.len();
    if len < 3 {
        return Vec::new();
    }
    (1..len - 1)
        .map(|k| {
            let total = |i: usize| traj.h_vals[i] + traj.hc_vals[i];
            let stored_rate = (total(k + 1) - total(k - 1)) / (traj.t[k + 1] - traj.t[k - 1]);
            let gh = traj.plant_ham.gradient(&traj.x[k]);
            let ghc = traj.controller_ham.gradient(&traj.xi[k]);
            PowerSample {
                t: traj.t[k],
                stored_rate,
                plant: -gh.dot(&(r_plant * &gh)),
                controller: -ghc.dot(&(rc * &ghc)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    fn scalar_system(rate: f64) -> LtiPhSystem {
        // ẋ = (0 - (-rate)) x
        LtiPhSystem::new(
            DMatrix::zeros(1, 1),
            mat(1, 1, &[-rate]),
            DMatrix::zeros(1, 0),
            QuadraticHamiltonian::quadratic(mat(1, 1, &[1.0])).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_dynamics_stay_constant() {
        let sys = LtiPhSystem::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 0),
            QuadraticHamiltonian::zero(2),
        )
        .unwrap();
        let z0 = DVector::from_vec(vec![0.3, -2.0]);
        let traj = simulate(&sys, &z0, &SimConfig::new(0.1, 1.0)).unwrap();
        assert_eq!(traj.len(), 11);
        assert!(traj.x.iter().all(|x| x == &z0));
        assert_eq!(casimir_drift(&traj), 0.0);
    }

    #[test]
    fn unstable_system_trips_the_guard() {
        let err = simulate(&scalar_system(1.0), &DVector::from_vec(vec![1.0]), &SimConfig::new(0.01, 1000.0))
            .unwrap_err();
        match err {
            PhError::NonFinite { time, .. } => assert!(time > 27.0 && time < 28.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exponential_decay_matches_rk4_amplification() {
        // one RK4 step of ẋ = λx multiplies by 1 + h + h²/2 + h³/6 + h⁴/24 (h = λdt)
        let dt = 0.1;
        let traj = simulate(&scalar_system(-1.0), &DVector::from_vec(vec![1.0]), &SimConfig::new(dt, 1.0)).unwrap();
        let h: f64 = -dt;
        let amp = 1.0 + h + h * h / 2.0 + h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((traj.final_x()[0] - amp.powi(10)).abs() < 1e-14);
    }

    #[test]
    fn single_step_grid() {
        let traj = simulate(&scalar_system(-1.0), &DVector::from_vec(vec![1.0]), &SimConfig::new(0.01, 0.01)).unwrap();
        assert_eq!(traj.t, vec![0.0, 0.01]);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next().unwrap(), "t,x1,H,Hc,C,power_residual");
    }

    #[test]
    fn bad_step_is_rejected() {
        let sys = scalar_system(-1.0);
        let z0 = DVector::from_vec(vec![1.0]);
        assert!(simulate(&sys, &z0, &SimConfig::new(0.0, 1.0)).is_err());
        assert!(simulate(&sys, &z0, &SimConfig::new(0.1, 0.01)).is_err());
    }

    #[test]
    fn lossless_loop_conserves_total_energy() {
        let plant = LtiPhSystem::new(
            mat(2, 2, &[0.0, -1.0, 1.0, 0.0]),
            DMatrix::zeros(2, 2),
            mat(2, 1, &[1.0, 0.0]),
            QuadraticHamiltonian::quadratic(DMatrix::identity(2, 2)).unwrap(),
        )
        .unwrap();
        let ctrl = LtiPhSystem::new(
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            mat(1, 1, &[1.0]),
            QuadraticHamiltonian::quadratic(mat(1, 1, &[2.0])).unwrap(),
        )
        .unwrap();
        let cl = ClosedLoop::new(plant, ctrl, None).unwrap();
        let traj = simulate_closed_loop(
            &cl,
            &DVector::from_vec(vec![1.0, 0.0]),
            &DVector::from_vec(vec![0.5]),
            &SimConfig::new(0.01, 10.0),
        )
        .unwrap();
        let e0 = traj.h_vals[0] + traj.hc_vals[0];
        let spread = traj
            .h_vals
            .iter()
            .zip(&traj.hc_vals)
            .map(|(h, hc)| (h + hc - e0).abs())
            .fold(0.0, f64::max);
        assert!(spread < 1e-8, "energy spread {spread:e}");
        assert!(energy_audit(&traj, cl.plant.r(), cl.controller.r()) < 1e-4);
        assert!(traj.power_residual.iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn runs_are_bit_identical() {
        let sys = LtiPhSystem::new(
            mat(2, 2, &[0.0, -1.0, 1.0, 0.0]),
            mat(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            mat(2, 1, &[1.0, 0.0]),
            QuadraticHamiltonian::quadratic(DMatrix::identity(2, 2)).unwrap(),
        )
        .unwrap();
        let cfg = SimConfig {
            input: Some(DVector::from_vec(vec![1.0])),
            ..SimConfig::new(0.01, 5.0)
        };
        let z0 = DVector::from_vec(vec![0.1, 0.2]);
        let a = simulate(&sys, &z0, &cfg).unwrap();
        let b = simulate(&sys, &z0, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
