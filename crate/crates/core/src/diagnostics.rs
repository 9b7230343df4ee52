//! Relative energy between a viscous state and an Euler solution, the Kato
//! layer dissipation, the five cross terms of the relative-energy balance
//! and log-log rate fits.

use crate::corrector::CorrectorField;
use crate::euler::EulerSolution;
use crate::fields::{ScalarField, VectorField};
use crate::geometry::Grid;
use crate::solver::poisson::FaceDensity;
use crate::solver::{EnergyLedger, FlowState, SolverError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("rate fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("value {value} at nu = {nu} is not positive")]
    NonPositive { nu: f64, value: f64 },
    #[error("viscosity {0} appears twice")]
    DuplicateNu(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeEnergySample {
    pub time: f64,
    pub e1: f64,
    pub e2: f64,
    pub e_total: f64,
}

/// Euler velocity sampled on the MAC faces, wall trace included.
pub fn sample_velocity(grid: &Grid, sol: &EulerSolution, t: f64) -> VectorField {
    let mut v = VectorField::from_fn(grid, |x, y| {
        let u = sol.velocity(t, x, y);
        (u[0], u[1])
    });
    // the Euler field satisfies the slip condition; make it exact on the walls
    v.zero_wall_rows();
    v
}

pub fn sample_density(grid: &Grid, sol: &EulerSolution, t: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| sol.density(t, x, y))
}

fn relative_energy_with(
    grid: &Grid,
    state: &FlowState,
    euler_vel: &VectorField,
    euler_rho: &ScalarField,
) -> RelativeEnergySample {
    let faces = FaceDensity::new(grid, &state.rho);
    let nx = grid.nx;
    let mut e1 = 0.0;
    for j in 0..grid.ny {
        for i in 0..nx {
            let k = j * nx + i;
            e1 += grid.u_weight(j) * faces.u[k] * (state.vel.u[k] - euler_vel.u[k]).powi(2);
        }
    }
    for j in 1..grid.ny {
        for i in 0..nx {
            let k = j * nx + i;
            e1 += grid.v_weight(j) * faces.v[k] * (state.vel.v[k] - euler_vel.v[k]).powi(2);
        }
    }
    let e2: f64 = state
        .rho
        .values
        .iter()
        .zip(&euler_rho.values)
        .zip(&grid.cell_areas)
        .map(|((a, b), w)| w * (a - b) * (a - b))
        .sum();
    let (e1, e2) = (0.5 * e1, 0.5 * e2);
    RelativeEnergySample {
        time: state.time,
        e1,
        e2,
        e_total: e1 + e2,
    }
}

/// `e1 = 1/2 int rho_nu |u_nu - u|^2`, `e2 = 1/2 int |rho_nu - rho|^2`.
pub fn relative_energy(grid: &Grid, state: &FlowState, sol: &EulerSolution) -> RelativeEnergySample {
    let vel = sample_velocity(grid, sol, state.time);
    let rho = sample_density(grid, sol, state.time);
    relative_energy_with(grid, state, &vel, &rho)
}

/// `nu int_0^T' int_{layer} |grad u_nu|^2` from the ledger.
pub fn kato_dissipation(ledger: &EnergyLedger, horizon: f64) -> Result<f64, SolverError> {
    ledger.layer_at(horizon)
}

/// Instantaneous cross terms and the Hardy-type bound for `|I3|`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GronwallBreakdown {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
    pub hardy_bound: f64,
}

/// Cell-centered velocity and gradient `[i][j] = d_j v_i` of a MAC field,
/// using the declared trace for `d_y u` next to the walls.
fn center_values(grid: &Grid, vel: &VectorField) -> Vec<([f64; 2], [[f64; 2]; 2])> {
    let (nx, ny) = (grid.nx, grid.ny);
    let yc = &grid.y_centers;
    let ly = grid.domain.length_y;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (ip, im) = (grid.ip(i), grid.im(i));
            let uc = |jj: usize| 0.5 * (vel.u_at(i, jj) + vel.u_at(ip, jj));
            let vc = |ii: usize| 0.5 * (vel.v_at(ii, j) + vel.v_at(ii, j + 1));
            let (ylo, flo) = if j == 0 {
                (0.0, 0.5 * (vel.trace.bottom[i] + vel.trace.bottom[ip]))
            } else {
                (yc[j - 1], uc(j - 1))
            };
            let (yhi, fhi) = if j + 1 == ny {
                (ly, 0.5 * (vel.trace.top[i] + vel.trace.top[ip]))
            } else {
                (yc[j + 1], uc(j + 1))
            };
            let grad = [
                [
                    (vel.u_at(ip, j) - vel.u_at(i, j)) / grid.x_spacing,
                    (fhi - flo) / (yhi - ylo),
                ],
                [
                    (vc(ip) - vc(im)) / (2.0 * grid.x_spacing),
                    (vel.v_at(i, j + 1) - vel.v_at(i, j)) / grid.dy[j],
                ],
            ];
            out.push(([uc(j), vc(i)], grad));
        }
    }
    out
}

/// Evaluates the five cross terms at one state.
///
/// `hardy_constant` is the measured layer Hardy constant; the bound is
/// `rho_max C_H ||dist^2 grad Phi||_inf int_{layer} |grad u_nu|^2`.
pub fn gronwall_terms(
    grid: &Grid,
    state: &FlowState,
    sol: &EulerSolution,
    corr: &CorrectorField,
    hardy_constant: f64,
) -> GronwallBreakdown {
    let t = state.time;
    let euler_vel = sample_velocity(grid, sol, t);
    gronwall_terms_with(grid, state, sol, &euler_vel, corr, hardy_constant)
}

fn gronwall_terms_with(
    grid: &Grid,
    state: &FlowState,
    sol: &EulerSolution,
    euler_vel: &VectorField,
    corr: &CorrectorField,
    hardy_constant: f64,
) -> GronwallBreakdown {
    let t = state.time;
    let nu_vals = center_values(grid, &state.vel);
    let phi_vals = center_values(grid, &corr.field);
    let (mut i1, mut i2, mut i3, mut i4) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.idx(i, j);
            let (x, y) = (grid.x_center(i), grid.y_centers[j]);
            let a = grid.cell_areas[k];
            let rho_nu = state.rho.values[k];
            let rho = sol.density(t, x, y);
            let u = sol.velocity(t, x, y);
            let du = sol.velocity_gradient(t, x, y);
            let dtu = sol.velocity_dt(t, x, y);
            let un = nu_vals[k].0;
            let w = [un[0] - u[0], un[1] - u[1]];
            let conv = [u[0] * du[0][0] + u[1] * du[0][1], u[0] * du[1][0] + u[1] * du[1][1]];
            let wdu = [w[0] * du[0][0] + w[1] * du[0][1], w[0] * du[1][0] + w[1] * du[1][1]];
            i1 -= a * rho_nu * (wdu[0] * w[0] + wdu[1] * w[1]);
            i2 -= a * (rho_nu - rho) * (conv[0] * w[0] + conv[1] * w[1]);
            let gp = phi_vals[k].1;
            let adv = [un[0] * gp[0][0] + un[1] * gp[0][1], un[0] * gp[1][0] + un[1] * gp[1][1]];
            i3 += a * rho_nu * (adv[0] * un[0] + adv[1] * un[1]);
            i4 += a * (rho_nu - rho) * (w[0] * dtu[0] + w[1] * dtu[1]);
        }
    }
    let repaired = euler_vel.sub(&corr.field);
    let i5 = state.viscosity * grid.integrate(&grid.grad_density_pair(&state.vel, &repaired), None);
    let layer_grad = grid.integrate(&grid.gradient_tensor_norms(&state.vel), Some(&corr.support_mask));
    let hardy_bound = state.rho.max() * hardy_constant * corr.dist2_gradient_linf * layer_grad;
    GronwallBreakdown {
        i1,
        i2,
        i3,
        i4,
        i5,
        hardy_bound,
    }
}

/// One row of the per-run diagnostic table. The `i` entries and
/// `hardy_bound` are time integrals from 0 to `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub e1: f64,
    pub e2: f64,
    pub e_total: f64,
    pub diss_total: f64,
    pub diss_layer: f64,
    pub i: [f64; 5],
    pub hardy_bound: f64,
    /// `E(t) - E(0) - C int E - R(t)`; nonpositive when the closure holds.
    pub closure_violation: f64,
    /// `|I1| <= 2 ||grad u||_inf e1` at this instant.
    pub i1_bound_holds: bool,
    /// Time-integrated `|I3|` against the integrated Hardy bound.
    pub i3_bound_holds: bool,
}

/// Growth constant of the closure:
/// `2 ||grad u|| + (||(u.grad)u|| + ||d_t u|| + ||grad rho||) max(1, 1/rho_min)`.
pub fn closure_constant(sol: &EulerSolution) -> f64 {
    let inv = (1.0 / sol.min_density()).max(1.0);
    2.0 * sol.max_velocity_gradient()
        + (sol.max_convective_acceleration() + sol.max_velocity_dt() + sol.max_density_gradient()) * inv
}

/// Streams the relative-energy diagnostics over a trajectory.
///
/// The closure checked at each sample is
/// `E(s) <= E(0) + C int_0^s E + int_0^s (|I3| + |I5|) + |B(s)|` with
/// `B(s) = int rho_nu(s) u_nu(s) . Phi - int rho_0 u_0 . Phi` the corrector
/// boundary term.
pub struct GronwallTracker<'a> {
    grid: &'a Grid,
    sol: &'a EulerSolution,
    corr: &'a CorrectorField,
    hardy_constant: f64,
    pub constant: f64,
    euler_vel: VectorField,
    euler_rho: ScalarField,
    rows: Vec<DiagnosticRow>,
    prev: Option<(f64, GronwallBreakdown, f64)>,
    integral_e: f64,
    integral_abs: f64,
    initial: Option<(f64, f64)>,
}

impl<'a> GronwallTracker<'a> {
    pub fn new(grid: &'a Grid, sol: &'a EulerSolution, corr: &'a CorrectorField, hardy_constant: f64) -> Self {
        Self {
            grid,
            sol,
            corr,
            hardy_constant,
            constant: closure_constant(sol),
            euler_vel: sample_velocity(grid, sol, 0.0),
            euler_rho: sample_density(grid, sol, 0.0),
            rows: Vec::new(),
            prev: None,
            integral_e: 0.0,
            integral_abs: 0.0,
            initial: None,
        }
    }

    fn pairing(&self, state: &FlowState) -> f64 {
        let faces = FaceDensity::new(self.grid, &state.rho);
        let mut flux = state.vel.clone();
        flux.u.iter_mut().zip(&faces.u).for_each(|(a, r)| *a *= r);
        flux.v.iter_mut().zip(&faces.v).for_each(|(a, r)| *a *= r);
        self.grid.inner_vector(&flux, &self.corr.field)
    }

    /// Records the state reached at `state.time`; `ledger` supplies the
    /// dissipation totals at that time.
    pub fn observe(&mut self, state: &FlowState, ledger: &EnergyLedger) -> Result<&DiagnosticRow, SolverError> {
        let t = state.time;
        if !self.sol.is_steady() {
            self.euler_vel = sample_velocity(self.grid, self.sol, t);
            self.euler_rho = sample_density(self.grid, self.sol, t);
        }
        let e = relative_energy_with(self.grid, state, &self.euler_vel, &self.euler_rho);
        let g = gronwall_terms_with(
            self.grid,
            state,
            self.sol,
            &self.euler_vel,
            self.corr,
            self.hardy_constant,
        );
        let pairing = self.pairing(state);
        let (e0, b0) = *self.initial.get_or_insert((e.e_total, pairing));

        let mut i = [0.0; 5];
        let mut hardy = 0.0;
        if let Some((t0, g0, et0)) = self.prev {
            let h = t - t0;
            let last = self.rows.last().unwrap();
            i = last.i;
            let trap = |a: f64, b: f64| 0.5 * h * (a + b);
            i[0] += trap(g0.i1, g.i1);
            i[1] += trap(g0.i2, g.i2);
            i[2] += trap(g0.i3, g.i3);
            i[3] += trap(g0.i4, g.i4);
            i[4] += trap(g0.i5, g.i5);
            hardy = last.hardy_bound + trap(g0.hardy_bound, g.hardy_bound);
            self.integral_e += trap(et0, e.e_total);
            self.integral_abs += trap(g0.i3.abs() + g0.i5.abs(), g.i3.abs() + g.i5.abs());
        }
        let remainder = self.integral_abs + (pairing - b0).abs();
        let closure_violation = e.e_total - e0 - self.constant * self.integral_e - remainder;
        let tol = 1e-12 * (1.0 + e.e_total.abs());
        let row = DiagnosticRow {
            t,
            e1: e.e1,
            e2: e.e2,
            e_total: e.e_total,
            diss_total: ledger.total_at(t)?,
            diss_layer: ledger.layer_at(t)?,
            i,
            hardy_bound: hardy,
            closure_violation,
            i1_bound_holds: g.i1.abs() <= 2.0 * self.sol.max_velocity_gradient() * e.e1 + tol,
            i3_bound_holds: i[2].abs() <= hardy + tol,
        };
        self.prev = Some((t, g, e.e_total));
        self.rows.push(row);
        Ok(self.rows.last().unwrap())
    }

    pub fn rows(&self) -> &[DiagnosticRow] {
        &self.rows
    }

    pub fn max_violation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.closure_violation)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn e_sup(&self) -> f64 {
        self.rows.iter().map(|r| r.e_total).fold(0.0, f64::max)
    }
}

pub const DIAGNOSTIC_HEADER: [&str; 12] = [
    "t",
    "e1",
    "e2",
    "e_total",
    "diss_total",
    "diss_layer",
    "I1",
    "I2",
    "I3",
    "I4",
    "I5",
    "hardy_bound",
];

pub fn write_diagnostic_csv(path: &std::path::Path, rows: &[DiagnosticRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DIAGNOSTIC_HEADER)?;
    for r in rows {
        let vals = [
            r.t,
            r.e1,
            r.e2,
            r.e_total,
            r.diss_total,
            r.diss_layer,
            r.i[0],
            r.i[1],
            r.i[2],
            r.i[3],
            r.i[4],
            r.hardy_bound,
        ];
        w.write_record(vals.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual in log space.
    pub max_residual: f64,
}

impl RateFit {
    pub fn predict(&self, nu: f64) -> f64 {
        (self.intercept + self.slope * nu.ln()).exp()
    }
}

/// Least-squares line through `(ln nu, ln value)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    for (k, &(nu, value)) in points.iter().enumerate() {
        if !(value > 0.0) || !(nu > 0.0) {
            return Err(FitError::NonPositive { nu, value });
        }
        if points[..k].iter().any(|&(other, _)| other == nu) {
            return Err(FitError::DuplicateNu(nu));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        slope,
        intercept,
        max_residual,
    })
}
