//! Time stepping of the variable-density incompressible Navier-Stokes
//! equations in the channel with no-slip walls.
//!
//! One step is: MUSCL density transport, explicit advection of the velocity,
//! backward-Euler viscosity split into an x sweep and a y sweep, and a
//! variable-density pressure projection. The energy ledger tracks
//! `1/2 int rho |u|^2` together with the total and boundary-layer viscous
//! dissipation.

pub mod oracle;
pub mod poisson;
pub mod snapshot;
pub mod transport;
pub mod tridiag;
pub mod weak;

use crate::fields::{FieldError, ScalarField, VectorField, WallTrace};
use crate::geometry::{GeometryError, Grid, LayerMask};
use poisson::FaceDensity;
use thiserror::Error;

pub use oracle::{heat_oracle_1d, HeatOracle1d, Profile1d};
pub use poisson::solve_variable_poisson;
pub use transport::advect_density;
pub use weak::{weak_residuals, WeakResidualAccumulator};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("Courant number {courant:.3} exceeds 1; step rejected")]
    Cfl { courant: f64 },
    #[error("pressure solve did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    PoissonNotConverged { iterations: usize, residual: f64 },
    #[error("Poisson right-hand side is not compatible (integral {integral:.3e})")]
    IncompatibleRhs { integral: f64 },
    #[error("non-finite values after step {step}")]
    NonFinite { step: usize },
    #[error("density must be positive, found minimum {0}")]
    NonPositiveDensity(f64),
    #[error("time step {dt} is not positive")]
    BadTimeStep { dt: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("ledger covers [0, {end}] but {requested} was requested")]
    HorizonBeyondLedger { end: f64, requested: f64 },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One snapshot of the viscous flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub rho: ScalarField,
    pub vel: VectorField,
    pub pressure: ScalarField,
    pub time: f64,
    pub viscosity: f64,
    pub step_index: usize,
}

impl FlowState {
    pub fn rest(grid: &Grid, rho: ScalarField, viscosity: f64) -> Self {
        Self {
            rho,
            vel: VectorField::zeros(grid),
            pressure: ScalarField::zeros(grid),
            time: 0.0,
            viscosity,
            step_index: 0,
        }
    }

    pub fn kinetic_energy(&self, grid: &Grid) -> f64 {
        let faces = FaceDensity::new(grid, &self.rho);
        kinetic_energy(grid, &faces, &self.vel)
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.rho, None)
    }
}

fn kinetic_energy(grid: &Grid, faces: &FaceDensity, vel: &VectorField) -> f64 {
    let nx = grid.nx;
    let mut e = 0.0;
    for j in 0..grid.ny {
        let w = grid.u_weight(j);
        for i in 0..nx {
            let k = j * nx + i;
            e += w * faces.u[k] * vel.u[k] * vel.u[k];
        }
    }
    for j in 1..grid.ny {
        let w = grid.v_weight(j);
        for i in 0..nx {
            let k = j * nx + i;
            e += w * faces.v[k] * vel.v[k] * vel.v[k];
        }
    }
    0.5 * e
}

/// Time series of kinetic energy and accumulated dissipation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub mask: LayerMask,
    pub times: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub dissipation_total: Vec<f64>,
    pub dissipation_layer: Vec<f64>,
}

impl EnergyLedger {
    pub fn new(grid: &Grid, state: &FlowState, layer_thickness: f64) -> Result<Self, SolverError> {
        let mask = grid.layer_mask(layer_thickness)?;
        Ok(Self {
            mask,
            times: vec![state.time],
            kinetic: vec![state.kinetic_energy(grid)],
            dissipation_total: vec![0.0],
            dissipation_layer: vec![0.0],
        })
    }

    /// Appends the state reached after a step of length `dt`.
    ///
    /// The dissipation increment is `dt * nu * int |grad u|^2` at the new
    /// time level, matching what the implicit viscous update removes.
    pub fn record(&mut self, grid: &Grid, state: &FlowState, dt: f64) {
        let density = grid.gradient_tensor_norms(&state.vel);
        let total = grid.integrate(&density, None);
        let layer = grid.integrate(&density, Some(&self.mask));
        let nu = state.viscosity;
        let last = self.times.len() - 1;
        self.times.push(state.time);
        self.kinetic.push(state.kinetic_energy(grid));
        self.dissipation_total
            .push(self.dissipation_total[last] + dt * nu * total);
        self.dissipation_layer
            .push(self.dissipation_layer[last] + dt * nu * layer);
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn interpolate(&self, series: &[f64], t: f64) -> Result<f64, SolverError> {
        let end = self.end_time();
        if t > end * (1.0 + 1e-12) + 1e-14 || t < self.times[0] {
            return Err(SolverError::HorizonBeyondLedger { end, requested: t });
        }
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            return Ok(series[0]);
        }
        if k >= self.times.len() {
            return Ok(*series.last().unwrap());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
        Ok(series[k - 1] * (1.0 - w) + series[k] * w)
    }

    pub fn layer_at(&self, t: f64) -> Result<f64, SolverError> {
        self.interpolate(&self.dissipation_layer, t)
    }

    pub fn total_at(&self, t: f64) -> Result<f64, SolverError> {
        self.interpolate(&self.dissipation_total, t)
    }

    /// Largest relative excess of `kinetic(t) + dissipation(t)` over
    /// `kinetic(0)`; nonpositive when the energy inequality holds.
    pub fn max_energy_violation(&self) -> f64 {
        let k0 = self.kinetic[0];
        let scale = k0.max(f64::MIN_POSITIVE);
        self.kinetic
            .iter()
            .zip(&self.dissipation_total)
            .map(|(k, d)| (k + d - k0) / scale)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The energy inequality with the fixed tolerances
    /// `kinetic(0) * (1 + 1e-8) + 1e-10`.
    pub fn energy_inequality_holds(&self) -> bool {
        let k0 = self.kinetic[0];
        self.kinetic
            .iter()
            .zip(&self.dissipation_total)
            .all(|(k, d)| k + d <= k0 * (1.0 + 1e-8) + 1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub poisson_tol: f64,
    pub poisson_max_iter: usize,
    pub dt_max: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            poisson_tol: 1e-10,
            poisson_max_iter: 20_000,
            dt_max: 1e-3,
        }
    }
}

/// Projection solver bound to one grid.
#[derive(Debug, Clone)]
pub struct FlowSolver {
    pub grid: Grid,
    pub settings: SolverSettings,
}

/// Outcome of preparing initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialProjection {
    pub state: FlowState,
    /// Max-norm change made by wall zeroing and projection.
    pub correction: f64,
}

impl FlowSolver {
    pub fn new(grid: Grid, settings: SolverSettings) -> Self {
        Self { grid, settings }
    }

    /// Builds a no-slip, divergence-free initial state from arbitrary data.
    pub fn initial_state(
        &self,
        rho: ScalarField,
        vel: VectorField,
        viscosity: f64,
    ) -> Result<InitialProjection, SolverError> {
        rho.check(&self.grid)?;
        vel.check(&self.grid)?;
        if rho.min() <= 0.0 {
            return Err(SolverError::NonPositiveDensity(rho.min()));
        }
        let mut v = vel.clone();
        v.zero_wall_rows();
        v.trace = WallTrace::zeros(self.grid.nx);
        let faces = FaceDensity::new(&self.grid, &rho);
        let (v, _) = self.project(&faces, v, 1.0)?;
        let correction = v
            .sub(&vel)
            .u
            .iter()
            .chain(v.sub(&vel).v.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let state = FlowState {
            rho,
            vel: v,
            pressure: ScalarField::zeros(&self.grid),
            time: 0.0,
            viscosity,
            step_index: 0,
        };
        Ok(InitialProjection { state, correction })
    }

    /// Advective limit `cfl / (max|u|/dx + max|v|/min dy)`, capped by `dt_max`.
    pub fn stable_dt(&self, state: &FlowState, cfl: f64) -> f64 {
        let c = transport::courant(&self.grid, &state.vel, 1.0);
        if c == 0.0 {
            self.settings.dt_max
        } else {
            (cfl / c).min(self.settings.dt_max)
        }
    }

    pub fn advect_density(&self, state: &FlowState, dt: f64) -> Result<ScalarField, SolverError> {
        transport::advect_density(&self.grid, &state.rho, &state.vel, dt)
    }

    pub fn solve_variable_poisson(
        &self,
        rho: &ScalarField,
        rhs: &ScalarField,
        tol: f64,
    ) -> Result<ScalarField, SolverError> {
        Ok(poisson::solve_variable_poisson(&self.grid, rho, rhs, tol, self.settings.poisson_max_iter)?.0)
    }

    /// `u - (dt/rho) grad p` with `div((1/rho) grad p) = div(u)/dt`.
    fn project(
        &self,
        faces: &FaceDensity,
        mut vel: VectorField,
        dt: f64,
    ) -> Result<(VectorField, ScalarField), SolverError> {
        let g = &self.grid;
        let mut rhs = g.divergence(&vel);
        // roundoff-level divergence: a relative-residual solve would only chase noise
        let scale = vel.linf_norm() / g.x_spacing.min(g.min_dy());
        if rhs.linf_norm() <= 1e-13 * scale {
            return Ok((vel, ScalarField::zeros(g)));
        }
        rhs.values.iter_mut().for_each(|x| *x /= dt);
        let (p, _) = poisson::solve_with_faces(
            g,
            faces,
            &rhs.values,
            self.settings.poisson_tol,
            self.settings.poisson_max_iter,
        )?;
        if p.values.iter().any(|&x| x != 0.0) {
            let grad = g.gradient(&p);
            let nx = g.nx;
            for k in 0..vel.u.len() {
                vel.u[k] -= dt / faces.u[k] * grad.u[k];
            }
            for j in 1..g.ny {
                for i in 0..nx {
                    let k = j * nx + i;
                    vel.v[k] -= dt / faces.v[k] * grad.v[k];
                }
            }
        }
        Ok((vel, p))
    }

    /// Centered advective acceleration `(u . grad) u` on the faces.
    fn advection(&self, vel: &VectorField) -> VectorField {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let yc = &g.y_centers;
        let yf = &g.y_faces;
        let ly = g.domain.length_y;
        let mut a = VectorField::zeros(g);
        for j in 0..ny {
            for i in 0..nx {
                let (ip, im) = (g.ip(i), g.im(i));
                let u = vel.u_at(i, j);
                let dudx = (vel.u_at(ip, j) - vel.u_at(im, j)) / (2.0 * g.x_spacing);
                let vbar = 0.25 * (vel.v_at(im, j) + vel.v_at(i, j) + vel.v_at(im, j + 1) + vel.v_at(i, j + 1));
                let (ylo, ulo) = if j == 0 {
                    (0.0, vel.trace.bottom[i])
                } else {
                    (yc[j - 1], vel.u_at(i, j - 1))
                };
                let (yhi, uhi) = if j + 1 == ny {
                    (ly, vel.trace.top[i])
                } else {
                    (yc[j + 1], vel.u_at(i, j + 1))
                };
                let dudy = centered_derivative(ylo, yc[j], yhi, ulo, u, uhi);
                a.u[j * nx + i] = u * dudx + vbar * dudy;
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                let (ip, im) = (g.ip(i), g.im(i));
                let v = vel.v_at(i, j);
                let ubar = 0.25 * (vel.u_at(i, j - 1) + vel.u_at(ip, j - 1) + vel.u_at(i, j) + vel.u_at(ip, j));
                let dvdx = (vel.v_at(ip, j) - vel.v_at(im, j)) / (2.0 * g.x_spacing);
                let dvdy = centered_derivative(yf[j - 1], yf[j], yf[j + 1], vel.v_at(i, j - 1), v, vel.v_at(i, j + 1));
                a.v[j * nx + i] = ubar * dvdx + v * dvdy;
            }
        }
        a
    }

    /// Backward-Euler viscous update, x sweep then y sweep.
    fn implicit_viscosity(&self, faces: &FaceDensity, vel: &mut VectorField, nu: f64, dt: f64) {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        if nu == 0.0 {
            return;
        }
        let dx2 = g.x_spacing * g.x_spacing;
        let mut lo = vec![0.0; nx];
        let mut di = vec![0.0; nx];
        let mut up = vec![0.0; nx];
        let mut rhs = vec![0.0; nx];
        let mut x_sweep = |data: &mut [f64], rho: &[f64], rows: std::ops::Range<usize>| {
            for j in rows {
                for i in 0..nx {
                    let k = nu * dt / (rho[j * nx + i] * dx2);
                    lo[i] = -k;
                    up[i] = -k;
                    di[i] = 1.0 + 2.0 * k;
                    rhs[i] = data[j * nx + i];
                }
                tridiag::solve_cyclic(&lo, &di, &up, &mut rhs);
                data[j * nx..(j + 1) * nx].copy_from_slice(&rhs);
            }
        };
        x_sweep(&mut vel.u, &faces.u, 0..ny);
        x_sweep(&mut vel.v, &faces.v, 1..ny);

        // y sweep for u: unknowns at centers, Dirichlet trace at the walls
        let mut lo = vec![0.0; ny];
        let mut di = vec![0.0; ny];
        let mut up = vec![0.0; ny];
        let mut rhs = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                let c = nu * dt / (faces.u[j * nx + i] * g.dy[j]);
                let below = c / g.dual_dy(j);
                let above = c / g.dual_dy(j + 1);
                lo[j] = -below;
                up[j] = -above;
                di[j] = 1.0 + below + above;
                rhs[j] = vel.u[j * nx + i];
            }
            rhs[0] += -lo[0] * vel.trace.bottom[i];
            rhs[ny - 1] += -up[ny - 1] * vel.trace.top[i];
            tridiag::solve(&lo, &di, &up, &mut rhs);
            for j in 0..ny {
                vel.u[j * nx + i] = rhs[j];
            }
        }
        // y sweep for v: interior faces 1..ny-1, zero on the walls
        let m = ny - 1;
        let mut lo = vec![0.0; m];
        let mut di = vec![0.0; m];
        let mut up = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 0..nx {
            for r in 0..m {
                let j = r + 1;
                let c = nu * dt / (faces.v[j * nx + i] * g.dual_dy(j));
                let below = c / g.dy[j - 1];
                let above = c / g.dy[j];
                lo[r] = -below;
                up[r] = -above;
                di[r] = 1.0 + below + above;
                rhs[r] = vel.v[j * nx + i];
            }
            tridiag::solve(&lo, &di, &up, &mut rhs);
            for r in 0..m {
                vel.v[(r + 1) * nx + i] = rhs[r];
            }
        }
    }

    /// Advances the state by `dt` and appends the result to `ledger`.
    pub fn step(&self, state: &FlowState, dt: f64, ledger: &mut EnergyLedger) -> Result<FlowState, SolverError> {
        if !(dt > 0.0) {
            return Err(SolverError::BadTimeStep { dt });
        }
        let g = &self.grid;
        let rho = self.advect_density(state, dt)?;
        let faces = FaceDensity::new(g, &rho);

        let adv = self.advection(&state.vel);
        let mut vel = state.vel.clone();
        for (u, a) in vel.u.iter_mut().zip(&adv.u) {
            *u -= dt * a;
        }
        for (v, a) in vel.v.iter_mut().zip(&adv.v) {
            *v -= dt * a;
        }
        vel.zero_wall_rows();
        self.implicit_viscosity(&faces, &mut vel, state.viscosity, dt);
        let (vel, pressure) = self.project(&faces, vel, dt)?;

        let next = FlowState {
            rho,
            vel,
            pressure,
            time: state.time + dt,
            viscosity: state.viscosity,
            step_index: state.step_index + 1,
        };
        if !(next.vel.is_finite() && next.rho.values.iter().all(|x| x.is_finite())) {
            return Err(SolverError::NonFinite { step: next.step_index });
        }
        ledger.record(g, &next, dt);
        Ok(next)
    }
}

/// Derivative at `y1` of the parabola through three points.
fn centered_derivative(y0: f64, y1: f64, y2: f64, f0: f64, f1: f64, f2: f64) -> f64 {
    let (h0, h1) = (y1 - y0, y2 - y1);
    (-h1 / (h0 * (h0 + h1))) * f0 + ((h1 - h0) / (h0 * h1)) * f1 + (h0 / (h1 * (h0 + h1))) * f2
}
