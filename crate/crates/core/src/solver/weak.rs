//! Discrete weak forms of the momentum and transport equations, tested
//! against `chi(t) Phi(x)` and `theta(x)`:
//!
//! ```text
//! int rho u . Phi |_0^T = int_0^T int rho u . Phi chi' / chi + rho (u (x) u) : grad Phi - nu grad u : grad Phi
//! int rho theta  |_0^T = int_0^T int rho u . grad theta
//! ```
//!
//! The time integrals use the trapezoidal rule over the pushed samples.

use super::poisson::FaceDensity;
use super::FlowState;
use crate::fields::{ScalarField, VectorField};
use crate::geometry::Grid;

/// Test functions: `Phi` divergence-free with zero wall trace, scalar `theta`,
/// and the time modulation `chi` of `Phi` with its derivative.
pub struct WeakTest {
    pub phi: VectorField,
    pub theta: ScalarField,
    pub chi: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub chi_dot: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl WeakTest {
    pub fn steady(phi: VectorField, theta: ScalarField) -> Self {
        Self {
            phi,
            theta,
            chi: Box::new(|_| 1.0),
            chi_dot: Box::new(|_| 0.0),
        }
    }
}

/// Streaming evaluation, so trajectories need not be stored.
pub struct WeakResidualAccumulator<'a> {
    grid: &'a Grid,
    test: &'a WeakTest,
    theta_grad: VectorField,
    first: Option<(f64, f64)>,
    last: Option<Sample>,
    integral_m: f64,
    integral_t: f64,
}

impl<'a> WeakResidualAccumulator<'a> {
    pub fn new(grid: &'a Grid, test: &'a WeakTest) -> Self {
        Self {
            grid,
            test,
            theta_grad: grid.gradient(&test.theta),
            first: None,
            last: None,
            integral_m: 0.0,
            integral_t: 0.0,
        }
    }

    fn momentum_pairing(&self, faces: &FaceDensity, vel: &VectorField) -> f64 {
        let g = self.grid;
        let nx = g.nx;
        let phi = &self.test.phi;
        let mut s = 0.0;
        for j in 0..g.ny {
            for i in 0..nx {
                let k = j * nx + i;
                s += g.u_weight(j) * faces.u[k] * vel.u[k] * phi.u[k];
            }
        }
        for j in 1..g.ny {
            for i in 0..nx {
                let k = j * nx + i;
                s += g.v_weight(j) * faces.v[k] * vel.v[k] * phi.v[k];
            }
        }
        s
    }

    /// `int rho (u (x) u) : grad Phi` from cell-centered interpolants.
    fn convective(&self, rho: &ScalarField, vel: &VectorField) -> f64 {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let phi = &self.test.phi;
        let yc = &g.y_centers;
        let ly = g.domain.length_y;
        let mut s = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let ip = g.ip(i);
                let uc = 0.5 * (vel.u_at(i, j) + vel.u_at(ip, j));
                let vc = 0.5 * (vel.v_at(i, j) + vel.v_at(i, j + 1));
                let dxpu = (phi.u_at(ip, j) - phi.u_at(i, j)) / g.x_spacing;
                let dypv = (phi.v_at(i, j + 1) - phi.v_at(i, j)) / g.dy[j];
                let pu_c = |jj: usize| 0.5 * (phi.u_at(i, jj) + phi.u_at(ip, jj));
                let (ylo, flo) = if j == 0 {
                    (0.0, 0.5 * (phi.trace.bottom[i] + phi.trace.bottom[ip]))
                } else {
                    (yc[j - 1], pu_c(j - 1))
                };
                let (yhi, fhi) = if j + 1 == ny {
                    (ly, 0.5 * (phi.trace.top[i] + phi.trace.top[ip]))
                } else {
                    (yc[j + 1], pu_c(j + 1))
                };
                let dypu = (fhi - flo) / (yhi - ylo);
                let pv_c = |ii: usize| 0.5 * (phi.v_at(ii, j) + phi.v_at(ii, j + 1));
                let dxpv = (pv_c(ip) - pv_c(g.im(i))) / (2.0 * g.x_spacing);
                let local = uc * uc * dxpu + uc * vc * (dypu + dxpv) + vc * vc * dypv;
                s += g.cell_areas[j * nx + i] * rho.at(i, j) * local;
            }
        }
        s
    }

    pub fn push(&mut self, state: &FlowState) {
        let g = self.grid;
        let t = state.time;
        let faces = FaceDensity::new(g, &state.rho);
        let (chi, chi_dot) = ((self.test.chi)(t), (self.test.chi_dot)(t));
        let pairing = self.momentum_pairing(&faces, &state.vel);
        let viscous = g.integrate(&g.grad_density_pair(&state.vel, &self.test.phi), None);
        let rate_m = chi_dot * pairing + chi * (self.convective(&state.rho, &state.vel) - state.viscosity * viscous);

        let mass_theta = g.inner_scalar(&state.rho, &self.test.theta);
        let mut flux = VectorField::zeros(g);
        for k in 0..flux.u.len() {
            flux.u[k] = faces.u[k] * state.vel.u[k];
        }
        for k in 0..flux.v.len() {
            flux.v[k] = faces.v[k] * state.vel.v[k];
        }
        let rate_t = g.inner_vector(&flux, &self.theta_grad);

        let boundary_m = chi * pairing;
        if let Some(prev) = &self.last {
            let h = t - prev.time;
            self.integral_m += 0.5 * h * (prev.rate_m + rate_m);
            self.integral_t += 0.5 * h * (prev.rate_t + rate_t);
        }
        if self.first.is_none() {
            self.first = Some((boundary_m, mass_theta));
        }
        self.last = Some(Sample {
            time: t,
            boundary_m,
            mass_theta,
            rate_m,
            rate_t,
        });
    }

    /// `(momentum, transport)` residuals: boundary terms minus time integrals.
    pub fn finish(&self) -> (f64, f64) {
        match (&self.first, &self.last) {
            (Some((bm0, mt0)), Some(last)) => (
                last.boundary_m - bm0 - self.integral_m,
                last.mass_theta - mt0 - self.integral_t,
            ),
            _ => (0.0, 0.0),
        }
    }
}

struct Sample {
    time: f64,
    boundary_m: f64,
    mass_theta: f64,
    rate_m: f64,
    rate_t: f64,
}

/// Weak residuals of a stored trajectory.
pub fn weak_residuals(grid: &Grid, trajectory: &[FlowState], test: &WeakTest) -> (f64, f64) {
    let mut acc = WeakResidualAccumulator::new(grid, test);
    for s in trajectory {
        acc.push(s);
    }
    acc.finish()
}
