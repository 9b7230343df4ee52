//! Closed-form smooth solutions of the variable-density incompressible Euler
//! system in the channel.
//!
//! Every entry is a steady parallel shear `u = (U(y), 0)` over a layered
//! density `rho(y)` with constant pressure: the time derivative, the
//! convective term and the pressure gradient all vanish identically, and the
//! slip condition `v = 0` holds on the walls. The stream function
//! `psi(y) = int_0^y U` vanishes on both walls because profiles carry zero net
//! flux.

use crate::geometry::{Domain, Grid};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("profile has nonzero net flux (mode {0}); the stream function would not vanish on both walls")]
    NetFlux(u32),
    #[error("mode must be >= 1")]
    BadMode,
    #[error("density contrast must lie in [0, 1), got {0}")]
    BadContrast(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShearProfile {
    /// `U = A sin(k pi y / L_y)`; vanishes on the walls.
    Sine,
    /// `U = A cos(k pi y / L_y)`; nonzero wall slip velocity.
    Cosine,
}

/// Scenario description as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// `steady_shear`, `cosine_shear` or `rest`.
    pub name: String,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_mode")]
    pub mode: u32,
    #[serde(default)]
    pub rho_contrast: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_mode() -> u32 {
    2
}

impl ScenarioSpec {
    pub fn new(name: &str, amplitude: f64, mode: u32, rho_contrast: f64) -> Self {
        Self {
            name: name.to_string(),
            amplitude,
            mode,
            rho_contrast,
        }
    }

    pub fn build(&self, domain: Domain) -> Result<EulerSolution, CatalogError> {
        match self.name.as_str() {
            "steady_shear" => EulerSolution::steady_shear(domain, self.amplitude, self.mode, self.rho_contrast),
            "cosine_shear" => EulerSolution::cosine_shear(domain, self.amplitude, self.mode, self.rho_contrast),
            "rest" => Ok(EulerSolution::rest(domain)),
            other => Err(CatalogError::UnknownEntry(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerSolution {
    pub name: String,
    pub domain: Domain,
    pub amplitude: f64,
    pub mode: u32,
    pub profile: ShearProfile,
    pub rho_contrast: f64,
    /// Amplitude of an added `sin(2 pi x / L_x)` pressure; zero for genuine
    /// solutions, nonzero only to exercise the residual checks.
    pub pressure_defect: f64,
}

impl EulerSolution {
    pub fn steady_shear(domain: Domain, amplitude: f64, mode: u32, rho_contrast: f64) -> Result<Self, CatalogError> {
        if mode == 0 {
            return Err(CatalogError::BadMode);
        }
        if mode % 2 == 1 && amplitude != 0.0 {
            return Err(CatalogError::NetFlux(mode));
        }
        Self::build(
            "steady_shear",
            domain,
            amplitude,
            mode,
            ShearProfile::Sine,
            rho_contrast,
        )
    }

    pub fn cosine_shear(domain: Domain, amplitude: f64, mode: u32, rho_contrast: f64) -> Result<Self, CatalogError> {
        if mode == 0 {
            return Err(CatalogError::BadMode);
        }
        Self::build(
            "cosine_shear",
            domain,
            amplitude,
            mode,
            ShearProfile::Cosine,
            rho_contrast,
        )
    }

    pub fn rest(domain: Domain) -> Self {
        Self {
            name: "rest".into(),
            domain,
            amplitude: 0.0,
            mode: 2,
            profile: ShearProfile::Sine,
            rho_contrast: 0.0,
            pressure_defect: 0.0,
        }
    }

    fn build(
        name: &str,
        domain: Domain,
        amplitude: f64,
        mode: u32,
        profile: ShearProfile,
        rho_contrast: f64,
    ) -> Result<Self, CatalogError> {
        if !(0.0..1.0).contains(&rho_contrast) {
            return Err(CatalogError::BadContrast(rho_contrast));
        }
        Ok(Self {
            name: name.into(),
            domain,
            amplitude,
            mode,
            profile,
            rho_contrast,
            pressure_defect: 0.0,
        })
    }

    pub fn with_pressure_defect(mut self, amplitude: f64) -> Self {
        self.pressure_defect = amplitude;
        self
    }

    pub fn is_steady(&self) -> bool {
        true
    }

    pub fn is_homogeneous(&self) -> bool {
        self.rho_contrast == 0.0
    }

    fn wavenumber(&self) -> f64 {
        self.mode as f64 * PI / self.domain.length_y
    }

    /// Streamwise profile `U(y)` and its derivatives `U'`, `U''`.
    fn profile(&self, y: f64) -> (f64, f64, f64) {
        let k = self.wavenumber();
        let a = self.amplitude;
        let (s, c) = (k * y).sin_cos();
        match self.profile {
            ShearProfile::Sine => (a * s, a * k * c, -a * k * k * s),
            ShearProfile::Cosine => (a * c, -a * k * s, -a * k * k * c),
        }
    }

    pub fn velocity(&self, _t: f64, _x: f64, y: f64) -> [f64; 2] {
        [self.profile(y).0, 0.0]
    }

    /// `grad[i][j] = d_j u_i`.
    pub fn velocity_gradient(&self, _t: f64, _x: f64, y: f64) -> [[f64; 2]; 2] {
        [[0.0, self.profile(y).1], [0.0, 0.0]]
    }

    pub fn velocity_dt(&self, _t: f64, _x: f64, _y: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    pub fn density(&self, _t: f64, _x: f64, y: f64) -> f64 {
        1.0 + self.rho_contrast * (PI * y / self.domain.length_y).cos()
    }

    pub fn density_gradient(&self, _t: f64, _x: f64, y: f64) -> [f64; 2] {
        let k = PI / self.domain.length_y;
        [0.0, -self.rho_contrast * k * (k * y).sin()]
    }

    pub fn density_dt(&self, _t: f64, _x: f64, _y: f64) -> f64 {
        0.0
    }

    pub fn pressure(&self, _t: f64, x: f64, _y: f64) -> f64 {
        let lx = self.domain.length_x;
        self.pressure_defect * lx / TAU * (TAU * x / lx).sin()
    }

    pub fn pressure_gradient(&self, _t: f64, x: f64, _y: f64) -> [f64; 2] {
        let lx = self.domain.length_x;
        [self.pressure_defect * (TAU * x / lx).cos(), 0.0]
    }

    /// Stream function with `u = d_y psi`, `v = -d_x psi`.
    pub fn stream(&self, _t: f64, _x: f64, y: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let k = self.wavenumber();
        match self.profile {
            ShearProfile::Sine => self.amplitude / k * (1.0 - (k * y).cos()),
            ShearProfile::Cosine => self.amplitude / k * (k * y).sin(),
        }
    }

    /// Pointwise residuals of momentum (vector), transport and divergence.
    pub fn pointwise_residuals(&self, t: f64, x: f64, y: f64) -> ([f64; 2], f64, f64) {
        let rho = self.density(t, x, y);
        let u = self.velocity(t, x, y);
        let du = self.velocity_gradient(t, x, y);
        let dt = self.velocity_dt(t, x, y);
        let gp = self.pressure_gradient(t, x, y);
        let mut m = [0.0; 2];
        for i in 0..2 {
            m[i] = rho * (dt[i] + u[0] * du[i][0] + u[1] * du[i][1]) + gp[i];
        }
        let gr = self.density_gradient(t, x, y);
        let tr = self.density_dt(t, x, y) + u[0] * gr[0] + u[1] * gr[1];
        (m, tr, du[0][0] + du[1][1])
    }

    /// Discrete L2 norms (cell-center sampling) of the momentum, transport and
    /// divergence residuals.
    pub fn residual_norms(&self, grid: &Grid, t: f64) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (m, tr, dv) = self.pointwise_residuals(t, grid.x_center(i), grid.y_centers[j]);
                let w = grid.cell_areas[grid.idx(i, j)];
                acc[0] += w * (m[0] * m[0] + m[1] * m[1]);
                acc[1] += w * tr * tr;
                acc[2] += w * dv * dv;
            }
        }
        acc.map(f64::sqrt)
    }

    /// `int rho |u|^2` by cell-center quadrature.
    pub fn energy(&self, grid: &Grid, t: f64) -> f64 {
        let mut e = 0.0;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = (grid.x_center(i), grid.y_centers[j]);
                let u = self.velocity(t, x, y);
                e += grid.cell_areas[grid.idx(i, j)] * self.density(t, x, y) * (u[0] * u[0] + u[1] * u[1]);
            }
        }
        e
    }

    /// Largest Frobenius norm of `grad u` on the closed channel.
    pub fn max_velocity_gradient(&self) -> f64 {
        (self.amplitude * self.wavenumber()).abs()
    }

    pub fn max_convective_acceleration(&self) -> f64 {
        0.0
    }

    pub fn max_velocity_dt(&self) -> f64 {
        0.0
    }

    pub fn max_density_gradient(&self) -> f64 {
        self.rho_contrast * PI / self.domain.length_y
    }

    pub fn min_density(&self) -> f64 {
        1.0 - self.rho_contrast
    }
}
