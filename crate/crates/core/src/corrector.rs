//! Boundary-layer corrector `Phi_nu = curl(eta(dist/nu) psi)` that carries
//! the Euler wall velocity inside the strip of width `nu`, and the check of
//! its scaling bounds.

use crate::diagnostics::{fit_rate, FitError, RateFit};
use crate::euler::EulerSolution;
use crate::fields::{NodeField, VectorField};
use crate::geometry::{GeometryError, Grid, LayerMask};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorrectorError {
    #[error("nu = {nu} is not resolved: need nu > 4 x wall cell height {wall_cell:.3e}; refine the grid or raise the stretch")]
    Unresolved { nu: f64, wall_cell: f64 },
    #[error("stream function does not vanish on the walls ({0:.3e})")]
    WallStream(f64),
    #[error("norm '{0}' is not positive for every nu; the entry is degenerate")]
    Degenerate(&'static str),
    #[error("need at least 4 viscosities and one grid per viscosity (or a single shared grid)")]
    BadFamily,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Cutoff `eta` on `[0, inf)` with its first two derivatives.
#[derive(Debug, Clone, Copy)]
pub struct CutoffProfile {
    pub eta: fn(f64) -> f64,
    pub d_eta: fn(f64) -> f64,
    pub d2_eta: fn(f64) -> f64,
}

fn bump(s: f64) -> f64 {
    let s = s.abs();
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

fn bump_d1(s: f64) -> f64 {
    if s >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - s * s;
    bump(s) * (-2.0 * s / (q * q))
}

fn bump_d2(s: f64) -> f64 {
    if s >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - s * s;
    let g1 = -2.0 * s / (q * q);
    let g2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
    bump(s) * (g2 + g1 * g1)
}

/// `eta(s) = exp(1 - 1/(1 - s^2))` on `[0, 1)`, zero beyond.
pub fn default_cutoff() -> CutoffProfile {
    CutoffProfile {
        eta: bump,
        d_eta: bump_d1,
        d2_eta: bump_d2,
    }
}

#[derive(Debug, Clone)]
pub struct CorrectorField {
    pub nu: f64,
    pub field: VectorField,
    pub support_mask: LayerMask,
    /// `max_cells dist^2 |grad Phi|`.
    pub dist2_gradient_linf: f64,
}

/// Builds `Phi_nu` at time `t` on the grid nodes.
///
/// The declared wall trace is the Euler wall velocity: `eta(0) = 1` and the
/// stream function vanishes there, so the normal derivative of `eta psi` at
/// the wall is exactly `U(wall)`.
pub fn build_corrector(
    sol: &EulerSolution,
    grid: &Grid,
    nu: f64,
    t: f64,
    cutoff: &CutoffProfile,
) -> Result<CorrectorField, CorrectorError> {
    let wall_cell = grid.wall_cell_height();
    if !(nu > 4.0 * wall_cell) {
        return Err(CorrectorError::Unresolved { nu, wall_cell });
    }
    let ly = grid.domain.length_y;
    let stray = (0..grid.nx)
        .map(|i| {
            let x = grid.x_face(i);
            sol.stream(t, x, 0.0).abs().max(sol.stream(t, x, ly).abs())
        })
        .fold(0.0, f64::max);
    let scale = sol.amplitude.abs() * ly;
    if stray > 1e-12 * scale.max(1.0) {
        return Err(CorrectorError::WallStream(stray));
    }
    let psi = NodeField::from_fn(grid, |x, y| {
        let d = grid.domain.wall_distance(y);
        let e = (cutoff.eta)(d / nu);
        if e == 0.0 {
            0.0
        } else {
            e * sol.stream(t, x, y)
        }
    });
    let mut field = grid.curl_of_scalar(&psi);
    for i in 0..grid.nx {
        let x = grid.x_face(i);
        field.trace.bottom[i] = sol.velocity(t, x, 0.0)[0];
        field.trace.top[i] = sol.velocity(t, x, ly)[0];
    }
    let support_mask = grid.layer_mask(nu)?;
    let density = grid.gradient_tensor_norms(&field);
    let mut dist2_gradient_linf: f64 = 0.0;
    for j in 0..grid.ny {
        let d = grid.domain.wall_distance(grid.y_centers[j]);
        for i in 0..grid.nx {
            dist2_gradient_linf = dist2_gradient_linf.max(d * d * density.at(i, j).sqrt());
        }
    }
    Ok(CorrectorField {
        nu,
        field,
        support_mask,
        dist2_gradient_linf,
    })
}

/// The six measured norms of one corrector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorNorms {
    pub nu: f64,
    pub linf: f64,
    pub grad_linf: f64,
    pub l2: f64,
    pub dt_l2: f64,
    pub grad_l2: f64,
    pub dist2_grad_linf: f64,
}

impl CorrectorNorms {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.linf,
            self.grad_linf,
            self.l2,
            self.dt_l2,
            self.grad_l2,
            self.dist2_grad_linf,
        ]
    }
}

pub const BOUND_NAMES: [&str; 6] = ["linf", "grad_linf", "l2", "dt_l2", "grad_l2", "dist2_grad_linf"];
/// Expected exponents of the six norms in `nu`.
pub const EXPECTED_EXPONENTS: [f64; 6] = [0.0, -1.0, 0.5, 0.0, -0.5, 1.0];

/// Fitted slope and the largest prefactor `norm / nu^expected`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundFit {
    pub fit: RateFit,
    pub prefactor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorBounds {
    pub norms: Vec<CorrectorNorms>,
    /// One entry per norm in `BOUND_NAMES` order; `None` for a time
    /// derivative that vanishes identically.
    pub fits: [Option<BoundFit>; 6],
}

pub fn corrector_norms(
    sol: &EulerSolution,
    grid: &Grid,
    nu: f64,
    t: f64,
    cutoff: &CutoffProfile,
) -> Result<CorrectorNorms, CorrectorError> {
    let c = build_corrector(sol, grid, nu, t, cutoff)?;
    let density = grid.gradient_tensor_norms(&c.field);
    let grad_linf = density.values.iter().fold(0.0f64, |m, &x| m.max(x)).sqrt();
    let grad_l2 = grid.integrate(&density, None).sqrt();
    let dt_l2 = if sol.is_steady() {
        0.0
    } else {
        let h = nu / 10.0;
        let ahead = build_corrector(sol, grid, nu, t + h, cutoff)?;
        let behind = build_corrector(sol, grid, nu, (t - h).max(0.0), cutoff)?;
        let span = t + h - (t - h).max(0.0);
        grid.l2_norm_vector(&ahead.field.sub(&behind.field), None) / span
    };
    Ok(CorrectorNorms {
        nu,
        linf: c.field.linf_norm(),
        grad_linf,
        l2: grid.l2_norm_vector(&c.field, None),
        dt_l2,
        grad_l2,
        dist2_grad_linf: c.dist2_gradient_linf,
    })
}

/// Measures the norms for each `nu` and fits their exponents.
///
/// `grids` holds either one grid per viscosity or a single shared grid.
pub fn verify_corrector_bounds(
    sol: &EulerSolution,
    grids: &[Grid],
    nus: &[f64],
    cutoff: &CutoffProfile,
) -> Result<CorrectorBounds, CorrectorError> {
    if nus.len() < 4 || !(grids.len() == 1 || grids.len() == nus.len()) {
        return Err(CorrectorError::BadFamily);
    }
    let norms = nus
        .iter()
        .enumerate()
        .map(|(k, &nu)| corrector_norms(sol, &grids[k.min(grids.len() - 1)], nu, 0.0, cutoff))
        .collect::<Result<Vec<_>, _>>()?;
    let mut fits = [None; 6];
    for (b, fit) in fits.iter_mut().enumerate() {
        let values: Vec<(f64, f64)> = norms.iter().map(|n| (n.nu, n.as_array()[b])).collect();
        if b == 3 && values.iter().all(|v| v.1 == 0.0) {
            continue;
        }
        if values.iter().any(|v| !(v.1 > 0.0)) {
            return Err(CorrectorError::Degenerate(BOUND_NAMES[b]));
        }
        let prefactor = values
            .iter()
            .map(|&(nu, v)| v / nu.powf(EXPECTED_EXPONENTS[b]))
            .fold(0.0, f64::max);
        *fit = Some(BoundFit {
            fit: fit_rate(&values)?,
            prefactor,
        });
    }
    Ok(CorrectorBounds { norms, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn cutoff_examples() {
        let c = default_cutoff();
        assert_eq!((c.eta)(0.0), 1.0);
        assert_eq!((c.eta)(1.5), 0.0);
        assert_eq!((c.eta)(1.0), 0.0);
        assert!(((c.eta)(0.5) - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
        assert_eq!((c.d_eta)(0.0), 0.0);
        assert_eq!((c.d2_eta)(2.0), 0.0);
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        let c = default_cutoff();
        let h = 1e-5;
        for k in 1..20 {
            let s = k as f64 * 0.045;
            let fd1 = ((c.eta)(s + h) - (c.eta)(s - h)) / (2.0 * h);
            let fd2 = ((c.d_eta)(s + h) - (c.d_eta)(s - h)) / (2.0 * h);
            assert!((fd1 - (c.d_eta)(s)).abs() < 1e-6, "{s}");
            assert!((fd2 - (c.d2_eta)(s)).abs() < 1e-5, "{s}");
            assert!((c.d_eta)(s) <= 0.0);
        }
    }

    #[test]
    fn rest_gives_zero_and_degenerate_fit() {
        let g = Grid::new(Domain::unit(), 4, 64, 1.0).unwrap();
        let sol = EulerSolution::rest(Domain::unit());
        let c = build_corrector(&sol, &g, 0.2, 0.0, &default_cutoff()).unwrap();
        assert_eq!(c.field.linf_norm(), 0.0);
        let r = verify_corrector_bounds(&sol, &[g], &[0.4, 0.3, 0.2, 0.1], &default_cutoff());
        assert!(matches!(r, Err(CorrectorError::Degenerate("linf"))));
    }

    #[test]
    fn resolution_guard() {
        let g = Grid::new(Domain::unit(), 4, 16, 0.0).unwrap();
        let sol = EulerSolution::steady_shear(Domain::unit(), 1.0, 2, 0.0).unwrap();
        let e = build_corrector(&sol, &g, 0.2, 0.0, &default_cutoff()).unwrap_err();
        assert!(e.to_string().contains("refine"));
    }

    #[test]
    fn structural_identities() {
        let g = Grid::new(Domain::unit(), 8, 128, 2.0).unwrap();
        for sol in [
            EulerSolution::steady_shear(Domain::unit(), 1.0, 2, 0.3).unwrap(),
            EulerSolution::cosine_shear(Domain::unit(), 1.5, 1, 0.0).unwrap(),
            EulerSolution::cosine_shear(Domain::unit(), 1.0, 3, 0.0).unwrap(),
        ] {
            for nu in [0.2, 0.1, 0.05] {
                let c = build_corrector(&sol, &g, nu, 0.0, &default_cutoff()).unwrap();
                assert!(g.divergence(&c.field).linf_norm() <= 1e-12);
                for j in 0..g.ny {
                    if c.support_mask.weight(j) == 0.0 {
                        for i in 0..g.nx {
                            assert_eq!(c.field.u_at(i, j), 0.0);
                        }
                    }
                }
                let eul = crate::diagnostics::sample_velocity(&g, &sol, 0.0);
                let repaired = eul.sub(&c.field);
                assert!(repaired.trace.max_abs() <= 1e-12);
                assert!(repaired.wall_rows_max() <= 1e-12);
                assert!(g.divergence(&repaired).linf_norm() <= 1e-12);
            }
        }
    }
}
