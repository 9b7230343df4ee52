//! Variable-coefficient pressure Poisson problem `div((1/rho) grad p) = rhs`
//! with zero normal flux on the walls, solved by Jacobi-preconditioned
//! conjugate gradients. The constant nullspace is fixed by zero mean.

use super::SolverError;
use crate::fields::ScalarField;
use crate::geometry::Grid;

/// Face densities of a cell field: x-faces average left/right neighbours,
/// y-faces average the rows below/above (wall rows copy the adjacent cell).
#[derive(Debug, Clone)]
pub struct FaceDensity {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FaceDensity {
    pub fn new(grid: &Grid, rho: &ScalarField) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut u = vec![0.0; nx * ny];
        let mut v = vec![0.0; nx * (ny + 1)];
        for j in 0..ny {
            for i in 0..nx {
                u[j * nx + i] = 0.5 * (rho.at(grid.im(i), j) + rho.at(i, j));
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                v[j * nx + i] = if j == 0 {
                    rho.at(i, 0)
                } else if j == ny {
                    rho.at(i, ny - 1)
                } else {
                    0.5 * (rho.at(i, j - 1) + rho.at(i, j))
                };
            }
        }
        Self { u, v }
    }
}

/// Applies `div((1/rho) grad p)`.
pub fn apply_operator(grid: &Grid, faces: &FaceDensity, p: &[f64], out: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let dx2 = grid.x_spacing * grid.x_spacing;
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let (ip, im) = (grid.ip(i), grid.im(i));
            let east = (p[j * nx + ip] - p[k]) / faces.u[j * nx + ip];
            let west = (p[k] - p[j * nx + im]) / faces.u[k];
            let mut acc = (east - west) / dx2;
            let mut flux = 0.0;
            if j + 1 < ny {
                flux += (p[k + nx] - p[k]) / (faces.v[(j + 1) * nx + i] * grid.dual_dy(j + 1));
            }
            if j > 0 {
                flux -= (p[k] - p[k - nx]) / (faces.v[j * nx + i] * grid.dual_dy(j));
            }
            acc += flux / grid.dy[j];
            out[k] = acc;
        }
    }
}

fn diagonal(grid: &Grid, faces: &FaceDensity) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let dx2 = grid.x_spacing * grid.x_spacing;
    let mut d = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let mut s = (1.0 / faces.u[j * nx + grid.ip(i)] + 1.0 / faces.u[k]) / dx2;
            if j + 1 < ny {
                s += 1.0 / (faces.v[(j + 1) * nx + i] * grid.dual_dy(j + 1) * grid.dy[j]);
            }
            if j > 0 {
                s += 1.0 / (faces.v[j * nx + i] * grid.dual_dy(j) * grid.dy[j]);
            }
            d[k] = s * grid.cell_areas[k];
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Relative residual `||A(rhs - L p)|| / ||A rhs||` with `A` the cell areas.
pub fn relative_residual(grid: &Grid, faces: &FaceDensity, p: &[f64], rhs: &[f64]) -> f64 {
    let mut lp = vec![0.0; p.len()];
    apply_operator(grid, faces, p, &mut lp);
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..p.len() {
        let a = grid.cell_areas[k];
        num += (a * (rhs[k] - lp[k])).powi(2);
        den += (a * rhs[k]).powi(2);
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

pub fn solve_variable_poisson(
    grid: &Grid,
    rho: &ScalarField,
    rhs: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<(ScalarField, PoissonReport), SolverError> {
    let faces = FaceDensity::new(grid, rho);
    solve_with_faces(grid, &faces, &rhs.values, tol, max_iter)
}

pub fn solve_with_faces(
    grid: &Grid,
    faces: &FaceDensity,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(ScalarField, PoissonReport), SolverError> {
    let n = grid.n_cells();
    let area = &grid.cell_areas;
    let total: f64 = rhs.iter().zip(area).map(|(r, a)| r * a).sum();
    let scale: f64 = rhs.iter().zip(area).map(|(r, a)| (r * a).abs()).sum();
    if total.abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) && total.abs() > 1e-10 {
        return Err(SolverError::IncompatibleRhs { integral: total });
    }
    let domain_area: f64 = area.iter().sum();
    let mean = total / domain_area;
    // b = -A (rhs - mean), so the system matrix -A L is positive semidefinite
    let b: Vec<f64> = rhs.iter().zip(area).map(|(r, a)| -(r - mean) * a).collect();
    let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut p = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            ScalarField::zeros(grid),
            PoissonReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let diag = diagonal(grid, faces);
    let apply = |x: &[f64], out: &mut [f64]| {
        apply_operator(grid, faces, x, out);
        for k in 0..n {
            out[k] *= -area[k];
        }
    };
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut d = z.clone();
    let mut q = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut rel = 1.0;
    for it in 1..=max_iter {
        apply(&d, &mut q);
        let dq: f64 = d.iter().zip(&q).map(|(a, b)| a * b).sum();
        if dq <= 0.0 {
            break;
        }
        let alpha = rz / dq;
        for k in 0..n {
            p[k] += alpha * d[k];
            r[k] -= alpha * q[k];
        }
        rel = r.iter().map(|x| x * x).sum::<f64>().sqrt() / bnorm;
        if rel <= tol {
            let mut out = ScalarField {
                values: p,
                ..ScalarField::zeros(grid)
            };
            remove_mean(grid, &mut out);
            return Ok((
                out,
                PoissonReport {
                    iterations: it,
                    relative_residual: rel,
                },
            ));
        }
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            d[k] = z[k] + beta * d[k];
        }
    }
    Err(SolverError::PoissonNotConverged {
        iterations: max_iter,
        residual: rel,
    })
}

pub fn remove_mean(grid: &Grid, p: &mut ScalarField) {
    let total: f64 = p.values.iter().zip(&grid.cell_areas).map(|(x, a)| x * a).sum();
    let mean = total / grid.total_area();
    p.values.iter_mut().for_each(|x| *x -= mean);
}
