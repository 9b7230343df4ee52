//! Layer Hardy and Poincaré ratios for zero-trace test functions, and their
//! uniformity in the layer thickness.

use crate::diagnostics::{fit_rate, FitError, RateFit};
use crate::fields::{FieldError, LayerIntegrals, ScalarField};
use crate::geometry::{GeometryError, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InequalityError {
    #[error("layer eps = {eps} is not resolved (wall cell {wall_cell:.3e}, need eps > 4 cells)")]
    Unresolved { eps: f64, wall_cell: f64 },
    #[error("gradient vanishes in the layer; ratio undefined")]
    Degenerate,
    #[error("need at least 4 layer thicknesses")]
    TooFewLayers,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Parameterised zero-trace test functions.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunctionFamily {
    /// `dist^alpha`.
    DistancePower(Vec<f64>),
    /// `sin(k pi y / Ly) (1 + cos(2 pi x / Lx) / 2)`.
    Sine(Vec<u32>),
    /// Seeded sums of Gaussian bumps times `y (Ly - y)`.
    RandomBumps { seed: u64, count: usize },
}

impl TestFunctionFamily {
    pub fn distance_power() -> Self {
        Self::DistancePower(vec![1.0, 1.5, 2.0])
    }

    pub fn sine() -> Self {
        Self::Sine(vec![1, 2, 3])
    }

    pub fn random_bumps(seed: u64) -> Self {
        Self::RandomBumps { seed, count: 6 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::DistancePower(_) => "distance_power",
            Self::Sine(_) => "sine",
            Self::RandomBumps { .. } => "random_bumps",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::DistancePower(a) => a.len(),
            Self::Sine(k) => k.len(),
            Self::RandomBumps { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn member_label(&self, m: usize) -> String {
        match self {
            Self::DistancePower(a) => format!("alpha={}", a[m]),
            Self::Sine(k) => format!("k={}", k[m]),
            Self::RandomBumps { seed, .. } => format!("seed={seed}#{m}"),
        }
    }

    /// Member `m` sampled at cell centers, declared zero on both walls.
    pub fn generate(&self, grid: &Grid, m: usize) -> ScalarField {
        let lx = grid.domain.length_x;
        let ly = grid.domain.length_y;
        let f = match self {
            Self::DistancePower(a) => {
                let alpha = a[m];
                ScalarField::from_fn(grid, |_, y| grid.domain.wall_distance(y).powf(alpha))
            }
            Self::Sine(k) => {
                let k = k[m] as f64;
                ScalarField::from_fn(grid, |x, y| {
                    (k * PI * y / ly).sin() * (1.0 + 0.5 * (TAU * x / lx).cos())
                })
            }
            Self::RandomBumps { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(m as u64));
                let bumps: Vec<[f64; 5]> = (0..3)
                    .map(|_| {
                        [
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(0.0..ly),
                            rng.gen_range(0.05..0.5) * ly,
                            rng.gen_range(-0.5..0.5),
                            rng.gen_range(0.0..TAU),
                        ]
                    })
                    .collect();
                ScalarField::from_fn(grid, move |x, y| {
                    let s: f64 = bumps
                        .iter()
                        .map(|[a, c, w, b, ph]| {
                            a * (-((y - c) / w).powi(2)).exp() * (1.0 + b * (TAU * x / lx + ph).cos())
                        })
                        .sum();
                    // offset keeps the sum away from zero near the walls
                    y * (ly - y) / (ly * ly) * (1.5 + s)
                })
            }
        };
        f.with_zero_walls()
    }
}

fn layer_integrals(f: &ScalarField, grid: &Grid, eps: f64) -> Result<LayerIntegrals, InequalityError> {
    let wall_cell = grid.wall_cell_height();
    if !(eps > 4.0 * wall_cell) {
        return Err(InequalityError::Unresolved { eps, wall_cell });
    }
    let mask = grid.layer_mask(eps)?;
    let li = LayerIntegrals::compute(grid, f, &mask)?;
    if !(li.grad2 > 0.0) {
        return Err(InequalityError::Degenerate);
    }
    Ok(li)
}

/// `int_layer f^2 / dist^2` over `int_layer |grad f|^2`.
pub fn hardy_ratio(f: &ScalarField, grid: &Grid, eps: f64) -> Result<f64, InequalityError> {
    let li = layer_integrals(f, grid, eps)?;
    Ok(li.f2_over_d2 / li.grad2)
}

/// `||f||_{L2(layer)} / (eps ||grad f||_{L2(layer)})`.
pub fn poincare_ratio(f: &ScalarField, grid: &Grid, eps: f64) -> Result<f64, InequalityError> {
    let li = layer_integrals(f, grid, eps)?;
    Ok(li.f2.sqrt() / (eps * li.grad2.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ratio {
    Hardy,
    Poincare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSample {
    pub member: usize,
    pub eps: f64,
    pub hardy: f64,
    pub poincare: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub samples: Vec<RatioSample>,
    /// Per-eps maximum of the selected ratio over the family.
    pub max_by_eps: Vec<(f64, f64)>,
    pub supremum: f64,
    pub fit: RateFit,
}

/// Evaluates both ratios for every member and `eps`, then fits the per-eps
/// maximum of `which` against `eps`.
pub fn constant_stability(
    family: &TestFunctionFamily,
    grid: &Grid,
    eps_list: &[f64],
    which: Ratio,
) -> Result<StabilityReport, InequalityError> {
    if eps_list.len() < 4 {
        return Err(InequalityError::TooFewLayers);
    }
    let fields: Vec<ScalarField> = (0..family.len()).map(|m| family.generate(grid, m)).collect();
    let mut samples = Vec::new();
    let mut max_by_eps = Vec::new();
    for &eps in eps_list {
        let mut best: f64 = 0.0;
        for (m, f) in fields.iter().enumerate() {
            let li = layer_integrals(f, grid, eps)?;
            let hardy = li.f2_over_d2 / li.grad2;
            let poincare = li.f2.sqrt() / (eps * li.grad2.sqrt());
            best = best.max(match which {
                Ratio::Hardy => hardy,
                Ratio::Poincare => poincare,
            });
            samples.push(RatioSample {
                member: m,
                eps,
                hardy,
                poincare,
            });
        }
        max_by_eps.push((eps, best));
    }
    let supremum = max_by_eps.iter().map(|p| p.1).fold(0.0, f64::max);
    let fit = fit_rate(&max_by_eps)?;
    Ok(StabilityReport {
        samples,
        max_by_eps,
        supremum,
        fit,
    })
}

/// Largest Hardy ratio over the distance-power and sine families in a layer
/// of width `eps`.
pub fn measured_hardy_constant(grid: &Grid, eps: f64) -> Result<f64, InequalityError> {
    let mut c: f64 = 0.0;
    for family in [TestFunctionFamily::distance_power(), TestFunctionFamily::sine()] {
        for m in 0..family.len() {
            c = c.max(hardy_ratio(&family.generate(grid, m), grid, eps)?);
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    fn grid() -> Grid {
        Grid::new(Domain::unit(), 8, 128, 2.0).unwrap()
    }

    #[test]
    fn closed_form_ratios() {
        let g = grid();
        let fam = TestFunctionFamily::distance_power();
        let d = fam.generate(&g, 0);
        let d2 = fam.generate(&g, 2);
        for eps in [0.3, 0.1, 0.05] {
            assert!((hardy_ratio(&d, &g, eps).unwrap() - 1.0).abs() < 1e-10);
            assert!((hardy_ratio(&d2, &g, eps).unwrap() - 0.25).abs() < 1e-10);
            assert!((poincare_ratio(&d, &g, eps).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-10);
            assert!((poincare_ratio(&d2, &g, eps).unwrap() - (3.0f64 / 20.0).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn generated_members_vanish_on_walls() {
        let g = grid();
        for fam in [
            TestFunctionFamily::distance_power(),
            TestFunctionFamily::sine(),
            TestFunctionFamily::random_bumps(9),
        ] {
            for m in 0..fam.len() {
                let f = fam.generate(&g, m);
                assert!(f.wall.as_ref().unwrap().is_zero());
                assert!(hardy_ratio(&f, &g, 0.1).unwrap().is_finite());
            }
        }
    }

    #[test]
    fn random_members_are_reproducible() {
        let g = grid();
        let a = TestFunctionFamily::random_bumps(4).generate(&g, 2);
        let b = TestFunctionFamily::random_bumps(4).generate(&g, 2);
        let c = TestFunctionFamily::random_bumps(5).generate(&g, 2);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn guards() {
        let g = grid();
        let d = TestFunctionFamily::distance_power().generate(&g, 0);
        assert!(matches!(
            hardy_ratio(&d, &g, 1e-4),
            Err(InequalityError::Unresolved { .. })
        ));
        let zero = ScalarField::zeros(&g).with_zero_walls();
        assert!(matches!(hardy_ratio(&zero, &g, 0.1), Err(InequalityError::Degenerate)));
        assert!(hardy_ratio(&ScalarField::constant(&g, 1.0), &g, 0.1).is_err());
    }

    #[test]
    fn hardy_constant_bounds() {
        // at least the dist member's exact 1; well under the classical 4
        let c = measured_hardy_constant(&grid(), 0.1).unwrap();
        assert!((1.0 - 1e-10..4.0).contains(&c), "{c}");
    }
}
