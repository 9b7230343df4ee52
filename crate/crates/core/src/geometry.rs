//! Channel domain, wall distance, boundary-layer masks and the wall-clustered
//! staggered grid.
//!
//! The channel is periodic in `x` with no-slip walls at `y = 0` and
//! `y = length_y`. Scalars live at cell centers, the x-velocity on vertical
//! faces and the y-velocity on horizontal faces (marker-and-cell layout).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("domain lengths must be positive, got {length_x} x {length_y}")]
    BadDomain { length_x: f64, length_y: f64 },
    #[error("point ({x}, {y}) lies outside the channel")]
    OutsideDomain { x: f64, y: f64 },
    #[error("grid needs nx >= 4 and ny >= 4, got {nx} x {ny}")]
    TooCoarse { nx: usize, ny: usize },
    #[error("stretch parameter must be finite and >= 0, got {0}")]
    BadStretch(f64),
    #[error("layer thickness must be positive, got {0}")]
    BadThickness(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub length_x: f64,
    pub length_y: f64,
}

impl Domain {
    pub fn new(length_x: f64, length_y: f64) -> Result<Self, GeometryError> {
        if !(length_x > 0.0 && length_y > 0.0 && length_x.is_finite() && length_y.is_finite()) {
            return Err(GeometryError::BadDomain { length_x, length_y });
        }
        Ok(Self { length_x, length_y })
    }

    pub fn unit() -> Self {
        Self {
            length_x: 1.0,
            length_y: 1.0,
        }
    }

    pub fn area(&self) -> f64 {
        self.length_x * self.length_y
    }

    /// Distance to the nearer wall. The periodic direction carries no boundary.
    pub fn distance_to_boundary(&self, x: f64, y: f64) -> Result<f64, GeometryError> {
        if !(x.is_finite() && (0.0..=self.length_y).contains(&y)) {
            return Err(GeometryError::OutsideDomain { x, y });
        }
        Ok(self.wall_distance(y))
    }

    /// Unchecked wall distance for `y` inside `[0, length_y]`.
    #[inline]
    pub fn wall_distance(&self, y: f64) -> f64 {
        y.min(self.length_y - y).max(0.0)
    }
}

/// Staggered grid, uniform in `x` and tanh-clustered towards both walls in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub domain: Domain,
    pub nx: usize,
    pub ny: usize,
    pub stretch: f64,
    /// `ny + 1` wall-normal face positions.
    pub y_faces: Vec<f64>,
    /// `ny` cell-center positions.
    pub y_centers: Vec<f64>,
    /// `ny` cell heights.
    pub dy: Vec<f64>,
    pub x_spacing: f64,
    /// Cell areas, row-major `[j * nx + i]`.
    pub cell_areas: Vec<f64>,
}

/// Clustered face position for the normalized coordinate `s` in `[0, 1]`.
pub fn clustered_coordinate(length_y: f64, stretch: f64, s: f64) -> f64 {
    if stretch == 0.0 {
        return length_y * s;
    }
    0.5 * length_y * (1.0 + (stretch * (2.0 * s - 1.0)).tanh() / stretch.tanh())
}

impl Grid {
    pub fn new(domain: Domain, nx: usize, ny: usize, stretch: f64) -> Result<Self, GeometryError> {
        if nx < 4 || ny < 4 {
            return Err(GeometryError::TooCoarse { nx, ny });
        }
        if !(stretch.is_finite() && stretch >= 0.0) {
            return Err(GeometryError::BadStretch(stretch));
        }
        let mut y_faces: Vec<f64> = (0..=ny)
            .map(|j| clustered_coordinate(domain.length_y, stretch, j as f64 / ny as f64))
            .collect();
        // pin the walls exactly
        y_faces[0] = 0.0;
        y_faces[ny] = domain.length_y;
        let dy: Vec<f64> = y_faces.windows(2).map(|w| w[1] - w[0]).collect();
        let y_centers = y_faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let x_spacing = domain.length_x / nx as f64;
        let mut cell_areas = Vec::with_capacity(nx * ny);
        for h in &dy {
            cell_areas.extend(std::iter::repeat_n(h * x_spacing, nx));
        }
        Ok(Self {
            domain,
            nx,
            ny,
            stretch,
            y_faces,
            y_centers,
            dy,
            x_spacing,
            cell_areas,
        })
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ip(&self, i: usize) -> usize {
        if i + 1 == self.nx {
            0
        } else {
            i + 1
        }
    }

    #[inline]
    pub fn im(&self, i: usize) -> usize {
        if i == 0 {
            self.nx - 1
        } else {
            i - 1
        }
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// x coordinate of vertical face `i` (where x-velocity lives).
    #[inline]
    pub fn x_face(&self, i: usize) -> f64 {
        i as f64 * self.x_spacing
    }

    #[inline]
    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.x_spacing
    }

    /// Distance between the centers adjacent to horizontal face `j`; at the
    /// walls this is the half cell between wall and first center.
    #[inline]
    pub fn dual_dy(&self, j: usize) -> f64 {
        if j == 0 {
            self.y_centers[0]
        } else if j == self.ny {
            self.domain.length_y - self.y_centers[self.ny - 1]
        } else {
            self.y_centers[j] - self.y_centers[j - 1]
        }
    }

    pub fn min_dy(&self) -> f64 {
        self.dy.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn wall_cell_height(&self) -> f64 {
        self.dy[0].min(self.dy[self.ny - 1])
    }

    /// Number of whole cells lying inside the strip of width `thickness`
    /// along the bottom wall (the grid is symmetric).
    pub fn cells_in_strip(&self, thickness: f64) -> usize {
        self.y_faces[1..]
            .iter()
            .take_while(|&&y| y <= thickness * (1.0 + 1e-12))
            .count()
    }

    pub fn total_area(&self) -> f64 {
        self.cell_areas.iter().sum()
    }

    pub fn layer_mask(&self, thickness: f64) -> Result<LayerMask, GeometryError> {
        LayerMask::new(self, thickness)
    }
}

/// Fraction of each cell lying inside `{dist(x, walls) <= thickness}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMask {
    pub thickness: f64,
    /// Per-row weights (the mask is x-independent).
    pub row_weights: Vec<f64>,
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

impl LayerMask {
    pub fn new(grid: &Grid, thickness: f64) -> Result<Self, GeometryError> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(GeometryError::BadThickness(thickness));
        }
        let ly = grid.domain.length_y;
        let row_weights = (0..grid.ny)
            .map(|j| {
                let (y0, y1) = (grid.y_faces[j], grid.y_faces[j + 1]);
                let h = y1 - y0;
                let w = if thickness >= 0.5 * ly {
                    h
                } else {
                    overlap(y0, y1, 0.0, thickness) + overlap(y0, y1, ly - thickness, ly)
                };
                (w / h).clamp(0.0, 1.0)
            })
            .collect();
        Ok(Self { thickness, row_weights })
    }

    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.row_weights[j]
    }

    /// Overlap of row `j` with the layer, as a list of `y` intervals.
    pub fn row_intervals(&self, grid: &Grid, j: usize) -> Vec<(f64, f64)> {
        let ly = grid.domain.length_y;
        let (y0, y1) = (grid.y_faces[j], grid.y_faces[j + 1]);
        if self.thickness >= 0.5 * ly {
            return vec![(y0, y1)];
        }
        let mut out = Vec::with_capacity(2);
        for (b0, b1) in [(0.0, self.thickness), (ly - self.thickness, ly)] {
            let (lo, hi) = (y0.max(b0), y1.min(b1));
            if hi > lo {
                out.push((lo, hi));
            }
        }
        out
    }

    pub fn weighted_area(&self, grid: &Grid) -> f64 {
        self.row_weights
            .iter()
            .zip(&grid.dy)
            .map(|(w, h)| w * h * grid.domain.length_x)
            .sum()
    }

    /// Exact measure of the layer region.
    pub fn exact_area(&self, domain: &Domain) -> f64 {
        (2.0 * self.thickness).min(domain.length_y) * domain.length_x
    }
}
