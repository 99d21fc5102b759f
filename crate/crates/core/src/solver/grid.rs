use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Surface area of the unit sphere in `ℝ^N` (2 for `N = 1`).
pub fn unit_sphere_area(dim_n: usize) -> f64 {
    // σ_N = 2 π^{N/2} / Γ(N/2), with Γ(N/2) by recursion from Γ(1/2) or Γ(1).
    let mut gamma_half = if dim_n.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if dim_n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x + 1e-12 < dim_n as f64 / 2.0 {
        gamma_half *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(dim_n as f64 / 2.0) / gamma_half
}

/// Parameters that regenerate a [`RadialGrid`] deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub radius: f64,
    pub n_cells: usize,
    /// Ratio between consecutive cell widths; 1 is uniform.
    pub stretch: f64,
}

/// Cells `[r_i, r_{i+1})` of the ball `B_R` in radial coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub dim_n: usize,
    pub radius: f64,
    pub stretch: f64,
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    pub volumes: Vec<f64>,
    sphere: f64,
}

impl RadialGrid {
    pub fn from_edges(dim_n: usize, edges: Vec<f64>, stretch: f64) -> Result<Self> {
        if dim_n == 0 {
            return Err(Error::Config("grid dimension must be >= 1".into()));
        }
        if edges.len() < 3 || edges[0] != 0.0 {
            return Err(Error::Config("grid needs at least two cells starting at r = 0".into()));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("grid edges must be strictly increasing".into()));
        }
        let sphere = unit_sphere_area(dim_n);
        let n = dim_n as i32;
        let volumes = edges
            .windows(2)
            .map(|w| sphere * (w[1].powi(n) - w[0].powi(n)) / dim_n as f64)
            .collect();
        let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let radius = *edges.last().expect("non-empty");
        Ok(RadialGrid { dim_n, radius, stretch, edges, centers, volumes, sphere })
    }

    /// Cell widths grow geometrically by `stretch` from the origin outward.
    pub fn stretched(dim_n: usize, radius: f64, n_cells: usize, stretch: f64) -> Result<Self> {
        if !(radius > 0.0) || n_cells < 2 || !(stretch >= 1.0) {
            return Err(Error::Config(format!(
                "invalid grid: radius {radius}, cells {n_cells}, stretch {stretch}"
            )));
        }
        let edges = (0..=n_cells)
            .map(|i| {
                if i == n_cells {
                    radius
                } else if stretch == 1.0 {
                    radius * i as f64 / n_cells as f64
                } else {
                    radius * (stretch.powi(i as i32) - 1.0) / (stretch.powi(n_cells as i32) - 1.0)
                }
            })
            .collect();
        Self::from_edges(dim_n, edges, stretch)
    }

    pub fn uniform(dim_n: usize, radius: f64, n_cells: usize) -> Result<Self> {
        Self::stretched(dim_n, radius, n_cells, 1.0)
    }

    pub fn from_params(dim_n: usize, p: &GridParams) -> Result<Self> {
        Self::stretched(dim_n, p.radius, p.n_cells, p.stretch)
    }

    pub fn params(&self) -> GridParams {
        GridParams { radius: self.radius, n_cells: self.n_cells(), stretch: self.stretch }
    }

    /// Smallest stretch (uniform when possible) such that at least `min_cells` cells lie inside `rho`.
    pub fn refined_for_support(dim_n: usize, radius: f64, n_cells: usize, rho: f64, min_cells: usize) -> Result<Self> {
        let inside = |s: f64| {
            let e = if s == 1.0 {
                radius * min_cells as f64 / n_cells as f64
            } else {
                radius * (s.powi(min_cells as i32) - 1.0) / (s.powi(n_cells as i32) - 1.0)
            };
            e <= rho
        };
        if inside(1.0) {
            return Self::uniform(dim_n, radius, n_cells);
        }
        let (mut lo, mut hi) = (1.0, 1.0 + 50.0 / n_cells as f64);
        if !inside(hi) {
            return Err(Error::Resolution { rho, cells: 0, min_cells });
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Self::stretched(dim_n, radius, n_cells, hi)
    }

    pub fn n_cells(&self) -> usize {
        self.volumes.len()
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere
    }

    /// Area of the sphere of radius `r`.
    pub fn area_at(&self, r: f64) -> f64 {
        self.sphere * r.powi(self.dim_n as i32 - 1)
    }

    /// `|B_r|`.
    pub fn ball_volume(&self, r: f64) -> f64 {
        self.sphere * r.powi(self.dim_n as i32) / self.dim_n as f64
    }

    /// Number of cells lying entirely inside `|x| ≤ rho`.
    pub fn cells_within(&self, rho: f64) -> usize {
        self.edges[1..].iter().take_while(|&&e| e <= rho * (1.0 + 1e-12)).count()
    }

    /// `Σ u_i |cell_i|`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.volumes).map(|(u, v)| u * v).sum()
    }

    /// Piecewise-linear reconstruction through the cell centers, zero at `r = R`.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let c = &self.centers;
        if r <= c[0] {
            return values[0];
        }
        if r >= self.radius {
            return 0.0;
        }
        let last = c.len() - 1;
        if r >= c[last] {
            let w = (r - c[last]) / (self.radius - c[last]);
            return values[last] * (1.0 - w);
        }
        let i = c.partition_point(|&x| x <= r) - 1;
        let w = (r - c[i]) / (c[i + 1] - c[i]);
        values[i] * (1.0 - w) + values[i + 1] * w
    }
}
