//! Rectangular lattices, sampled piecewise-harmonic fields, and boolean
//! region masks over them.

use num_complex::Complex64;

/// Uniform rectangular lattice: nodes origin + (i h, j h) for
/// 0 <= i < nx, 0 <= j < ny.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: Complex64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(origin: Complex64, h: f64, nx: usize, ny: usize) -> Self {
        assert!(nx >= 2 && ny >= 2 && h > 0.0);
        Grid { origin, h, nx, ny }
    }

    /// Square n-by-n grid centered on a point with the given half-width.
    pub fn centered(center: Complex64, half_width: f64, n: usize) -> Self {
        let h = 2.0 * half_width / (n - 1) as f64;
        Grid::new(center - Complex64::new(half_width, half_width), h, n, n)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        self.origin + Complex64::new(i as f64 * self.h, j as f64 * self.h)
    }

    pub fn x_extent(&self) -> f64 {
        (self.nx - 1) as f64 * self.h
    }

    pub fn y_extent(&self) -> f64 {
        (self.ny - 1) as f64 * self.h
    }

    /// Fractional cell coordinates of a point, if inside the node hull.
    pub fn cell_coords(&self, z: Complex64) -> Option<(f64, f64)> {
        let fx = (z.re - self.origin.re) / self.h;
        let fy = (z.im - self.origin.im) / self.h;
        if fx < 0.0 || fy < 0.0 || fx > (self.nx - 1) as f64 || fy > (self.ny - 1) as f64 {
            return None;
        }
        Some((fx, fy))
    }

    pub fn contains_point(&self, z: Complex64) -> bool {
        self.cell_coords(z).is_some()
    }

    /// Bilinear interpolation of nodal values at a point.
    pub fn bilinear(&self, values: &[f64], z: Complex64) -> Option<f64> {
        let (fx, fy) = self.cell_coords(z)?;
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v00 = values[self.index(i, j)];
        let v10 = values[self.index(i + 1, j)];
        let v01 = values[self.index(i, j + 1)];
        let v11 = values[self.index(i + 1, j + 1)];
        Some(v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty
            + v11 * tx * ty)
    }
}

/// A piecewise-harmonic field sampled on a grid: the value V and the index
/// of the harmonic function active at each node.
#[derive(Debug, Clone)]
pub struct ConfigurationField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub active: Vec<usize>,
}

impl ConfigurationField {
    /// Samples a closure returning (value, active index) at every node.
    pub fn from_fn<F: FnMut(Complex64) -> (f64, usize)>(grid: Grid, mut f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        let mut active = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (v, a) = f(grid.point(i, j));
                values.push(v);
                active.push(a);
            }
        }
        ConfigurationField {
            grid,
            values,
            active,
        }
    }

    pub fn node_value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn node_active(&self, i: usize, j: usize) -> usize {
        self.active[self.grid.index(i, j)]
    }

    /// Bilinear value at an arbitrary point inside the grid.
    pub fn value_at(&self, z: Complex64) -> Option<f64> {
        self.grid.bilinear(&self.values, z)
    }

    /// Largest |V(p) - V(q)| over edge-adjacent node pairs.
    pub fn max_adjacent_jump(&self) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let v = self.node_value(i, j);
                if i + 1 < self.grid.nx {
                    worst = worst.max((v - self.node_value(i + 1, j)).abs());
                }
                if j + 1 < self.grid.ny {
                    worst = worst.max((v - self.node_value(i, j + 1)).abs());
                }
            }
        }
        worst
    }
}

/// Boolean per-node mask over a grid.
#[derive(Debug, Clone)]
pub struct RegionMask {
    pub grid: Grid,
    pub mask: Vec<bool>,
}

impl RegionMask {
    pub fn from_active(field: &ConfigurationField, nu: usize) -> Self {
        RegionMask {
            grid: field.grid,
            mask: field.active.iter().map(|&a| a == nu).collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.mask[self.grid.index(i, j)]
    }

    pub fn count_true(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty_mask(&self) -> bool {
        self.count_true() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bilinear_reproduces_bilinear_functions() {
        let grid = Grid::centered(Complex64::new(0.0, 0.0), 1.0, 11);
        let f = |z: Complex64| 2.0 * z.re - 3.0 * z.im + 0.5 * z.re * z.im + 1.0;
        let values: Vec<f64> = (0..grid.len())
            .map(|idx| f(grid.point(idx % grid.nx, idx / grid.nx)))
            .collect();
        let z = Complex64::new(0.123, -0.456);
        assert_abs_diff_eq!(grid.bilinear(&values, z).unwrap(), f(z), epsilon = 1e-12);
        assert!(grid.bilinear(&values, Complex64::new(1.5, 0.0)).is_none());
    }

    #[test]
    fn field_from_fn_and_mask() {
        let grid = Grid::centered(Complex64::new(0.0, 0.0), 1.0, 5);
        let field = ConfigurationField::from_fn(grid, |z| {
            if z.re > 0.0 {
                (2.0 * z.re, 1)
            } else {
                (0.0, 0)
            }
        });
        let mask = RegionMask::from_active(&field, 1);
        assert_eq!(mask.count_true(), 2 * 5);
        assert_abs_diff_eq!(
            field.value_at(Complex64::new(0.25, 0.0)).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }
}
