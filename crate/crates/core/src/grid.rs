//! Uniform Cartesian grids on `[-1, 1]^2` masked to the unit disk, fields
//! sampled on them, finite differences and the reflection pairing.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A point of `C^2`.
pub type C2 = [Complex64; 2];

pub const ZERO2: C2 = [Complex64 { re: 0.0, im: 0.0 }; 2];

/// Default grid spacing.
pub const DEFAULT_H: f64 = 1.0 / 64.0;

/// Nodes `(i h, j h)` for `-n <= i, j <= n`, `n h = 1`. The edge `Im = 0` is
/// the row `j = 0` and the grid is symmetric about it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
}

impl Grid {
    /// `h` must be `1 / n` for an integer `n >= 4`.
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidConfig("grid spacing must be positive"));
        }
        let n = (1.0 / h).round();
        if n < 4.0 || (n * h - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("grid spacing must be 1/n with n >= 4"));
        }
        Ok(Self::with_n(n as usize))
    }

    pub fn with_n(n: usize) -> Self {
        Self {
            n,
            h: 1.0 / n as f64,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Nodes per side.
    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of node `(i, j)`, if it lies in the square.
    pub fn index(&self, i: isize, j: isize) -> Option<usize> {
        let n = self.n as isize;
        if i < -n || i > n || j < -n || j > n {
            return None;
        }
        Some(((j + n) as usize) * self.side() + (i + n) as usize)
    }

    pub fn coords(&self, idx: usize) -> (isize, isize) {
        let n = self.n as isize;
        let side = self.side();
        ((idx % side) as isize - n, (idx / side) as isize - n)
    }

    pub fn point(&self, idx: usize) -> Complex64 {
        let (i, j) = self.coords(idx);
        Complex64::new(i as f64 * self.h, j as f64 * self.h)
    }

    /// Inside the closed unit disk.
    pub fn in_disk(&self, i: isize, j: isize) -> bool {
        let n = self.n as isize;
        i * i + j * j <= n * n
    }

    pub fn node_in_disk(&self, idx: usize) -> bool {
        let (i, j) = self.coords(idx);
        self.in_disk(i, j)
    }

    /// Index of the node in the disk, if any.
    pub fn disk_index(&self, i: isize, j: isize) -> Option<usize> {
        if self.in_disk(i, j) {
            self.index(i, j)
        } else {
            None
        }
    }

    /// Node reflected across the edge.
    pub fn mirror(&self, idx: usize) -> usize {
        let (i, j) = self.coords(idx);
        self.index(i, -j).expect("mirror of a grid node")
    }

    pub fn origin(&self) -> usize {
        self.index(0, 0).expect("origin is a node")
    }

    /// Indices of the nodes in the disk.
    pub fn disk_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.node_in_disk(k))
    }

    /// Nodes of the closed upper half-disk within radius `r`.
    pub fn half_disk_nodes(&self, r: f64) -> impl Iterator<Item = usize> + '_ {
        self.disk_nodes().filter(move |&k| {
            let z = self.point(k);
            z.im >= 0.0 && z.norm() <= r + 1e-12
        })
    }
}

/// Values on every node of a grid; nodes outside the disk hold zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: Copy + Default> GridField<T> {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![T::default(); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(Complex64) -> T) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                if grid.node_in_disk(k) {
                    f(grid.point(k))
                } else {
                    T::default()
                }
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: grid.len(),
            });
        }
        Ok(Self { grid, values })
    }
}

impl<T> GridField<T> {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn at(&self, i: isize, j: isize) -> Option<&T> {
        self.grid.disk_index(i, j).map(|k| &self.values[k])
    }
}

impl GridField<Complex64> {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Euclidean norm of a point of `C^2`.
pub fn norm2(v: &C2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn add2(a: &C2, b: &C2) -> C2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub2(a: &C2, b: &C2) -> C2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale2(c: Complex64, v: &C2) -> C2 {
    [c * v[0], c * v[1]]
}

pub fn conj2(v: &C2) -> C2 {
    [v[0].conj(), v[1].conj()]
}

impl GridField<C2> {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(norm2).fold(0.0, f64::max)
    }

    pub fn component(&self, c: usize) -> GridField<Complex64> {
        GridField {
            grid: self.grid,
            values: self.values.iter().map(|v| v[c]).collect(),
        }
    }

    pub fn from_components(a: &GridField<Complex64>, b: &GridField<Complex64>) -> Self {
        GridField {
            grid: a.grid,
            values: a
                .values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| [*x, *y])
                .collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(&C2, &C2) -> C2) -> Self {
        GridField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| norm2(&sub2(a, b)))
            .fold(0.0, f64::max)
    }

    /// `max |w(conj z) - conj w(z)|` over paired nodes.
    pub fn symmetry_residual(&self) -> f64 {
        let g = self.grid;
        g.disk_nodes()
            .map(|k| norm2(&sub2(&self.values[g.mirror(k)], &conj2(&self.values[k]))))
            .fold(0.0, f64::max)
    }

    /// Replaces `w` by `(w(z) + conj w(conj z)) / 2`, so that the field is
    /// real on the edge and `w(conj z) = conj w(z)` holds exactly.
    pub fn symmetrize(&mut self) {
        let g = self.grid;
        for k in g.disk_nodes() {
            let m = g.mirror(k);
            if m < k {
                continue;
            }
            if m == k {
                self.values[k] = [
                    Complex64::new(self.values[k][0].re, 0.0),
                    Complex64::new(self.values[k][1].re, 0.0),
                ];
                continue;
            }
            let a = self.values[k];
            let b = conj2(&self.values[m]);
            let avg = scale2(Complex64::new(0.5, 0.0), &add2(&a, &b));
            self.values[k] = avg;
            self.values[m] = conj2(&avg);
        }
    }
}

/// Direction of a finite difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Xi,
    Eta,
}

/// Finite difference of a field along an axis at a node. Centered where both
/// neighbours lie in the disk and on the same closed side of the edge;
/// second-order one-sided otherwise. On the edge row the `eta` derivative is
/// taken from the upper side.
pub fn difference<T>(field: &GridField<T>, idx: usize, axis: Axis) -> T
where
    T: Copy
        + Default
        + core::ops::Sub<Output = T>
        + core::ops::Add<Output = T>
        + core::ops::Mul<f64, Output = T>,
{
    let g = field.grid;
    let (i, j) = g.coords(idx);
    let h = g.h;
    let at = |s: isize| -> Option<T> {
        let (a, b) = match axis {
            Axis::Xi => (i + s, j),
            Axis::Eta => (i, j + s),
        };
        // Never difference across the edge.
        if axis == Axis::Eta && (b.signum() * j.signum() < 0) {
            return None;
        }
        g.disk_index(a, b).map(|k| field.values[k])
    };
    let f0 = field.values[idx];
    let forward = |f1: T, f2: Option<T>| match f2 {
        Some(f2) => (f1 * 4.0 - f0 * 3.0 - f2) * (1.0 / (2.0 * h)),
        None => (f1 - f0) * (1.0 / h),
    };
    let backward = |f1: T, f2: Option<T>| match f2 {
        Some(f2) => (f0 * 3.0 - f1 * 4.0 + f2) * (1.0 / (2.0 * h)),
        None => (f0 - f1) * (1.0 / h),
    };
    if axis == Axis::Eta && j == 0 {
        return match at(1) {
            Some(f1) => forward(f1, at(2)),
            None => T::default(),
        };
    }
    match (at(-1), at(1)) {
        (Some(m), Some(p)) => (p - m) * (1.0 / (2.0 * h)),
        (None, Some(p)) => forward(p, at(2)),
        (Some(m), None) => backward(m, at(-2)),
        (None, None) => T::default(),
    }
}

/// Derivative along `axis` at every disk node.
pub fn derivative_field(field: &GridField<Complex64>, axis: Axis) -> GridField<Complex64> {
    let g = field.grid;
    let mut out = GridField::zeros(g);
    for k in g.disk_nodes() {
        out.values[k] = difference(field, k, axis);
    }
    out
}

/// Derivative along `axis` of a `C^2`-valued field.
pub fn derivative_field2(field: &GridField<C2>, axis: Axis) -> GridField<C2> {
    let a = derivative_field(&field.component(0), axis);
    let b = derivative_field(&field.component(1), axis);
    GridField::from_components(&a, &b)
}

/// Extension of a function on the closed upper half-disk to the whole disk,
/// `u~(x, y) = -3 u(x, -y) + 4 u(x, -y/2)` for `y < 0`. Values at half-index
/// rows come from cubic Lagrange interpolation in `y`, exact for cubics.
pub fn extend_l1p(u: &GridField<Complex64>) -> GridField<Complex64> {
    let g = u.grid;
    let mut out = u.clone();
    for k in g.disk_nodes() {
        let (i, j) = g.coords(k);
        if j >= 0 {
            continue;
        }
        let m = -j;
        let far = u.values[g.disk_index(i, m).expect("mirror node in disk")];
        let half = if m % 2 == 0 {
            u.values[g.disk_index(i, m / 2).expect("half node in disk")]
        } else {
            interpolate_half(u, i, m)
        };
        out.values[k] = far * -3.0 + half * 4.0;
    }
    out
}

/// `u(x_i, m h / 2)` for odd `m` by four-point Lagrange interpolation on
/// rows inside the upper half-disk.
fn interpolate_half(u: &GridField<Complex64>, i: isize, m: isize) -> Complex64 {
    let g = u.grid;
    let lo = (m - 1) / 2;
    let mut start = (lo - 1).max(0);
    while start > 0 && g.disk_index(i, start + 3).is_none() {
        start -= 1;
    }
    let rows: Vec<isize> = (start..start + 4)
        .filter(|&r| g.disk_index(i, r).is_some())
        .collect();
    let target = m as f64 / 2.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, &ra) in rows.iter().enumerate() {
        let mut weight = 1.0;
        for (b, &rb) in rows.iter().enumerate() {
            if a != b {
                weight *= (target - rb as f64) / (ra - rb) as f64;
            }
        }
        acc += u.values[g.disk_index(i, ra).unwrap()] * weight;
    }
    acc
}
