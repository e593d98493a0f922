//! Discrete Cauchy-Green operator `T f(z) = (1/pi) int_D f(s) / (z - s) dA(s)`,
//! a right inverse of `dbar = (d_xi + i d_eta) / 2` on the unit disk.
//!
//! `f` is taken constant on the square cell around each node and the kernel
//! is integrated exactly over every cell, including the one containing the
//! target node.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::grid::{Grid, GridField, C2};

/// Discrete convolution `out[p] = sum_q f[q] k[p - q]` on a square of
/// `side x side` nodes. The kernel is stored on `(2 side - 1)^2` offsets,
/// row-major in `(dj, di)`, offset zero at the centre.
pub trait Convolver {
    fn from_kernel(side: usize, kernel: Vec<Complex64>) -> Self;
    fn convolve(&self, f: &[Complex64]) -> Vec<Complex64>;
}

/// Direct summation over the nonzero inputs. Quadratic cost; fine for
/// coarse grids.
#[derive(Clone, Debug)]
pub struct DirectConvolver {
    side: usize,
    kernel: Vec<Complex64>,
}

impl Convolver for DirectConvolver {
    fn from_kernel(side: usize, kernel: Vec<Complex64>) -> Self {
        assert_eq!(kernel.len(), (2 * side - 1) * (2 * side - 1));
        Self { side, kernel }
    }

    fn convolve(&self, f: &[Complex64]) -> Vec<Complex64> {
        let s = self.side;
        let ks = 2 * s - 1;
        let sources: Vec<(usize, usize, Complex64)> = f
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != Complex64::new(0.0, 0.0))
            .map(|(k, v)| (k % s, k / s, *v))
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); s * s];
        for pj in 0..s {
            for pi in 0..s {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(qi, qj, v) in &sources {
                    let di = pi + s - 1 - qi;
                    let dj = pj + s - 1 - qj;
                    acc += v * self.kernel[dj * ks + di];
                }
                out[pj * s + pi] = acc;
            }
        }
        out
    }
}

fn xlog(x: f64, r2: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        0.5 * x * r2.ln()
    }
}

fn xatan(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (y / x).atan()
    }
}

/// Mixed antiderivative of `x / (x^2 + y^2)`.
fn prim_x(x: f64, y: f64) -> f64 {
    xlog(y, x * x + y * y) + xatan(x, y) - y
}

/// Mixed antiderivative of `y / (x^2 + y^2)`.
fn prim_y(x: f64, y: f64) -> f64 {
    xlog(x, x * x + y * y) + xatan(y, x) - x
}

fn rect(f: fn(f64, f64) -> f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    f(x1, y1) - f(x0, y1) - f(x1, y0) + f(x0, y0)
}

/// `(1/pi) int 1/w dA(w)` over the square of side `h` centred at `d`.
pub fn cell_kernel(d: Complex64, h: f64) -> Complex64 {
    if d == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    let (x0, x1) = (d.re - h / 2.0, d.re + h / 2.0);
    let (y0, y1) = (d.im - h / 2.0, d.im + h / 2.0);
    let a = rect(prim_x, x0, x1, y0, y1);
    let b = rect(prim_y, x0, x1, y0, y1);
    Complex64::new(a, -b) / PI
}

/// `int s^-m dA(s)` over the square of side `h` centred at `c`, for `m >= 2`
/// and `c != 0`.
pub fn cell_power_integral(c: Complex64, h: f64, m: u32) -> Complex64 {
    assert!(m >= 2);
    let even = m % 2 == 0;
    // The logarithm's cut runs along the negative axis; move the cell away from it.
    let (c, sign) = if c.re < 0.0 {
        (-c, if even { 1.0 } else { -1.0 })
    } else {
        (c, 1.0)
    };
    let prim = |x: f64, y: f64| {
        let s = Complex64::new(x, y);
        if m == 2 {
            Complex64::i() * s.ln()
        } else {
            let e = 2 - m as i32;
            s.powi(e) / (Complex64::i() * ((1 - m as i32) * e) as f64)
        }
    };
    let (x0, x1) = (c.re - h / 2.0, c.re + h / 2.0);
    let (y0, y1) = (c.im - h / 2.0, c.im + h / 2.0);
    (prim(x1, y1) - prim(x0, y1) - prim(x1, y0) + prim(x0, y0)) * sign
}

/// Kernel table on all offsets of a grid.
pub fn kernel_table(grid: &Grid) -> Vec<Complex64> {
    let s = grid.side() as isize;
    let h = grid.h();
    let mut k = Vec::with_capacity(((2 * s - 1) * (2 * s - 1)) as usize);
    for dj in -(s - 1)..s {
        for di in -(s - 1)..s {
            k.push(cell_kernel(Complex64::new(di as f64 * h, dj as f64 * h), h));
        }
    }
    k
}

/// `-(1/pi) int_cell s^-(k+1)` for every node but the origin.
fn moment_table(g: &Grid, k: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::new(0.0, 0.0); g.len()];
    for q in g.disk_nodes() {
        if q != g.origin() {
            t[q] = -cell_power_integral(g.point(q), g.h(), k as u32 + 1) / PI;
        }
    }
    t
}

/// The operator on one grid, with the kernel prepared once.
#[derive(Clone, Debug)]
pub struct CauchyGreen<V = DirectConvolver> {
    grid: Grid,
    conv: V,
    moments: Vec<Vec<Complex64>>,
}

/// Taylor orders whose moment tables are prepared up front.
const CACHED_ORDERS: usize = 3;

impl<V: Convolver> CauchyGreen<V> {
    pub fn new(grid: Grid) -> Self {
        let moments = (1..=CACHED_ORDERS)
            .map(|k| moment_table(&grid, k))
            .collect();
        Self {
            grid,
            conv: V::from_kernel(grid.side(), kernel_table(&grid)),
            moments,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `T f` on the disk nodes.
    pub fn apply(&self, f: &GridField<Complex64>) -> GridField<Complex64> {
        let mut input = f.values().to_vec();
        for (k, v) in input.iter_mut().enumerate() {
            if !self.grid.node_in_disk(k) {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        let mut out = self.conv.convolve(&input);
        for (k, v) in out.iter_mut().enumerate() {
            if !self.grid.node_in_disk(k) {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        GridField::from_values(self.grid, out).expect("grid sizes agree")
    }

    /// `T0 f = T f - (T f)(0)`.
    pub fn apply_zero(&self, f: &GridField<Complex64>) -> GridField<Complex64> {
        let mut out = self.apply(f);
        let c = out.values()[self.grid.origin()];
        for k in self.grid.disk_nodes() {
            out.values_mut()[k] -= c;
        }
        out
    }

    /// `T f` minus its holomorphic Taylor polynomial of degree `order` at
    /// `0`, i.e. `zeta^order T0(zeta^-order f)` for `f = O(|zeta|^order)`.
    /// The coefficients `-(1/pi) int f / s^(k+1)` use exact cell integrals;
    /// the node at `0` is skipped.
    pub fn apply_taylor(&self, f: &GridField<Complex64>, order: usize) -> GridField<Complex64> {
        let mut out = self.apply_zero(f);
        if order == 0 {
            return out;
        }
        let g = self.grid;
        let coeffs: Vec<Complex64> = (1..=order)
            .map(|k| {
                let fresh;
                let table = match self.moments.get(k - 1) {
                    Some(t) => t,
                    None => {
                        fresh = moment_table(&g, k);
                        &fresh
                    }
                };
                g.disk_nodes()
                    .map(|q| f.values()[q] * table[q])
                    .sum::<Complex64>()
            })
            .collect();
        for p in g.disk_nodes() {
            let z = g.point(p);
            let mut zk = Complex64::new(1.0, 0.0);
            let mut poly = Complex64::new(0.0, 0.0);
            for c in &coeffs {
                zk *= z;
                poly += c * zk;
            }
            out.values_mut()[p] -= poly;
        }
        out
    }

    /// [`apply_taylor`](Self::apply_taylor) on each component.
    pub fn apply_taylor2(&self, f: &GridField<C2>, order: usize) -> GridField<C2> {
        let a = self.apply_taylor(&f.component(0), order);
        let b = self.apply_taylor(&f.component(1), order);
        GridField::from_components(&a, &b)
    }

    /// `T0` applied to each component.
    pub fn apply_zero2(&self, f: &GridField<C2>) -> GridField<C2> {
        let a = self.apply_zero(&f.component(0));
        let b = self.apply_zero(&f.component(1));
        GridField::from_components(&a, &b)
    }
}

/// `dbar f = (f_xi + i f_eta) / 2` by finite differences.
pub fn dbar(f: &GridField<Complex64>) -> GridField<Complex64> {
    use crate::grid::{derivative_field, Axis};
    let fx = derivative_field(f, Axis::Xi);
    let fy = derivative_field(f, Axis::Eta);
    let mut out = GridField::zeros(*f.grid());
    for k in f.grid().disk_nodes() {
        out.values_mut()[k] = (fx.values()[k] + Complex64::i() * fy.values()[k]) * 0.5;
    }
    out
}

/// Largest `|dbar(T f) - f|` over nodes within radius `r`, away from the
/// staircase boundary.
pub fn dbar_residual<V: Convolver>(cg: &CauchyGreen<V>, f: &GridField<Complex64>, r: f64) -> f64 {
    let tf = cg.apply(f);
    let d = dbar(&tf);
    let g = cg.grid();
    g.disk_nodes()
        .filter(|&k| g.point(k).norm() <= r)
        .map(|k| (d.values()[k] - f.values()[k]).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_odd_and_matches_far_field() {
        let h = 0.1;
        let d = Complex64::new(0.3, -0.2);
        let k = cell_kernel(d, h);
        assert!((k + cell_kernel(-d, h)).norm() < 1e-14);
        let far = Complex64::new(h * h / PI, 0.0) / d;
        assert!((k - far).norm() < 1e-3 * far.norm());
        assert_eq!(
            cell_kernel(Complex64::new(0.0, 0.0), h),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn power_integrals_match_midpoint_far_away() {
        let h = 0.01;
        for c in [
            Complex64::new(0.5, 0.3),
            Complex64::new(-0.4, 0.0),
            Complex64::new(0.0, -0.2),
            Complex64::new(-0.3, -0.3),
        ] {
            for m in 2..5 {
                let exact = cell_power_integral(c, h, m);
                let mid = c.powi(-(m as i32)) * h * h;
                assert!(
                    (exact - mid).norm() < 1e-3 * mid.norm(),
                    "{c} {m}: {exact} vs {mid}"
                );
            }
        }
    }

    #[test]
    fn taylor_removal_of_linear_density() {
        // f = zeta: T f = zeta zbar on the disk, holomorphic part of degree
        // <= 1 at 0 is zero, so T1 f should match zeta zbar.
        let g = Grid::with_n(32);
        let cg: CauchyGreen = CauchyGreen::new(g);
        let f = GridField::from_fn(g, |z| z);
        let t = cg.apply_taylor(&f, 1);
        let err = g
            .disk_nodes()
            .filter(|&k| g.point(k).norm() < 0.8)
            .map(|k| (t.values()[k] - g.point(k) * g.point(k).conj()).norm())
            .fold(0.0, f64::max);
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = Grid::with_n(8);
        let cg: CauchyGreen = CauchyGreen::new(g);
        assert_eq!(cg.apply(&GridField::zeros(g)).sup_norm(), 0.0);
    }

    #[test]
    fn one_maps_to_conjugate() {
        for n in [8usize, 16] {
            let g = Grid::with_n(n);
            let cg: CauchyGreen = CauchyGreen::new(g);
            let t = cg.apply(&GridField::from_fn(g, |_| Complex64::new(1.0, 0.0)));
            let err = g
                .disk_nodes()
                .map(|k| (t.values()[k] - g.point(k).conj()).norm())
                .fold(0.0, f64::max);
            assert!(err < 5.0 * g.h(), "n = {n}: {err}");
            let t0 = cg.apply_zero(&GridField::from_fn(g, |_| Complex64::new(1.0, 0.0)));
            assert_eq!(t0.values()[g.origin()], Complex64::new(0.0, 0.0));
        }
    }
}
