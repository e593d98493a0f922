//! Attached perturbations `u = u0 + zeta^nu w` of a J-holomorphic half-disk,
//! computed on the reflected disk by successive approximation, and cusp
//! smoothing built on top of them.
//!
//! With `J0 = J~(u0~)` the equation `dbar_J u = 0` becomes
//! `dbar w + M1 w_eta + M0 w = F(w)` where
//!
//! * `M1 = zeta^-nu (J0 - J_st) zeta^nu / 2`,
//! * `M0 = nu zeta^-nu (J0 - J_st) J_st zeta^(nu-1) / 2`,
//! * `F(w) = -zeta^-nu (J(u) - J0) (u0_eta + zeta^nu w_eta + i nu zeta^(nu-1) w) / 2`,
//!
//! all set to zero at `zeta = 0`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::cauchy_green::{CauchyGreen, Convolver, DirectConvolver};
use crate::error::{Error, Result};
use crate::grid::{
    add2, conj2, derivative_field2, norm2, scale2, sub2, Axis, Grid, GridField, C2, ZERO2,
};
use crate::linking::FloatDisk;
use crate::structures::{
    conj_point, conjugate_matrix, from_point, j_st, to_point, Mat4, StructureField,
};

/// A half-disk attached to `R^2`, given on the closed upper half-disk, with
/// its partial derivatives. Reflected values follow from `u~(zeta) = conj u(conj zeta)`.
pub trait AttachedDisk: Sync {
    fn eval(&self, zeta: Complex64) -> C2;
    fn d_xi(&self, zeta: Complex64) -> C2;
    fn d_eta(&self, zeta: Complex64) -> C2;
    /// Vanishing order at `0`.
    fn mu(&self) -> usize;
    /// Leading coefficient `v0`, a real vector.
    fn tangent(&self) -> [f64; 2];

    fn reflected(&self, zeta: Complex64) -> C2 {
        if zeta.im >= 0.0 {
            self.eval(zeta)
        } else {
            conj2(&self.eval(zeta.conj()))
        }
    }

    fn reflected_d_xi(&self, zeta: Complex64) -> C2 {
        if zeta.im >= 0.0 {
            self.d_xi(zeta)
        } else {
            conj2(&self.d_xi(zeta.conj()))
        }
    }

    fn reflected_d_eta(&self, zeta: Complex64) -> C2 {
        if zeta.im >= 0.0 {
            self.d_eta(zeta)
        } else {
            let d = self.d_eta(zeta.conj());
            [-d[0].conj(), -d[1].conj()]
        }
    }
}

impl<D: AttachedDisk + ?Sized> AttachedDisk for &D {
    fn eval(&self, zeta: Complex64) -> C2 {
        (**self).eval(zeta)
    }
    fn d_xi(&self, zeta: Complex64) -> C2 {
        (**self).d_xi(zeta)
    }
    fn d_eta(&self, zeta: Complex64) -> C2 {
        (**self).d_eta(zeta)
    }
    fn mu(&self) -> usize {
        (**self).mu()
    }
    fn tangent(&self) -> [f64; 2] {
        (**self).tangent()
    }
}

/// Polynomial half-disks with real coefficients are `J_st`-holomorphic.
impl AttachedDisk for FloatDisk {
    fn eval(&self, zeta: Complex64) -> C2 {
        crate::linking::ReflectedMap::eval(self, zeta)
    }
    fn d_xi(&self, zeta: Complex64) -> C2 {
        let mut acc = ZERO2;
        for (k, c) in self.coeffs().iter().enumerate().skip(1).rev() {
            acc = add2(
                &scale2(zeta, &acc),
                &scale2(Complex64::new(k as f64, 0.0), c),
            );
        }
        acc
    }
    fn d_eta(&self, zeta: Complex64) -> C2 {
        scale2(Complex64::i(), &self.d_xi(zeta))
    }
    fn mu(&self) -> usize {
        self.coeffs()
            .iter()
            .position(|c| norm2(c) > 0.0)
            .unwrap_or(0)
    }
    fn tangent(&self) -> [f64; 2] {
        let c = self.coeffs()[self.mu()];
        [c[0].re, c[1].re]
    }
}

/// `u(zeta) = (zeta, i s eta^2 / 2)`, holomorphic for the ambient
/// [`EtaExample`](crate::structures::EtaExample) with the same scale.
#[derive(Clone, Copy, Debug)]
pub struct EtaLine {
    pub scale: f64,
}

impl AttachedDisk for EtaLine {
    fn eval(&self, z: Complex64) -> C2 {
        [z, Complex64::new(0.0, self.scale * z.im * z.im / 2.0)]
    }
    fn d_xi(&self, _z: Complex64) -> C2 {
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
    }
    fn d_eta(&self, z: Complex64) -> C2 {
        [Complex64::i(), Complex64::new(0.0, self.scale * z.im)]
    }
    fn mu(&self) -> usize {
        1
    }
    fn tangent(&self) -> [f64; 2] {
        [1.0, 0.0]
    }
}

/// The cusp `u(zeta) = (zeta^2, zeta^3 + (i s / 4)(|zeta|^4 - Re zeta^4))`,
/// holomorphic for [`EtaExample`](crate::structures::EtaExample) with scale `s`.
#[derive(Clone, Copy, Debug)]
pub struct EtaCusp {
    pub scale: f64,
}

impl AttachedDisk for EtaCusp {
    fn eval(&self, z: Complex64) -> C2 {
        let r2 = z.norm_sqr();
        let q = Complex64::new(0.0, self.scale / 4.0) * (r2 * r2 - z.powi(4).re);
        [z * z, z.powi(3) + q]
    }
    fn d_xi(&self, z: Complex64) -> C2 {
        let d = 4.0 * z.re * z.norm_sqr() - 4.0 * z.powi(3).re;
        [
            z * 2.0,
            z * z * 3.0 + Complex64::new(0.0, self.scale / 4.0) * d,
        ]
    }
    fn d_eta(&self, z: Complex64) -> C2 {
        let d = 4.0 * z.im * z.norm_sqr() + 4.0 * z.powi(3).im;
        let i = Complex64::i();
        [
            i * z * 2.0,
            i * z * z * 3.0 + Complex64::new(0.0, self.scale / 4.0) * d,
        ]
    }
    fn mu(&self) -> usize {
        2
    }
    fn tangent(&self) -> [f64; 2] {
        [1.0, 0.0]
    }
}

/// `delta^-mu u(delta zeta)`.
struct Dilated<'a, D: ?Sized> {
    inner: &'a D,
    delta: f64,
}

impl<D: AttachedDisk + ?Sized> AttachedDisk for Dilated<'_, D> {
    fn eval(&self, z: Complex64) -> C2 {
        let c = self.delta.powi(-(self.inner.mu() as i32));
        scale2(Complex64::new(c, 0.0), &self.inner.eval(z * self.delta))
    }
    fn d_xi(&self, z: Complex64) -> C2 {
        let c = self.delta.powi(1 - self.inner.mu() as i32);
        scale2(Complex64::new(c, 0.0), &self.inner.d_xi(z * self.delta))
    }
    fn d_eta(&self, z: Complex64) -> C2 {
        let c = self.delta.powi(1 - self.inner.mu() as i32);
        scale2(Complex64::new(c, 0.0), &self.inner.d_eta(z * self.delta))
    }
    fn mu(&self) -> usize {
        self.inner.mu()
    }
    fn tangent(&self) -> [f64; 2] {
        self.inner.tangent()
    }
}

/// `J(scale z)` above the edge and its conjugate `J^-` below.
fn ambient<F: StructureField + ?Sized>(j: &F, scale: f64, zeta: Complex64, u: &C2) -> Mat4 {
    let p = to_point(*u) * scale;
    if zeta.im >= 0.0 {
        j.eval(&p)
    } else {
        conjugate_matrix(&j.eval(&conj_point(&p)))
    }
}

/// Real matrix of multiplication by `c` on both components.
fn cmat(c: Complex64) -> Mat4 {
    Mat4::new(
        c.re, -c.im, 0.0, 0.0, //
        c.im, c.re, 0.0, 0.0, //
        0.0, 0.0, c.re, -c.im, //
        0.0, 0.0, c.im, c.re,
    )
}

fn apply(m: &Mat4, v: &C2) -> C2 {
    from_point(&(m * to_point(*v)))
}

/// `w -> M1 w_eta + M0 w`, the lower-order part of `dbar_J + R`.
#[derive(Clone, Debug)]
pub struct TwistedOperator {
    grid: Grid,
    m1: Vec<Mat4>,
    m0: Vec<Mat4>,
}

impl TwistedOperator {
    pub fn new(grid: Grid, m1: Vec<Mat4>, m0: Vec<Mat4>) -> Result<Self> {
        for v in [&m1, &m0] {
            if v.len() != grid.len() {
                return Err(Error::DimensionMismatch {
                    left: v.len(),
                    right: grid.len(),
                });
            }
        }
        Ok(Self { grid, m1, m0 })
    }

    pub fn zero(grid: Grid) -> Self {
        Self {
            grid,
            m1: vec![Mat4::zeros(); grid.len()],
            m0: vec![Mat4::zeros(); grid.len()],
        }
    }

    /// `dbar_J w + R w - dbar w` for a structure field `J` and an optional
    /// zero order term `R`, both sampled on every node.
    pub fn from_structure(grid: Grid, j: &[Mat4], r: Option<&[Mat4]>) -> Result<Self> {
        let m1 = j.iter().map(|m| (m - j_st()) * 0.5).collect();
        let m0 = match r {
            Some(r) => r.to_vec(),
            None => vec![Mat4::zeros(); grid.len()],
        };
        Self::new(grid, m1, m0)
    }

    pub fn m1(&self) -> &[Mat4] {
        &self.m1
    }

    pub fn m0(&self) -> &[Mat4] {
        &self.m0
    }

    pub fn is_zero(&self) -> bool {
        self.m1
            .iter()
            .chain(&self.m0)
            .all(|m| m.iter().all(|x| *x == 0.0))
    }

    pub fn apply(&self, w: &GridField<C2>) -> GridField<C2> {
        let we = derivative_field2(w, Axis::Eta);
        let mut out = GridField::zeros(self.grid);
        for k in self.grid.disk_nodes() {
            out.values_mut()[k] = add2(
                &apply(&self.m1[k], &we.values()[k]),
                &apply(&self.m0[k], &w.values()[k]),
            );
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeumannConfig {
    /// Stop once a series term is below this sup norm.
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for NeumannConfig {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_terms: 60,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NeumannOutcome {
    pub w: GridField<C2>,
    pub terms: usize,
    /// Largest ratio of successive term norms.
    pub ratio: f64,
    /// Norm of the last term, `|g + P T0 g - f|` for the accumulated density `g`.
    pub residual: f64,
}

/// `w = T0 g` with `(I + P T0) g = f` summed as a Neumann series, so that
/// `dbar w + P w = f` and `w(0) = 0`.
pub fn neumann_inverse<V: Convolver>(
    cg: &CauchyGreen<V>,
    op: &TwistedOperator,
    f: &GridField<C2>,
    cfg: &NeumannConfig,
) -> Result<NeumannOutcome> {
    neumann_inverse_order(cg, op, f, 0, cfg)
}

/// [`neumann_inverse`] with `T0` replaced by `T` minus its holomorphic Taylor
/// polynomial of degree `order`, so that `w = O(|zeta|^(order+1))` as well.
pub fn neumann_inverse_order<V: Convolver>(
    cg: &CauchyGreen<V>,
    op: &TwistedOperator,
    f: &GridField<C2>,
    order: usize,
    cfg: &NeumannConfig,
) -> Result<NeumannOutcome> {
    let mut tn = f.sup_norm();
    let mut w = cg.apply_taylor2(f, order);
    if op.is_zero() {
        return Ok(NeumannOutcome {
            w,
            terms: 1,
            ratio: 0.0,
            residual: 0.0,
        });
    }
    let mut terms = 1;
    let mut ratio: f64 = 0.0;
    let mut tw = w.clone();
    while tn > cfg.tol {
        if terms >= cfg.max_terms {
            return Err(Error::PerturbationTooLarge(ratio));
        }
        let mut next = op.apply(&tw);
        for v in next.values_mut() {
            *v = [-v[0], -v[1]];
        }
        let nn = next.sup_norm();
        let r = nn / tn;
        if r >= 1.0 {
            return Err(Error::PerturbationTooLarge(r));
        }
        ratio = ratio.max(r);
        tw = cg.apply_taylor2(&next, order);
        w = w.zip_map(&tw, add2);
        tn = nn;
        terms += 1;
    }
    Ok(NeumannOutcome {
        w,
        terms,
        ratio,
        residual: tn,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveConfig {
    pub nu: usize,
    pub w0: [f64; 2],
    /// Target for the grid residual; iteration stops when steps fall below
    /// `tol / 100`.
    pub tol: f64,
    pub max_iter: usize,
    pub h: f64,
    /// Hölder exponent for the precondition on vanishing orders.
    pub alpha: f64,
    /// Largest accepted ratio of successive steps.
    pub contraction: f64,
    /// Halvings of the domain tried when the iteration does not contract.
    pub max_dilations: usize,
    /// Tolerance on `dbar_J u0`.
    pub holomorphy_tol: f64,
    /// Radius of the half-disk on which the grid residual is measured.
    pub residual_radius: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            nu: 1,
            w0: [0.0, 0.0],
            tol: 1e-6,
            max_iter: 50,
            h: crate::grid::DEFAULT_H,
            alpha: 0.5,
            contraction: 0.9,
            max_dilations: 2,
            holomorphy_tol: 1e-8,
            residual_radius: 0.5,
        }
    }
}

/// Upper bound of `|w0|`.
pub const W0_CAP: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct Solution {
    /// `w~` on the reflected disk, in the dilated frame when `dilation < 1`.
    pub w: GridField<C2>,
    pub nu: usize,
    pub w0: C2,
    pub iterations: usize,
    /// Sup norms of successive differences of iterates.
    pub steps: Vec<f64>,
    /// Largest ratio of successive steps.
    pub ratio: f64,
    /// `max |dbar_J u|` on grid nodes of the upper half-disk of radius
    /// `residual_radius`.
    pub residual: f64,
    /// Node where `residual` is attained.
    pub residual_at: Complex64,
    /// `|w - T0[F(w)] - w1|` in sup norm.
    pub identity_residual: f64,
    pub symmetry_residual: f64,
    /// `|w(0) - w0|`.
    pub origin_error: f64,
    /// Scale `delta` of `u0 -> delta^-mu u0(delta zeta)`; `1` if none was needed.
    pub dilation: f64,
    /// Largest Frobenius norm of the zero order term `M0`, an upper bound for
    /// its operator norm.
    pub zero_order_bound: f64,
    pub neumann_terms: usize,
}

impl Solution {
    /// `sup |w| / |w0|`.
    pub fn stability(&self) -> f64 {
        self.w.sup_norm() / norm2(&self.w0)
    }
}

fn check_preconditions(mu: usize, cfg: &SolveConfig) -> Result<()> {
    if !(cfg.h > 0.0) || cfg.max_iter == 0 || !(cfg.tol > 0.0) {
        return Err(Error::InvalidConfig("h, tol and max_iter must be positive"));
    }
    if !(cfg.contraction > 0.0 && cfg.contraction < 1.0) {
        return Err(Error::InvalidConfig(
            "contraction threshold must lie in (0, 1)",
        ));
    }
    if mu == 0 {
        return Err(Error::NotCentered);
    }
    if mu >= 2 && 2.0 * (mu as f64) - 2.0 + (cfg.alpha - 1.0) * (cfg.nu as f64) < 0.0 {
        return Err(Error::OrdersIncompatible);
    }
    Ok(())
}

/// Everything on the grid that does not depend on `w`. The iteration runs
/// on `v = zeta^nu w`, where `zeta^nu T0 zeta^-nu` becomes `T` minus its
/// holomorphic Taylor polynomial of degree `nu` and the twisted operator
/// `M1 d_eta + M0` becomes `(J0 - J_st) d_eta / 2`. The densities stay
/// Lipschitz at `0` in this form.
struct Frame {
    u0: Vec<C2>,
    u0_xi: Vec<C2>,
    u0_eta: Vec<C2>,
    j0: Vec<Mat4>,
    op: TwistedOperator,
    zero_order_bound: f64,
}

fn zpow(z: Complex64, k: i32) -> Complex64 {
    if k == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        z.powi(k)
    }
}

fn frame<D: AttachedDisk + ?Sized, F: StructureField + ?Sized>(
    grid: Grid,
    u0: &D,
    j: &F,
    scale: f64,
    nu: usize,
) -> Frame {
    let len = grid.len();
    let mut fr = Frame {
        u0: vec![ZERO2; len],
        u0_xi: vec![ZERO2; len],
        u0_eta: vec![ZERO2; len],
        j0: vec![j_st(); len],
        op: TwistedOperator::zero(grid),
        zero_order_bound: 0.0,
    };
    let jst = j_st();
    let nu_i = nu as i32;
    for k in grid.disk_nodes() {
        let z = grid.point(k);
        fr.u0[k] = u0.reflected(z);
        fr.u0_xi[k] = u0.reflected_d_xi(z);
        fr.u0_eta[k] = u0.reflected_d_eta(z);
        fr.j0[k] = ambient(j, scale, z, &fr.u0[k]);
        let d = fr.j0[k] - jst;
        fr.op.m1[k] = d * 0.5;
        if nu > 0 && z != Complex64::new(0.0, 0.0) {
            let m0 = cmat(zpow(z, -nu_i)) * d * jst * cmat(zpow(z, nu_i - 1)) * (0.5 * nu as f64);
            fr.zero_order_bound = fr.zero_order_bound.max(m0.norm());
        }
    }
    fr
}

/// `-(J(u) - J0)(u0_eta + v_eta) / 2` with `u = u0 + v`.
fn right_side<F: StructureField + ?Sized>(
    fr: &Frame,
    j: &F,
    scale: f64,
    v: &GridField<C2>,
) -> GridField<C2> {
    let grid = *v.grid();
    let ve = derivative_field2(v, Axis::Eta);
    let mut out = GridField::zeros(grid);
    for k in grid.disk_nodes() {
        let z = grid.point(k);
        let u = add2(&fr.u0[k], &v.values()[k]);
        let d = ambient(j, scale, z, &u) - fr.j0[k];
        let dv = apply(&d, &add2(&fr.u0_eta[k], &ve.values()[k]));
        out.values_mut()[k] = scale2(Complex64::new(-0.5, 0.0), &dv);
    }
    out
}

/// `max |dbar_J u|` with `u = u0 + v` over upper half-disk nodes of radius `r`.
fn grid_residual<F: StructureField + ?Sized>(
    fr: &Frame,
    j: &F,
    scale: f64,
    v: &GridField<C2>,
    r: f64,
) -> (f64, Complex64) {
    let grid = *v.grid();
    let vx = derivative_field2(v, Axis::Xi);
    let ve = derivative_field2(v, Axis::Eta);
    let mut worst: (f64, Complex64) = (0.0, Complex64::new(0.0, 0.0));
    for k in grid.half_disk_nodes(r) {
        let z = grid.point(k);
        let uxi = add2(&fr.u0_xi[k], &vx.values()[k]);
        let ueta = add2(&fr.u0_eta[k], &ve.values()[k]);
        let u = add2(&fr.u0[k], &v.values()[k]);
        let jm = ambient(j, scale, z, &u);
        let res = scale2(Complex64::new(0.5, 0.0), &add2(&uxi, &apply(&jm, &ueta)));
        if norm2(&res) > worst.0 {
            worst = (norm2(&res), z);
        }
    }
    worst
}

fn holomorphy_defect(fr: &Frame, grid: &Grid) -> f64 {
    grid.half_disk_nodes(1.0)
        .map(|k| {
            let v = add2(&fr.u0_xi[k], &apply(&fr.j0[k], &fr.u0_eta[k]));
            0.5 * norm2(&v)
        })
        .fold(0.0, f64::max)
}

/// `w0 + (v - zeta^nu w0) / zeta^nu`, with `w0` at the origin.
fn divide(v: &GridField<C2>, base: &GridField<C2>, nu: usize, w0: C2) -> GridField<C2> {
    let grid = *v.grid();
    let mut w = GridField::zeros(grid);
    for k in grid.disk_nodes() {
        let z = grid.point(k);
        w.values_mut()[k] = if k == grid.origin() {
            w0
        } else {
            let d = sub2(&v.values()[k], &base.values()[k]);
            add2(&w0, &scale2(zpow(z, -(nu as i32)), &d))
        };
    }
    w
}

/// `sup |a - b| / |zeta|^nu` over nodes other than the origin.
fn weighted_distance(a: &GridField<C2>, b: &GridField<C2>, nu: usize) -> f64 {
    let grid = *a.grid();
    grid.disk_nodes()
        .filter(|&k| k != grid.origin())
        .map(|k| {
            norm2(&sub2(&a.values()[k], &b.values()[k])) / grid.point(k).norm().powi(nu as i32)
        })
        .fold(0.0, f64::max)
}

fn solve_in_frame<D, F, V>(
    cg: &CauchyGreen<V>,
    u0: &D,
    j: &F,
    scale: f64,
    w0: C2,
    cfg: &SolveConfig,
) -> Result<Solution>
where
    D: AttachedDisk + ?Sized,
    F: StructureField + ?Sized,
    V: Convolver,
{
    let grid = *cg.grid();
    let nu = cfg.nu;
    let fr = frame(grid, u0, j, scale, nu);
    let defect = holomorphy_defect(&fr, &grid);
    if defect > cfg.holomorphy_tol {
        return Err(Error::NotHolomorphic(defect));
    }
    let ncfg = NeumannConfig {
        tol: (cfg.tol * 1e-6).max(1e-15),
        ..NeumannConfig::default()
    };
    let nu_i = nu as i32;
    let base = GridField::from_fn(grid, |z| scale2(zpow(z, nu_i), &w0));
    let mut neumann_terms = 0;

    // v1 = zeta^nu w1 with w1 = w0 - T0_{J,R}(P w0).
    let mut pw0 = fr.op.apply(&base);
    for v in pw0.values_mut() {
        *v = [-v[0], -v[1]];
    }
    let corr = neumann_inverse_order(cg, &fr.op, &pw0, nu, &ncfg)?;
    neumann_terms = neumann_terms.max(corr.terms);
    let mut v1 = base.zip_map(&corr.w, add2);
    v1.symmetrize();

    let stop = (cfg.tol * 1e-2).max(1e-15);
    let mut v = v1.clone();
    let mut steps = Vec::new();
    let mut ratio: f64 = 0.0;
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let f = right_side(&fr, j, scale, &v);
        let t = neumann_inverse_order(cg, &fr.op, &f, nu, &ncfg)?;
        neumann_terms = neumann_terms.max(t.terms);
        let mut next = t.w.zip_map(&v1, add2);
        next.symmetrize();
        let step = weighted_distance(&next, &v, nu);
        v = next;
        if let Some(&prev) = steps.last() {
            if prev > 0.0 && step > stop {
                let r = step / prev;
                ratio = ratio.max(r);
                if r > cfg.contraction {
                    steps.push(step);
                    return Err(Error::NoContraction {
                        ratio: r,
                        iterations: steps.len(),
                    });
                }
            }
        }
        steps.push(step);
        if step <= stop {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoContraction {
            ratio,
            iterations: steps.len(),
        });
    }

    let f = right_side(&fr, j, scale, &v);
    let t = neumann_inverse_order(cg, &fr.op, &f, nu, &ncfg)?;
    let mut fixed = t.w.zip_map(&v1, add2);
    fixed.symmetrize();
    let identity_residual = weighted_distance(&fixed, &v, nu);

    let (residual, residual_at) = grid_residual(&fr, j, scale, &v, cfg.residual_radius);
    let w = divide(&v, &base, nu, w0);
    Ok(Solution {
        nu,
        w0,
        iterations: steps.len(),
        ratio,
        residual,
        residual_at,
        identity_residual,
        symmetry_residual: w.symmetry_residual(),
        origin_error: norm2(&sub2(&w.values()[grid.origin()], &w0)),
        dilation: 1.0,
        zero_order_bound: fr.zero_order_bound,
        neumann_terms,
        steps,
        w,
    })
}

/// Solves `dbar_J (u0 + zeta^nu w) = 0` with `w(0) = w0` and `w` real on the
/// edge, using the given Cauchy-Green operator. When the iteration does not
/// contract the domain is dilated by `1/2` and the solve retried.
pub fn solve_perturbation_with<D, F, V>(
    cg: &CauchyGreen<V>,
    u0: &D,
    j: &F,
    cfg: &SolveConfig,
) -> Result<Solution>
where
    D: AttachedDisk + ?Sized,
    F: StructureField + ?Sized,
    V: Convolver,
{
    let mu = u0.mu();
    check_preconditions(mu, cfg)?;
    if (cg.grid().h() - cfg.h).abs() > 1e-12 {
        return Err(Error::InvalidConfig(
            "grid spacing differs from the operator's grid",
        ));
    }
    let w0 = [
        Complex64::new(cfg.w0[0], 0.0),
        Complex64::new(cfg.w0[1], 0.0),
    ];
    if norm2(&w0) > W0_CAP {
        return Err(Error::InitialTooLarge(norm2(&w0)));
    }
    let mut delta = 1.0_f64;
    let mut attempt = 0;
    loop {
        let result = if attempt == 0 {
            solve_in_frame(cg, u0, j, 1.0, w0, cfg)
        } else {
            let scaled = scale2(
                Complex64::new(delta.powi((cfg.nu as i32) - (mu as i32)), 0.0),
                &w0,
            );
            if norm2(&scaled) > W0_CAP {
                return Err(Error::InitialTooLarge(norm2(&scaled)));
            }
            let d = Dilated { inner: u0, delta };
            solve_in_frame(cg, &d, j, delta.powi(mu as i32), scaled, cfg)
        };
        match result {
            Err(Error::NoContraction { .. }) | Err(Error::PerturbationTooLarge(_))
                if attempt < cfg.max_dilations =>
            {
                attempt += 1;
                delta *= 0.5;
            }
            Ok(mut s) => {
                s.dilation = delta;
                return Ok(s);
            }
            Err(e) => return Err(e),
        }
    }
}

/// [`solve_perturbation_with`] on a fresh grid of spacing `cfg.h` with direct
/// summation.
pub fn solve_perturbation<D, F>(u0: &D, j: &F, cfg: &SolveConfig) -> Result<Solution>
where
    D: AttachedDisk + ?Sized,
    F: StructureField + ?Sized,
{
    let cg: CauchyGreen<DirectConvolver> = CauchyGreen::new(Grid::new(cfg.h)?);
    solve_perturbation_with(&cg, u0, j, cfg)
}

#[derive(Clone, Debug)]
pub struct CuspReport {
    pub solution: Solution,
    /// Radius of the half-disk on which `du != 0` was verified cell by cell.
    pub radius: f64,
    /// `min |d_xi u|` over nodes within `radius`.
    pub min_differential: f64,
    /// Measured `sup |d_xi u0 - mu zeta^(mu-1) v0| / |zeta|^(mu-1+alpha)`.
    pub sigma: f64,
    /// Measured `sup |d_xi(zeta w) - w0| / (|zeta|^alpha |w0|)`.
    pub c_const: f64,
    /// Two sides of the smallness condition on `a`.
    pub condition: (f64, f64),
}

/// Largest verified radius.
pub const CUSP_MAX_RADIUS: f64 = 0.5;

/// Removes the cusp of `u0` at `0` by the attached perturbation
/// `u = u0 + zeta w` with `w(0) = a e` for the unit vector `e` orthogonal to
/// `v0`, then certifies `du != 0` near `0` on the grid.
pub fn smooth_cusp_with<D, F, V>(
    cg: &CauchyGreen<V>,
    u0: &D,
    j: &F,
    a: f64,
    cfg: &SolveConfig,
) -> Result<CuspReport>
where
    D: AttachedDisk + ?Sized,
    F: StructureField + ?Sized,
    V: Convolver,
{
    let mu = u0.mu();
    if mu < 2 {
        return Err(Error::InvalidConfig("smooth_cusp needs a cusp, mu >= 2"));
    }
    let alpha = cfg.alpha;
    let m1 = (mu - 1) as f64;
    if !(alpha > 0.0 && alpha < m1) {
        return Err(Error::InvalidConfig("alpha must lie in (0, mu - 1)"));
    }
    let v0 = u0.tangent();
    let len = (v0[0] * v0[0] + v0[1] * v0[1]).sqrt();
    let e = [-v0[1] / len, v0[0] / len];
    let scfg = SolveConfig {
        nu: 1,
        w0: [a * e[0], a * e[1]],
        ..*cfg
    };

    let grid = *cg.grid();
    let mut sigma: f64 = 0.0;
    for k in grid.half_disk_nodes(CUSP_MAX_RADIUS) {
        let z = grid.point(k);
        if z == Complex64::new(0.0, 0.0) {
            continue;
        }
        let lead = z.powi(mu as i32 - 1) * mu as f64;
        let d = sub2(&u0.d_xi(z), &[lead * v0[0], lead * v0[1]]);
        sigma = sigma.max(norm2(&d) / z.norm().powf(m1 + alpha));
    }

    let solution = solve_perturbation_with(cg, u0, j, &scfg)?;
    let w = &solution.w;
    let w0 = solution.w0;
    let wx = derivative_field2(w, Axis::Xi);
    let a_abs = norm2(&w0);
    let mut c_const: f64 = 0.0;
    if a_abs > 0.0 {
        for k in grid.half_disk_nodes(CUSP_MAX_RADIUS) {
            let z = grid.point(k);
            if z == Complex64::new(0.0, 0.0) {
                continue;
            }
            let d = sub2(&add2(&w.values()[k], &scale2(z, &wx.values()[k])), &w0);
            c_const = c_const.max(norm2(&d) / (z.norm().powf(alpha) * a_abs));
        }
    }
    let lhs = a_abs.powf(2.0 * alpha / (m1 * m1 - alpha * alpha));
    let part = |c: f64, p: f64| if c > 0.0 { c.powf(p) } else { f64::INFINITY };
    let rhs = part(mu as f64 / (3.0 * c_const), 1.0 / (m1 - alpha))
        * part(1.0 / (3.0 * sigma), 1.0 / (m1 + alpha));
    if lhs > rhs {
        return Err(Error::SmallnessViolated(
            "|a| too large for the measured constants",
        ));
    }

    // d_xi u = d_xi u0 + w + zeta w_xi in the solution's frame.
    let d = solution.dilation;
    let frame_disk = Dilated {
        inner: u0,
        delta: d,
    };
    let mut du = vec![ZERO2; grid.len()];
    for k in grid.half_disk_nodes(1.0) {
        let z = grid.point(k);
        du[k] = add2(
            &add2(&frame_disk.d_xi(z), &w.values()[k]),
            &scale2(z, &wx.values()[k]),
        );
    }
    let h = grid.h();
    let n = grid.n() as isize;
    let mut radius = CUSP_MAX_RADIUS;
    for jj in 0..n {
        for ii in -n..n {
            let corners = [(ii, jj), (ii + 1, jj), (ii, jj + 1), (ii + 1, jj + 1)];
            let idx: Vec<usize> = corners
                .iter()
                .filter_map(|&(x, y)| grid.disk_index(x, y))
                .collect();
            if idx.len() < 4 {
                continue;
            }
            let dist = |k: usize| grid.point(k).norm();
            let far = idx.iter().map(|&k| dist(k)).fold(0.0, f64::max);
            if far > CUSP_MAX_RADIUS + 1e-12 {
                continue;
            }
            let mut lip: f64 = 0.0;
            for a in 0..4 {
                for b in a + 1..4 {
                    let (pa, pb) = (grid.point(idx[a]), grid.point(idx[b]));
                    lip = lip.max(norm2(&sub2(&du[idx[a]], &du[idx[b]])) / (pa - pb).norm());
                }
            }
            let low = idx
                .iter()
                .map(|&k| norm2(&du[k]))
                .fold(f64::INFINITY, f64::min);
            if !(low > 1.5 * lip * h / core::f64::consts::SQRT_2) {
                let near = idx.iter().map(|&k| dist(k)).fold(f64::INFINITY, f64::min);
                radius = radius.min(near);
            }
        }
    }
    if radius < h {
        return Err(Error::CuspPersists);
    }
    let min_differential = grid
        .half_disk_nodes(radius)
        .map(|k| norm2(&du[k]))
        .fold(f64::INFINITY, f64::min);
    Ok(CuspReport {
        radius: radius * d,
        min_differential,
        sigma,
        c_const,
        condition: (lhs, rhs),
        solution,
    })
}

pub fn smooth_cusp<D, F>(u0: &D, j: &F, a: f64, cfg: &SolveConfig) -> Result<CuspReport>
where
    D: AttachedDisk + ?Sized,
    F: StructureField + ?Sized,
{
    let cg: CauchyGreen<DirectConvolver> = CauchyGreen::new(Grid::new(cfg.h)?);
    smooth_cusp_with(&cg, u0, j, a, cfg)
}
