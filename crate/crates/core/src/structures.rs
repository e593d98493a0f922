//! Almost complex structures on `R^4 = C^2`, reflection across the totally
//! real plane `R^2 = {y = 0}`, Cayley transforms and cone blending.
//!
//! Coordinates are ordered `(x1, y1, x2, y2)`, so `J_st` is multiplication by
//! `i` and complex conjugation is `tau = diag(1, -1, 1, -1)`.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat4 = Matrix4<f64>;
pub type Point = Vector4<f64>;

/// Condition number above which `J + J_st` counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Tolerance of the pointwise identities (`J^2 = -Id`, anti-linearity).
pub const STRUCTURE_TOL: f64 = 1e-10;

pub fn j_st() -> Mat4 {
    Mat4::new(
        0.0, -1.0, 0.0, 0.0, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, -1.0, //
        0.0, 0.0, 1.0, 0.0,
    )
}

pub fn tau() -> Mat4 {
    Mat4::from_diagonal(&Vector4::new(1.0, -1.0, 1.0, -1.0))
}

/// `(z1, z2) -> (x1, y1, x2, y2)`.
pub fn to_point(z: [Complex64; 2]) -> Point {
    Point::new(z[0].re, z[0].im, z[1].re, z[1].im)
}

pub fn from_point(p: &Point) -> [Complex64; 2] {
    [Complex64::new(p[0], p[1]), Complex64::new(p[2], p[3])]
}

pub fn conj_point(p: &Point) -> Point {
    Point::new(p[0], -p[1], p[2], -p[3])
}

/// `-tau M tau`: the structure seen through complex conjugation.
pub fn conjugate_matrix(m: &Mat4) -> Mat4 {
    let t = tau();
    -(t * m * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularity {
    Constant,
    Lipschitz,
    C1Alpha,
}

/// `z -> J(z)`, a 4x4 real matrix with `J^2 = -Id`.
pub trait StructureField: Send + Sync {
    fn eval(&self, z: &Point) -> Mat4;

    fn regularity(&self) -> Regularity {
        Regularity::Lipschitz
    }

    /// Known Lipschitz constant, if any.
    fn lipschitz(&self) -> Option<f64> {
        None
    }
}

impl<F: StructureField + ?Sized> StructureField for &F {
    fn eval(&self, z: &Point) -> Mat4 {
        (**self).eval(z)
    }
    fn regularity(&self) -> Regularity {
        (**self).regularity()
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
}

impl<F: StructureField + ?Sized> StructureField for Box<F> {
    fn eval(&self, z: &Point) -> Mat4 {
        (**self).eval(z)
    }
    fn regularity(&self) -> Regularity {
        (**self).regularity()
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
}

impl<F: StructureField + ?Sized> StructureField for Arc<F> {
    fn eval(&self, z: &Point) -> Mat4 {
        (**self).eval(z)
    }
    fn regularity(&self) -> Regularity {
        (**self).regularity()
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
}

/// `zeta -> J_u(zeta)` on the parameter disk, e.g. a structure pulled back along a map.
pub trait BundleStructure: Send + Sync {
    fn eval(&self, zeta: Complex64) -> Mat4;
}

impl<B: BundleStructure + ?Sized> BundleStructure for &B {
    fn eval(&self, zeta: Complex64) -> Mat4 {
        (**self).eval(zeta)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Standard;

impl StructureField for Standard {
    fn eval(&self, _z: &Point) -> Mat4 {
        j_st()
    }
    fn regularity(&self) -> Regularity {
        Regularity::Constant
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
}

impl BundleStructure for Standard {
    fn eval(&self, _zeta: Complex64) -> Mat4 {
        j_st()
    }
}

/// `J_st` plus a nilpotent lower-left block; any block `[[a, b], [b, -a]]`
/// anticommutes with the standard block, so the sum squares to `-Id` exactly.
pub fn eta_matrix(a: f64, b: f64) -> Mat4 {
    let mut m = j_st();
    m[(2, 0)] = a;
    m[(2, 1)] = b;
    m[(3, 0)] = b;
    m[(3, 1)] = -a;
    m
}

/// The real-analytic example `J(xi + i eta)` with `eta` entries in the lower
/// rows, as a structure on the trivial bundle over the upper half-disk.
/// Evaluated below the edge it simply continues analytically.
#[derive(Clone, Copy, Debug)]
pub struct EtaBundle {
    pub scale: f64,
}

impl BundleStructure for EtaBundle {
    fn eval(&self, zeta: Complex64) -> Mat4 {
        eta_matrix(0.0, self.scale * zeta.im)
    }
}

/// Ambient version of the same example: `J(z) = J_st + s y1 E`. It is
/// rectified, with Lipschitz constant exactly `s`.
#[derive(Clone, Copy, Debug)]
pub struct EtaExample {
    pub scale: f64,
}

impl StructureField for EtaExample {
    fn eval(&self, z: &Point) -> Mat4 {
        eta_matrix(0.0, self.scale * z[1])
    }
    fn regularity(&self) -> Regularity {
        Regularity::C1Alpha
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(self.scale.abs())
    }
}

/// `J = K(W(z))` with `W(z) = sum_k z_k A_k`, each `A_k` anti-linear.
/// Rectified when the `x`-coefficients `A_0`, `A_2` vanish.
#[derive(Clone, Debug)]
pub struct LinearCayleyField {
    pub coefficients: [Mat4; 4],
}

impl LinearCayleyField {
    /// Projects the coefficients onto their anti-linear parts.
    pub fn new(coefficients: [Mat4; 4]) -> Self {
        Self {
            coefficients: coefficients.map(|a| anti_linear_part(&a)),
        }
    }

    pub fn w(&self, z: &Point) -> Mat4 {
        let mut w = Mat4::zeros();
        for k in 0..4 {
            w += self.coefficients[k] * z[k];
        }
        w
    }

    /// Bound on `|W(z)|` over the unit ball, from Frobenius norms.
    pub fn w_bound(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|a| a.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

impl StructureField for LinearCayleyField {
    fn eval(&self, z: &Point) -> Mat4 {
        let w = self.w(z);
        cayley_k_unchecked(&w).unwrap_or_else(|_| j_st())
    }
}

/// `W(z) v = s (y1 + y2) (conj v2, conj v2) / 2`. `W` vanishes on the first
/// complex axis, so `(zeta, 0)` is holomorphic at every scale, while
/// perturbations in the second component feel the structure.
pub fn coupled_example(scale: f64) -> LinearCayleyField {
    let a = Mat4::new(
        0.0, 0.0, 0.5, 0.0, //
        0.0, 0.0, 0.0, -0.5, //
        0.0, 0.0, 0.5, 0.0, //
        0.0, 0.0, 0.0, -0.5,
    ) * scale;
    LinearCayleyField::new([Mat4::zeros(), a, Mat4::zeros(), a])
}

/// Nearest-sample lookup in a table of structures.
#[derive(Clone, Debug)]
pub struct SampledField {
    points: Vec<Point>,
    matrices: Vec<Mat4>,
}

impl SampledField {
    pub fn new(points: Vec<Point>, matrices: Vec<Mat4>) -> Result<Self> {
        if points.len() != matrices.len() {
            return Err(Error::DimensionMismatch {
                left: points.len(),
                right: matrices.len(),
            });
        }
        if points.is_empty() {
            return Err(Error::InvalidConfig(
                "sampled structure needs at least one point",
            ));
        }
        for m in &matrices {
            let err = square_defect(m);
            if err > STRUCTURE_TOL * (1.0 + m.norm_squared()) {
                return Err(Error::NotContraction(
                    "sampled matrix does not square to -Id",
                ));
            }
        }
        Ok(Self { points, matrices })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn matrices(&self) -> &[Mat4] {
        &self.matrices
    }
}

impl StructureField for SampledField {
    fn eval(&self, z: &Point) -> Mat4 {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (p - z).norm_squared();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        self.matrices[best]
    }
}

/// `|J^2 + Id|` in the max norm.
pub fn square_defect(j: &Mat4) -> f64 {
    (j * j + Mat4::identity()).amax()
}

/// Part of `a` anticommuting with `J_st`.
pub fn anti_linear_part(a: &Mat4) -> Mat4 {
    let j = j_st();
    (a + j * a * j) * 0.5
}

fn one_norm(m: &Mat4) -> f64 {
    (0..4)
        .map(|c| m.column(c).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse by LU with partial pivoting; `None` when the 1-norm condition
/// number exceeds [`MAX_CONDITION`].
fn guarded_inverse(m: &Mat4) -> Option<(Mat4, f64)> {
    let inv = m.lu().try_inverse()?;
    let cond = one_norm(m) * one_norm(&inv);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return None;
    }
    Some((inv, cond))
}

/// `W` with `W J_st = -J_st W` and `Id - W^t W` positive definite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AntiLinearContraction {
    matrix: Mat4,
}

impl AntiLinearContraction {
    pub fn new(matrix: Mat4) -> Result<Self> {
        let j = j_st();
        let scale = 1.0 + matrix.amax();
        if (matrix * j + j * matrix).amax() > STRUCTURE_TOL * scale {
            return Err(Error::NotContraction("W does not anticommute with J_st"));
        }
        let gram = Mat4::identity() - matrix.transpose() * matrix;
        if gram.cholesky().is_none() {
            return Err(Error::NotContraction("Id - W^t W is not positive definite"));
        }
        Ok(Self { matrix })
    }

    pub fn zero() -> Self {
        Self {
            matrix: Mat4::zeros(),
        }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    /// Operator 2-norm.
    pub fn norm(&self) -> f64 {
        self.matrix.singular_values().max()
    }
}

/// `W = -(J - J_st)(J + J_st)^(-1)`.
pub fn cayley_l(j: &Mat4) -> Result<AntiLinearContraction> {
    let w = cayley_l_unchecked(j)?;
    AntiLinearContraction::new(w)
}

fn cayley_l_unchecked(j: &Mat4) -> Result<Mat4> {
    let js = j_st();
    let sum = j + js;
    let (inv, _) = guarded_inverse(&sum).ok_or_else(|| {
        let cond = sum
            .lu()
            .try_inverse()
            .map(|i| one_norm(&sum) * one_norm(&i));
        Error::Untamed(cond.unwrap_or(f64::INFINITY))
    })?;
    Ok(-(j - js) * inv)
}

/// `J = J_st (Id + W)(Id - W)^(-1)`.
pub fn cayley_k(w: &AntiLinearContraction) -> Result<Mat4> {
    cayley_k_unchecked(&w.matrix)
}

fn cayley_k_unchecked(w: &Mat4) -> Result<Mat4> {
    let id = Mat4::identity();
    let (inv, _) = guarded_inverse(&(id - w)).ok_or(Error::SingularCayley)?;
    Ok(j_st() * (id + w) * inv)
}

/// `J^-(z) = -tau J(conj z) tau`.
#[derive(Clone, Debug)]
pub struct MinusStructure<F> {
    inner: F,
}

pub fn minus_structure<F: StructureField>(j: F) -> MinusStructure<F> {
    MinusStructure { inner: j }
}

impl<F> MinusStructure<F> {
    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn into_inner(self) -> F {
        self.inner
    }
}

impl<F: StructureField> StructureField for MinusStructure<F> {
    fn eval(&self, z: &Point) -> Mat4 {
        conjugate_matrix(&self.inner.eval(&conj_point(z)))
    }
    fn regularity(&self) -> Regularity {
        self.inner.regularity()
    }
    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz()
    }
}

/// Extension by reflection of a structure given on the closed upper half-disk:
/// `J~(zeta) = -tau J(conj zeta) tau` for `Im zeta < 0`.
#[derive(Clone, Debug)]
pub struct Reflected<B> {
    inner: B,
}

/// Number of edge samples used to check `J_u = J_st` on the edge.
pub const EDGE_SAMPLES: usize = 257;

pub fn reflect_structure<B: BundleStructure>(j_u: B) -> Result<Reflected<B>> {
    let js = j_st();
    let mut worst: f64 = 0.0;
    for k in 0..EDGE_SAMPLES {
        let xi = -1.0 + 2.0 * k as f64 / (EDGE_SAMPLES - 1) as f64;
        worst = worst.max((j_u.eval(Complex64::new(xi, 0.0)) - js).amax());
    }
    if worst > STRUCTURE_TOL {
        return Err(Error::NotStandardOnEdge(worst));
    }
    Ok(Reflected { inner: j_u })
}

impl<B> Reflected<B> {
    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: BundleStructure> BundleStructure for Reflected<B> {
    fn eval(&self, zeta: Complex64) -> Mat4 {
        if zeta.im >= 0.0 {
            self.inner.eval(zeta)
        } else {
            conjugate_matrix(&self.inner.eval(zeta.conj()))
        }
    }
}

/// `zeta -> J(u(zeta))`.
pub struct Pullback<F, M> {
    field: F,
    map: M,
}

impl<F, M> Pullback<F, M>
where
    F: StructureField,
    M: Fn(Complex64) -> Point + Send + Sync,
{
    pub fn new(field: F, map: M) -> Self {
        Self { field, map }
    }
}

impl<F, M> BundleStructure for Pullback<F, M>
where
    F: StructureField,
    M: Fn(Complex64) -> Point + Send + Sync,
{
    fn eval(&self, zeta: Complex64) -> Mat4 {
        self.field.eval(&(self.map)(zeta))
    }
}

/// Default cone constant.
pub const DEFAULT_CONE: f64 = 1.0;

/// Blend weight: 1 on `y1 > C |y2|`, 0 on `-y1 > C |y2|`, smoothstep in
/// between, constant along rays; `1/2` on the plane `y = 0`.
pub fn cone_cutoff(z: &Point, cone: f64) -> f64 {
    let (y1, y2) = (z[1], z[3]);
    let r = (y1 * y1 + cone * cone * y2 * y2).sqrt();
    if r == 0.0 {
        return 0.5;
    }
    let phi = y1 / r;
    let t = ((phi + core::f64::consts::FRAC_1_SQRT_2) * core::f64::consts::FRAC_1_SQRT_2)
        .clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// `J_v = K(chi W+ + (1 - chi) W-)` with `W+- = L(J+-)`: equal to `J` on the
/// cone `C+`, to `J^-` on `C-`, and invariant under conjugation.
#[derive(Clone, Debug)]
pub struct ConeBlend<F> {
    plus: F,
    cone: f64,
}

pub fn blend_cones<F: StructureField>(j: F, cone: f64) -> Result<ConeBlend<F>> {
    if !(cone > 0.0) || !cone.is_finite() {
        return Err(Error::InvalidConfig("cone constant must be positive"));
    }
    Ok(ConeBlend { plus: j, cone })
}

impl<F: StructureField> ConeBlend<F> {
    pub fn cone(&self) -> f64 {
        self.cone
    }

    pub fn inner(&self) -> &F {
        &self.plus
    }

    pub fn try_eval(&self, z: &Point) -> Result<Mat4> {
        let chi = cone_cutoff(z, self.cone);
        let jp = self.plus.eval(z);
        let jm = conjugate_matrix(&self.plus.eval(&conj_point(z)));
        if chi == 1.0 {
            return Ok(jp);
        }
        if chi == 0.0 {
            return Ok(jm);
        }
        let wp = cayley_l(&jp)?;
        let wm = cayley_l(&jm)?;
        let w = wp.matrix * chi + wm.matrix * (1.0 - chi);
        cayley_k_unchecked(&w)
    }
}

impl<F: StructureField> StructureField for ConeBlend<F> {
    fn eval(&self, z: &Point) -> Mat4 {
        self.try_eval(z).unwrap_or_else(|_| j_st())
    }
    fn regularity(&self) -> Regularity {
        Regularity::Lipschitz
    }
}

/// Largest difference quotient `|J(p) - J(q)| / |p - q|` (max norm over
/// entries) between neighbours of a cubic grid with `n` points per side on
/// `[-radius, radius]^4`.
pub fn lipschitz_estimate<F: StructureField + ?Sized>(field: &F, radius: f64, n: usize) -> f64 {
    let n = n.max(2);
    let h = 2.0 * radius / (n - 1) as f64;
    let coord = |i: usize| -radius + h * i as f64;
    let mut worst: f64 = 0.0;
    let mut idx = [0usize; 4];
    loop {
        let p = Point::new(coord(idx[0]), coord(idx[1]), coord(idx[2]), coord(idx[3]));
        let jp = field.eval(&p);
        for axis in 0..4 {
            if idx[axis] + 1 < n {
                let mut q = p;
                q[axis] += h;
                worst = worst.max((field.eval(&q) - jp).amax() / h);
            }
        }
        let mut a = 0;
        loop {
            idx[a] += 1;
            if idx[a] < n {
                break;
            }
            idx[a] = 0;
            a += 1;
            if a == 4 {
                return worst;
            }
        }
    }
}

/// Largest entry of `J(z) - J_st` over the given points.
pub fn max_deviation<F: StructureField + ?Sized>(field: &F, points: &[Point]) -> f64 {
    let js = j_st();
    points
        .iter()
        .map(|p| (field.eval(p) - js).amax())
        .fold(0.0, f64::max)
}
